"""Shared builders: toy configurations, synthetic batches, and FD helpers."""

import numpy as np
import torch

from icco.config import ScenarioConfig, TrainConfig
from icco.models import Models
from icco.replay import TrainBatch

torch.set_num_threads(1)


def toy_config(variant="ICCO", **overrides) -> TrainConfig:
    """Small instance: 2 agents, latent 2, lookahead window 3, short episodes."""
    base = dict(
        variant=variant,
        seed=0,
        episodes=4,
        n_waypoints=2,
        refresh_interval=2,
        sigma_walk=0.1,
        latent_dim=2,
        rnn_hidden=8,
        mixer_embed=4,
        hypernet_embed=8,
        coord_hidden=8,
        posterior_hidden=8,
        future_window=3,
        batch_size=2,
        scenario=ScenarioConfig(n_agents=2, n_resources=1, episode_steps=6),
    )
    base.update(overrides)
    return TrainConfig(**base)


def toy_models(cfg: TrainConfig, seed=0, dtype=torch.float64) -> Models:
    torch.manual_seed(seed)
    return Models(cfg, dtype=dtype)


def toy_batch(cfg: TrainConfig, batch=2, seed=0, dtype=torch.float64, zero_noise=False) -> TrainBatch:
    """Synthetic episodes with the right shapes; contents are random."""
    rng = np.random.default_rng(seed)
    sc = cfg.scenario
    n, L = sc.n_agents, sc.episode_steps
    obs_dim = sc.obs_dim
    state_dim = sc.state_dim(cfg.n_waypoints)
    n_blocks = (L + cfg.refresh_interval - 1) // cfg.refresh_interval
    latent = n * cfg.latent_dim

    def t(x):
        return torch.tensor(x, dtype=dtype)

    noise = np.zeros((batch, n_blocks, latent)) if zero_noise else rng.standard_normal((batch, n_blocks, latent))
    return TrainBatch(
        obs=t(0.5 * rng.standard_normal((batch, L + 1, n, obs_dim))),
        state=t(0.5 * rng.standard_normal((batch, L + 1, state_dim))),
        actions=torch.tensor(rng.integers(0, 5, size=(batch, L, n))),
        rewards=t(rng.standard_normal((batch, L))),
        instr=t(0.5 * rng.standard_normal((batch, L + 1, n, cfg.n_waypoints, 2))),
        noise=t(noise),
    )


def fd_param_grads(loss_fn, named_params, h=1e-6, max_entries=None):
    """Central finite differences of loss_fn() w.r.t. each named parameter.

    Returns {name: grad tensor}; with max_entries set, only a deterministic
    stride subsample per tensor is probed (others left NaN and skipped by
    compare_grads).
    """
    out = {}
    with torch.no_grad():
        for name, p in named_params:
            flat = p.data.view(-1)
            grad = torch.full_like(flat, float("nan"))
            idx = range(flat.numel())
            if max_entries is not None and flat.numel() > max_entries:
                stride = flat.numel() // max_entries + 1
                idx = range(0, flat.numel(), stride)
            for i in idx:
                orig = flat[i].item()
                flat[i] = orig + h
                hi = loss_fn()
                flat[i] = orig - h
                lo = loss_fn()
                flat[i] = orig
                grad[i] = (hi - lo) / (2 * h)
            out[name] = grad.view_as(p)
    return out


def compare_grads(analytic: dict, fd: dict, rel=1e-4):
    """Normwise relative error per tensor over the probed entries."""
    worst = 0.0
    for name, fd_g in fd.items():
        mask = ~torch.isnan(fd_g)
        a = analytic[name][mask]
        f = fd_g[mask]
        num = (a - f).norm().item()
        den = max(a.norm().item(), f.norm().item(), 1e-10)
        err = num / den if den > 0 else 0.0
        assert err < rel, f"{name}: gradient rel err {err:.3e} >= {rel}"
        worst = max(worst, err)
    return worst


def analytic_param_grads(loss: torch.Tensor, named_params):
    names, params = zip(*named_params)
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return {
        name: (g if g is not None else torch.zeros_like(p))
        for name, p, g in zip(names, params, grads)
    }
