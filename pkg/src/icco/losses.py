"""Training objectives: the temporal-difference value loss and the
consistency term tying coordination latents to future team trajectories."""

from __future__ import annotations

import torch

from .config import TrainConfig
from .gaussian import gaussian_entropy, gaussian_log_prob, gaussian_product_params
from .models import Dims, Models
from .nets import VAR_FLOOR, one_hot
from .replay import TrainBatch


class DegenerateVariance(RuntimeError):
    """A posterior or coordinator variance fell below the configured floor."""


def block_index(n_steps_inclusive: int, refresh: int, n_blocks: int) -> torch.Tensor:
    """Map step index 0..L to the refresh block whose latent/instruction it uses."""
    idx = torch.arange(n_steps_inclusive) // refresh
    return idx.clamp(max=n_blocks - 1)


def compute_block_latents(
    coordinator, batch: TrainBatch, refresh: int, sample: bool = True
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Recompute per-step latents from stored refresh-time states and noise.

    Returns (z, mean, var), each (B, L+1, latent_total), constant within each
    refresh block. With sample=False the stored noise is ignored (z = mean).
    """
    L = batch.actions.shape[1]
    n_blocks = batch.noise.shape[1]
    refresh_steps = torch.arange(0, L, refresh)
    if refresh_steps.shape[0] != n_blocks:
        raise ValueError(
            f"stored noise has {n_blocks} blocks but refresh={refresh} implies {refresh_steps.shape[0]}"
        )
    s_r = batch.state[:, refresh_steps]
    v_r = batch.instr[:, refresh_steps].flatten(start_dim=2)
    mean, var = coordinator(s_r, v_r)
    z = mean + torch.sqrt(var) * batch.noise if sample else mean
    blocks = block_index(L + 1, refresh, n_blocks)
    return z[:, blocks], mean[:, blocks], var[:, blocks]


def build_agent_inputs(batch: TrainBatch, models: Models, z_steps: torch.Tensor | None) -> torch.Tensor:
    """Assemble (B * n_agents, L+1, input_dim) sequences for the utility net.

    Per step and agent: observation, previous-action one-hot (zero at step 0),
    agent id one-hot, then the variant's conditioning block.
    """
    dims = models.dims
    variant = models.variant
    B, Lp1, n, _ = batch.obs.shape
    dtype = batch.obs.dtype

    act_oh = one_hot(batch.actions, dims.n_actions, dtype)  # (B, L, n, A)
    prev_act = torch.cat([torch.zeros(B, 1, n, dims.n_actions, dtype=dtype), act_oh], dim=1)
    agent_id = torch.eye(n, dtype=dtype).view(1, 1, n, n).expand(B, Lp1, n, n)

    if variant.use_coordinator:
        if z_steps is None:
            raise ValueError("coordinator variant requires latents")
        cond = z_steps.view(B, Lp1, n, dims.latent_dim)
    elif variant.agent_input_scope == "global":
        cond = batch.state.unsqueeze(2).expand(B, Lp1, n, dims.state_dim)
    else:
        cond = batch.instr.flatten(start_dim=3)  # own waypoints, (B, L+1, n, K*2)

    x = torch.cat([batch.obs, prev_act, agent_id, cond], dim=-1)
    return x.permute(0, 2, 1, 3).reshape(B * n, Lp1, -1)


def _mixer_cond(batch: TrainBatch, models: Models, z_steps: torch.Tensor | None) -> torch.Tensor:
    if models.variant.use_coordinator:
        return torch.cat([batch.state, z_steps], dim=-1)
    return batch.state


def _run_agent(models: Models, x: torch.Tensor, B: int, n: int) -> torch.Tensor:
    q, _ = models.agent(x, models.agent.init_hidden(B * n))
    Lp1 = x.shape[1]
    return q.view(B, n, Lp1, -1).permute(0, 2, 1, 3)  # (B, L+1, n, A)


def rl_loss(
    batch: TrainBatch, models: Models, targets: Models, cfg: TrainConfig
) -> tuple[torch.Tensor, dict]:
    """Squared Bellman residual of the mixed joint value.

    The bootstrap target runs per-agent argmax through the frozen target
    utility net and target mixer; coordinator variants condition both sides
    on latents recomputed from the stored refresh noise (target side via the
    frozen target coordinator, detached).
    """
    B, L, n = batch.actions.shape
    z_online = z_target = None
    if models.variant.use_coordinator:
        z_online, _, _ = compute_block_latents(models.coordinator, batch, cfg.refresh_interval)
        with torch.no_grad():
            z_target, _, _ = compute_block_latents(targets.coordinator, batch, cfg.refresh_interval)

    q_all = _run_agent(models, build_agent_inputs(batch, models, z_online), B, n)
    chosen = q_all[:, :L].gather(-1, batch.actions.unsqueeze(-1)).squeeze(-1)  # (B, L, n)
    q_tot = models.mixer(chosen, _mixer_cond(batch, models, z_online)[:, :L])

    with torch.no_grad():
        # double estimator: argmax per agent from the online net, evaluated by
        # the frozen target net; plain max-bootstrap spirals into
        # overestimation on this reward landscape
        best_next = q_all[:, 1:].argmax(dim=-1, keepdim=True).detach()
        tq_all = _run_agent(targets, build_agent_inputs(batch, targets, z_target), B, n)
        tgt_max = tq_all[:, 1:].gather(-1, best_next).squeeze(-1)  # (B, L, n)
        tgt_tot = targets.mixer(tgt_max, _mixer_cond(batch, targets, z_target)[:, 1:])
        not_done = torch.ones_like(tgt_tot)
        not_done[:, L - 1] = 0.0  # fixed-horizon terminal: no bootstrap
        y = batch.rewards + cfg.gamma * not_done * tgt_tot

    td = q_tot - y
    loss = (td**2).mean()
    info = {"td_abs": float(td.abs().mean().detach()), "q_tot": float(q_tot.mean().detach())}
    return loss, info


def ce_loss(
    batch: TrainBatch, coordinator, posterior, cfg: TrainConfig, dims: Dims
) -> tuple[torch.Tensor, dict]:
    """Consistency term: -E[log q(z_t | future window, s_t, v_t)] - H(z_t | s_t, v_t).

    q is the normalized product of one state factor at the anchor step and a
    shared step factor over steps t+1 .. t+T-1 of the same episode; windows
    hitting the episode end simply drop the missing factors. The entropy uses
    the coordinator's closed form, so minimizing the loss sharpens the
    posterior around the sampled latent while keeping the latent stochastic.
    """
    B, L, n = batch.actions.shape
    T = cfg.future_window
    z_steps, _, var_steps = compute_block_latents(coordinator, batch, cfg.refresh_interval)
    z_t = z_steps[:, :L]
    entropy = gaussian_entropy(var_steps[:, :L])  # (B, L)

    act_flat = one_hot(batch.actions, dims.n_actions, batch.obs.dtype).flatten(start_dim=2)  # (B,L,n*A)
    instr_flat = batch.instr.flatten(start_dim=2)[:, :L]
    obs_flat = batch.obs.flatten(start_dim=2)[:, :L]

    m0, v0 = posterior.state_factor(batch.state[:, :L], act_flat, instr_flat)
    ms, vs = posterior.step_factor(obs_flat, act_flat, instr_flat)
    for v in (v0, vs, var_steps):
        if torch.any(v < VAR_FLOOR * (1.0 - 1e-9)):
            raise DegenerateVariance("variance fell below the configured floor")

    Z = m0.shape[-1]
    means = [m0]
    variances = [v0]
    masks = [torch.ones(1, L, 1, dtype=batch.obs.dtype)]
    steps = torch.arange(L)
    for j in range(1, T):
        pad_m = torch.zeros(B, j, Z, dtype=batch.obs.dtype)
        pad_v = torch.ones(B, j, Z, dtype=batch.obs.dtype)
        means.append(torch.cat([ms[:, j:], pad_m], dim=1))
        variances.append(torch.cat([vs[:, j:], pad_v], dim=1))
        masks.append((steps <= L - 1 - j).to(batch.obs.dtype).view(1, L, 1))

    mean_q, var_q = gaussian_product_params(
        torch.stack(means), torch.stack(variances), torch.stack(masks)
    )
    log_q = gaussian_log_prob(mean_q, var_q, z_t)  # (B, L)
    loss = (-log_q - entropy).mean()
    info = {"log_q": float(log_q.mean().detach()), "entropy": float(entropy.mean().detach())}
    return loss, info
