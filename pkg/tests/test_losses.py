"""Training objectives: finite-difference gradient checks and value oracles."""

import math

import numpy as np
import pytest
import torch

from conftest import (
    analytic_param_grads,
    compare_grads,
    fd_param_grads,
    toy_batch,
    toy_config,
    toy_models,
)
from icco.gaussian import gaussian_entropy
from icco.losses import DegenerateVariance, ce_loss, compute_block_latents, rl_loss
from icco.models import make_dims


def all_named_params(models):
    return list(models.named_parameters())


# -- gradient correctness vs central finite differences ------------------------


@pytest.mark.parametrize("variant", ["QMIX", "QMIX_FULL", "ICCO"])
def test_rl_loss_gradients_match_finite_differences(variant):
    cfg = toy_config(variant)
    models = toy_models(cfg, seed=1)
    targets = toy_models(cfg, seed=2)
    batch = toy_batch(cfg, seed=3)

    loss, _ = rl_loss(batch, models, targets, cfg)
    params = all_named_params(models)
    analytic = analytic_param_grads(loss, params)

    def value():
        return rl_loss(batch, models, targets, cfg)[0].item()

    fd = fd_param_grads(value, params, max_entries=120)
    compare_grads(analytic, fd, rel=1e-4)


def test_ce_loss_gradients_match_finite_differences():
    cfg = toy_config("ICCO")
    models = toy_models(cfg, seed=4)
    batch = toy_batch(cfg, seed=5)
    dims = models.dims

    loss, _ = ce_loss(batch, models.coordinator, models.posterior, cfg, dims)
    params = all_named_params(models)
    analytic = analytic_param_grads(loss, params)

    def value():
        return ce_loss(batch, models.coordinator, models.posterior, cfg, dims)[0].item()

    fd = fd_param_grads(value, params, max_entries=120)
    compare_grads(analytic, fd, rel=1e-4)


def test_total_objective_gradient_is_sum_of_component_gradients():
    cfg = toy_config("ICCO")
    models = toy_models(cfg, seed=6)
    targets = toy_models(cfg, seed=7)
    batch = toy_batch(cfg, seed=8)
    params = all_named_params(models)

    g_rl = analytic_param_grads(rl_loss(batch, models, targets, cfg)[0], params)
    g_ce = analytic_param_grads(
        ce_loss(batch, models.coordinator, models.posterior, cfg, models.dims)[0], params
    )
    total = rl_loss(batch, models, targets, cfg)[0] + ce_loss(
        batch, models.coordinator, models.posterior, cfg, models.dims
    )[0]
    g_total = analytic_param_grads(total, params)
    for name in g_total:
        assert torch.allclose(g_total[name], g_rl[name] + g_ce[name], atol=1e-12)


def test_rl_loss_gradients_reach_coordinator():
    cfg = toy_config("ICCO")
    models = toy_models(cfg, seed=9)
    targets = toy_models(cfg, seed=10)
    batch = toy_batch(cfg, seed=11)
    loss, _ = rl_loss(batch, models, targets, cfg)
    grads = analytic_param_grads(loss, list(models.coordinator.named_parameters()))
    assert any(g.abs().sum() > 0 for g in grads.values())


# -- exact value cases via stub networks ---------------------------------------


class StubAgent:
    """Constant utilities per action, any input."""

    def __init__(self, values):
        self.values = torch.tensor(values, dtype=torch.float64)

    def init_hidden(self, batch):
        return torch.zeros(1, batch, 1, dtype=torch.float64)

    def __call__(self, x, hidden):
        B, L = x.shape[0], x.shape[1]
        q = self.values.view(1, 1, -1).expand(B, L, -1).clone()
        return q, hidden


class StubMixer:
    def __call__(self, utilities, cond):
        return utilities.sum(dim=-1)


class StubModels:
    def __init__(self, cfg, agent_values):
        self.cfg = cfg
        self.variant = cfg.variant_config
        self.dims = make_dims(cfg)
        self.agent = StubAgent(agent_values)
        self.mixer = StubMixer()
        self.coordinator = None
        self.posterior = None


def two_step_batch(cfg, rewards):
    sc = cfg.scenario
    n, L = sc.n_agents, sc.episode_steps
    return type(toy_batch(cfg))(
        obs=torch.zeros(1, L + 1, n, sc.obs_dim, dtype=torch.float64),
        state=torch.zeros(1, L + 1, sc.state_dim(cfg.n_waypoints), dtype=torch.float64),
        actions=torch.zeros(1, L, n, dtype=torch.int64),
        rewards=torch.tensor([rewards], dtype=torch.float64),
        instr=torch.zeros(1, L + 1, n, cfg.n_waypoints, 2, dtype=torch.float64),
        noise=torch.zeros(1, (L + cfg.refresh_interval - 1) // cfg.refresh_interval, n * cfg.latent_dim),
    )


def test_zero_residual_gives_zero_loss():
    # online Q_tot = 1.49 + 1.49 = 2.98; target max Q_tot = 2.0;
    # y_0 = 1 + 0.99 * 2 = 2.98, terminal y_1 = 2.98: loss is exactly 0
    from icco.config import ScenarioConfig

    cfg = toy_config("QMIX", gamma=0.99, scenario=ScenarioConfig(n_agents=2, n_resources=1, episode_steps=2))
    online = StubModels(cfg, agent_values=[1.49, 0.0, 0.0, 0.0, 0.0])
    target = StubModels(cfg, agent_values=[0.7, 1.0, 0.3, 0.0, 0.0])
    batch = two_step_batch(cfg, rewards=[1.0, 2.98])
    loss, _ = rl_loss(batch, online, target, cfg)
    assert loss.item() == 0.0


def test_gamma_zero_reduces_target_to_reward():
    from icco.config import ScenarioConfig

    cfg = toy_config("QMIX", gamma=0.0, scenario=ScenarioConfig(n_agents=2, n_resources=1, episode_steps=2))
    online = StubModels(cfg, agent_values=[1.49, 0.0, 0.0, 0.0, 0.0])
    target = StubModels(cfg, agent_values=[5.0, 9.0, 1.0, 0.0, 0.0])  # would change y if gamma > 0
    batch = two_step_batch(cfg, rewards=[1.0, 3.0])
    loss, _ = rl_loss(batch, online, target, cfg)
    expected = ((2.98 - 1.0) ** 2 + (2.98 - 3.0) ** 2) / 2
    assert loss.item() == pytest.approx(expected, rel=1e-15)


# -- consistency-term value oracles ---------------------------------------------


@torch.no_grad()
def naive_ce_loss(batch, coordinator, posterior, cfg, dims):
    """Loop-based reimplementation: explicit factor products per anchor step."""
    B, L, n = batch.actions.shape
    T = cfg.future_window
    z_steps, _, var_steps = compute_block_latents(coordinator, batch, cfg.refresh_interval)
    total = 0.0
    for b in range(B):
        for t in range(L):
            a_oh = torch.zeros(n, dims.n_actions, dtype=torch.float64)
            a_oh[torch.arange(n), batch.actions[b, t]] = 1.0
            v_t = batch.instr[b, t].reshape(1, -1)
            m, v = posterior.state_factor(batch.state[b, t : t + 1], a_oh.reshape(1, -1), v_t)
            precisions = [1.0 / v]
            weighted = [m / v]
            for k in range(t + 1, min(t + T, L)):
                a_k = torch.zeros(n, dims.n_actions, dtype=torch.float64)
                a_k[torch.arange(n), batch.actions[b, k]] = 1.0
                mk, vk = posterior.step_factor(
                    batch.obs[b, k].reshape(1, -1), a_k.reshape(1, -1), batch.instr[b, k].reshape(1, -1)
                )
                precisions.append(1.0 / vk)
                weighted.append(mk / vk)
            prec = sum(precisions)
            var_q = 1.0 / prec
            mean_q = var_q * sum(weighted)
            z = z_steps[b, t]
            log_q = float(
                (-0.5 * (math.log(2 * math.pi) + torch.log(var_q) + (z - mean_q) ** 2 / var_q)).sum()
            )
            entropy = float(gaussian_entropy(var_steps[b, t]))
            total += -log_q - entropy
    return total / (B * L)


@pytest.mark.parametrize("latent_dim", [1, 2])
def test_ce_loss_matches_naive_product_implementation(latent_dim):
    cfg = toy_config("ICCO", latent_dim=latent_dim)
    models = toy_models(cfg, seed=12)
    batch = toy_batch(cfg, seed=13)
    loss, _ = ce_loss(batch, models.coordinator, models.posterior, cfg, models.dims)
    naive = naive_ce_loss(batch, models.coordinator, models.posterior, cfg, models.dims)
    assert loss.item() == pytest.approx(naive, abs=1e-10)


class StubCoordinator:
    """Fixed Gaussian, ignoring inputs."""

    def __init__(self, mean, var):
        self.mean_value = mean
        self.var_value = var

    def __call__(self, state, instr):
        lead = state.shape[:-1]
        m = self.mean_value.expand(*lead, -1).to(torch.float64)
        v = self.var_value.expand(*lead, -1).to(torch.float64)
        return m, v


class EchoPosterior:
    """State factor echoes a fixed Gaussian; step factors never used (T=1)."""

    def __init__(self, mean, var):
        self.mean_value = mean
        self.var_value = var

    def state_factor(self, state, act, instr):
        lead = state.shape[:-1]
        return (
            self.mean_value.expand(*lead, -1).to(torch.float64),
            self.var_value.expand(*lead, -1).to(torch.float64),
        )

    def step_factor(self, obs, act, instr):
        lead = obs.shape[:-1]
        d = self.mean_value.shape[-1]
        return (
            torch.zeros(*lead, d, dtype=torch.float64),
            torch.ones(*lead, d, dtype=torch.float64),
        )


def test_ce_loss_analytic_substitution():
    # posterior identical to the coordinator distribution, z = mean, T = 1:
    # loss = -log q(mean) - H, both in closed form
    cfg = toy_config("ICCO", future_window=1)
    dims = make_dims(cfg)
    d = dims.latent_total
    mean = torch.linspace(-1.0, 1.0, d, dtype=torch.float64)
    var = torch.linspace(0.5, 2.0, d, dtype=torch.float64)
    batch = toy_batch(cfg, seed=14, zero_noise=True)
    coord = StubCoordinator(mean, var)
    post = EchoPosterior(mean, var)
    loss, _ = ce_loss(batch, coord, post, cfg, dims)
    log_q_at_mean = float(-0.5 * (math.log(2 * math.pi) + torch.log(var)).sum())
    entropy = 0.5 * d * (1 + math.log(2 * math.pi)) + 0.5 * float(torch.log(var).sum())
    assert loss.item() == pytest.approx(-log_q_at_mean - entropy, rel=1e-12)


def test_ce_loss_entropy_response_to_variance_scaling():
    # doubling the coordinator variance (fixed posterior, z pinned at the
    # mean) lowers the loss by exactly 0.5 * sum(delta log var)
    cfg = toy_config("ICCO", future_window=1)
    dims = make_dims(cfg)
    d = dims.latent_total
    mean = torch.zeros(d, dtype=torch.float64)
    var = torch.full((d,), 0.8, dtype=torch.float64)
    batch = toy_batch(cfg, seed=15, zero_noise=True)
    post = EchoPosterior(mean, var)
    loss1, _ = ce_loss(batch, StubCoordinator(mean, var), post, cfg, dims)
    loss2, _ = ce_loss(batch, StubCoordinator(mean, 2 * var), post, cfg, dims)
    assert loss1.item() - loss2.item() == pytest.approx(0.5 * d * math.log(2.0), rel=1e-12)


def test_ce_loss_flags_degenerate_variance():
    cfg = toy_config("ICCO", future_window=1)
    dims = make_dims(cfg)
    d = dims.latent_total
    mean = torch.zeros(d, dtype=torch.float64)
    bad_var = torch.full((d,), 1e-7, dtype=torch.float64)
    batch = toy_batch(cfg, seed=16, zero_noise=True)
    with pytest.raises(DegenerateVariance):
        ce_loss(batch, StubCoordinator(mean, bad_var), EchoPosterior(mean, bad_var), cfg, dims)


# -- latent recomputation --------------------------------------------------------


def test_block_latents_constant_within_refresh_blocks():
    cfg = toy_config("ICCO")
    models = toy_models(cfg, seed=17)
    batch = toy_batch(cfg, seed=18)
    z, mean, var = compute_block_latents(models.coordinator, batch, cfg.refresh_interval)
    L = batch.actions.shape[1]
    for t in range(L + 1):
        block_start = min(t // cfg.refresh_interval * cfg.refresh_interval, L - cfg.refresh_interval + 1)
        assert torch.equal(z[:, t], z[:, block_start])


def test_block_latents_zero_noise_equals_mean():
    cfg = toy_config("ICCO")
    models = toy_models(cfg, seed=19)
    batch = toy_batch(cfg, seed=20, zero_noise=True)
    z, mean, _ = compute_block_latents(models.coordinator, batch, cfg.refresh_interval)
    assert torch.equal(z, mean)
