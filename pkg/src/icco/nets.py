"""Trainable modules: recurrent per-agent utilities, the monotonic mixer,
the coordination encoder, and the trajectory posterior."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

VAR_FLOOR = 1e-4


class AgentQNet(nn.Module):
    """Recurrent utility network; one shared instance acts for every agent.

    Input per step: observation, previous action one-hot, agent id one-hot,
    and the variant's conditioning block (latent slice, own waypoints, or the
    global state). Output: one utility per discrete action.
    """

    def __init__(self, input_dim: int, hidden_dim: int, n_actions: int):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.fc_in = nn.Linear(input_dim, hidden_dim)
        self.gru = nn.GRU(hidden_dim, hidden_dim, batch_first=True)
        self.fc_out = nn.Linear(hidden_dim, n_actions)

    def init_hidden(self, batch: int, **kw) -> torch.Tensor:
        p = next(self.parameters())
        return torch.zeros(1, batch, self.hidden_dim, dtype=p.dtype, device=p.device, **kw)

    def forward(self, x: torch.Tensor, hidden: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """x: (batch, steps, input_dim); hidden: (1, batch, hidden_dim)."""
        # tanh keeps the sign of direction-valued inputs visible to single
        # units; with relu here, action rankings that are odd in the
        # conditioning components train an order of magnitude slower
        y = torch.tanh(self.fc_in(x))
        y, h_out = self.gru(y, hidden)
        return self.fc_out(y), h_out


class MonotonicMixer(nn.Module):
    """Combines per-agent utilities into a joint value, monotone in each utility.

    Hypernetworks map the conditioning vector to mixing weights whose absolute
    value is taken, so every partial derivative w.r.t. a utility input is
    nonnegative regardless of parameters.
    """

    def __init__(self, n_agents: int, cond_dim: int, embed_dim: int = 32, hypernet_embed: int = 64):
        super().__init__()
        self.n_agents = n_agents
        self.embed_dim = embed_dim
        self.hyper_w1 = nn.Sequential(
            nn.Linear(cond_dim, hypernet_embed),
            nn.ReLU(),
            nn.Linear(hypernet_embed, n_agents * embed_dim),
        )
        self.hyper_b1 = nn.Linear(cond_dim, embed_dim)
        self.hyper_w2 = nn.Sequential(
            nn.Linear(cond_dim, hypernet_embed),
            nn.ReLU(),
            nn.Linear(hypernet_embed, embed_dim),
        )
        self.value = nn.Sequential(
            nn.Linear(cond_dim, embed_dim),
            nn.ReLU(),
            nn.Linear(embed_dim, 1),
        )
        # Bias the generated mixing weights away from zero at initialization;
        # otherwise the state-value path absorbs the TD fit while the
        # near-zero weights starve the per-agent utilities of gradient.
        with torch.no_grad():
            self.hyper_w1[-1].bias.fill_(0.2)
            self.hyper_w2[-1].bias.fill_(0.2)

    def forward(self, utilities: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        """utilities: (..., n_agents); cond: (..., cond_dim) -> (...,)."""
        lead = utilities.shape[:-1]
        qs = utilities.reshape(-1, 1, self.n_agents)
        c = cond.reshape(-1, cond.shape[-1])
        w1 = torch.abs(self.hyper_w1(c)).view(-1, self.n_agents, self.embed_dim)
        b1 = self.hyper_b1(c).view(-1, 1, self.embed_dim)
        hidden = F.elu(torch.bmm(qs, w1) + b1)
        w2 = torch.abs(self.hyper_w2(c)).view(-1, self.embed_dim, 1)
        v = self.value(c).view(-1, 1, 1)
        out = torch.bmm(hidden, w2) + v
        return out.view(lead)


class GaussianHead(nn.Module):
    """Linear head producing (mean, variance) with softplus-floored variance.

    The variance branch starts biased low (softplus(-2) ~ 0.13) so freshly
    initialized latents are informative rather than noise-dominated.
    """

    def __init__(self, input_dim: int, out_dim: int, var_floor: float = VAR_FLOOR):
        super().__init__()
        self.mean = nn.Linear(input_dim, out_dim)
        self.raw_var = nn.Linear(input_dim, out_dim)
        nn.init.constant_(self.raw_var.bias, -2.0)
        self.var_floor = var_floor

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return self.mean(x), F.softplus(self.raw_var(x)) + self.var_floor


class CoordinatorNet(nn.Module):
    """Maps (global state, flattened waypoint instructions) to per-agent
    Gaussian latents; the concatenated latent vector has n_agents * latent_dim
    entries, reparameterization-sampled so gradients reach the encoder.

    An optional feature_fn(state, instr) prepends derived inputs (relative
    offsets) to the raw conditioning vector.
    """

    def __init__(
        self,
        state_dim: int,
        instr_dim: int,
        n_agents: int,
        latent_dim: int,
        hidden_dim: int = 64,
        var_floor: float = VAR_FLOOR,
        feature_fn=None,
    ):
        super().__init__()
        self.n_agents = n_agents
        self.latent_dim = latent_dim
        self.out_dim = n_agents * latent_dim
        self.feature_fn = feature_fn
        feat_dim = feature_fn.dim if feature_fn is not None else 0
        self.body = nn.Sequential(
            nn.Linear(state_dim + instr_dim + feat_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
        )
        self.head = GaussianHead(hidden_dim, self.out_dim, var_floor)
        # Seed the latent mean with the per-agent coordination summary: the
        # head starts as a small residual on top of that passthrough, so
        # freshly initialized latents already carry usable geometry and TD
        # can shape them from there.
        self.use_core_skip = feature_fn is not None and hasattr(feature_fn, "core")
        if self.use_core_skip:
            with torch.no_grad():
                self.head.mean.weight.mul_(0.1)
                self.head.mean.bias.zero_()

    def _core_skip(self, state: torch.Tensor, instr: torch.Tensor) -> torch.Tensor:
        lead = state.shape[:-1]
        core = self.feature_fn.core(state, instr).reshape(*lead, self.n_agents, -1)
        d = min(self.latent_dim, core.shape[-1])
        skip = torch.zeros(*lead, self.n_agents, self.latent_dim, dtype=state.dtype)
        skip[..., :d] = core[..., :d]
        return skip.reshape(*lead, self.out_dim)

    def forward(self, state: torch.Tensor, instr: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        parts = [state, instr]
        if self.feature_fn is not None:
            parts.append(self.feature_fn(state, instr))
        mean, var = self.head(self.body(torch.cat(parts, dim=-1)))
        if self.use_core_skip:
            mean = mean + self._core_skip(state, instr)
        return mean, var

    def sample(
        self, state: torch.Tensor, instr: torch.Tensor, noise: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Reparameterized draw: z = mean + sqrt(var) * noise (z = mean at noise 0)."""
        mean, var = self(state, instr)
        if noise.shape != mean.shape:
            raise ValueError(f"noise shape {noise.shape} != latent shape {mean.shape}")
        return mean + torch.sqrt(var) * noise, mean, var


class PosteriorNet(nn.Module):
    """Factorized trajectory posterior over the coordination latent.

    One factor conditions on (global state, joint action, instructions) at the
    anchor step; a second, shared factor conditions on (all observations,
    joint action, instructions) at each later step of the lookahead window.
    The combined posterior is the normalized product of the factor Gaussians.
    """

    def __init__(
        self,
        state_dim: int,
        joint_obs_dim: int,
        joint_act_dim: int,
        instr_dim: int,
        out_dim: int,
        hidden_dim: int = 64,
        var_floor: float = VAR_FLOOR,
        feature_fn=None,
    ):
        super().__init__()
        self.out_dim = out_dim
        self.feature_fn = feature_fn
        feat_dim = feature_fn.dim if feature_fn is not None else 0
        self.state_body = nn.Sequential(
            nn.Linear(state_dim + joint_act_dim + instr_dim + feat_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
        )
        self.state_head = GaussianHead(hidden_dim, out_dim, var_floor)
        self.step_body = nn.Sequential(
            nn.Linear(joint_obs_dim + joint_act_dim + instr_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
        )
        self.step_head = GaussianHead(hidden_dim, out_dim, var_floor)

    def state_factor(
        self, state: torch.Tensor, act_onehot: torch.Tensor, instr: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        parts = [state, act_onehot, instr]
        if self.feature_fn is not None:
            parts.append(self.feature_fn(state, instr))
        return self.state_head(self.state_body(torch.cat(parts, dim=-1)))

    def step_factor(
        self, joint_obs: torch.Tensor, act_onehot: torch.Tensor, instr: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return self.step_head(self.step_body(torch.cat([joint_obs, act_onehot, instr], dim=-1)))


def one_hot(indices: torch.Tensor, num_classes: int, dtype: torch.dtype) -> torch.Tensor:
    return F.one_hot(indices.long(), num_classes=num_classes).to(dtype)
