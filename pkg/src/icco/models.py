"""Variant-aware bundle of networks plus dimension bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .config import TrainConfig, VariantConfig
from .features import StateFeatures
from .env.world import N_ACTIONS
from .nets import AgentQNet, CoordinatorNet, MonotonicMixer, PosteriorNet


@dataclass
class Dims:
    n_agents: int
    n_actions: int
    obs_dim: int
    state_dim: int
    n_waypoints: int
    latent_dim: int

    @property
    def instr_dim(self) -> int:
        # every agent's flattened waypoint sequence
        return self.n_agents * self.n_waypoints * 2

    @property
    def own_instr_dim(self) -> int:
        return self.n_waypoints * 2

    @property
    def latent_total(self) -> int:
        return self.n_agents * self.latent_dim

    @property
    def joint_obs_dim(self) -> int:
        return self.n_agents * self.obs_dim

    @property
    def joint_act_dim(self) -> int:
        return self.n_agents * self.n_actions


def make_dims(cfg: TrainConfig) -> Dims:
    sc = cfg.scenario
    return Dims(
        n_agents=sc.n_agents,
        n_actions=N_ACTIONS,
        obs_dim=sc.obs_dim,
        state_dim=sc.state_dim(cfg.n_waypoints),
        n_waypoints=cfg.n_waypoints,
        latent_dim=cfg.latent_dim,
    )


def agent_cond_dim(variant: VariantConfig, dims: Dims) -> int:
    if variant.use_coordinator:
        return dims.latent_dim
    if variant.agent_input_scope == "global":
        return dims.state_dim
    return dims.own_instr_dim


class Models:
    """All trainable modules for one variant, with name-keyed (de)serialization."""

    def __init__(self, cfg: TrainConfig, dtype: torch.dtype = torch.float32):
        self.cfg = cfg
        self.variant = cfg.variant_config
        self.dims = make_dims(cfg)
        dims = self.dims

        agent_in = dims.obs_dim + dims.n_actions + dims.n_agents + agent_cond_dim(self.variant, dims)
        self.agent = AgentQNet(agent_in, cfg.rnn_hidden, dims.n_actions)

        mixer_cond = dims.state_dim + (dims.latent_total if self.variant.use_coordinator else 0)
        self.mixer = MonotonicMixer(dims.n_agents, mixer_cond, cfg.mixer_embed, cfg.hypernet_embed)

        self.coordinator: CoordinatorNet | None = None
        self.posterior: PosteriorNet | None = None
        if self.variant.use_coordinator:
            features = StateFeatures(cfg.scenario, cfg.n_waypoints)
            self.coordinator = CoordinatorNet(
                dims.state_dim, dims.instr_dim, dims.n_agents, dims.latent_dim, cfg.coord_hidden,
                feature_fn=features,
            )
        if self.variant.use_ce_loss:
            self.posterior = PosteriorNet(
                dims.state_dim,
                dims.joint_obs_dim,
                dims.joint_act_dim,
                dims.instr_dim,
                dims.latent_total,
                cfg.posterior_hidden,
                feature_fn=StateFeatures(cfg.scenario, cfg.n_waypoints),
            )
        if dtype != torch.float32:
            self.to(dtype)

    def components(self) -> dict[str, torch.nn.Module]:
        comps = {"agent": self.agent, "mixer": self.mixer}
        if self.coordinator is not None:
            comps["coordinator"] = self.coordinator
        if self.posterior is not None:
            comps["posterior"] = self.posterior
        return comps

    def parameters(self):
        for module in self.components().values():
            yield from module.parameters()

    def named_parameters(self):
        for name, module in self.components().items():
            for pname, p in module.named_parameters():
                yield f"{name}.{pname}", p

    def to(self, dtype: torch.dtype) -> "Models":
        for module in self.components().values():
            module.to(dtype)
        return self

    def eval(self) -> "Models":
        for module in self.components().values():
            module.eval()
        return self

    def state_dict(self) -> dict[str, torch.Tensor]:
        out = {}
        for name, module in self.components().items():
            for key, value in module.state_dict().items():
                out[f"{name}.{key}"] = value.clone()
        return out

    def load_state_dict(self, flat: dict[str, torch.Tensor]) -> None:
        for name, module in self.components().items():
            prefix = f"{name}."
            sub = {k[len(prefix):]: v for k, v in flat.items() if k.startswith(prefix)}
            module.load_state_dict(sub)

    def sync_from(self, other: "Models") -> None:
        self.load_state_dict(other.state_dict())
