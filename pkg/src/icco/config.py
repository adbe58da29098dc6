"""Configuration objects for the environment, training runs, and variants."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

VARIANTS = ("QMIX", "QMIX_FULL", "ICCO_NO_CE", "ICCO")


@dataclass
class RewardConstants:
    pick: float = 5.0
    collect: float = 1.0
    defense: float = 4.0
    breach: float = -4.0
    inst_scale: float = 1.3
    inst_dist_weight: float = 0.1


@dataclass
class ScenarioConfig:
    """Physical constants of the resource-collection field."""

    n_agents: int = 3
    n_resources: int = 6
    field_side: float = 6.5
    episode_steps: int = 145
    agent_step: float = 0.1
    invader_speed: float = 0.05
    contact_radius: float = 0.15
    home_radius: float = 0.3
    sense_radius: float = 0.65
    rewards: RewardConstants = field(default_factory=RewardConstants)

    def __post_init__(self):
        if isinstance(self.rewards, dict):
            self.rewards = RewardConstants(**self.rewards)
        if self.n_agents <= 0 or self.n_resources <= 0:
            raise ValueError("entity counts must be positive")
        if self.field_side <= 0:
            raise ValueError("field side must be positive")

    @property
    def half_extent(self) -> float:
        return self.field_side / 2.0

    @property
    def obs_dim(self) -> int:
        # own velocity + carrying flag, then [dx, dy, present] per slot:
        # other agents, resources, invader, home
        return 3 + 3 * (self.n_agents - 1) + 3 * self.n_resources + 3 + 3

    def state_dim(self, n_waypoints: int) -> int:
        # per agent: pos, vel, carrying, defended; resource and invader
        # positions; every agent's flattened waypoint sequence
        return 6 * self.n_agents + 2 * self.n_resources + 2 + 2 * self.n_agents * n_waypoints


@dataclass
class VariantConfig:
    """Method variant switches derived from the variant tag."""

    tag: str
    use_coordinator: bool
    use_ce_loss: bool
    agent_input_scope: str  # "local" or "global"

    @classmethod
    def from_tag(cls, tag: str) -> "VariantConfig":
        tag = tag.upper()
        if tag == "QMIX":
            return cls(tag, use_coordinator=False, use_ce_loss=False, agent_input_scope="local")
        if tag == "QMIX_FULL":
            return cls(tag, use_coordinator=False, use_ce_loss=False, agent_input_scope="global")
        if tag == "ICCO_NO_CE":
            return cls(tag, use_coordinator=True, use_ce_loss=False, agent_input_scope="local")
        if tag == "ICCO":
            return cls(tag, use_coordinator=True, use_ce_loss=True, agent_input_scope="local")
        raise ValueError(f"unknown variant {tag!r}, expected one of {VARIANTS}")


@dataclass
class TrainConfig:
    """Hyperparameters for one training run."""

    variant: str = "ICCO"
    seed: int = 0
    episodes: int = 3000

    # instruction sampling
    n_waypoints: int = 4
    refresh_interval: int = 4
    sigma_walk: float = 0.1

    # network sizes
    latent_dim: int = 8
    rnn_hidden: int = 64
    mixer_embed: int = 32
    hypernet_embed: int = 64
    coord_hidden: int = 64
    posterior_hidden: int = 64

    # optimization
    future_window: int = 4  # T: posterior window covers steps t+1 .. t+T-1
    lr: float = 5e-4
    gamma: float = 0.99
    batch_size: int = 32
    replay_capacity: int = 5000
    target_sync_interval: int = 200
    grad_clip_norm: float = 10.0
    ce_weight: float = 1.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_anneal_steps: int = 50_000
    updates_per_episode: int = 1
    checkpoint_interval: int = 1000

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self):
        if isinstance(self.scenario, dict):
            self.scenario = ScenarioConfig(**self.scenario)
        self.variant = self.variant.upper()
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.n_waypoints < 1:
            raise ValueError("n_waypoints must be >= 1")
        if self.future_window < 1:
            raise ValueError("future_window must be >= 1")

    @property
    def variant_config(self) -> VariantConfig:
        return VariantConfig.from_tag(self.variant)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_train_config(path: str | Path) -> TrainConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return TrainConfig.from_dict(data)


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return ScenarioConfig(**data)


def dump_config(cfg: TrainConfig | ScenarioConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(dataclasses.asdict(cfg), fh, sort_keys=False)
