"""Resource-collection world: seedable dynamics, rewards, and observations.

Three agents gather resources and carry them home while an invader marches
toward the home base. The world is a Dec-POMDP: each agent senses only
entities within a small radius; rewards are shared by the team and split into
task events (pick/collect/defense/breach) plus a waypoint-following term.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..config import ScenarioConfig
from . import get_kernel

ACTION_NAMES = ("stay", "+x", "-x", "+y", "-y")
N_ACTIONS = 5


class EpisodeExhausted(RuntimeError):
    """step() called on a world whose episode already ran its full length."""


@dataclass
class RewardBreakdown:
    r_pick: float
    r_collect: float
    r_defense: float
    r_inst: float
    per_agent_e_cossim: list[float]
    per_agent_e_dist: list[float]
    n_picks: int
    n_collects: int
    n_defenses: int
    n_breaches: int

    @property
    def r_task(self) -> float:
        return self.r_pick + self.r_collect + self.r_defense

    @property
    def total(self) -> float:
        return self.r_task + self.r_inst

    def to_dict(self) -> dict:
        return {
            "r_task": self.r_task,
            "r_inst": self.r_inst,
            "r_pick": self.r_pick,
            "r_collect": self.r_collect,
            "r_defense": self.r_defense,
            "total": self.total,
            "per_agent_e_cossim": self.per_agent_e_cossim,
            "per_agent_e_dist": self.per_agent_e_dist,
            "n_picks": self.n_picks,
            "n_collects": self.n_collects,
            "n_defenses": self.n_defenses,
            "n_breaches": self.n_breaches,
        }


@dataclass
class WorldState:
    """Value snapshot of a world, sufficient to restore it bit-exactly."""

    time_step: int
    agent_pos: np.ndarray
    agent_vel: np.ndarray
    carrying: np.ndarray
    defended: np.ndarray
    invader_pos: np.ndarray
    invader_active: bool
    res_pos: np.ndarray
    res_active: np.ndarray
    home_pos: np.ndarray
    home_radius: float
    rng_state: dict = field(repr=False, default=None)


class ResourceWorld:
    """Mutable environment instance. Single writer; snapshot/restore for forks."""

    def __init__(self, scenario: ScenarioConfig | None = None, backend: str = "auto"):
        self.scenario = scenario or ScenarioConfig()
        self.kernel = get_kernel(backend)
        sc = self.scenario
        self.n_agents = sc.n_agents
        self.n_resources = sc.n_resources
        self.half_extent = sc.half_extent
        self.obs_dim = sc.obs_dim
        self.rng: np.random.Generator | None = None
        self.time_step = 0
        self.agent_pos = np.zeros((sc.n_agents, 2))
        self.agent_vel = np.zeros((sc.n_agents, 2))
        self.carrying = np.zeros(sc.n_agents, dtype=np.uint8)
        self.defended = np.zeros(sc.n_agents, dtype=np.uint8)
        self.invader_pos = np.zeros(2)
        self.invader_active = True
        self.res_pos = np.zeros((sc.n_resources, 2))
        self.res_active = np.ones(sc.n_resources, dtype=np.uint8)
        self.home_pos = np.zeros(2)
        self._obs_buf = np.zeros((sc.n_agents, sc.obs_dim))
        self._e_cos = np.zeros(sc.n_agents)
        self._e_dist = np.zeros(sc.n_agents)

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed: int) -> np.ndarray:
        """Draw fresh uniform entity positions and return observations."""
        h = self.half_extent
        self.rng = np.random.default_rng(seed)
        self.time_step = 0
        self.agent_pos[:] = self.rng.uniform(-h, h, size=(self.n_agents, 2))
        self.invader_pos[:] = self.rng.uniform(-h, h, size=2)
        self.res_pos[:] = self.rng.uniform(-h, h, size=(self.n_resources, 2))
        self.agent_vel[:] = 0.0
        self.carrying[:] = 0
        self.defended[:] = 0
        self.invader_active = True
        self.res_active[:] = 1
        return self.observe_all()

    def step(self, actions, waypoints) -> tuple[RewardBreakdown, np.ndarray]:
        """Advance one step under a joint action and per-agent waypoints.

        `waypoints` is (n_agents, K, 2) in field coordinates. Events resolve
        pick -> collect -> defense; picked resources respawn uniformly and a
        hit (or home-reaching) invader respawns on the field boundary, both
        within the same step.
        """
        if self.rng is None:
            raise RuntimeError("reset() must be called before step()")
        if self.time_step >= self.scenario.episode_steps:
            raise EpisodeExhausted(
                f"episode length {self.scenario.episode_steps} exhausted at step {self.time_step}"
            )
        actions = np.ascontiguousarray(actions, dtype=np.int64)
        if actions.shape != (self.n_agents,):
            raise ValueError(f"expected {self.n_agents} actions, got shape {actions.shape}")
        if np.any(actions < 0) or np.any(actions >= N_ACTIONS):
            raise ValueError("action index out of range")
        waypoints = np.ascontiguousarray(waypoints, dtype=np.float64)
        if waypoints.ndim != 3 or waypoints.shape[0] != self.n_agents or waypoints.shape[2] != 2:
            raise ValueError(f"expected waypoints (n_agents, K, 2), got {waypoints.shape}")

        sc = self.scenario
        n_picks, n_collects, n_defenses, n_breaches, invader_respawn, picked = self.kernel.step_dynamics(
            self.agent_pos,
            self.agent_vel,
            self.carrying,
            self.defended,
            self.invader_pos,
            self.res_pos,
            self.res_active,
            actions,
            waypoints,
            sc.agent_step,
            self.half_extent,
            sc.contact_radius,
            sc.home_radius,
            float(self.home_pos[0]),
            float(self.home_pos[1]),
            sc.invader_speed,
            self._e_cos,
            self._e_dist,
        )

        for j in picked:
            self.res_pos[j] = self.rng.uniform(-self.half_extent, self.half_extent, size=2)
            self.res_active[j] = 1
        if invader_respawn:
            self.invader_pos[:] = self._boundary_point()

        rw = sc.rewards
        r_inst = 0.0
        for i in range(self.n_agents):
            r_inst += rw.inst_scale * (float(self._e_cos[i]) + rw.inst_dist_weight * float(self._e_dist[i]))
        breakdown = RewardBreakdown(
            r_pick=rw.pick * n_picks,
            r_collect=rw.collect * n_collects,
            r_defense=rw.defense * n_defenses + rw.breach * n_breaches,
            r_inst=r_inst,
            per_agent_e_cossim=self._e_cos.tolist(),
            per_agent_e_dist=self._e_dist.tolist(),
            n_picks=n_picks,
            n_collects=n_collects,
            n_defenses=n_defenses,
            n_breaches=n_breaches,
        )
        self.time_step += 1
        return breakdown, self.observe_all()

    def _boundary_point(self) -> np.ndarray:
        h = self.half_extent
        side = int(self.rng.integers(4))
        offset = self.rng.uniform(-h, h)
        if side == 0:
            return np.array([-h, offset])
        if side == 1:
            return np.array([h, offset])
        if side == 2:
            return np.array([offset, -h])
        return np.array([offset, h])

    @property
    def done(self) -> bool:
        return self.time_step >= self.scenario.episode_steps

    # -- observation and state views ---------------------------------------

    def observe_all(self) -> np.ndarray:
        sc = self.scenario
        self.kernel.observe_all(
            self.agent_pos,
            self.agent_vel,
            self.carrying,
            self.invader_pos,
            int(self.invader_active),
            self.res_pos,
            self.res_active,
            float(self.home_pos[0]),
            float(self.home_pos[1]),
            sc.sense_radius,
            self._obs_buf,
        )
        return self._obs_buf.copy()

    def observe(self, agent_index: int) -> np.ndarray:
        if not 0 <= agent_index < self.n_agents:
            raise IndexError(f"agent index {agent_index} out of range")
        return self.observe_all()[agent_index]

    def state_vector(self, waypoints) -> np.ndarray:
        """Global conditioning vector: kinematics, flags, entity positions, waypoints."""
        waypoints = np.asarray(waypoints, dtype=np.float64)
        parts = [
            self.agent_pos.ravel(),
            self.agent_vel.ravel(),
            self.carrying.astype(np.float64),
            self.defended.astype(np.float64),
            self.res_pos.ravel(),
            self.invader_pos,
            waypoints.ravel(),
        ]
        return np.concatenate(parts)

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> WorldState:
        return WorldState(
            time_step=self.time_step,
            agent_pos=self.agent_pos.copy(),
            agent_vel=self.agent_vel.copy(),
            carrying=self.carrying.copy(),
            defended=self.defended.copy(),
            invader_pos=self.invader_pos.copy(),
            invader_active=self.invader_active,
            res_pos=self.res_pos.copy(),
            res_active=self.res_active.copy(),
            home_pos=self.home_pos.copy(),
            home_radius=self.scenario.home_radius,
            rng_state=copy.deepcopy(self.rng.bit_generator.state) if self.rng is not None else None,
        )

    def restore(self, state: WorldState) -> None:
        self.time_step = state.time_step
        self.agent_pos[:] = state.agent_pos
        self.agent_vel[:] = state.agent_vel
        self.carrying[:] = state.carrying
        self.defended[:] = state.defended
        self.invader_pos[:] = state.invader_pos
        self.invader_active = state.invader_active
        self.res_pos[:] = state.res_pos
        self.res_active[:] = state.res_active
        self.home_pos[:] = state.home_pos
        if state.rng_state is not None:
            if self.rng is None:
                self.rng = np.random.default_rng(0)
            self.rng.bit_generator.state = copy.deepcopy(state.rng_state)


def state_vector_slices(scenario: ScenarioConfig, n_waypoints: int) -> dict[str, slice]:
    """Named slices into the global state vector, for decoding and tests."""
    n, m = scenario.n_agents, scenario.n_resources
    offsets = {}
    cursor = 0
    for name, width in (
        ("agent_pos", 2 * n),
        ("agent_vel", 2 * n),
        ("carrying", n),
        ("defended", n),
        ("res_pos", 2 * m),
        ("invader_pos", 2),
        ("waypoints", 2 * n * n_waypoints),
    ):
        offsets[name] = slice(cursor, cursor + width)
        cursor += width
    return offsets
