"""Sequential episode collection: acting policies and instruction sources."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .config import TrainConfig
from .env.logio import ReplayWriter
from .env.world import ResourceWorld
from .instruction import sample_random_walk
from .models import Models, agent_cond_dim
from .replay import EpisodeRecord


def epsilon_greedy(utilities: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Uniform action with probability eps, otherwise first-index argmax."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(len(utilities)))
    return int(np.argmax(utilities))


class RandomWalkInstructions:
    """Training-time instruction source: Gaussian walk from each agent's position.

    `bounds` confines waypoints to a sub-box of the field (used by the
    quadrant evaluation protocol); default is the whole field.
    """

    def __init__(self, cfg: TrainConfig, rng: np.random.Generator, bounds: tuple | None = None):
        self.cfg = cfg
        self.rng = rng
        self.bounds = bounds

    def __call__(self, world: ResourceWorld, step: int) -> np.ndarray:
        if self.bounds is None:
            lo, hi = -world.half_extent, world.half_extent
        else:
            lo, hi = self.bounds
        return np.stack(
            [
                sample_random_walk(
                    world.agent_pos[i], self.cfg.n_waypoints, self.cfg.sigma_walk, self.rng, lo, hi
                )
                for i in range(world.n_agents)
            ]
        )


class FixedInstructions:
    """Holds translator-produced waypoints across refreshes."""

    def __init__(self, waypoints: np.ndarray):
        self.waypoints = np.asarray(waypoints, dtype=np.float64)

    def __call__(self, world: ResourceWorld, step: int) -> np.ndarray:
        return self.waypoints


class ActingPolicy:
    """Step-at-a-time greedy/exploratory policy over a Models bundle."""

    def __init__(self, models: Models, dtype: torch.dtype = torch.float32):
        self.models = models
        self.dims = models.dims
        self.variant = models.variant
        self.dtype = dtype
        self.cond_dim = agent_cond_dim(self.variant, self.dims)
        self._id = np.eye(self.dims.n_agents, dtype=np.float64)
        self.reset()

    def reset(self) -> None:
        self.hidden = self.models.agent.init_hidden(self.dims.n_agents)
        self.prev_actions = np.zeros(self.dims.n_agents, dtype=np.int64)

    def latent(self, state_vec: np.ndarray, waypoints: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """Sample the coordination latent for the whole team; returns (latent_total,)."""
        s = torch.as_tensor(state_vec, dtype=self.dtype).unsqueeze(0)
        v = torch.as_tensor(np.asarray(waypoints).ravel(), dtype=self.dtype).unsqueeze(0)
        eps = torch.as_tensor(noise, dtype=self.dtype).unsqueeze(0)
        with torch.no_grad():
            z, _, _ = self.models.coordinator.sample(s, v, eps)
        return z.squeeze(0).numpy().astype(np.float64)

    def act(self, obs: np.ndarray, cond: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
        n, a = self.dims.n_agents, self.dims.n_actions
        prev_oh = np.zeros((n, a))
        prev_oh[np.arange(n), self.prev_actions] = 1.0
        x = np.concatenate([obs, prev_oh, self._id, cond], axis=1)
        xt = torch.as_tensor(x, dtype=self.dtype).unsqueeze(1)  # (n, 1, D)
        with torch.no_grad():
            q, self.hidden = self.models.agent(xt, self.hidden)
        q = q.squeeze(1).numpy()
        actions = np.array([epsilon_greedy(q[i], eps, rng) for i in range(n)], dtype=np.int64)
        self.prev_actions = actions
        return actions


@dataclass
class EpisodeStats:
    reward: float = 0.0
    r_task: float = 0.0
    r_inst: float = 0.0
    picks: int = 0
    collects: int = 0
    defenses: int = 0
    breaches: int = 0
    steps: int = 0
    e_cossim_sum: float = 0.0
    nearest_dist_sum: float = 0.0
    n_agent_steps: int = 0
    reward_series: list = field(default_factory=list, repr=False)

    @property
    def mean_e_cossim(self) -> float:
        return self.e_cossim_sum / max(self.n_agent_steps, 1)

    @property
    def mean_nearest_dist(self) -> float:
        return self.nearest_dist_sum / max(self.n_agent_steps, 1)


def agent_conditioning(policy: ActingPolicy, state_vec, waypoints, z) -> np.ndarray:
    n = policy.dims.n_agents
    if policy.variant.use_coordinator:
        return z.reshape(n, policy.dims.latent_dim)
    if policy.variant.agent_input_scope == "global":
        return np.tile(state_vec, (n, 1))
    return np.asarray(waypoints).reshape(n, -1)


def run_episode(
    world: ResourceWorld,
    policy: ActingPolicy,
    cfg: TrainConfig,
    *,
    seed: int,
    instructions,
    eps: float = 0.0,
    expl_rng: np.random.Generator | None = None,
    noise_rng: np.random.Generator | None = None,
    record: bool = False,
    writer: ReplayWriter | None = None,
) -> tuple[EpisodeRecord | None, EpisodeStats]:
    """Run one full episode; instructions refresh every cfg.refresh_interval steps.

    With noise_rng set, coordinator latents are reparameterization-sampled at
    each refresh (training behavior); otherwise the latent is the mean
    (deterministic greedy evaluation).
    """
    sc = world.scenario
    dims = policy.dims
    L = sc.episode_steps
    refresh = cfg.refresh_interval
    expl_rng = expl_rng or np.random.default_rng(0)

    obs = world.reset(seed)
    policy.reset()
    stats = EpisodeStats()

    if record:
        n_blocks = (L + refresh - 1) // refresh
        rec_obs = np.zeros((L + 1, dims.n_agents, dims.obs_dim), dtype=np.float32)
        rec_state = np.zeros((L + 1, dims.state_dim), dtype=np.float32)
        rec_actions = np.zeros((L, dims.n_agents), dtype=np.int64)
        rec_rewards = np.zeros(L, dtype=np.float32)
        rec_r_task = np.zeros(L, dtype=np.float32)
        rec_r_inst = np.zeros(L, dtype=np.float32)
        rec_instr = np.zeros((L + 1, dims.n_agents, cfg.n_waypoints, 2), dtype=np.float32)
        rec_noise = np.zeros((n_blocks, dims.latent_total), dtype=np.float32)

    waypoints = None
    z = None
    for t in range(L):
        if t % refresh == 0:
            waypoints = instructions(world, t)
            state_vec = world.state_vector(waypoints)
            if policy.variant.use_coordinator:
                if noise_rng is not None:
                    noise = noise_rng.standard_normal(dims.latent_total)
                else:
                    noise = np.zeros(dims.latent_total)
                z = policy.latent(state_vec, waypoints, noise)
                if record:
                    rec_noise[t // refresh] = noise
        else:
            state_vec = world.state_vector(waypoints)

        cond = agent_conditioning(policy, state_vec, waypoints, z)
        actions = policy.act(obs, cond, eps, expl_rng)
        breakdown, obs_next = world.step(actions, waypoints)

        stats.reward += breakdown.total
        stats.r_task += breakdown.r_task
        stats.r_inst += breakdown.r_inst
        stats.picks += breakdown.n_picks
        stats.collects += breakdown.n_collects
        stats.defenses += breakdown.n_defenses
        stats.breaches += breakdown.n_breaches
        stats.e_cossim_sum += float(sum(breakdown.per_agent_e_cossim))
        stats.nearest_dist_sum += float(-sum(breakdown.per_agent_e_dist))
        stats.n_agent_steps += dims.n_agents
        stats.steps += 1
        stats.reward_series.append(breakdown.total)

        if record:
            rec_obs[t] = obs
            rec_state[t] = state_vec
            rec_actions[t] = actions
            rec_rewards[t] = breakdown.total
            rec_r_task[t] = breakdown.r_task
            rec_r_inst[t] = breakdown.r_inst
            rec_instr[t] = waypoints
        if writer is not None:
            writer.write_step(t, world, actions, breakdown, waypoints)
        obs = obs_next

    record_obj = None
    if record:
        rec_obs[L] = obs
        rec_state[L] = world.state_vector(waypoints)
        rec_instr[L] = waypoints
        record_obj = EpisodeRecord(
            seed=seed,
            obs=rec_obs,
            state=rec_state,
            actions=rec_actions,
            rewards=rec_rewards,
            r_task=rec_r_task,
            r_inst=rec_r_inst,
            instr=rec_instr,
            noise=rec_noise,
            n_picks=stats.picks,
            n_collects=stats.collects,
            n_defenses=stats.defenses,
            n_breaches=stats.breaches,
        )
    return record_obj, stats
