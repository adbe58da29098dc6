"""Episode storage and batch assembly for replay-driven training."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class EpisodeRecord:
    """One finished episode. Sequences hold L steps plus the terminal entry
    where the quantity is defined after the final transition."""

    seed: int
    obs: np.ndarray  # (L+1, n_agents, obs_dim) float32
    state: np.ndarray  # (L+1, state_dim) float32
    actions: np.ndarray  # (L, n_agents) int64
    rewards: np.ndarray  # (L,) float32, total team reward
    r_task: np.ndarray  # (L,) float32
    r_inst: np.ndarray  # (L,) float32
    instr: np.ndarray  # (L+1, n_agents, K, 2) float32
    noise: np.ndarray  # (n_refresh, n_agents * latent_dim) float32
    n_picks: int = 0
    n_collects: int = 0
    n_defenses: int = 0
    n_breaches: int = 0

    def __post_init__(self):
        L = self.actions.shape[0]
        if self.obs.shape[0] != L + 1 or self.state.shape[0] != L + 1 or self.instr.shape[0] != L + 1:
            raise ValueError("sequence lengths are inconsistent")
        if self.rewards.shape[0] != L:
            raise ValueError("rewards length mismatch")

    @property
    def length(self) -> int:
        return self.actions.shape[0]


@dataclass
class TrainBatch:
    """Stacked episodes as torch tensors (batch-first)."""

    obs: torch.Tensor  # (B, L+1, n, obs_dim)
    state: torch.Tensor  # (B, L+1, state_dim)
    actions: torch.Tensor  # (B, L, n)
    rewards: torch.Tensor  # (B, L)
    instr: torch.Tensor  # (B, L+1, n, K, 2)
    noise: torch.Tensor  # (B, n_refresh, latent)

    @property
    def batch_size(self) -> int:
        return self.obs.shape[0]

    @property
    def length(self) -> int:
        return self.actions.shape[1]


class ReplayBuffer:
    """FIFO buffer of whole episodes with seeded uniform sampling."""

    def __init__(self, capacity: int):
        self.episodes: deque[EpisodeRecord] = deque(maxlen=capacity)

    def add(self, record: EpisodeRecord) -> None:
        self.episodes.append(record)

    def __len__(self) -> int:
        return len(self.episodes)

    def can_sample(self, batch_size: int) -> bool:
        return len(self.episodes) >= batch_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[EpisodeRecord]:
        if not self.can_sample(batch_size):
            raise ValueError(f"buffer holds {len(self.episodes)} episodes, need {batch_size}")
        idx = rng.choice(len(self.episodes), size=batch_size, replace=False)
        return [self.episodes[int(i)] for i in idx]


def to_batch(records: list[EpisodeRecord], dtype: torch.dtype = torch.float32) -> TrainBatch:
    return TrainBatch(
        obs=torch.as_tensor(np.stack([r.obs for r in records])).to(dtype),
        state=torch.as_tensor(np.stack([r.state for r in records])).to(dtype),
        actions=torch.as_tensor(np.stack([r.actions for r in records])),
        rewards=torch.as_tensor(np.stack([r.rewards for r in records])).to(dtype),
        instr=torch.as_tensor(np.stack([r.instr for r in records])).to(dtype),
        noise=torch.as_tensor(np.stack([r.noise for r in records])).to(dtype),
    )
