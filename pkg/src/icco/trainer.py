"""Replay-driven joint training of the utility, mixing, coordination, and
posterior networks, with target copies and epsilon-greedy collection."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .config import TrainConfig
from .env.world import ResourceWorld
from .losses import ce_loss, rl_loss
from .manifest import RunManifest, write_manifest
from .models import Models
from .replay import ReplayBuffer, to_batch
from .rollout import ActingPolicy, RandomWalkInstructions, run_episode

METRICS_COLUMNS = ("step", "loss_rl", "loss_ce", "mean_episode_reward", "mean_r_task", "mean_r_inst")


class TrainingDiverged(RuntimeError):
    pass


def epsilon_at(step: int, cfg: TrainConfig) -> float:
    if cfg.eps_anneal_steps <= 0 or step >= cfg.eps_anneal_steps:
        return cfg.eps_end
    frac = step / cfg.eps_anneal_steps
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac


class Trainer:
    def __init__(self, cfg: TrainConfig, out_dir: str | Path, env_backend: str = "auto", quiet: bool = False):
        torch.set_num_threads(1)  # bit-reproducible single-worker training
        torch.manual_seed(cfg.seed)
        self.cfg = cfg
        self.quiet = quiet
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        streams = np.random.SeedSequence(cfg.seed).spawn(5)
        self.rng_env, self.rng_instr, self.rng_expl, self.rng_noise, self.rng_replay = (
            np.random.default_rng(s) for s in streams
        )

        self.world = ResourceWorld(cfg.scenario, backend=env_backend)
        self.models = Models(cfg)
        self.targets = Models(cfg)
        self.targets.sync_from(self.models)
        self.policy = ActingPolicy(self.models)
        self.optimizer = torch.optim.Adam(self.models.parameters(), lr=cfg.lr)
        self.replay = ReplayBuffer(cfg.replay_capacity)
        self.instructions = RandomWalkInstructions(cfg, self.rng_instr)

        self.env_steps = 0
        self.updates = 0
        self.episodes_done = 0
        self.ce_evaluations = 0

        self.manifest = RunManifest.new(cfg.variant, cfg.seed, cfg.to_dict())
        self.manifest_path = self.out_dir / "manifest.json"
        self.metrics_path = self.out_dir / "metrics.csv"
        self.manifest.metrics_csv = str(self.metrics_path)
        write_manifest(self.manifest_path, self.manifest)
        self._metrics_fh = open(self.metrics_path, "w")
        self._metrics_fh.write(",".join(METRICS_COLUMNS) + "\n")

    # -- optimization -------------------------------------------------------

    def update(self) -> tuple[float, float]:
        records = self.replay.sample(self.cfg.batch_size, self.rng_replay)
        batch = to_batch(records)
        loss_rl, _ = rl_loss(batch, self.models, self.targets, self.cfg)
        loss = loss_rl
        loss_ce_val = math.nan
        if self.models.variant.use_ce_loss:
            loss_ce, _ = ce_loss(batch, self.models.coordinator, self.models.posterior, self.cfg, self.models.dims)
            loss = loss_rl + self.cfg.ce_weight * loss_ce
            loss_ce_val = loss_ce.item()
            self.ce_evaluations += 1

        if not math.isfinite(loss.item()):
            raise TrainingDiverged(
                f"non-finite loss at update {self.updates}: rl={loss_rl.item()!r} ce={loss_ce_val!r}"
            )
        self.optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(list(self.models.parameters()), self.cfg.grad_clip_norm)
        self.optimizer.step()
        self.updates += 1
        if self.updates % self.cfg.target_sync_interval == 0:
            self.targets.sync_from(self.models)
        return loss_rl.item(), loss_ce_val

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunManifest:
        cfg = self.cfg
        ckpt_dir = self.out_dir / "checkpoints"
        try:
            for episode in range(cfg.episodes):
                eps = epsilon_at(self.env_steps, cfg)
                seed = int(self.rng_env.integers(2**63))
                record, stats = run_episode(
                    self.world,
                    self.policy,
                    cfg,
                    seed=seed,
                    instructions=self.instructions,
                    eps=eps,
                    expl_rng=self.rng_expl,
                    noise_rng=self.rng_noise if self.models.variant.use_coordinator else None,
                    record=True,
                )
                self.replay.add(record)
                self.env_steps += stats.steps
                self.episodes_done += 1

                loss_rl = loss_ce = math.nan
                if self.replay.can_sample(cfg.batch_size):
                    for _ in range(cfg.updates_per_episode):
                        loss_rl, loss_ce = self.update()

                self._log_metrics(loss_rl, loss_ce, stats)
                if cfg.checkpoint_interval and (episode + 1) % cfg.checkpoint_interval == 0:
                    self._checkpoint(ckpt_dir / f"ckpt_ep{episode + 1:06d}.pt")
                if not self.quiet and (episode + 1) % 100 == 0:
                    print(
                        f"[{cfg.variant} seed={cfg.seed}] episode {episode + 1}/{cfg.episodes} "
                        f"eps={eps:.3f} reward={stats.reward:.1f} loss_rl={loss_rl:.4f}",
                        file=sys.stderr,
                    )
            final = ckpt_dir / "ckpt_final.pt"
            self._checkpoint(final)
            self.manifest.status = "complete"
            write_manifest(self.manifest_path, self.manifest)
        finally:
            self._metrics_fh.close()
        return self.manifest

    def _checkpoint(self, path: Path) -> None:
        counters = {
            "episodes": self.episodes_done,
            "env_steps": self.env_steps,
            "updates": self.updates,
        }
        save_checkpoint(path, self.models, self.targets, self.optimizer, counters)
        self.manifest.checkpoints.append(str(path))
        write_manifest(self.manifest_path, self.manifest)

    def _log_metrics(self, loss_rl: float, loss_ce: float, stats) -> None:
        row = (
            str(self.env_steps),
            repr(float(loss_rl)),
            repr(float(loss_ce)),
            repr(float(stats.reward)),
            repr(float(stats.r_task)),
            repr(float(stats.r_inst)),
        )
        self._metrics_fh.write(",".join(row) + "\n")
        self._metrics_fh.flush()


def train_run(cfg: TrainConfig, out_dir: str | Path, env_backend: str = "auto", quiet: bool = False) -> RunManifest:
    return Trainer(cfg, out_dir, env_backend=env_backend, quiet=quiet).run()
