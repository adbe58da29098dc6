"""Versioned checkpoint files: name-keyed parameter tensors plus optimizer
state and training counters."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch

from .config import TrainConfig
from .models import Models

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    cfg: TrainConfig
    models: Models
    targets: Models
    optimizer_state: dict | None
    counters: dict


def save_checkpoint(
    path: str | Path,
    models: Models,
    targets: Models,
    optimizer: torch.optim.Optimizer | None,
    counters: dict,
) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "variant": models.cfg.variant,
        "config": models.cfg.to_dict(),
        "params": models.state_dict(),
        "target_params": targets.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "counters": dict(counters),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_checkpoint(path: str | Path, dtype: torch.dtype = torch.float32) -> Checkpoint:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint format version {version}")
    cfg = TrainConfig.from_dict(payload["config"])
    models = Models(cfg, dtype=dtype)
    models.load_state_dict(payload["params"])
    targets = Models(cfg, dtype=dtype)
    targets.load_state_dict(payload["target_params"])
    return Checkpoint(
        cfg=cfg,
        models=models,
        targets=targets,
        optimizer_state=payload.get("optimizer"),
        counters=payload.get("counters", {}),
    )
