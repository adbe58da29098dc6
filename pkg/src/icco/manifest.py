"""Run manifests: what was trained, with which config, and where the
artifacts live. Written atomically so observers never see a partial file."""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class RunManifest:
    run_id: str
    variant: str
    seed: int
    created_at: str
    config: dict
    status: str = "running"
    checkpoints: list[str] = field(default_factory=list)
    metrics_csv: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def new(cls, variant: str, seed: int, config: dict) -> "RunManifest":
        return cls(
            run_id=uuid.uuid4().hex[:12],
            variant=variant,
            seed=seed,
            created_at=time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
            config=config,
        )


def write_manifest(path: str | Path, manifest: RunManifest) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        json.dump(asdict(manifest), fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def load_manifest(path: str | Path) -> RunManifest:
    with open(path) as fh:
        return RunManifest(**json.load(fh))
