"""Episode replay logs: line-delimited JSON, one record per step.

Shared by the evaluation tools, golden-file tests, and the console UI's
replay loader. The first line is a header carrying the schema version and
scenario; each following line snapshots one step.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from ..config import ScenarioConfig
from .world import ResourceWorld, RewardBreakdown

SCHEMA_VERSION = 1


class ReplayWriter:
    def __init__(self, path: str | Path, scenario: ScenarioConfig, meta: dict | None = None):
        self.path = Path(path)
        self._fh = open(self.path, "w")
        header = {
            "type": "header",
            "version": SCHEMA_VERSION,
            "scenario": asdict(scenario),
            "meta": meta or {},
        }
        self._fh.write(json.dumps(header) + "\n")

    def write_step(
        self,
        step: int,
        world: ResourceWorld,
        actions,
        breakdown: RewardBreakdown,
        waypoints,
    ) -> None:
        record = {
            "type": "step",
            "step": step,
            "agents": [
                {
                    "pos": [float(world.agent_pos[i, 0]), float(world.agent_pos[i, 1])],
                    "vel": [float(world.agent_vel[i, 0]), float(world.agent_vel[i, 1])],
                    "carrying": bool(world.carrying[i]),
                    "defended": bool(world.defended[i]),
                }
                for i in range(world.n_agents)
            ],
            "invader": {
                "pos": [float(world.invader_pos[0]), float(world.invader_pos[1])],
                "active": bool(world.invader_active),
            },
            "resources": [
                {"pos": [float(world.res_pos[j, 0]), float(world.res_pos[j, 1])], "active": bool(world.res_active[j])}
                for j in range(world.n_resources)
            ],
            "actions": [int(a) for a in actions],
            "reward": breakdown.to_dict(),
            "waypoints": [[[float(x), float(y)] for x, y in agent_wps] for agent_wps in waypoints],
        }
        self._fh.write(json.dumps(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_replay(path: str | Path) -> tuple[dict, list[dict]]:
    """Return (header, step records)."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise ValueError(f"{path}: missing replay header")
    if lines[0]["version"] != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported replay version {lines[0]['version']}")
    return lines[0], [rec for rec in lines[1:] if rec.get("type") == "step"]
