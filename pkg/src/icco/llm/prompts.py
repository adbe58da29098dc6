"""Prompt assembly for the waypoint translator.

Two variants: the base prompt carries only the field, start positions, and
the instruction; the task-aligned variant adds the task description, the
reward constants, and all resource/invader positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PromptError
from .parse import TRAJECTORY_HEADING

STRICT_COMPLY_PHRASE = "STRICTLY COMPLY with the following order"


@dataclass
class PromptSpec:
    variant: str  # "base" or "task_aligned"
    n_agents: int
    half_extent: float
    agent_positions: list[tuple[float, float]]
    instruction_text: str
    n_waypoints: int
    resource_positions: list[tuple[float, float]] | None = None
    invader_position: tuple[float, float] | None = None
    reward_constants: dict | None = field(default=None)

    def __post_init__(self):
        if self.variant not in ("base", "task_aligned"):
            raise PromptError(f"unknown prompt variant {self.variant!r}")
        if not self.instruction_text:
            raise PromptError("instruction text is unbound")
        if len(self.agent_positions) != self.n_agents:
            raise PromptError("agent positions do not match the agent count")
        if self.variant == "task_aligned":
            missing = [
                name
                for name, value in (
                    ("resource_positions", self.resource_positions),
                    ("invader_position", self.invader_position),
                    ("reward_constants", self.reward_constants),
                )
                if value is None
            ]
            if missing:
                raise PromptError(f"task_aligned prompt is missing: {', '.join(missing)}")


def _fmt(p) -> str:
    return f"({float(p[0])!r}, {float(p[1])!r})"


def assemble_prompt(spec: PromptSpec) -> str:
    h = float(spec.half_extent)
    lines = [
        f"You coordinate {spec.n_agents} robot agents on a flat 2D field.",
        f"The field spans x in [{-h!r}, {h!r}] and y in [{-h!r}, {h!r}];"
        " right is the positive x direction and up is the positive y direction.",
        "",
        "Initial configurations:",
    ]
    for i, pos in enumerate(spec.agent_positions):
        lines.append(f"- Agent {i + 1} starts at {_fmt(pos)}.")

    if spec.variant == "task_aligned":
        rw = spec.reward_constants
        lines += [
            "",
            "Task details:",
            "- Agents collect resources by touching them and must carry each one to the home base at (0.0, 0.0).",
            "- An invader advances toward the home base; touching the invader repels it.",
            f"- Rewards: {rw['pick']!r} for picking a resource, {rw['collect']!r} for delivering it home, "
            f"{rw['defense']!r} for repelling the invader, and {rw['breach']!r} if the invader reaches home.",
            "Resource positions:",
        ]
        for j, pos in enumerate(spec.resource_positions):
            lines.append(f"- Resource {j + 1} at {_fmt(pos)}.")
        lines.append(f"Invader position: {_fmt(spec.invader_position)}.")

    lines += [
        "",
        f'{STRICT_COMPLY_PHRASE}: "{spec.instruction_text}"',
        "",
        "Respond in two stages.",
        "Stage 1 - under the heading MOVEMENT STRATEGY:, explain the trajectory each agent will follow.",
        f"Stage 2 - under the heading {TRAJECTORY_HEADING}:, output exactly {spec.n_waypoints} waypoints"
        " per agent, one line per agent, formatted as:",
        "Agent 1: (x, y), (x, y), ...",
        f"All coordinates must stay within [{-h!r}, {h!r}].",
    ]
    return "\n".join(lines)
