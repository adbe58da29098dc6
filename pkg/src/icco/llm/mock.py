"""Deterministic rule-based translator covering the benchmark instruction set.

Stands in for the live model so rollouts, tests, and the console work
offline. The mock renders a real two-stage response and feeds it through the
shared parser, so the grammar path is always exercised.
"""

from __future__ import annotations

import numpy as np

from ..env.world import ResourceWorld
from .errors import UnknownInstructionError
from .parse import STRATEGY_HEADING, TRAJECTORY_HEADING, parse_response, serialize_waypoints
from .translate import TranslationResult, clip_result

TABLE_INSTRUCTIONS = ("Go Right", "Move Top", "Gather Center", "Spread Out")

EDGE_MARGIN = 0.5

_STRATEGIES = {
    "go right": "All agents head to the right edge and hold a vertical line with one agent per row.",
    "move top": "All agents climb to the top edge and hold a horizontal line with one agent per column.",
    "gather center": "All agents converge on the home position at the center of the field.",
    "spread out": "Each agent follows its own ray outward from the center toward the field boundary.",
}


def normalize_tag(text: str) -> str:
    tag = " ".join(text.lower().split())
    if tag not in _STRATEGIES:
        raise UnknownInstructionError(
            f"unknown instruction {text!r}; known: {', '.join(sorted(_STRATEGIES))}"
        )
    return tag


def _rank_slots(values: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Assign slots by rank of `values` (stable, ties by agent index)."""
    order = np.lexsort((np.arange(len(values)), values))
    assigned = np.empty_like(slots)
    for rank, agent in enumerate(order):
        assigned[agent] = slots[rank]
    return assigned


def _targets(tag: str, positions: np.ndarray, half_extent: float) -> np.ndarray:
    n = positions.shape[0]
    edge = half_extent - EDGE_MARGIN
    if tag == "go right":
        slots = np.linspace(half_extent / 2, -half_extent / 2, n)
        ys = _rank_slots(-positions[:, 1], slots)
        return np.stack([np.full(n, edge), ys], axis=1)
    if tag == "move top":
        slots = np.linspace(-half_extent / 2, half_extent / 2, n)
        xs = _rank_slots(positions[:, 0], slots)
        return np.stack([xs, np.full(n, edge)], axis=1)
    if tag == "gather center":
        return np.zeros((n, 2))
    angles = np.pi / 2 + 2 * np.pi * np.arange(n) / n
    return edge * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def mock_waypoints(tag: str, positions: np.ndarray, half_extent: float, n_waypoints: int) -> np.ndarray:
    """Straight-line interpolation from each agent's position to its target."""
    targets = _targets(tag, positions, half_extent)
    fracs = (np.arange(n_waypoints, dtype=np.float64) + 1.0) / n_waypoints
    return positions[:, None, :] + fracs[None, :, None] * (targets - positions)[:, None, :]


def render_mock_response(strategy: str, waypoints: np.ndarray) -> str:
    return (
        f"{STRATEGY_HEADING}:\n{strategy}\n\n"
        f"{TRAJECTORY_HEADING}:\n{serialize_waypoints(waypoints)}\n"
    )


class MockTranslator:
    """Translator with the same surface as the model-backed one."""

    def __init__(self, n_waypoints: int = 4):
        self.n_waypoints = n_waypoints

    def translate(self, text: str, world: ResourceWorld) -> TranslationResult:
        return mock_translate(text, world, self.n_waypoints)


def mock_translate(text: str, world: ResourceWorld, n_waypoints: int = 4) -> TranslationResult:
    tag = normalize_tag(text)
    waypoints = mock_waypoints(tag, world.agent_pos.copy(), world.half_extent, n_waypoints)
    raw = render_mock_response(_STRATEGIES[tag], waypoints)
    parsed = parse_response(raw, world.n_agents, expect_waypoints=n_waypoints)
    result = TranslationResult(
        instruction=text,
        waypoints=parsed.waypoints,
        raw_response=raw,
        strategy_text=parsed.strategy_text,
        diagnostics=list(parsed.diagnostics),
    )
    return clip_result(result, world.half_extent)
