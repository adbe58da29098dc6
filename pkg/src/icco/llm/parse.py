"""Response parsing: two-stage text into per-agent waypoint arrays.

The requested grammar is a MOVEMENT STRATEGY prose block followed by a
TRAJECTORY GENERATION block of `Agent i: (x, y), (x, y), ...` lines. A
tolerant fallback extracts coordinate pairs by pattern when the strict
structure is missing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

STRATEGY_HEADING = "MOVEMENT STRATEGY"
TRAJECTORY_HEADING = "TRAJECTORY GENERATION"

_FLOAT = r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"
_PAIR_RE = re.compile(rf"\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)")
_AGENT_LINE_RE = re.compile(r"^\s*Agent\s+(\d+)\s*:(.*)$", re.IGNORECASE)


@dataclass
class ParsedResponse:
    strategy_text: str
    waypoints: np.ndarray  # (n_agents, K, 2)
    diagnostics: list[str] = field(default_factory=list)
    used_fallback: bool = False


def serialize_waypoints(waypoints: np.ndarray) -> str:
    """Canonical trajectory block: repr floats round-trip exactly."""
    lines = []
    for i, agent_wps in enumerate(np.asarray(waypoints, dtype=np.float64)):
        pairs = ", ".join(f"({float(x)!r}, {float(y)!r})" for x, y in agent_wps)
        lines.append(f"Agent {i + 1}: {pairs}")
    return "\n".join(lines)


def _split_sections(text: str) -> tuple[str, str]:
    upper = text.upper()
    t_idx = upper.find(TRAJECTORY_HEADING)
    s_idx = upper.find(STRATEGY_HEADING)
    strategy = ""
    if s_idx >= 0:
        end = t_idx if t_idx > s_idx else len(text)
        strategy = text[s_idx + len(STRATEGY_HEADING): end].lstrip(": \n").strip()
    trajectory = text[t_idx + len(TRAJECTORY_HEADING):].lstrip(": \n") if t_idx >= 0 else ""
    return strategy, trajectory


def _parse_strict(block: str, n_agents: int) -> dict[int, list[tuple[float, float]]]:
    per_agent: dict[int, list[tuple[float, float]]] = {}
    for line in block.splitlines():
        m = _AGENT_LINE_RE.match(line)
        if not m:
            continue
        idx = int(m.group(1))
        pairs = [(float(a), float(b)) for a, b in _PAIR_RE.findall(m.group(2))]
        if pairs:
            per_agent.setdefault(idx, []).extend(pairs)
    return per_agent


def _parse_fallback(text: str, n_agents: int) -> dict[int, list[tuple[float, float]]]:
    pairs = [(float(a), float(b)) for a, b in _PAIR_RE.findall(text)]
    if not pairs or len(pairs) % n_agents != 0:
        raise ParseError(
            f"fallback extraction found {len(pairs)} coordinate pairs, not divisible by {n_agents} agents"
        )
    k = len(pairs) // n_agents
    return {i + 1: pairs[i * k: (i + 1) * k] for i in range(n_agents)}


def parse_response(text: str, n_agents: int, expect_waypoints: int | None = None) -> ParsedResponse:
    """Extract the strategy prose and the per-agent waypoint array.

    Raises ParseError when neither the strict grammar nor the pair-pattern
    fallback yields a complete, uniform set of waypoint sequences.
    """
    strategy, trajectory = _split_sections(text)
    diagnostics: list[str] = []
    used_fallback = False

    per_agent = _parse_strict(trajectory if trajectory else text, n_agents)
    expected_keys = set(range(1, n_agents + 1))
    lengths = {len(v) for v in per_agent.values()}
    if set(per_agent) != expected_keys or len(lengths) != 1:
        diagnostics.append("strict grammar incomplete; used pair-pattern fallback")
        used_fallback = True
        per_agent = _parse_fallback(trajectory if trajectory else text, n_agents)
        lengths = {len(v) for v in per_agent.values()}

    if set(per_agent) != expected_keys:
        raise ParseError(f"expected agents 1..{n_agents}, found {sorted(per_agent)}")
    k = lengths.pop()
    if expect_waypoints is not None and k != expect_waypoints:
        diagnostics.append(f"expected {expect_waypoints} waypoints per agent, got {k}")
    waypoints = np.array([per_agent[i + 1] for i in range(n_agents)], dtype=np.float64)
    return ParsedResponse(strategy, waypoints, diagnostics, used_fallback)
