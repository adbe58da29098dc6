"""Waypoint instructions: random-walk sampling, clipping, and the following reward.

Instructions are per-agent sequences of K field coordinates. During training
they come from a Gaussian random walk anchored at the agent's position; at
execution time they come from a language-model translator and are clipped to
the field before use.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def clip_to_box(waypoints: np.ndarray, low, high) -> np.ndarray:
    """Clamp waypoint coordinates elementwise into [low, high] (idempotent)."""
    return np.clip(np.asarray(waypoints, dtype=np.float64), low, high)


def clip_to_field(waypoints: np.ndarray, half_extent: float) -> np.ndarray:
    if half_extent <= 0:
        raise ValueError("half_extent must be positive")
    return clip_to_box(waypoints, -half_extent, half_extent)


def sample_random_walk(
    agent_position: np.ndarray,
    n_waypoints: int,
    sigma_walk: float,
    rng: np.random.Generator,
    low,
    high,
) -> np.ndarray:
    """Cumulative-sum Gaussian walk from the agent's position, clipped to [low, high].

    waypoint_k = position + sum_{j<=k} eps_j with eps_j ~ N(0, sigma_walk^2 I).
    """
    if n_waypoints < 1:
        raise ValueError("n_waypoints must be >= 1")
    if sigma_walk <= 0:
        raise ValueError("sigma_walk must be positive")
    steps = rng.normal(0.0, sigma_walk, size=(n_waypoints, 2))
    walk = np.asarray(agent_position, dtype=np.float64) + np.cumsum(steps, axis=0)
    return clip_to_box(walk, low, high)


def nearest_waypoint_pair(position: np.ndarray, waypoints: np.ndarray) -> tuple[int, int]:
    """Indices of the nearest and second-nearest waypoints to `position`.

    Distance order, ties broken by lower index. For a single waypoint the
    second index equals the first.
    """
    wp = np.asarray(waypoints, dtype=np.float64)
    d = np.sqrt(np.sum((wp - np.asarray(position, dtype=np.float64)) ** 2, axis=1))
    order = np.lexsort((np.arange(len(wp)), d))
    if len(wp) == 1:
        return 0, 0
    return int(order[0]), int(order[1])


def instruction_reward(
    prev_position: np.ndarray,
    position: np.ndarray,
    waypoints: np.ndarray,
    scale: float = 1.3,
    dist_weight: float = 0.1,
) -> tuple[float, float, float]:
    """Per-agent following reward r = scale * (e_cossim + dist_weight * e_dist).

    e_cossim: cosine similarity between the agent's displacement and the
    vector from the nearest to the second-nearest waypoint (nearest measured
    from the new position). e_dist: negated distance to the nearest waypoint,
    so sitting on a waypoint scores 0 and drifting away scores negative.
    Degenerate directions (no motion, coincident waypoints) give e_cossim 0.
    """
    wp = np.asarray(waypoints, dtype=np.float64)
    if wp.ndim != 2 or wp.shape[0] < 1:
        raise ValueError("waypoints must be a nonempty (K, 2) array")
    pos = np.asarray(position, dtype=np.float64)
    move = pos - np.asarray(prev_position, dtype=np.float64)

    i_near, i_second = nearest_waypoint_pair(pos, wp)
    if wp.shape[0] == 1:
        heading = wp[0] - pos
    else:
        heading = wp[i_second] - wp[i_near]

    move_norm = float(np.sqrt(move[0] ** 2 + move[1] ** 2))
    head_norm = float(np.sqrt(heading[0] ** 2 + heading[1] ** 2))
    if move_norm < _EPS or head_norm < _EPS:
        e_cossim = 0.0
    else:
        e_cossim = float(move[0] * heading[0] + move[1] * heading[1]) / (move_norm * head_norm)
        e_cossim = max(-1.0, min(1.0, e_cossim))

    diff = pos - wp[i_near]
    e_dist = -float(np.sqrt(diff[0] ** 2 + diff[1] ** 2))
    r_inst = scale * (e_cossim + dist_weight * e_dist)
    return e_cossim, e_dist, r_inst
