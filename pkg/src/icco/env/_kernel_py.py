"""Pure-Python simulation kernel.

Reference implementation of the hot per-step routines. The Cython kernel
(`_kernel_cy`) mirrors this code operation-for-operation; both must produce
bit-identical results, which the parity tests assert. Keep the arithmetic
in plain scalar form so the two stay comparable.
"""

from __future__ import annotations

import math

import numpy as np

# action index -> unit direction (stay, +x, -x, +y, -y)
ACTION_DIRS = ((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))
N_ACTIONS = len(ACTION_DIRS)

_EPS = 1e-12


def _clamp(x: float, lo: float, hi: float) -> float:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


def _follow_errors(px, py, qx, qy, waypoints):
    """e_cossim, e_dist for a move from (px,py) to (qx,qy) given (K,2) waypoints."""
    n_wp = waypoints.shape[0]
    # nearest / second-nearest by distance to the new position, ties to lower index
    d1 = math.inf
    d2 = math.inf
    i1 = -1
    i2 = -1
    for k in range(n_wp):
        dx = qx - waypoints[k, 0]
        dy = qy - waypoints[k, 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < d1:
            d2, i2 = d1, i1
            d1, i1 = d, k
        elif d < d2:
            d2, i2 = d, k
    if n_wp == 1:
        hx = waypoints[0, 0] - qx
        hy = waypoints[0, 1] - qy
    else:
        hx = waypoints[i2, 0] - waypoints[i1, 0]
        hy = waypoints[i2, 1] - waypoints[i1, 1]
    mx = qx - px
    my = qy - py
    move_norm = math.sqrt(mx * mx + my * my)
    head_norm = math.sqrt(hx * hx + hy * hy)
    if move_norm < _EPS or head_norm < _EPS:
        e_cossim = 0.0
    else:
        e_cossim = (mx * hx + my * hy) / (move_norm * head_norm)
        if e_cossim > 1.0:
            e_cossim = 1.0
        elif e_cossim < -1.0:
            e_cossim = -1.0
    return e_cossim, -d1


def step_dynamics(
    agent_pos: np.ndarray,
    agent_vel: np.ndarray,
    carrying: np.ndarray,
    defended: np.ndarray,
    invader_pos: np.ndarray,
    res_pos: np.ndarray,
    res_active: np.ndarray,
    actions: np.ndarray,
    waypoints: np.ndarray,
    step_size: float,
    half_extent: float,
    contact_radius: float,
    home_radius: float,
    home_x: float,
    home_y: float,
    invader_speed: float,
    e_cossim_out: np.ndarray,
    e_dist_out: np.ndarray,
):
    """Advance dynamics and contact events in place.

    Returns (n_picks, n_collects, n_defenses, n_breaches, invader_respawn,
    picked_resource_indices). Resource respawn positions are the caller's
    responsibility (they consume RNG draws).
    """
    n = agent_pos.shape[0]
    m = res_pos.shape[0]

    # move agents, record realized displacement as velocity
    for i in range(n):
        defended[i] = 0
        dx, dy = ACTION_DIRS[actions[i]]
        px = agent_pos[i, 0]
        py = agent_pos[i, 1]
        qx = _clamp(px + dx * step_size, -half_extent, half_extent)
        qy = _clamp(py + dy * step_size, -half_extent, half_extent)
        agent_vel[i, 0] = qx - px
        agent_vel[i, 1] = qy - py
        agent_pos[i, 0] = qx
        agent_pos[i, 1] = qy
        e_cossim_out[i], e_dist_out[i] = _follow_errors(px, py, qx, qy, waypoints[i])

    # invader advances straight toward home
    ix = invader_pos[0]
    iy = invader_pos[1]
    hx = home_x - ix
    hy = home_y - iy
    hd = math.sqrt(hx * hx + hy * hy)
    if hd > _EPS:
        adv = invader_speed if invader_speed < hd else hd
        ix = _clamp(ix + hx / hd * adv, -half_extent, half_extent)
        iy = _clamp(iy + hy / hd * adv, -half_extent, half_extent)
        invader_pos[0] = ix
        invader_pos[1] = iy

    # contact events: pick -> collect -> defense
    n_picks = 0
    picked: list[int] = []
    for j in range(m):
        if not res_active[j]:
            continue
        for i in range(n):
            if carrying[i]:
                continue
            dx = agent_pos[i, 0] - res_pos[j, 0]
            dy = agent_pos[i, 1] - res_pos[j, 1]
            if math.sqrt(dx * dx + dy * dy) <= contact_radius:
                carrying[i] = 1
                res_active[j] = 0
                picked.append(j)
                n_picks += 1
                break

    n_collects = 0
    for i in range(n):
        if not carrying[i]:
            continue
        dx = agent_pos[i, 0] - home_x
        dy = agent_pos[i, 1] - home_y
        if math.sqrt(dx * dx + dy * dy) <= home_radius:
            carrying[i] = 0
            n_collects += 1

    n_defenses = 0
    n_breaches = 0
    invader_respawn = False
    hit = False
    for i in range(n):
        dx = agent_pos[i, 0] - ix
        dy = agent_pos[i, 1] - iy
        if math.sqrt(dx * dx + dy * dy) <= contact_radius:
            defended[i] = 1
            hit = True
    if hit:
        n_defenses = 1
        invader_respawn = True
    else:
        dx = ix - home_x
        dy = iy - home_y
        if math.sqrt(dx * dx + dy * dy) <= home_radius:
            n_breaches = 1
            invader_respawn = True

    return n_picks, n_collects, n_defenses, n_breaches, invader_respawn, picked


def observe_all(
    agent_pos: np.ndarray,
    agent_vel: np.ndarray,
    carrying: np.ndarray,
    invader_pos: np.ndarray,
    invader_active: int,
    res_pos: np.ndarray,
    res_active: np.ndarray,
    home_x: float,
    home_y: float,
    sense_radius: float,
    out: np.ndarray,
):
    """Fill `out` (n_agents, obs_dim) with masked relative-position observations.

    Layout per agent: [vel_x, vel_y, carrying] then [dx, dy, present] slots for
    the other agents, the resources, the invader, and home. Within a category,
    visible entities fill slots nearest-first (ties by index); entities beyond
    the sensing radius leave zeroed slots.
    """
    n = agent_pos.shape[0]
    m = res_pos.shape[0]
    out[:] = 0.0
    for i in range(n):
        ax = agent_pos[i, 0]
        ay = agent_pos[i, 1]
        out[i, 0] = agent_vel[i, 0]
        out[i, 1] = agent_vel[i, 1]
        out[i, 2] = 1.0 if carrying[i] else 0.0
        base = 3

        others = []
        for j in range(n):
            if j == i:
                continue
            dx = agent_pos[j, 0] - ax
            dy = agent_pos[j, 1] - ay
            d = math.sqrt(dx * dx + dy * dy)
            if d <= sense_radius:
                others.append((d, j, dx, dy))
        others.sort(key=lambda t: (t[0], t[1]))
        for slot, (_, _, dx, dy) in enumerate(others):
            out[i, base + 3 * slot] = dx
            out[i, base + 3 * slot + 1] = dy
            out[i, base + 3 * slot + 2] = 1.0
        base += 3 * (n - 1)

        res = []
        for j in range(m):
            if not res_active[j]:
                continue
            dx = res_pos[j, 0] - ax
            dy = res_pos[j, 1] - ay
            d = math.sqrt(dx * dx + dy * dy)
            if d <= sense_radius:
                res.append((d, j, dx, dy))
        res.sort(key=lambda t: (t[0], t[1]))
        for slot, (_, _, dx, dy) in enumerate(res):
            out[i, base + 3 * slot] = dx
            out[i, base + 3 * slot + 1] = dy
            out[i, base + 3 * slot + 2] = 1.0
        base += 3 * m

        if invader_active:
            dx = invader_pos[0] - ax
            dy = invader_pos[1] - ay
            if math.sqrt(dx * dx + dy * dy) <= sense_radius:
                out[i, base] = dx
                out[i, base + 1] = dy
                out[i, base + 2] = 1.0
        base += 3

        dx = home_x - ax
        dy = home_y - ay
        if math.sqrt(dx * dx + dy * dy) <= sense_radius:
            out[i, base] = dx
            out[i, base + 1] = dy
            out[i, base + 2] = 1.0
