# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython simulation kernel.

Compiled twin of `_kernel_py`; the arithmetic mirrors that module
operation-for-operation so the two backends are bit-identical.
"""

from libc.math cimport sqrt, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

ACTION_DIRS = ((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))
N_ACTIONS = len(ACTION_DIRS)

cdef double _EPS = 1e-12

cdef double _DIR_X[5]
cdef double _DIR_Y[5]
_DIR_X[0] = 0.0; _DIR_Y[0] = 0.0
_DIR_X[1] = 1.0; _DIR_Y[1] = 0.0
_DIR_X[2] = -1.0; _DIR_Y[2] = 0.0
_DIR_X[3] = 0.0; _DIR_Y[3] = 1.0
_DIR_X[4] = 0.0; _DIR_Y[4] = -1.0


cdef inline double _clamp(double x, double lo, double hi) nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef inline void _follow_errors(double px, double py, double qx, double qy,
                                double[:, :] waypoints,
                                double* e_cossim, double* e_dist) nogil:
    cdef Py_ssize_t n_wp = waypoints.shape[0]
    cdef double d1 = INFINITY
    cdef double d2 = INFINITY
    cdef Py_ssize_t i1 = -1
    cdef Py_ssize_t i2 = -1
    cdef Py_ssize_t k
    cdef double dx, dy, d, hx, hy, mx, my, move_norm, head_norm, c
    for k in range(n_wp):
        dx = qx - waypoints[k, 0]
        dy = qy - waypoints[k, 1]
        d = sqrt(dx * dx + dy * dy)
        if d < d1:
            d2 = d1
            i2 = i1
            d1 = d
            i1 = k
        elif d < d2:
            d2 = d
            i2 = k
    if n_wp == 1:
        hx = waypoints[0, 0] - qx
        hy = waypoints[0, 1] - qy
    else:
        hx = waypoints[i2, 0] - waypoints[i1, 0]
        hy = waypoints[i2, 1] - waypoints[i1, 1]
    mx = qx - px
    my = qy - py
    move_norm = sqrt(mx * mx + my * my)
    head_norm = sqrt(hx * hx + hy * hy)
    if move_norm < _EPS or head_norm < _EPS:
        c = 0.0
    else:
        c = (mx * hx + my * hy) / (move_norm * head_norm)
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
    e_cossim[0] = c
    e_dist[0] = -d1


def step_dynamics(
    double[:, :] agent_pos,
    double[:, :] agent_vel,
    cnp.uint8_t[:] carrying,
    cnp.uint8_t[:] defended,
    double[:] invader_pos,
    double[:, :] res_pos,
    cnp.uint8_t[:] res_active,
    cnp.int64_t[:] actions,
    double[:, :, :] waypoints,
    double step_size,
    double half_extent,
    double contact_radius,
    double home_radius,
    double home_x,
    double home_y,
    double invader_speed,
    double[:] e_cossim_out,
    double[:] e_dist_out,
):
    cdef Py_ssize_t n = agent_pos.shape[0]
    cdef Py_ssize_t m = res_pos.shape[0]
    cdef Py_ssize_t i, j
    cdef double px, py, qx, qy, dx, dy, ix, iy, hx, hy, hd, adv
    cdef int n_picks = 0, n_collects = 0, n_defenses = 0, n_breaches = 0
    cdef bint invader_respawn = False, hit = False
    picked = []

    for i in range(n):
        defended[i] = 0
        px = agent_pos[i, 0]
        py = agent_pos[i, 1]
        qx = _clamp(px + _DIR_X[actions[i]] * step_size, -half_extent, half_extent)
        qy = _clamp(py + _DIR_Y[actions[i]] * step_size, -half_extent, half_extent)
        agent_vel[i, 0] = qx - px
        agent_vel[i, 1] = qy - py
        agent_pos[i, 0] = qx
        agent_pos[i, 1] = qy
        _follow_errors(px, py, qx, qy, waypoints[i], &e_cossim_out[i], &e_dist_out[i])

    ix = invader_pos[0]
    iy = invader_pos[1]
    hx = home_x - ix
    hy = home_y - iy
    hd = sqrt(hx * hx + hy * hy)
    if hd > _EPS:
        adv = invader_speed if invader_speed < hd else hd
        ix = _clamp(ix + hx / hd * adv, -half_extent, half_extent)
        iy = _clamp(iy + hy / hd * adv, -half_extent, half_extent)
        invader_pos[0] = ix
        invader_pos[1] = iy

    for j in range(m):
        if not res_active[j]:
            continue
        for i in range(n):
            if carrying[i]:
                continue
            dx = agent_pos[i, 0] - res_pos[j, 0]
            dy = agent_pos[i, 1] - res_pos[j, 1]
            if sqrt(dx * dx + dy * dy) <= contact_radius:
                carrying[i] = 1
                res_active[j] = 0
                picked.append(j)
                n_picks += 1
                break

    for i in range(n):
        if not carrying[i]:
            continue
        dx = agent_pos[i, 0] - home_x
        dy = agent_pos[i, 1] - home_y
        if sqrt(dx * dx + dy * dy) <= home_radius:
            carrying[i] = 0
            n_collects += 1

    for i in range(n):
        dx = agent_pos[i, 0] - ix
        dy = agent_pos[i, 1] - iy
        if sqrt(dx * dx + dy * dy) <= contact_radius:
            defended[i] = 1
            hit = True
    if hit:
        n_defenses = 1
        invader_respawn = True
    else:
        dx = ix - home_x
        dy = iy - home_y
        if sqrt(dx * dx + dy * dy) <= home_radius:
            n_breaches = 1
            invader_respawn = True

    return n_picks, n_collects, n_defenses, n_breaches, invader_respawn, picked


def observe_all(
    double[:, :] agent_pos,
    double[:, :] agent_vel,
    cnp.uint8_t[:] carrying,
    double[:] invader_pos,
    int invader_active,
    double[:, :] res_pos,
    cnp.uint8_t[:] res_active,
    double home_x,
    double home_y,
    double sense_radius,
    double[:, :] out,
):
    cdef Py_ssize_t n = agent_pos.shape[0]
    cdef Py_ssize_t m = res_pos.shape[0]
    cdef Py_ssize_t i, j, k, slot, base, cnt, ins
    cdef double ax, ay, dx, dy, d
    # scratch for nearest-first ordering within one category
    cdef double[64] sd, sdx, sdy
    cdef Py_ssize_t[64] sidx

    if n > 64 or m > 64:
        raise ValueError("compiled kernel supports at most 64 entities per category")
    out[:, :] = 0.0
    for i in range(n):
        ax = agent_pos[i, 0]
        ay = agent_pos[i, 1]
        out[i, 0] = agent_vel[i, 0]
        out[i, 1] = agent_vel[i, 1]
        out[i, 2] = 1.0 if carrying[i] else 0.0
        base = 3

        cnt = 0
        for j in range(n):
            if j == i:
                continue
            dx = agent_pos[j, 0] - ax
            dy = agent_pos[j, 1] - ay
            d = sqrt(dx * dx + dy * dy)
            if d <= sense_radius:
                ins = cnt
                while ins > 0 and (sd[ins - 1] > d or (sd[ins - 1] == d and sidx[ins - 1] > j)):
                    sd[ins] = sd[ins - 1]
                    sdx[ins] = sdx[ins - 1]
                    sdy[ins] = sdy[ins - 1]
                    sidx[ins] = sidx[ins - 1]
                    ins -= 1
                sd[ins] = d
                sdx[ins] = dx
                sdy[ins] = dy
                sidx[ins] = j
                cnt += 1
        for slot in range(cnt):
            out[i, base + 3 * slot] = sdx[slot]
            out[i, base + 3 * slot + 1] = sdy[slot]
            out[i, base + 3 * slot + 2] = 1.0
        base += 3 * (n - 1)

        cnt = 0
        for j in range(m):
            if not res_active[j]:
                continue
            dx = res_pos[j, 0] - ax
            dy = res_pos[j, 1] - ay
            d = sqrt(dx * dx + dy * dy)
            if d <= sense_radius:
                ins = cnt
                while ins > 0 and (sd[ins - 1] > d or (sd[ins - 1] == d and sidx[ins - 1] > j)):
                    sd[ins] = sd[ins - 1]
                    sdx[ins] = sdx[ins - 1]
                    sdy[ins] = sdy[ins - 1]
                    sidx[ins] = sidx[ins - 1]
                    ins -= 1
                sd[ins] = d
                sdx[ins] = dx
                sdy[ins] = dy
                sidx[ins] = j
                cnt += 1
        for slot in range(cnt):
            out[i, base + 3 * slot] = sdx[slot]
            out[i, base + 3 * slot + 1] = sdy[slot]
            out[i, base + 3 * slot + 2] = 1.0
        base += 3 * m

        if invader_active:
            dx = invader_pos[0] - ax
            dy = invader_pos[1] - ay
            if sqrt(dx * dx + dy * dy) <= sense_radius:
                out[i, base] = dx
                out[i, base + 1] = dy
                out[i, base + 2] = 1.0
        base += 3

        dx = home_x - ax
        dy = home_y - ay
        if sqrt(dx * dx + dy * dy) <= sense_radius:
            out[i, base] = dx
            out[i, base + 1] = dy
            out[i, base + 2] = 1.0
