"""Scalar hot-path kernels for the decision loop.

Compiled with numba when it is installed (the default environment), plain
Python otherwise; both paths run the same source. Everything here is
float64 scalar/flat-array math with no allocation in the inner loops.
"""
from __future__ import annotations

import math

import numpy as np

_TINY = 1e-12
_FEAS_TOL = 1e-9


def _braking(d: float, offset_r: float, gain_p: float, accel_a: float) -> float:
    x = d - offset_r
    if x < 0.0:
        return 0.0
    if x <= accel_a / (gain_p * gain_p):
        return gain_p * x
    return math.sqrt(2.0 * accel_a * x - accel_a * accel_a / (gain_p * gain_p))


def _threat_scan(vx, vy, relx, rely, dist, nvx, nvy, radius, t_plan,
                 p_avoid, a_avoid, threat, ttc, side):
    """Danger tests per pair; fills threat/ttc/side in place."""
    for k in range(dist.shape[0]):
        d = dist[k]
        if d < 1e-9:
            threat[k] = True
            ttc[k] = 0.0
            side[k] = 1.0
            continue
        nx = relx[k] / d
        ny = rely[k] / d
        dvx = vx[k] - nvx[k]
        dvy = vy[k] - nvy[k]
        dv_sq = dvx * dvx + dvy * dvy
        dv_n = dvx * nx + dvy * ny
        cr = nx * dvy - ny * dvx
        side[k] = 1.0 if cr >= 0.0 else -1.0
        if dv_sq > 0.0:
            ttc[k] = max(d - radius[k], 0.0) / math.sqrt(dv_sq)
        else:
            ttc[k] = np.inf
        threat[k] = False
        if dv_n <= 0.0:
            continue
        m = radius[k] / d
        if m > 1.0:
            m = 1.0
        if dv_n * dv_n <= (1.0 - m * m) * dv_sq:
            continue  # relative velocity clears the tangent cone
        if dv_n <= _braking(d, radius[k], p_avoid, a_avoid):
            continue  # slow enough to brake out of it
        if vx[k] * nx + vy[k] * ny <= 0.0:
            continue  # not this agent's doing
        if ttc[k] >= t_plan[k]:
            continue  # beyond the planning horizon
        threat[k] = True


def _candidate_opt(vpx, vpy, vkx, vky, nx, ny, dist, radius, side,
                   p_avoid, a_avoid):
    """Best next candidate against one threat: maximize the dot product
    with the previous candidate over the admissible region. Returns
    (x, y, feasible)."""
    s_prev = math.hypot(vpx, vpy)
    d_allow = _braking(dist, radius, p_avoid, a_avoid)
    sin_a = radius / dist if dist > _TINY else 1.0
    if sin_a > 1.0:
        sin_a = 1.0
    cos_a = math.sqrt(max(1.0 - sin_a * sin_a, 0.0))

    # previous candidate already admissible -> keep it
    if _feas(vpx, vpy, vkx, vky, nx, ny, cos_a, side, s_prev, d_allow):
        return vpx, vpy, True

    cand_x = np.empty(6)
    cand_y = np.empty(6)
    n_cand = 0

    # wedge boundary rays from the apex at the neighbor velocity: the
    # tangent-cone edge on the kept side, and straight away from the threat
    tangent_x = cos_a * nx - side * sin_a * ny
    tangent_y = side * sin_a * nx + cos_a * ny
    for ray_sel in range(2):
        if ray_sel == 0:
            rx, ry = tangent_x, tangent_y
        else:
            rx, ry = -nx, -ny
        b = vkx * rx + vky * ry
        cc = vkx * vkx + vky * vky - s_prev * s_prev
        disc = b * b - cc
        if disc < 0.0:
            continue
        root = math.sqrt(disc)
        t_lo = -b - root
        t_hi = -b + root
        ray_n = rx * nx + ry * ny
        rhs = d_allow - (vkx * nx + vky * ny)
        if -_TINY < ray_n < _TINY:
            if rhs < -_FEAS_TOL:
                continue
        elif ray_n > 0.0:
            t4 = rhs / ray_n
            if t4 < t_hi:
                t_hi = t4
        else:
            t4 = rhs / ray_n
            if t4 > t_lo:
                t_lo = t4
        if t_lo < 0.0:
            t_lo = 0.0
        if t_lo > t_hi:
            continue
        cand_x[n_cand] = vkx + t_lo * rx
        cand_y[n_cand] = vky + t_lo * ry
        n_cand += 1
        cand_x[n_cand] = vkx + t_hi * rx
        cand_y[n_cand] = vky + t_hi * ry
        n_cand += 1
    # speed circle clipped by the braking half-plane
    if abs(d_allow) <= s_prev:
        q = math.sqrt(max(s_prev * s_prev - d_allow * d_allow, 0.0))
        cand_x[n_cand] = d_allow * nx - q * ny
        cand_y[n_cand] = d_allow * ny + q * nx
        n_cand += 1
        cand_x[n_cand] = d_allow * nx + q * ny
        cand_y[n_cand] = d_allow * ny - q * nx
        n_cand += 1

    best_x = 0.0
    best_y = 0.0
    best_f = -np.inf
    found = False
    for i in range(n_cand):
        x = cand_x[i]
        y = cand_y[i]
        if _feas(x, y, vkx, vky, nx, ny, cos_a, side, s_prev, d_allow):
            f = x * vpx + y * vpy
            if f > best_f:
                best_f = f
                best_x = x
                best_y = y
                found = True
    if not found:
        return 0.0, 0.0, False
    return best_x, best_y, True


def _feas(x, y, vkx, vky, nx, ny, cos_a, side, s_prev, d_allow):
    ux = x - vkx
    uy = y - vky
    un = math.hypot(ux, uy)
    if un > _TINY and (ux * nx + uy * ny) > un * cos_a + _FEAS_TOL:
        return False  # still inside the collision cone
    if (nx * uy - ny * ux) * side < -_FEAS_TOL:
        return False  # would swap the passing side
    if math.hypot(x, y) > s_prev + _FEAS_TOL:
        return False  # would speed up
    if (x * nx + y * ny) > d_allow + _FEAS_TOL:
        return False  # approach component over the braking envelope
    return True


try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    _braking = njit(cache=True, fastmath=False)(_braking)
    _feas = njit(cache=True, fastmath=False)(_feas)
    _threat_scan = njit(cache=True, fastmath=False)(_threat_scan)
    _candidate_opt = njit(cache=True, fastmath=False)(_candidate_opt)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

braking_scalar = _braking
threat_scan = _threat_scan
candidate_opt_scalar = _candidate_opt
