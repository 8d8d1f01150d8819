"""Pairwise sense-and-avoid terms: repulsion, selective friction, and the
shared braking curve.

All terms act in the horizontal plane and produce instantaneous
desired-velocity contributions; nothing here integrates forces. The
module-level functions ending in `_terms` are flat pairwise kernels shared
between the per-agent operations below and the engine's batched tick loop,
so there is exactly one implementation of the math.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AgentState, TrafficParams
from .vec import Vec2, cross2, rotate_in_plane, unit, unit_from_angle

_COS_PI_4 = math.cos(math.pi / 4.0)
_COS_2PI_3 = math.cos(2.0 * math.pi / 3.0)
_COS_PI_3 = math.cos(math.pi / 3.0)
_TINY = 1e-12


@dataclass(frozen=True)
class BrakingParams:
    """Parameters of the speed-vs-distance braking envelope."""

    offset_r: float  # distance offset R where the allowed speed reaches zero, m
    gain_p: float    # linear gain p near the stop point, 1/s
    accel_a: float   # assumed constant deceleration a, m/s^2

    def __post_init__(self):
        if self.gain_p <= 0.0 or self.accel_a <= 0.0:
            raise ValueError("braking curve needs gain_p > 0 and accel_a > 0")


def braking_curve_arr(d, offset_r, gain_p: float, accel_a: float):
    """Vectorized braking envelope D(d; R, p, a).

    Zero below the offset, linear with slope p just above it, and the
    constant-deceleration square root farther out. Continuous and monotone
    non-decreasing in d.
    """
    d = np.asarray(d, dtype=float)
    x = d - offset_r
    knee = accel_a / (gain_p * gain_p)
    lin = gain_p * x
    sq = np.sqrt(np.maximum(2.0 * accel_a * x - accel_a * accel_a / (gain_p * gain_p), 0.0))
    out = np.where(x < 0.0, 0.0, np.where(x <= knee, lin, sq))
    return out


def braking_curve(d: float, bp: BrakingParams) -> float:
    """Allowed speed at distance d under the braking envelope."""
    return float(braking_curve_arr(float(d), bp.offset_r, bp.gain_p, bp.accel_a))


def repulsion_direction(phi: float, anisotropy: float, neighbor_parallel: bool) -> float:
    """Angle rho of the repulsion direction measured from the reversed
    target direction, for a neighbor seen at angle phi from the target
    direction.

    With anisotropy 0 this is the plain isotropic rho = phi. Otherwise the
    push is rotated toward the motion axis for near-parallel neighbors
    (lane forming) and toward the perpendicular for oncoming ones (evasion).
    """
    if neighbor_parallel:
        if phi <= math.pi / 2.0:
            return (1.0 - anisotropy) * phi
        return math.pi + (1.0 - anisotropy) * (phi - math.pi)
    return (1.0 - anisotropy / 2.0) * (phi - math.pi) + math.pi


def repulsion_terms(rel_xy, dist, nbr_vel_xy, tgt_dir_xy, params: TrafficParams, rng=None):
    """Per-pair repulsion contributions, (P, 2).

    rel_xy: neighbor position minus own position; dist: its norm;
    tgt_dir_xy: own unit target direction, broadcast per pair. Pairs at or
    beyond the repulsive radius contribute zero rows. Coincident pairs get
    a full-magnitude push in a seeded random direction.
    """
    rel_xy = np.atleast_2d(np.asarray(rel_xy, dtype=float))
    dist = np.atleast_1d(np.asarray(dist, dtype=float))
    nbr_vel_xy = np.atleast_2d(np.asarray(nbr_vel_xy, dtype=float))
    tgt_dir_xy = np.atleast_2d(np.asarray(tgt_dir_xy, dtype=float))
    p = dist.shape[0]
    out = np.zeros((p, 2))
    close = dist < params.r0_repulsion
    if not close.any():
        return out

    mag = params.p_rep * (params.r0_repulsion - dist)
    for k in np.nonzero(close)[0]:
        d = dist[k]
        if d < _TINY:
            if rng is None:
                rng = np.random.default_rng(0)
            ang = rng.uniform(0.0, 2.0 * math.pi)
            out[k] = params.p_rep * params.r0_repulsion * unit_from_angle(ang)
            continue
        iso = -rel_xy[k] / d  # push from neighbor toward self
        tdir = tgt_dir_xy[k]
        if tdir[0] == 0.0 and tdir[1] == 0.0:
            out[k] = mag[k] * iso
            continue
        # phi: neighbor bearing from target direction; rho measured from
        # the reversed target direction, on the same angular side as phi.
        cos_phi = float(np.dot(rel_xy[k], tdir)) / d
        phi = math.acos(min(1.0, max(-1.0, cos_phi)))
        nv = nbr_vel_xy[k]
        nvn = math.hypot(nv[0], nv[1])
        parallel = nvn > 0.0 and float(np.dot(nv, tdir)) > nvn * _COS_PI_3
        rho = repulsion_direction(phi, params.anisotropy, parallel)
        side = cross2(tdir, rel_xy[k])
        s = 1.0 if side >= 0.0 else -1.0
        out[k] = mag[k] * rotate_in_plane(-tdir, s * rho)
    return out


def repulsion_velocity(state: AgentState, neighbors, params: TrafficParams, rng=None) -> Vec2:
    """Summed repulsion term for one agent, horizontal plane."""
    from .comm import as_neighbor_arrays

    arr = as_neighbor_arrays(neighbors)
    if arr.ids.size == 0:
        return np.zeros(2)
    rel = arr.pos[:, :2] - state.pos[:2]
    dist = np.linalg.norm(rel, axis=1)
    tdir = unit(state.next_target[:2] - state.pos[:2])
    tdirs = np.broadcast_to(tdir, rel.shape)
    terms = repulsion_terms(rel, dist, arr.vel[:, :2], tdirs, params, rng=rng)
    return terms.sum(axis=0)


def friction_select(rel_xy, dist, nbr_vel_xy, tgt_dir_xy):
    """Boolean mask of neighbors friction should be applied against.

    Selection per pair: the neighbor is dangerous if it comes toward the
    agent (within pi/4 of the line of sight) and if it lies between the
    agent and its target (within 2pi/3 of the target direction). Both
    dangerous -> align; neither -> skip; exactly one -> align only when the
    neighbor's velocity does not point away (>= pi/2) from the agent's
    target direction.
    """
    rel_xy = np.atleast_2d(np.asarray(rel_xy, dtype=float))
    dist = np.atleast_1d(np.asarray(dist, dtype=float))
    nbr_vel_xy = np.atleast_2d(np.asarray(nbr_vel_xy, dtype=float))
    tgt_dir_xy = np.atleast_2d(np.asarray(tgt_dir_xy, dtype=float))

    nv_norm = np.linalg.norm(nbr_vel_xy, axis=1)
    has_t = np.einsum("ij,ij->i", tgt_dir_xy, tgt_dir_xy) > 0.0
    safe_d = np.maximum(dist, _TINY)

    # coming toward me: angle(v_j, -rel) < pi/4
    dot_va = np.einsum("ij,ij->i", nbr_vel_xy, -rel_xy)
    coming = (nv_norm > 0.0) & (dot_va > nv_norm * safe_d * _COS_PI_4)

    # lying between me and my target: angle(rel, tdir) < 2pi/3
    dot_rt = np.einsum("ij,ij->i", rel_xy, tgt_dir_xy)
    between = has_t & (dot_rt > safe_d * _COS_2PI_3)

    # aligning would drive me away from the goal: angle(v_j, tdir) >= pi/2
    dot_vt = np.einsum("ij,ij->i", nbr_vel_xy, tgt_dir_xy)
    away = (nv_norm > 0.0) & (dot_vt <= 0.0)

    one_of = coming ^ between
    return (coming & between) | (one_of & ~away)


def friction_terms(rel_xy, dist, nbr_vel_xy, self_vel_xy, tgt_dir_xy, params: TrafficParams):
    """Per-pair friction contributions, (P, 2); zero rows where inactive.

    Active pairs contribute along the relative velocity of the neighbor,
    gated by the braking envelope v_frictmax and scaled by the configured
    coupling ramp (or a pure unit step when frict_step_only is set).
    """
    rel_xy = np.atleast_2d(np.asarray(rel_xy, dtype=float))
    dist = np.atleast_1d(np.asarray(dist, dtype=float))
    nbr_vel_xy = np.atleast_2d(np.asarray(nbr_vel_xy, dtype=float))
    self_vel_xy = np.atleast_2d(np.asarray(self_vel_xy, dtype=float))
    tgt_dir_xy = np.atleast_2d(np.asarray(tgt_dir_xy, dtype=float))

    selected = friction_select(rel_xy, dist, nbr_vel_xy, tgt_dir_xy)
    out = np.zeros_like(rel_xy)
    if not selected.any():
        return out

    v_rel = nbr_vel_xy - self_vel_xy
    v_rel_mag = np.linalg.norm(v_rel, axis=1)
    v_max = np.maximum(
        params.v_friction,
        braking_curve_arr(dist, params.r_friction, params.p_friction, params.a_friction),
    )
    active = selected & (v_rel_mag > v_max)
    if not active.any():
        return out
    if params.frict_step_only:
        scale = np.ones_like(v_rel_mag)
    else:
        scale = params.frict_coupling * np.minimum(
            1.0, (v_rel_mag - v_max) / params.v_friction
        )
    w = np.where(active, scale / np.maximum(v_rel_mag, _TINY), 0.0)
    return v_rel * w[:, None]


def friction_target_set(state: AgentState, neighbors) -> list[int]:
    """Ids of the neighbors the friction term should act against."""
    from .comm import as_neighbor_arrays

    arr = as_neighbor_arrays(neighbors)
    if arr.ids.size == 0:
        return []
    rel = arr.pos[:, :2] - state.pos[:2]
    dist = np.linalg.norm(rel, axis=1)
    tdir = unit(state.next_target[:2] - state.pos[:2])
    mask = friction_select(rel, dist, arr.vel[:, :2], np.broadcast_to(tdir, rel.shape))
    return [int(i) for i in arr.ids[mask]]


def friction_velocity(state: AgentState, neighbors, params: TrafficParams) -> Vec2:
    """Summed friction term for one agent, horizontal plane.

    The caller applies the hierarchy filter first (a boss passes only the
    neighbors it is allowed to friction against).
    """
    from .comm import as_neighbor_arrays

    arr = as_neighbor_arrays(neighbors)
    if arr.ids.size == 0:
        return np.zeros(2)
    rel = arr.pos[:, :2] - state.pos[:2]
    dist = np.linalg.norm(rel, axis=1)
    tdir = unit(state.next_target[:2] - state.pos[:2])
    terms = friction_terms(
        rel,
        dist,
        arr.vel[:, :2],
        np.broadcast_to(state.vel[:2], rel.shape),
        np.broadcast_to(tdir, rel.shape),
        params,
    )
    return terms.sum(axis=0)
