"""Iterative conflict-avoiding self-drive velocity.

An agent starts from a candidate velocity pointing at its target (speed
capped by the target braking envelope and any queueing hold), detects
threatening neighbors against four danger tests, and repeatedly rotates /
shrinks the candidate against the most urgent threat until no neighbor
threatens it or the iteration budget runs out.

The batched `self_drive_batch` is the single implementation of the loop;
the per-agent operations below run it with a batch of one. The engine
feeds it flat pair arrays for the whole fleet.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .comm import as_neighbor_arrays
from .interactions import braking_curve_arr
from .model import AgentState, TrafficParams
from .vec import Vec2, cap_norm, unit

_TINY = 1e-12
_FEAS_TOL = 1e-9


class PassingSide(enum.IntEnum):
    LEFT = 1
    RIGHT = -1


class SelfDriveMode(enum.IntEnum):
    FREE = 0
    AVOIDING = 1
    TARGET_BRAKING = 2
    QUEUEING = 3
    FALLBACK = 4


@dataclass
class ThreatAssessment:
    neighbor_id: int
    time_to_conflict: float
    passing_side: PassingSide
    # geometry cached for the candidate construction
    n_hat: np.ndarray = field(default_factory=lambda: np.zeros(2))
    distance: float = 0.0
    side_sign: float = 1.0  # sign of cross(n_hat, dv_prev); +1 on exact ties


@dataclass
class SelfDriveResult:
    velocity: np.ndarray
    iterations_used: int
    converged: bool
    mode: SelfDriveMode


def compose_desired_velocity(rep, frict, selfdrive, v_max_cap: float) -> np.ndarray:
    """Sum the three velocity terms and cap the norm at the plant budget."""
    total = np.asarray(rep, dtype=float) + np.asarray(frict, dtype=float) + np.asarray(selfdrive, dtype=float)
    return cap_norm(total, v_max_cap)


# ---------------------------------------------------------------------------
# pairwise danger tests

def threat_pairs(v_xy, rel_xy, dist, nbr_vel_xy, radius, t_plan, params: TrafficParams):
    """Elementwise danger tests over flat pairs.

    v_xy is the candidate velocity of the receiving agent, broadcast per
    pair. Returns (threat mask, time to conflict, side sign); side is the
    sign of cross(n_hat, dv) with exact zero resolved to +1 so that
    perfectly frontal pairs break the tie with a fixed world-frame
    convention. Coincident pairs count as immediate threats.
    """
    v_xy = np.atleast_2d(np.asarray(v_xy, dtype=float))
    rel_xy = np.atleast_2d(np.asarray(rel_xy, dtype=float))
    dist = np.ascontiguousarray(np.atleast_1d(np.asarray(dist, dtype=float)))
    nbr_vel_xy = np.atleast_2d(np.asarray(nbr_vel_xy, dtype=float))
    radius_arr = np.ascontiguousarray(
        np.broadcast_to(np.asarray(radius, dtype=float), dist.shape))
    t_plan_arr = np.ascontiguousarray(
        np.broadcast_to(np.asarray(t_plan, dtype=float), dist.shape))

    p = dist.shape[0]
    threat = np.zeros(p, dtype=np.bool_)
    ttc = np.empty(p)
    side = np.empty(p)
    threat_scan(
        np.ascontiguousarray(v_xy[:, 0]), np.ascontiguousarray(v_xy[:, 1]),
        np.ascontiguousarray(rel_xy[:, 0]), np.ascontiguousarray(rel_xy[:, 1]),
        dist,
        np.ascontiguousarray(nbr_vel_xy[:, 0]), np.ascontiguousarray(nbr_vel_xy[:, 1]),
        radius_arr, t_plan_arr, params.p_avoid, params.a_avoid,
        threat, ttc, side,
    )
    return threat, ttc, side


def detect_threats(candidate_v: Vec2, state: AgentState, neighbors, t_plan: float,
                   radii, params: TrafficParams) -> list[ThreatAssessment]:
    """Threats the candidate velocity raises, most urgent first."""
    arr = as_neighbor_arrays(neighbors)
    if arr.ids.size == 0:
        return []
    radii = np.broadcast_to(np.asarray(radii, dtype=float), arr.ids.shape)
    rel = arr.pos[:, :2] - state.pos[:2]
    dist = np.linalg.norm(rel, axis=1)
    v = np.broadcast_to(np.asarray(candidate_v, dtype=float), rel.shape)
    threat, ttc, side = threat_pairs(v, rel, dist, arr.vel[:, :2], radii,
                                     np.full(dist.shape, t_plan), params)
    out = []
    for k in np.nonzero(threat)[0]:
        d = max(dist[k], _TINY)
        out.append(ThreatAssessment(
            neighbor_id=int(arr.ids[k]),
            time_to_conflict=float(ttc[k]),
            passing_side=PassingSide.LEFT if side[k] < 0 else PassingSide.RIGHT,
            n_hat=rel[k] / d,
            distance=float(dist[k]),
            side_sign=float(side[k]),
        ))
    out.sort(key=lambda t: (t.time_to_conflict, t.neighbor_id))
    return out


# ---------------------------------------------------------------------------
# candidate construction (C-criteria)

def candidate_opt(v_prev, v_k, n_hat, dist: float, radius: float, side: float,
                  params: TrafficParams):
    """Best next candidate velocity against one threat.

    Maximizes the dot product with the previous candidate over the convex
    admissible region: relative velocity outside the tangent cone of the
    avoidance disc (on the previously chosen side), speed not above the
    previous candidate's, and approach component under the braking
    envelope. Returns (velocity, feasible); an empty region yields a zero
    vector.
    """
    x, y, ok = candidate_opt_scalar(
        float(v_prev[0]), float(v_prev[1]), float(v_k[0]), float(v_k[1]),
        float(n_hat[0]), float(n_hat[1]), float(dist), float(radius),
        float(side), params.p_avoid, params.a_avoid,
    )
    return np.array([x, y]), ok


def candidate_velocity(prev_candidate: Vec2, threat: ThreatAssessment, neighbor,
                       radius: float, params: TrafficParams) -> Vec2:
    """Next candidate against one threatening neighbor (zero vector when the
    admissible region is empty; the caller treats that as non-convergence)."""
    nbr_vel = np.asarray(neighbor.vel, dtype=float)[:2]
    v, _ok = candidate_opt(np.asarray(prev_candidate, dtype=float), nbr_vel,
                           threat.n_hat, threat.distance, radius,
                           threat.side_sign, params)
    return v


# ---------------------------------------------------------------------------
# queueing

def queue_holds(ids, target_xy, dist_to_target, pair_rcv, nbr_pos_xy,
                nbr_target_xy, sender, params: TrafficParams) -> np.ndarray:
    """Per-agent queue hold distance (0 where no hold applies).

    An agent holds behind any heard neighbor whose target lies within
    r_avoid of its own and that is nearer to its target (distance ties go
    to the higher id: the lower id holds). The hold distance is that
    neighbor's target distance plus delta_queue; several qualifying
    neighbors take the maximum.
    """
    k = len(ids)
    hold = np.zeros(k)
    if len(pair_rcv) == 0:
        return hold
    tgt_diff = nbr_target_xy - target_xy[pair_rcv]
    tgt_close = np.einsum("ij,ij->i", tgt_diff, tgt_diff) < params.r_avoid ** 2
    if not tgt_close.any():
        return hold
    d_nbr = np.linalg.norm(nbr_target_xy - nbr_pos_xy, axis=1)
    own = dist_to_target[pair_rcv]
    nearer = (d_nbr < own) | ((d_nbr == own) & (ids[pair_rcv] < sender))
    m = tgt_close & nearer
    if not m.any():
        return hold
    np.maximum.at(hold, pair_rcv[m], d_nbr[m] + params.delta_queue)
    return hold


def queueing_hold(state: AgentState, neighbors, params: TrafficParams) -> float | None:
    """Hold distance from the own target, or None when no queueing applies."""
    arr = as_neighbor_arrays(neighbors)
    if arr.ids.size == 0:
        return None
    own_d = float(np.linalg.norm(state.next_target[:2] - state.pos[:2]))
    hold = queue_holds(
        ids=np.array([state.id]),
        target_xy=state.next_target[None, :2],
        dist_to_target=np.array([own_d]),
        pair_rcv=np.zeros(arr.ids.size, dtype=int),
        nbr_pos_xy=arr.pos[:, :2],
        nbr_target_xy=arr.target[:, :2],
        sender=arr.ids,
        params=params,
    )
    return float(hold[0]) if hold[0] > 0.0 else None


# ---------------------------------------------------------------------------
# batched iterative loop

@dataclass
class SelfDriveBatch:
    """Inputs for the self-drive loop over K agents and P directed pairs
    (pair_rcv sorted ascending; pairs already filtered to the vertically
    coupled, fresh neighbors)."""

    pos_xy: np.ndarray      # (K, 2)
    target_xy: np.ndarray   # (K, 2)
    v_spp: np.ndarray       # (K,)
    hold: np.ndarray        # (K,) queue hold distance, 0 = none
    pair_rcv: np.ndarray    # (P,) int
    nbr_pos_xy: np.ndarray  # (P, 2)
    nbr_vel_xy: np.ndarray  # (P, 2)
    radius: np.ndarray      # (P,) effective avoidance radius
    sender: np.ndarray      # (P,) sender ids (deterministic tie-breaks)


def self_drive_batch(batch: SelfDriveBatch, params: TrafficParams):
    """Run the iterative self-drive for every agent in the batch.

    Returns (velocity (K, 2), iterations (K,), converged (K,), mode (K,)).
    """
    k = batch.pos_xy.shape[0]
    to_target = batch.target_xy - batch.pos_xy
    d_t = np.linalg.norm(to_target, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        tdir = np.where(d_t[:, None] > _TINY, to_target / np.maximum(d_t, _TINY)[:, None], 0.0)

    brake_plain = braking_curve_arr(d_t, 0.0, params.p_avoid, params.a_avoid)
    speed_plain = np.minimum(batch.v_spp, brake_plain)
    brake_hold = braking_curve_arr(d_t, batch.hold, params.p_avoid, params.a_avoid)
    speed0 = np.where(batch.hold > 0.0, np.minimum(batch.v_spp, brake_hold), speed_plain)

    v = speed0[:, None] * tdir
    queue_capped = (batch.hold > 0.0) & (speed0 < speed_plain - 1e-12)
    target_braked = speed0 < batch.v_spp - 1e-12

    with np.errstate(divide="ignore", invalid="ignore"):
        t_plan = np.where(speed0 > 0.0, np.maximum(params.t_plan_floor, d_t / np.maximum(speed0, _TINY)), np.inf)
    t_plan_frozen = params.t_plan_strategy == "frozen"

    rel = batch.nbr_pos_xy - batch.pos_xy[batch.pair_rcv]
    dist = np.linalg.norm(rel, axis=1)

    active = np.ones(k, dtype=bool)
    iterations = np.zeros(k, dtype=int)
    converged = np.zeros(k, dtype=bool)
    fallback = np.zeros(k, dtype=bool)
    avoided = np.zeros(k, dtype=bool)

    rcv = batch.pair_rcv
    for step in range(params.max_selfdrive_iters + 1):
        if not active.any():
            break
        pair_on = active[rcv]
        threat = np.zeros(len(rcv), dtype=bool)
        ttc = np.full(len(rcv), np.inf)
        side = np.ones(len(rcv))
        if pair_on.any():
            idx = np.nonzero(pair_on)[0]
            th, tc, sd = threat_pairs(v[rcv[idx]], rel[idx], dist[idx],
                                      batch.nbr_vel_xy[idx], batch.radius[idx],
                                      t_plan[rcv[idx]], params)
            threat[idx] = th
            ttc[idx] = tc
            side[idx] = sd
        has_threat = np.zeros(k, dtype=bool)
        t_idx = np.nonzero(threat)[0]
        has_threat[rcv[t_idx]] = True

        # candidates that no longer make progress try pointing straight at
        # the target with the reduced magnitude; accepted only if that move
        # is itself danger-free
        prog = np.einsum("ij,ij->i", to_target, v)
        redirect = active & (prog < 0.0)
        for a in np.nonzero(redirect)[0]:
            speed = float(np.linalg.norm(v[a]))
            if speed <= _TINY:
                continue
            v_red = speed * tdir[a]
            sl = slice(*np.searchsorted(rcv, [a, a + 1]))
            th_r, _, _ = threat_pairs(np.broadcast_to(v_red, rel[sl].shape), rel[sl],
                                      dist[sl], batch.nbr_vel_xy[sl],
                                      batch.radius[sl], np.full(sl.stop - sl.start, t_plan[a]),
                                      params)
            if not th_r.any():
                v[a] = v_red
                active[a] = False
                converged[a] = True
                avoided[a] = True

        settle = active & ~has_threat
        converged[settle] = True
        active[settle] = False
        if not active.any():
            break

        if step == params.max_selfdrive_iters:
            v[active] = 0.0
            fallback[active] = True
            active[:] = False
            break

        # resolve the most urgent threat per still-active agent
        if t_idx.size:
            live = t_idx[active[rcv[t_idx]]]
            order = np.lexsort((batch.sender[live], ttc[live], rcv[live]))
            live = live[order]
            first = np.ones(live.size, dtype=bool)
            first[1:] = rcv[live[1:]] != rcv[live[:-1]]
            for p in live[first]:
                a = rcv[p]
                d = max(dist[p], _TINY)
                n_hat = rel[p] / d
                v_new, ok = candidate_opt(v[a], batch.nbr_vel_xy[p], n_hat,
                                          float(dist[p]), float(batch.radius[p]),
                                          float(side[p]), params)
                if not ok:
                    v[a] = 0.0
                    fallback[a] = True
                    active[a] = False
                    continue
                v[a] = v_new
                iterations[a] += 1
                avoided[a] = True
                if not t_plan_frozen:
                    speed = float(np.linalg.norm(v_new))
                    t_plan[a] = max(params.t_plan_floor, d_t[a] / speed) if speed > _TINY else np.inf

    mode = np.full(k, int(SelfDriveMode.FREE), dtype=np.int8)
    mode[target_braked] = int(SelfDriveMode.TARGET_BRAKING)
    mode[queue_capped] = int(SelfDriveMode.QUEUEING)
    mode[avoided] = int(SelfDriveMode.AVOIDING)
    mode[fallback] = int(SelfDriveMode.FALLBACK)
    return v, iterations, converged, mode


def self_drive_velocity(state: AgentState, neighbors, radii,
                        params: TrafficParams) -> SelfDriveResult:
    """Self-drive velocity for one agent (queueing applied internally)."""
    arr = as_neighbor_arrays(neighbors)
    m = arr.ids.size
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (m,)).astype(float)
    hold = queueing_hold(state, neighbors, params) if m else None
    batch = SelfDriveBatch(
        pos_xy=state.pos[None, :2].astype(float),
        target_xy=state.next_target[None, :2].astype(float),
        v_spp=np.array([state.desired_speed], dtype=float),
        hold=np.array([hold if hold is not None else 0.0]),
        pair_rcv=np.zeros(m, dtype=int),
        nbr_pos_xy=arr.pos[:, :2].astype(float),
        nbr_vel_xy=arr.vel[:, :2].astype(float),
        radius=radii,
        sender=arr.ids,
    )
    v, iters, conv, mode = self_drive_batch(batch, params)
    return SelfDriveResult(
        velocity=v[0],
        iterations_used=int(iters[0]),
        converged=bool(conv[0]),
        mode=SelfDriveMode(int(mode[0])),
    )
