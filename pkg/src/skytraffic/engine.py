"""World engine: the phase loop (broadcast -> decide -> integrate) plus
scenario construction and batch execution across seeds and sweep axes.

A run is single-threaded and fully determined by its scenario and seed;
sweeps parallelize across runs, so results are bit-identical for any
worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import comm
from .coordination import (LayerConfig, TargetScheme, assign_layer,
                           full_hierarchy_matrix, next_target,
                           pair_radii_and_friction)
from .interactions import braking_curve_arr, friction_terms, repulsion_terms
from .metrics import RunRecord, summarize
from .model import Phase, PriorityMatrix, TrafficParams, egalitarian_matrix
from .plant import CommandBuffer, EnvParams, plant_step_arrays
from .selfdrive import SelfDriveBatch, queue_holds, self_drive_batch

GRID_ACTIVATION_N = 500  # all-pairs below, uniform-grid pair finding above
_TINY = 1e-12


class ScenarioError(ValueError):
    """Scenario failed validation; `violations` lists every problem."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class Scenario:
    n_agents: int
    scheme: TargetScheme
    params: TrafficParams = field(default_factory=TrafficParams)
    env: EnvParams = field(default_factory=EnvParams)
    layers: LayerConfig = field(default_factory=LayerConfig)
    priority: object = "egalitarian"   # "egalitarian" | "full" | PriorityMatrix
    desired_speed: object = 8.0        # scalar | (lo, hi) ramp | per-agent list
    duration_s: float = 600.0
    seed: int = 0
    no_interactions: bool = False
    neighbor_index: str = "auto"       # "auto" | "dense" | "grid"
    sample_dt: float = 1.0
    # optional pinned initial conditions (tests, staged encounters);
    # None -> uniform random placement with scheme-drawn first targets
    initial_positions: object = None   # (N, 2) or (N, 3)
    initial_targets: object = None     # (N, 2) or (N, 3)

    def desired_speeds(self) -> np.ndarray:
        ds = self.desired_speed
        if isinstance(ds, (int, float)):
            return np.full(self.n_agents, float(ds))
        ds = np.asarray(ds, dtype=float)
        if ds.shape == (2,) and self.n_agents != 2:
            return np.linspace(ds[0], ds[1], self.n_agents)
        if ds.shape == (self.n_agents,):
            return ds.copy()
        raise ScenarioError(
            [f"desired_speed must be a scalar, a (low, high) ramp, or one value per agent; got shape {ds.shape}"]
        )

    def priority_matrix(self) -> PriorityMatrix:
        if isinstance(self.priority, PriorityMatrix):
            if self.priority.n != self.n_agents:
                raise ScenarioError(
                    [f"priority matrix is for {self.priority.n} agents, scenario has {self.n_agents}"]
                )
            return self.priority
        if self.priority == "egalitarian":
            return egalitarian_matrix(self.n_agents)
        if self.priority == "full":
            return full_hierarchy_matrix(self.n_agents)
        raise ScenarioError([f"unknown priority spec {self.priority!r}"])

    def validate(self, require_odd_layers: bool = False) -> list[str]:
        errs = []
        if self.n_agents < 1:
            errs.append(f"n_agents must be >= 1, got {self.n_agents}")
        if not self.duration_s > 0.0:
            errs.append(f"duration_s must be > 0, got {self.duration_s}")
        if not self.sample_dt > 0.0:
            errs.append(f"sample_dt must be > 0, got {self.sample_dt}")
        errs += self.scheme.validate()
        errs += self.params.validate()
        errs += self.env.validate()
        errs += self.layers.validate(require_odd=require_odd_layers)
        if self.neighbor_index not in ("auto", "dense", "grid"):
            errs.append(f"neighbor_index must be auto/dense/grid, got {self.neighbor_index!r}")
        dt = self.env.physics_dt
        for name, period in [("control_hz", 1.0 / self.env.control_hz),
                             ("broadcast_hz", 1.0 / self.env.broadcast_hz),
                             ("sample_dt", self.sample_dt)]:
            steps = period / dt
            if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
                errs.append(f"{name} period {period} is not a whole multiple of physics_dt {dt}")
        try:
            self.desired_speeds()
            self.priority_matrix()
        except ScenarioError as exc:
            errs += exc.violations
        return errs


# ---------------------------------------------------------------------------
# spatial index

class UniformGrid:
    """Uniform hash grid over the horizontal plane with cell size equal to
    the communication range; candidate pairs from the 3x3 neighborhood are
    a superset of every in-range pair."""

    def __init__(self, cell: float):
        self.cell = cell

    def candidate_pairs(self, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = positions.shape[0]
        cx = np.floor(positions[:, 0] / self.cell).astype(np.int64)
        cy = np.floor(positions[:, 1] / self.cell).astype(np.int64)
        cells: dict[tuple[int, int], list[int]] = {}
        for i in range(n):
            cells.setdefault((int(cx[i]), int(cy[i])), []).append(i)
        rcv_list, snd_list = [], []
        for (gx, gy), members in cells.items():
            neigh = []
            for ox in (-1, 0, 1):
                for oy in (-1, 0, 1):
                    neigh.extend(cells.get((gx + ox, gy + oy), ()))
            neigh_arr = np.array(neigh, dtype=np.int64)
            for i in members:
                rcv_list.append(np.full(neigh_arr.size, i, dtype=np.int64))
                snd_list.append(neigh_arr)
        if not rcv_list:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        rcv = np.concatenate(rcv_list)
        snd = np.concatenate(snd_list)
        keep = rcv != snd
        return rcv[keep], snd[keep]


# ---------------------------------------------------------------------------
# world

class _World:
    def __init__(self, sc: Scenario):
        violations = sc.validate(require_odd_layers=False)
        if violations:
            raise ScenarioError(violations)
        self.sc = sc
        self.n = sc.n_agents
        self.params = sc.params
        self.env = sc.env
        self.layers = sc.layers
        self.scheme = sc.scheme
        self.speeds = sc.desired_speeds()
        self.prio = sc.priority_matrix().codes().copy()

        root = np.random.SeedSequence(sc.seed)
        kids = root.spawn(4 + self.n)
        self.rng_init = np.random.Generator(np.random.PCG64(kids[0]))
        self.rng_comm = np.random.Generator(np.random.PCG64(kids[1]))
        self.rng_noise = np.random.Generator(np.random.PCG64(kids[2]))
        self.rng_jitter = np.random.Generator(np.random.PCG64(kids[3]))
        self.rng_target = [np.random.Generator(np.random.PCG64(k)) for k in kids[4:]]

        # placement: uniform inside the arena on the base layer, at rest
        n = self.n
        base_z = self.layers.base_altitude
        if sc.initial_positions is not None:
            init = np.asarray(sc.initial_positions, dtype=float)
            if init.shape[1] == 2:
                init = np.column_stack([init, np.full(n, base_z)])
            self.pos = init.copy()
        else:
            if self.scheme.kind == "square":
                xy = self.rng_init.uniform(0.0, self.scheme.dimension, size=(n, 2))
            else:
                r = self.scheme.dimension * np.sqrt(self.rng_init.uniform(0.0, 1.0, n))
                th = self.rng_init.uniform(0.0, 2.0 * math.pi, n)
                xy = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
            self.pos = np.column_stack([xy, np.full(n, base_z)])
        self.vel = np.zeros((n, 3))

        self.prev_target = self.pos.copy()
        self.next_target = np.empty((n, 3))
        self.layer = np.zeros(n, dtype=np.int64)
        self.phase = np.full(n, int(Phase.ASCEND), dtype=np.int8)
        fixed_tgt = None
        if sc.initial_targets is not None:
            fixed_tgt = np.asarray(sc.initial_targets, dtype=float)
        for i in range(n):
            if fixed_tgt is not None:
                tgt = fixed_tgt[i, :2]
            else:
                tgt = next_target(self.scheme, self.pos[i, :2], self.rng_target[i])
            self.next_target[i] = [tgt[0], tgt[1], base_z]
            self.layer[i] = assign_layer(self.prev_target[i, :2], tgt, self.layers)

        self.sensed_pos = self.pos.copy()
        self.sensed_vel = self.vel.copy()
        self.sensed_t = 0.0
        self.queue_flag = np.zeros(n, dtype=bool)

        # inbox: latest decoded packet per (receiver, sender)
        self.heard_t = np.full((n, n), -np.inf)
        self.heard_pos = np.zeros((n, n, 3), dtype=np.float32)
        self.heard_vel = np.zeros((n, n, 3), dtype=np.float32)
        self.heard_tgt = np.zeros((n, n, 3), dtype=np.float32)

        self.cmd_buffer = CommandBuffer(n, self.env)
        self.ctrl_tick = -1

        use_grid = sc.neighbor_index == "grid" or (
            sc.neighbor_index == "auto" and n > GRID_ACTIVATION_N
        )
        self.grid = UniformGrid(self.env.comm_range) if use_grid else None

        dt = self.env.physics_dt
        self.steps_ctrl = round(1.0 / (self.env.control_hz * dt))
        self.steps_bcast = round(1.0 / (self.env.broadcast_hz * dt))
        self.steps_sample = round(sc.sample_dt / dt)
        self.total_steps = round(sc.duration_s / dt)

        n_samples = self.total_steps // self.steps_sample + 1
        self.rec_t = np.empty(n_samples)
        self.rec_pos = np.empty((n_samples, n, 3))
        self.rec_vel = np.empty((n_samples, n, 3))
        self.rec_prev = np.empty((n_samples, n, 3))
        self.rec_next = np.empty((n_samples, n, 3))
        self.rec_phase = np.empty((n_samples, n), dtype=np.int8)
        self.rec_i = 0
        self.arrivals: list[tuple[float, int]] = []
        self.min_dist_10hz = math.inf

    # -- phases -------------------------------------------------------------

    def _sample(self, t: float) -> None:
        i = self.rec_i
        self.rec_t[i] = t
        self.rec_pos[i] = self.pos
        self.rec_vel[i] = self.vel
        self.rec_prev[i] = self.prev_target
        self.rec_next[i] = self.next_target
        self.rec_phase[i] = self.phase
        self.rec_i += 1

    def _broadcast(self, t: float) -> None:
        pairs = self.grid.candidate_pairs(self.pos) if self.grid is not None else None
        rcv, snd, dist_sq = comm.in_range_pairs(self.pos, self.env.comm_range, pairs)
        if dist_sq.size:
            self.min_dist_10hz = min(self.min_dist_10hz, math.sqrt(float(dist_sq.min())))
        if self.sc.no_interactions or rcv.size == 0:
            return
        if self.env.packet_loss_base > 0.0:
            u = self.rng_comm.random(rcv.size)
            ok = u >= self.env.packet_loss_base
            rcv, snd = rcv[ok], snd[ok]
            if rcv.size == 0:
                return
        # every packet rides through the wire codec once per sender
        msg_pos = np.empty((self.n, 3), dtype=np.float32)
        msg_vel = np.empty((self.n, 3), dtype=np.float32)
        msg_tgt = np.empty((self.n, 3), dtype=np.float32)
        for j in range(self.n):
            m = comm.StatusMessage(
                sender_id=j,
                timestamp=self.sensed_t,
                pos=self.sensed_pos[j],
                vel=self.sensed_vel[j],
                target=self.next_target[j],
                phase=Phase(int(self.phase[j])),
                layer=int(self.layer[j]),
                queueing=bool(self.queue_flag[j]),
            )
            dec = comm.StatusMessage.decode(m.encode())
            msg_pos[j] = dec.pos
            msg_vel[j] = dec.vel
            msg_tgt[j] = dec.target
        self.heard_t[rcv, snd] = self.sensed_t
        self.heard_pos[rcv, snd] = msg_pos[snd]
        self.heard_vel[rcv, snd] = msg_vel[snd]
        self.heard_tgt[rcv, snd] = msg_tgt[snd]

    def _advance_phases(self, t: float) -> None:
        """Promote vertical phases and process arrivals; repeats until the
        chain settles so zero-length phases cost no control ticks."""
        band = self.layers.cruise_band
        base_z = self.layers.base_altitude
        for _ in range(6):
            changed = False
            sz = self.sensed_pos[:, 2]
            horiz_d = np.linalg.norm(self.next_target[:, :2] - self.sensed_pos[:, :2], axis=1)
            arrived = horiz_d <= self.params.arrival_radius

            asc = self.phase == int(Phase.ASCEND)
            if asc.any():
                goal = self.layers.base_altitude + self.layer * self.layers.layer_height
                done = asc & (np.abs(sz - goal) < band)
                if done.any():
                    self.phase[done] = int(Phase.CRUISE)
                    changed = True
            dsc = self.phase == int(Phase.DESCEND)
            if dsc.any():
                done = dsc & (np.abs(sz - base_z) < band)
                if done.any():
                    self.phase[done] = int(Phase.AT_BASE)
                    changed = True
            crz = self.phase == int(Phase.CRUISE)
            hit = crz & arrived
            if hit.any():
                self.phase[hit] = int(Phase.DESCEND)
                changed = True
            atb = self.phase == int(Phase.AT_BASE)
            if atb.any():
                finish = atb & arrived
                for i in np.nonzero(finish)[0]:
                    self.arrivals.append((t, int(i)))
                    self.prev_target[i] = self.next_target[i]
                    tgt = next_target(self.scheme, self.prev_target[i, :2], self.rng_target[i])
                    self.next_target[i] = [tgt[0], tgt[1], base_z]
                    self.layer[i] = assign_layer(self.prev_target[i, :2], tgt, self.layers)
                    self.phase[i] = int(Phase.ASCEND)
                pushed = atb & ~arrived
                if pushed.any():
                    self.layer[pushed] = 0
                    self.phase[pushed] = int(Phase.CRUISE)
                if finish.any() or pushed.any():
                    changed = True
            if not changed:
                break

    def _decide(self, t: float) -> np.ndarray:
        env = self.env
        self.sensed_pos = self.pos + env.pos_noise_sigma * self.rng_noise.standard_normal((self.n, 3))
        self.sensed_vel = self.vel + env.vel_noise_sigma * self.rng_noise.standard_normal((self.n, 3))
        self.sensed_t = t
        self._advance_phases(t)

        n = self.n
        params = self.params
        to_tgt = self.next_target[:, :2] - self.sensed_pos[:, :2]
        d_tgt = np.linalg.norm(to_tgt, axis=1)
        with np.errstate(invalid="ignore"):
            tdir = np.where(d_tgt[:, None] > _TINY, to_tgt / np.maximum(d_tgt, _TINY)[:, None], 0.0)

        cruise = self.phase == int(Phase.CRUISE)
        vertical = (self.phase == int(Phase.ASCEND)) | (self.phase == int(Phase.DESCEND))

        # vertical velocity: layer-change self-drive or altitude trim
        goal_alt = np.where(
            self.phase == int(Phase.DESCEND),
            self.layers.base_altitude,
            self.layers.base_altitude + self.layer * self.layers.layer_height,
        )
        dz = goal_alt - self.sensed_pos[:, 2]
        vz = np.sign(dz) * np.minimum(
            self.layers.v_vertical,
            braking_curve_arr(np.abs(dz), 0.0, params.p_avoid, params.a_avoid),
        )

        cmd = np.zeros((n, 3))
        cmd[:, 2] = vz
        self.queue_flag[:] = False

        if self.sc.no_interactions:
            brake = braking_curve_arr(d_tgt, 0.0, params.p_avoid, params.a_avoid)
            speed = np.minimum(self.speeds, brake)
            sd = speed[:, None] * tdir
            cmd[cruise, :2] = sd[cruise]
            norms = np.linalg.norm(cmd, axis=1)
            over = norms > self.speeds
            if over.any():
                cmd[over] *= (self.speeds[over] / norms[over])[:, None]
            return cmd

        # neighbor views from the inbox, dead-reckoned to now
        age = t - self.heard_t
        fresh = age <= env.stale_timeout
        rcv, snd = np.nonzero(fresh)
        if rcv.size:
            a = age[rcv, snd][:, None]
            nbr_pos = self.heard_pos[rcv, snd].astype(float) + self.heard_vel[rcv, snd].astype(float) * a
            nbr_vel = self.heard_vel[rcv, snd].astype(float)
            nbr_tgt = self.heard_tgt[rcv, snd].astype(float)
            rel = nbr_pos[:, :2] - self.sensed_pos[rcv, :2]
            dist = np.linalg.norm(rel, axis=1)
            dz_pair = np.abs(nbr_pos[:, 2] - self.sensed_pos[rcv, 2])
            gate = dz_pair < self.layers.coupling_dz
            codes = self.prio[rcv, snd]
            radius, frict_ok = pair_radii_and_friction(codes, rel, dist, nbr_vel[:, :2], params)
        else:
            nbr_pos = np.zeros((0, 3))
            nbr_vel = np.zeros((0, 3))
            nbr_tgt = np.zeros((0, 3))
            rel = np.zeros((0, 2))
            dist = np.zeros(0)
            gate = np.zeros(0, dtype=bool)
            radius = np.zeros(0)
            frict_ok = np.zeros(0, dtype=bool)

        # queueing considers every heard neighbor regardless of layer
        holds = queue_holds(
            ids=np.arange(n),
            target_xy=self.next_target[:, :2],
            dist_to_target=d_tgt,
            pair_rcv=rcv,
            nbr_pos_xy=nbr_pos[:, :2],
            nbr_target_xy=nbr_tgt[:, :2],
            sender=snd,
            params=params,
        )

        # conflict-avoiding self-drive for cruising agents
        if cruise.any():
            kmap = np.full(n, -1, dtype=np.int64)
            cruise_ids = np.nonzero(cruise)[0]
            kmap[cruise_ids] = np.arange(cruise_ids.size)
            pm = gate & cruise[rcv]
            batch = SelfDriveBatch(
                pos_xy=self.sensed_pos[cruise_ids, :2],
                target_xy=self.next_target[cruise_ids, :2],
                v_spp=self.speeds[cruise_ids],
                hold=holds[cruise_ids],
                pair_rcv=kmap[rcv[pm]],
                nbr_pos_xy=nbr_pos[pm, :2],
                nbr_vel_xy=nbr_vel[pm, :2],
                radius=radius[pm],
                sender=snd[pm],
            )
            v_sd, _iters, _conv, _mode = self_drive_batch(batch, params)
            cmd[cruise_ids, :2] = v_sd
            self.queue_flag[cruise_ids] = holds[cruise_ids] > 0.0

        # sense-and-avoid corrections for everybody, layer-gated
        if rcv.size:
            g = np.nonzero(gate)[0]
            if g.size:
                rep = repulsion_terms(rel[g], dist[g], nbr_vel[g, :2],
                                      tdir[rcv[g]], params, rng=self.rng_jitter)
                cmd[:, 0] += np.bincount(rcv[g], weights=rep[:, 0], minlength=n)
                cmd[:, 1] += np.bincount(rcv[g], weights=rep[:, 1], minlength=n)
                gf = g[frict_ok[g]]
                if gf.size:
                    fr = friction_terms(rel[gf], dist[gf], nbr_vel[gf, :2],
                                        self.sensed_vel[rcv[gf], :2],
                                        tdir[rcv[gf]], params)
                    cmd[:, 0] += np.bincount(rcv[gf], weights=fr[:, 0], minlength=n)
                    cmd[:, 1] += np.bincount(rcv[gf], weights=fr[:, 1], minlength=n)

        norms = np.linalg.norm(cmd, axis=1)
        over = norms > self.speeds
        if over.any():
            cmd[over] *= (self.speeds[over] / norms[over])[:, None]
        return cmd

    # -- main loop ------------------------------------------------------------

    def run(self) -> RunRecord:
        dt = self.env.physics_dt
        for s in range(self.total_steps):
            t = s * dt
            if s % self.steps_sample == 0:
                self._sample(t)
            if s % self.steps_bcast == 0:
                self._broadcast(t)
            if s % self.steps_ctrl == 0:
                self.ctrl_tick = s // self.steps_ctrl
                cmd = self._decide(t)
                self.cmd_buffer.push(self.ctrl_tick, cmd)
            active_cmd = self.cmd_buffer.active(self.ctrl_tick)
            self.pos, self.vel = plant_step_arrays(self.pos, self.vel, active_cmd,
                                                   self.env.a_max, dt)
        if self.total_steps % self.steps_sample == 0:
            self._sample(self.total_steps * dt)

        rec = RunRecord(
            times=self.rec_t[: self.rec_i].copy(),
            pos=self.rec_pos[: self.rec_i].copy(),
            vel=self.rec_vel[: self.rec_i].copy(),
            prev_target=self.rec_prev[: self.rec_i].copy(),
            next_target=self.rec_next[: self.rec_i].copy(),
            rank=np.arange(self.n),
            phase=self.rec_phase[: self.rec_i].copy(),
            arrivals=self.arrivals,
            meta={
                "seed": self.sc.seed,
                "min_distance_10hz": self.min_dist_10hz if math.isfinite(self.min_dist_10hz) else float("nan"),
            },
        )
        return rec


def run_scenario(sc: Scenario) -> RunRecord:
    """Execute one scenario; deterministic for a fixed seed."""
    return _World(sc).run()


# ---------------------------------------------------------------------------
# sweeps

AXES = ("arena_size", "agent_count", "layer_count", "speed_range", "priority")


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axis: str
    values: tuple
    seeds_per_point: int = 10
    collect_per_rank: bool = False

    def validate(self) -> list[str]:
        errs = self.base.validate()
        if self.axis not in AXES:
            errs.append(f"sweep axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            errs.append("sweep needs a non-empty list of values")
        if self.seeds_per_point < 1:
            errs.append(f"seeds_per_point must be >= 1, got {self.seeds_per_point}")
        return errs


def apply_axis(base: Scenario, axis: str, value) -> Scenario:
    """Scenario at one sweep point."""
    if axis == "arena_size":
        return replace(base, scheme=replace(base.scheme, dimension=float(value)))
    if axis == "agent_count":
        # preserve the base density: side scales with sqrt(N)
        mfp = base.scheme.dimension / math.sqrt(base.n_agents)
        return replace(
            base,
            n_agents=int(value),
            scheme=replace(base.scheme, dimension=mfp * math.sqrt(int(value))),
        )
    if axis == "layer_count":
        return replace(base, layers=replace(base.layers, n_layers=int(value)))
    if axis == "speed_range":
        return replace(base, desired_speed=value)
    if axis == "priority":
        return replace(base, priority=value)
    raise ValueError(f"unknown sweep axis {axis!r}")


def _run_point(job) -> dict:
    sc, axis, value, seed = job
    from .metrics import per_rank_effective_velocity

    row = {"axis": axis, "point": value if np.isscalar(value) else str(value), "seed": seed}
    try:
        rec = run_scenario(replace(sc, seed=seed))
        row.update(summarize(rec, sc.scheme, sc.params.r_coll))
        row["_per_rank"] = per_rank_effective_velocity(rec)
        row["status"] = "ok"
    except Exception as exc:  # sweep continues; failure is data
        row["status"] = f"error: {exc}"
    return row


def run_sweep(spec: SweepSpec, parallelism: int | None = None) -> list[dict]:
    """Run the grid of (point, seed) scenarios; one metrics row per run,
    ordered by (point index, seed)."""
    violations = spec.validate()
    if violations:
        raise ScenarioError(violations)
    if parallelism is None:
        parallelism = int(os.environ.get("SKYTRAFFIC_WORKERS", "0")) or (os.cpu_count() or 1)

    jobs = []
    for value in spec.values:
        sc = apply_axis(spec.base, spec.axis, value)
        for k in range(spec.seeds_per_point):
            jobs.append((sc, spec.axis, value, spec.base.seed + k))

    if parallelism <= 1 or len(jobs) == 1:
        rows = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(_run_point, jobs, chunksize=1))
    if not spec.collect_per_rank:
        for row in rows:
            row.pop("_per_rank", None)
    return rows


def aggregate_rows(rows: list[dict], keys=("v_eff", "throughput", "collision_risk",
                                           "arrival_rate", "min_distance")) -> list[dict]:
    """Mean and standard deviation per sweep point over its seeds."""
    points: dict = {}
    for row in rows:
        if row.get("status") != "ok":
            continue
        points.setdefault(row["point"], []).append(row)
    out = []
    for point, group in points.items():
        agg = {"point": point, "n_runs": len(group)}
        for key in keys:
            vals = np.array([g[key] for g in group if key in g], dtype=float)
            if vals.size:
                agg[f"{key}_mean"] = float(vals.mean())
                agg[f"{key}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out.append(agg)
    return out
