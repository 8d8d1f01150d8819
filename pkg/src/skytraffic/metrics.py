"""Evaluation quantities over a completed run: collision risk, effective
velocity, throughput, distance timelines, per-rank statistics.

Everything operates on an immutable RunRecord of ground-truth samples
taken at a uniform interval. Averages discard a warm-up window at the
start of the run; distance minima use the whole run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coordination import TargetScheme, mean_direct_path
from .model import Phase

DEFAULT_WARMUP_S = 60.0


@dataclass
class RunRecord:
    """Time-sampled ground truth of one run.

    Arrays are indexed [sample, agent]; targets are the ones current at the
    sample time. `arrivals` collects (time, agent id) of every target
    arrival at full resolution.
    """

    times: np.ndarray        # (S,)
    pos: np.ndarray          # (S, N, 3)
    vel: np.ndarray          # (S, N, 3)
    prev_target: np.ndarray  # (S, N, 3)
    next_target: np.ndarray  # (S, N, 3)
    rank: np.ndarray         # (N,)
    phase: np.ndarray        # (S, N) int8
    arrivals: list[tuple[float, int]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return self.pos.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1]) if len(self.times) else 0.0

    def write_csv(self, path) -> None:
        """Columnar CSV: t, id, x, y, z, vx, vy, vz, tx, ty, tz, rank, phase."""
        s, n, _ = self.pos.shape
        with open(path, "w", newline="") as f:
            f.write("t,id,x,y,z,vx,vy,vz,tx,ty,tz,rank,phase\n")
            for si in range(s):
                t = self.times[si]
                for a in range(n):
                    p = self.pos[si, a]
                    v = self.vel[si, a]
                    g = self.next_target[si, a]
                    f.write(
                        f"{t:.9g},{a},{p[0]:.9g},{p[1]:.9g},{p[2]:.9g},"
                        f"{v[0]:.9g},{v[1]:.9g},{v[2]:.9g},"
                        f"{g[0]:.9g},{g[1]:.9g},{g[2]:.9g},"
                        f"{int(self.rank[a])},{int(self.phase[si, a])}\n"
                    )


def _post_warmup(rec: RunRecord, warmup_s: float) -> np.ndarray:
    mask = rec.times >= warmup_s
    if not mask.any():
        mask = np.ones_like(rec.times, dtype=bool)
    return mask


def collision_risk(rec: RunRecord, r_coll: float,
                   warmup_s: float = DEFAULT_WARMUP_S) -> float:
    """Time-averaged fraction of ordered agent pairs closer than r_coll.

    Each unordered proximity event counts twice, matching the ordered
    double sum over pairs.
    """
    n = rec.n_agents
    if n < 2:
        raise ValueError("collision risk needs at least two agents")
    mask = _post_warmup(rec, warmup_s)
    pos = rec.pos[mask]
    per_sample = []
    for frame in pos:
        diff = frame[:, None, :] - frame[None, :, :]
        dist_sq = np.einsum("ijk,ijk->ij", diff, diff)
        below = dist_sq < r_coll * r_coll
        np.fill_diagonal(below, False)
        per_sample.append(below.sum() / (n * (n - 1)))
    return float(np.mean(per_sample))


def _effective_velocity_samples(rec: RunRecord) -> np.ndarray:
    """(S, N) per-sample signed chord-projected speeds; NaN where the chord
    is degenerate."""
    chord = rec.next_target - rec.prev_target
    chord_norm = np.linalg.norm(chord, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        chord_hat = chord / np.maximum(chord_norm, 1e-12)[:, :, None]
    proj = np.einsum("sni,sni->sn", rec.vel, chord_hat)
    ahead = np.einsum("sni,sni->sn", rec.next_target - rec.pos, chord)
    sign = np.where(ahead >= 0.0, 1.0, -1.0)
    out = proj * sign
    out[chord_norm < 1e-9] = np.nan
    return out


def effective_velocity(rec: RunRecord, warmup_s: float = DEFAULT_WARMUP_S) -> float:
    """Velocity projected on the straight route between the previous and
    next target, sign-corrected for overshoot, averaged over agents and
    time."""
    mask = _post_warmup(rec, warmup_s)
    samples = _effective_velocity_samples(rec)[mask]
    return float(np.nanmean(samples))


def per_rank_effective_velocity(rec: RunRecord,
                                warmup_s: float = DEFAULT_WARMUP_S) -> dict[int, float]:
    """Effective velocity restricted to each rank value."""
    mask = _post_warmup(rec, warmup_s)
    samples = _effective_velocity_samples(rec)[mask]
    out = {}
    for r in np.unique(rec.rank):
        cols = rec.rank == r
        out[int(r)] = float(np.nanmean(samples[:, cols]))
    return out


def throughput(v_eff: float, scheme: TargetScheme, n: int) -> float:
    """Fleet target arrivals per second: v_eff / <l> * N."""
    if v_eff < 0.0:
        raise ValueError("throughput expects a non-negative effective velocity")
    return v_eff / mean_direct_path(scheme) * n


def arrival_rate(rec: RunRecord, warmup_s: float = DEFAULT_WARMUP_S) -> float:
    """Directly counted arrivals per second after warm-up (the independent
    check of the throughput formula)."""
    horizon = rec.duration - warmup_s
    if horizon <= 0.0:
        raise ValueError("run shorter than the warm-up window")
    count = sum(1 for t, _ in rec.arrivals if t >= warmup_s)
    return count / horizon


def min_distance_timeline(rec: RunRecord) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-sample global minimum pairwise distance.

    Returns (times, min distance series, run minimum) over the whole run,
    warm-up included: safety has no grace period.
    """
    n = rec.n_agents
    if n < 2:
        raise ValueError("min distance needs at least two agents")
    mins = np.empty(len(rec.times))
    for si, frame in enumerate(rec.pos):
        diff = frame[:, None, :] - frame[None, :, :]
        dist_sq = np.einsum("ijk,ijk->ij", diff, diff)
        np.fill_diagonal(dist_sq, np.inf)
        mins[si] = np.sqrt(dist_sq.min())
    return rec.times.copy(), mins, float(mins.min())


def summarize(rec: RunRecord, scheme: TargetScheme, r_coll: float,
              warmup_s: float = DEFAULT_WARMUP_S) -> dict:
    """One metrics row for a run."""
    v_eff = effective_velocity(rec, warmup_s)
    row = {
        "n_agents": rec.n_agents,
        "duration_s": rec.duration,
        "v_eff": v_eff,
        "throughput": throughput(max(v_eff, 0.0), scheme, rec.n_agents),
        "arrival_rate": arrival_rate(rec, warmup_s) if rec.duration > warmup_s else float("nan"),
        "collision_risk": collision_risk(rec, r_coll, warmup_s) if rec.n_agents > 1 else 0.0,
        "arrivals": len(rec.arrivals),
    }
    if rec.n_agents > 1:
        _, _, run_min = min_distance_timeline(rec)
        row["min_distance"] = run_min
        row["min_distance_10hz"] = rec.meta.get("min_distance_10hz", float("nan"))
    else:
        row["min_distance"] = float("nan")
        row["min_distance_10hz"] = float("nan")
    return row


def write_metrics_csv(path, rows: list[dict]) -> None:
    """One-row-per-run CSV with a stable column order."""
    if not rows:
        raise ValueError("no metric rows to write")
    keys: list[str] = []
    for row in rows:
        for k in row:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as f:
        f.write(",".join(keys) + "\n")
        for row in rows:
            vals = []
            for k in keys:
                v = row.get(k, "")
                if isinstance(v, float):
                    vals.append(f"{v:.9g}")
                else:
                    vals.append(str(v))
            f.write(",".join(vals) + "\n")
