"""Mission-level logic: target generation, layered flight space, and
hierarchy-dependent avoidance radii.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interactions import braking_curve_arr
from .model import AgentState, Phase, PriorityMatrix, Relation, TrafficParams
from .vec import Vec2

#: Mean direct-path length of the square-edge scheme, as a fraction of the
#: side length: the conditional mean chord between two uniform perimeter
#: points given their distance is at least a third of the side. Computed by
#: numerical integration; the test suite cross-checks it by Monte Carlo.
SQUARE_MEAN_PATH_FRACTION = 0.8609434784

#: Velocity deadband for the hierarchy solidarity test, m/s.
SOLIDARITY_DEADBAND = 1e-6


@dataclass(frozen=True)
class TargetScheme:
    """Where new targets come from: the boundary of a square arena (with a
    minimum-hop exclusion) or of a circle."""

    kind: str                      # "square" | "circle"
    dimension: float               # side length L or radius R, m
    min_path_fraction: float = 1.0 / 3.0  # square only: exclusion radius / L

    @classmethod
    def square(cls, side: float) -> "TargetScheme":
        return cls(kind="square", dimension=side)

    @classmethod
    def circle(cls, radius: float) -> "TargetScheme":
        return cls(kind="circle", dimension=radius)

    def validate(self) -> list[str]:
        errs = []
        if self.kind not in ("square", "circle"):
            errs.append(f"unknown target scheme kind {self.kind!r}")
        if not self.dimension > 0.0:
            errs.append(f"target scheme dimension must be > 0, got {self.dimension}")
        if self.kind == "square" and not 0.0 <= self.min_path_fraction < 1.0:
            errs.append(f"min_path_fraction must be in [0, 1), got {self.min_path_fraction}")
        return errs

    def arena_center(self) -> np.ndarray:
        if self.kind == "square":
            return np.array([self.dimension / 2.0, self.dimension / 2.0])
        return np.zeros(2)


def _square_perimeter_point(u: float, side: float) -> np.ndarray:
    """Point on the boundary of [0, side]^2 at perimeter coordinate
    u in [0, 4), counterclockwise from the origin."""
    e = int(u)
    f = (u - e) * side
    if e == 0:
        return np.array([f, 0.0])
    if e == 1:
        return np.array([side, f])
    if e == 2:
        return np.array([side - f, side])
    return np.array([0.0, side - f])


def next_target(scheme: TargetScheme, current: Vec2, rng: np.random.Generator) -> Vec2:
    """Draw the next target on the arena boundary.

    Square scheme: uniform per perimeter length, redrawn while the new
    point is closer than min_path_fraction * side to the current one (the
    acceptance probability is bounded well away from zero, so the loop
    terminates). Circle scheme: uniform boundary angle, no exclusion.
    """
    cur = np.asarray(current, dtype=float)[:2]
    if scheme.kind == "circle":
        ang = rng.uniform(0.0, 2.0 * math.pi)
        return scheme.dimension * np.array([math.cos(ang), math.sin(ang)])
    side = scheme.dimension
    min_d = scheme.min_path_fraction * side
    while True:
        p = _square_perimeter_point(rng.uniform(0.0, 4.0), side)
        if np.hypot(p[0] - cur[0], p[1] - cur[1]) >= min_d:
            return p


def mean_direct_path(scheme: TargetScheme) -> float:
    """Average direct-path length between successive targets, m."""
    if scheme.kind == "square":
        if abs(scheme.min_path_fraction - 1.0 / 3.0) > 1e-9:
            raise ValueError(
                "mean_direct_path is tabulated for the standard exclusion of "
                "a third of the side; measure other fractions empirically"
            )
        return SQUARE_MEAN_PATH_FRACTION * scheme.dimension
    if scheme.kind == "circle":
        return 4.0 * scheme.dimension / math.pi
    raise ValueError(f"unsupported target scheme {scheme.kind!r}")


# ---------------------------------------------------------------------------
# layered flight space

@dataclass(frozen=True)
class LayerConfig:
    """Stacked traffic layers selected by heading sector.

    Layer k flies at base_altitude + k * layer_height; layer 0 is the base
    layer and holds every target. Interactions couple two agents only when
    their vertical distance is below layer_height * overlap.
    """

    n_layers: int = 1
    layer_height: float = 10.0   # m
    overlap: float = 0.5         # fraction of layer_height that still couples
    base_altitude: float = 0.0   # m
    v_vertical: float = 1.5      # layer-change speed, m/s
    cruise_band: float = 0.5     # |dz| below which a layer counts as reached, m

    def validate(self, require_odd: bool = True) -> list[str]:
        errs = []
        if self.n_layers < 1:
            errs.append(f"n_layers must be >= 1, got {self.n_layers}")
        elif require_odd and self.n_layers % 2 == 0:
            errs.append(
                f"n_layers = {self.n_layers} is even; even layer counts pay the "
                "vertical-transit cost of the next odd count without its density "
                "benefit and are excluded (override only for cross-checks)"
            )
        if not self.layer_height > 0.0:
            errs.append(f"layer_height (h^layer) must be > 0, got {self.layer_height}")
        if not 0.0 <= self.overlap <= 1.0:
            errs.append(f"overlap (alpha) must be in [0, 1], got {self.overlap}")
        if not self.v_vertical > 0.0:
            errs.append(f"v_vertical must be > 0, got {self.v_vertical}")
        if not self.cruise_band > 0.0:
            errs.append(f"cruise_band must be > 0, got {self.cruise_band}")
        return errs

    def altitude(self, layer: int) -> float:
        return self.base_altitude + layer * self.layer_height

    @property
    def coupling_dz(self) -> float:
        return self.layer_height * self.overlap

    def layer_indices(self) -> list[int]:
        return [k if k <= self.n_layers // 2 else k - self.n_layers
                for k in range(self.n_layers)]


def assign_layer(prev_target: Vec2, next_target: Vec2, cfg: LayerConfig) -> int:
    """Layer for the leg from prev_target to next_target.

    The heading is measured clockwise from North (+y); the full circle is
    split into n_layers equal half-open sectors starting at North, mapped
    to layers 0, 1, ..., then the negative indices (for 3 layers:
    [0, 120) -> 0, [120, 240) -> 1, [240, 360) -> -1).
    """
    if cfg.n_layers == 1:
        return 0
    dx = float(next_target[0] - prev_target[0])
    dy = float(next_target[1] - prev_target[1])
    if dx == 0.0 and dy == 0.0:
        return 0
    heading = math.atan2(dx, dy) % (2.0 * math.pi)  # clockwise from North
    width = 2.0 * math.pi / cfg.n_layers
    sector = min(int(heading / width), cfg.n_layers - 1)
    return sector if sector <= cfg.n_layers // 2 else sector - cfg.n_layers


def vertical_phase_velocity(state: AgentState, cfg: LayerConfig,
                            params: TrafficParams) -> np.ndarray:
    """Purely vertical self-drive during a layer change, braking into the
    level; (0, 0, 0) once inside the cruise band."""
    if state.phase == Phase.ASCEND:
        goal = cfg.altitude(state.layer)
    elif state.phase == Phase.DESCEND:
        goal = cfg.base_altitude
    else:
        return np.zeros(3)
    dz = goal - float(state.pos[2])
    speed = min(cfg.v_vertical,
                float(braking_curve_arr(abs(dz), 0.0, params.p_avoid, params.a_avoid)))
    return np.array([0.0, 0.0, math.copysign(speed, dz) if dz != 0.0 else 0.0])


# ---------------------------------------------------------------------------
# hierarchy

def full_hierarchy_matrix(n: int) -> PriorityMatrix:
    """Strongest possible hierarchy: agent i outranks every j > i."""
    mat = PriorityMatrix(n)
    for i in range(n):
        for j in range(i + 1, n):
            mat.set(i, j, Relation.I_OVER_J)
    return mat


def pair_radii_and_friction(codes, rel_xy, dist, nbr_vel_xy,
                            params: TrafficParams):
    """Vectorized per-pair avoidance radius and friction permission for the
    receiving agent.

    codes is the priority code of (receiver, sender): +1 when the receiver
    is the boss. A boss plans with r_danger only while the subordinate has
    a positive velocity component toward it (solidarity: never rush a
    slower subordinate from behind), and never frictions against it.
    Everyone else, including every subordinate, keeps r_avoid.
    """
    codes = np.atleast_1d(np.asarray(codes))
    rel_xy = np.atleast_2d(np.asarray(rel_xy, dtype=float))
    dist = np.atleast_1d(np.asarray(dist, dtype=float))
    nbr_vel_xy = np.atleast_2d(np.asarray(nbr_vel_xy, dtype=float))

    radius = np.full(codes.shape, params.r_avoid)
    frict_ok = codes != 1
    boss = codes == 1
    if boss.any():
        safe_d = np.maximum(dist, 1e-12)
        toward = np.einsum("ij,ij->i", nbr_vel_xy, -rel_xy) / safe_d
        radius[boss & (toward > SOLIDARITY_DEADBAND)] = params.r_danger
    return radius, frict_ok


def effective_avoidance_radius(i: int, j: int, matrix: PriorityMatrix,
                               subordinate_view, self_state: AgentState,
                               params: TrafficParams) -> float:
    """Avoidance radius agent i plans with against agent j."""
    rel = matrix.relation(i, j)
    if rel != Relation.I_OVER_J:
        return params.r_avoid
    nbr_pos = np.asarray(subordinate_view.extrapolated_pos, dtype=float)[:2]
    nbr_vel = np.asarray(subordinate_view.vel, dtype=float)[:2]
    rel_xy = (nbr_pos - self_state.pos[:2])[None, :]
    dist = np.array([np.linalg.norm(rel_xy[0])])
    radius, _ = pair_radii_and_friction(np.array([1], dtype=np.int8), rel_xy,
                                        dist, nbr_vel[None, :], params)
    return float(radius[0])
