"""Core domain types shared by every other module.

All quantities are SI (m, s, m/s, rad). Instances are treated as immutable
value objects once a run starts; the engine copies what it mutates.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class Phase(enum.IntEnum):
    """Vertical mission phase of an agent, cycling
    ASCEND -> CRUISE -> DESCEND -> AT_BASE -> ASCEND."""

    ASCEND = 0
    CRUISE = 1
    DESCEND = 2
    AT_BASE = 3


class Relation(enum.IntEnum):
    """Pairwise priority relation, stored row-over-column."""

    EQUAL = 0
    I_OVER_J = 1
    J_OVER_I = -1


@dataclass
class AgentState:
    """Kinematic state of one agent as its own decision layer sees it.

    `pos`/`vel` are the *sensed* values during a run (noise included);
    ground truth lives only in the plant and the run record.
    """

    id: int
    pos: np.ndarray          # (3,) m
    vel: np.ndarray          # (3,) m/s
    prev_target: np.ndarray  # (3,) m
    next_target: np.ndarray  # (3,) m
    layer: int = 0
    phase: Phase = Phase.CRUISE
    queueing: bool = False
    desired_speed: float = 8.0  # cruise speed magnitude, m/s


@dataclass(frozen=True)
class TrafficParams:
    """Every knob of the traffic controller.

    Defaults follow the published operating point where one exists; the
    rest are sensible placeholders and must stay configurable.
    """

    # repulsion
    r0_repulsion: float = 10.0   # repulsive zone radius R_0, m
    p_rep: float = 0.3           # repulsion linear gain, 1/s
    anisotropy: float = 0.42     # A in [0, 1]; 0 = isotropic

    # friction (velocity alignment)
    v_friction: float = 0.5      # allowed residual velocity difference, m/s
    r_friction: float = 12.0     # friction braking-curve offset R^friction, m
    p_friction: float = 2.0      # friction braking-curve gain, 1/s
    a_friction: float = 4.0      # friction braking-curve acceleration, m/s^2
    frict_coupling: float = 1.0  # C^frict scale of each active term
    frict_step_only: bool = False  # True: pure unit-step terms (no linear ramp)

    # conflict avoidance (self-drive)
    r_avoid: float = 12.0        # normal avoidance radius R^avoid, m
    r_danger: float = 5.0        # reduced radius for prioritized agents, m
    p_avoid: float = 2.0         # braking-curve gain for avoidance/targets, 1/s
    a_avoid: float = 4.0         # braking-curve acceleration for avoidance, m/s^2
    max_selfdrive_iters: int = 10
    t_plan_strategy: str = "recompute"  # "recompute" | "frozen"
    t_plan_floor: float = 1.0    # s

    # queueing
    delta_queue: float = 2.0     # extra hold distance behind the nearer agent, m
    arrival_radius: float = 1.0  # horizontal distance that counts as arrival, m

    # metrics
    r_coll: float = 3.0          # collision-risk distance, m

    def validate(self) -> list[str]:
        """Return a list of invariant violations (empty when valid)."""
        errs = []
        positive = [
            ("r0_repulsion (R_0)", self.r0_repulsion),
            ("p_rep (p^rep)", self.p_rep),
            ("v_friction (v^friction)", self.v_friction),
            ("r_friction (R^friction)", self.r_friction),
            ("p_friction (p^friction)", self.p_friction),
            ("a_friction (a^friction)", self.a_friction),
            ("r_avoid (R^avoid)", self.r_avoid),
            ("r_danger (R^danger)", self.r_danger),
            ("p_avoid (p^avoid)", self.p_avoid),
            ("a_avoid (a^avoid)", self.a_avoid),
            ("t_plan_floor", self.t_plan_floor),
            ("arrival_radius", self.arrival_radius),
            ("r_coll (r^coll)", self.r_coll),
        ]
        for name, value in positive:
            if not value > 0.0:
                errs.append(f"{name} must be > 0, got {value}")
        if not 0.0 <= self.anisotropy <= 1.0:
            errs.append(f"anisotropy (A) must be in [0, 1], got {self.anisotropy}")
        if not self.r_danger < self.r_avoid:
            errs.append(
                f"r_danger (R^danger) = {self.r_danger} must be smaller than "
                f"r_avoid (R^avoid) = {self.r_avoid}"
            )
        if self.max_selfdrive_iters < 1:
            errs.append(f"max_selfdrive_iters must be >= 1, got {self.max_selfdrive_iters}")
        if self.t_plan_strategy not in ("recompute", "frozen"):
            errs.append(f"t_plan_strategy must be 'recompute' or 'frozen', got {self.t_plan_strategy!r}")
        if self.delta_queue < 0.0:
            errs.append(f"delta_queue must be >= 0, got {self.delta_queue}")
        if self.frict_coupling < 0.0:
            errs.append(f"frict_coupling (C^frict) must be >= 0, got {self.frict_coupling}")
        return errs


class PriorityMatrix:
    """Pairwise dominance relation between agent ids 0..n-1.

    Antisymmetric by construction: setting (i, j) also sets the mirrored
    relation. Fixed for the whole run.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("PriorityMatrix needs n >= 1")
        self.n = n
        self._rel = np.zeros((n, n), dtype=np.int8)

    def set(self, i: int, j: int, relation: Relation) -> None:
        if i == j:
            if relation != Relation.EQUAL:
                raise ValueError("relation(i, i) must be EQUAL")
            return
        self._rel[i, j] = int(relation)
        self._rel[j, i] = -int(relation)

    def relation(self, i: int, j: int) -> Relation:
        return Relation(int(self._rel[i, j]))

    def codes(self) -> np.ndarray:
        """Raw (n, n) int8 table, +1 where row dominates column. Read-only."""
        view = self._rel.view()
        view.flags.writeable = False
        return view

    def is_boss(self, i: int, j: int) -> bool:
        return self._rel[i, j] == 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PriorityMatrix)
            and self.n == other.n
            and bool(np.array_equal(self._rel, other._rel))
        )

    # -- plain-text triple list: "i j relation" per line -------------------

    _TOKEN = {Relation.EQUAL: "equal", Relation.I_OVER_J: "i_over_j", Relation.J_OVER_I: "j_over_i"}
    _FROM_TOKEN = {v: k for k, v in _TOKEN.items()}

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        for i in range(self.n):
            for j in range(i + 1, self.n):
                rel = self.relation(i, j)
                if rel != Relation.EQUAL:
                    lines.append(f"{i} {j} {self._TOKEN[rel]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PriorityMatrix":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("n "):
            raise ValueError("priority file must start with a header line 'n <count>'")
        n = int(lines[0].split()[1])
        mat = cls(n)
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"bad priority line: {ln!r}")
            i, j = int(parts[0]), int(parts[1])
            if parts[2] not in cls._FROM_TOKEN:
                raise ValueError(f"unknown relation token {parts[2]!r} in line {ln!r}")
            mat.set(i, j, cls._FROM_TOKEN[parts[2]])
        return mat


def egalitarian_matrix(n: int) -> PriorityMatrix:
    """All pairs equal: nobody outranks anybody."""
    return PriorityMatrix(n)


__all__ = [
    "Phase",
    "Relation",
    "AgentState",
    "TrafficParams",
    "PriorityMatrix",
    "egalitarian_matrix",
    "replace",
    "field",
]
