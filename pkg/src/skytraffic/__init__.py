"""skytraffic: deterministic multi-agent simulation kit for decentralized
aerial traffic.

Agents combine a conflict-avoiding self-drive velocity with repulsion and
selective friction, under a realistic plant (reaction delay, acceleration
limit, sensing noise) and a 10 Hz range-limited lossy broadcast network.
"""

__version__ = "0.1.0"

from .coordination import (LayerConfig, TargetScheme, assign_layer,
                           effective_avoidance_radius, full_hierarchy_matrix,
                           mean_direct_path, next_target,
                           vertical_phase_velocity)
from .engine import Scenario, SweepSpec, run_scenario, run_sweep
from .interactions import (BrakingParams, braking_curve, friction_target_set,
                           friction_velocity, repulsion_direction,
                           repulsion_velocity)
from .metrics import (RunRecord, collision_risk, effective_velocity,
                      min_distance_timeline, per_rank_effective_velocity,
                      throughput)
from .model import (AgentState, Phase, PriorityMatrix, Relation,
                    TrafficParams, egalitarian_matrix)
from .plant import EnvParams, step_plant
from .comm import NeighborView, StatusMessage, neighbor_snapshot
from .selfdrive import (SelfDriveResult, ThreatAssessment, candidate_velocity,
                        compose_desired_velocity, detect_threats,
                        queueing_hold, self_drive_velocity)

__all__ = [
    "__version__",
    "AgentState", "Phase", "PriorityMatrix", "Relation", "TrafficParams",
    "egalitarian_matrix", "BrakingParams", "braking_curve",
    "repulsion_direction", "repulsion_velocity", "friction_target_set",
    "friction_velocity", "ThreatAssessment", "SelfDriveResult",
    "detect_threats", "candidate_velocity", "self_drive_velocity",
    "queueing_hold", "compose_desired_velocity", "TargetScheme",
    "LayerConfig", "next_target", "mean_direct_path", "assign_layer",
    "vertical_phase_velocity", "effective_avoidance_radius",
    "full_hierarchy_matrix", "EnvParams", "step_plant", "StatusMessage",
    "NeighborView", "neighbor_snapshot", "RunRecord", "collision_risk",
    "effective_velocity", "throughput", "min_distance_timeline",
    "per_rank_effective_velocity", "Scenario", "SweepSpec", "run_scenario",
    "run_sweep",
]
