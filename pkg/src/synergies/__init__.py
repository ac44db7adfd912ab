"""Synergy-based open-loop controllers for point-to-point reaching on a planar arm."""

from .arm import (
    ActuationSignal,
    ArmModel,
    JointState,
    Trajectory,
    forward_dynamics,
    forward_kinematics,
    inverse_dynamics,
    inverse_kinematics,
    workspace_boundary,
)
from .exploration import ExplorationArchive, ExplorationConfig, run_exploration
from .metrics import ErrorReport, forward_dynamics_error, interpolation_error, projection_error
from .reduction import ErrorMap, ProtoTask, add_proto_task, evaluate_error_map, grow_basis, reduce
from .solver import (
    BasisSet,
    CombinatorVector,
    ReachingTask,
    TaskSolution,
    compute_task_actuation,
    map_M,
    project_onto_synergies,
    solve_kinematic,
    solve_task,
)

__version__ = "0.1.0"
