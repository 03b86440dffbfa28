"""Reach-avoid sets and safe velocity shaping for manipulators on prescribed paths."""

from .controllers import (
    BangBangPolicy,
    BoundaryPolicy,
    ConstantPolicy,
    GCurve,
    SaturationPolicy,
    SlidingPolicy,
    bang_bang_lambda,
    boundary_lambda,
    control_input,
    policy_from_config,
    saturation_lambda,
    sliding_lambda,
)
from .estimators import PolicyEstimator, ReachAvoidEstimator, check_states
from .exceptions import (
    ConfigurationError,
    DegenerateStateError,
    ExtensionFailure,
    InputError,
    ModelEvaluationError,
    OutsideSetError,
    VelShapeError,
)
from .model import LagrangianModel, TorqueLimits, builtin_two_dof, eval_dynamics, load_model
from .phase import ConstraintProfile, PhaseSystem, trig_profile
from .projection import (
    ConstantBounds,
    FunctionBounds,
    PathSpec,
    ProjectedDynamics,
    accel_bounds,
    circular_arc,
    project,
    straight_line,
    zero_inertia_feasible,
)
from .reach_avoid import (
    BoundaryCurve,
    ReachAvoidSet,
    TargetSet,
    compute_reach_avoid,
    cone_margin,
    contains,
    extend,
    partition_intervals,
)
from .scenario import Scenario, golden_scenario, load_scenario
from .simulation import SimRun, hold_admissible, simulate, traversal_time
from .time_optimal import InfeasibleProfileError, SwitchingProfile, time_optimal
from .trajectory import State, Trajectory, integrate, leftmost

__version__ = "0.1.0"
