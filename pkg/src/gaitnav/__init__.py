"""Reduced-order humanoid gait references, terrain modulation, depth-camera
simulation, and barrier-constrained SE(2) navigation."""

from .errors import (
    DegenerateGait,
    DimensionMismatch,
    EmptyTrace,
    GaitNavError,
    Infeasible,
    InvalidSpec,
    NoFoothold,
    OutOfBounds,
    OutOfPhase,
    ParseError,
    PlanExpired,
    TooFewSamples,
    ValidationError,
)
from .geometry import Pose3, wrap_angle
from .lip import (
    GaitFixedPoints,
    GaitParams,
    LipState,
    Se2Velocity,
    StepTargets,
    desired_step_lengths,
    gait_fixed_points,
    lip_flow,
    step_to_step,
)
from .reference import (
    StepContext,
    StepReference,
    arm_angles,
    assemble_nominal_step,
    bezier_profile,
    com_pose_nominal,
    swing_pose_nominal,
)
from .terrain import (
    BlocksSpec,
    FlatSpec,
    FootholdPolygon,
    FootholdTarget,
    SlopeSpec,
    StairsSpec,
    Terrain,
    build_foothold_index,
    generate_terrain,
    height_at,
    project_footstep,
    swing_corridor_hull,
    upper_convex_hull,
)
from .modulation import (
    generate_step_reference,
    modulate_com,
    modulate_footstep,
    modulate_swing,
    rollout_steps,
)
from .rewards import TrackingObjective, clf_reward_terms, evaluate_trace, lyapunov_value
from .depth import (
    CameraIntrinsics,
    DepthImage,
    DepthNoise,
    MeshInstance,
    apply_noise,
    nan_aware_downsample,
    pixel_rays,
    raycast_depth,
)
from .mpc import (
    EllipseObstacle,
    HalfplaneObstacle,
    MpcConfig,
    NavInput,
    NavState,
    Plan,
    dcbf_constraint,
    goal_cost,
    nav_step,
    obstacle_h,
    solve_mpc,
)
from .tracking import TrackerConfig, interpolate_plan, velocity_feedback
from .simulate import RobotState, Scenario, Trace, advance_robot, run_scenario

__version__ = "0.1.0"
