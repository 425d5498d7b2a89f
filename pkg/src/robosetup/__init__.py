"""robosetup: robot-agnostic setup and planning toolkit.

Turns a URDF robot description into a validated semantic configuration
(self-collision matrix, planning groups, poses, end effectors), auto-tuned
planner parameters, a working sampling-based planner with trajectory output,
and a benchmarking harness.
"""

from .acm import AcmGenParams, AcmJob, AcmReport, generate_acm
from .collision import (
    AllowedCollisionMatrix,
    CheckFlags,
    CollisionResult,
    PlanningSceneWorld,
    check_state,
    shapes_intersect,
    validate_motion,
)
from .confgen import ConfigBundle, GenOptions, generate_bundle, write_bundle
from .errors import ToolkitError
from .geometry import Box, ConvexMesh, Cylinder, Pose, Sphere
from .kinematics import (
    IkParams,
    JointGroup,
    ProjectionSpec,
    RobotState,
    default_projection,
    forward_kinematics,
    jacobian,
    sample_random_state,
    solve_ik,
    space_extent,
)
from .planning import (
    Facade,
    Path,
    PlanningScene,
    PlanRequest,
    PlanResult,
    PluginRegistry,
    Trajectory,
    default_registry,
    plan,
    time_parameterize,
)
from .robot_model import (
    Joint,
    Link,
    RobotModel,
    ValidationReport,
    collidable_pairs,
    parse_urdf,
    parse_urdf_file,
    validate_model,
)
from .srdf import (
    EndEffector,
    GroupState,
    PlanningGroup,
    SemanticModel,
    VirtualJoint,
    parse_srdf,
    resolve_group,
    serialize_srdf,
    validate_semantic,
)

__version__ = "0.1.0"

__all__ = [
    "AcmGenParams",
    "AcmJob",
    "AcmReport",
    "AllowedCollisionMatrix",
    "Box",
    "CheckFlags",
    "CollisionResult",
    "ConfigBundle",
    "ConvexMesh",
    "Cylinder",
    "EndEffector",
    "Facade",
    "GenOptions",
    "GroupState",
    "IkParams",
    "Joint",
    "JointGroup",
    "Link",
    "Path",
    "PlanRequest",
    "PlanResult",
    "PlanningGroup",
    "PlanningScene",
    "PlanningSceneWorld",
    "PluginRegistry",
    "Pose",
    "ProjectionSpec",
    "RobotModel",
    "RobotState",
    "SemanticModel",
    "Sphere",
    "ToolkitError",
    "Trajectory",
    "ValidationReport",
    "VirtualJoint",
    "check_state",
    "collidable_pairs",
    "default_projection",
    "default_registry",
    "forward_kinematics",
    "generate_acm",
    "generate_bundle",
    "jacobian",
    "parse_srdf",
    "parse_urdf",
    "parse_urdf_file",
    "plan",
    "resolve_group",
    "sample_random_state",
    "serialize_srdf",
    "shapes_intersect",
    "solve_ik",
    "space_extent",
    "time_parameterize",
    "validate_model",
    "validate_motion",
    "validate_semantic",
    "write_bundle",
]
