"""Forward/inverse kinematics, random state sampling, and planner auto-tuning
quantities (configuration-space extent, default projections).

Multi-DOF joints (planar, floating) expand into named scalar DOFs such as
"base/x" or "base/yaw"; single-DOF joints use the joint name itself. All
distances use a weighted joint-space L2 metric with unit default weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import KinematicsError
from .geometry import (
    Pose,
    quat_from_axis_angle,
    quat_from_rpy,
    quat_mul,
    quat_rotate,
    quat_to_matrix,
    rotation_vector,
)
from .robot_model import Joint, RobotModel

TWO_PI = 2.0 * math.pi
LIMIT_SLACK = 1e-9  # float dust allowed beyond joint limits before FK complains

# workspace bounds for virtual-joint translations when none are declared
DEFAULT_WORKSPACE = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))


def normalize_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.fmod(x + math.pi, TWO_PI)
    if r <= 0.0:
        r += TWO_PI
    return r - math.pi


@dataclass(frozen=True)
class Dof:
    """One scalar degree of freedom with its sampling interval."""

    name: str
    joint: str
    lower: float
    upper: float
    wraps: bool = False  # continuous angles live on (-pi, pi]
    weight: float = 1.0

    @property
    def bounded(self) -> bool:
        return self.wraps or (math.isfinite(self.lower) and math.isfinite(self.upper))

    @property
    def span(self) -> float:
        if self.wraps:
            return TWO_PI
        return self.upper - self.lower


def joint_dofs(joint: Joint, workspace=None) -> list[Dof]:
    """Expand a joint into its scalar DOFs.

    workspace supplies (lo, hi) bounds per translation dimension for planar
    and floating joints; without it those DOFs are unbounded.
    """
    ws = workspace if workspace is not None else ((-math.inf, math.inf),) * 3
    name = joint.name
    if joint.kind in ("revolute", "prismatic"):
        lim = joint.limits
        return [Dof(name, name, lim.lower, lim.upper)]
    if joint.kind == "continuous":
        return [Dof(name, name, -math.pi, math.pi, wraps=True)]
    if joint.kind == "planar":
        return [
            Dof(f"{name}/x", name, ws[0][0], ws[0][1]),
            Dof(f"{name}/y", name, ws[1][0], ws[1][1]),
            Dof(f"{name}/theta", name, -math.pi, math.pi, wraps=True),
        ]
    if joint.kind == "floating":
        return [
            Dof(f"{name}/x", name, ws[0][0], ws[0][1]),
            Dof(f"{name}/y", name, ws[1][0], ws[1][1]),
            Dof(f"{name}/z", name, ws[2][0], ws[2][1]),
            Dof(f"{name}/roll", name, -math.pi, math.pi, wraps=True),
            Dof(f"{name}/pitch", name, -math.pi, math.pi, wraps=True),
            Dof(f"{name}/yaw", name, -math.pi, math.pi, wraps=True),
        ]
    return []  # fixed


@dataclass(frozen=True)
class JointGroup:
    """A resolved, ordered set of joints that planning operates on."""

    name: str
    joints: tuple[str, ...]
    links: tuple[str, ...]
    dofs: tuple[Dof, ...]
    is_chain: bool = False
    base_link: str | None = None
    tip_link: str | None = None

    def dof_names(self) -> list[str]:
        return [d.name for d in self.dofs]

    def with_weights(self, weights: dict[str, float]) -> "JointGroup":
        dofs = tuple(
            replace(d, weight=weights.get(d.name, d.weight)) for d in self.dofs
        )
        return replace(self, dofs=dofs)


def group_from_joints(
    model: RobotModel,
    name: str,
    joint_names,
    links=(),
    is_chain: bool = False,
    base_link: str | None = None,
    tip_link: str | None = None,
    workspace=None,
) -> JointGroup:
    dofs: list[Dof] = []
    for jn in joint_names:
        dofs.extend(joint_dofs(model.joint(jn), workspace))
    return JointGroup(
        name=name,
        joints=tuple(joint_names),
        links=tuple(links),
        dofs=tuple(dofs),
        is_chain=is_chain,
        base_link=base_link,
        tip_link=tip_link,
    )


def whole_robot_group(model: RobotModel, workspace=None) -> JointGroup:
    links = [model.root_link] + [j.child_link for j in model.dfs_joints()]
    return group_from_joints(
        model,
        "whole_robot",
        model.active_joints,
        links=links,
        base_link=model.root_link,
        workspace=workspace,
    )


@dataclass
class RobotState:
    """Joint positions keyed by DOF name (rad or m)."""

    positions: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.positions[name]

    def get(self, name: str, default: float | None = None):
        return self.positions.get(name, default)

    def copy(self) -> "RobotState":
        return RobotState(dict(self.positions))

    def with_values(self, updates: dict[str, float]) -> "RobotState":
        merged = dict(self.positions)
        merged.update(updates)
        return RobotState(merged)

    def vector(self, group: JointGroup) -> np.ndarray:
        try:
            return np.array([self.positions[d.name] for d in group.dofs])
        except KeyError as exc:
            raise KinematicsError(
                f"state lacks a value for '{exc.args[0]}'", element=exc.args[0]
            ) from None

    @staticmethod
    def from_vector(group: JointGroup, vec, base: "RobotState" = None) -> "RobotState":
        positions = dict(base.positions) if base is not None else {}
        for dof, v in zip(group.dofs, vec):
            positions[dof.name] = normalize_angle(float(v)) if dof.wraps else float(v)
        return RobotState(positions)

    def to_json(self) -> dict:
        return {k: float(v) for k, v in sorted(self.positions.items())}

    @staticmethod
    def from_json(data: dict) -> "RobotState":
        return RobotState({str(k): float(v) for k, v in data.items()})


@dataclass(frozen=True)
class ProjectionSpec:
    """Low-dimensional projection used to estimate coverage during planning."""

    dof_names: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not (1 <= len(self.dof_names) <= 3):
            raise KinematicsError("projection must list between 1 and 3 DOFs")
        if len(self.weights) != len(self.dof_names) or any(w <= 0 for w in self.weights):
            raise KinematicsError("projection weights must be positive, one per DOF")


@dataclass(frozen=True)
class IkParams:
    position_tolerance: float = 1e-4
    orientation_tolerance: float = 1e-3
    max_iterations: int = 200
    damping: float = 0.1
    restarts: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.position_tolerance <= 0 or self.orientation_tolerance <= 0:
            raise KinematicsError("IK tolerances must be positive")
        if self.max_iterations < 1:
            raise KinematicsError("IK needs at least one iteration")
        if self.damping <= 0:
            raise KinematicsError("IK damping must be positive")


def default_state(model: RobotModel) -> RobotState:
    """Midpoint of every bounded DOF, zero for continuous/unbounded ones."""
    positions: dict[str, float] = {}
    for jn in model.active_joints:
        for dof in joint_dofs(model.joint(jn)):
            if dof.wraps or not dof.bounded:
                positions[dof.name] = 0.0
            else:
                positions[dof.name] = 0.5 * (dof.lower + dof.upper)
    return RobotState(positions)


def _joint_value(joint: Joint, dof_name: str, state: RobotState, required: bool) -> float:
    value = state.get(dof_name)
    if value is None:
        if required:
            raise KinematicsError(
                f"state lacks a value for '{dof_name}'", element=dof_name
            )
        if joint.kind in ("revolute", "prismatic"):
            return 0.5 * (joint.limits.lower + joint.limits.upper)
        return 0.0
    return float(value)


def _check_limit(joint: Joint, dof_name: str, value: float) -> None:
    lim = joint.limits
    if lim is None or not math.isfinite(lim.lower):
        return
    if value < lim.lower - LIMIT_SLACK or value > lim.upper + LIMIT_SLACK:
        raise KinematicsError(
            f"'{dof_name}' value {value:.6g} outside limits [{lim.lower:.6g}, {lim.upper:.6g}]",
            element=dof_name,
        )


def planar_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane normal to axis."""
    axis = np.asarray(axis, dtype=float)
    ref = np.array([0.0, 1.0, 0.0]) if abs(axis[1]) <= 0.9 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(ref, axis)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


def joint_motion(joint: Joint, state: RobotState, check_limits: bool = True) -> Pose:
    """Local transform contributed by a joint's current value(s), after its origin."""
    kind = joint.kind
    if kind == "fixed":
        return Pose.identity()
    required = not joint.mimic
    if kind in ("revolute", "continuous", "prismatic"):
        q = _joint_value(joint, joint.name, state, required)
        if check_limits and kind != "continuous":
            _check_limit(joint, joint.name, q)
        axis = joint.axis_vector()
        if kind == "prismatic":
            return Pose(axis * q)
        return Pose(rotation=quat_from_axis_angle(axis, q))
    if kind == "planar":
        axis = joint.axis_vector()
        e1, e2 = planar_basis(axis)
        x = _joint_value(joint, f"{joint.name}/x", state, required)
        y = _joint_value(joint, f"{joint.name}/y", state, required)
        theta = _joint_value(joint, f"{joint.name}/theta", state, required)
        return Pose(x * e1 + y * e2, quat_from_axis_angle(axis, theta))
    if kind == "floating":
        xyz = [
            _joint_value(joint, f"{joint.name}/{k}", state, required) for k in "xyz"
        ]
        rpy = [
            _joint_value(joint, f"{joint.name}/{k}", state, required)
            for k in ("roll", "pitch", "yaw")
        ]
        return Pose(np.asarray(xyz), quat_from_rpy(*rpy))
    raise KinematicsError(f"unsupported joint kind '{kind}'", element=joint.name)


def forward_kinematics(
    model: RobotModel,
    state: RobotState,
    root_pose: Pose | None = None,
    check_limits: bool = True,
) -> dict[str, Pose]:
    """World pose of every link. The root takes root_pose (default identity)."""
    poses: dict[str, Pose] = {model.root_link: root_pose or Pose.identity()}
    for joint in model.dfs_joints():
        parent = poses[joint.parent_link]
        motion = joint_motion(joint, state, check_limits)
        poses[joint.child_link] = parent.compose(joint.origin).compose(motion)
    return poses


def _dof_twists(
    joint: Joint, frame: Pose, state: RobotState
) -> list[tuple[str, np.ndarray, np.ndarray, np.ndarray | None]]:
    """Per-DOF (name, linear, angular, center) world-frame twist generators.

    frame is the joint's pre-motion world frame (parent pose ∘ origin).
    center is the rotation center for angular DOFs, None for pure translations.
    """
    r = quat_to_matrix(frame.rotation)
    kind = joint.kind
    if kind in ("revolute", "continuous"):
        axis_w = r @ joint.axis_vector()
        return [(joint.name, None, axis_w, frame.translation)]
    if kind == "prismatic":
        axis_w = r @ joint.axis_vector()
        return [(joint.name, axis_w, np.zeros(3), None)]
    if kind == "planar":
        axis = joint.axis_vector()
        e1, e2 = planar_basis(axis)
        x = state.get(f"{joint.name}/x", 0.0)
        y = state.get(f"{joint.name}/y", 0.0)
        center = frame.transform_point(x * e1 + y * e2)
        return [
            (f"{joint.name}/x", r @ e1, np.zeros(3), None),
            (f"{joint.name}/y", r @ e2, np.zeros(3), None),
            (f"{joint.name}/theta", None, r @ axis, center),
        ]
    if kind == "floating":
        xyz = np.array([state.get(f"{joint.name}/{k}", 0.0) for k in "xyz"])
        rpy = [state.get(f"{joint.name}/{k}", 0.0) for k in ("roll", "pitch", "yaw")]
        center = frame.transform_point(xyz)
        roll, pitch, yaw = rpy
        cz, sz = math.cos(yaw), math.sin(yaw)
        cy, sy = math.cos(pitch), math.sin(pitch)
        # extrinsic XYZ: R = Rz(yaw) Ry(pitch) Rx(roll)
        w_yaw = np.array([0.0, 0.0, 1.0])
        w_pitch = np.array([-sz, cz, 0.0])  # Rz @ y_hat
        w_roll = np.array([cz * cy, sz * cy, -sy])  # Rz Ry @ x_hat
        out = [
            (f"{joint.name}/x", r @ np.array([1.0, 0.0, 0.0]), np.zeros(3), None),
            (f"{joint.name}/y", r @ np.array([0.0, 1.0, 0.0]), np.zeros(3), None),
            (f"{joint.name}/z", r @ np.array([0.0, 0.0, 1.0]), np.zeros(3), None),
            (f"{joint.name}/roll", None, r @ w_roll, center),
            (f"{joint.name}/pitch", None, r @ w_pitch, center),
            (f"{joint.name}/yaw", None, r @ w_yaw, center),
        ]
        return out
    return []


def jacobian(
    model: RobotModel,
    group: JointGroup,
    state: RobotState,
    tip_link: str | None = None,
) -> np.ndarray:
    """6×n geometric Jacobian of tip_link in the world frame at the tip origin.

    Rows are linear (m/rad) then angular (rad/rad); columns follow group.dofs.
    DOFs of joints not on the root-to-tip chain contribute zero columns.
    """
    tip = tip_link or group.tip_link
    if tip is None:
        raise KinematicsError(f"group '{group.name}' has no tip link")
    if not model.has_link(tip):
        raise KinematicsError(f"unknown tip link '{tip}'", element=tip)
    chain = model.chain_to_root(tip)
    group_joint_names = set(group.joints)
    if group.joints and not any(j.name in group_joint_names for j in chain):
        raise KinematicsError(
            f"tip link '{tip}' is not reachable through the joints of group '{group.name}'",
            element=tip,
        )

    poses = forward_kinematics(model, state, check_limits=False)
    p_tip = poses[tip].translation
    col_index = {d.name: i for i, d in enumerate(group.dofs)}
    jac = np.zeros((6, len(group.dofs)))

    for joint in chain:
        if joint.name not in group_joint_names or joint.kind == "fixed":
            continue
        frame = poses[joint.parent_link].compose(joint.origin)
        for dof_name, linear, angular, center in _dof_twists(joint, frame, state):
            if dof_name not in col_index:
                continue
            i = col_index[dof_name]
            if linear is not None:
                jac[0:3, i] = linear
            else:
                jac[0:3, i] = np.cross(angular, p_tip - center)
            jac[3:6, i] = angular
    # group joints off the chain keep their zero columns
    return jac


def sample_random_state(
    model: RobotModel,
    group: JointGroup,
    rng: np.random.Generator,
    base: RobotState | None = None,
) -> RobotState:
    """Uniform sample of the group's DOFs; other DOFs come from base/defaults."""
    state = (base.copy() if base is not None else default_state(model))
    for dof in group.dofs:
        if dof.wraps:
            state.positions[dof.name] = normalize_angle(rng.uniform(-math.pi, math.pi))
        elif dof.bounded:
            state.positions[dof.name] = rng.uniform(dof.lower, dof.upper)
        else:
            raise KinematicsError(
                f"DOF '{dof.name}' is unbounded; declare workspace bounds before sampling",
                element=dof.name,
            )
    return state


def space_extent(group: JointGroup) -> float:
    """Diameter of the group's configuration box under the weighted L2 metric."""
    total = 0.0
    for dof in group.dofs:
        if not dof.bounded:
            raise KinematicsError(
                f"DOF '{dof.name}' is unbounded; space extent is undefined",
                element=dof.name,
            )
        total += dof.weight * dof.span**2
    return math.sqrt(total)


def distance(group: JointGroup, a: RobotState, b: RobotState) -> float:
    """Weighted joint-space L2 distance over the group's DOFs."""
    total = 0.0
    for dof in group.dofs:
        d = a[dof.name] - b[dof.name]
        total += dof.weight * d * d
    return math.sqrt(total)


def interpolate(group: JointGroup, a: RobotState, b: RobotState, t: float) -> RobotState:
    """Straight-line interpolation of the group DOFs (others copied from a)."""
    state = a.copy()
    for dof in group.dofs:
        state.positions[dof.name] = (1.0 - t) * a[dof.name] + t * b[dof.name]
    return state


def default_projection(model: RobotModel, group: JointGroup) -> ProjectionSpec:
    """Project onto the first DOFs of the group, the ones closest to the base."""
    if not group.dofs:
        raise KinematicsError(f"group '{group.name}' resolves to no DOFs")
    k = min(2, len(group.dofs))
    names = tuple(d.name for d in group.dofs[:k])
    return ProjectionSpec(names, (1.0,) * k)


def project(state: RobotState, spec: ProjectionSpec) -> tuple[float, ...]:
    return tuple(state[n] for n in spec.dof_names)


def _pose_error(current: Pose, target: Pose) -> np.ndarray:
    pos = target.translation - current.translation
    ori = rotation_vector(quat_mul(target.rotation, _quat_inv(current.rotation)))
    return np.concatenate([pos, ori])


def _quat_inv(q: np.ndarray) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def _clamp_to_dofs(q: np.ndarray, dofs) -> np.ndarray:
    out = q.copy()
    for i, dof in enumerate(dofs):
        if dof.wraps:
            out[i] = normalize_angle(out[i])
        elif dof.bounded:
            out[i] = min(max(out[i], dof.lower), dof.upper)
    return out


def solve_ik(
    model: RobotModel,
    group: JointGroup,
    target: Pose,
    seed: RobotState,
    params: IkParams | None = None,
) -> RobotState | None:
    """Damped-least-squares IK for a serial chain group.

    params.damping seeds an adaptive damping factor (lowered while the error
    shrinks, raised when it stalls). An attempt that stops improving restarts
    from a random in-limit state, up to the restart count. Returns None when
    no solution lands within tolerances inside the budget.
    """
    params = params or IkParams()
    if not group.is_chain or group.tip_link is None:
        raise KinematicsError(
            f"IK requires a serial chain group; '{group.name}' is not one"
        )
    dofs = group.dofs
    rng = np.random.default_rng(params.rng_seed)
    q = _clamp_to_dofs(seed.vector(group), dofs)
    base = seed
    stall_patience = 12

    for attempt in range(params.restarts + 1):
        if attempt > 0:
            q = np.array(
                [
                    rng.uniform(-math.pi, math.pi)
                    if d.wraps
                    else rng.uniform(d.lower, d.upper)
                    for d in dofs
                ]
            )
        lam = params.damping
        best = math.inf
        since_best = 0
        for _ in range(params.max_iterations):
            state = RobotState.from_vector(group, q, base=base)
            poses = forward_kinematics(model, state, check_limits=False)
            err = _pose_error(poses[group.tip_link], target)
            if (
                np.linalg.norm(err[:3]) <= params.position_tolerance
                and np.linalg.norm(err[3:]) <= params.orientation_tolerance
            ):
                return state
            err_norm = float(np.linalg.norm(err))
            if err_norm < best - 1e-12:
                best = err_norm
                since_best = 0
                lam = max(lam * 0.7, 1e-4)
            else:
                since_best += 1
                lam = min(lam * 2.0, 1.0)
                if since_best >= stall_patience:
                    break  # stalled; restart
            jac = jacobian(model, group, state, group.tip_link)
            a = jac @ jac.T + lam * lam * np.eye(6)
            dq = jac.T @ np.linalg.solve(a, err)
            step = np.max(np.abs(dq))
            if step > 1.0:
                dq *= 1.0 / step
            if step < 1e-12:
                break
            q = _clamp_to_dofs(q + dq, dofs)
    return None
