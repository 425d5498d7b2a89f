"""Plugin registry, the built-in goal-biased RRT planner, planning request
adapters (start-bound fixing, trajectory time parameterization), and the
high-level facade.

All collision queries made during planning go through the registered
collision plugin, so swapping it swaps planning behavior wholesale.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import collision as col
from . import kinematics as kin
from .collision import AllowedCollisionMatrix, CheckFlags, PlanningSceneWorld
from .errors import PlanningError, PluginError
from .geometry import Pose
from .kinematics import IkParams, JointGroup, RobotState
from .robot_model import RobotModel
from .srdf import SemanticModel, joint_group

START_CLAMP_TOL = 1e-6


class PluginRegistry:
    """Factories for swappable planning components, keyed by (kind, name)."""

    KINDS = ("planner", "ik_solver", "collision_checker", "adapter")

    def __init__(self):
        self._factories: dict[tuple[str, str], object] = {}
        self._lock = threading.Lock()

    def register(self, kind: str, name: str, factory) -> None:
        if kind not in self.KINDS:
            raise PluginError(f"unknown plugin kind '{kind}'", element=kind)
        key = (kind, name)
        with self._lock:
            if key in self._factories:
                raise PluginError(f"plugin {kind}/{name} is already registered", element=name)
            self._factories[key] = factory

    def create(self, kind: str, name: str, **kwargs):
        try:
            factory = self._factories[(kind, name)]
        except KeyError:
            raise PluginError(f"unknown plugin {kind}/{name}", element=name) from None
        return factory(**kwargs)

    def has(self, kind: str, name: str) -> bool:
        return (kind, name) in self._factories

    def names(self, kind: str) -> list[str]:
        return sorted(n for k, n in self._factories if k == kind)


@dataclass
class PlanningScene:
    """Immutable snapshot a plan call operates on."""

    model: RobotModel
    semantic: SemanticModel
    acm: AllowedCollisionMatrix | None = None
    world: PlanningSceneWorld | None = None


@dataclass
class PlanRequest:
    group: str
    start: RobotState
    goal_state: RobotState | None = None
    goal_pose: Pose | None = None
    goal_tolerance: float = 1e-3
    time_budget: float = 5.0
    planner: str = "rrt"
    planner_params: dict = field(default_factory=dict)
    resolution_fraction: float = 0.01
    rng_seed: int = 0

    def validate(self) -> None:
        if self.time_budget <= 0:
            raise PlanningError("time budget must be positive")
        if (self.goal_state is None) == (self.goal_pose is None):
            raise PlanningError("request needs exactly one goal form (joint or pose)")
        if not (0.0 < self.resolution_fraction < 1.0):
            raise PlanningError("resolution_fraction must lie in (0, 1)")


@dataclass
class Path:
    group: str
    states: list[RobotState]

    def length(self, group: JointGroup) -> float:
        return sum(
            kin.distance(group, a, b) for a, b in zip(self.states, self.states[1:])
        )


@dataclass
class PlanResult:
    success: bool
    path: Path | None = None
    trajectory: "Trajectory | None" = None
    reason: str | None = None
    solve_time: float = 0.0
    checks_performed: int = 0
    iterations: int = 0


# --- collision plugin ---------------------------------------------------------


class NativeCollisionChecker:
    """Default collision plugin: delegates to the collision module and counts
    every narrow-phase check it causes."""

    def __init__(self):
        self.checks_performed = 0

    def check_state(self, scene: PlanningScene, state: RobotState) -> bool:
        res = col.check_state(
            scene.model, state, scene.acm, scene.world, CheckFlags(boolean_only=True)
        )
        self.checks_performed += res.checks_performed
        return res.in_collision

    def validate_motion(
        self,
        scene: PlanningScene,
        group: JointGroup,
        start: RobotState,
        end: RobotState,
        resolution_fraction: float,
    ) -> tuple[bool, float | None]:
        counter = [0]
        valid, bad_t = col.validate_motion(
            scene.model,
            group,
            start,
            end,
            scene.acm,
            scene.world,
            resolution_fraction,
            counter=counter,
        )
        self.checks_performed += counter[0]
        return valid, bad_t


# --- planners -------------------------------------------------------------


class RrtPlanner:
    """Goal-biased RRT in the group's joint space.

    Uniform sampling with a goal bias, nearest neighbor under the weighted L2
    metric, extensions clamped to one collision-resolution step, and every
    tree edge validated through the collision plugin. Edges are validated at
    half the requested resolution so the returned path re-validates at half
    step over the identical dyadic parameter set. Deterministic for a fixed
    seed.
    """

    def __init__(self, goal_bias: float = 0.05, max_iterations: int = 0):
        if not (0.0 <= goal_bias < 1.0):
            raise PlanningError("goal_bias must lie in [0, 1)")
        self.goal_bias = goal_bias
        self.max_iterations = max_iterations  # 0 means budget-limited only

    def plan(
        self,
        scene: PlanningScene,
        group: JointGroup,
        request: PlanRequest,
        checker,
        goal: RobotState,
    ) -> PlanResult:
        t0 = time.monotonic()
        # budget exhaustion is measured in this thread's CPU time so outcomes
        # do not depend on how many sibling workers share the machine
        cpu0 = time.thread_time()
        dofs = group.dofs
        weights = np.array([d.weight for d in dofs])
        lowers = np.array([-math.pi if d.wraps else d.lower for d in dofs])
        uppers = np.array([math.pi if d.wraps else d.upper for d in dofs])
        extent = kin.space_extent(group)
        step = request.resolution_fraction * extent
        edge_rf = request.resolution_fraction / 2.0
        rng = np.random.default_rng(request.rng_seed)

        start_vec = request.start.vector(group)
        goal_vec = goal.vector(group)

        def dist_to(nodes_mat: np.ndarray, q: np.ndarray) -> np.ndarray:
            return np.sqrt(((nodes_mat - q) ** 2 * weights).sum(axis=1))

        def mkstate(q: np.ndarray) -> RobotState:
            return RobotState.from_vector(group, q, base=request.start)

        if math.sqrt(float(((start_vec - goal_vec) ** 2 * weights).sum())) <= request.goal_tolerance:
            return PlanResult(
                True,
                Path(group.name, [request.start]),
                solve_time=time.monotonic() - t0,
            )

        capacity = 256
        matrix = np.zeros((capacity, len(dofs)))
        matrix[0] = start_vec
        count = 1
        parents = [-1]
        iterations = 0
        goal_idx = -1

        def push(q: np.ndarray, parent: int) -> int:
            nonlocal matrix, capacity, count
            if count == capacity:
                capacity *= 2
                grown = np.zeros((capacity, len(dofs)))
                grown[:count] = matrix
                matrix = grown
            matrix[count] = q
            parents.append(parent)
            count += 1
            return count - 1

        while time.thread_time() - cpu0 < request.time_budget:
            iterations += 1
            if self.max_iterations and iterations > self.max_iterations:
                break
            if rng.random() < self.goal_bias:
                target = goal_vec
            else:
                target = rng.uniform(lowers, uppers)

            dists = dist_to(matrix[:count], target)
            near_idx = int(np.argmin(dists))
            near = matrix[near_idx]
            d = float(dists[near_idx])
            if d < 1e-12:
                continue
            # clamp the extension to one collision-resolution step
            new = target if d <= step else near + (target - near) * (step / d)

            valid, _ = checker.validate_motion(
                scene, group, mkstate(near), mkstate(new), edge_rf
            )
            if not valid:
                continue
            new_idx = push(new, near_idx)

            gd = math.sqrt(float(((new - goal_vec) ** 2 * weights).sum()))
            if gd <= request.goal_tolerance:
                goal_idx = new_idx
                break
            if gd <= step:
                valid, _ = checker.validate_motion(
                    scene, group, mkstate(new), mkstate(goal_vec), edge_rf
                )
                if valid:
                    goal_idx = push(goal_vec, new_idx)
                    break

        if goal_idx < 0:
            return PlanResult(
                False,
                reason="timeout: no path within the time budget",
                solve_time=time.monotonic() - t0,
                iterations=iterations,
            )
        order = []
        idx = goal_idx
        while idx >= 0:
            order.append(idx)
            idx = parents[idx]
        order.reverse()
        states = [mkstate(matrix[i]) for i in order]
        return PlanResult(
            True,
            Path(group.name, states),
            solve_time=time.monotonic() - t0,
            iterations=iterations,
        )


# --- trajectory time parameterization ---------------------------------------


@dataclass(frozen=True)
class JointProfile:
    """Symmetric trapezoidal velocity profile over one path segment."""

    q0: float
    delta: float  # signed displacement
    t_acc: float
    duration: float
    accel: float  # unsigned; 0 for a zero-length move
    v_peak: float  # unsigned

    def sample(self, t: float) -> tuple[float, float, float]:
        s = 1.0 if self.delta >= 0 else -1.0
        d = abs(self.delta)
        if d == 0.0 or self.duration == 0.0:
            return self.q0, 0.0, 0.0
        t = min(max(t, 0.0), self.duration)
        ta = self.t_acc
        tf = self.duration - ta
        if t < ta:
            q = 0.5 * self.accel * t * t
            v = self.accel * t
            a = self.accel
        elif t <= tf:
            q = 0.5 * self.accel * ta * ta + self.v_peak * (t - ta)
            v = self.v_peak
            a = 0.0
        else:
            r = self.duration - t
            q = d - 0.5 * self.accel * r * r
            v = self.accel * r
            a = -self.accel
        return self.q0 + s * q, s * v, s * a

    def switch_times(self) -> list[float]:
        if abs(self.delta) == 0.0:
            return []
        return [self.t_acc, self.duration - self.t_acc]


@dataclass
class TrajectorySegment:
    t_start: float
    duration: float
    profiles: dict[str, JointProfile]


class Trajectory:
    """Time-parameterized joint trajectory with an evaluable analytic profile."""

    def __init__(self, joint_names: list[str], segments: list[TrajectorySegment],
                 start_positions: dict[str, float]):
        self.joint_names = list(joint_names)
        self.segments = segments
        self.start_positions = dict(start_positions)

    @property
    def duration(self) -> float:
        if not self.segments:
            return 0.0
        last = self.segments[-1]
        return last.t_start + last.duration

    def sample(self, t: float) -> tuple[dict, dict, dict]:
        """Positions, velocities, accelerations at time t (clamped to range)."""
        if not self.segments:
            return dict(self.start_positions), \
                {j: 0.0 for j in self.joint_names}, {j: 0.0 for j in self.joint_names}
        t = min(max(t, 0.0), self.duration)
        seg = self.segments[-1]
        for s in self.segments:
            if t <= s.t_start + s.duration:
                seg = s
                break
        local = t - seg.t_start
        pos, vel, acc = {}, {}, {}
        for j in self.joint_names:
            p, v, a = seg.profiles[j].sample(local)
            pos[j], vel[j], acc[j] = p, v, a
        return pos, vel, acc

    def waypoint_times(self) -> list[float]:
        """Profile breakpoints: segment boundaries plus trapezoid switch times."""
        times = {0.0}
        for seg in self.segments:
            times.add(seg.t_start)
            times.add(seg.t_start + seg.duration)
            for prof in seg.profiles.values():
                for st in prof.switch_times():
                    times.add(seg.t_start + st)
        return sorted(times)

    def waypoints(self) -> list[tuple[float, dict, dict, dict]]:
        out = []
        times = self.waypoint_times()
        for i, t in enumerate(times):
            # sample an instant into the upcoming interval so accelerations
            # take their right-limit value at switch times
            probe = t if i == len(times) - 1 else min(t + 1e-9, self.duration)
            pos, vel, _ = self.sample(t)
            _, _, acc = self.sample(probe)
            out.append((t, pos, vel, acc))
        return out

    def to_csv(self) -> str:
        headers = ["t"]
        for j in self.joint_names:
            headers += [f"{j}_pos", f"{j}_vel", f"{j}_acc"]
        lines = [",".join(headers)]
        for t, pos, vel, acc in self.waypoints():
            row = [repr(float(t))]
            for j in self.joint_names:
                row += [repr(float(pos[j])), repr(float(vel[j])), repr(float(acc[j]))]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "joint_names": self.joint_names,
            "duration": self.duration,
            "points": [
                {
                    "t": t,
                    "positions": pos,
                    "velocities": vel,
                    "accelerations": acc,
                }
                for t, pos, vel, acc in self.waypoints()
            ],
        }


def _segment_duration(deltas: dict[str, float], limits: dict[str, tuple[float, float]]) -> float:
    t = 0.0
    for j, dq in deltas.items():
        d = abs(dq)
        if d == 0.0:
            continue
        vmax, amax = limits[j]
        # velocity-limited time, the accel+decel bound, and the exact
        # minimal trapezoid time (zero boundary velocities)
        t_vel = d / vmax
        t_acc2 = 2.0 * math.sqrt(2.0 * d / amax)
        if d >= vmax * vmax / amax:
            t_min = d / vmax + vmax / amax
        else:
            t_min = 2.0 * math.sqrt(d / amax)
        t = max(t, t_vel, t_acc2, t_min)
    return t


def _fit_profile(q0: float, dq: float, duration: float, vmax: float, amax: float) -> JointProfile:
    d = abs(dq)
    if d == 0.0 or duration == 0.0:
        return JointProfile(q0, dq, 0.0, duration, 0.0, 0.0)
    disc = duration * duration - 4.0 * d / amax
    if disc >= 0.0:
        t_acc = (duration - math.sqrt(disc)) / 2.0
        v_peak = amax * t_acc
        if v_peak <= vmax + 1e-12:
            return JointProfile(q0, dq, t_acc, duration, amax, v_peak)
    # cap at the velocity limit; the duration guarantee keeps accel feasible
    v_peak = vmax
    t_acc = duration - d / vmax
    accel = v_peak / t_acc
    return JointProfile(q0, dq, t_acc, duration, accel, v_peak)


def time_parameterize(
    path: Path, limits: dict[str, tuple[float, float]], group: JointGroup
) -> Trajectory:
    """Per-segment synchronized trapezoidal profiles with zero boundary velocities."""
    if not path.states:
        raise PlanningError("cannot time-parameterize an empty path")
    names = [d.name for d in group.dofs]
    for j in names:
        if j not in limits:
            raise PlanningError(f"no velocity/acceleration limits for '{j}'", element=j)
        vmax, amax = limits[j]
        if vmax <= 0 or amax <= 0:
            raise PlanningError(f"limits for '{j}' must be positive", element=j)

    start_positions = {j: path.states[0][j] for j in names}
    segments: list[TrajectorySegment] = []
    t_cursor = 0.0
    for a, b in zip(path.states, path.states[1:]):
        deltas = {j: b[j] - a[j] for j in names}
        duration = _segment_duration(deltas, limits)
        if duration == 0.0:
            continue  # all-zero segment: no time passes
        profiles = {
            j: _fit_profile(a[j], deltas[j], duration, limits[j][0], limits[j][1])
            for j in names
        }
        segments.append(TrajectorySegment(t_cursor, duration, profiles))
        t_cursor += duration
    return Trajectory(names, segments, start_positions)


# --- adapters ------------------------------------------------------------------


class FixStartBounds:
    """Pre-processing: clamp start values within tolerance beyond their limits
    back to the boundary; larger violations are errors."""

    def __init__(self, tolerance: float = START_CLAMP_TOL):
        self.tolerance = tolerance

    def adapt_request(self, scene: PlanningScene, group: JointGroup, request: PlanRequest) -> PlanRequest:
        fixed = dict(request.start.positions)
        changed = False
        for dof in group.dofs:
            if dof.wraps or not dof.bounded:
                continue
            v = fixed.get(dof.name)
            if v is None:
                continue
            if dof.lower <= v <= dof.upper:
                continue
            bound = dof.lower if v < dof.lower else dof.upper
            if abs(v - bound) <= self.tolerance:
                fixed[dof.name] = bound
                changed = True
            else:
                raise PlanningError(
                    f"start value for '{dof.name}' ({v:.9g}) violates its limits "
                    f"[{dof.lower:.9g}, {dof.upper:.9g}] beyond the clamp tolerance",
                    element=dof.name,
                )
        if not changed:
            return request
        return replace(request, start=RobotState(fixed))

    def adapt_result(self, scene, group, request, result, limits):
        return result


class TimeParameterizationAdapter:
    """Post-processing: turn the geometric path into a timed trajectory."""

    def adapt_request(self, scene, group, request):
        return request

    def adapt_result(
        self,
        scene: PlanningScene,
        group: JointGroup,
        request: PlanRequest,
        result: PlanResult,
        limits: dict[str, tuple[float, float]],
    ) -> PlanResult:
        if result.success and result.path is not None:
            result.trajectory = time_parameterize(result.path, limits, group)
        return result


def default_registry() -> PluginRegistry:
    registry = PluginRegistry()
    registry.register("planner", "rrt", RrtPlanner)
    registry.register("ik_solver", "dls", lambda **kw: _DlsIkSolver(**kw))
    registry.register("collision_checker", "native", NativeCollisionChecker)
    registry.register("adapter", "fix_start_bounds", FixStartBounds)
    registry.register("adapter", "time_parameterization", TimeParameterizationAdapter)
    return registry


class _DlsIkSolver:
    def __init__(self, **params):
        self.params = IkParams(**params) if params else IkParams()

    def solve(self, model, group, target, seed, params=None):
        return kin.solve_ik(model, group, target, seed, params or self.params)


def joint_limit_set(
    model: RobotModel,
    velocity_scaling: float = 1.0,
    default_velocity: float = 1.0,
    default_acceleration: float = 1.0,
) -> dict[str, tuple[float, float]]:
    """Per-DOF (vmax, amax) pulled from the model with configured defaults."""
    limits: dict[str, tuple[float, float]] = {}
    for jn in model.active_joints:
        joint = model.joint(jn)
        vmax = default_velocity
        if joint.limits is not None and joint.limits.max_velocity is not None:
            vmax = joint.limits.max_velocity
        for dof in kin.joint_dofs(joint):
            limits[dof.name] = (vmax * velocity_scaling, default_acceleration)
    return limits


def apply_adapters(
    registry: PluginRegistry,
    chain: tuple[str, ...],
    scene: PlanningScene,
    group: JointGroup,
    request: PlanRequest,
    result: PlanResult | None = None,
    limits: dict[str, tuple[float, float]] | None = None,
) -> tuple[PlanRequest, PlanResult | None]:
    """Run the pre-chain on the request and the post-chain on the result.

    The chain order is the declared bundle order; an empty chain is identity.
    """
    adapters = [registry.create("adapter", name) for name in chain]
    for adapter in adapters:
        if hasattr(adapter, "adapt_request"):
            request = adapter.adapt_request(scene, group, request)
    if result is not None:
        lim = limits or joint_limit_set(scene.model)
        for adapter in adapters:
            if hasattr(adapter, "adapt_result"):
                result = adapter.adapt_result(scene, group, request, result, lim)
    return request, result


def plan(
    scene: PlanningScene,
    request: PlanRequest,
    registry: PluginRegistry | None = None,
    adapters: tuple[str, ...] = ("fix_start_bounds", "time_parameterization"),
    limits: dict[str, tuple[float, float]] | None = None,
    collision_plugin_name: str = "native",
) -> PlanResult:
    """Resolve the goal, run the configured planner, and post-process the result."""
    request.validate()
    registry = registry or default_registry()
    group = joint_group(scene.model, scene.semantic, request.group)
    lim = limits or joint_limit_set(scene.model)

    adapter_objs = [registry.create("adapter", name) for name in adapters]
    for adapter in adapter_objs:
        if hasattr(adapter, "adapt_request"):
            request = adapter.adapt_request(scene, group, request)

    checker = registry.create("collision_checker", collision_plugin_name)

    # resolve the goal to a joint-space state
    if request.goal_state is not None:
        goal = request.start.with_values(request.goal_state.positions)
        for dof in group.dofs:
            v = goal[dof.name]
            if not dof.wraps and dof.bounded and not (dof.lower - 1e-12 <= v <= dof.upper + 1e-12):
                raise PlanningError(
                    f"goal value for '{dof.name}' ({v:.9g}) is outside its limits",
                    element=dof.name,
                )
    else:
        solver = registry.create("ik_solver", "dls")
        goal = solver.solve(scene.model, group, request.goal_pose, request.start)
        if goal is None:
            raise PlanningError(
                f"inverse kinematics found no solution for the pose goal of group "
                f"'{request.group}'"
            )

    if checker.check_state(scene, request.start):
        raise PlanningError("start state is in collision")

    planner = registry.create("planner", request.planner, **request.planner_params)
    result = planner.plan(scene, group, request, checker, goal)
    result.checks_performed = getattr(checker, "checks_performed", 0)

    for adapter in adapter_objs:
        if hasattr(adapter, "adapt_result"):
            result = adapter.adapt_result(scene, group, request, result, lim)
    return result


class Facade:
    """One-call planning interface over a loaded project.

    Composes goal resolution (named pose lookup or IK), planning, and the
    adapter chain, returning the timed trajectory.
    """

    def __init__(
        self,
        model: RobotModel,
        semantic: SemanticModel,
        acm: AllowedCollisionMatrix | None = None,
        world: PlanningSceneWorld | None = None,
        registry: PluginRegistry | None = None,
        planner: str = "rrt",
        planner_params: dict | None = None,
        goal_tolerance: float = 1e-3,
        time_budget: float = 5.0,
        resolution_fraction: float = 0.01,
        adapters: tuple[str, ...] = ("fix_start_bounds", "time_parameterization"),
        limits: dict[str, tuple[float, float]] | None = None,
        rng_seed: int = 0,
    ):
        self.scene = PlanningScene(model, semantic, acm, world)
        self.registry = registry or default_registry()
        self.planner = planner
        self.planner_params = dict(planner_params or {})
        self.goal_tolerance = goal_tolerance
        self.time_budget = time_budget
        self.resolution_fraction = resolution_fraction
        self.adapters = adapters
        self.limits = limits or joint_limit_set(model)
        self.rng_seed = rng_seed
        self.current_state = kin.default_state(model)

    def joint_group(self, name: str) -> JointGroup:
        return joint_group(self.scene.model, self.scene.semantic, name)

    def set_state(self, state: RobotState) -> None:
        self.current_state = self.current_state.with_values(state.positions)

    def plan(self, request: PlanRequest) -> PlanResult:
        return plan(
            self.scene,
            request,
            registry=self.registry,
            adapters=self.adapters,
            limits=self.limits,
        )

    def plan_to(
        self,
        goal,
        group: str,
        seed: int | None = None,
        time_budget: float | None = None,
    ) -> "Trajectory":
        """Plan from the current state to a named pose or a Pose target."""
        request = PlanRequest(
            group=group,
            start=self.current_state,
            goal_tolerance=self.goal_tolerance,
            time_budget=time_budget if time_budget is not None else self.time_budget,
            planner=self.planner,
            planner_params=dict(self.planner_params),
            resolution_fraction=self.resolution_fraction,
            rng_seed=seed if seed is not None else self.rng_seed,
        )
        if isinstance(goal, str):
            try:
                gs = self.scene.semantic.group_state(goal, group)
            except Exception:
                raise PlanningError(
                    f"unknown named pose '{goal}' for group '{group}'", element=goal
                ) from None
            request.goal_state = RobotState(gs.as_dict())
        elif isinstance(goal, Pose):
            request.goal_pose = goal
        elif isinstance(goal, RobotState):
            request.goal_state = goal
        else:
            raise PlanningError(f"unsupported goal type {type(goal).__name__}")
        result = self.plan(request)
        if not result.success:
            raise PlanningError(result.reason or "planning failed")
        return result.trajectory
