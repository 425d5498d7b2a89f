"""Pairwise shape intersection, whole-robot collision queries, and
resolution-controlled motion validation.

Sphere/sphere, sphere/box, and box/box tests are exact (separating axes);
cylinders are conservatively replaced by their bounding capsules; convex
meshes and capsule/box pairs go through a GJK-style support-function
distance query with 1e-9 termination tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kinematics
from .geometry import (
    Box,
    ConvexMesh,
    Cylinder,
    Pose,
    Shape,
    Sphere,
    pose_from_json,
    pose_to_json,
    quat_to_matrix,
    shape_from_json,
    shape_to_json,
)
from .kinematics import JointGroup, RobotState
from .robot_model import RobotModel, collidable_pairs

GJK_TOL = 1e-9

ACM_REASONS = ("Adjacent", "Never", "Always", "Default", "User")


def pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class AcmEntry:
    disabled: bool
    reason: str
    samples: int | None = None
    collisions: int | None = None


class AllowedCollisionMatrix:
    """Per-link-pair record of whether collision checking may be skipped.

    Pairs absent from the matrix are enabled (checked).
    """

    def __init__(self, entries: dict[tuple[str, str], AcmEntry] | None = None):
        self.entries: dict[tuple[str, str], AcmEntry] = dict(entries or {})

    def set(
        self,
        a: str,
        b: str,
        disabled: bool,
        reason: str,
        samples: int | None = None,
        collisions: int | None = None,
    ) -> None:
        if reason not in ACM_REASONS:
            raise ValueError(f"unknown ACM reason {reason!r}")
        if reason in ("Never", "Always", "Default") and samples is None:
            raise ValueError(f"reason {reason} requires sampling statistics")
        self.entries[pair_key(a, b)] = AcmEntry(disabled, reason, samples, collisions)

    def entry(self, a: str, b: str) -> AcmEntry | None:
        return self.entries.get(pair_key(a, b))

    def is_disabled(self, a: str, b: str) -> bool:
        e = self.entries.get(pair_key(a, b))
        return e.disabled if e is not None else False

    def disabled_pairs(self) -> list[tuple[tuple[str, str], str]]:
        return sorted(
            (pair, e.reason) for pair, e in self.entries.items() if e.disabled
        )

    def to_json(self) -> dict:
        return {
            "entries": [
                {
                    "link1": pair[0],
                    "link2": pair[1],
                    "disabled": e.disabled,
                    "reason": e.reason,
                    "samples": e.samples,
                    "collisions": e.collisions,
                }
                for pair, e in sorted(self.entries.items())
            ]
        }

    @staticmethod
    def from_json(data: dict) -> "AllowedCollisionMatrix":
        acm = AllowedCollisionMatrix()
        for row in data.get("entries", []):
            acm.entries[pair_key(row["link1"], row["link2"])] = AcmEntry(
                bool(row["disabled"]),
                row["reason"],
                row.get("samples"),
                row.get("collisions"),
            )
        return acm


class WorldObject:
    """World collision object; xyz/rpy tuples are the serialization truth and
    the pose is derived from them, so JSON round trips are exact."""

    __slots__ = ("name", "shape", "xyz", "rpy", "pose")

    def __init__(self, name: str, shape: Shape, xyz, rpy):
        self.name = name
        self.shape = shape
        self.xyz = tuple(float(v) for v in xyz)
        self.rpy = tuple(float(v) for v in rpy)
        self.pose = Pose.from_xyz_rpy(self.xyz, self.rpy)


@dataclass
class PlanningSceneWorld:
    """Collision objects in the world frame; names are unique."""

    objects: list[WorldObject] = field(default_factory=list)

    def add(self, name: str, shape: Shape, pose: Pose) -> None:
        if any(o.name == name for o in self.objects):
            raise ValueError(f"world object '{name}' already exists")
        self.objects.append(WorldObject(name, shape, pose.translation, pose.rpy()))

    def remove(self, name: str) -> None:
        before = len(self.objects)
        self.objects = [o for o in self.objects if o.name != name]
        if len(self.objects) == before:
            raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "objects": [
                {
                    "name": o.name,
                    "shape": shape_to_json(o.shape),
                    "pose": {"xyz": list(o.xyz), "rpy": list(o.rpy)},
                }
                for o in self.objects
            ]
        }

    @staticmethod
    def from_json(data: dict) -> "PlanningSceneWorld":
        world = PlanningSceneWorld()
        for row in data.get("objects", []):
            if any(o.name == row["name"] for o in world.objects):
                raise ValueError(f"world object '{row['name']}' already exists")
            pose = row.get("pose", {})
            world.objects.append(
                WorldObject(
                    row["name"],
                    shape_from_json(row["shape"]),
                    pose.get("xyz", (0.0, 0.0, 0.0)),
                    pose.get("rpy", (0.0, 0.0, 0.0)),
                )
            )
        return world

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @staticmethod
    def loads(text: str) -> "PlanningSceneWorld":
        return PlanningSceneWorld.from_json(json.loads(text))


@dataclass(frozen=True)
class Contact:
    first: str
    second: str
    kind: str  # "self" | "world"


@dataclass
class CollisionResult:
    in_collision: bool = False
    contacts: list[Contact] = field(default_factory=list)
    checks_performed: int = 0


@dataclass(frozen=True)
class CheckFlags:
    boolean_only: bool = False  # allow early exit on the first contact


# --- narrow-phase primitives ------------------------------------------------


def _segment_endpoints(cyl: Cylinder, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    h = cyl.length / 2.0
    return (
        pose.transform_point(np.array([0.0, 0.0, -h])),
        pose.transform_point(np.array([0.0, 0.0, h])),
    )


def _point_segment_dist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    abx, aby, abz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    apx, apy, apz = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    denom = abx * abx + aby * aby + abz * abz
    t = 0.0 if denom == 0.0 else (apx * abx + apy * aby + apz * abz) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    dx, dy, dz = apx - t * abx, apy - t * aby, apz - t * abz
    return (dx * dx + dy * dy + dz * dz) ** 0.5


def _segment_segment_dist(
    p1: np.ndarray, q1: np.ndarray, p2: np.ndarray, q2: np.ndarray
) -> float:
    # Ericson, Real-Time Collision Detection, closest points of two segments
    d1x, d1y, d1z = q1[0] - p1[0], q1[1] - p1[1], q1[2] - p1[2]
    d2x, d2y, d2z = q2[0] - p2[0], q2[1] - p2[1], q2[2] - p2[2]
    rx, ry, rz = p1[0] - p2[0], p1[1] - p2[1], p1[2] - p2[2]
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz

    def clamp01(v):
        return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)

    if a <= 1e-18 and e <= 1e-18:
        return (rx * rx + ry * ry + rz * rz) ** 0.5
    if a <= 1e-18:
        s = 0.0
        t = clamp01(f / e)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= 1e-18:
            t = 0.0
            s = clamp01(-c / a)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            s = clamp01((b * f - c * e) / denom) if denom > 1e-18 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = clamp01((b - c) / a)
    dx = rx + s * d1x - t * d2x
    dy = ry + s * d1y - t * d2y
    dz = rz + s * d1z - t * d2z
    return (dx * dx + dy * dy + dz * dz) ** 0.5


def _point_box_dist(p: np.ndarray, box: Box, pose: Pose) -> float:
    local = pose.inverse().transform_point(p)
    half = np.asarray(box.half_extents)
    clamped = np.clip(local, -half, half)
    return float(np.linalg.norm(local - clamped))


def _boxes_intersect_sat(a: Box, pose_a: Pose, b: Box, pose_b: Pose) -> bool:
    ra = quat_to_matrix(pose_a.rotation)
    rb = quat_to_matrix(pose_b.rotation)
    ea = np.asarray(a.half_extents)
    eb = np.asarray(b.half_extents)
    t = pose_b.translation - pose_a.translation
    axes = [ra[:, i] for i in range(3)] + [rb[:, i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            cross = np.cross(ra[:, i], rb[:, j])
            n = np.linalg.norm(cross)
            if n > 1e-12:
                axes.append(cross / n)
    for axis in axes:
        proj_a = float(np.dot(ea, np.abs(ra.T @ axis)))
        proj_b = float(np.dot(eb, np.abs(rb.T @ axis)))
        if abs(float(np.dot(t, axis))) > proj_a + proj_b:
            return False
    return True


# --- GJK distance over support functions -------------------------------------


def _support_box(box: Box, pose: Pose):
    r = quat_to_matrix(pose.rotation)
    half = np.asarray(box.half_extents)
    t = pose.translation

    def support(d: np.ndarray) -> np.ndarray:
        local = r.T @ d
        return t + r @ (np.sign(local) * half)

    return support

def _support_points(points: np.ndarray):
    def support(d: np.ndarray) -> np.ndarray:
        return points[int(np.argmax(points @ d))]

    return support


def _closest_on_segment(a, b):
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom <= 1e-30:
        return a, [0]
    t = float(np.clip(-np.dot(a, ab) / denom, 0.0, 1.0))
    if t <= 0.0:
        return a, [0]
    if t >= 1.0:
        return b, [1]
    return a + t * ab, [0, 1]


def _closest_on_triangle(a, b, c):
    # region classification per Ericson §5.1.5, with the query point at origin
    ab = b - a
    ac = c - a
    ap = -a
    d1 = float(np.dot(ab, ap))
    d2 = float(np.dot(ac, ap))
    if d1 <= 0.0 and d2 <= 0.0:
        return a, [0]
    bp = -b
    d3 = float(np.dot(ab, bp))
    d4 = float(np.dot(ac, bp))
    if d3 >= 0.0 and d4 <= d3:
        return b, [1]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return a + v * ab, [0, 1]
    cp = -c
    d5 = float(np.dot(ab, cp))
    d6 = float(np.dot(ac, cp))
    if d6 >= 0.0 and d5 <= d6:
        return c, [2]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return a + w * ac, [0, 2]
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b), [1, 2]
    denom = va + vb + vc
    v = vb / denom
    w = vc / denom
    return a + ab * v + ac * w, [0, 1, 2]


def _closest_on_simplex(simplex: list[np.ndarray]):
    """Closest point to the origin on a 1-4 point simplex and the supporting subset."""
    if len(simplex) == 1:
        return simplex[0], [0]
    if len(simplex) == 2:
        point, idx = _closest_on_segment(simplex[0], simplex[1])
        return point, idx
    if len(simplex) == 3:
        point, idx = _closest_on_triangle(simplex[0], simplex[1], simplex[2])
        return point, idx
    a, b, c, d = simplex
    # origin inside the tetrahedron?
    inside = True
    best = None
    faces = ((0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 3, 1), (1, 2, 3, 0))
    for i, j, k, opp in faces:
        normal = np.cross(simplex[j] - simplex[i], simplex[k] - simplex[i])
        side_origin = float(np.dot(normal, -simplex[i]))
        side_opp = float(np.dot(normal, simplex[opp] - simplex[i]))
        if side_origin * side_opp < 0.0:
            inside = False
            point, sub = _closest_on_triangle(simplex[i], simplex[j], simplex[k])
            dist = float(np.dot(point, point))
            if best is None or dist < best[0]:
                best = (dist, point, [(i, j, k)[s] for s in sub])
    if inside:
        return np.zeros(3), [0, 1, 2, 3]
    return best[1], best[2]


def gjk_distance(support_a, support_b, tol: float = GJK_TOL, max_iter: int = 200) -> float:
    """Distance between two convex sets given by support functions (0 if intersecting)."""

    def mink(d: np.ndarray) -> np.ndarray:
        return support_a(d) - support_b(-d)

    v = mink(np.array([1.0, 0.0, 0.0]))
    simplex = [v]
    closest = v
    for _ in range(max_iter):
        dist = float(np.linalg.norm(closest))
        if dist < tol:
            return 0.0
        d = -closest
        w = mink(d)
        # no support point makes progress beyond tolerance: converged
        if dist * dist - float(np.dot(closest, w)) <= tol * max(dist, 1.0):
            return dist
        simplex.append(w)
        closest, keep = _closest_on_simplex(simplex)
        simplex = [simplex[i] for i in keep]
        if len(simplex) == 4:
            return 0.0
    return float(np.linalg.norm(closest))


def _core_and_margin(shape: Shape, pose: Pose):
    """Reduce a shape to (support function, margin) for GJK-style queries."""
    if isinstance(shape, Sphere):
        center = pose.translation
        return (lambda d: center), shape.radius
    if isinstance(shape, Cylinder):
        a, b = _segment_endpoints(shape, pose)
        pts = np.stack([a, b])
        return _support_points(pts), shape.radius
    if isinstance(shape, Box):
        return _support_box(shape, pose), 0.0
    if isinstance(shape, ConvexMesh):
        r = quat_to_matrix(pose.rotation)
        pts = shape.points() @ r.T + pose.translation
        return _support_points(pts), 0.0
    raise TypeError(f"unsupported shape {type(shape).__name__}")


def shapes_intersect(a: Shape, pose_a: Pose, b: Shape, pose_b: Pose) -> bool:
    """True when the two posed shapes overlap (conservative for cylinders)."""
    # exact closed forms first
    if isinstance(a, Sphere) and isinstance(b, Sphere):
        ta, tb = pose_a.translation, pose_b.translation
        dx, dy, dz = ta[0] - tb[0], ta[1] - tb[1], ta[2] - tb[2]
        return bool((dx * dx + dy * dy + dz * dz) ** 0.5 <= a.radius + b.radius)
    if isinstance(a, Sphere) and isinstance(b, Box):
        return bool(_point_box_dist(pose_a.translation, b, pose_b) <= a.radius)
    if isinstance(a, Box) and isinstance(b, Sphere):
        return bool(_point_box_dist(pose_b.translation, a, pose_a) <= b.radius)
    if isinstance(a, Box) and isinstance(b, Box):
        return bool(_boxes_intersect_sat(a, pose_a, b, pose_b))
    if isinstance(a, Sphere) and isinstance(b, Cylinder):
        p0, p1 = _segment_endpoints(b, pose_b)
        return bool(
            _point_segment_dist(pose_a.translation, p0, p1) <= a.radius + b.radius
        )
    if isinstance(a, Cylinder) and isinstance(b, Sphere):
        return shapes_intersect(b, pose_b, a, pose_a)
    if isinstance(a, Cylinder) and isinstance(b, Cylinder):
        a0, a1 = _segment_endpoints(a, pose_a)
        b0, b1 = _segment_endpoints(b, pose_b)
        return bool(_segment_segment_dist(a0, a1, b0, b1) <= a.radius + b.radius)
    # everything else: GJK on core sets with additive margins
    sup_a, margin_a = _core_and_margin(a, pose_a)
    sup_b, margin_b = _core_and_margin(b, pose_b)
    return bool(gjk_distance(sup_a, sup_b) <= margin_a + margin_b + GJK_TOL)


# --- robot-level queries ------------------------------------------------------


def _links_collide(link_a, pose_a: Pose, link_b, pose_b: Pose) -> bool:
    for shape_a, local_a in link_a.collision_geoms:
        world_a = pose_a.compose(local_a)
        for shape_b, local_b in link_b.collision_geoms:
            if shapes_intersect(shape_a, world_a, shape_b, pose_b.compose(local_b)):
                return True
    return False


def check_state(
    model: RobotModel,
    state: RobotState,
    acm: AllowedCollisionMatrix | None = None,
    world: PlanningSceneWorld | None = None,
    flags: CheckFlags | None = None,
    link_poses: dict[str, Pose] | None = None,
) -> CollisionResult:
    """Test all enabled collidable link pairs and all (link, world object) pairs.

    Each tested pair counts once in checks_performed; boolean_only allows an
    early exit after the first contact.
    """
    flags = flags or CheckFlags()
    acm = acm or AllowedCollisionMatrix()
    poses = link_poses or kinematics.forward_kinematics(model, state, check_limits=False)
    result = CollisionResult()

    for a, b in collidable_pairs(model):
        if acm.is_disabled(a, b):
            continue
        result.checks_performed += 1
        if _links_collide(model.link(a), poses[a], model.link(b), poses[b]):
            result.contacts.append(Contact(a, b, "self"))
            result.in_collision = True
            if flags.boolean_only:
                return result

    if world is not None:
        geo_links = [l for l in model.links if l.collision_geoms]
        for obj in world.objects:
            for link in geo_links:
                result.checks_performed += 1
                hit = any(
                    shapes_intersect(s, poses[link.name].compose(lp), obj.shape, obj.pose)
                    for s, lp in link.collision_geoms
                )
                if hit:
                    result.contacts.append(Contact(link.name, obj.name, "world"))
                    result.in_collision = True
                    if flags.boolean_only:
                        return result
    return result


def validate_motion(
    model: RobotModel,
    group: JointGroup,
    start: RobotState,
    end: RobotState,
    acm: AllowedCollisionMatrix | None = None,
    world: PlanningSceneWorld | None = None,
    resolution_fraction: float = 0.01,
    flags: CheckFlags | None = None,
    counter: list | None = None,
) -> tuple[bool, float | None]:
    """Check a straight joint-space segment by recursive bisection.

    Splits until adjacent evaluated parameters are at most one resolution step
    apart in configuration distance. Returns (valid, first failing parameter),
    where the failing parameter is the smallest-depth one in bisection order.
    When given, counter[0] accumulates narrow-phase checks across calls.
    """
    if not (0.0 < resolution_fraction < 1.0):
        raise ValueError("resolution_fraction must lie in (0, 1)")
    step = resolution_fraction * kinematics.space_extent(group)
    span = kinematics.distance(group, start, end)
    depth = 0 if span <= step else math.ceil(math.log2(span / step))
    check = flags or CheckFlags(boolean_only=True)

    def _evaluate(t: float) -> bool:
        state = kinematics.interpolate(group, start, end, t)
        res = check_state(model, state, acm, world, check)
        if counter is not None:
            counter[0] += res.checks_performed
        return res.in_collision

    for t in (0.0, 1.0):
        if _evaluate(t):
            return False, t
    for level in range(1, depth + 1):
        denom = 1 << level
        for k in range(1 << (level - 1)):
            t = (2 * k + 1) / denom
            if _evaluate(t):
                return False, t
    return True, None
