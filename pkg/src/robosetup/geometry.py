"""Rigid-body poses and collision shape primitives.

Quaternions are stored as (x, y, z, w). Roll-pitch-yaw follows the fixed-axis
XYZ convention, i.e. R = Rz(yaw) @ Ry(pitch) @ Rx(roll).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-9


def quat_identity() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    x, y, z, w = float(q[0]), float(q[1]), float(q[2]), float(q[3])
    n = (x * x + y * y + z * z + w * w) ** 0.5
    if n == 0.0:
        raise ValueError("zero-norm quaternion")
    # canonical sign keeps serialization deterministic
    if w < 0.0:
        n = -n
    return np.array([x / n, y / n, z / n, w / n])


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ax, ay, az, aw = float(a[0]), float(a[1]), float(a[2]), float(a[3])
    bx, by, bz, bw = float(b[0]), float(b[1]), float(b[2]), float(b[3])
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q."""
    # q * (v, 0) * q^-1 expanded to scalars; this sits on the FK hot path
    qx, qy, qz, qw = float(q[0]), float(q[1]), float(q[2]), float(q[3])
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return np.array(
        [
            vx + qw * tx + qy * tz - qz * ty,
            vy + qw * ty + qz * tx - qx * tz,
            vz + qw * tz + qx * ty - qy * tx,
        ]
    )


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("zero-norm rotation axis")
    half = 0.5 * angle
    s = np.sin(half) / n
    return np.array([axis[0] * s, axis[1] * s, axis[2] * s, np.cos(half)])


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    qx = quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), roll)
    qy = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), pitch)
    qz = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw)
    return quat_normalize(quat_mul(qz, quat_mul(qy, qx)))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Convert a rotation matrix to a quaternion (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    return quat_normalize(np.array([x, y, z, w]))


def quat_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Angular distance between two orientations in radians."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * np.arccos(min(1.0, d))


def rotation_vector(q: np.ndarray) -> np.ndarray:
    """Axis-angle vector (axis * angle) equivalent of q."""
    q = quat_normalize(q)
    s = np.linalg.norm(q[:3])
    if s < 1e-12:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(s, q[3])
    return q[:3] / s * angle


class Pose:
    """Rigid transform: translation in meters plus a unit quaternion."""

    __slots__ = ("translation", "rotation")

    def __init__(self, translation=None, rotation=None):
        self.translation = (
            np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        )
        self.rotation = quat_identity() if rotation is None else quat_normalize(rotation)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_xyz_rpy(xyz, rpy) -> "Pose":
        return Pose(np.asarray(xyz, dtype=float), quat_from_rpy(*rpy))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        return Pose(m[:3, 3], quat_from_matrix(m[:3, :3]))

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose") -> "Pose":
        """Return self ∘ other (apply other in self's frame)."""
        return Pose(
            self.translation + quat_rotate(self.rotation, other.translation),
            quat_mul(self.rotation, other.rotation),
        )

    def inverse(self) -> "Pose":
        q_inv = quat_conjugate(self.rotation)
        return Pose(-quat_rotate(q_inv, self.translation), q_inv)

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.translation + quat_rotate(self.rotation, p)

    def rpy(self) -> tuple[float, float, float]:
        """Roll-pitch-yaw angles reproducing this rotation (fixed-axis XYZ)."""
        m = quat_to_matrix(self.rotation)
        pitch = np.arcsin(np.clip(-m[2, 0], -1.0, 1.0))
        if abs(m[2, 0]) < 1.0 - 1e-12:
            roll = np.arctan2(m[2, 1], m[2, 2])
            yaw = np.arctan2(m[1, 0], m[0, 0])
        else:
            # gimbal lock: fold yaw into roll
            roll = np.arctan2(-m[1, 2], m[1, 1])
            yaw = 0.0
        return float(roll), float(pitch), float(yaw)

    def approx_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        if np.max(np.abs(self.translation - other.translation)) > tol:
            return False
        return quat_angle(self.rotation, other.rotation) <= tol

    def validate(self, tol: float = UNIT_TOL) -> None:
        if abs(np.linalg.norm(self.rotation) - 1.0) > tol:
            raise ValueError("quaternion norm deviates from 1")
        r = quat_to_matrix(self.rotation)
        if np.max(np.abs(r @ r.T - np.eye(3))) > 10 * tol or np.linalg.det(r) < 0:
            raise ValueError("rotation block is not orthonormal")

    def __repr__(self):
        t = tuple(round(v, 6) for v in self.translation)
        q = tuple(round(v, 6) for v in self.rotation)
        return f"Pose(t={t}, q={q})"


@dataclass(frozen=True)
class Sphere:
    radius: float

    kind = "sphere"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in its local frame, stored as half-extents."""

    half_extents: tuple[float, float, float]

    kind = "box"

    def __post_init__(self):
        if any(h <= 0 for h in self.half_extents):
            raise ValueError("box half-extents must be positive")


@dataclass(frozen=True)
class Cylinder:
    """Cylinder along the local z axis, centered at the origin."""

    radius: float
    length: float

    kind = "cylinder"

    def __post_init__(self):
        if self.radius <= 0 or self.length <= 0:
            raise ValueError("cylinder dimensions must be positive")


@dataclass(frozen=True)
class ConvexMesh:
    """Convex hull of a vertex cloud; vertices are hull vertices only."""

    vertices: tuple = field(repr=False)

    kind = "convex_mesh"

    @staticmethod
    def from_points(points) -> "ConvexMesh":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        hull = convex_hull(pts)
        return ConvexMesh(tuple(tuple(float(x) for x in v) for v in hull))

    def points(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


Shape = Sphere | Box | Cylinder | ConvexMesh


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Reduce a point cloud to its convex hull vertices.

    Raises ValueError when fewer than 4 non-coplanar points remain.
    """
    from scipy.spatial import ConvexHull
    from scipy.spatial._qhull import QhullError

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) < 4:
        raise ValueError("convex mesh needs at least 4 vertices")
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise ValueError(f"degenerate (coplanar) mesh vertices: {exc}") from exc
    verts = points[sorted(hull.vertices)]
    if len(verts) < 4:
        raise ValueError("convex mesh needs at least 4 non-coplanar vertices")
    return verts


def shape_vertices(shape: Shape) -> np.ndarray:
    """Corner/sample vertices of a shape in its local frame (for hulls and rendering)."""
    if isinstance(shape, Sphere):
        raise ValueError("sphere has no vertex representation")
    if isinstance(shape, Box):
        hx, hy, hz = shape.half_extents
        return np.array(
            [[sx * hx, sy * hy, sz * hz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
        )
    if isinstance(shape, Cylinder):
        angles = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
        ring = np.stack([shape.radius * np.cos(angles), shape.radius * np.sin(angles)], axis=1)
        h = shape.length / 2.0
        top = np.hstack([ring, np.full((len(ring), 1), h)])
        bot = np.hstack([ring, np.full((len(ring), 1), -h)])
        return np.vstack([top, bot])
    return shape.points()


def triangulate(shape: Shape, pose: Pose | None = None) -> dict:
    """Triangle mesh approximation of a shape for rendering clients.

    Returns {"vertices": [[x,y,z],...], "faces": [[i,j,k],...]} in the shape's
    frame, or transformed by pose when given.
    """
    from scipy.spatial import ConvexHull

    if isinstance(shape, Sphere):
        verts, faces = _uv_sphere(shape.radius, 12, 8)
    else:
        pts = shape_vertices(shape)
        hull = ConvexHull(pts)
        verts = pts
        faces = hull.simplices
    if pose is not None:
        r = quat_to_matrix(pose.rotation)
        verts = verts @ r.T + pose.translation
    return {
        "vertices": [[float(x) for x in v] for v in verts],
        "faces": [[int(i) for i in f] for f in faces],
    }


def _uv_sphere(radius: float, n_seg: int, n_ring: int):
    verts = [[0.0, 0.0, radius]]
    for i in range(1, n_ring):
        phi = np.pi * i / n_ring
        for j in range(n_seg):
            theta = 2 * np.pi * j / n_seg
            verts.append(
                [
                    radius * np.sin(phi) * np.cos(theta),
                    radius * np.sin(phi) * np.sin(theta),
                    radius * np.cos(phi),
                ]
            )
    verts.append([0.0, 0.0, -radius])
    faces = []
    for j in range(n_seg):
        faces.append([0, 1 + j, 1 + (j + 1) % n_seg])
    for i in range(n_ring - 2):
        base = 1 + i * n_seg
        for j in range(n_seg):
            a = base + j
            b = base + (j + 1) % n_seg
            faces.append([a, a + n_seg, b + n_seg])
            faces.append([a, b + n_seg, b])
    last = len(verts) - 1
    base = last - n_seg
    for j in range(n_seg):
        faces.append([last, base + (j + 1) % n_seg, base + j])
    return np.array(verts), np.array(faces)


def shape_to_json(shape: Shape) -> dict:
    if isinstance(shape, Sphere):
        return {"type": "sphere", "radius": shape.radius}
    if isinstance(shape, Box):
        return {"type": "box", "half_extents": list(shape.half_extents)}
    if isinstance(shape, Cylinder):
        return {"type": "cylinder", "radius": shape.radius, "length": shape.length}
    return {"type": "convex_mesh", "vertices": [list(v) for v in shape.vertices]}


def shape_from_json(data: dict) -> Shape:
    kind = data.get("type")
    if kind == "sphere":
        return Sphere(float(data["radius"]))
    if kind == "box":
        he = data["half_extents"]
        return Box((float(he[0]), float(he[1]), float(he[2])))
    if kind == "cylinder":
        return Cylinder(float(data["radius"]), float(data["length"]))
    if kind == "convex_mesh":
        return ConvexMesh(tuple(tuple(float(x) for x in v) for v in data["vertices"]))
    raise ValueError(f"unknown shape type: {kind!r}")


def pose_to_json(pose: Pose) -> dict:
    rpy = pose.rpy()
    return {"xyz": [float(v) for v in pose.translation], "rpy": [float(v) for v in rpy]}


def pose_from_json(data: dict) -> Pose:
    return Pose.from_xyz_rpy(data.get("xyz", (0, 0, 0)), data.get("rpy", (0, 0, 0)))
