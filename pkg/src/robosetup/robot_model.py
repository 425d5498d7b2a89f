"""URDF-subset robot description: parsing, validation, and the kinematic tree.

The parsed model is immutable and is the single source of geometric and
kinematic truth for every other component.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UrdfError
from .geometry import (
    Box,
    ConvexMesh,
    Cylinder,
    Pose,
    Shape,
    Sphere,
)

JOINT_KINDS = ("fixed", "revolute", "continuous", "prismatic", "floating", "planar")

# elements we understand; anything else is ignored with a warning
_KNOWN_ROBOT_CHILDREN = {"link", "joint", "material"}
_KNOWN_LINK_CHILDREN = {"visual", "collision", "inertial"}
_KNOWN_JOINT_CHILDREN = {
    "origin",
    "parent",
    "child",
    "axis",
    "limit",
    "mimic",
    "dynamics",
    "safety_controller",
    "calibration",
}


@dataclass(frozen=True)
class JointLimits:
    lower: float
    upper: float
    max_velocity: float | None = None
    max_effort: float | None = None


@dataclass(frozen=True)
class Link:
    name: str
    collision_geoms: tuple[tuple[Shape, Pose], ...] = ()
    visual_geoms: tuple[tuple[Shape, Pose], ...] = ()


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str
    parent_link: str
    child_link: str
    origin: Pose = field(default_factory=Pose.identity)
    axis: tuple[float, float, float] | None = None
    limits: JointLimits | None = None
    mimic: bool = False

    def axis_vector(self) -> np.ndarray:
        return np.asarray(self.axis if self.axis is not None else (0.0, 0.0, 1.0))


@dataclass(frozen=True)
class RobotModel:
    name: str
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    root_link: str
    active_joints: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def link(self, name: str) -> Link:
        try:
            return self._link_map[name]
        except KeyError:
            raise UrdfError(f"unknown link '{name}'", element=name) from None

    def joint(self, name: str) -> Joint:
        try:
            return self._joint_map[name]
        except KeyError:
            raise UrdfError(f"unknown joint '{name}'", element=name) from None

    def has_link(self, name: str) -> bool:
        return name in self._link_map

    def has_joint(self, name: str) -> bool:
        return name in self._joint_map

    def parent_joint(self, link_name: str) -> Joint | None:
        """The joint whose child is the given link (None for the root)."""
        return self._parent_joint.get(link_name)

    def child_joints(self, link_name: str) -> tuple[Joint, ...]:
        return self._child_joints.get(link_name, ())

    def joint_order(self, joint_name: str) -> int:
        """Index of a joint in depth-first tree order."""
        return self._dfs_index[joint_name]

    def dfs_joints(self) -> tuple[Joint, ...]:
        """All joints in depth-first order from the root (document order among siblings)."""
        return self._dfs_joints

    def link_depth(self, link_name: str) -> int:
        return self._depth[link_name]

    def chain_to_root(self, link_name: str) -> list[Joint]:
        """Joints from the root down to link_name, in root-first order."""
        chain = []
        cur = link_name
        while cur != self.root_link:
            joint = self._parent_joint[cur]
            chain.append(joint)
            cur = joint.parent_link
        chain.reverse()
        return chain

    def __post_init__(self):
        object.__setattr__(self, "_link_map", {l.name: l for l in self.links})
        object.__setattr__(self, "_joint_map", {j.name: j for j in self.joints})
        parent_joint = {j.child_link: j for j in self.joints}
        child_joints: dict[str, list[Joint]] = {}
        for j in self.joints:
            child_joints.setdefault(j.parent_link, []).append(j)
        object.__setattr__(self, "_parent_joint", parent_joint)
        object.__setattr__(
            self, "_child_joints", {k: tuple(v) for k, v in child_joints.items()}
        )
        dfs: list[Joint] = []
        depth = {self.root_link: 0}

        def _walk(link: str):
            for joint in child_joints.get(link, ()):
                dfs.append(joint)
                depth[joint.child_link] = depth[link] + 1
                _walk(joint.child_link)

        _walk(self.root_link)
        object.__setattr__(self, "_dfs_joints", tuple(dfs))
        object.__setattr__(self, "_dfs_index", {j.name: i for i, j in enumerate(dfs)})
        object.__setattr__(self, "_depth", depth)


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning" | "info"
    message: str
    element: str | None = None

    def __str__(self):
        loc = f" [{self.element}]" if self.element else ""
        return f"{self.severity.upper()}{loc}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def add(self, severity: str, message: str, element: str | None = None):
        self.findings.append(Finding(severity, message, element))

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> dict:
        return {
            "findings": [
                {"severity": f.severity, "message": f.message, "element": f.element}
                for f in self.findings
            ],
            "error_count": len(self.errors),
            "warning_count": len(self.warnings),
        }

    def __str__(self):
        if not self.findings:
            return "no findings"
        return "\n".join(str(f) for f in self.findings)


def _parse_floats(text: str | None, count: int, default=0.0) -> list[float]:
    if text is None:
        return [default] * count
    parts = text.split()
    if len(parts) != count:
        raise ValueError(f"expected {count} numbers, got {text!r}")
    return [float(p) for p in parts]


def _parse_origin(elem: ET.Element | None) -> Pose:
    if elem is None:
        return Pose.identity()
    xyz = _parse_floats(elem.get("xyz"), 3)
    rpy = _parse_floats(elem.get("rpy"), 3)
    return Pose.from_xyz_rpy(xyz, rpy)


def load_mesh_vertices(path: Path) -> np.ndarray:
    """Read vertex positions from an ASCII STL or OFF file."""
    text = path.read_text()
    suffix = path.suffix.lower()
    if suffix == ".stl":
        verts = []
        for line in text.splitlines():
            parts = line.split()
            if len(parts) == 4 and parts[0] == "vertex":
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        if not verts:
            raise ValueError("no vertices found (binary STL is not supported)")
        return np.asarray(verts)
    if suffix == ".off":
        lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or lines[0] != "OFF":
            raise ValueError("missing OFF header")
        n_verts = int(lines[1].split()[0])
        verts = [[float(x) for x in lines[2 + i].split()[:3]] for i in range(n_verts)]
        return np.asarray(verts)
    raise ValueError(f"unsupported mesh format {suffix!r} (ASCII STL and OFF only)")


def _parse_geometry(
    geom_elem: ET.Element | None, owner: str, asset_root: Path | None
) -> Shape:
    if geom_elem is None:
        raise UrdfError(f"missing <geometry> element in {owner}", element=owner)
    children = [c for c in geom_elem if isinstance(c.tag, str)]
    if len(children) != 1:
        raise UrdfError(f"<geometry> in {owner} must hold exactly one shape", element=owner)
    shape = children[0]
    try:
        if shape.tag == "sphere":
            return Sphere(float(shape.get("radius", 0)))
        if shape.tag == "box":
            size = _parse_floats(shape.get("size"), 3)
            return Box((size[0] / 2.0, size[1] / 2.0, size[2] / 2.0))
        if shape.tag == "cylinder":
            return Cylinder(float(shape.get("radius", 0)), float(shape.get("length", 0)))
        if shape.tag == "mesh":
            filename = shape.get("filename")
            if not filename:
                raise UrdfError(f"mesh in {owner} has no filename", element=owner)
            base = asset_root if asset_root is not None else Path(".")
            path = (base / filename).resolve()
            if not path.exists():
                raise UrdfError(
                    f"mesh file '{filename}' for {owner} not found under {base}",
                    element=owner,
                )
            verts = load_mesh_vertices(path)
            scale = shape.get("scale")
            if scale:
                verts = verts * np.asarray(_parse_floats(scale, 3))
            return ConvexMesh.from_points(verts)
    except UrdfError:
        raise
    except ValueError as exc:
        raise UrdfError(f"invalid geometry in {owner}: {exc}", element=owner) from exc
    raise UrdfError(f"unknown shape <{shape.tag}> in {owner}", element=owner)


def _parse_link(
    elem: ET.Element, warnings: list[str], asset_root: Path | None
) -> Link:
    name = elem.get("name")
    if not name:
        raise UrdfError("link without a name attribute", element="link")
    collisions = []
    visuals = []
    for child in elem:
        if child.tag in ("visual", "collision"):
            shape = _parse_geometry(child.find("geometry"), f"link '{name}'", asset_root)
            pose = _parse_origin(child.find("origin"))
            (visuals if child.tag == "visual" else collisions).append((shape, pose))
        elif child.tag not in _KNOWN_LINK_CHILDREN:
            warnings.append(f"ignoring unknown element <{child.tag}> in link '{name}'")
    return Link(name, tuple(collisions), tuple(visuals))


def _parse_joint(elem: ET.Element, warnings: list[str]) -> Joint:
    name = elem.get("name")
    if not name:
        raise UrdfError("joint without a name attribute", element="joint")
    kind = elem.get("type")
    if kind not in JOINT_KINDS:
        raise UrdfError(f"joint '{name}' has unknown type {kind!r}", element=name)
    parent_elem = elem.find("parent")
    child_elem = elem.find("child")
    if parent_elem is None or parent_elem.get("link") is None:
        raise UrdfError(f"joint '{name}' lacks a parent link", element=name)
    if child_elem is None or child_elem.get("link") is None:
        raise UrdfError(f"joint '{name}' lacks a child link", element=name)

    try:
        origin = _parse_origin(elem.find("origin"))
    except ValueError as exc:
        raise UrdfError(f"bad origin on joint '{name}': {exc}", element=name) from exc

    axis = None
    if kind in ("revolute", "continuous", "prismatic", "planar", "floating"):
        axis_elem = elem.find("axis")
        vec = np.asarray(
            _parse_floats(axis_elem.get("xyz") if axis_elem is not None else "1 0 0", 3)
        )
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise UrdfError(f"joint '{name}' has a zero-norm axis", element=name)
        vec = vec / norm
        axis = (float(vec[0]), float(vec[1]), float(vec[2]))

    limits = None
    limit_elem = elem.find("limit")
    if limit_elem is not None:
        lower = float(limit_elem.get("lower", 0.0))
        upper = float(limit_elem.get("upper", 0.0))
        vel = limit_elem.get("velocity")
        eff = limit_elem.get("effort")
        limits = JointLimits(
            lower,
            upper,
            float(vel) if vel is not None else None,
            float(eff) if eff is not None else None,
        )
    if kind in ("revolute", "prismatic"):
        if limits is None:
            raise UrdfError(
                f"{kind} joint '{name}' requires a <limit> element", element=name
            )
        if limits.lower > limits.upper:
            raise UrdfError(
                f"joint '{name}' has lower limit above upper limit", element=name
            )
    elif kind == "continuous" and limits is not None:
        # continuous joints have no position limits; keep velocity/effort only
        limits = JointLimits(
            float("-inf"), float("inf"), limits.max_velocity, limits.max_effort
        )

    mimic = elem.find("mimic") is not None
    if mimic:
        warnings.append(
            f"joint '{name}' declares <mimic>, which is ignored; "
            "the joint is excluded from the active set"
        )
    for child in elem:
        if child.tag not in _KNOWN_JOINT_CHILDREN:
            warnings.append(f"ignoring unknown element <{child.tag}> in joint '{name}'")

    return Joint(name, kind, parent_elem.get("link"), child_elem.get("link"),
                 origin, axis, limits, mimic)


def parse_urdf(document: str, asset_root: str | Path | None = None) -> RobotModel:
    """Parse a URDF document into an immutable RobotModel.

    Mesh filenames resolve relative to asset_root. Unknown elements are
    ignored and reported through RobotModel.warnings.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise UrdfError(f"malformed XML: {exc}", element="document") from exc
    if root.tag != "robot":
        raise UrdfError(f"root element is <{root.tag}>, expected <robot>", element=root.tag)
    name = root.get("name") or "robot"
    asset_path = Path(asset_root) if asset_root is not None else None

    warnings: list[str] = []
    links: list[Link] = []
    joints: list[Joint] = []
    for child in root:
        if child.tag == "link":
            links.append(_parse_link(child, warnings, asset_path))
        elif child.tag == "joint":
            joints.append(_parse_joint(child, warnings))
        elif isinstance(child.tag, str) and child.tag not in _KNOWN_ROBOT_CHILDREN:
            warnings.append(f"ignoring unknown element <{child.tag}>")

    link_names = [l.name for l in links]
    seen = set()
    for ln in link_names:
        if ln in seen:
            raise UrdfError(f"duplicate link name '{ln}'", element=ln)
        seen.add(ln)
    seen = set()
    for j in joints:
        if j.name in seen:
            raise UrdfError(f"duplicate joint name '{j.name}'", element=j.name)
        seen.add(j.name)

    link_set = set(link_names)
    for j in joints:
        if j.parent_link not in link_set:
            raise UrdfError(
                f"joint '{j.name}' references undeclared parent link '{j.parent_link}'",
                element=f"{j.name}/{j.parent_link}",
            )
        if j.child_link not in link_set:
            raise UrdfError(
                f"joint '{j.name}' references undeclared child link '{j.child_link}'",
                element=f"{j.name}/{j.child_link}",
            )

    children = {}
    for j in joints:
        if j.child_link in children:
            raise UrdfError(
                f"link '{j.child_link}' is the child of both "
                f"'{children[j.child_link]}' and '{j.name}'",
                element=j.child_link,
            )
        children[j.child_link] = j.name
    roots = [ln for ln in link_names if ln not in children]
    if not links:
        raise UrdfError("document declares no links", element=name)
    if len(roots) != 1:
        raise UrdfError(
            f"expected exactly one root link, found {len(roots)}: {', '.join(sorted(roots)) or 'none (cycle)'}",
            element=name,
        )
    root_link = roots[0]

    # reachability from the root catches cycles among non-root links
    child_joints: dict[str, list[Joint]] = {}
    for j in joints:
        child_joints.setdefault(j.parent_link, []).append(j)
    reached = set()
    stack = [root_link]
    while stack:
        cur = stack.pop()
        reached.add(cur)
        for j in child_joints.get(cur, ()):
            if j.child_link in reached:
                raise UrdfError(f"cycle through link '{j.child_link}'", element=j.child_link)
            stack.append(j.child_link)
    unreachable = link_set - reached
    if unreachable:
        raise UrdfError(
            f"links not connected to the tree: {', '.join(sorted(unreachable))}",
            element=sorted(unreachable)[0],
        )

    # active joints in depth-first order, document order among siblings
    active: list[str] = []

    def _walk(link: str):
        for j in child_joints.get(link, ()):
            if j.kind != "fixed" and not j.mimic:
                active.append(j.name)
            _walk(j.child_link)

    _walk(root_link)

    return RobotModel(
        name=name,
        links=tuple(links),
        joints=tuple(joints),
        root_link=root_link,
        active_joints=tuple(active),
        warnings=tuple(warnings),
    )


def parse_urdf_file(path: str | Path, asset_root: str | Path | None = None) -> RobotModel:
    path = Path(path)
    if asset_root is None:
        asset_root = path.parent
    return parse_urdf(path.read_text(), asset_root)


def validate_model(model: RobotModel) -> ValidationReport:
    """Structural findings for an already-parsed model (never errors)."""
    report = ValidationReport()
    for link in model.links:
        if not link.collision_geoms:
            report.add(
                "warning",
                f"link '{link.name}' has no collision geometry and is invisible to collision checking",
                element=link.name,
            )
    for joint in model.joints:
        if (
            joint.kind in ("revolute", "prismatic")
            and joint.limits is not None
            and joint.limits.lower == joint.limits.upper
        ):
            report.add(
                "warning",
                f"joint '{joint.name}' has a zero-range limit [{joint.limits.lower}, {joint.limits.upper}]",
                element=joint.name,
            )
    report.add(
        "info",
        f"model '{model.name}': {len(model.links)} links, {len(model.joints)} joints, "
        f"{len(model.active_joints)} active joints, root '{model.root_link}'",
    )
    for w in model.warnings:
        report.add("warning", w)
    return report


def collidable_pairs(model: RobotModel) -> list[tuple[str, str]]:
    """All unordered pairs of distinct links that both carry collision geometry."""
    geo_links = sorted(l.name for l in model.links if l.collision_geoms)
    pairs = []
    for i, a in enumerate(geo_links):
        for b in geo_links[i + 1 :]:
            pairs.append((a, b))
    return pairs
