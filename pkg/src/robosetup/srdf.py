"""Semantic layer over the robot model: planning groups, named poses, end
effectors, virtual joints, passive joints, and disabled collision pairs,
with a deterministic XML serialization.

Serialization is byte-deterministic: fixed attribute order, two-space
indentation, disabled pairs in lexicographic order.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .collision import ACM_REASONS, AllowedCollisionMatrix, pair_key
from .errors import SrdfError
from .geometry import Pose, quat_from_axis_angle
from .kinematics import Dof, JointGroup, RobotState, joint_dofs
from .robot_model import RobotModel, ValidationReport

DEFAULT_WORKSPACE = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))


@dataclass(frozen=True)
class PlanningGroup:
    name: str
    joints: tuple[str, ...] = ()
    links: tuple[str, ...] = ()
    chains: tuple[tuple[str, str], ...] = ()  # (base_link, tip_link)
    subgroups: tuple[str, ...] = ()


@dataclass(frozen=True)
class GroupState:
    name: str
    group: str
    values: tuple[tuple[str, float], ...]  # (dof name, value), document order

    def as_dict(self) -> dict[str, float]:
        return dict(self.values)


@dataclass(frozen=True)
class EndEffector:
    name: str
    group: str
    parent_link: str
    parent_group: str | None = None


@dataclass(frozen=True)
class VirtualJoint:
    name: str
    kind: str  # fixed | planar | floating
    parent_frame: str
    child_link: str
    workspace: tuple[tuple[float, float], ...] | None = None  # x/y/z translation bounds

    def bounds(self) -> tuple[tuple[float, float], ...]:
        return self.workspace if self.workspace is not None else DEFAULT_WORKSPACE


@dataclass
class SemanticModel:
    robot_name: str
    groups: list[PlanningGroup] = field(default_factory=list)
    group_states: list[GroupState] = field(default_factory=list)
    end_effectors: list[EndEffector] = field(default_factory=list)
    virtual_joints: list[VirtualJoint] = field(default_factory=list)
    passive_joints: list[str] = field(default_factory=list)
    disabled_pairs: dict[tuple[str, str], str] = field(default_factory=dict)

    def group(self, name: str) -> PlanningGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise SrdfError(f"unknown group '{name}'", element=name)

    def has_group(self, name: str) -> bool:
        return any(g.name == name for g in self.groups)

    def group_state(self, name: str, group: str | None = None) -> GroupState:
        for gs in self.group_states:
            if gs.name == name and (group is None or gs.group == group):
                return gs
        raise SrdfError(f"unknown group state '{name}'", element=name)

    def disable_pair(self, a: str, b: str, reason: str) -> None:
        if reason not in ACM_REASONS:
            raise SrdfError(f"unknown disable reason {reason!r}", element=f"{a}-{b}")
        self.disabled_pairs[pair_key(a, b)] = reason

    def apply_acm(self, acm: AllowedCollisionMatrix) -> None:
        """Replace the disabled-pair set with the matrix's disabled entries."""
        self.disabled_pairs = {
            pair: entry.reason for pair, entry in acm.entries.items() if entry.disabled
        }

    def to_acm(self) -> AllowedCollisionMatrix:
        acm = AllowedCollisionMatrix()
        for (a, b), reason in self.disabled_pairs.items():
            # stats do not survive the SRDF round trip; mark one synthetic sample
            stats = (1, 1 if reason == "Always" else 0)
            if reason in ("Never", "Always", "Default"):
                acm.set(a, b, True, reason, samples=stats[0], collisions=stats[1])
            else:
                acm.set(a, b, True, reason)
        return acm

    def copy(self) -> "SemanticModel":
        return SemanticModel(
            robot_name=self.robot_name,
            groups=list(self.groups),
            group_states=list(self.group_states),
            end_effectors=list(self.end_effectors),
            virtual_joints=list(self.virtual_joints),
            passive_joints=list(self.passive_joints),
            disabled_pairs=dict(self.disabled_pairs),
        )

    def __eq__(self, other):
        if not isinstance(other, SemanticModel):
            return NotImplemented
        return (
            self.robot_name == other.robot_name
            and self.groups == other.groups
            and self.group_states == other.group_states
            and self.end_effectors == other.end_effectors
            and self.virtual_joints == other.virtual_joints
            and self.passive_joints == other.passive_joints
            and self.disabled_pairs == other.disabled_pairs
        )


def _chain_path(model: RobotModel, base: str, tip: str, group_name: str):
    """Joints along the unique directed path base -> tip (root-first order)."""
    if not model.has_link(base):
        raise SrdfError(
            f"chain base link '{base}' of group '{group_name}' not in model", element=base
        )
    if not model.has_link(tip):
        raise SrdfError(
            f"chain tip link '{tip}' of group '{group_name}' not in model", element=tip
        )
    joints = []
    links = [tip]
    cur = tip
    while cur != base:
        joint = model.parent_joint(cur)
        if joint is None:
            raise SrdfError(
                f"no directed path from '{base}' to '{tip}' in group '{group_name}'",
                element=f"{base}->{tip}",
            )
        joints.append(joint)
        cur = joint.parent_link
        links.append(cur)
    joints.reverse()
    links.reverse()
    return joints, links


def resolve_group(
    model: RobotModel, semantic: SemanticModel, group_name: str, _visiting=None
) -> tuple[list[str], list[str], bool]:
    """Flatten a group to (ordered active joints, ordered links, is_chain).

    Chain declarations resolve in chain order; everything else follows
    depth-first model order. Passive joints are removed from the active set.
    """
    visiting = _visiting or ()
    if group_name in visiting:
        cycle = " -> ".join((*visiting, group_name))
        raise SrdfError(f"subgroup cycle: {cycle}", element=group_name)
    group = semantic.group(group_name)

    joint_names: list[str] = []
    link_names: list[str] = []

    def add_joint(name: str) -> None:
        if name not in joint_names:
            joint_names.append(name)

    def add_link(name: str) -> None:
        if name not in link_names:
            link_names.append(name)

    for base, tip in group.chains:
        joints, links = _chain_path(model, base, tip, group_name)
        for j in joints:
            add_joint(j.name)
        for l in links:
            add_link(l)
    for jn in group.joints:
        if not model.has_joint(jn):
            raise SrdfError(
                f"group '{group_name}' references unknown joint '{jn}'", element=jn
            )
        add_joint(jn)
        add_link(model.joint(jn).child_link)
    for ln in group.links:
        if not model.has_link(ln):
            raise SrdfError(
                f"group '{group_name}' references unknown link '{ln}'", element=ln
            )
        add_link(ln)
        parent = model.parent_joint(ln)
        if parent is not None:
            add_joint(parent.name)
    for sub in group.subgroups:
        sub_joints, sub_links, _ = resolve_group(
            model, semantic, sub, (*visiting, group_name)
        )
        for j in sub_joints:
            add_joint(j)
        for l in sub_links:
            add_link(l)

    passive = set(semantic.passive_joints)
    active = [
        j
        for j in joint_names
        if model.joint(j).kind != "fixed"
        and not model.joint(j).mimic
        and j not in passive
    ]
    if not active:
        raise SrdfError(
            f"group '{group_name}' resolves to no active joints", element=group_name
        )

    # depth-first model order; on a serial path this is also chain order
    active.sort(key=model.joint_order)
    link_names.sort(
        key=lambda l: -1
        if l == model.root_link
        else model.joint_order(model.parent_joint(l).name)
    )
    return active, link_names, _is_serial(model, active)


def _is_serial(model: RobotModel, joint_names: list[str]) -> bool:
    """True when the joints lie on a single root-to-leaf path."""
    if not joint_names:
        return False
    deepest = max(joint_names, key=lambda j: model.link_depth(model.joint(j).child_link))
    on_chain = {j.name for j in model.chain_to_root(model.joint(deepest).child_link)}
    return all(j in on_chain for j in joint_names)


def group_workspace(semantic: SemanticModel):
    """Translation bounds from the first non-fixed virtual joint, if any."""
    for vj in semantic.virtual_joints:
        if vj.kind != "fixed":
            return vj.bounds()
    return None


def joint_group(model: RobotModel, semantic: SemanticModel, group_name: str) -> JointGroup:
    """Build the kinematics-facing view of a planning group."""
    joints, links, is_chain = resolve_group(model, semantic, group_name)
    dofs: list[Dof] = []
    ws = group_workspace(semantic)
    for jn in joints:
        dofs.extend(joint_dofs(model.joint(jn), ws))
    base_link = None
    tip_link = None
    if is_chain:
        first = model.joint(joints[0])
        last = model.joint(joints[-1])
        base_link = first.parent_link
        tip_link = last.child_link
        group = semantic.group(group_name)
        if len(group.chains) == 1:
            base_link, tip_link = group.chains[0]
    return JointGroup(
        name=group_name,
        joints=tuple(joints),
        links=tuple(links),
        dofs=tuple(dofs),
        is_chain=is_chain,
        base_link=base_link,
        tip_link=tip_link,
    )


def virtual_joint_state_dofs(vj: VirtualJoint) -> list[Dof]:
    """Sampleable DOFs contributed by a non-fixed virtual joint."""
    if vj.kind == "fixed":
        return []
    ws = vj.bounds()
    if vj.kind == "planar":
        return [
            Dof(f"{vj.name}/x", vj.name, ws[0][0], ws[0][1]),
            Dof(f"{vj.name}/y", vj.name, ws[1][0], ws[1][1]),
            Dof(f"{vj.name}/theta", vj.name, -math.pi, math.pi, wraps=True),
        ]
    if vj.kind == "floating":
        return [
            Dof(f"{vj.name}/x", vj.name, ws[0][0], ws[0][1]),
            Dof(f"{vj.name}/y", vj.name, ws[1][0], ws[1][1]),
            Dof(f"{vj.name}/z", vj.name, ws[2][0], ws[2][1]),
            Dof(f"{vj.name}/roll", vj.name, -math.pi, math.pi, wraps=True),
            Dof(f"{vj.name}/pitch", vj.name, -math.pi, math.pi, wraps=True),
            Dof(f"{vj.name}/yaw", vj.name, -math.pi, math.pi, wraps=True),
        ]
    raise SrdfError(f"virtual joint '{vj.name}' has unknown kind '{vj.kind}'")


def virtual_joint_pose(vj: VirtualJoint, state: RobotState) -> Pose:
    """Root pose contributed by a virtual joint's DOF values."""
    if vj.kind == "fixed":
        return Pose.identity()
    x = state.get(f"{vj.name}/x", 0.0)
    y = state.get(f"{vj.name}/y", 0.0)
    if vj.kind == "planar":
        theta = state.get(f"{vj.name}/theta", 0.0)
        return Pose((x, y, 0.0), quat_from_axis_angle((0.0, 0.0, 1.0), theta))
    z = state.get(f"{vj.name}/z", 0.0)
    from .geometry import quat_from_rpy

    rpy = [state.get(f"{vj.name}/{k}", 0.0) for k in ("roll", "pitch", "yaw")]
    return Pose((x, y, z), quat_from_rpy(*rpy))


def validate_semantic(model: RobotModel, semantic: SemanticModel) -> ValidationReport:
    """Reference and consistency findings for the semantic document."""
    report = ValidationReport()
    names = set()
    for g in semantic.groups:
        if g.name in names:
            report.add("error", f"duplicate group name '{g.name}'", element=g.name)
        names.add(g.name)

    resolved: dict[str, tuple[list[str], list[str], bool]] = {}
    for g in semantic.groups:
        try:
            resolved[g.name] = resolve_group(model, semantic, g.name)
        except SrdfError as exc:
            report.add("error", exc.message, element=exc.element)

    for gs in semantic.group_states:
        if not semantic.has_group(gs.group):
            report.add(
                "error",
                f"group state '{gs.name}' references unknown group '{gs.group}'",
                element=gs.name,
            )
            continue
        if gs.group not in resolved:
            continue
        joints, _, _ = resolved[gs.group]
        expected = set()
        for jn in joints:
            expected.update(d.name for d in joint_dofs(model.joint(jn)))
        given = set(gs.as_dict())
        for missing in sorted(expected - given):
            report.add(
                "error",
                f"group state '{gs.name}' omits joint '{missing}' of group '{gs.group}'",
                element=missing,
            )
        for extra in sorted(given - expected):
            report.add(
                "error",
                f"group state '{gs.name}' sets '{extra}', which is not in group '{gs.group}'",
                element=extra,
            )

    for eef in semantic.end_effectors:
        if not semantic.has_group(eef.group):
            report.add(
                "error",
                f"end effector '{eef.name}' references unknown group '{eef.group}'",
                element=eef.name,
            )
        if not model.has_link(eef.parent_link):
            report.add(
                "error",
                f"end effector '{eef.name}' has unknown parent link '{eef.parent_link}'",
                element=eef.name,
            )
        if eef.parent_group is not None:
            if not semantic.has_group(eef.parent_group):
                report.add(
                    "error",
                    f"end effector '{eef.name}' references unknown parent group '{eef.parent_group}'",
                    element=eef.name,
                )
            elif eef.group in resolved and eef.parent_group in resolved:
                overlap = set(resolved[eef.group][0]) & set(resolved[eef.parent_group][0])
                if overlap:
                    report.add(
                        "warning",
                        f"end effector group '{eef.group}' shares joints with its "
                        f"parent group '{eef.parent_group}': {', '.join(sorted(overlap))}",
                        element=eef.name,
                    )

    for vj in semantic.virtual_joints:
        if vj.kind not in ("fixed", "planar", "floating"):
            report.add(
                "error", f"virtual joint '{vj.name}' has unknown kind '{vj.kind}'", element=vj.name
            )
        if not model.has_link(vj.child_link):
            report.add(
                "error",
                f"virtual joint '{vj.name}' attaches unknown link '{vj.child_link}'",
                element=vj.name,
            )
        elif vj.child_link != model.root_link:
            report.add(
                "warning",
                f"virtual joint '{vj.name}' attaches '{vj.child_link}', "
                f"not the model root '{model.root_link}'",
                element=vj.name,
            )

    for pj in semantic.passive_joints:
        if not model.has_joint(pj):
            report.add("error", f"unknown passive joint '{pj}'", element=pj)
    passive = set(semantic.passive_joints)
    for g in semantic.groups:
        declared = set(g.joints)
        hit = declared & passive
        for j in sorted(hit):
            report.add(
                "warning",
                f"group '{g.name}' lists passive joint '{j}'; it is excluded from planning",
                element=j,
            )

    for (a, b), reason in semantic.disabled_pairs.items():
        for link in (a, b):
            if not model.has_link(link):
                report.add(
                    "error", f"disabled pair references unknown link '{link}'", element=link
                )
        if reason not in ACM_REASONS:
            report.add(
                "error", f"disabled pair ({a}, {b}) has unknown reason '{reason}'", element=a
            )
    return report


# --- XML serialization --------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_srdf(semantic: SemanticModel) -> str:
    """Emit the semantic model as deterministic SRDF XML."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(f'<robot name="{_escape(semantic.robot_name)}">')
    for g in semantic.groups:
        children = g.joints or g.links or g.chains or g.subgroups
        if not children:
            lines.append(f'  <group name="{_escape(g.name)}"/>')
            continue
        lines.append(f'  <group name="{_escape(g.name)}">')
        for jn in g.joints:
            lines.append(f'    <joint name="{_escape(jn)}"/>')
        for ln in g.links:
            lines.append(f'    <link name="{_escape(ln)}"/>')
        for base, tip in g.chains:
            lines.append(
                f'    <chain base_link="{_escape(base)}" tip_link="{_escape(tip)}"/>'
            )
        for sub in g.subgroups:
            lines.append(f'    <group name="{_escape(sub)}"/>')
        lines.append("  </group>")
    for gs in semantic.group_states:
        lines.append(
            f'  <group_state name="{_escape(gs.name)}" group="{_escape(gs.group)}">'
        )
        for jn, value in gs.values:
            lines.append(f'    <joint name="{_escape(jn)}" value="{_fmt(value)}"/>')
        lines.append("  </group_state>")
    for eef in semantic.end_effectors:
        attrs = (
            f'name="{_escape(eef.name)}" parent_link="{_escape(eef.parent_link)}" '
            f'group="{_escape(eef.group)}"'
        )
        if eef.parent_group is not None:
            attrs += f' parent_group="{_escape(eef.parent_group)}"'
        lines.append(f"  <end_effector {attrs}/>")
    for vj in semantic.virtual_joints:
        attrs = (
            f'name="{_escape(vj.name)}" type="{_escape(vj.kind)}" '
            f'parent_frame="{_escape(vj.parent_frame)}" child_link="{_escape(vj.child_link)}"'
        )
        if vj.workspace is not None:
            flat = " ".join(_fmt(v) for pair in vj.workspace for v in pair)
            attrs += f' workspace="{flat}"'
        lines.append(f"  <virtual_joint {attrs}/>")
    for pj in semantic.passive_joints:
        lines.append(f'  <passive_joint name="{_escape(pj)}"/>')
    for (a, b), reason in sorted(semantic.disabled_pairs.items()):
        lines.append(
            f'  <disable_collisions link1="{_escape(a)}" link2="{_escape(b)}" '
            f'reason="{_escape(reason)}"/>'
        )
    lines.append("</robot>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def parse_srdf(document: str, model: RobotModel) -> SemanticModel:
    """Parse SRDF XML, resolving references against the given model."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise SrdfError(f"malformed XML: {exc}", element="document") from exc
    if root.tag != "robot":
        raise SrdfError(f"root element is <{root.tag}>, expected <robot>", element=root.tag)
    semantic = SemanticModel(robot_name=root.get("name") or model.name)

    for elem in root:
        if elem.tag == "group":
            joints, links, chains, subgroups = [], [], [], []
            for child in elem:
                if child.tag == "joint":
                    joints.append(child.get("name"))
                elif child.tag == "link":
                    links.append(child.get("name"))
                elif child.tag == "chain":
                    chains.append((child.get("base_link"), child.get("tip_link")))
                elif child.tag == "group":
                    subgroups.append(child.get("name"))
            semantic.groups.append(
                PlanningGroup(
                    elem.get("name"),
                    tuple(joints),
                    tuple(links),
                    tuple(chains),
                    tuple(subgroups),
                )
            )
        elif elem.tag == "group_state":
            values = tuple(
                (child.get("name"), float(child.get("value")))
                for child in elem
                if child.tag == "joint"
            )
            semantic.group_states.append(
                GroupState(elem.get("name"), elem.get("group"), values)
            )
        elif elem.tag == "end_effector":
            semantic.end_effectors.append(
                EndEffector(
                    elem.get("name"),
                    elem.get("group"),
                    elem.get("parent_link"),
                    elem.get("parent_group"),
                )
            )
        elif elem.tag == "virtual_joint":
            ws = None
            raw = elem.get("workspace")
            if raw is not None:
                vals = [float(v) for v in raw.split()]
                if len(vals) != 6:
                    raise SrdfError(
                        f"virtual joint '{elem.get('name')}' workspace needs 6 numbers",
                        element=elem.get("name"),
                    )
                ws = ((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]))
            semantic.virtual_joints.append(
                VirtualJoint(
                    elem.get("name"),
                    elem.get("type"),
                    elem.get("parent_frame"),
                    elem.get("child_link"),
                    ws,
                )
            )
        elif elem.tag == "passive_joint":
            semantic.passive_joints.append(elem.get("name"))
        elif elem.tag == "disable_collisions":
            a, b = elem.get("link1"), elem.get("link2")
            reason = elem.get("reason", "User")
            semantic.disabled_pairs[pair_key(a, b)] = reason

    report = validate_semantic(model, semantic)
    dangling = [f for f in report.errors if "unknown" in f.message]
    if dangling:
        first = dangling[0]
        raise SrdfError(first.message, element=first.element)
    return semantic
