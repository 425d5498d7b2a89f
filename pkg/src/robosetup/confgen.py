"""Deterministic configuration bundle generation: the final setup step.

All emitted formats are line-oriented ``key: value`` text with ``#`` comments
so users can edit them by hand and reload them through parse_conf.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BundleWriteError, ConfigError
from .kinematics import IkParams, default_projection
from .robot_model import RobotModel
from .srdf import SemanticModel, joint_group, serialize_srdf, validate_semantic

BUNDLE_DIR = "config"


@dataclass(frozen=True)
class GenOptions:
    velocity_scaling: float = 1.0
    default_velocity: float = 1.0  # used when the robot description has none
    default_acceleration: float = 1.0
    ik_params: IkParams = field(default_factory=IkParams)
    kinematics_solver: str = "dls"
    planner: str = "rrt"
    goal_bias: float = 0.05
    time_budget: float = 5.0
    goal_tolerance: float = 1e-3
    resolution_fraction: float = 0.01
    adapters: tuple[str, ...] = ("fix_start_bounds", "time_parameterization")
    rng_seed: int = 0

    def __post_init__(self):
        for name in (
            "velocity_scaling",
            "default_velocity",
            "default_acceleration",
            "time_budget",
            "goal_tolerance",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not (0.0 <= self.goal_bias < 1.0):
            raise ConfigError("goal_bias must lie in [0, 1)")
        if not (0.0 < self.resolution_fraction < 1.0):
            raise ConfigError("resolution_fraction must lie in (0, 1)")


@dataclass
class ConfigBundle:
    files: dict[str, str]
    manifest: list[tuple[str, str]]  # (relative path, sha256)
    inputs_digest: str

    def to_json(self) -> dict:
        return {
            "manifest": [{"path": p, "sha256": h} for p, h in self.manifest],
            "inputs_digest": self.inputs_digest,
        }


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def joint_limits_text(model: RobotModel, options: GenOptions) -> str:
    lines = [
        "# Per-joint kinematic limits used for trajectory time parameterization.",
        "# Velocities come from the robot description scaled by "
        f"{_fmt(options.velocity_scaling)}; accelerations are defaults.",
    ]
    for jn in model.active_joints:
        joint = model.joint(jn)
        vmax = options.default_velocity
        if joint.limits is not None and joint.limits.max_velocity is not None:
            vmax = joint.limits.max_velocity
        lines.append(f"{jn}.max_velocity: {_fmt(vmax * options.velocity_scaling)}")
        lines.append(f"{jn}.max_acceleration: {_fmt(options.default_acceleration)}")
    return "\n".join(lines) + "\n"


def kinematics_conf_text(
    model: RobotModel, semantic: SemanticModel, options: GenOptions
) -> str:
    lines = ["# Inverse kinematics configuration per planning group."]
    ik = options.ik_params
    for group in semantic.groups:
        jg = joint_group(model, semantic, group.name)
        if not jg.is_chain:
            lines.append(f"{group.name}.solver: none  # not a serial chain")
            continue
        lines.append(f"{group.name}.solver: {options.kinematics_solver}")
        lines.append(f"{group.name}.position_tolerance: {_fmt(ik.position_tolerance)}")
        lines.append(
            f"{group.name}.orientation_tolerance: {_fmt(ik.orientation_tolerance)}"
        )
        lines.append(f"{group.name}.max_iterations: {ik.max_iterations}")
        lines.append(f"{group.name}.damping: {_fmt(ik.damping)}")
        lines.append(f"{group.name}.restarts: {ik.restarts}")
    return "\n".join(lines) + "\n"


def planning_conf_text(
    model: RobotModel, semantic: SemanticModel, options: GenOptions
) -> str:
    lines = [
        "# Planner defaults; the step size is resolution_fraction of the space extent.",
        f"planner: {options.planner}",
        f"goal_bias: {_fmt(options.goal_bias)}",
        f"time_budget: {_fmt(options.time_budget)}",
        f"goal_tolerance: {_fmt(options.goal_tolerance)}",
        f"resolution_fraction: {_fmt(options.resolution_fraction)}",
        f"adapters: {','.join(options.adapters)}",
        f"rng_seed: {options.rng_seed}",
    ]
    for group in semantic.groups:
        jg = joint_group(model, semantic, group.name)
        proj = default_projection(model, jg)
        lines.append(f"{group.name}.projection: {','.join(proj.dof_names)}")
    return "\n".join(lines) + "\n"


def benchmark_conf_text(model: RobotModel, semantic: SemanticModel, options: GenOptions) -> str:
    group = semantic.groups[0].name if semantic.groups else "<group>"
    return "\n".join(
        [
            "# Benchmark configuration skeleton. Fill in queries, then run:",
            "#   robosetup bench config/benchmark.conf -o results.csv",
            f"urdf: {model.name}.urdf",
            f"srdf: {model.name}.srdf",
            f"group: {group}",
            f"planners: {options.planner}",
            "repetitions: 3",
            f"time_budget: {_fmt(options.time_budget)}",
            f"resolution_fraction: {_fmt(options.resolution_fraction)}",
            f"rng_seed: {options.rng_seed}",
            '# query.<id>.start: {"joint": value, ...}',
            '# query.<id>.goal: {"joint": value, ...}',
            "# sweep.planner.goal_bias: 0.0 0.2 0.05",
        ]
    ) + "\n"


def demo_manifest_text(model: RobotModel) -> str:
    return "\n".join(
        [
            "# Ordered startup description for the demo pane.",
            f"step.1: load_model {model.name}.urdf",
            f"step.2: load_semantic config/{model.name}.srdf",
            "step.3: start_service robosetup serve --port 8420",
            "step.4: open_demo http://127.0.0.1:8420/#demo",
        ]
    ) + "\n"


def _model_signature(model: RobotModel) -> str:
    data = {
        "name": model.name,
        "root": model.root_link,
        "links": [
            {
                "name": l.name,
                "collisions": len(l.collision_geoms),
                "visuals": len(l.visual_geoms),
            }
            for l in model.links
        ],
        "joints": [
            {
                "name": j.name,
                "kind": j.kind,
                "parent": j.parent_link,
                "child": j.child_link,
                "limits": [j.limits.lower, j.limits.upper] if j.limits else None,
            }
            for j in model.joints
        ],
    }
    return json.dumps(data, sort_keys=True)


def generate_bundle(
    model: RobotModel, semantic: SemanticModel, options: GenOptions | None = None
) -> ConfigBundle:
    """Emit the full configuration bundle as an in-memory file map."""
    options = options or GenOptions()
    report = validate_semantic(model, semantic)
    if not report.ok():
        first = report.errors[0]
        raise ConfigError(
            f"semantic configuration has errors: {first.message}", element=first.element
        )

    files = {
        f"{BUNDLE_DIR}/{model.name}.srdf": serialize_srdf(semantic),
        f"{BUNDLE_DIR}/joint_limits.yaml": joint_limits_text(model, options),
        f"{BUNDLE_DIR}/kinematics.conf": kinematics_conf_text(model, semantic, options),
        f"{BUNDLE_DIR}/planning.conf": planning_conf_text(model, semantic, options),
        f"{BUNDLE_DIR}/benchmark.conf": benchmark_conf_text(model, semantic, options),
        f"{BUNDLE_DIR}/demo.manifest": demo_manifest_text(model),
    }
    manifest = [(path, _sha256(text)) for path, text in sorted(files.items())]
    digest_src = "\n".join(
        [
            _model_signature(model),
            serialize_srdf(semantic),
            json.dumps(
                {
                    "velocity_scaling": options.velocity_scaling,
                    "default_velocity": options.default_velocity,
                    "default_acceleration": options.default_acceleration,
                    "planner": options.planner,
                    "goal_bias": options.goal_bias,
                    "time_budget": options.time_budget,
                    "goal_tolerance": options.goal_tolerance,
                    "resolution_fraction": options.resolution_fraction,
                    "adapters": list(options.adapters),
                    "rng_seed": options.rng_seed,
                },
                sort_keys=True,
            ),
        ]
    )
    return ConfigBundle(files, manifest, _sha256(digest_src))


def write_bundle(
    bundle: ConfigBundle, directory: str | Path, overwrite: bool = False
) -> list[Path]:
    """Write all bundle files atomically (temp file + rename per file).

    Existing files are only replaced when overwrite is set; the refusal check
    runs before anything is written, so a refused call changes nothing.
    """
    directory = Path(directory)
    targets = {rel: directory / rel for rel in bundle.files}
    if not overwrite:
        existing = sorted(str(p) for p in targets.values() if p.exists())
        if existing:
            raise BundleWriteError(
                f"refusing to overwrite existing files without the overwrite flag: "
                f"{', '.join(existing)}",
                element=existing[0],
            )
    written = []
    for rel, target in sorted(targets.items()):
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".bundle-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(bundle.files[rel])
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        written.append(target)
    return written


def parse_conf(text: str) -> dict[str, str]:
    """Parse line-oriented ``key: value`` text; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, value = line.split(":", 1)
        out[key.strip()] = value.strip()
    return out


def load_conf(path: str | Path) -> dict[str, str]:
    return parse_conf(Path(path).read_text())


def parse_joint_limits(text: str) -> dict[str, tuple[float, float]]:
    """Read joint_limits.yaml-style text into {joint: (vmax, amax)}."""
    raw = parse_conf(text)
    vmax: dict[str, float] = {}
    amax: dict[str, float] = {}
    for key, value in raw.items():
        if key.endswith(".max_velocity"):
            vmax[key[: -len(".max_velocity")]] = float(value)
        elif key.endswith(".max_acceleration"):
            amax[key[: -len(".max_acceleration")]] = float(value)
    return {j: (vmax[j], amax.get(j, 1.0)) for j in vmax}
