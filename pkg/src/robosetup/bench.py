"""Benchmark planners over query suites with single- and multi-variable
parameter sweeps, emitting generic tabular results.

Rows are produced in deterministic (planner, cell, query, repetition) order
with per-cell seeds derived from the config seed, so success and path-length
columns reproduce exactly across runs; wall-clock timings do not.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import planning
from .collision import PlanningSceneWorld
from .errors import ConfigError, ToolkitError
from .confgen import parse_conf
from .kinematics import RobotState
from .planning import PlanningScene, PlanRequest
from .robot_model import parse_urdf_file
from .srdf import parse_srdf


@dataclass(frozen=True)
class SweepSpec:
    path: str  # e.g. "planner.goal_bias" or "resolution_fraction"
    lower: float
    upper: float
    increment: float

    def __post_init__(self):
        if self.increment <= 0:
            raise ConfigError(f"sweep '{self.path}': increment must be positive")
        if self.lower > self.upper:
            raise ConfigError(f"sweep '{self.path}': lower must not exceed upper")

    def values(self) -> list[float]:
        # include the upper bound when it lands within 1e-9 of an increment
        out = []
        k = 0
        guard = 1e-9 * self.increment
        while self.lower + k * self.increment <= self.upper + guard:
            out.append(self.lower + k * self.increment)
            k += 1
        return out


def expand_sweep(specs: list[SweepSpec]) -> list[dict[str, float]]:
    """Cartesian product of sweep values in declaration order (row-major)."""
    assignments: list[dict[str, float]] = [{}]
    for spec in specs:
        assignments = [
            {**assignment, spec.path: value}
            for assignment in assignments
            for value in spec.values()
        ]
    return assignments


@dataclass(frozen=True)
class BenchQuery:
    query_id: str
    start: RobotState
    goal: RobotState


@dataclass(frozen=True)
class PlannerSpec:
    name: str
    params: dict = field(default_factory=dict)

    def __hash__(self):
        return hash((self.name, tuple(sorted(self.params.items()))))


@dataclass
class BenchConfig:
    scene: PlanningScene
    group: str
    queries: list[BenchQuery]
    planners: list[PlannerSpec]
    sweeps: list[SweepSpec] = field(default_factory=list)
    repetitions: int = 1
    time_budget: float = 5.0
    resolution_fraction: float = 0.01
    goal_tolerance: float = 1e-3
    rng_seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not self.queries:
            raise ConfigError("benchmark needs at least one query")
        if not self.planners:
            raise ConfigError("benchmark needs at least one planner")


@dataclass
class BenchRow:
    planner: str
    assignment: dict[str, float]
    query_id: str
    repetition: int
    success: bool
    solve_time: float
    path_length: float
    checks_performed: int


def _cell_seed(base_seed: int, pi: int, ci: int, qi: int, rep: int) -> int:
    seq = np.random.SeedSequence([base_seed, pi, ci, qi, rep])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _apply_assignment(request: PlanRequest, assignment: dict[str, float]) -> None:
    for path, value in assignment.items():
        if path.startswith("planner."):
            request.planner_params[path[len("planner.") :]] = value
        elif path == "resolution_fraction":
            request.resolution_fraction = float(value)
        elif path == "time_budget":
            request.time_budget = float(value)
        elif path == "goal_tolerance":
            request.goal_tolerance = float(value)
        else:
            raise ConfigError(f"unknown sweep parameter path '{path}'", element=path)


def _run_cell(config: BenchConfig, registry, pi, ci, qi, rep, planner, assignment, query):
    request = PlanRequest(
        group=config.group,
        start=query.start,
        goal_state=query.goal,
        goal_tolerance=config.goal_tolerance,
        time_budget=config.time_budget,
        planner=planner.name,
        planner_params=dict(planner.params),
        resolution_fraction=config.resolution_fraction,
        rng_seed=_cell_seed(config.rng_seed, pi, ci, qi, rep),
    )
    _apply_assignment(request, assignment)
    group = planning.joint_group(config.scene.model, config.scene.semantic, config.group)
    t0 = time.monotonic()
    try:
        result = planning.plan(
            config.scene, request, registry=registry, adapters=("fix_start_bounds",)
        )
        solve_time = result.solve_time or (time.monotonic() - t0)
        length = result.path.length(group) if result.success else 0.0
        return BenchRow(
            planner=planner.name,
            assignment=assignment,
            query_id=query.query_id,
            repetition=rep,
            success=result.success,
            solve_time=min(solve_time, config.time_budget),
            path_length=length,
            checks_performed=result.checks_performed,
        )
    except ToolkitError:
        # partial failures become unsuccessful rows; the run continues
        return BenchRow(
            planner=planner.name,
            assignment=assignment,
            query_id=query.query_id,
            repetition=rep,
            success=False,
            solve_time=min(time.monotonic() - t0, config.time_budget),
            path_length=0.0,
            checks_performed=0,
        )


def run_benchmark(
    config: BenchConfig,
    registry: planning.PluginRegistry | None = None,
    workers: int = 1,
) -> list[BenchRow]:
    """Execute |planners| x |cells| x |queries| x repetitions seeded plans."""
    registry = registry or planning.default_registry()
    cells = expand_sweep(config.sweeps)
    tasks = [
        (pi, ci, qi, rep, planner, assignment, query)
        for pi, planner in enumerate(config.planners)
        for ci, assignment in enumerate(cells)
        for qi, query in enumerate(config.queries)
        for rep in range(config.repetitions)
    ]
    if workers <= 1:
        return [_run_cell(config, registry, *task) for task in tasks]
    results: dict[tuple, BenchRow] = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_run_cell, config, registry, *task): task[:4] for task in tasks
        }
        for future, key in futures.items():
            results[key] = future.result()
    # merge in deterministic order regardless of completion order
    return [results[task[:4]] for task in tasks]


def write_results(rows: list[BenchRow], fmt: str = "csv") -> str:
    """Serialize rows with a stable column order and RFC-4180 quoting."""
    if fmt != "csv":
        raise ConfigError(f"unsupported results format '{fmt}'")
    if not rows:
        raise ConfigError("no benchmark rows to write")
    param_paths: list[str] = []
    for row in rows:
        for path in row.assignment:
            if path not in param_paths:
                param_paths.append(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (
        ["planner"]
        + [f"param:{p}" for p in param_paths]
        + ["query", "repetition", "success", "solve_time", "path_length", "checks_performed"]
    )
    writer.writerow(header)
    for row in rows:
        record = [row.planner]
        record += [
            repr(float(row.assignment[p])) if p in row.assignment else "" for p in param_paths
        ]
        record += [
            row.query_id,
            str(row.repetition),
            "1" if row.success else "0",
            repr(float(row.solve_time)),
            repr(float(row.path_length)),
            str(row.checks_performed),
        ]
        writer.writerow(record)
    return buf.getvalue()


def load_bench_config(path: str | Path) -> BenchConfig:
    """Build a BenchConfig from a benchmark.conf file.

    Relative urdf/srdf/world paths resolve against the config file's directory.
    """
    path = Path(path)
    raw = parse_conf(path.read_text())
    base = path.parent

    def _resolve(name: str) -> Path:
        p = Path(raw[name])
        return p if p.is_absolute() else base / p

    if "urdf" not in raw:
        raise ConfigError("benchmark config lacks 'urdf'", element=str(path))
    model = parse_urdf_file(_resolve("urdf"))
    if "srdf" not in raw:
        raise ConfigError("benchmark config lacks 'srdf'", element=str(path))
    semantic = parse_srdf(_resolve("srdf").read_text(), model)
    world = None
    if "world" in raw:
        world = PlanningSceneWorld.loads(_resolve("world").read_text())
    scene = PlanningScene(model, semantic, semantic.to_acm(), world)

    group = raw.get("group")
    if not group:
        raise ConfigError("benchmark config lacks 'group'", element=str(path))

    queries: dict[str, dict[str, RobotState]] = {}
    sweeps: list[SweepSpec] = []
    for key, value in raw.items():
        if key.startswith("query."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("start", "goal"):
                raise ConfigError(f"bad query key '{key}'", element=key)
            queries.setdefault(parts[1], {})[parts[2]] = RobotState.from_json(
                json.loads(value)
            )
        elif key.startswith("sweep."):
            nums = value.split()
            if len(nums) != 3:
                raise ConfigError(
                    f"sweep '{key}' needs 'lower upper increment'", element=key
                )
            sweeps.append(
                SweepSpec(key[len("sweep.") :], float(nums[0]), float(nums[1]), float(nums[2]))
            )
    query_list = []
    for qid in sorted(queries):
        q = queries[qid]
        if "start" not in q or "goal" not in q:
            raise ConfigError(f"query '{qid}' needs both start and goal", element=qid)
        query_list.append(BenchQuery(qid, q["start"], q["goal"]))

    planners = [
        PlannerSpec(name.strip())
        for name in raw.get("planners", "rrt").split(",")
        if name.strip()
    ]
    return BenchConfig(
        scene=scene,
        group=group,
        queries=query_list,
        planners=planners,
        sweeps=sweeps,
        repetitions=int(raw.get("repetitions", "1")),
        time_budget=float(raw.get("time_budget", "5.0")),
        resolution_fraction=float(raw.get("resolution_fraction", "0.01")),
        goal_tolerance=float(raw.get("goal_tolerance", "1e-3")),
        rng_seed=int(raw.get("rng_seed", "0")),
    )


def mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else 0.0
