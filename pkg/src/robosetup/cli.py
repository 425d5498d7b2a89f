"""Headless command-line interface: validate, acm, genconfig, plan, bench, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import acm as acm_mod
from . import bench as bench_mod
from . import confgen, kinematics, planning
from .collision import PlanningSceneWorld
from .errors import ToolkitError
from .robot_model import parse_urdf_file, validate_model
from .srdf import SemanticModel, parse_srdf


def _load_model(args):
    return parse_urdf_file(args.urdf, getattr(args, "assets", None))


def cmd_validate(args) -> int:
    model = _load_model(args)
    report = validate_model(model)
    print(report)
    return 1 if report.errors else 0


def cmd_acm(args) -> int:
    model = _load_model(args)
    params = acm_mod.AcmGenParams(
        sample_count=args.samples,
        always_threshold=args.threshold,
        rng_seed=args.seed,
    )
    report = acm_mod.generate_acm(model, params, workers=args.workers)
    text = report.dumps(include_elapsed=False)
    if args.output:
        Path(args.output).write_text(text + "\n")
        print(f"wrote {args.output}: {sum(report.disabled_by_reason.values())} pairs disabled "
              f"({report.disabled_by_reason})")
    else:
        print(text)
    return 0


def _semantic_for(args, model) -> SemanticModel:
    if args.srdf:
        return parse_srdf(Path(args.srdf).read_text(), model)
    return SemanticModel(robot_name=model.name)


def cmd_genconfig(args) -> int:
    model = _load_model(args)
    semantic = _semantic_for(args, model)
    if args.acm:
        report_data = json.loads(Path(args.acm).read_text())
        from .collision import AllowedCollisionMatrix

        acm = AllowedCollisionMatrix()
        for row in report_data.get("pairs", []):
            if row.get("disabled"):
                acm.set(
                    row["link1"],
                    row["link2"],
                    True,
                    row["reason"],
                    samples=row.get("samples"),
                    collisions=row.get("collisions"),
                )
        semantic.apply_acm(acm)
    options = confgen.GenOptions(rng_seed=args.seed)
    bundle = confgen.generate_bundle(model, semantic, options)
    written = confgen.write_bundle(bundle, args.output, overwrite=args.overwrite)
    for path in written:
        print(f"wrote {path}")
    print(f"inputs digest: {bundle.inputs_digest}")
    return 0


def _read_state(path: str) -> kinematics.RobotState:
    return kinematics.RobotState.from_json(json.loads(Path(path).read_text()))


def cmd_plan(args) -> int:
    model = _load_model(args)
    planning_conf = {}
    limits = None
    if args.config:
        cfg_dir = Path(args.config)
        srdf_path = args.srdf or next(iter(sorted(cfg_dir.glob("config/*.srdf"))), None)
        if srdf_path is None:
            print(f"no SRDF found under {cfg_dir}/config", file=sys.stderr)
            return 2
        semantic = parse_srdf(Path(srdf_path).read_text(), model)
        planning_conf = confgen.load_conf(cfg_dir / "config" / "planning.conf")
        limits = confgen.parse_joint_limits(
            (cfg_dir / "config" / "joint_limits.yaml").read_text()
        )
    else:
        semantic = _semantic_for(args, model)

    world = None
    if args.world:
        world = PlanningSceneWorld.loads(Path(args.world).read_text())

    facade = planning.Facade(
        model,
        semantic,
        acm=semantic.to_acm(),
        world=world,
        planner=planning_conf.get("planner", "rrt"),
        planner_params={"goal_bias": float(planning_conf["goal_bias"])}
        if "goal_bias" in planning_conf
        else None,
        goal_tolerance=float(planning_conf.get("goal_tolerance", "1e-3")),
        time_budget=args.budget
        if args.budget is not None
        else float(planning_conf.get("time_budget", "5.0")),
        resolution_fraction=float(planning_conf.get("resolution_fraction", "0.01")),
        limits=limits,
        rng_seed=args.seed,
    )
    if args.start:
        facade.set_state(_read_state(args.start))
    goal = _read_state(args.goal)
    trajectory = facade.plan_to(goal, args.group, seed=args.seed)
    csv_text = trajectory.to_csv()
    if args.output:
        Path(args.output).write_text(csv_text)
        print(
            f"wrote {args.output}: {len(trajectory.waypoint_times())} waypoints, "
            f"{trajectory.duration:.3f} s"
        )
    else:
        print(csv_text, end="")
    return 0


def cmd_bench(args) -> int:
    config = bench_mod.load_bench_config(args.config)
    rows = bench_mod.run_benchmark(config, workers=args.workers)
    text = bench_mod.write_results(rows)
    if args.output:
        Path(args.output).write_text(text)
        successes = sum(1 for r in rows if r.success)
        print(f"wrote {args.output}: {len(rows)} rows, {successes} successes")
    else:
        print(text, end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, default_static_dir

    static = args.static if args.static else default_static_dir()
    app = create_app(static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robosetup",
        description="Robot setup and planning toolkit: validate a robot "
        "description, generate its self-collision matrix and configuration "
        "bundle, plan trajectories, benchmark planners, or serve the wizard UI.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a robot description")
    p.add_argument("urdf")
    p.add_argument("--assets", help="directory mesh filenames resolve against")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("acm", help="generate the self-collision matrix")
    p.add_argument("urdf")
    p.add_argument("--assets")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_acm)

    p = sub.add_parser("genconfig", help="generate the configuration bundle")
    p.add_argument("urdf")
    p.add_argument("--assets")
    p.add_argument("--srdf", help="existing SRDF to include")
    p.add_argument("--acm", help="ACM report JSON to fold into the SRDF")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="bundle directory")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_genconfig)

    p = sub.add_parser("plan", help="plan a trajectory and export it as CSV")
    p.add_argument("urdf")
    p.add_argument("--assets")
    p.add_argument("--config", help="bundle directory from genconfig")
    p.add_argument("--srdf")
    p.add_argument("--group", required=True)
    p.add_argument("--start", help="start state JSON file (defaults to midpoints)")
    p.add_argument("--goal", required=True, help="goal state JSON file")
    p.add_argument("--world", help="scene JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a benchmark configuration")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="serve the HTTP API and wizard UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8420)
    p.add_argument("--static", help="directory of built UI assets")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
