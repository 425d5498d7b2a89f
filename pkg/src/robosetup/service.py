"""Local HTTP+JSON service exposing the setup pipeline and demo planning.

The service and the CLI call the identical library operations; endpoints
return a uniform error envelope {code, message, element?} on failure.
Mutations are validated against a copy and rejected atomically.
"""

from __future__ import annotations

import threading
from pathlib import Path as FsPath

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import acm as acm_mod
from . import confgen, kinematics, planning
from .collision import PlanningSceneWorld
from .errors import PlanningError, ToolkitError
from .geometry import pose_from_json, shape_to_json, triangulate
from .kinematics import RobotState
from .robot_model import parse_urdf, parse_urdf_file, validate_model
from .srdf import (
    EndEffector,
    GroupState,
    PlanningGroup,
    SemanticModel,
    VirtualJoint,
    joint_group,
    resolve_group,
    serialize_srdf,
    validate_semantic,
)


class NotFoundError(ToolkitError):
    code = "not_found"


class ConflictError(ToolkitError):
    code = "conflict"


_STATUS = {"not_found": 404, "conflict": 409}


class Project:
    """Server-side state: one robot, one semantic document, one ACM job at a time."""

    def __init__(self):
        self.lock = threading.RLock()
        self.model = None
        self.semantic: SemanticModel | None = None
        self.acm_report = None
        self.world = PlanningSceneWorld()
        self.options = confgen.GenOptions()
        self.current_state: RobotState | None = None
        self.jobs: dict[str, acm_mod.AcmJob] = {}
        self._job_counter = 0
        self._applied_jobs: set[str] = set()

    def require_model(self):
        if self.model is None:
            raise NotFoundError("no project loaded; POST /api/project first")
        return self.model

    def load(self, model) -> None:
        self.model = model
        self.semantic = SemanticModel(robot_name=model.name)
        self.acm_report = None
        self.world = PlanningSceneWorld()
        self.current_state = kinematics.default_state(model)
        self.jobs.clear()
        self._applied_jobs.clear()

    def running_job(self) -> acm_mod.AcmJob | None:
        for job in self.jobs.values():
            if job.status in ("pending", "running"):
                return job
        return None

    def start_acm_job(self, params: acm_mod.AcmGenParams, workers: int) -> str:
        if self.running_job() is not None:
            raise ConflictError("an ACM job is already running for this project")
        self._job_counter += 1
        job_id = f"acm-{self._job_counter}"
        self.jobs[job_id] = acm_mod.AcmJob(self.require_model(), params, workers).start()
        return job_id

    def absorb_finished_jobs(self) -> None:
        """Fold completed job results into the project exactly once."""
        for job_id, job in self.jobs.items():
            if job.status == "done" and job_id not in self._applied_jobs:
                self.acm_report = job.report
                self.semantic.apply_acm(job.report.acm)
                self._applied_jobs.add(job_id)

    def edit_semantic(self, mutate) -> dict:
        """Apply a mutation to a copy, validate, and commit only when clean."""
        model = self.require_model()
        candidate = self.semantic.copy()
        mutate(candidate)
        report = validate_semantic(model, candidate)
        if not report.ok():
            first = report.errors[0]
            raise ToolkitError(
                f"edit rejected: {first.message}", element=first.element
            )
        self.semantic = candidate
        return report.to_json()

    def facade(self, seed: int | None = None) -> planning.Facade:
        model = self.require_model()
        self.absorb_finished_jobs()
        acm = self.acm_report.acm if self.acm_report is not None else self.semantic.to_acm()
        facade = planning.Facade(
            model,
            self.semantic,
            acm=acm,
            world=self.world,
            goal_tolerance=self.options.goal_tolerance,
            time_budget=self.options.time_budget,
            resolution_fraction=self.options.resolution_fraction,
            rng_seed=seed if seed is not None else self.options.rng_seed,
        )
        facade.set_state(self.current_state)
        return facade


def _pose_json(pose) -> dict:
    return {
        "xyz": [float(v) for v in pose.translation],
        "quat": [float(v) for v in pose.rotation],
    }


def create_app(project: Project | None = None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="robosetup", docs_url=None, redoc_url=None)
    project = project or Project()
    app.state.project = project

    @app.exception_handler(ToolkitError)
    async def _toolkit_error(_: Request, exc: ToolkitError):
        status = _STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status, content=exc.to_json())

    @app.post("/api/project")
    async def load_project(body: dict):
        with project.lock:
            if "urdf" in body:
                model = parse_urdf(body["urdf"], body.get("asset_root"))
            elif "path" in body:
                model = parse_urdf_file(body["path"], body.get("asset_root"))
            else:
                raise ToolkitError("body needs 'urdf' (XML text) or 'path'")
            project.load(model)
            report = validate_model(model)
            return {
                "name": model.name,
                "root_link": model.root_link,
                "links": [l.name for l in model.links],
                "joints": [
                    {
                        "name": j.name,
                        "kind": j.kind,
                        "parent": j.parent_link,
                        "child": j.child_link,
                        "limits": (
                            {"lower": j.limits.lower, "upper": j.limits.upper}
                            if j.limits is not None
                            else None
                        ),
                    }
                    for j in model.joints
                ],
                "active_joints": list(model.active_joints),
                "warnings": list(model.warnings),
                "validation": report.to_json(),
            }

    @app.get("/api/model/geometry")
    async def model_geometry():
        with project.lock:
            model = project.require_model()
            poses = kinematics.forward_kinematics(
                model, project.current_state, check_limits=False
            )
            links = []
            for link in model.links:
                links.append(
                    {
                        "name": link.name,
                        "collisions": [
                            {"shape": shape_to_json(s), "mesh": triangulate(s, p)}
                            for s, p in link.collision_geoms
                        ],
                        "visuals": [
                            {"shape": shape_to_json(s), "mesh": triangulate(s, p)}
                            for s, p in link.visual_geoms
                        ],
                    }
                )
            return {
                "links": links,
                "default_poses": {l: _pose_json(p) for l, p in poses.items()},
            }

    @app.post("/api/fk")
    async def fk(body: dict):
        with project.lock:
            model = project.require_model()
            state = project.current_state.with_values(
                RobotState.from_json(body.get("positions", {})).positions
            )
            poses = kinematics.forward_kinematics(model, state)
            return {"poses": {l: _pose_json(p) for l, p in poses.items()}}

    @app.post("/api/acm/jobs")
    async def start_acm(body: dict):
        with project.lock:
            project.require_model()
            if "seed" not in body:
                raise ToolkitError("ACM jobs require an explicit 'seed' for determinism")
            params = acm_mod.AcmGenParams(
                sample_count=int(body.get("samples", 10_000)),
                always_threshold=float(body.get("always_threshold", 0.95)),
                rng_seed=int(body["seed"]),
            )
            job_id = project.start_acm_job(params, int(body.get("workers", 1)))
            return {"job_id": job_id}

    @app.get("/api/acm/jobs/{job_id}")
    async def acm_job_progress(job_id: str):
        with project.lock:
            job = project.jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown ACM job '{job_id}'", element=job_id)
            project.absorb_finished_jobs()
            return {"job_id": job_id, **job.progress()}

    @app.get("/api/acm")
    async def acm_report():
        with project.lock:
            project.require_model()
            project.absorb_finished_jobs()
            if project.acm_report is None:
                raise NotFoundError("no ACM report yet; run an ACM job first")
            return project.acm_report.to_json()

    # --- SRDF editing -------------------------------------------------------

    def _summary(project: Project) -> dict:
        semantic = project.semantic
        return {
            "groups": [
                {
                    "name": g.name,
                    "joints": list(g.joints),
                    "links": list(g.links),
                    "chains": [list(c) for c in g.chains],
                    "subgroups": list(g.subgroups),
                }
                for g in semantic.groups
            ],
            "group_states": [
                {"name": gs.name, "group": gs.group, "values": gs.as_dict()}
                for gs in semantic.group_states
            ],
            "end_effectors": [
                {
                    "name": e.name,
                    "group": e.group,
                    "parent_link": e.parent_link,
                    "parent_group": e.parent_group,
                }
                for e in semantic.end_effectors
            ],
            "virtual_joints": [
                {
                    "name": v.name,
                    "kind": v.kind,
                    "parent_frame": v.parent_frame,
                    "child_link": v.child_link,
                    "workspace": [list(b) for b in v.workspace] if v.workspace else None,
                }
                for v in semantic.virtual_joints
            ],
            "passive_joints": list(semantic.passive_joints),
            "disabled_pairs": [
                {"link1": a, "link2": b, "reason": r}
                for (a, b), r in sorted(semantic.disabled_pairs.items())
            ],
        }

    @app.get("/api/srdf/summary")
    async def srdf_summary():
        with project.lock:
            project.require_model()
            project.absorb_finished_jobs()
            report = validate_semantic(project.model, project.semantic)
            return {"semantic": _summary(project), "validation": report.to_json()}

    def _group_from_body(body: dict) -> PlanningGroup:
        return PlanningGroup(
            name=body["name"],
            joints=tuple(body.get("joints", ())),
            links=tuple(body.get("links", ())),
            chains=tuple(tuple(c) for c in body.get("chains", ())),
            subgroups=tuple(body.get("subgroups", ())),
        )

    @app.post("/api/srdf/groups")
    async def add_group(body: dict):
        group = _group_from_body(body)

        def mutate(s: SemanticModel):
            if s.has_group(group.name):
                raise ConflictError(f"group '{group.name}' already exists", element=group.name)
            s.groups.append(group)

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.put("/api/srdf/groups/{name}")
    async def update_group(name: str, body: dict):
        body = {**body, "name": name}
        group = _group_from_body(body)

        def mutate(s: SemanticModel):
            if not s.has_group(name):
                raise NotFoundError(f"unknown group '{name}'", element=name)
            s.groups = [group if g.name == name else g for g in s.groups]

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.delete("/api/srdf/groups/{name}")
    async def delete_group(name: str):
        def mutate(s: SemanticModel):
            if not s.has_group(name):
                raise NotFoundError(f"unknown group '{name}'", element=name)
            s.groups = [g for g in s.groups if g.name != name]
            s.group_states = [gs for gs in s.group_states if gs.group != name]
            s.end_effectors = [e for e in s.end_effectors if e.group != name]

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.get("/api/srdf/groups/{name}/resolve")
    async def resolve(name: str):
        with project.lock:
            model = project.require_model()
            joints, links, is_chain = resolve_group(model, project.semantic, name)
            return {"joints": joints, "links": links, "is_chain": is_chain}

    @app.post("/api/srdf/group_states")
    async def add_group_state(body: dict):
        gs = GroupState(
            body["name"], body["group"], tuple((k, float(v)) for k, v in body["values"].items())
        )

        def mutate(s: SemanticModel):
            if any(x.name == gs.name and x.group == gs.group for x in s.group_states):
                raise ConflictError(f"group state '{gs.name}' already exists", element=gs.name)
            s.group_states.append(gs)

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.delete("/api/srdf/group_states/{name}")
    async def delete_group_state(name: str):
        def mutate(s: SemanticModel):
            if not any(x.name == name for x in s.group_states):
                raise NotFoundError(f"unknown group state '{name}'", element=name)
            s.group_states = [gs for gs in s.group_states if gs.name != name]

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.post("/api/srdf/end_effectors")
    async def add_end_effector(body: dict):
        eef = EndEffector(
            body["name"], body["group"], body["parent_link"], body.get("parent_group")
        )

        def mutate(s: SemanticModel):
            if any(x.name == eef.name for x in s.end_effectors):
                raise ConflictError(f"end effector '{eef.name}' already exists", element=eef.name)
            s.end_effectors.append(eef)

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.delete("/api/srdf/end_effectors/{name}")
    async def delete_end_effector(name: str):
        def mutate(s: SemanticModel):
            if not any(x.name == name for x in s.end_effectors):
                raise NotFoundError(f"unknown end effector '{name}'", element=name)
            s.end_effectors = [e for e in s.end_effectors if e.name != name]

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.post("/api/srdf/virtual_joints")
    async def add_virtual_joint(body: dict):
        ws = body.get("workspace")
        vj = VirtualJoint(
            body["name"],
            body.get("kind", body.get("type", "fixed")),
            body.get("parent_frame", "world"),
            body["child_link"],
            tuple(tuple(float(v) for v in pair) for pair in ws) if ws else None,
        )

        def mutate(s: SemanticModel):
            if any(x.name == vj.name for x in s.virtual_joints):
                raise ConflictError(f"virtual joint '{vj.name}' already exists", element=vj.name)
            s.virtual_joints.append(vj)

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.delete("/api/srdf/virtual_joints/{name}")
    async def delete_virtual_joint(name: str):
        def mutate(s: SemanticModel):
            if not any(x.name == name for x in s.virtual_joints):
                raise NotFoundError(f"unknown virtual joint '{name}'", element=name)
            s.virtual_joints = [v for v in s.virtual_joints if v.name != name]

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.post("/api/srdf/passive_joints")
    async def add_passive_joint(body: dict):
        name = body["name"]

        def mutate(s: SemanticModel):
            if name in s.passive_joints:
                raise ConflictError(f"passive joint '{name}' already listed", element=name)
            s.passive_joints.append(name)

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.delete("/api/srdf/passive_joints/{name}")
    async def delete_passive_joint(name: str):
        def mutate(s: SemanticModel):
            if name not in s.passive_joints:
                raise NotFoundError(f"unknown passive joint '{name}'", element=name)
            s.passive_joints.remove(name)

        with project.lock:
            return {"validation": project.edit_semantic(mutate), "semantic": _summary(project)}

    @app.get("/api/srdf")
    async def srdf_xml():
        with project.lock:
            project.require_model()
            project.absorb_finished_jobs()
            return Response(
                content=serialize_srdf(project.semantic), media_type="application/xml"
            )

    @app.post("/api/bundle")
    async def bundle(body: dict):
        with project.lock:
            model = project.require_model()
            project.absorb_finished_jobs()
            bundle = confgen.generate_bundle(model, project.semantic, project.options)
            directory = body.get("directory")
            written = []
            if directory:
                written = [
                    str(p)
                    for p in confgen.write_bundle(
                        bundle, directory, overwrite=bool(body.get("overwrite", False))
                    )
                ]
            return {**bundle.to_json(), "written": written}

    @app.post("/api/plan")
    async def plan_endpoint(body: dict):
        with project.lock:
            project.require_model()
            group = body.get("group")
            if not group:
                raise ToolkitError("plan request needs a 'group'")
            facade = project.facade(seed=body.get("seed"))
            goal = body.get("goal")
            if goal is None:
                raise ToolkitError("plan request needs a 'goal'")
            if isinstance(goal, dict) and "named" in goal:
                target = goal["named"]
            elif isinstance(goal, dict) and "state" in goal:
                target = RobotState.from_json(goal["state"])
            elif isinstance(goal, dict) and "pose" in goal:
                target = pose_from_json(goal["pose"])
            else:
                raise ToolkitError("goal must be {named}, {state}, or {pose}")
            request = planning.PlanRequest(
                group=group,
                start=facade.current_state,
                goal_tolerance=facade.goal_tolerance,
                time_budget=float(body.get("time_budget", facade.time_budget)),
                planner=facade.planner,
                resolution_fraction=facade.resolution_fraction,
                rng_seed=int(body.get("seed", 0)),
            )
            if isinstance(target, RobotState):
                request.goal_state = target
            elif isinstance(target, str):
                gs = None
                try:
                    gs = facade.scene.semantic.group_state(target, group)
                except Exception:
                    raise NotFoundError(
                        f"unknown named pose '{target}' for group '{group}'", element=target
                    ) from None
                request.goal_state = RobotState(gs.as_dict())
            else:
                request.goal_pose = target
            result = facade.plan(request)
            if not result.success:
                raise PlanningError(result.reason or "planning failed")
            return {
                "path": [s.to_json() for s in result.path.states],
                "trajectory": result.trajectory.to_json() if result.trajectory else None,
                "metrics": {
                    "solve_time": result.solve_time,
                    "checks_performed": result.checks_performed,
                    "iterations": result.iterations,
                },
            }

    @app.post("/api/world")
    async def set_world(body: dict):
        with project.lock:
            project.require_model()
            project.world = PlanningSceneWorld.from_json(body)
            return project.world.to_json()

    @app.get("/api/world")
    async def get_world():
        with project.lock:
            return project.world.to_json()

    @app.get("/api/export/state")
    async def export_state():
        with project.lock:
            project.require_model()
            return project.current_state.to_json()

    @app.post("/api/import/state")
    async def import_state(body: dict):
        with project.lock:
            model = project.require_model()
            state = project.current_state.with_values(RobotState.from_json(body).positions)
            # reject unknown DOFs and out-of-limit values up front
            known = set(kinematics.default_state(model).positions)
            unknown = sorted(set(body) - known)
            if unknown:
                raise ToolkitError(
                    f"unknown joints in state: {', '.join(unknown)}", element=unknown[0]
                )
            kinematics.forward_kinematics(model, state)  # limit check
            project.current_state = state
            return project.current_state.to_json()

    if static_dir and FsPath(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def default_static_dir() -> str | None:
    """Locate built wizard assets (frontend/dist) next to the repo root, if any."""
    here = FsPath(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "frontend" / "dist"
        if candidate.is_dir():
            return str(candidate)
    return None
