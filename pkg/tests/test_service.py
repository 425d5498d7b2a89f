import json
import time

import pytest
from fastapi.testclient import TestClient

from robosetup.service import Project, create_app

from conftest import fixture_path


@pytest.fixture
def client():
    app = create_app(Project())
    return TestClient(app)


@pytest.fixture
def loaded(client):
    resp = client.post(
        "/api/project", json={"path": str(fixture_path("sample_arm.urdf"))}
    )
    assert resp.status_code == 200, resp.text
    return client


def _wait_for_job(client, job_id, timeout=60.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        data = client.get(f"/api/acm/jobs/{job_id}").json()
        if data["status"] in ("done", "failed", "cancelled"):
            return data
        time.sleep(0.05)
    raise TimeoutError("ACM job did not finish")


def test_geometry_before_project_load_is_404(client):
    resp = client.get("/api/model/geometry")
    assert resp.status_code == 404
    body = resp.json()
    assert body["code"] == "not_found"
    assert "project" in body["message"]


def test_project_load_reports_model_summary(loaded):
    resp = loaded.post(
        "/api/project", json={"path": str(fixture_path("sample_arm.urdf"))}
    )
    data = resp.json()
    assert data["name"] == "sample_arm"
    assert data["root_link"] == "base_link"
    assert len(data["links"]) == 7
    assert data["active_joints"] == ["j1", "j2", "j3", "j4", "j5", "j6"]
    assert data["validation"]["error_count"] == 0


def test_project_load_from_inline_text(client):
    text = fixture_path("planar_arm.urdf").read_text()
    resp = client.post("/api/project", json={"urdf": text})
    assert resp.status_code == 200
    assert resp.json()["name"] == "planar_arm"


def test_project_parse_error_envelope(client):
    resp = client.post("/api/project", json={"urdf": "<robot name='x'><link/></robot>"})
    assert resp.status_code == 400
    body = resp.json()
    assert body["code"] == "urdf_error"


def test_geometry_payload_has_meshes(loaded):
    data = loaded.get("/api/model/geometry").json()
    assert len(data["links"]) == 7
    base = next(l for l in data["links"] if l["name"] == "base_link")
    assert base["collisions"][0]["mesh"]["vertices"]
    assert base["collisions"][0]["mesh"]["faces"]
    assert "base_link" in data["default_poses"]


def test_fk_endpoint_matches_kinematics(client):
    text = fixture_path("planar_arm.urdf").read_text()
    client.post("/api/project", json={"urdf": text})
    resp = client.post("/api/fk", json={"positions": {"j1": 0.0, "j2": 0.0}})
    poses = resp.json()["poses"]
    assert poses["tip"]["xyz"] == pytest.approx([2.0, 0.0, 0.0])


def test_fk_out_of_limits_is_rejected(client):
    text = fixture_path("planar_arm.urdf").read_text()
    client.post("/api/project", json={"urdf": text})
    resp = client.post("/api/fk", json={"positions": {"j1": 9.0, "j2": 0.0}})
    assert resp.status_code == 400
    assert resp.json()["code"] == "kinematics_error"


def test_acm_job_flow(loaded):
    assert loaded.get("/api/acm").status_code == 404
    resp = loaded.post("/api/acm/jobs", json={"samples": 800, "seed": 5})
    assert resp.status_code == 200
    job_id = resp.json()["job_id"]
    final = _wait_for_job(loaded, job_id)
    assert final["status"] == "done"
    assert final["done"] == final["total"] == 800
    report = loaded.get("/api/acm").json()
    assert report["sample_count"] == 800
    assert report["disabled_by_reason"]["Adjacent"] == 6
    # the finished ACM lands in the SRDF as disable_collisions entries
    xml = loaded.get("/api/srdf").text
    assert xml.count("<disable_collisions ") == sum(
        report["disabled_by_reason"].values()
    )


def test_acm_requires_seed(loaded):
    resp = loaded.post("/api/acm/jobs", json={"samples": 100})
    assert resp.status_code == 400
    assert "seed" in resp.json()["message"]


def test_concurrent_acm_jobs_conflict(loaded):
    first = loaded.post("/api/acm/jobs", json={"samples": 100_000, "seed": 5})
    job_id = first.json()["job_id"]
    second = loaded.post("/api/acm/jobs", json={"samples": 100, "seed": 6})
    assert second.status_code == 409
    assert second.json()["code"] == "conflict"
    # cleanup: wait for the long job so the test client can shut down cleanly
    project = loaded.app.state.project
    project.jobs[job_id].cancel()
    project.jobs[job_id].wait(30)


def test_unknown_job_is_404(loaded):
    assert loaded.get("/api/acm/jobs/acm-999").status_code == 404


def test_srdf_group_crud_and_validation(loaded):
    resp = loaded.post(
        "/api/srdf/groups",
        json={"name": "arm", "chains": [["base_link", "tool_link"]]},
    )
    assert resp.status_code == 200
    assert resp.json()["validation"]["error_count"] == 0

    dup = loaded.post("/api/srdf/groups", json={"name": "arm"})
    assert dup.status_code == 409

    bad = loaded.post("/api/srdf/groups", json={"name": "bad", "joints": ["ghost"]})
    assert bad.status_code == 400
    # the rejected edit left the document unchanged
    summary = loaded.get("/api/srdf/summary").json()["semantic"]
    assert [g["name"] for g in summary["groups"]] == ["arm"]

    resolve = loaded.get("/api/srdf/groups/arm/resolve").json()
    assert resolve["joints"] == ["j1", "j2", "j3", "j4", "j5", "j6"]
    assert resolve["is_chain"] is True

    put = loaded.put(
        "/api/srdf/groups/arm",
        json={"chains": [["base_link", "wrist_2_link"]]},
    )
    assert put.status_code == 200
    resolve = loaded.get("/api/srdf/groups/arm/resolve").json()
    assert resolve["joints"] == ["j1", "j2", "j3", "j4", "j5"]

    delete = loaded.delete("/api/srdf/groups/arm")
    assert delete.status_code == 200
    assert loaded.get("/api/srdf/summary").json()["semantic"]["groups"] == []


def test_group_state_endpoints(loaded):
    loaded.post("/api/srdf/groups", json={"name": "arm", "chains": [["base_link", "tool_link"]]})
    values = {j: 0.1 for j in ("j1", "j2", "j3", "j4", "j5", "j6")}
    resp = loaded.post(
        "/api/srdf/group_states", json={"name": "ready", "group": "arm", "values": values}
    )
    assert resp.status_code == 200
    missing = dict(values)
    missing.pop("j6")
    bad = loaded.post(
        "/api/srdf/group_states", json={"name": "bad", "group": "arm", "values": missing}
    )
    assert bad.status_code == 400
    assert "j6" in bad.json()["message"]


def test_virtual_and_passive_joint_endpoints(loaded):
    resp = loaded.post(
        "/api/srdf/virtual_joints",
        json={"name": "mount", "kind": "fixed", "parent_frame": "world", "child_link": "base_link"},
    )
    assert resp.status_code == 200
    resp = loaded.post("/api/srdf/passive_joints", json={"name": "j6"})
    assert resp.status_code == 200
    summary = loaded.get("/api/srdf/summary").json()["semantic"]
    assert summary["passive_joints"] == ["j6"]
    assert loaded.delete("/api/srdf/passive_joints/j6").status_code == 200
    assert loaded.delete("/api/srdf/virtual_joints/mount").status_code == 200


def test_world_and_state_round_trip(loaded):
    scene = {
        "objects": [
            {
                "name": "crate",
                "shape": {"type": "box", "half_extents": [0.1, 0.1, 0.1]},
                "pose": {"xyz": [0.5, 0.0, 0.3], "rpy": [0.0, 0.0, 0.0]},
            }
        ]
    }
    put = loaded.post("/api/world", json=scene)
    assert put.status_code == 200
    got = loaded.get("/api/world").json()
    assert got == scene

    state = loaded.get("/api/export/state").json()
    assert set(state) == {"j1", "j2", "j3", "j4", "j5", "j6"}
    new_state = {j: 0.2 for j in state}
    resp = loaded.post("/api/import/state", json=new_state)
    assert resp.status_code == 200
    assert loaded.get("/api/export/state").json() == new_state

    bad = loaded.post("/api/import/state", json={"ghost": 1.0})
    assert bad.status_code == 400


def test_plan_endpoint_returns_path_and_trajectory(loaded):
    loaded.post("/api/srdf/groups", json={"name": "arm", "chains": [["base_link", "tool_link"]]})
    goal = {"j1": 0.4, "j2": 0.3, "j3": -0.4, "j4": 0.2, "j5": 0.5, "j6": -0.3}
    resp = loaded.post(
        "/api/plan", json={"group": "arm", "goal": {"state": goal}, "seed": 9}
    )
    assert resp.status_code == 200, resp.text
    data = resp.json()
    assert data["path"]
    assert data["trajectory"]["points"]
    end = data["path"][-1]
    for j, v in goal.items():
        assert abs(end[j] - v) < 1e-2
    assert data["metrics"]["checks_performed"] > 0


def test_plan_unknown_named_pose_is_404(loaded):
    loaded.post("/api/srdf/groups", json={"name": "arm", "chains": [["base_link", "tool_link"]]})
    resp = loaded.post("/api/plan", json={"group": "arm", "goal": {"named": "nope"}})
    assert resp.status_code == 404


def test_scripted_sequence_matches_cli_bundle(loaded, tmp_path):
    # wizard-style scripted sequence: ACM job, one chain group, one pose, bundle
    job_id = loaded.post("/api/acm/jobs", json={"samples": 1200, "seed": 7}).json()["job_id"]
    _wait_for_job(loaded, job_id)
    loaded.post(
        "/api/srdf/groups", json={"name": "arm", "chains": [["base_link", "tool_link"]]}
    )
    values = {j: 0.0 for j in ("j1", "j2", "j3", "j4", "j5", "j6")}
    loaded.post(
        "/api/srdf/group_states", json={"name": "home", "group": "arm", "values": values}
    )
    api_manifest = loaded.post("/api/bundle", json={}).json()["manifest"]

    # the same inputs through the CLI produce the identical bundle
    from robosetup.cli import main

    acm_json = tmp_path / "acm.json"
    assert (
        main(
            ["acm", str(fixture_path("sample_arm.urdf")), "--samples", "1200",
             "--seed", "7", "-o", str(acm_json)]
        )
        == 0
    )
    srdf_xml = loaded.get("/api/srdf").text
    srdf_path = tmp_path / "arm.srdf"
    srdf_path.write_text(srdf_xml)
    bundle_dir = tmp_path / "bundle"
    assert (
        main(
            ["genconfig", str(fixture_path("sample_arm.urdf")), "--srdf", str(srdf_path),
             "--acm", str(acm_json), "-o", str(bundle_dir)]
        )
        == 0
    )
    import hashlib

    for entry in api_manifest:
        on_disk = (bundle_dir / entry["path"]).read_bytes()
        assert hashlib.sha256(on_disk).hexdigest() == entry["sha256"], entry["path"]


def test_bundle_endpoint_writes_files(loaded, tmp_path):
    loaded.post("/api/srdf/groups", json={"name": "arm", "chains": [["base_link", "tool_link"]]})
    resp = loaded.post("/api/bundle", json={"directory": str(tmp_path)})
    assert resp.status_code == 200
    data = resp.json()
    assert len(data["manifest"]) == 6
    assert len(data["written"]) == 6
    again = loaded.post("/api/bundle", json={"directory": str(tmp_path)})
    assert again.status_code == 400  # refuses to overwrite without the flag
    forced = loaded.post("/api/bundle", json={"directory": str(tmp_path), "overwrite": True})
    assert forced.status_code == 200
    assert forced.json()["manifest"] == data["manifest"]
