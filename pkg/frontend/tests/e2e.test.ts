// Scripted wizard session against a real `robosetup serve` process: walks
// every step for the bundled sample arm, checks that the exported bundle is
// byte-identical to the CLI-generated one, and that ACM-row hover highlights
// exactly the two named links.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { highlightedLinks } from "../src/highlight";
import { playbackFrames } from "../src/playback";
import { STEP_ORDER, WizardStore } from "../src/wizard";

const HERE = fileURLToPath(new URL(".", import.meta.url));
const REPO_ROOT = resolve(HERE, "../..");
const URDF = join(REPO_ROOT, "tests/fixtures/sample_arm.urdf");
const PORT = 8461;
const BASE = `http://127.0.0.1:${PORT}`;

const pythonAvailable =
  spawnSync("python3", ["-c", "import robosetup"], { timeout: 30_000 }).status === 0;

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

describe.skipIf(!pythonAvailable)("scripted wizard session against a live service", () => {
  let server: ChildProcess;
  let workdir: string;

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "wizard-e2e-"));
    server = spawn("python3", ["-m", "robosetup", "serve", "--port", String(PORT)], {
      stdio: "ignore",
    });
    for (let i = 0; i < 100; i++) {
      try {
        const resp = await fetch(`${BASE}/api/world`);
        if (resp.ok) return;
      } catch {
        // not up yet
      }
      await sleep(100);
    }
    throw new Error("service did not come up");
  });

  afterAll(() => {
    server?.kill("SIGTERM");
    rmSync(workdir, { recursive: true, force: true });
  });

  it("completes all steps and matches the CLI bundle hash", async () => {
    const store = new WizardStore(new ApiClient(BASE));

    // Start: load the robot
    store.goTo("start");
    const project = await store.loadProject({ path: URDF });
    expect(project.name).toBe("sample_arm");
    expect(project.active_joints).toEqual(["j1", "j2", "j3", "j4", "j5", "j6"]);

    // Self-collisions: run the sampling job through the 2 Hz poller
    store.goTo("self_collisions");
    const progressTicks: number[] = [];
    store.subscribe((snap) => {
      if (snap.acmProgress) progressTicks.push(snap.acmProgress.done);
    });
    const acm = await store.runAcmJob({ samples: 1200, seed: 7, intervalMs: 100 });
    expect(acm.disabled_by_reason.Adjacent).toBe(6);
    expect(progressTicks.length).toBeGreaterThan(0);
    expect([...progressTicks].sort((a, b) => a - b)).toEqual(progressTicks);

    // hover an ACM row: exactly the two named links are tinted
    const row = acm.pairs.find((p) => p.reason === "Never")!;
    const tinted = highlightedLinks({ kind: "pair", link1: row.link1, link2: row.link2 });
    expect(tinted).toEqual(new Set([row.link1, row.link2]));

    // Virtual joints
    store.goTo("virtual_joints");
    await store.addVirtualJoint({
      name: "world_mount",
      kind: "fixed",
      parent_frame: "world",
      child_link: "base_link",
    });

    // Planning groups: a chain arm and a joint-list hand
    store.goTo("planning_groups");
    await store.addGroup({ name: "arm", chains: [["base_link", "wrist_1_link"]] });
    await store.addGroup({ name: "hand", joints: ["j5", "j6"] });
    const resolved = await store.resolveGroup("arm");
    expect(resolved.joints).toEqual(["j1", "j2", "j3", "j4"]);
    expect(resolved.is_chain).toBe(true);

    // Robot poses: live FK then save a named pose for the arm
    store.goTo("robot_poses");
    const fk = await store.fkPreview({ j1: 0, j2: 0, j3: 0, j4: 0, j5: 0, j6: 0 });
    expect(fk.poses.tool_link.xyz[2]).toBeGreaterThan(1.0); // arm points up
    await store.savePose("home", "arm", { j1: 0, j2: 0, j3: 0, j4: 0 });

    // End effectors
    store.goTo("end_effectors");
    await store.addEndEffector({
      name: "gripper",
      group: "hand",
      parent_link: "wrist_1_link",
      parent_group: "arm",
    });

    // Passive joints
    store.goTo("passive_joints");
    await store.addPassiveJoint("j6");
    let snap = store.snapshot();
    expect(snap.srdf!.semantic.passive_joints).toEqual(["j6"]);
    expect(snap.srdf!.validation.error_count).toBe(0);

    // Generate: preview manifest, then compare against the CLI on equal inputs
    expect(store.generateEnabled()).toBe(true);
    store.goTo("generate");
    const bundle = await store.generate();
    expect(bundle.manifest).toHaveLength(6);

    const srdfXml = await store.api.srdfXml();
    const srdfPath = join(workdir, "exported.srdf");
    writeFileSync(srdfPath, srdfXml);
    const acmJson = join(workdir, "acm.json");
    const acmRun = spawnSync(
      "python3",
      ["-m", "robosetup", "acm", URDF, "--samples", "1200", "--seed", "7", "-o", acmJson],
      { timeout: 120_000 },
    );
    expect(acmRun.status).toBe(0);
    const bundleDir = join(workdir, "bundle");
    const genRun = spawnSync(
      "python3",
      [
        "-m", "robosetup", "genconfig", URDF,
        "--srdf", srdfPath, "--acm", acmJson, "-o", bundleDir,
      ],
      { timeout: 120_000 },
    );
    expect(genRun.status).toBe(0);
    for (const entry of bundle.manifest) {
      const cliBytes = readFileSync(join(bundleDir, entry.path));
      const digest = createHash("sha256").update(cliBytes).digest("hex");
      expect(digest, entry.path).toBe(entry.sha256);
    }

    // Demo: seeded random goal, plan, and playback frames
    store.goTo("demo");
    const goal = store.randomGoal(resolved.joints, mulberry32(42));
    expect(Object.keys(goal)).toEqual(resolved.joints);
    const plan = await store.planDemo({ group: "arm", goal: { state: goal }, seed: 11 });
    expect(plan.path.length).toBeGreaterThan(0);
    expect(plan.trajectory).not.toBeNull();
    const frames = playbackFrames(plan.trajectory!, Math.max(2, plan.path.length));
    expect(frames.length).toBe(Math.max(2, plan.path.length));
    const last = plan.path[plan.path.length - 1];
    for (const j of resolved.joints) {
      expect(Math.abs(last[j] - goal[j])).toBeLessThan(1e-2);
    }

    // every wizard step was visited
    snap = store.snapshot();
    expect(snap.visited).toEqual(STEP_ORDER);
  });

  it("a fresh client reproduces the wizard state from the server alone", async () => {
    const api = new ApiClient(BASE);
    const snapshot = await api.srdfSummary();
    expect(snapshot.semantic.groups.map((g) => g.name)).toEqual(["arm", "hand"]);
    expect(snapshot.semantic.group_states.map((s) => s.name)).toEqual(["home"]);
    expect(snapshot.semantic.end_effectors.map((e) => e.name)).toEqual(["gripper"]);
    expect(snapshot.semantic.passive_joints).toEqual(["j6"]);
    expect(snapshot.semantic.disabled_pairs.length).toBe(20);
  });
});
