// The middle settings pane, one renderer per wizard step. Every control maps
// to exactly one documented API call through the store; server rejections
// surface inline next to the offending control.

import { highlightedLinks } from "../highlight";
import { playbackFrames } from "../playback";
import type { RobotViewer } from "../viewer";
import type { StepId, WizardStore } from "../wizard";
import { button, el, errorSlot, field, multiSelect, select, selectedValues } from "./dom";

export interface PaneContext {
  store: WizardStore;
  viewer: RobotViewer | null;
}

type PaneRenderer = (root: HTMLElement, ctx: PaneContext) => void;

export function renderStart(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const pathInput = el("input", { placeholder: "/path/to/robot.urdf" });
  const textArea = el("textarea", {
    rows: "8",
    placeholder: "...or paste URDF XML here",
  });
  const load = button("Load robot", async () => {
    errors.clear();
    try {
      const body = textArea.value.trim()
        ? { urdf: textArea.value }
        : { path: pathInput.value };
      await ctx.store.loadProject(body);
      const snap = ctx.store.snapshot();
      if (ctx.viewer && snap.geometry) {
        ctx.viewer.loadGeometry(snap.geometry);
      }
    } catch (err) {
      errors.show(err);
    }
  });
  root.append(
    el("h2", {}, ["Start: load a robot description"]),
    field("URDF path on the server", pathInput),
    field("URDF XML", textArea),
    load,
    errors.node,
    projectSummaryBlock(ctx),
  );
}

function projectSummaryBlock(ctx: PaneContext): HTMLElement {
  const snap = ctx.store.snapshot();
  if (!snap.project) {
    return el("p", { class: "hint" }, ["No robot loaded yet."]);
  }
  const p = snap.project;
  return el("div", { class: "summary" }, [
    el("p", {}, [
      `${p.name}: ${p.links.length} links, ${p.joints.length} joints, ` +
        `${p.active_joints.length} active (root: ${p.root_link})`,
    ]),
    el(
      "ul",
      {},
      p.warnings.map((w) => el("li", { class: "warning" }, [w])),
    ),
  ]);
}

export function renderSelfCollisions(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  // density slider: 10k..100k samples
  const density = el("input", {
    type: "range",
    min: "10000",
    max: "100000",
    step: "10000",
    value: "10000",
  });
  const densityLabel = el("span", {}, ["10000 samples"]);
  density.addEventListener("input", () => {
    densityLabel.textContent = `${density.value} samples`;
  });
  const seed = el("input", { type: "number", value: "7" });
  const bar = el("progress", { max: "1", value: "0" });
  const status = el("span", { class: "job-status" });
  const table = el("div", { class: "acm-table" });

  const renderTable = () => {
    const report = ctx.store.snapshot().acm;
    table.replaceChildren();
    if (!report) {
      table.append(el("p", { class: "hint" }, ["No matrix generated yet."]));
      return;
    }
    const head = el("tr", {}, [
      el("th", {}, ["link pair"]),
      el("th", {}, ["reason"]),
      el("th", {}, ["collisions / samples"]),
    ]);
    const rows = report.pairs.map((pair) => {
      const tr = el("tr", { class: pair.disabled ? "disabled-pair" : "enabled-pair" }, [
        el("td", {}, [`${pair.link1} — ${pair.link2}`]),
        el("td", {}, [pair.reason ?? "checked"]),
        el("td", {}, [`${pair.collisions} / ${pair.samples}`]),
      ]);
      tr.addEventListener("mouseenter", () => {
        ctx.viewer?.setHighlight(
          highlightedLinks({ kind: "pair", link1: pair.link1, link2: pair.link2 }),
        );
      });
      tr.addEventListener("mouseleave", () => {
        ctx.viewer?.setHighlight(highlightedLinks(null));
      });
      return tr;
    });
    table.append(el("table", {}, [head, ...rows]));
  };
  renderTable();

  const start = button("Generate matrix", async () => {
    errors.clear();
    status.textContent = "running";
    try {
      await ctx.store.runAcmJob({
        samples: Number(density.value),
        seed: Number(seed.value),
      });
      status.textContent = "done";
      renderTable();
    } catch (err) {
      status.textContent = "failed";
      errors.show(err);
    }
  });
  ctx.store.subscribe((s) => {
    if (s.acmProgress) {
      bar.value = s.acmProgress.total ? s.acmProgress.done / s.acmProgress.total : 0;
    }
  });

  root.append(
    el("h2", {}, ["Self-collision matrix"]),
    field("Sampling density", el("div", {}, [density, densityLabel])),
    field("Random seed", seed),
    el("div", { class: "row" }, [start, bar, status]),
    errors.node,
    snap.acm === null
      ? el("p", { class: "hint" }, ["Run the sampler to fill the table below."])
      : el("span", {}),
    table,
  );
}

export function renderVirtualJoints(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const links = snap.project?.links ?? [];
  const name = el("input", { value: "world_mount" });
  const kind = select(["fixed", "planar", "floating"]);
  const parentFrame = el("input", { value: "world" });
  const childLink = select(links, snap.project?.root_link);
  const add = button("Add virtual joint", async () => {
    errors.clear();
    try {
      await ctx.store.addVirtualJoint({
        name: name.value,
        kind: kind.value,
        parent_frame: parentFrame.value,
        child_link: childLink.value,
      });
      rerender(root, "virtual_joints", ctx);
    } catch (err) {
      errors.show(err);
    }
  });
  const existing = (snap.srdf?.semantic.virtual_joints ?? []).map((vj) =>
    el("li", {}, [
      `${vj.name} (${vj.kind}) ${vj.parent_frame} -> ${vj.child_link} `,
      button("remove", async () => {
        await ctx.store.removeVirtualJoint(vj.name);
        rerender(root, "virtual_joints", ctx);
      }),
    ]),
  );
  root.append(
    el("h2", {}, ["Virtual joints"]),
    field("Name", name),
    field("Type", kind),
    field("Parent frame", parentFrame),
    field("Child link", childLink),
    add,
    errors.node,
    el("ul", {}, existing),
  );
}

export function renderPlanningGroups(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const links = snap.project?.links ?? [];
  const joints = snap.project?.joints.map((j) => j.name) ?? [];
  const groups = snap.srdf?.semantic.groups.map((g) => g.name) ?? [];

  const name = el("input", { placeholder: "arm" });
  const chainBase = select(["", ...links]);
  const chainTip = select(["", ...links]);
  const jointPick = multiSelect(joints);
  const linkPick = multiSelect(links);
  const subPick = multiSelect(groups);

  const add = button("Add group", async () => {
    errors.clear();
    try {
      const chains: [string, string][] =
        chainBase.value && chainTip.value ? [[chainBase.value, chainTip.value]] : [];
      await ctx.store.addGroup({
        name: name.value,
        chains,
        joints: selectedValues(jointPick),
        links: selectedValues(linkPick),
        subgroups: selectedValues(subPick),
      });
      rerender(root, "planning_groups", ctx);
    } catch (err) {
      errors.show(err);
    }
  });

  const existing = (snap.srdf?.semantic.groups ?? []).map((g) => {
    const item = el("li", {}, [
      `${g.name} `,
      button("remove", async () => {
        await ctx.store.removeGroup(g.name);
        rerender(root, "planning_groups", ctx);
      }),
    ]);
    item.addEventListener("mouseenter", async () => {
      const resolved = await ctx.store.resolveGroup(g.name);
      ctx.viewer?.setHighlight(highlightedLinks({ kind: "links", links: resolved.links }));
    });
    item.addEventListener("mouseleave", () => ctx.viewer?.setHighlight(new Set()));
    return item;
  });

  root.append(
    el("h2", {}, ["Planning groups"]),
    field("Group name", name),
    el("fieldset", {}, [
      el("legend", {}, ["Chain"]),
      field("Base link", chainBase),
      field("Tip link", chainTip),
    ]),
    el("fieldset", {}, [
      el("legend", {}, ["Members"]),
      field("Joints", jointPick),
      field("Links", linkPick),
      field("Subgroups", subPick),
    ]),
    add,
    errors.node,
    el("ul", {}, existing),
  );
}

export function renderRobotPoses(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const groups = snap.srdf?.semantic.groups.map((g) => g.name) ?? [];
  const joints = snap.project?.joints ?? [];
  const name = el("input", { placeholder: "home" });
  const groupPick = select(groups);
  const sliders = new Map<string, HTMLInputElement>();
  const sliderBox = el("div", { class: "sliders" });
  const values = (): Record<string, number> => {
    const out: Record<string, number> = {};
    for (const [joint, slider] of sliders) {
      out[joint] = Number(slider.value);
    }
    return out;
  };
  for (const joint of joints) {
    if (joint.limits === null || joint.kind === "fixed") {
      continue;
    }
    const slider = el("input", {
      type: "range",
      min: String(joint.limits.lower),
      max: String(joint.limits.upper),
      step: "0.01",
      value: String(snap.currentState[joint.name] ?? 0),
    });
    // live FK feedback on every drag
    slider.addEventListener("input", async () => {
      try {
        const { poses } = await ctx.store.fkPreview(values());
        ctx.viewer?.setPoses(poses);
      } catch (err) {
        errors.show(err);
      }
    });
    sliders.set(joint.name, slider);
    sliderBox.append(field(joint.name, slider));
  }
  const save = button("Save named pose", async () => {
    errors.clear();
    try {
      const resolved = await ctx.store.resolveGroup(groupPick.value);
      const all = values();
      const restricted: Record<string, number> = {};
      for (const j of resolved.joints) {
        restricted[j] = all[j] ?? 0;
      }
      await ctx.store.savePose(name.value, groupPick.value, restricted);
      rerender(root, "robot_poses", ctx);
    } catch (err) {
      errors.show(err);
    }
  });
  const existing = (snap.srdf?.semantic.group_states ?? []).map((gs) =>
    el("li", {}, [`${gs.name} (${gs.group})`]),
  );
  root.append(
    el("h2", {}, ["Robot poses"]),
    field("Pose name", name),
    field("Group", groupPick),
    sliderBox,
    save,
    errors.node,
    el("ul", {}, existing),
  );
}

export function renderEndEffectors(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const groups = snap.srdf?.semantic.groups.map((g) => g.name) ?? [];
  const links = snap.project?.links ?? [];
  const name = el("input", { placeholder: "gripper" });
  const group = select(groups);
  const parentLink = select(links);
  const parentGroup = select(["", ...groups]);
  const add = button("Add end effector", async () => {
    errors.clear();
    try {
      await ctx.store.addEndEffector({
        name: name.value,
        group: group.value,
        parent_link: parentLink.value,
        parent_group: parentGroup.value || undefined,
      });
      rerender(root, "end_effectors", ctx);
    } catch (err) {
      errors.show(err);
    }
  });
  const existing = (snap.srdf?.semantic.end_effectors ?? []).map((e) => {
    const item = el("li", {}, [`${e.name}: group ${e.group} on ${e.parent_link}`]);
    item.addEventListener("mouseenter", async () => {
      const resolved = await ctx.store.resolveGroup(e.group);
      ctx.viewer?.setHighlight(
        highlightedLinks({
          kind: "end_effector",
          parentLink: e.parent_link,
          links: resolved.links,
        }),
      );
    });
    item.addEventListener("mouseleave", () => ctx.viewer?.setHighlight(new Set()));
    return item;
  });
  root.append(
    el("h2", {}, ["End effectors"]),
    field("Name", name),
    field("Group", group),
    field("Parent link", parentLink),
    field("Parent group (optional)", parentGroup),
    add,
    errors.node,
    el("ul", {}, existing),
  );
}

export function renderPassiveJoints(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const joints = snap.project?.joints.filter((j) => j.kind !== "fixed").map((j) => j.name) ?? [];
  const pick = select(joints);
  const add = button("Mark passive", async () => {
    errors.clear();
    try {
      await ctx.store.addPassiveJoint(pick.value);
      rerender(root, "passive_joints", ctx);
    } catch (err) {
      errors.show(err);
    }
  });
  const existing = (snap.srdf?.semantic.passive_joints ?? []).map((name) =>
    el("li", {}, [
      `${name} `,
      button("remove", async () => {
        await ctx.store.removePassiveJoint(name);
        rerender(root, "passive_joints", ctx);
      }),
    ]),
  );
  root.append(
    el("h2", {}, ["Passive joints"]),
    field("Joint", pick),
    add,
    errors.node,
    el("ul", {}, existing),
  );
}

export function renderGenerate(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const directory = el("input", { placeholder: "/path/to/output (blank: preview only)" });
  const overwrite = el("input", { type: "checkbox" });
  const manifestBox = el("div", { class: "manifest" });
  const showManifest = () => {
    const bundle = ctx.store.snapshot().lastBundle;
    manifestBox.replaceChildren();
    if (!bundle) {
      return;
    }
    manifestBox.append(
      el("p", {}, [`inputs digest: ${bundle.inputs_digest}`]),
      el(
        "table",
        {},
        bundle.manifest.map((entry) =>
          el("tr", {}, [el("td", {}, [entry.path]), el("td", { class: "hash" }, [entry.sha256])]),
        ),
      ),
    );
  };
  const run = button("Generate configuration bundle", async () => {
    errors.clear();
    try {
      await ctx.store.generate(directory.value || undefined, overwrite.checked);
      showManifest();
    } catch (err) {
      errors.show(err);
    }
  });
  showManifest();
  root.append(
    el("h2", {}, ["Generate configuration files"]),
    snap.srdf && snap.srdf.validation.error_count > 0
      ? el("p", { class: "inline-error" }, [
          "Semantic configuration still has errors; fix them to enable generation.",
        ])
      : el("span", {}),
    field("Output directory", directory),
    field("Overwrite existing files", overwrite),
    run,
    errors.node,
    manifestBox,
  );
}

export function renderDemo(root: HTMLElement, ctx: PaneContext): void {
  const errors = errorSlot();
  const snap = ctx.store.snapshot();
  const groups = snap.srdf?.semantic.groups.map((g) => g.name) ?? [];
  const groupPick = select(groups);
  const seed = el("input", { type: "number", value: "0" });
  let goal: Record<string, number> | null = null;
  const goalLabel = el("code", {}, ["(no goal)"]);
  const randomGoal = button("Random valid goal", async () => {
    errors.clear();
    try {
      const resolved = await ctx.store.resolveGroup(groupPick.value);
      goal = ctx.store.randomGoal(resolved.joints);
      goalLabel.textContent = JSON.stringify(
        Object.fromEntries(Object.entries(goal).map(([k, v]) => [k, Number(v.toFixed(3))])),
      );
    } catch (err) {
      errors.show(err);
    }
  });
  const slider = el("input", { type: "range", min: "0", max: "0", step: "1", value: "0" });
  const planBtn = button("Plan", async () => {
    errors.clear();
    if (goal === null) {
      errors.show(new Error("pick a goal first"));
      return;
    }
    try {
      const result = await ctx.store.planDemo({
        group: groupPick.value,
        goal: { state: goal },
        seed: Number(seed.value),
      });
      if (result.trajectory) {
        // one interpolated frame per path state keeps playback in step with the plan
        const frames = playbackFrames(result.trajectory, Math.max(2, result.path.length));
        slider.max = String(frames.length - 1);
        slider.oninput = async () => {
          const frame = frames[Number(slider.value)];
          const { poses } = await ctx.store.fkPreview(frame);
          ctx.viewer?.setPoses(poses);
        };
      }
    } catch (err) {
      errors.show(err);
    }
  });
  root.append(
    el("h2", {}, ["Demo: plan and animate"]),
    field("Group", groupPick),
    field("Seed", seed),
    el("div", { class: "row" }, [randomGoal, goalLabel]),
    planBtn,
    field("Playback", slider),
    errors.node,
  );
}

const PANES: Record<StepId, PaneRenderer> = {
  start: renderStart,
  self_collisions: renderSelfCollisions,
  virtual_joints: renderVirtualJoints,
  planning_groups: renderPlanningGroups,
  robot_poses: renderRobotPoses,
  end_effectors: renderEndEffectors,
  passive_joints: renderPassiveJoints,
  generate: renderGenerate,
  demo: renderDemo,
};

export function rerender(root: HTMLElement, step: StepId, ctx: PaneContext): void {
  root.replaceChildren();
  PANES[step](root, ctx);
}
