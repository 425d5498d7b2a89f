// Wizard state machine and action layer. The store holds no configuration
// truth of its own: every snapshot field is refetched from the service, so a
// browser refresh reproduces the identical state.

import type { ApiClient } from "./api";
import { pollJob } from "./polling";
import type {
  AcmReport,
  BundleResult,
  GeometryPayload,
  GoalSpec,
  JobProgress,
  MutationResult,
  PlanResponse,
  ProjectSummary,
  SrdfSnapshot,
} from "./types";

export type StepId =
  | "start"
  | "self_collisions"
  | "virtual_joints"
  | "planning_groups"
  | "robot_poses"
  | "end_effectors"
  | "passive_joints"
  | "generate"
  | "demo";

export const STEP_ORDER: StepId[] = [
  "start",
  "self_collisions",
  "virtual_joints",
  "planning_groups",
  "robot_poses",
  "end_effectors",
  "passive_joints",
  "generate",
  "demo",
];

export const STEP_LABELS: Record<StepId, string> = {
  start: "Start",
  self_collisions: "Self-Collisions",
  virtual_joints: "Virtual Joints",
  planning_groups: "Planning Groups",
  robot_poses: "Robot Poses",
  end_effectors: "End Effectors",
  passive_joints: "Passive Joints",
  generate: "Generate",
  demo: "Demo",
};

export interface WizardSnapshot {
  step: StepId;
  visited: StepId[];
  dirty: Partial<Record<StepId, boolean>>;
  project: ProjectSummary | null;
  srdf: SrdfSnapshot | null;
  acm: AcmReport | null;
  acmProgress: JobProgress | null;
  geometry: GeometryPayload | null;
  currentState: Record<string, number>;
  lastBundle: BundleResult | null;
  lastPlan: PlanResponse | null;
  error: string | null;
}

type Listener = (snapshot: WizardSnapshot) => void;

export class WizardStore {
  private step: StepId = "start";
  private visited = new Set<StepId>(["start"]);
  private dirty: Partial<Record<StepId, boolean>> = {};
  private project: ProjectSummary | null = null;
  private srdf: SrdfSnapshot | null = null;
  private acm: AcmReport | null = null;
  private acmProgress: JobProgress | null = null;
  private geometry: GeometryPayload | null = null;
  private currentState: Record<string, number> = {};
  private lastBundle: BundleResult | null = null;
  private lastPlan: PlanResponse | null = null;
  private error: string | null = null;
  private listeners: Listener[] = [];

  constructor(readonly api: ApiClient) {}

  // --- observation ----------------------------------------------------------

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  snapshot(): WizardSnapshot {
    return {
      step: this.step,
      visited: STEP_ORDER.filter((s) => this.visited.has(s)),
      dirty: { ...this.dirty },
      project: this.project,
      srdf: this.srdf,
      acm: this.acm,
      acmProgress: this.acmProgress,
      geometry: this.geometry,
      currentState: { ...this.currentState },
      lastBundle: this.lastBundle,
      lastPlan: this.lastPlan,
      error: this.error,
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) {
      listener(snap);
    }
  }

  // --- navigation -----------------------------------------------------------

  get currentStep(): StepId {
    return this.step;
  }

  /** Back-and-forth navigation is always allowed; only Generate is gated. */
  canNavigate(step: StepId): boolean {
    if (step === "start") {
      return true;
    }
    if (this.project === null) {
      return false; // nothing to configure yet
    }
    if (step === "generate") {
      return this.generateEnabled();
    }
    return true;
  }

  generateEnabled(): boolean {
    return (
      this.project !== null &&
      this.srdf !== null &&
      this.srdf.validation.error_count === 0
    );
  }

  goTo(step: StepId): void {
    if (!this.canNavigate(step)) {
      throw new Error(`step '${step}' is not available yet`);
    }
    this.step = step;
    this.visited.add(step);
    this.emit();
  }

  markDirty(step: StepId, value = true): void {
    this.dirty[step] = value;
    this.emit();
  }

  // --- server state ----------------------------------------------------------

  /** Refetch everything the wizard shows; the server is the only truth. */
  async refresh(): Promise<void> {
    if (this.project === null) {
      return;
    }
    this.srdf = await this.api.srdfSummary();
    try {
      this.acm = await this.api.acmReport();
    } catch {
      this.acm = null; // 404 until an ACM job has completed
    }
    this.currentState = await this.api.exportState();
    this.emit();
  }

  private async mutation(result: Promise<MutationResult>): Promise<MutationResult> {
    try {
      const data = await result;
      this.error = null;
      await this.refresh();
      return data;
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
      this.emit();
      throw err;
    }
  }

  // --- step actions ----------------------------------------------------------

  async loadProject(body: { urdf?: string; path?: string; asset_root?: string }) {
    this.project = await this.api.loadProject(body);
    this.geometry = await this.api.geometry();
    this.acm = null;
    this.acmProgress = null;
    this.lastBundle = null;
    this.lastPlan = null;
    await this.refresh();
    return this.project;
  }

  async runAcmJob(options: {
    samples: number;
    seed: number;
    always_threshold?: number;
    intervalMs?: number;
  }): Promise<AcmReport> {
    const { job_id } = await this.api.startAcmJob({
      samples: options.samples,
      seed: options.seed,
      always_threshold: options.always_threshold,
    });
    await pollJob(this.api, job_id, {
      intervalMs: options.intervalMs,
      onProgress: (progress) => {
        this.acmProgress = progress;
        this.emit();
      },
    });
    this.acm = await this.api.acmReport();
    await this.refresh();
    return this.acm;
  }

  addVirtualJoint(body: {
    name: string;
    kind: string;
    parent_frame: string;
    child_link: string;
    workspace?: [number, number][];
  }) {
    return this.mutation(this.api.addVirtualJoint(body));
  }

  removeVirtualJoint(name: string) {
    return this.mutation(this.api.deleteVirtualJoint(name));
  }

  addGroup(body: {
    name: string;
    joints?: string[];
    links?: string[];
    chains?: [string, string][];
    subgroups?: string[];
  }) {
    return this.mutation(this.api.addGroup(body));
  }

  removeGroup(name: string) {
    return this.mutation(this.api.deleteGroup(name));
  }

  resolveGroup(name: string) {
    return this.api.resolveGroup(name);
  }

  async savePose(name: string, group: string, values: Record<string, number>) {
    return this.mutation(this.api.addGroupState({ name, group, values }));
  }

  addEndEffector(body: {
    name: string;
    group: string;
    parent_link: string;
    parent_group?: string;
  }) {
    return this.mutation(this.api.addEndEffector(body));
  }

  addPassiveJoint(name: string) {
    return this.mutation(this.api.addPassiveJoint(name));
  }

  removePassiveJoint(name: string) {
    return this.mutation(this.api.deletePassiveJoint(name));
  }

  async fkPreview(positions: Record<string, number>) {
    return this.api.fk(positions);
  }

  async setRobotState(state: Record<string, number>) {
    const applied = await this.api.importState(state);
    this.currentState = applied;
    this.emit();
    return applied;
  }

  async generate(directory?: string, overwrite = false): Promise<BundleResult> {
    if (!this.generateEnabled()) {
      throw new Error("Generate requires a loaded model and an error-free semantic");
    }
    this.lastBundle = await this.api.generateBundle({ directory, overwrite });
    this.emit();
    return this.lastBundle;
  }

  async planDemo(body: {
    group: string;
    goal: GoalSpec;
    seed?: number;
  }): Promise<PlanResponse> {
    this.lastPlan = await this.api.plan(body);
    this.emit();
    return this.lastPlan;
  }

  /** A uniform in-limit joint goal over the given joints (demo pane button). */
  randomGoal(
    jointNames: string[],
    rand: () => number = Math.random,
  ): Record<string, number> {
    if (this.project === null) {
      throw new Error("no project loaded");
    }
    const limits = new Map(
      this.project.joints.filter((j) => j.limits !== null).map((j) => [j.name, j.limits!]),
    );
    const goal: Record<string, number> = {};
    for (const name of jointNames) {
      const lim = limits.get(name);
      if (lim === undefined) {
        continue; // continuous or unlimited joints default to 0
      }
      goal[name] = lim.lower + (lim.upper - lim.lower) * rand();
    }
    return goal;
  }
}
