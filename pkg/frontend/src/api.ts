// Thin typed client over the service's HTTP+JSON contract. Every wizard
// action maps to exactly one call here; there are no private endpoints.

import type {
  AcmReport,
  BundleResult,
  GeometryPayload,
  GoalSpec,
  JobProgress,
  MutationResult,
  PlanResponse,
  PoseJson,
  ProjectSummary,
  ResolveResult,
  SrdfSnapshot,
  WorldJson,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public element?: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let code = "error";
      let message = text || resp.statusText;
      let element: string | undefined;
      try {
        const data = JSON.parse(text);
        code = data.code ?? code;
        message = data.message ?? message;
        element = data.element ?? undefined;
      } catch {
        // non-JSON error body: keep raw text
      }
      throw new ApiError(resp.status, code, message, element);
    }
    const contentType = resp.headers.get("content-type") ?? "";
    if (contentType.includes("xml") || contentType.startsWith("text/")) {
      return text as unknown as T;
    }
    return JSON.parse(text) as T;
  }

  loadProject(body: { urdf?: string; path?: string; asset_root?: string }) {
    return this.request<ProjectSummary>("POST", "/api/project", body);
  }

  geometry() {
    return this.request<GeometryPayload>("GET", "/api/model/geometry");
  }

  fk(positions: Record<string, number>) {
    return this.request<{ poses: Record<string, PoseJson> }>("POST", "/api/fk", {
      positions,
    });
  }

  startAcmJob(body: {
    samples: number;
    seed: number;
    always_threshold?: number;
    workers?: number;
  }) {
    return this.request<{ job_id: string }>("POST", "/api/acm/jobs", body);
  }

  acmJobProgress(jobId: string) {
    return this.request<JobProgress>("GET", `/api/acm/jobs/${jobId}`);
  }

  acmReport() {
    return this.request<AcmReport>("GET", "/api/acm");
  }

  srdfSummary() {
    return this.request<SrdfSnapshot>("GET", "/api/srdf/summary");
  }

  srdfXml() {
    return this.request<string>("GET", "/api/srdf");
  }

  addGroup(body: {
    name: string;
    joints?: string[];
    links?: string[];
    chains?: [string, string][];
    subgroups?: string[];
  }) {
    return this.request<MutationResult>("POST", "/api/srdf/groups", body);
  }

  updateGroup(name: string, body: Record<string, unknown>) {
    return this.request<MutationResult>("PUT", `/api/srdf/groups/${name}`, body);
  }

  deleteGroup(name: string) {
    return this.request<MutationResult>("DELETE", `/api/srdf/groups/${name}`);
  }

  resolveGroup(name: string) {
    return this.request<ResolveResult>("GET", `/api/srdf/groups/${name}/resolve`);
  }

  addGroupState(body: { name: string; group: string; values: Record<string, number> }) {
    return this.request<MutationResult>("POST", "/api/srdf/group_states", body);
  }

  deleteGroupState(name: string) {
    return this.request<MutationResult>("DELETE", `/api/srdf/group_states/${name}`);
  }

  addEndEffector(body: {
    name: string;
    group: string;
    parent_link: string;
    parent_group?: string;
  }) {
    return this.request<MutationResult>("POST", "/api/srdf/end_effectors", body);
  }

  deleteEndEffector(name: string) {
    return this.request<MutationResult>("DELETE", `/api/srdf/end_effectors/${name}`);
  }

  addVirtualJoint(body: {
    name: string;
    kind: string;
    parent_frame: string;
    child_link: string;
    workspace?: [number, number][];
  }) {
    return this.request<MutationResult>("POST", "/api/srdf/virtual_joints", body);
  }

  deleteVirtualJoint(name: string) {
    return this.request<MutationResult>("DELETE", `/api/srdf/virtual_joints/${name}`);
  }

  addPassiveJoint(name: string) {
    return this.request<MutationResult>("POST", "/api/srdf/passive_joints", { name });
  }

  deletePassiveJoint(name: string) {
    return this.request<MutationResult>("DELETE", `/api/srdf/passive_joints/${name}`);
  }

  generateBundle(body: { directory?: string; overwrite?: boolean }) {
    return this.request<BundleResult>("POST", "/api/bundle", body);
  }

  plan(body: { group: string; goal: GoalSpec; seed?: number; time_budget?: number }) {
    return this.request<PlanResponse>("POST", "/api/plan", body);
  }

  getWorld() {
    return this.request<WorldJson>("GET", "/api/world");
  }

  setWorld(world: WorldJson) {
    return this.request<WorldJson>("POST", "/api/world", world);
  }

  exportState() {
    return this.request<Record<string, number>>("GET", "/api/export/state");
  }

  importState(state: Record<string, number>) {
    return this.request<Record<string, number>>("POST", "/api/import/state", state);
  }
}
