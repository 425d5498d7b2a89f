// Payload types mirroring the robosetup service JSON contract.

export interface ValidationFinding {
  severity: "error" | "warning" | "info";
  message: string;
  element: string | null;
}

export interface ValidationReport {
  findings: ValidationFinding[];
  error_count: number;
  warning_count: number;
}

export interface JointSummary {
  name: string;
  kind: string;
  parent: string;
  child: string;
  limits: { lower: number; upper: number } | null;
}

export interface ProjectSummary {
  name: string;
  root_link: string;
  links: string[];
  joints: JointSummary[];
  active_joints: string[];
  warnings: string[];
  validation: ValidationReport;
}

export interface TriangleMesh {
  vertices: number[][];
  faces: number[][];
}

export interface GeometryEntry {
  shape: Record<string, unknown>;
  mesh: TriangleMesh;
}

export interface LinkGeometry {
  name: string;
  collisions: GeometryEntry[];
  visuals: GeometryEntry[];
}

export interface PoseJson {
  xyz: [number, number, number];
  quat: [number, number, number, number];
}

export interface GeometryPayload {
  links: LinkGeometry[];
  default_poses: Record<string, PoseJson>;
}

export interface JobProgress {
  job_id?: string;
  done: number;
  total: number;
  status: "pending" | "running" | "done" | "failed" | "cancelled";
  partial: Record<string, number>;
  error: string | null;
}

export interface AcmPairRow {
  link1: string;
  link2: string;
  samples: number;
  collisions: number;
  disabled: boolean;
  reason: string | null;
}

export interface AcmReport {
  sample_count: number;
  rng_seed: number;
  always_threshold: number;
  disabled_by_reason: Record<string, number>;
  pairs: AcmPairRow[];
  caveat: string;
}

export interface GroupSummary {
  name: string;
  joints: string[];
  links: string[];
  chains: [string, string][];
  subgroups: string[];
}

export interface GroupStateSummary {
  name: string;
  group: string;
  values: Record<string, number>;
}

export interface EndEffectorSummary {
  name: string;
  group: string;
  parent_link: string;
  parent_group: string | null;
}

export interface VirtualJointSummary {
  name: string;
  kind: string;
  parent_frame: string;
  child_link: string;
  workspace: [number, number][] | null;
}

export interface DisabledPairSummary {
  link1: string;
  link2: string;
  reason: string;
}

export interface SemanticSummary {
  groups: GroupSummary[];
  group_states: GroupStateSummary[];
  end_effectors: EndEffectorSummary[];
  virtual_joints: VirtualJointSummary[];
  passive_joints: string[];
  disabled_pairs: DisabledPairSummary[];
}

export interface SrdfSnapshot {
  semantic: SemanticSummary;
  validation: ValidationReport;
}

export interface MutationResult {
  validation: ValidationReport;
  semantic: SemanticSummary;
}

export interface ResolveResult {
  joints: string[];
  links: string[];
  is_chain: boolean;
}

export interface ManifestEntry {
  path: string;
  sha256: string;
}

export interface BundleResult {
  manifest: ManifestEntry[];
  inputs_digest: string;
  written: string[];
}

export interface TrajectoryPoint {
  t: number;
  positions: Record<string, number>;
  velocities: Record<string, number>;
  accelerations: Record<string, number>;
}

export interface TrajectoryJson {
  joint_names: string[];
  duration: number;
  points: TrajectoryPoint[];
}

export interface PlanResponse {
  path: Record<string, number>[];
  trajectory: TrajectoryJson | null;
  metrics: { solve_time: number; checks_performed: number; iterations: number };
}

export type GoalSpec =
  | { state: Record<string, number> }
  | { named: string }
  | { pose: { xyz: number[]; rpy: number[] } };

export interface WorldJson {
  objects: {
    name: string;
    shape: Record<string, unknown>;
    pose: { xyz: number[]; rpy: number[] };
  }[];
}
