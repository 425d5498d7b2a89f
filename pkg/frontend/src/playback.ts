// Trajectory playback: sample joint positions at arbitrary times by linear
// interpolation between trajectory waypoints, and build animation frames.

import type { TrajectoryJson } from "./types";

export function sampleTrajectory(
  traj: TrajectoryJson,
  t: number,
): Record<string, number> {
  const points = traj.points;
  if (points.length === 0) {
    return {};
  }
  if (t <= points[0].t) {
    return { ...points[0].positions };
  }
  const last = points[points.length - 1];
  if (t >= last.t) {
    return { ...last.positions };
  }
  let lo = 0;
  let hi = points.length - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (points[mid].t <= t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const a = points[lo];
  const b = points[hi];
  const u = b.t === a.t ? 0 : (t - a.t) / (b.t - a.t);
  const out: Record<string, number> = {};
  for (const j of traj.joint_names) {
    out[j] = a.positions[j] + u * (b.positions[j] - a.positions[j]);
  }
  return out;
}

/** Evenly spaced frames across the trajectory for animation playback. */
export function playbackFrames(
  traj: TrajectoryJson,
  frameCount: number,
): Record<string, number>[] {
  if (frameCount < 1) {
    return [];
  }
  if (frameCount === 1 || traj.duration === 0) {
    return [sampleTrajectory(traj, 0)];
  }
  const frames: Record<string, number>[] = [];
  for (let i = 0; i < frameCount; i++) {
    frames.push(sampleTrajectory(traj, (traj.duration * i) / (frameCount - 1)));
  }
  return frames;
}
