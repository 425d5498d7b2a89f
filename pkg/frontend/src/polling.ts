// Long-running job progress polling (2 Hz while an ACM job runs).

import type { ApiClient } from "./api";
import type { JobProgress } from "./types";

export const POLL_INTERVAL_MS = 500;

export interface PollOptions {
  intervalMs?: number;
  onProgress?: (progress: JobProgress) => void;
  signal?: AbortSignal;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Poll an ACM job until it reaches a terminal state; resolves on "done". */
export async function pollJob(
  api: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobProgress> {
  const interval = options.intervalMs ?? POLL_INTERVAL_MS;
  for (;;) {
    if (options.signal?.aborted) {
      throw new Error("polling aborted");
    }
    const progress = await api.acmJobProgress(jobId);
    options.onProgress?.(progress);
    if (progress.status === "done") {
      return progress;
    }
    if (progress.status === "failed" || progress.status === "cancelled") {
      throw new Error(progress.error ?? `ACM job ${progress.status}`);
    }
    await sleep(interval);
  }
}
