"""Self-collision matrix generation by mass random sampling.

Three stages: disable joint-adjacent pairs, tag pairs colliding in the
default state, then sample random configurations and record per-pair
collision counts. Pairs that never collide are disabled (Never); pairs at or
above the always-threshold are disabled (Always). Default-tagged pairs below
the threshold stay disabled as Default. The result is deterministic for a
fixed seed regardless of worker count: each sample draws from its own
(seed, index) random stream and counters merge by summation.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kinematics
from .collision import AllowedCollisionMatrix, pair_key, _links_collide
from .errors import ToolkitError
from .kinematics import JointGroup, default_state, whole_robot_group
from .robot_model import RobotModel, collidable_pairs

CAVEAT = (
    "Never entries are sampling-based and probabilistically incomplete: a pair "
    "may be disabled despite a rare reachable collision. Raise sample_count to "
    "reduce the risk; every Never entry retains its sample count."
)


@dataclass(frozen=True)
class AcmGenParams:
    sample_count: int = 10_000
    always_threshold: float = 0.95
    rng_seed: int = 0
    progress_granularity: int = 200

    def __post_init__(self):
        if self.sample_count < 1:
            raise ToolkitError("sample_count must be at least 1")
        if not (0.0 < self.always_threshold <= 1.0):
            raise ToolkitError("always_threshold must lie in (0, 1]")


@dataclass
class AcmReport:
    acm: AllowedCollisionMatrix
    pair_stats: dict[tuple[str, str], tuple[int, int]]  # pair -> (samples, collisions)
    disabled_by_reason: dict[str, int]
    sample_count: int
    rng_seed: int
    always_threshold: float
    default_state_pairs: list[tuple[str, str]]
    elapsed_seconds: float
    caveat: str = CAVEAT

    def to_json(self, include_elapsed: bool = True) -> dict:
        data = {
            "sample_count": self.sample_count,
            "rng_seed": self.rng_seed,
            "always_threshold": self.always_threshold,
            "disabled_by_reason": dict(sorted(self.disabled_by_reason.items())),
            "default_state_pairs": [list(p) for p in sorted(self.default_state_pairs)],
            "pairs": [
                {
                    "link1": pair[0],
                    "link2": pair[1],
                    "samples": stats[0],
                    "collisions": stats[1],
                    "disabled": self.acm.is_disabled(*pair),
                    "reason": (
                        self.acm.entry(*pair).reason
                        if self.acm.entry(*pair) is not None
                        else None
                    ),
                }
                for pair, stats in sorted(self.pair_stats.items())
            ],
            "caveat": self.caveat,
        }
        if include_elapsed:
            data["elapsed_seconds"] = self.elapsed_seconds
        return data

    def dumps(self, include_elapsed: bool = True) -> str:
        return json.dumps(self.to_json(include_elapsed), indent=2, sort_keys=True)


class JobCancelled(Exception):
    pass


def _sample_collisions(
    model: RobotModel,
    group: JointGroup,
    pairs: list[tuple[str, str]],
    seed: int,
    index_range: range,
    counts: np.ndarray,
    on_progress,
    cancel: threading.Event | None,
) -> None:
    links = {p[0] for p in pairs} | {p[1] for p in pairs}
    link_objs = {name: model.link(name) for name in links}
    for i in index_range:
        if cancel is not None and cancel.is_set():
            raise JobCancelled()
        rng = np.random.default_rng([seed, i])
        state = kinematics.sample_random_state(model, group, rng)
        poses = kinematics.forward_kinematics(model, state, check_limits=False)
        for pi, (a, b) in enumerate(pairs):
            if _links_collide(link_objs[a], poses[a], link_objs[b], poses[b]):
                counts[pi] += 1
        on_progress(1)


def generate_acm(
    model: RobotModel,
    params: AcmGenParams,
    workers: int = 1,
    progress_cb=None,
    cancel: threading.Event | None = None,
) -> AcmReport:
    """Run the three-stage self-collision matrix procedure.

    progress_cb, when given, is called as progress_cb(done, total) roughly
    every progress_granularity samples.
    """
    t0 = time.monotonic()
    group = whole_robot_group(model)
    for dof in group.dofs:
        if not dof.bounded:
            raise ToolkitError(
                f"cannot sample: DOF '{dof.name}' is unbounded", element=dof.name
            )

    all_pairs = collidable_pairs(model)
    acm = AllowedCollisionMatrix()

    # stage 1: adjacent pairs, disabled by construction
    pair_set = set(all_pairs)
    adjacent = set()
    for joint in model.joints:
        key = pair_key(joint.parent_link, joint.child_link)
        if key in pair_set:
            adjacent.add(key)
    for key in sorted(adjacent):
        acm.set(key[0], key[1], True, "Adjacent")

    sampled_pairs = [p for p in all_pairs if p not in adjacent]

    # stage 2: pairs colliding in the default (midpoint) state
    base = default_state(model)
    poses = kinematics.forward_kinematics(model, base, check_limits=False)
    default_hits = [
        p
        for p in sampled_pairs
        if _links_collide(model.link(p[0]), poses[p[0]], model.link(p[1]), poses[p[1]])
    ]

    # stage 3: mass random sampling with per-sample rng streams
    counts = np.zeros(len(sampled_pairs), dtype=np.int64)
    done_lock = threading.Lock()
    done = [0]
    gran = max(1, params.progress_granularity)

    def on_progress(n: int) -> None:
        if progress_cb is None and cancel is None:
            return
        with done_lock:
            done[0] += n
            current = done[0]
        if progress_cb is not None and (current % gran == 0 or current == params.sample_count):
            progress_cb(current, params.sample_count)

    n = params.sample_count
    if workers <= 1:
        _sample_collisions(
            model, group, sampled_pairs, params.rng_seed, range(n), counts, on_progress, cancel
        )
    else:
        chunk = max(1, (n + workers - 1) // workers)
        parts = []
        ranges = [range(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = []
            for rg in ranges:
                part = np.zeros(len(sampled_pairs), dtype=np.int64)
                parts.append(part)
                futures.append(
                    pool.submit(
                        _sample_collisions,
                        model,
                        group,
                        sampled_pairs,
                        params.rng_seed,
                        rg,
                        part,
                        on_progress,
                        cancel,
                    )
                )
            for f in futures:
                f.result()
        for part in parts:
            counts += part

    # classify
    default_set = set(default_hits)
    for pi, pair in enumerate(sampled_pairs):
        hits = int(counts[pi])
        if hits == 0:
            acm.set(pair[0], pair[1], True, "Never", samples=n, collisions=0)
        elif hits / n >= params.always_threshold:
            acm.set(pair[0], pair[1], True, "Always", samples=n, collisions=hits)
        elif pair in default_set:
            acm.set(pair[0], pair[1], True, "Default", samples=n, collisions=hits)

    by_reason: dict[str, int] = {}
    for _, entry in acm.entries.items():
        if entry.disabled:
            by_reason[entry.reason] = by_reason.get(entry.reason, 0) + 1

    stats = {pair: (0, 0) for pair in adjacent}
    for pi, pair in enumerate(sampled_pairs):
        stats[pair] = (n, int(counts[pi]))

    return AcmReport(
        acm=acm,
        pair_stats=stats,
        disabled_by_reason=by_reason,
        sample_count=n,
        rng_seed=params.rng_seed,
        always_threshold=params.always_threshold,
        default_state_pairs=default_hits,
        elapsed_seconds=time.monotonic() - t0,
    )


@dataclass
class AcmJob:
    """Background ACM generation with concurrent progress polling.

    Cancellation discards all partial work; the job then holds no report.
    """

    model: RobotModel
    params: AcmGenParams
    workers: int = 1
    status: str = "pending"  # pending | running | done | failed | cancelled
    report: AcmReport | None = None
    error: str | None = None
    _done: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _cancel: threading.Event = field(default_factory=threading.Event, repr=False)
    _thread: threading.Thread | None = field(default=None, repr=False)

    def start(self) -> "AcmJob":
        def _run():
            try:
                report = generate_acm(
                    self.model,
                    self.params,
                    workers=self.workers,
                    progress_cb=self._on_progress,
                    cancel=self._cancel,
                )
                with self._lock:
                    self.report = report
                    self.status = "done"
                    self._done = self.params.sample_count
            except JobCancelled:
                with self._lock:
                    self.status = "cancelled"
            except Exception as exc:  # surfaced through progress polling
                with self._lock:
                    self.status = "failed"
                    self.error = str(exc)

        with self._lock:
            self.status = "running"
        self._thread = threading.Thread(target=_run, daemon=True)
        self._thread.start()
        return self

    def _on_progress(self, current: int, total: int) -> None:
        with self._lock:
            if current > self._done:
                self._done = current

    def progress(self) -> dict:
        with self._lock:
            partial = {}
            if self.report is not None:
                partial = dict(self.report.disabled_by_reason)
            return {
                "done": self._done,
                "total": self.params.sample_count,
                "status": self.status,
                "partial": partial,
                "error": self.error,
            }

    def cancel(self) -> None:
        self._cancel.set()

    def wait(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)


def acm_progress(job: AcmJob) -> dict:
    """Monotone progress snapshot of a running or finished job."""
    return job.progress()
