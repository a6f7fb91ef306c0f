"""Fixed-priority response-time analysis with per-class memory interference.

Each task carries its solo WCET C, period T, deadline D, a count of
deterministic-class shared-cache misses (dm) and best-effort L1 misses (bm).
The platform charges every dm request an inter-core delay ``rd_dm`` and
every bm request ``rd_bm``; the interference term is linear in the counts.
The recurrence is the usual one over higher-priority tasks, with C + I in
place of C.  All arithmetic is exact integer math.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .errors import SimulationError, ValidationError


@dataclass(frozen=True)
class TaskParams:
    name: str
    wcet: int
    period: int
    deadline: int
    dm: int
    bm: int
    priority: int  # smaller value = higher priority

    def __post_init__(self) -> None:
        if self.wcet <= 0:
            raise ValidationError(f"task {self.name}: C must be positive")
        if not 0 < self.deadline <= self.period:
            raise ValidationError(f"task {self.name}: need 0 < D <= T")
        if self.dm < 0 or self.bm < 0:
            raise ValidationError(f"task {self.name}: negative request count")


@dataclass(frozen=True)
class PlatformParams:
    rd_dm: int
    rd_bm: int

    def __post_init__(self) -> None:
        if self.rd_dm < 0 or self.rd_bm < 0:
            raise ValidationError("interference delays must be non-negative")
        if self.rd_dm > self.rd_bm:
            warnings.warn(
                f"rd_dm ({self.rd_dm}) exceeds rd_bm ({self.rd_bm}); "
                "the deterministic bound is expected to be the tight one",
                stacklevel=2,
            )


@dataclass(frozen=True)
class RtaResult:
    name: str
    response: int
    schedulable: bool
    iterations: int


def interference(task: TaskParams, platform: PlatformParams) -> int:
    """Worst-case inter-core memory interference charged to one job."""
    return task.dm * platform.rd_dm + task.bm * platform.rd_bm


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def response_times(
    tasks: list[TaskParams],
    platform: PlatformParams,
    max_iterations: int = 10**6,
) -> list[RtaResult]:
    """Iterate the response-time recurrence for every task.

    Returns results in priority order (highest first).  For an
    unschedulable task the reported R is the first iterate exceeding D.
    """
    prios = [t.priority for t in tasks]
    if len(set(prios)) != len(prios):
        raise ValidationError("task priorities must be unique")
    ordered = sorted(tasks, key=lambda t: t.priority)
    results = []
    for i, task in enumerate(ordered):
        hp = ordered[:i]
        inflated = task.wcet + interference(task, platform)
        hp_cost = [(h.period, h.wcet + interference(h, platform)) for h in hp]
        r = inflated
        iters = 0
        while True:
            iters += 1
            if iters > max_iterations:
                raise SimulationError(
                    f"task {task.name}: recurrence exceeded {max_iterations} iterations"
                )
            if r > task.deadline:
                results.append(RtaResult(task.name, r, False, iters))
                break
            nxt = inflated + sum(_ceil_div(r, T) * cost for T, cost in hp_cost)
            if nxt == r:
                results.append(RtaResult(task.name, r, True, iters))
                break
            r = nxt
    return results


def deadline_monotonic(tasks: list[TaskParams]) -> list[TaskParams]:
    """Reassign priorities by ascending deadline (ties broken by name)."""
    ranked = sorted(tasks, key=lambda t: (t.deadline, t.name))
    return [
        TaskParams(t.name, t.wcet, t.period, t.deadline, t.dm, t.bm, prio)
        for prio, t in enumerate(ranked)
    ]


# ------------------------------------------------------------------- files


def parse_taskset(text: str, source: str = "<string>") -> tuple[list[TaskParams], PlatformParams]:
    tasks = []
    platform = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        where = f"{source}:{lineno}"
        if parts[0] == "platform":
            if len(parts) != 3:
                raise ValidationError(f"{where}: expected 'platform rd_dm rd_bm'")
            if platform is not None:
                raise ValidationError(f"{where}: duplicate platform line")
            try:
                platform = PlatformParams(int(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise ValidationError(f"{where}: bad platform integers") from exc
            continue
        if len(parts) != 7:
            raise ValidationError(f"{where}: expected 'name C T D dm bm prio'")
        try:
            tasks.append(
                TaskParams(
                    parts[0], int(parts[1]), int(parts[2]), int(parts[3]),
                    int(parts[4]), int(parts[5]), int(parts[6]),
                )
            )
        except ValueError as exc:
            raise ValidationError(f"{where}: bad task integers") from exc
    if platform is None:
        raise ValidationError(f"{source}: missing platform line")
    if not tasks:
        raise ValidationError(f"{source}: no tasks")
    return tasks, platform


def load_taskset(path: str) -> tuple[list[TaskParams], PlatformParams]:
    with open(path) as fh:
        return parse_taskset(fh.read(), source=path)


def apply_counts(tasks: list[TaskParams], counts: dict[int, tuple[int, int]]) -> list[TaskParams]:
    """Overlay engine-exported (dm, bm) counts onto tasks named core<i>."""
    out = []
    for t in tasks:
        if t.name.startswith("core") and t.name[4:].isdigit():
            core = int(t.name[4:])
            if core in counts:
                dm, bm = counts[core]
                t = TaskParams(t.name, t.wcet, t.period, t.deadline, dm, bm, t.priority)
        out.append(t)
    return out


def parse_rta_export(text: str, source: str = "<string>") -> dict[int, tuple[int, int]]:
    counts: dict[int, tuple[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = dict(
            tok.split("=", 1) for tok in line.split() if "=" in tok
        )
        try:
            counts[int(fields["core"])] = (
                int(fields["dm_misses"]),
                int(fields["be_l1_misses"]),
            )
        except (KeyError, ValueError) as exc:
            raise ValidationError(
                f"{source}:{lineno}: expected 'core=<i> dm_misses=<n> be_l1_misses=<m>'"
            ) from exc
    return counts


def write_results(results: list[RtaResult], path: str) -> None:
    with open(path, "w") as fh:
        fh.write("name,R,schedulable,iters\n")
        for r in results:
            fh.write(f"{r.name},{r.response},{int(r.schedulable)},{r.iterations}\n")
