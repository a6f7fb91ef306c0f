"""Trace-driven discrete-event simulation of the multicore memory hierarchy.

Each core replays its trace in order, blocking on every access: optional
private L1, then the shared DM cache, then DRAM on a miss or bypass.  Dirty
shared-cache victims emit non-blocking DRAM write-backs attributed to the
evicted line's owner.  Cleanup records invoke dm_cleanup for the issuing
core and charge a configurable latency.  The event queue orders events by
(time, insertion sequence), so runs are bit-deterministic.

Simulation modes:

* ``NoP``  - no partitioning: every core shares the full way mask and all
  requests are best-effort.
* ``WP``   - way partitioning: disjoint masks, every request forced
  deterministic (pure partitioned operation).
* ``DM``   - deterministic memory: disjoint masks, the request class comes
  from the page table (declared regions).

Reported per-core counts: ``dm_misses`` (deterministic-class shared-cache
demand misses, the RTA DM_i input) and ``be_l1_misses`` (best-effort-class
L1 misses, the RTA BM_i input; with the L1 disabled every best-effort
access counts).  The per-page histogram counts L1 misses per virtual page
for region-selection profiling.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from .addrspace import BankPolicy, DmRegionSet, PageAllocator, PageTable
from .cache import CLS_DM, HIT, CacheConfig, CacheStats, DmCache, PrivateCache
from .dram import DramConfig, DramController, DramStats
from .errors import PageFaultError, ValidationError
from .geometry import Geometry, MemoryRequest

OP_READ = 0
OP_WRITE = 1
OP_CLEANUP = 2
OP_END = 3

MODES = ("NoP", "WP", "DM")

TRACE_KINDS = ("bandwidth_write", "bandwidth_read", "sequential", "random")

_EV_CORE = 0
_EV_ENQ = 1
_EV_ARB = 2
_EV_DONE = 3


# ------------------------------------------------------------------- traces


def gen_trace(
    kind: str,
    working_set: int,
    iterations: int = 1,
    stride: int | None = None,
    seed: int = 0,
    line_size: int = 64,
    base: int = 0,
) -> list[tuple[int, int]]:
    """Synthesize a workload trace (list of (op, vaddr), END-terminated)."""
    if kind not in TRACE_KINDS:
        raise ValidationError(f"unknown trace kind {kind!r} (pick from {TRACE_KINDS})")
    if stride is None:
        stride = line_size
    if working_set <= 0 or working_set % line_size:
        raise ValidationError(
            f"working set {working_set} must be a positive multiple of line size {line_size}"
        )
    if stride <= 0 or stride % line_size:
        raise ValidationError(f"stride {stride} must be a positive multiple of line size")
    if stride > working_set:
        raise ValidationError(f"stride {stride} exceeds working set {working_set}")
    if iterations < 1:
        raise ValidationError("iterations must be at least 1")
    op = OP_WRITE if kind == "bandwidth_write" else OP_READ
    records: list[tuple[int, int]] = []
    if kind == "random":
        rng = random.Random(seed)
        per_pass = working_set // stride
        lines = working_set // line_size
        for _ in range(iterations * per_pass):
            records.append((op, base + rng.randrange(lines) * line_size))
    else:
        for _ in range(iterations):
            for off in range(0, working_set, stride):
                records.append((op, base + off))
    records.append((OP_END, 0))
    return records


def write_trace(records: list[tuple[int, int]], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"trace v1 {len(records)}\n")
        for op, addr in records:
            if op == OP_READ:
                fh.write(f"R {addr:#x}\n")
            elif op == OP_WRITE:
                fh.write(f"W {addr:#x}\n")
            elif op == OP_CLEANUP:
                fh.write("CLEANUP\n")
            elif op == OP_END:
                fh.write("END\n")
            else:
                raise ValidationError(f"unknown record op {op}")


def read_trace(path: str) -> list[tuple[int, int]]:
    records: list[tuple[int, int]] = []
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "trace" or header[1] != "v1":
            raise ValidationError(f"{path}:1: expected header 'trace v1 <count>'")
        try:
            count = int(header[2])
        except ValueError as exc:
            raise ValidationError(f"{path}:1: bad record count") from exc
        for lineno, raw in enumerate(fh, 2):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "R" or parts[0] == "W":
                if len(parts) != 2:
                    raise ValidationError(f"{path}:{lineno}: expected '{parts[0]} <hexaddr>'")
                try:
                    addr = int(parts[1], 16)
                except ValueError as exc:
                    raise ValidationError(f"{path}:{lineno}: bad address") from exc
                records.append((OP_READ if parts[0] == "R" else OP_WRITE, addr))
            elif parts[0] == "CLEANUP":
                records.append((OP_CLEANUP, 0))
            elif parts[0] == "END":
                records.append((OP_END, 0))
            else:
                raise ValidationError(f"{path}:{lineno}: unknown record {parts[0]!r}")
    if len(records) != count:
        raise ValidationError(
            f"{path}: header promises {count} records, found {len(records)}"
        )
    if not records or records[-1][0] != OP_END:
        raise ValidationError(f"{path}: trace must end with END")
    return records


# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class L1Config:
    size: int
    assoc: int
    hit_latency: int


@dataclass
class SimConfig:
    num_cores: int
    mode: str
    geom: Geometry
    cache: CacheConfig
    dram: DramConfig
    banks: BankPolicy
    traces: dict[int, list]
    regions: dict[int, DmRegionSet] = field(default_factory=dict)
    l1: L1Config | None = None
    phys_pages: int = 8192
    cleanup_latency: int = 2000
    sample_interval: int = 4096
    measured_core: int | None = None
    loop_corunners: bool = False
    audit: bool = False


def validate_sim_config(cfg: SimConfig) -> None:
    if cfg.mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.num_cores < 1:
        raise ValidationError("num_cores must be at least 1")
    if cfg.geom.num_sets != cfg.cache.num_sets:
        raise ValidationError("geometry set count disagrees with cache config")
    if cfg.geom.line_size != cfg.cache.line_size:
        raise ValidationError("geometry line size disagrees with cache config")
    if cfg.geom.num_banks != cfg.dram.num_banks:
        raise ValidationError("geometry bank count disagrees with dram config")
    if cfg.mode == "NoP":
        if any(cfg.regions.values()):
            raise ValidationError("NoP mode forbids DM region declarations")
        full = cfg.cache.full_mask
        bad = [c for c, m in cfg.cache.part_masks.items() if m != full]
        if bad:
            raise ValidationError(f"NoP mode uses the full way mask for every core, not {bad}")
    else:
        if cfg.cache.allow_overlap:
            raise ValidationError(f"{cfg.mode} mode requires pairwise-disjoint way masks")
    if not cfg.traces:
        raise ValidationError("no traces configured")
    for core, records in cfg.traces.items():
        if not 0 <= core < cfg.num_cores:
            raise ValidationError(f"trace for nonexistent core {core}")
        if not records or records[-1][0] != OP_END:
            raise ValidationError(f"core {core}: trace must end with END")
    if cfg.measured_core is not None and cfg.measured_core not in cfg.traces:
        raise ValidationError(f"measured core {cfg.measured_core} has no trace")
    if cfg.loop_corunners:
        if cfg.measured_core is None:
            raise ValidationError("loop_corunners requires a measured_core")
        for core, records in cfg.traces.items():
            if core != cfg.measured_core and len(records) < 2:
                raise ValidationError(f"core {core}: looping trace needs at least one access")
    cfg.banks.validate(cfg.dram.num_banks, cfg.num_cores)
    if cfg.cleanup_latency < 0 or cfg.sample_interval < 0:
        raise ValidationError("latencies and intervals must be non-negative")


# ------------------------------------------------------------------- report


@dataclass
class SimReport:
    mode: str
    num_cores: int
    cycles: int
    core_runtime: list
    core_loops: list
    core_accesses: list
    l1_hits: list
    l1_misses: list
    dm_misses: list
    be_l1_misses: list
    cache: CacheStats
    dram: DramStats
    schedule_log: list
    page_hist: dict
    alloc_log: list
    cleanup_events: list
    traced_cores: list


def export_rta(report: SimReport) -> str:
    lines = [
        f"core={c} dm_misses={report.dm_misses[c]} be_l1_misses={report.be_l1_misses[c]}"
        for c in report.traced_cores
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- run


def run(cfg: SimConfig) -> SimReport:
    validate_sim_config(cfg)
    cache = DmCache(cfg.cache, cfg.num_cores, audit=cfg.audit)
    dram = DramController(cfg.dram, cfg.num_cores, cfg.geom)
    l1s: dict[int, PrivateCache] = {}
    if cfg.l1 is not None:
        for core in cfg.traces:
            l1s[core] = PrivateCache(
                cfg.l1.size, cfg.l1.assoc, cfg.cache.line_size, cfg.l1.hit_latency
            )
    allocator = PageAllocator(cfg.phys_pages, cfg.geom)
    tables: dict[int, PageTable] = {}
    page_bits = cfg.geom.page_bits
    for core in sorted(cfg.traces):
        table = PageTable(core)
        table.declare_dm(cfg.regions.get(core, DmRegionSet()))
        seen: set[int] = set()
        footprint: list[int] = []
        for op, addr in cfg.traces[core]:
            if op <= OP_WRITE:
                vp = addr >> page_bits
                if vp not in seen:
                    seen.add(vp)
                    footprint.append(vp)
        allocator.alloc_footprint(footprint, table, cfg.banks)
        tables[core] = table

    force_dm = {"NoP": False, "WP": True, "DM": None}[cfg.mode]
    n = cfg.num_cores
    runtimes: list = [None] * n
    loops = [0] * n
    accesses = [0] * n
    be_l1 = [0] * n
    page_hist: dict[int, dict[int, int]] = {c: {} for c in cfg.traces}
    cleanup_events: list[tuple[int, int, int]] = []
    idx = {c: 0 for c in cfg.traces}
    hit_latency = cfg.cache.hit_latency
    sample_every = cfg.sample_interval
    l2_count = 0

    heap: list = []
    seq = 0

    def push(t: int, kind: int, payload) -> None:
        nonlocal seq
        seq += 1
        heapq.heappush(heap, (t, seq, kind, payload))

    for core in sorted(cfg.traces):
        push(0, _EV_CORE, core)
    arb_armed = False
    last_time = 0
    stop = False

    while heap and not stop:
        t, _, kind, payload = heapq.heappop(heap)
        last_time = t
        if kind == _EV_CORE:
            c = payload
            op, addr = cfg.traces[c][idx[c]]
            idx[c] += 1
            if op == OP_END:
                if cfg.loop_corunners and c != cfg.measured_core:
                    idx[c] = 0
                    loops[c] += 1
                    push(t, _EV_CORE, c)
                else:
                    runtimes[c] = t
                    if c == cfg.measured_core:
                        stop = True
                continue
            if op == OP_CLEANUP:
                cleared = cache.dm_cleanup(c)
                cleanup_events.append((t, c, cleared))
                push(t + cfg.cleanup_latency, _EV_CORE, c)
                continue
            write = op == OP_WRITE
            try:
                paddr, page_dm = tables[c].translate(addr, cfg.geom)
            except PageFaultError as exc:
                raise PageFaultError(f"{exc}; trace record {idx[c] - 1}") from exc
            dm = page_dm if force_dm is None else force_dm
            accesses[c] += 1
            lookup = 0
            if l1s:
                l1 = l1s[c]
                if l1.access(paddr, write):
                    push(t + l1.hit_latency, _EV_CORE, c)
                    continue
                if not dm:
                    be_l1[c] += 1
                vp = addr >> page_bits
                page_hist[c][vp] = page_hist[c].get(vp, 0) + 1
                lookup = l1.hit_latency
            else:
                if not dm:
                    be_l1[c] += 1
                vp = addr >> page_bits
                page_hist[c][vp] = page_hist[c].get(vp, 0) + 1
            status, evicted = cache.access(c, paddr, write, dm)
            l2_count += 1
            if sample_every and l2_count % sample_every == 0:
                cache.sample_occupancy(t)
            if status == HIT:
                push(t + lookup + hit_latency, _EV_CORE, c)
            else:
                t_req = t + lookup + hit_latency
                push(t_req, _EV_ENQ, (MemoryRequest(c, write, paddr, dm, t), True))
                if evicted is not None and evicted[1]:
                    wb = MemoryRequest(evicted[3], True, evicted[0], evicted[2], t)
                    push(t_req, _EV_ENQ, (wb, False))
        elif kind == _EV_ENQ:
            req, demand = payload
            staged = dram.enqueue(req, t, demand)
            if staged is None:
                push(t + 1, _EV_ENQ, payload)  # queue full: retry next cycle
            elif not arb_armed:
                arb_armed = True
                push(t, _EV_ARB, None)
        elif kind == _EV_ARB:
            grant = dram.step(t)
            if grant is not None:
                push(grant.completion, _EV_DONE, grant.req)
            if dram.pending():
                push(t + 1, _EV_ARB, None)
            else:
                arb_armed = False
        else:  # _EV_DONE
            req = payload
            if req.demand:
                push(t, _EV_CORE, req.core)

    cache.sample_occupancy(last_time)
    return SimReport(
        mode=cfg.mode,
        num_cores=n,
        cycles=last_time,
        core_runtime=runtimes,
        core_loops=loops,
        core_accesses=accesses,
        l1_hits=[l1s[c].hits if c in l1s else 0 for c in range(n)],
        l1_misses=[l1s[c].misses if c in l1s else 0 for c in range(n)],
        dm_misses=[cache.stats.misses[c][CLS_DM] for c in range(n)],
        be_l1_misses=be_l1,
        cache=cache.stats,
        dram=dram.stats,
        schedule_log=dram.log,
        page_hist=page_hist,
        alloc_log=allocator.log,
        cleanup_events=cleanup_events,
        traced_cores=sorted(cfg.traces),
    )
