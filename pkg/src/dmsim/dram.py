"""DRAM controller with per-bank open-row timing and two-level scheduling.

Deterministic (dm) requests sit in per-core FIFO queues served round-robin;
best-effort requests share one queue served FR-FCFS (ready row hits first,
then oldest).  DM traffic has priority, bounded by a cap on consecutive DM
grants counted only while best-effort work is pending; the counter resets
whenever a best-effort request is granted or the best-effort queue drains.

The round-robin scan skips cores whose head request targets a busy bank; if
every candidate bank is busy the grant commits anyway and service start
waits for the bank (wait-grant).  The same wait-grant fallback applies to
the best-effort queue.  Bank latencies overlap across banks; completions
serialize on the shared data bus (``t_bus`` each).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .geometry import Geometry, MemoryRequest


@dataclass(frozen=True)
class DramConfig:
    num_banks: int
    rows_per_bank: int
    t_row_hit: int
    t_row_miss: int
    t_bus: int
    dm_cap: int = 30
    queue_capacity: int = 64

    def __post_init__(self) -> None:
        if self.num_banks <= 0 or self.num_banks & (self.num_banks - 1):
            raise ValidationError(f"num_banks {self.num_banks} must be a power of two")
        if self.rows_per_bank <= 0:
            raise ValidationError("rows_per_bank must be positive")
        for name in ("t_row_hit", "t_row_miss", "t_bus"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.t_row_hit > self.t_row_miss:
            raise ValidationError("t_row_hit must not exceed t_row_miss")
        if self.dm_cap < 1:
            raise ValidationError("dm_cap must be at least 1")
        if self.queue_capacity < 1:
            raise ValidationError("queue_capacity must be at least 1")


class DramRequest:
    """A memory request staged in the controller, with derived coordinates."""

    __slots__ = ("core", "write", "dm", "paddr", "bank", "row", "arrival", "demand")

    def __init__(self, core, write, dm, paddr, bank, row, arrival, demand):
        self.core = core
        self.write = write
        self.dm = dm
        self.paddr = paddr
        self.bank = bank
        self.row = row
        self.arrival = arrival
        self.demand = demand


@dataclass(frozen=True)
class Grant:
    req: DramRequest
    grant_time: int
    start: int
    completion: int
    row_hit: bool
    queue_wait: int


class _Bank:
    __slots__ = ("open_row", "busy_until")

    def __init__(self):
        self.open_row: int | None = None
        self.busy_until = 0


class DramStats:
    def __init__(self):
        self.grants = [0, 0]  # [be, dm]
        self.row_hits = [0, 0]
        self.writes = [0, 0]
        self.wait_sum = [0, 0]
        self.max_wait = 0
        self.rejected = 0  # enqueue attempts bounced by back-pressure


class DramController:
    def __init__(self, cfg: DramConfig, num_cores: int, geom: Geometry):
        if geom.num_banks != cfg.num_banks:
            raise ValidationError(
                f"geometry has {geom.num_banks} banks but controller expects {cfg.num_banks}"
            )
        self.cfg = cfg
        self.geom = geom
        self.num_cores = num_cores
        self.dm_q: list[list[DramRequest]] = [[] for _ in range(num_cores)]
        self.be_q: list[DramRequest] = []
        self.banks = [_Bank() for _ in range(cfg.num_banks)]
        self.rr = 0
        self.consec_dm = 0
        self.bus_free = 0
        self.log: list[tuple] = []  # (grant_time, class, core, bank, row_hit, queue_wait)
        self.stats = DramStats()

    # --------------------------------------------------------------- queues

    def enqueue(self, req: MemoryRequest, now: int, demand: bool = True):
        """Stage a request.  Returns the staged request, or None when the
        target queue is full (back-pressure: the issuer must retry)."""
        parts = self.geom.decompose(req.paddr)
        row = (parts.page_number // self.cfg.num_banks) % self.cfg.rows_per_bank
        staged = DramRequest(
            req.core, req.write, req.dm, req.paddr, parts.bank_index, row, now, demand
        )
        queue = self.dm_q[req.core] if req.dm else self.be_q
        if len(queue) >= self.cfg.queue_capacity:
            self.stats.rejected += 1
            return None
        queue.append(staged)
        return staged

    def pending(self) -> bool:
        return bool(self.be_q) or any(self.dm_q)

    def queue_depth(self) -> int:
        return len(self.be_q) + sum(len(q) for q in self.dm_q)

    # ------------------------------------------------------------ scheduling

    def schedule_next(self, now: int) -> DramRequest | None:
        """Pick the next request per the two-level policy, or None if idle."""
        have_dm = any(self.dm_q)
        if have_dm and (not self.be_q or self.consec_dm < self.cfg.dm_cap):
            n = self.num_cores
            chosen = -1
            for i in range(n):
                c = self.rr + i
                if c >= n:
                    c -= n
                q = self.dm_q[c]
                if q and self.banks[q[0].bank].busy_until <= now:
                    chosen = c
                    break
            if chosen < 0:
                for i in range(n):
                    c = self.rr + i
                    if c >= n:
                        c -= n
                    if self.dm_q[c]:
                        chosen = c
                        break
            req = self.dm_q[chosen].pop(0)
            self.rr = (chosen + 1) % n
            self.consec_dm = self.consec_dm + 1 if self.be_q else 0
            return req
        if self.be_q:
            best_i = -1
            best_key = None
            for i, req in enumerate(self.be_q):
                bank = self.banks[req.bank]
                if bank.busy_until <= now:
                    key = (0 if bank.open_row == req.row else 1, i)
                    if best_key is None or key < best_key:
                        best_key = key
                        best_i = i
            if best_i < 0:
                best_i = 0  # every ready bank busy: oldest waits for its bank
            req = self.be_q.pop(best_i)
            self.consec_dm = 0
            return req
        return None

    def service(self, req: DramRequest, now: int) -> Grant:
        """Run the granted request through its bank and the data bus."""
        bank = self.banks[req.bank]
        start = max(now, bank.busy_until)
        row_hit = bank.open_row == req.row
        lat = self.cfg.t_row_hit if row_hit else self.cfg.t_row_miss
        bank.open_row = req.row
        bank.busy_until = start + lat
        burst = max(start + lat, self.bus_free)
        completion = burst + self.cfg.t_bus
        self.bus_free = completion
        wait = now - req.arrival
        cls = 1 if req.dm else 0
        st = self.stats
        st.grants[cls] += 1
        if row_hit:
            st.row_hits[cls] += 1
        if req.write:
            st.writes[cls] += 1
        st.wait_sum[cls] += wait
        if wait > st.max_wait:
            st.max_wait = wait
        self.log.append((now, "dm" if req.dm else "be", req.core, req.bank, row_hit, wait))
        return Grant(req, now, start, completion, row_hit, wait)

    def step(self, now: int) -> Grant | None:
        req = self.schedule_next(now)
        if req is None:
            return None
        return self.service(req, now)


def write_schedule_log(log: list[tuple], path: str) -> None:
    with open(path, "w") as fh:
        fh.write("grant_time,class,core,bank,row_hit,queue_wait\n")
        for t, cls, core, bank, row_hit, wait in log:
            fh.write(f"{t},{cls},{core},{bank},{int(row_hit)},{wait}\n")
