"""Task address spaces: DM region declaration and bank-aware page allocation.

Each task (one per core) has a private virtual address space.  Deterministic
regions are declared per task as half-open virtual-page ranges; the page
table carries the resulting dm bit on every mapping, and the allocator
places DM pages in the owning core's private DRAM banks and best-effort
pages in the shared banks.  Whole footprints are allocated up front, lowest
physical page first, so runs are reproducible and page faults are fatal.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import PageFaultError, SimulationError, ValidationError
from .geometry import Geometry


class DmRegionSet:
    """Sorted, non-overlapping half-open ranges of virtual page numbers."""

    def __init__(self, regions: list[tuple[int, int]] | None = None):
        self.regions: list[tuple[int, int]] = sorted(regions or [])
        prev_end = None
        for start, end in self.regions:
            if start >= end:
                raise ValidationError(f"empty or inverted region [{start:#x}, {end:#x})")
            if prev_end is not None and start < prev_end:
                raise ValidationError(f"overlapping region at {start:#x}")
            prev_end = end

    @classmethod
    def from_file(cls, path: str) -> "DmRegionSet":
        regions = []
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 3 or parts[0] != "dm":
                    raise ValidationError(f"{path}:{lineno}: expected 'dm <start> <end>'")
                try:
                    start, end = int(parts[1], 16), int(parts[2], 16)
                except ValueError as exc:
                    raise ValidationError(f"{path}:{lineno}: bad hex page number") from exc
                regions.append((start, end))
        return cls(regions)

    def contains(self, vpage: int) -> bool:
        for start, end in self.regions:
            if start <= vpage < end:
                return True
            if vpage < start:
                break
        return False

    def __bool__(self) -> bool:
        return bool(self.regions)


class PageTable:
    """Per-task mapping vpage -> (ppage, dm).  The dm bit travels with every
    request issued for the page; re-declaring regions re-marks existing
    entries but never migrates already-placed pages."""

    def __init__(self, owner_core: int):
        self.owner_core = owner_core
        self.entries: dict[int, tuple[int, bool]] = {}
        self.dm_regions = DmRegionSet()

    def declare_dm(self, regions: DmRegionSet) -> None:
        self.dm_regions = regions
        for vpage, (ppage, _) in list(self.entries.items()):
            self.entries[vpage] = (ppage, regions.contains(vpage))

    def dm_for(self, vpage: int) -> bool:
        return self.dm_regions.contains(vpage)

    def map_page(self, vpage: int, ppage: int) -> None:
        if vpage in self.entries:
            raise ValidationError(f"vpage {vpage:#x} already mapped")
        self.entries[vpage] = (ppage, self.dm_for(vpage))

    def translate(self, vaddr: int, geom: Geometry) -> tuple[int, bool]:
        vpage = vaddr >> geom.page_bits
        entry = self.entries.get(vpage)
        if entry is None:
            raise PageFaultError(
                f"core {self.owner_core}: fault at {vaddr:#x} (vpage {vpage:#x} unmapped)"
            )
        ppage, dm = entry
        return (ppage << geom.page_bits) | (vaddr & (geom.page_size - 1)), dm


@dataclass(frozen=True)
class BankPolicy:
    """Partition of DRAM banks into per-core private sets and a shared pool."""

    private: dict[int, frozenset[int]]
    shared: frozenset[int]

    def validate(self, num_banks: int, num_cores: int) -> None:
        seen: set[int] = set()
        for core, banks in self.private.items():
            if not 0 <= core < num_cores:
                raise ValidationError(f"bank policy names nonexistent core {core}")
            for b in banks:
                if not 0 <= b < num_banks:
                    raise ValidationError(f"core {core} assigned nonexistent bank {b}")
                if b in seen:
                    raise ValidationError(f"bank {b} appears in two private sets")
                seen.add(b)
        for b in self.shared:
            if not 0 <= b < num_banks:
                raise ValidationError(f"shared pool names nonexistent bank {b}")
            if b in seen:
                raise ValidationError(f"bank {b} is both private and shared")
        if not self.shared:
            raise ValidationError("shared bank pool must not be empty")

    @classmethod
    def all_shared(cls, num_banks: int) -> "BankPolicy":
        return cls(private={}, shared=frozenset(range(num_banks)))


class PageAllocator:
    """Free physical pages, bucketed per bank, always handing out the lowest
    eligible page number.  Keeps an allocation log for audits."""

    def __init__(self, num_phys_pages: int, geom: Geometry):
        self.geom = geom
        self.num_phys_pages = num_phys_pages
        self.free: list[list[int]] = [[] for _ in range(geom.num_banks)]
        for page in range(num_phys_pages):
            self.free[geom.bank_of_page(page)].append(page)
        for bucket in self.free:
            heapq.heapify(bucket)
        self.log: list[tuple[int, int, int, bool]] = []  # (core, vpage, ppage, dm)

    def alloc_page(self, vpage: int, table: PageTable, policy: BankPolicy) -> int:
        """Place one page per the bank policy and install the mapping."""
        dm = table.dm_for(vpage)
        if dm:
            banks = policy.private.get(table.owner_core)
            if not banks:
                raise ValidationError(
                    f"core {table.owner_core} declares DM pages but has no private banks"
                )
        else:
            banks = policy.shared
        best = None
        for b in banks:
            bucket = self.free[b]
            if bucket and (best is None or bucket[0] < self.free[best][0]):
                best = b
        if best is None:
            raise SimulationError(
                f"out of physical pages in banks {sorted(banks)} "
                f"(core {table.owner_core}, vpage {vpage:#x})"
            )
        ppage = heapq.heappop(self.free[best])
        table.map_page(vpage, ppage)
        self.log.append((table.owner_core, vpage, ppage, dm))
        return ppage

    def alloc_footprint(self, vpages: list[int], table: PageTable, policy: BankPolicy) -> None:
        """Pre-allocate a whole footprint in first-touch order."""
        for vpage in vpages:
            if vpage not in table.entries:
                self.alloc_page(vpage, table, policy)
