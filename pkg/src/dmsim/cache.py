"""Shared set-associative cache with way partitioning and DM-aware replacement.

Replacement policy, per miss:

* deterministic (dm) request: victim is the LRU way among the requester's
  partition ways that do not hold a deterministic line; if the whole
  partition is deterministic, the LRU way of the partition.
* best-effort request: victim is the LRU way among all non-deterministic
  ways of the set; if every way holds a deterministic line, the access
  bypasses the cache entirely (no allocation, no eviction).

Invalid ways count as best-effort victims with worst recency, so cold fills
never evict valid lines.  A hit by a dm request inside the requester's own
partition re-marks the line deterministic; hits outside the partition leave
the bit alone.  ``dm_cleanup`` clears a partition's dm bits in place and
reports how many lines were cleared; the data stays cached, so a later
access hits and simply re-marks.

Recency is kept as a per-line timestamp from a monotone counter; the LRU
ordinal of a line is its rank by timestamp within the set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

CLS_BE = 0
CLS_DM = 1

HIT = 0
MISS = 1
BYPASS = 2


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class CacheConfig:
    size: int
    assoc: int
    line_size: int
    hit_latency: int
    part_masks: dict[int, int]
    allow_overlap: bool = False

    def __post_init__(self) -> None:
        if self.size <= 0 or self.assoc <= 0 or self.line_size <= 0:
            raise ValidationError("cache size, associativity and line size must be positive")
        if self.size % (self.assoc * self.line_size) != 0:
            raise ValidationError(
                f"cache size {self.size} not divisible by assoc*line_size "
                f"({self.assoc}*{self.line_size})"
            )
        num_sets = self.size // (self.assoc * self.line_size)
        if num_sets & (num_sets - 1):
            raise ValidationError(f"derived set count {num_sets} is not a power of two")
        if self.line_size & (self.line_size - 1):
            raise ValidationError(f"line size {self.line_size} is not a power of two")
        full = (1 << self.assoc) - 1
        seen = 0
        for core, mask in self.part_masks.items():
            if mask == 0:
                raise ValidationError(f"core {core}: empty way mask")
            if mask & ~full:
                raise ValidationError(
                    f"core {core}: mask {mask:#x} names ways beyond associativity {self.assoc}"
                )
            if (seen & mask) and not self.allow_overlap:
                raise ValidationError(
                    f"core {core}: mask {mask:#x} overlaps another partition "
                    "(set allow_overlap to permit)"
                )
            seen |= mask

    @property
    def num_sets(self) -> int:
        return self.size // (self.assoc * self.line_size)

    @property
    def full_mask(self) -> int:
        return (1 << self.assoc) - 1


class CacheStats:
    """Per-core, per-class counters.  Class index 0 = best-effort, 1 = dm."""

    def __init__(self, num_cores: int):
        def z2():
            return [[0, 0] for _ in range(num_cores)]

        self.num_cores = num_cores
        self.accesses = z2()
        self.hits = z2()
        self.misses = z2()
        self.bypasses = z2()
        self.evictions_caused = z2()  # indexed by the evicted line's owner
        self.eviction_matrix = [[0] * num_cores for _ in range(num_cores)]  # [owner][requester]
        self.dm_lines_cleared = [0] * num_cores
        self.cleanup_calls = [0] * num_cores
        self.occupancy_samples: list[tuple] = []

    def hit_rate(self, core: int, cls: int | None = None) -> float:
        if cls is None:
            acc = sum(self.accesses[core])
            hits = sum(self.hits[core])
        else:
            acc = self.accesses[core][cls]
            hits = self.hits[core][cls]
        return hits / acc if acc else 0.0


class DmCache:
    def __init__(self, cfg: CacheConfig, num_cores: int, audit: bool = False):
        for core in cfg.part_masks:
            if not 0 <= core < num_cores:
                raise ValidationError(f"part_mask names nonexistent core {core}")
        missing = [c for c in range(num_cores) if c not in cfg.part_masks]
        if missing:
            raise ValidationError(f"cores {missing} have no way mask")
        self.cfg = cfg
        self.num_cores = num_cores
        self._assoc = cfg.assoc
        self._full_mask = cfg.full_mask
        self._line_bits = cfg.line_size.bit_length() - 1
        self._set_bits = cfg.num_sets.bit_length() - 1
        self._set_mask = cfg.num_sets - 1
        self._masks = [cfg.part_masks[c] for c in range(num_cores)]
        # way -> owning core, None when unowned or claimed twice (overlap mode)
        way_owner: list[int | None] = [None] * cfg.assoc
        for core, mask in enumerate(self._masks):
            for w in range(cfg.assoc):
                if (mask >> w) & 1:
                    way_owner[w] = core if way_owner[w] is None else None
        self._way_owner = way_owner
        ns = cfg.num_sets
        self._tags: list[list[int | None]] = [[None] * cfg.assoc for _ in range(ns)]
        self._dm = [[False] * cfg.assoc for _ in range(ns)]
        self._dirty = [[False] * cfg.assoc for _ in range(ns)]
        self._owner = [[0] * cfg.assoc for _ in range(ns)]
        self._stamp = [[0] * cfg.assoc for _ in range(ns)]
        self._map: list[dict[int, int]] = [{} for _ in range(ns)]
        self._tick = 0
        self._audit = audit
        self.audit_log: list[str] = []
        self._dm_in_part = [0] * num_cores
        self._owned_valid = [0] * num_cores
        self.stats = CacheStats(num_cores)

    # ------------------------------------------------------------------ hits

    def access(self, core: int, paddr: int, write: bool, dm: bool):
        """Run one access.  Returns (status, evicted) where status is HIT,
        MISS or BYPASS and evicted is None or (line_paddr, dirty, dm, owner)
        describing the displaced line."""
        line = paddr >> self._line_bits
        s = line & self._set_mask
        tag = line >> self._set_bits
        lookup = self._map[s]
        tick = self._tick + 1
        self._tick = tick
        cls = CLS_DM if dm else CLS_BE
        stats = self.stats
        stats.accesses[core][cls] += 1
        w = lookup.get(tag)
        if w is not None:
            self._stamp[s][w] = tick
            if write:
                self._dirty[s][w] = True
            stats.hits[core][cls] += 1
            if dm and (self._masks[core] >> w) & 1 and not self._dm[s][w]:
                self._dm[s][w] = True
                old = self._owner[s][w]
                if old != core:
                    self._owned_valid[old] -= 1
                    self._owned_valid[core] += 1
                    self._owner[s][w] = core
                po = self._way_owner[w]
                if po is not None:
                    self._dm_in_part[po] += 1
            if self._audit:
                self._audit_access(s, core, None)
            return (HIT, None)

        victim = self.select_victim(s, core, dm)
        if victim < 0:
            stats.bypasses[core][cls] += 1
            if self._audit:
                self._audit_access(s, core, None)
            return (BYPASS, None)

        tags_s = self._tags[s]
        evicted = None
        old_tag = tags_s[victim]
        if old_tag is not None:
            e_dm = self._dm[s][victim]
            e_owner = self._owner[s][victim]
            evicted = (
                ((old_tag << self._set_bits) | s) << self._line_bits,
                self._dirty[s][victim],
                e_dm,
                e_owner,
            )
            del lookup[old_tag]
            stats.evictions_caused[e_owner][CLS_DM if e_dm else CLS_BE] += 1
            stats.eviction_matrix[e_owner][core] += 1
            self._owned_valid[e_owner] -= 1
            if e_dm:
                po = self._way_owner[victim]
                if po is not None:
                    self._dm_in_part[po] -= 1
                if self._audit and e_owner != core:
                    self.audit_log.append(
                        f"tick {tick}: core {core} evicted dm line of core {e_owner} "
                        f"(set {s} way {victim})"
                    )
        tags_s[victim] = tag
        self._dm[s][victim] = dm
        self._dirty[s][victim] = write
        self._owner[s][victim] = core
        self._stamp[s][victim] = tick
        lookup[tag] = victim
        self._owned_valid[core] += 1
        if dm:
            po = self._way_owner[victim]
            if po is not None:
                self._dm_in_part[po] += 1
        stats.misses[core][cls] += 1
        if self._audit:
            self._audit_access(s, core, victim)
        return (MISS, evicted)

    # ---------------------------------------------------------- replacement

    def det_mask(self, set_index: int) -> int:
        """Ways of the set currently holding deterministic lines (derived)."""
        tags_s = self._tags[set_index]
        dms = self._dm[set_index]
        mask = 0
        for w in range(self._assoc):
            if tags_s[w] is not None and dms[w]:
                mask |= 1 << w
        return mask

    def select_victim(self, set_index: int, core: int, dm: bool) -> int:
        """Pick the victim way for a miss; -1 means bypass."""
        det = self.det_mask(set_index)
        if dm:
            cand = self._masks[core] & ~det
            if not cand:
                cand = self._masks[core]
        else:
            cand = self._full_mask & ~det
            if not cand:
                return -1
        tags_s = self._tags[set_index]
        stamps = self._stamp[set_index]
        victim = -1
        best = None
        m = cand
        while m:
            w = (m & -m).bit_length() - 1
            m &= m - 1
            if tags_s[w] is None:
                return w  # lowest-index invalid way
            st = stamps[w]
            if best is None or st < best:
                best = st
                victim = w
        return victim

    # -------------------------------------------------------------- cleanup

    def dm_cleanup(self, core: int) -> int:
        """Clear the dm bit of every line in the core's partition ways.
        Tags, data, dirty bits and recency are untouched."""
        mask = self._masks[core]
        ways = [w for w in range(self._assoc) if (mask >> w) & 1]
        cleared = 0
        for s in range(self.cfg.num_sets):
            tags_s = self._tags[s]
            dms = self._dm[s]
            for w in ways:
                if tags_s[w] is not None and dms[w]:
                    dms[w] = False
                    cleared += 1
        po_counts = cleared
        # with disjoint masks every cleared line sat in this partition
        if all(self._way_owner[w] == core for w in ways):
            self._dm_in_part[core] = 0
        else:
            self._recount_dm()
        self.stats.dm_lines_cleared[core] += po_counts
        self.stats.cleanup_calls[core] += 1
        return cleared

    def _recount_dm(self) -> None:
        counts = [0] * self.num_cores
        for s in range(self.cfg.num_sets):
            tags_s = self._tags[s]
            dms = self._dm[s]
            for w in range(self._assoc):
                if tags_s[w] is not None and dms[w]:
                    po = self._way_owner[w]
                    if po is not None:
                        counts[po] += 1
        self._dm_in_part = counts

    # ------------------------------------------------------------ inspection

    def partition_capacity(self, core: int) -> int:
        return _popcount(self._masks[core]) * self.cfg.num_sets

    def dm_occupancy(self, core: int) -> tuple[int, int]:
        """(dm lines resident in the core's partition, partition capacity)."""
        return self._dm_in_part[core], self.partition_capacity(core)

    def owned_lines(self, core: int) -> int:
        """Valid lines most recently filled or re-marked by the core."""
        return self._owned_valid[core]

    def sample_occupancy(self, now: int) -> None:
        self.stats.occupancy_samples.append(
            (
                now,
                tuple(self._dm_in_part),
                tuple(self.partition_capacity(c) for c in range(self.num_cores)),
                tuple(self._owned_valid),
            )
        )

    def line_state(self, set_index: int, way: int):
        tag = self._tags[set_index][way]
        if tag is None:
            return None
        return {
            "tag": tag,
            "dirty": self._dirty[set_index][way],
            "dm": self._dm[set_index][way],
            "owner": self._owner[set_index][way],
            "stamp": self._stamp[set_index][way],
        }

    def lru_order(self, set_index: int) -> list[int]:
        """Valid ways of the set ordered MRU first."""
        tags_s = self._tags[set_index]
        stamps = self._stamp[set_index]
        ways = [w for w in range(self._assoc) if tags_s[w] is not None]
        return sorted(ways, key=lambda w: -stamps[w])

    # ----------------------------------------------------------------- audit

    def _audit_access(self, s: int, core: int, filled_way: int | None) -> None:
        tags_s = self._tags[s]
        dms = self._dm[s]
        stamps = set()
        for w in range(self._assoc):
            if tags_s[w] is None:
                continue
            st = self._stamp[s][w]
            if st in stamps:
                self.audit_log.append(f"set {s}: duplicate recency stamp on way {w}")
            stamps.add(st)
            if dms[w]:
                po = self._way_owner[w]
                if po is None:
                    self.audit_log.append(f"set {s}: dm line in unowned way {w}")
                elif self._owner[s][w] != po:
                    self.audit_log.append(
                        f"set {s}: dm line of core {self._owner[s][w]} "
                        f"in partition of core {po} (way {w})"
                    )
        if self._tick % 4096 == 0:
            self.audit_log.extend(self.verify_full())

    def verify_full(self) -> list[str]:
        """Recount bookkeeping from scratch; returns inconsistencies."""
        problems = []
        dm_counts = [0] * self.num_cores
        owned = [0] * self.num_cores
        for s in range(self.cfg.num_sets):
            tags_s = self._tags[s]
            dms = self._dm[s]
            lookup = self._map[s]
            valid = 0
            for w in range(self._assoc):
                if tags_s[w] is None:
                    continue
                valid += 1
                if lookup.get(tags_s[w]) != w:
                    problems.append(f"set {s} way {w}: tag map out of sync")
                owned[self._owner[s][w]] += 1
                if dms[w]:
                    po = self._way_owner[w]
                    if po is None:
                        problems.append(f"set {s} way {w}: dm line outside any partition")
                    else:
                        dm_counts[po] += 1
                        if self._owner[s][w] != po:
                            problems.append(
                                f"set {s} way {w}: dm line owned by core "
                                f"{self._owner[s][w]} in partition of core {po}"
                            )
            if len(lookup) != valid:
                problems.append(f"set {s}: tag map size {len(lookup)} != valid {valid}")
        if dm_counts != self._dm_in_part:
            problems.append(f"dm occupancy counters {self._dm_in_part} != recount {dm_counts}")
        if owned != self._owned_valid:
            problems.append(f"owned-line counters {self._owned_valid} != recount {owned}")
        return problems


class PrivateCache:
    """Private L1: plain LRU, write-back without victim traffic, no dm bits.
    Serves as a miss filter in front of the shared cache."""

    def __init__(self, size: int, assoc: int, line_size: int, hit_latency: int):
        if size % (assoc * line_size) != 0:
            raise ValidationError("l1 size not divisible by assoc*line_size")
        num_sets = size // (assoc * line_size)
        if num_sets & (num_sets - 1):
            raise ValidationError(f"l1 set count {num_sets} is not a power of two")
        self.assoc = assoc
        self.hit_latency = hit_latency
        self._line_bits = line_size.bit_length() - 1
        self._set_bits = num_sets.bit_length() - 1
        self._set_mask = num_sets - 1
        self._tags: list[list[int | None]] = [[None] * assoc for _ in range(num_sets)]
        self._stamp = [[0] * assoc for _ in range(num_sets)]
        self._map: list[dict[int, int]] = [{} for _ in range(num_sets)]
        self._tick = 0
        self.hits = 0
        self.misses = 0

    def access(self, paddr: int, write: bool) -> bool:
        line = paddr >> self._line_bits
        s = line & self._set_mask
        tag = line >> self._set_bits
        lookup = self._map[s]
        tick = self._tick + 1
        self._tick = tick
        w = lookup.get(tag)
        if w is not None:
            self._stamp[s][w] = tick
            self.hits += 1
            return True
        tags_s = self._tags[s]
        stamps = self._stamp[s]
        victim = 0
        best = None
        for wy in range(self.assoc):
            if tags_s[wy] is None:
                victim = wy
                break
            if best is None or stamps[wy] < best:
                best = stamps[wy]
                victim = wy
        old = tags_s[victim]
        if old is not None:
            del lookup[old]
        tags_s[victim] = tag
        stamps[victim] = tick
        lookup[tag] = victim
        self.misses += 1
        return False
