"""Must analysis for fully associative DM-LRU caches.

Abstract states map symbolic blocks to upper bounds on their DM-LRU age,
together with the current deterministic-region size D.  Ages below D form
the deterministic region, ages in [D, A) the best-effort region; an absent
block stands for age infinity.  Two transformers update a state:

* ``update_d`` for a deterministic access: the block moves to age 0 and D
  grows by one when the block was not already deterministic-classified.
  The growth guard is selectable: ``full`` lets D reach A (a partition can
  fill up with deterministic lines, which is what makes a later best-effort
  access bypass), ``capped`` stops growth at A-1 (compatibility behavior;
  known to be optimistic, see the soundness tests).
* ``update_b`` for a best-effort access: the block moves to age D (or out
  of the cache when D = A).  In the ``literal`` variant every younger block
  ages; in the ``strict`` variant deterministic-classified blocks (age < D)
  are never aged by best-effort accesses.

Join intersects the block sets, takes the maximum age per block and the
maximum D.  The fixpoint is a standard forward worklist.  Persistence uses
one virtual loop unrolling: the CFG is duplicated into a cold and a steady
copy with back edges redirected cold-to-steady, and a site is Persistent
when its steady copy classifies AlwaysHit.

A brute-force oracle enumerates all paths of small CFGs on a concrete
DM-LRU cache and reports, per access site, whether every visit (and every
visit after the first) hit.  The soundness test suite compares the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SimulationError, ValidationError

UB_LITERAL = "literal"
UB_STRICT = "strict"
GUARD_FULL = "full"
GUARD_CAPPED = "capped"

ALWAYS_HIT = "AlwaysHit"
PERSISTENT = "Persistent"
UNCLASSIFIED = "Unclassified"

CLEAR = "__clear__"


class AbstractState:
    """Ages of tracked blocks (absent = infinity), region size d, assoc a."""

    __slots__ = ("ages", "d", "assoc")

    def __init__(self, ages: dict[str, int], d: int, assoc: int):
        self.ages = ages
        self.d = d
        self.assoc = assoc

    @classmethod
    def top(cls, assoc: int) -> "AbstractState":
        """All blocks unknown (age infinity), no deterministic region."""
        return cls({}, 0, assoc)

    def age(self, block: str) -> int | None:
        """Finite age bound or None for infinity."""
        return self.ages.get(block)

    def well_formed(self) -> bool:
        return 0 <= self.d <= self.assoc and all(
            0 <= v < self.assoc for v in self.ages.values()
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AbstractState)
            and self.d == other.d
            and self.assoc == other.assoc
            and self.ages == other.ages
        )

    def __hash__(self):
        return hash((self.d, self.assoc, frozenset(self.ages.items())))

    def canonical(self) -> str:
        """Render as det and best-effort region lists, e.g.
        ``[{a,b}],[{c},{d},{e,f}]`` for D=1, A=4."""
        buckets: list[list[str]] = [[] for _ in range(self.assoc)]
        for block, a in sorted(self.ages.items()):
            buckets[a].append(block)
        det = ",".join("{" + ",".join(b) + "}" for b in buckets[: self.d])
        be = ",".join("{" + ",".join(b) + "}" for b in buckets[self.d :])
        return f"[{det}],[{be}]"

    def __repr__(self):
        return f"AbstractState({self.canonical()}, D={self.d}, A={self.assoc})"


def update_d(q: AbstractState, a: str, d_guard: str = GUARD_FULL) -> AbstractState:
    """Transformer for a deterministic access to block ``a``."""
    if d_guard not in (GUARD_FULL, GUARD_CAPPED):
        raise ValidationError(f"unknown d_guard {d_guard!r}")
    A = q.assoc
    qa = q.ages.get(a)
    qa_cmp = A if qa is None else qa  # infinity compares above any finite age
    limit = A if d_guard == GUARD_FULL else A - 1
    if q.d < limit and qa_cmp >= q.d:
        d_new = q.d + 1
    else:
        d_new = q.d
    ages: dict[str, int] = {a: 0}
    for b, qb in q.ages.items():
        if b == a:
            continue
        if qb < q.d:  # deterministic region
            if qa is not None and qb >= qa:
                ages[b] = qb
            elif qb < d_new - 1:
                ages[b] = qb + 1
            # else: falls to infinity
        else:  # best-effort region
            if qa is not None and qa < q.d:
                ages[b] = qb  # deterministic re-access leaves the region alone
            elif qa is not None and qb >= qa:
                ages[b] = qb
            elif qb < A - 1:
                ages[b] = qb + 1
            # else: falls to infinity
    return AbstractState(ages, d_new, A)


def update_b(q: AbstractState, a: str, variant: str = UB_LITERAL) -> AbstractState:
    """Transformer for a best-effort access to block ``a``."""
    if variant not in (UB_LITERAL, UB_STRICT):
        raise ValidationError(f"unknown update_b variant {variant!r}")
    A = q.assoc
    qa = q.ages.get(a)
    ages: dict[str, int] = {}
    if q.d < A:
        ages[a] = q.d
    # else: every way may be deterministic; the access may bypass, no claim
    for b, qb in q.ages.items():
        if b == a:
            continue
        if variant == UB_STRICT and qb < q.d:
            ages[b] = qb  # deterministic lines cannot be displaced by BE fills
            continue
        if qa is not None and qb >= qa:
            ages[b] = qb
        elif qb < A - 1:
            ages[b] = qb + 1
        # else: falls to infinity
    return AbstractState(ages, q.d, A)


def update_clear(q: AbstractState) -> AbstractState:
    """Cleanup pseudo-access: lines persist with their ages, lose DM status."""
    return AbstractState(dict(q.ages), 0, q.assoc)


def join(q1: AbstractState, q2: AbstractState) -> AbstractState:
    """Intersection of block sets, per-block maximum age, maximum D."""
    if q1.assoc != q2.assoc:
        raise ValidationError("cannot join states of different associativity")
    small, big = (q1.ages, q2.ages) if len(q1.ages) <= len(q2.ages) else (q2.ages, q1.ages)
    ages = {}
    for b, v in small.items():
        w = big.get(b)
        if w is not None:
            ages[b] = v if v > w else w
    return AbstractState(ages, max(q1.d, q2.d), q1.assoc)


# --------------------------------------------------------------------- CFGs


@dataclass(frozen=True)
class Access:
    block: str
    dm: bool


@dataclass
class CfgProgram:
    """Control-flow graph whose nodes carry straight-line access sequences.

    ``accesses[n]`` holds Access labels and the CLEAR sentinel; ``edges``
    are successor lists; ``backedges`` mark loop-closing edges used by the
    persistence peeling (auto-detected when none are marked).
    """

    entry: str
    accesses: dict[str, list]
    edges: dict[str, list[str]]
    backedges: set[tuple[str, str]] = field(default_factory=set)

    def validate(self) -> None:
        if self.entry not in self.accesses:
            raise ValidationError(f"entry node {self.entry!r} undefined")
        for n, succs in self.edges.items():
            if n not in self.accesses:
                raise ValidationError(f"edge from undefined node {n!r}")
            for m in succs:
                if m not in self.accesses:
                    raise ValidationError(f"edge {n!r} -> undefined node {m!r}")
        for u, v in self.backedges:
            if v not in (self.edges.get(u) or []):
                raise ValidationError(f"backedge {u!r} -> {v!r} is not an edge")
        unreachable = set(self.accesses) - self.reachable()
        if unreachable:
            raise ValidationError(f"nodes unreachable from entry: {sorted(unreachable)}")

    def reachable(self) -> set[str]:
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            n = stack.pop()
            for m in self.edges.get(n, []):
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return seen

    def detect_backedges(self) -> set[tuple[str, str]]:
        """DFS retreating edges (to a node still on the stack)."""
        marks: set[tuple[str, str]] = set()
        color: dict[str, int] = {}  # 0 visiting, 1 done
        stack: list[tuple[str, int]] = [(self.entry, 0)]
        while stack:
            n, i = stack.pop()
            if i == 0:
                color[n] = 0
            succs = self.edges.get(n, [])
            if i < len(succs):
                stack.append((n, i + 1))
                m = succs[i]
                if m not in color:
                    stack.append((m, 0))
                elif color[m] == 0:
                    marks.add((n, m))
            else:
                color[n] = 1
        return marks

    def loop_edges(self) -> set[tuple[str, str]]:
        return self.backedges if self.backedges else self.detect_backedges()

    def sites(self) -> list[tuple[str, int, Access]]:
        out = []
        for n, accs in self.accesses.items():
            for i, acc in enumerate(accs):
                if acc is not CLEAR:
                    out.append((n, i, acc))
        return out

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> tuple["CfgProgram", int]:
        """Parse the CFG file format; returns (program, assoc)."""
        assoc = None
        entry = None
        accesses: dict[str, list] = {}
        edges: dict[str, list[str]] = {}
        backedges: set[tuple[str, str]] = set()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            where = f"{source}:{lineno}"
            parts = line.split()
            kw = parts[0]
            if kw == "assoc":
                if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                    raise ValidationError(f"{where}: expected 'assoc <positive int>'")
                assoc = int(parts[1])
            elif kw == "entry":
                if len(parts) != 2:
                    raise ValidationError(f"{where}: expected 'entry <node>'")
                entry = parts[1]
            elif kw == "node":
                head, colon, body = line[4:].partition(":")
                name = head.strip()
                if not colon or not name:
                    raise ValidationError(f"{where}: expected 'node <id>: <accesses>'")
                if name in accesses:
                    raise ValidationError(f"{where}: node {name!r} defined twice")
                accs: list = []
                for tok in body.split():
                    if tok == "clear":
                        accs.append(CLEAR)
                    elif tok.endswith("!"):
                        if len(tok) == 1:
                            raise ValidationError(f"{where}: bare '!' access")
                        accs.append(Access(tok[:-1], True))
                    else:
                        accs.append(Access(tok, False))
                accesses[name] = accs
            elif kw == "edge" or kw == "backedge":
                if len(parts) != 3:
                    raise ValidationError(f"{where}: expected '{kw} <from> <to>'")
                edges.setdefault(parts[1], [])
                if parts[2] not in edges[parts[1]]:
                    edges[parts[1]].append(parts[2])
                if kw == "backedge":
                    backedges.add((parts[1], parts[2]))
            else:
                raise ValidationError(f"{where}: unknown directive {kw!r}")
        if assoc is None:
            raise ValidationError(f"{source}: missing 'assoc'")
        if entry is None:
            raise ValidationError(f"{source}: missing 'entry'")
        prog = cls(entry=entry, accesses=accesses, edges=edges, backedges=backedges)
        prog.validate()
        return prog, assoc

    @classmethod
    def from_file(cls, path: str) -> tuple["CfgProgram", int]:
        with open(path) as fh:
            return cls.from_text(fh.read(), source=path)


# ----------------------------------------------------------------- analysis


def _transfer(state: AbstractState, accs: list, variant: str, d_guard: str,
              site_sink: dict | None = None, node=None) -> AbstractState:
    for i, acc in enumerate(accs):
        if site_sink is not None:
            site_sink[(node, i)] = state
        if acc is CLEAR:
            state = update_clear(state)
        elif acc.dm:
            state = update_d(state, acc.block, d_guard)
        else:
            state = update_b(state, acc.block, variant)
    return state


def _fixpoint(accesses, edges, entry, assoc, variant, d_guard, cap):
    in_states: dict = {entry: AbstractState.top(assoc)}
    out_states: dict = {}
    worklist = [entry]
    queued = {entry}
    steps = 0
    while worklist:
        steps += 1
        if steps > cap:
            raise SimulationError(f"fixpoint did not stabilize within {cap} steps")
        n = worklist.pop(0)
        queued.discard(n)
        out = _transfer(in_states[n], accesses[n], variant, d_guard)
        if out_states.get(n) == out:
            continue
        out_states[n] = out
        for m in edges.get(n, []):
            new_in = out if m not in in_states else join(in_states[m], out)
            if in_states.get(m) != new_in:
                in_states[m] = new_in
                if m not in queued:
                    worklist.append(m)
                    queued.add(m)
    return in_states


@dataclass
class SiteResult:
    node: str
    index: int
    block: str
    dm: bool
    in_state: AbstractState
    classification: str


@dataclass
class AnalysisResult:
    assoc: int
    variant: str
    d_guard: str
    sites: dict[tuple[str, int], SiteResult]

    def classification(self, node: str, index: int) -> str:
        return self.sites[(node, index)].classification

    def rows(self) -> list[tuple]:
        return [
            (s.node, s.index, s.block, int(s.dm), s.classification)
            for s in self.sites.values()
        ]


def must_analysis(
    prog: CfgProgram,
    assoc: int,
    variant: str = UB_LITERAL,
    d_guard: str = GUARD_FULL,
    persistence: bool = True,
) -> AnalysisResult:
    """Forward must analysis with AlwaysHit and (optionally) Persistent
    classification per access site."""
    prog.validate()
    if assoc < 1:
        raise ValidationError(f"associativity must be positive, got {assoc}")
    nblocks = len({a.block for accs in prog.accesses.values()
                   for a in accs if a is not CLEAR})
    cap = (len(prog.accesses) + 1) * (assoc + 2) * (nblocks + 2) * 8 + 64
    in_states = _fixpoint(prog.accesses, prog.edges, prog.entry, assoc,
                          variant, d_guard, cap)

    site_states: dict = {}
    for n, accs in prog.accesses.items():
        if n in in_states:
            _transfer(in_states[n], accs, variant, d_guard, site_states, n)

    steady_hit: set[tuple[str, int]] = set()
    if persistence:
        loops = prog.loop_edges()
        cold = {("c", n) for n in prog.accesses}
        accesses2 = {}
        edges2: dict = {}
        for copy, n in list(cold) + [("s", n) for n in prog.accesses]:
            accesses2[(copy, n)] = prog.accesses[n]
        for n, succs in prog.edges.items():
            for m in succs:
                cold_dst = ("s", m) if (n, m) in loops else ("c", m)
                edges2.setdefault(("c", n), []).append(cold_dst)
                edges2.setdefault(("s", n), []).append(("s", m))
        in2 = _fixpoint(accesses2, edges2, ("c", prog.entry), assoc,
                        variant, d_guard, cap * 4)
        site2: dict = {}
        for key, accs in accesses2.items():
            if key in in2:
                _transfer(in2[key], accs, variant, d_guard, site2, key)
        for (key, i), st in site2.items():
            copy, n = key
            if copy != "s":
                continue
            acc = prog.accesses[n][i]
            if acc is not CLEAR and st.age(acc.block) is not None:
                steady_hit.add((n, i))

    sites: dict[tuple[str, int], SiteResult] = {}
    for n, accs in prog.accesses.items():
        for i, acc in enumerate(accs):
            if acc is CLEAR:
                continue
            st = site_states.get((n, i), AbstractState.top(assoc))
            if st.age(acc.block) is not None:
                cls = ALWAYS_HIT
            elif (n, i) in steady_hit:
                cls = PERSISTENT
            else:
                cls = UNCLASSIFIED
            sites[(n, i)] = SiteResult(n, i, acc.block, acc.dm, st, cls)
    return AnalysisResult(assoc, variant, d_guard, sites)


def write_classification(result: AnalysisResult, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("node,index,block,dm,class\n")
        for row in result.rows():
            fh.write(",".join(str(x) for x in row) + "\n")


# ------------------------------------------------------------------- oracle


def concrete_access(cache: list, block: str, dm: bool, assoc: int):
    """One access on a concrete DM-LRU cache (MRU-first list of (block, dm)).
    Returns (new_cache, hit)."""
    for i, (b, bdm) in enumerate(cache):
        if b == block:
            moved = [(block, bdm or dm)]
            return moved + cache[:i] + cache[i + 1 :], True
    if len(cache) < assoc:
        return [(block, dm)] + cache, False
    victim = -1
    for i in range(len(cache) - 1, -1, -1):
        if not cache[i][1]:
            victim = i
            break
    if victim < 0:
        if not dm:
            return cache, False  # every line deterministic: bypass
        victim = len(cache) - 1  # deterministic access evicts overall LRU
    return [(block, dm)] + cache[:victim] + cache[victim + 1 :], False


def concrete_age(cache: list, block: str) -> int | None:
    """DM-LRU age: rank within the deterministic lines for a deterministic
    line, det-count + rank within best-effort lines otherwise."""
    dcount = sum(1 for _, d in cache if d)
    det_rank = 0
    be_rank = 0
    for b, d in cache:
        if b == block:
            return det_rank if d else dcount + be_rank
        if d:
            det_rank += 1
        else:
            be_rank += 1
    return None


@dataclass
class SiteOracle:
    visits: int = 0
    misses: int = 0
    nonfirst_misses: int = 0
    max_ages: dict[str, int] = field(default_factory=dict)
    cached_counts: dict[str, int] = field(default_factory=dict)


@dataclass
class OracleResult:
    sites: dict[tuple[str, int], SiteOracle]
    paths: int

    def always_hit(self, node: str, index: int) -> bool:
        s = self.sites[(node, index)]
        return s.visits > 0 and s.misses == 0

    def persistent(self, node: str, index: int) -> bool:
        return self.sites[(node, index)].nonfirst_misses == 0


def concrete_oracle(
    prog: CfgProgram,
    assoc: int,
    max_depth: int,
    max_blocks: int = 8,
    max_paths: int = 200_000,
) -> OracleResult:
    """Exhaustive path enumeration from an empty cache, depth counted in
    node visits.  Refuses oversized instances."""
    prog.validate()
    blocks = {a.block for accs in prog.accesses.values() for a in accs if a is not CLEAR}
    if len(blocks) > max_blocks:
        raise ValidationError(
            f"oracle refuses: {len(blocks)} blocks exceeds bound {max_blocks}"
        )
    sites = {
        (n, i): SiteOracle()
        for n, accs in prog.accesses.items()
        for i, a in enumerate(accs)
        if a is not CLEAR
    }
    paths = 0
    # stack holds (node, depth, cache, per-site visit counts along this path)
    stack: list[tuple[str, int, list, dict]] = [(prog.entry, 1, [], {})]
    while stack:
        node, depth, cache, visits = stack.pop()
        for i, acc in enumerate(prog.accesses[node]):
            if acc is CLEAR:
                cache = [(b, False) for b, _ in cache]
                continue
            key = (node, i)
            rec = sites[key]
            for b, _ in cache:
                age = concrete_age(cache, b)
                if age is not None and age > rec.max_ages.get(b, -1):
                    rec.max_ages[b] = age
                rec.cached_counts[b] = rec.cached_counts.get(b, 0) + 1
            v = visits.get(key, 0) + 1
            visits = {**visits, key: v}
            rec.visits += 1
            cache, hit = concrete_access(cache, acc.block, acc.dm, assoc)
            if not hit:
                rec.misses += 1
                if v >= 2:
                    rec.nonfirst_misses += 1
        succs = prog.edges.get(node, [])
        if not succs or depth >= max_depth:
            paths += 1
            if paths > max_paths:
                raise ValidationError(
                    f"oracle refuses: path budget {max_paths} exceeded at depth {max_depth}"
                )
            continue
        for m in reversed(succs):
            stack.append((m, depth + 1, cache, visits))
    return OracleResult(sites, paths)
