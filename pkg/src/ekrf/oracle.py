"""Brute-force ground truth by exhaustive enumeration on small instances.

Everything here trades scale for certainty: candidate pools are materialized
explicitly (bit-vector members, lexicographic order, n <= 128), counting
predicates scan every r-subset, and the appendix functionals are summed over
every subgraph / grid subset.  The caps are a feature; other modules are
tested against these enumerations.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, fsum

import numpy as np

from .counting import CapError, ConstraintInstance

DEFAULT_POOL_CAP = 2_000_000
POOL_UNIVERSE_LIMIT = 128  # two 64-bit words per member
GRAPH_ENUM_CAP = 7  # subgraph enumeration is 2^C(t,2)
GRID_ENUM_CAP = 20  # grid enumeration is 2^(tbar*delta)

_BASE_COMBOS: dict[tuple[int, int], np.ndarray] = {}


def _base_combos(n: int, r: int) -> np.ndarray:
    key = (n, r)
    cached = _BASE_COMBOS.get(key)
    if cached is None:
        cached = np.array(
            list(combinations(range(1, n + 1), r)), dtype=np.int16
        ).reshape(comb(n, r), r)
        _BASE_COMBOS[key] = cached
    return cached


def _masks_of(combos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-member (lo, hi) bit vectors: bit v-1 of lo for v <= 64, of hi above."""
    lo = np.zeros(len(combos), dtype=np.uint64)
    hi = np.zeros(len(combos), dtype=np.uint64)
    one = np.uint64(1)
    for col in range(combos.shape[1]):
        v = combos[:, col].astype(np.int64)
        low = v <= 64
        lo |= np.where(low, one << (v - 1).astype(np.uint64), np.uint64(0))
        hi |= np.where(~low, one << (v - 65).astype(np.uint64), np.uint64(0))
    return lo, hi


def _edge_mask(vertices) -> tuple[np.uint64, np.uint64]:
    lo = 0
    hi = 0
    for v in vertices:
        if v <= 64:
            lo |= 1 << (v - 1)
        else:
            hi |= 1 << (v - 65)
    return np.uint64(lo), np.uint64(hi)


@dataclass
class CandidatePool:
    """All r-subsets satisfying a ConstraintInstance, in lexicographic order.

    Members are stored both as vertex rows (combos) and as fixed-capacity bit
    vectors (lo/hi 64-bit words) so intersection tests are one or two word
    operations.  Pools are immutable after construction.
    """

    instance: ConstraintInstance
    combos: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __len__(self) -> int:
        return len(self.combos)

    def member(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.combos[i])

    def members(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in row) for row in self.combos]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CandidatePool)
            and self.combos.shape == other.combos.shape
            and bool(np.array_equal(self.combos, other.combos))
        )


def enumerate_pool(
    inst: ConstraintInstance, pool_cap: int = DEFAULT_POOL_CAP
) -> CandidatePool:
    """Materialize every satisfying r-subset.  C(n, r) must be within
    pool_cap and the universe within the 128-vertex bit-vector capacity."""
    inst.validate()
    n, r = inst.universe_size, inst.subset_size
    if n > POOL_UNIVERSE_LIMIT:
        raise CapError(f"pool mode supports n <= {POOL_UNIVERSE_LIMIT}, got {n}")
    if comb(n, r) > pool_cap:
        raise CapError(f"C({n},{r}) = {comb(n, r)} exceeds pool cap {pool_cap}")
    combos = _base_combos(n, r)
    lo, hi = _masks_of(combos)
    keep = np.ones(len(combos), dtype=bool)
    for e in inst.edges:
        elo, ehi = _edge_mask(e)
        keep &= ((lo & elo) | (hi & ehi)) != 0
    if inst.required_vertex is not None:
        vlo, vhi = _edge_mask([inst.required_vertex])
        keep &= ((lo & vlo) | (hi & vhi)) != 0
    if inst.excluded_vertex is not None:
        wlo, whi = _edge_mask([inst.excluded_vertex])
        keep &= ((lo & wlo) | (hi & whi)) == 0
    return CandidatePool(inst, combos[keep].copy(), lo[keep].copy(), hi[keep].copy())


def filter_pool(pool: CandidatePool, e) -> CandidatePool:
    """Retain exactly the members intersecting e (idempotent)."""
    elo, ehi = _edge_mask(e)
    keep = ((pool.lo & elo) | (pool.hi & ehi)) != 0
    inst = ConstraintInstance(
        pool.instance.universe_size,
        pool.instance.subset_size,
        pool.instance.edges + (frozenset(e),),
        pool.instance.required_vertex,
        pool.instance.excluded_vertex,
    )
    return CandidatePool(inst, pool.combos[keep], pool.lo[keep], pool.hi[keep])


def count_subsets(n: int, r: int, predicate) -> int:
    """Number of r-subsets of [1, n] satisfying an arbitrary predicate."""
    return sum(1 for e in combinations(range(1, n + 1), r) if predicate(set(e)))


def _degrees(edges) -> dict[int, int]:
    deg: dict[int, int] = {}
    for e in edges:
        for v in e:
            deg[v] = deg.get(v, 0) + 1
    return deg


def count_keeps_simple_maxdeg2(n: int, r: int, edges) -> int:
    """r-sets meeting every edge in exactly one vertex of degree <= 1
    (so the extended family stays simple with maximum degree <= 2)."""
    eds = [set(e) for e in edges]
    deg = _degrees(eds)

    def good(s: set[int]) -> bool:
        for e in eds:
            if len(s & e) != 1:
                return False
        return all(deg.get(v, 0) <= 1 for v in s)

    return count_subsets(n, r, good)


def count_witness_pattern(n: int, r: int, edges, required_witnesses) -> int:
    """r-sets meeting every edge in exactly one vertex whose trace on the
    degree->=2 witness set is exactly required_witnesses."""
    eds = [set(e) for e in edges]
    deg = _degrees(eds)
    witnesses = {v for v, d in deg.items() if d >= 2}
    req = set(required_witnesses)
    if not req <= witnesses:
        raise ValueError("required witnesses must have degree >= 2 in the family")

    def good(s: set[int]) -> bool:
        for e in eds:
            if len(s & e) != 1:
                return False
        return s & witnesses == req

    return count_subsets(n, r, good)


def count_star_side(n: int, r: int, edges, v: int) -> int:
    """r-sets containing v, meeting each edge through v in v only, meeting
    each edge avoiding v in exactly one degree-1 vertex."""
    eds = [set(e) for e in edges]
    deg = _degrees(eds)

    def good(s: set[int]) -> bool:
        if v not in s:
            return False
        for e in eds:
            inter = s & e
            if v in e:
                if inter != {v}:
                    return False
            elif len(inter) != 1:
                return False
        return all(deg.get(x, 0) <= 1 for x in s if x != v)

    return count_subsets(n, r, good)


def count_nonstar_side(n: int, r: int, edges, v: int) -> int:
    """r-sets avoiding v that meet every edge in exactly one degree-1 vertex."""
    eds = [set(e) for e in edges]
    deg = _degrees(eds)

    def good(s: set[int]) -> bool:
        if v in s:
            return False
        for e in eds:
            if len(s & e) != 1:
                return False
        return all(deg.get(x, 0) <= 1 for x in s)

    return count_subsets(n, r, good)


# ---------------------------------------------------------------------------
# Appendix functionals by complete enumeration.


def graph_class_sum_brute(t: int, x: float, y: float, cls: str) -> float:
    """Exact sum of x^f y^s over all subgraphs of K_t in a class, where f is
    the edge count and s the number of non-isolated vertices.

    cls: 'matching_f1' (single edges), 'matching_f2plus' (matchings with
    f >= 2), 'nonmatching_nonempty' (everything else nonempty).
    A subgraph is a matching exactly when s == 2f.
    """
    if t > GRAPH_ENUM_CAP:
        raise CapError(f"graph enumeration capped at t <= {GRAPH_ENUM_CAP}")
    if t < 1:
        raise ValueError("t must be positive")
    pairs = list(combinations(range(t), 2))
    ne = len(pairs)
    nmask = 1 << ne
    masks = np.arange(nmask, dtype=np.int64)
    f = np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)
    s = np.zeros(nmask, dtype=np.int64)
    for v in range(t):
        inc = 0
        for b, (a, c) in enumerate(pairs):
            if v in (a, c):
                inc |= 1 << b
        s += (masks & inc) != 0
    if cls == "matching_f1":
        sel = f == 1
    elif cls == "matching_f2plus":
        sel = (f >= 2) & (s == 2 * f)
    elif cls == "nonmatching_nonempty":
        sel = (f >= 1) & (s < 2 * f)
    else:
        raise ValueError(f"unknown class {cls!r}")
    key = f[sel] * (t + 1) + s[sel]
    counts = np.bincount(key, minlength=(ne + 1) * (t + 1))
    terms = []
    for k, cnt in enumerate(counts.tolist()):
        if cnt:
            fk, sk = divmod(k, t + 1)
            terms.append(cnt * (x**fk) * (y**sk))
    return fsum(terms)


def count_matchings_brute(t: int, f: int) -> int:
    """Number of f-edge matchings in the complete graph on t labeled vertices."""
    if f == 0:
        return 1
    pairs = list(combinations(range(t), 2))
    cnt = 0
    for sub in combinations(pairs, f):
        seen: set[int] = set()
        ok = True
        for a, b in sub:
            if a in seen or b in seen:
                ok = False
                break
            seen.add(a)
            seen.add(b)
        if ok:
            cnt += 1
    return cnt


def grid_sum_brute(tbar: int, delta: int, x: float, y: float) -> float:
    """Exact sum of x^h y^(u+l) over nonempty subsets H of a tbar x delta
    grid, where h = |H| and u, l count occupied rows and columns."""
    cells = tbar * delta
    if cells > GRID_ENUM_CAP:
        raise CapError(f"grid enumeration capped at tbar*delta <= {GRID_ENUM_CAP}")
    if tbar < 1 or delta < 1:
        raise ValueError("grid dimensions must be positive")
    masks = np.arange(1, 1 << cells, dtype=np.int64)
    h = np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)
    u = np.zeros(len(masks), dtype=np.int64)
    for row in range(tbar):
        rowbits = ((1 << delta) - 1) << (row * delta)
        u += (masks & rowbits) != 0
    l = np.zeros(len(masks), dtype=np.int64)
    for col in range(delta):
        colbits = 0
        for row in range(tbar):
            colbits |= 1 << (row * delta + col)
        l += (masks & colbits) != 0
    key = (h * (tbar + 1) + u) * (delta + 1) + l
    counts = np.bincount(key)
    terms = []
    for k, cnt in enumerate(counts.tolist()):
        if cnt:
            hk, rest = divmod(k, (tbar + 1) * (delta + 1))
            uk, lk = divmod(rest, delta + 1)
            terms.append(cnt * (x**hk) * (y ** (uk + lk)))
    return fsum(terms)


def grid_pattern_count_brute(h: int, u: int, l: int) -> int:
    """Exact number of subsets of a u x l grid with h cells that occupy every
    row and every column."""
    cells = u * l
    if cells > 16:
        raise CapError("exact grid pattern counting capped at u*l <= 16")
    cnt = 0
    for mask in range(1 << cells):
        if mask.bit_count() != h:
            continue
        rows = 0
        cols = 0
        for row in range(u):
            if mask & (((1 << l) - 1) << (row * l)):
                rows += 1
        for col in range(l):
            colbits = 0
            for row in range(u):
                colbits |= 1 << (row * l + col)
            if mask & colbits:
                cols += 1
        if rows == u and cols == l:
            cnt += 1
    return cnt
