"""Uniform sampling of the next edge from the candidate set A(H_t).

A(H_t) is the set of r-subsets of [1, n] that meet every current edge and
are not already chosen.  Three interchangeable strategies implement the same
uniform contract:

  pool        explicit enumeration (exact; small C(n, r) only)
  rejection   draw uniform r-subsets until one is acceptable (exact)
  structured  sequential conditional sampling over vertex types with exact
              big-integer suffix counts (exact; the fp_tol knob is an upper
              bound on total-variation distance and this implementation
              achieves 0 by staying in integer arithmetic)

Strategies keep a per-state plan cached on the state object; plans are
rebuilt or advanced automatically when the state has grown by one edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional

import numpy as np

from . import oracle
from .core import Edge, ProcessState
from .counting import DEFAULT_IE_CAP, CapError, ConstraintInstance, nu_all

DEFAULT_REJECTION_CAP = 10_000_000
DEFAULT_REJECTION_FLOOR = 1e-5
DEFAULT_POOL_CAP = oracle.DEFAULT_POOL_CAP
_BATCH = 4096

_MASK64 = (1 << 64) - 1


class RejectionCapReached(RuntimeError):
    """The rejection sampler hit its attempt cap.

    Deliberately distinct from pool exhaustion: it means "switch strategy",
    never "the candidate set is empty".
    """


def mix64(x: int) -> int:
    """splitmix64 finalizer; the documented per-trial seed mixing function."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(seed_base: int, trial_index: int) -> int:
    """Per-trial seed: seed_base XOR mix64(trial_index)."""
    return (seed_base & _MASK64) ^ mix64(trial_index)


class RngStream:
    """Seedable deterministic random stream (PCG64 underneath).

    Identical seed and call sequence give identical outputs.  position counts
    draw calls, which is enough to reason about replay alignment.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self.position = 0

    def integers(self, n: int) -> int:
        """Uniform int in [0, n)."""
        self.position += 1
        return int(self._gen.integers(0, n))

    def integer_array(self, n: int, size: int) -> np.ndarray:
        """size uniform ints in [0, n)."""
        self.position += 1
        return self._gen.integers(0, n, size=size)

    def randrange_big(self, total: int) -> int:
        """Uniform int in [0, total) for arbitrary-precision total."""
        if total <= 0:
            raise ValueError("randrange_big: total must be positive")
        nbits = total.bit_length()
        words = (nbits + 31) // 32
        mask = (1 << nbits) - 1
        while True:
            self.position += 1
            chunks = self._gen.integers(0, 1 << 32, size=words, dtype=np.uint64)
            val = 0
            for c in chunks.tolist():
                val = (val << 32) | int(c)
            val &= mask
            if val < total:
                return val

    def sample_distinct(self, n: int, k: int) -> list[int]:
        """k distinct uniform values from range(n), as an unordered sample."""
        if k > n:
            raise ValueError("sample_distinct: k > n")
        if k == 0:
            return []
        if 4 * k * k >= n:
            self.position += 1
            return [int(v) for v in self._gen.permutation(n)[:k]]
        out: list[int] = []
        seen: set[int] = set()
        while len(out) < k:
            v = self.integers(n)
            if v not in seen:
                seen.add(v)
                out.append(v)
        return out


@dataclass
class SamplerStrategy:
    """Sampling strategy selector plus the caps the strategies honor.

    kind: 'pool' | 'rejection' | 'structured' | 'auto'.  Auto resolves to
    exactly one concrete strategy per step (see auto_dispatch).
    """

    kind: str = "auto"
    attempt_cap: int = DEFAULT_REJECTION_CAP
    ie_cap: int = DEFAULT_IE_CAP
    fp_tol: float = 1e-9
    pool_cap: int = DEFAULT_POOL_CAP
    rejection_floor: float = DEFAULT_REJECTION_FLOOR

    KINDS = ("pool", "rejection", "structured", "auto")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")


# ---------------------------------------------------------------------------
# Pool strategy


class _PoolPlan:
    def __init__(self, state: ProcessState, pool_cap: int):
        inst = ConstraintInstance.of(state.n, state.r, state.edges)
        pool = oracle.enumerate_pool(inst, pool_cap)
        self.combos = pool.combos
        self.lo = pool.lo
        self.hi = pool.hi
        self.t = state.t
        self._drop_chosen(state.edges)

    def _drop_chosen(self, edges) -> None:
        if not edges or not len(self.combos):
            return
        keep = np.ones(len(self.combos), dtype=bool)
        for e in edges:
            elo, ehi = oracle._edge_mask(e)
            keep &= ~((self.lo == elo) & (self.hi == ehi))
        self._apply(keep)

    def _apply(self, keep: np.ndarray) -> None:
        self.combos = self.combos[keep]
        self.lo = self.lo[keep]
        self.hi = self.hi[keep]

    def advance(self, new_edge: Edge) -> None:
        """Account for one more chosen edge: filter non-meeting members and
        remove the edge itself."""
        elo, ehi = oracle._edge_mask(new_edge)
        keep = ((self.lo & elo) | (self.hi & ehi)) != 0
        keep &= ~((self.lo == elo) & (self.hi == ehi))
        self._apply(keep)
        self.t += 1

    def size(self) -> int:
        return len(self.combos)

    def draw(self, rng: RngStream) -> Optional[Edge]:
        m = len(self.combos)
        if m == 0:
            return None
        i = rng.integers(m)
        return tuple(int(v) for v in self.combos[i])

    def all_contain(self, x: int) -> bool:
        xlo, xhi = oracle._edge_mask([x])
        return bool((((self.lo & xlo) | (self.hi & xhi)) != 0).all())


def _pool_plan(state: ProcessState, strategy: SamplerStrategy) -> _PoolPlan:
    plan = state._plans.get("pool")
    if isinstance(plan, _PoolPlan):
        if plan.t == state.t:
            return plan
        if plan.t == state.t - 1:
            plan.advance(state.edges[-1])
            return plan
    plan = _PoolPlan(state, strategy.pool_cap)
    state._plans["pool"] = plan
    return plan


# ---------------------------------------------------------------------------
# Rejection strategy


class _RejectionPlan:
    def __init__(self, state: ProcessState):
        self.t = state.t
        self.n = state.n
        self.r = state.r
        self.member = np.zeros((max(state.t, 1), state.n + 1), dtype=bool)
        for i, e in enumerate(state.edges):
            self.member[i, list(e)] = True
        self.chosen = set(state.edges)


def _rejection_plan(state: ProcessState) -> _RejectionPlan:
    plan = state._plans.get("rejection")
    if isinstance(plan, _RejectionPlan) and plan.t == state.t:
        return plan
    plan = _RejectionPlan(state)
    state._plans["rejection"] = plan
    return plan


def _draw_subset_batch(rng: RngStream, n: int, r: int, size: int) -> np.ndarray:
    """Batch of uniform r-subsets of [1, n], each row sorted ascending.

    Rows are drawn with replacement and rows with repeated vertices are
    redrawn, which leaves each distinct r-subset equally likely.
    """
    if r * r > n:  # high collision regime: draw via per-row permutation
        rows = np.empty((size, r), dtype=np.int64)
        for i in range(size):
            rows[i] = np.sort(np.array(rng.sample_distinct(n, r))) + 1
        return rows
    rows = np.sort(rng.integer_array(n, (size, r)), axis=1) + 1
    bad = (np.diff(rows, axis=1) == 0).any(axis=1)
    while bad.any():
        k = int(bad.sum())
        rows[bad] = np.sort(rng.integer_array(n, (k, r)), axis=1) + 1
        bad = (np.diff(rows, axis=1) == 0).any(axis=1)
    return rows


def rejection_sample(
    state: ProcessState,
    rng: RngStream,
    cap: int = DEFAULT_REJECTION_CAP,
    counter: Optional[dict] = None,
) -> Edge:
    """Draw uniform r-subsets until one meets every edge and is unchosen.

    Uniformity over A(H_t) is exact conditional on acceptance.  Raises
    RejectionCapReached after cap attempts; pass a dict as counter to read
    back the number of attempts consumed.
    """
    plan = _rejection_plan(state)
    attempts = 0
    t = state.t
    while attempts < cap:
        size = min(_BATCH, cap - attempts)
        rows = _draw_subset_batch(rng, state.n, state.r, size)
        if t == 0:
            ok = np.ones(len(rows), dtype=bool)
        else:
            ok = np.ones(len(rows), dtype=bool)
            for i in range(t):
                ok &= plan.member[i][rows].any(axis=1)
        idxs = np.flatnonzero(ok)
        for i in idxs.tolist():
            cand = tuple(int(v) for v in rows[i])
            if cand not in plan.chosen:
                attempts += i + 1
                if counter is not None:
                    counter["attempts"] = counter.get("attempts", 0) + attempts
                return cand
        attempts += size
    if counter is not None:
        counter["attempts"] = counter.get("attempts", 0) + attempts
    raise RejectionCapReached(
        f"no acceptable edge in {cap} attempts (t={t}); switch strategy"
    )


# ---------------------------------------------------------------------------
# Structured strategy: sequential conditional sampling over vertex types.


class _StructuredPlan:
    """Exact sequential sampler for one fixed state.

    Vertices are grouped into types by which edges contain them (the free
    type holds the untouched vertices).  Types are processed in a fixed
    order; at each step the count taken from the current type is sampled
    with probability proportional to (ways to take k here) x (exact number
    of completions hitting every still-uncovered edge).  The suffix counts
    are inclusion-exclusion sums evaluated in exact integer arithmetic after
    bucketing subsets by their avoided-vertex count, so no floating-point
    error enters the distribution.
    """

    def __init__(self, state: ProcessState, ie_cap: int):
        t = state.t
        if t > ie_cap:
            raise CapError(f"structured sampling needs t <= ie_cap ({ie_cap}), got {t}")
        self.n = state.n
        self.r = state.r
        self.t = t
        self.full = (1 << t) - 1
        cover: dict[int, int] = {}
        for i, e in enumerate(state.edges):
            for x in e:
                cover[x] = cover.get(x, 0) | (1 << i)
        groups: dict[int, list[int]] = {}
        for x, m in cover.items():
            groups.setdefault(m, []).append(x)
        ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        self.masks = [0] + [m for m, _ in ordered]
        self.verts: list[Optional[list[int]]] = [None] + [
            sorted(vs) for _, vs in ordered
        ]
        self.sizes = [state.n - len(cover)] + [len(vs) for _, vs in ordered]
        self.m = len(self.masks)
        self.covered_sorted = sorted(cover)
        self.chosen = set(state.edges)

        N = 1 << t
        idx = np.arange(N, dtype=np.int64)
        M_total = np.zeros(N, dtype=np.int64)
        for j in range(self.m):
            M_total[(idx & self.masks[j]) == 0] += self.sizes[j]
        self.idx = idx
        self.M_total = M_total
        self.even = (np.bitwise_count(idx.astype(np.uint64)).astype(np.int64) & 1) == 0
        self._buckets: dict[tuple[int, int], list[tuple[int, int]]] = {}
        self._weights: dict[tuple[int, int, int], list[int]] = {}
        self.total_count = self._suffix(0, self.full, [self.r])[self.r]

    def _bucket_list(self, j: int, D: int) -> list[tuple[int, int]]:
        """Signed counts of M_j(S) over subsets S of D, bucketed by value,
        where M_j(S) = number of vertices in types j.. avoiding all edges
        of S."""
        key = (j, D)
        cached = self._buckets.get(key)
        if cached is not None:
            return cached
        if D == self.full:
            sel = self.idx
        else:
            sel = self.idx[(self.idx & (self.full & ~D)) == 0]
        M = self.M_total[sel].copy()
        for l in range(j):
            M[(sel & self.masks[l]) == 0] -= self.sizes[l]
        ev = self.even[sel]
        vals, codes = np.unique(M, return_inverse=True)
        plus = np.bincount(codes[ev], minlength=len(vals))
        minus = np.bincount(codes[~ev], minlength=len(vals))
        out = [
            (int(v), int(p) - int(q))
            for v, p, q in zip(vals.tolist(), plus.tolist(), minus.tolist())
            if p != q
        ]
        self._buckets[key] = out
        return out

    def _suffix(self, j: int, D: int, rhos: list[int]) -> dict[int, int]:
        """Exact number of ways to choose rho vertices from types j.. hitting
        every edge in D, for each rho in rhos (inclusion-exclusion)."""
        buckets = self._bucket_list(j, D)
        rset = sorted(set(rhos), reverse=True)
        tot = {rho: 0 for rho in rset}
        for Mv, coeff in buckets:
            prev = comb(Mv, rset[0]) if 0 <= rset[0] <= Mv else 0
            tot[rset[0]] += coeff * prev
            prev_rho = rset[0]
            for rho in rset[1:]:
                c = prev
                for rr in range(prev_rho, rho, -1):
                    if c == 0:
                        c = comb(Mv, rr - 1) if 0 <= rr - 1 <= Mv else 0
                    else:
                        c = c * rr // (Mv - rr + 1)  # C(M, rr-1) from C(M, rr)
                tot[rho] += coeff * c
                prev, prev_rho = c, rho
        return tot

    def _weight_vector(self, j: int, rho: int, C: int) -> list[int]:
        key = (j, rho, C)
        ws = self._weights.get(key)
        if ws is not None:
            return ws
        kmax = min(self.sizes[j], rho)
        D0 = self.full & ~C
        ws = [self._suffix(j + 1, D0, [rho])[rho]]
        if kmax >= 1:
            D1 = self.full & ~(C | self.masks[j])
            suffix = self._suffix(j + 1, D1, [rho - k for k in range(1, kmax + 1)])
            for k in range(1, kmax + 1):
                ws.append(comb(self.sizes[j], k) * suffix[rho - k])
        self._weights[key] = ws
        return ws

    def _free_vertices(self, rng: RngStream, k: int) -> list[int]:
        nf = self.n - len(self.covered_sorted)
        out = []
        for x in rng.sample_distinct(nf, k):
            v = x + 1
            for c in self.covered_sorted:
                if c <= v:
                    v += 1
                else:
                    break
            out.append(v)
        return out

    def draw(self, rng: RngStream) -> Optional[Edge]:
        if self.total_count - len(self.chosen) <= 0:
            return None
        while True:
            rho, C = self.r, 0
            counts = [0] * self.m
            for j in range(self.m):
                if rho == 0 and C == self.full:
                    break
                ws = self._weight_vector(j, rho, C)
                total = sum(ws)
                if total == 0:
                    raise AssertionError("structured sampler reached a dead state")
                u = rng.randrange_big(total)
                acc = 0
                for k, w in enumerate(ws):
                    acc += w
                    if u < acc:
                        break
                counts[j] = k
                rho -= k
                if k > 0:
                    C |= self.masks[j]
            verts: list[int] = []
            for j in range(self.m):
                k = counts[j]
                if k == 0:
                    continue
                if j == 0:
                    verts.extend(self._free_vertices(rng, k))
                else:
                    pool = self.verts[j]
                    verts.extend(pool[i] for i in rng.sample_distinct(len(pool), k))
            edge = tuple(sorted(verts))
            if edge not in self.chosen:  # uniform over A \ H by conditioning
                return edge


def _structured_plan(state: ProcessState, strategy: SamplerStrategy) -> _StructuredPlan:
    plan = state._plans.get("structured")
    if isinstance(plan, _StructuredPlan) and plan.t == state.t:
        return plan
    plan = _StructuredPlan(state, strategy.ie_cap)
    state._plans["structured"] = plan
    return plan


def structured_sample(
    state: ProcessState, rng: RngStream, ie_cap: int = DEFAULT_IE_CAP
) -> Optional[Edge]:
    """Exact conditional sampling; None exactly when A(H_t) is empty."""
    plan = _structured_plan(state, SamplerStrategy(kind="structured", ie_cap=ie_cap))
    return plan.draw(rng)


# ---------------------------------------------------------------------------
# Dispatch


def auto_dispatch(state: ProcessState, strategy: SamplerStrategy) -> str:
    """Resolve 'auto' to a concrete strategy for the current step.

    pool when the whole C(n, r) universe is enumerable; otherwise rejection
    while the exact acceptance probability (nu_all - t) / C(n, r) stays
    above rejection_floor; otherwise structured.  Beyond the ie_cap with a
    huge universe there is no viable strategy and the step fails loudly.
    """
    n, r = state.n, state.r
    if comb(n, r) <= strategy.pool_cap and n <= oracle.POOL_UNIVERSE_LIMIT:
        return "pool"
    if state.t <= strategy.ie_cap:
        candidates = nu_all(
            ConstraintInstance.of(n, r, state.edges), strategy.ie_cap
        ) - state.t
        if candidates > 0 and Fraction(candidates, comb(n, r)) >= Fraction(
            strategy.rejection_floor
        ):
            return "rejection"
        return "structured"
    raise CapError(
        f"no viable strategy: t={state.t} exceeds ie_cap={strategy.ie_cap} "
        f"and C({n},{r}) exceeds pool_cap"
    )


def sample_next(
    state: ProcessState,
    rng: RngStream,
    strategy: SamplerStrategy,
    resolved: Optional[str] = None,
) -> Optional[Edge]:
    """One uniform draw from A(H_t); None exactly when A(H_t) is empty.

    Pass resolved to skip auto dispatch (e.g. when the caller already logged
    the decision).  Rejection cap exhaustion raises RejectionCapReached.
    """
    kind = resolved or strategy.kind
    if kind == "auto":
        kind = auto_dispatch(state, strategy)
    if kind == "pool":
        edge = _pool_plan(state, strategy).draw(rng)
    elif kind == "rejection":
        edge = rejection_sample(state, rng, strategy.attempt_cap)
    elif kind == "structured":
        edge = _structured_plan(state, strategy).draw(rng)
    else:
        raise ValueError(f"unknown strategy kind {kind!r}")
    if __debug__ and edge is not None:
        es = set(edge)
        assert not state.contains_edge(edge), "sampler returned a chosen edge"
        assert all(
            es.intersection(old) for old in state.edges
        ), "sampler returned a non-intersecting edge"
    return edge
