"""Exact and closed-form evaluation of the counting quantities.

The workhorse is nu_all: the number of r-subsets of [1, n] that intersect
every edge of a given list, counted exactly by inclusion-exclusion over edge
subsets.  Per-subset union cardinalities come from one vectorized
sum-over-subsets pass on vertex "types" (the incidence pattern of each
vertex), so the total work is O(2^t) aggregation steps rather than
O(2^t * t * r) set scans.  Everything returns plain ints; counts include
already-chosen edges (they satisfy their own constraints) and callers
subtract them when pool sizes are needed.

The closed forms (nu_emp, nu_G, nu_emp_AB, final_family_size) are only valid
under the structural hypotheses stated on each function: the caller owns
those hypotheses, the functions only check the arithmetic regime.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exactmath import LogNum, binom, log_binom

DEFAULT_IE_CAP = 22


class CapError(ValueError):
    """A configured enumeration/inclusion-exclusion cap was exceeded."""


@dataclass(frozen=True)
class ConstraintInstance:
    """Count/sample r-subsets of [1, universe_size] hitting every edge.

    required_vertex: counted subsets must contain it.
    excluded_vertex: counted subsets must avoid it.
    """

    universe_size: int
    subset_size: int
    edges: tuple[frozenset[int], ...]
    required_vertex: Optional[int] = None
    excluded_vertex: Optional[int] = None

    @classmethod
    def of(
        cls,
        n: int,
        r: int,
        edges: Sequence,
        required_vertex: Optional[int] = None,
        excluded_vertex: Optional[int] = None,
    ) -> "ConstraintInstance":
        eds = tuple(frozenset(e) for e in edges)
        inst = cls(n, r, eds, required_vertex, excluded_vertex)
        inst.validate()
        return inst

    def validate(self) -> None:
        n = self.universe_size
        if n < 1 or not (0 <= self.subset_size <= n):
            raise ValueError(f"bad instance dimensions (n={n}, r={self.subset_size})")
        for e in self.edges:
            if not e:
                raise ValueError("constraint edges must be nonempty")
            if min(e) < 1 or max(e) > n:
                raise ValueError(f"edge {sorted(e)} not within [1, {n}]")
        for v in (self.required_vertex, self.excluded_vertex):
            if v is not None and not (1 <= v <= n):
                raise ValueError(f"vertex {v} not within [1, {n}]")
        if (
            self.required_vertex is not None
            and self.required_vertex == self.excluded_vertex
        ):
            raise ValueError("required and excluded vertices must be distinct")


def _reduced(inst: ConstraintInstance):
    """Fold required/excluded vertices into (universe, subset size, edges)."""
    U = inst.universe_size
    rr = inst.subset_size
    eds = [set(e) for e in inst.edges]
    if inst.required_vertex is not None:
        v = inst.required_vertex
        U -= 1
        rr -= 1
        eds = [e for e in eds if v not in e]
    if inst.excluded_vertex is not None:
        w = inst.excluded_vertex
        U -= 1
        eds = [e - {w} for e in eds]
    return U, rr, eds


def _signed_union_buckets(eds: list[set[int]]):
    """For each distinct union cardinality u over edge subsets S, the signed
    subset count sum_{S: |union S| = u} (-1)^{|S|}.  Returns (u, coeff) pairs."""
    t = len(eds)
    cover: dict[int, int] = {}
    for i, e in enumerate(eds):
        bit = 1 << i
        for x in e:
            cover[x] = cover.get(x, 0) | bit
    N = 1 << t
    h = np.zeros(N, dtype=np.int64)
    for m in cover.values():
        h[m] += 1
    f = h  # SOS transform in place: f[M] = sum_{type mask subset of M} h[type]
    for b in range(t):
        f = f.reshape(-1, 2, 1 << b)
        f[:, 1, :] += f[:, 0, :]
    f = f.reshape(N)
    union_size = len(cover) - f[::-1]  # |union over S| indexed by mask S
    parity_even = (
        np.bitwise_count(np.arange(N, dtype=np.uint64)).astype(np.int64) & 1
    ) == 0
    vals, codes = np.unique(union_size, return_inverse=True)
    plus = np.bincount(codes[parity_even], minlength=len(vals))
    minus = np.bincount(codes[~parity_even], minlength=len(vals))
    return [
        (int(u), int(p) - int(q))
        for u, p, q in zip(vals.tolist(), plus.tolist(), minus.tolist())
        if p != q
    ]


def nu_all(inst: ConstraintInstance, ie_cap: int = DEFAULT_IE_CAP) -> int:
    """Exact number of r-subsets satisfying the instance (hit every edge,
    honor required/excluded vertices), by inclusion-exclusion."""
    inst.validate()
    U, rr, eds = _reduced(inst)
    if len(eds) > ie_cap:
        raise CapError(f"inclusion-exclusion over {len(eds)} edges exceeds cap {ie_cap}")
    if rr < 0:
        return 0
    if any(not e for e in eds):
        return 0  # an edge became unhittable (was exactly the excluded vertex)
    if not eds:
        return binom(U, rr)
    total = 0
    for u, coeff in _signed_union_buckets(eds):
        total += coeff * binom(U - u, rr)
    return total


def nu_split(
    inst: ConstraintInstance, v: int, ie_cap: int = DEFAULT_IE_CAP
) -> tuple[int, int]:
    """(count containing v, count avoiding v); sums to nu_all(inst)."""
    if inst.required_vertex is not None:
        raise ValueError("nu_split needs an instance without a required vertex")
    if v == inst.excluded_vertex:
        raise ValueError("split vertex coincides with the excluded vertex")
    whole = nu_all(inst, ie_cap)
    with_v = nu_all(
        ConstraintInstance(
            inst.universe_size, inst.subset_size, inst.edges, v, inst.excluded_vertex
        ),
        ie_cap,
    )
    return with_v, whole - with_v


def nu_emp(n: int, r: int, t: int) -> int:
    """Closed form for the r-sets meeting each of t edges in exactly one
    fresh degree-1 vertex: (r-t+1)^t * C(n - t(r-t+1) - C(t,2), r-t).

    Valid only when the family is simple with maximum degree <= 2 and all
    pairwise witnesses distinct; the caller owns that hypothesis.
    """
    if t < 0 or r < 0:
        raise ValueError("nu_emp: negative arguments")
    if t > r:
        raise ValueError(f"nu_emp: regime violated (t={t} > r={r})")
    distinct = t * (r - t + 1) + binom(t, 2)
    if distinct > n:
        raise ValueError(
            f"nu_emp: regime violated (structure needs {distinct} vertices, n={n})"
        )
    return (r - t + 1) ** t * binom(n - distinct, r - t)


def nu_G(n: int, r: int, t: int, s: int, f: int) -> int:
    """Closed form (r-t+1)^(t-s) * C(n - t(r-t+1) - C(t,2), r-t+s-f) for the
    r-sets that contain exactly the witnesses of a graph with s vertices and
    f edges on the index set and meet every other edge in one fresh vertex.

    Same structural hypotheses as nu_emp; s = f = 0 reduces to nu_emp.
    """
    if not (0 <= s <= t):
        raise ValueError(f"nu_G: need 0 <= s <= t, got s={s}, t={t}")
    if f < 0 or f > binom(s, 2):
        raise ValueError(f"nu_G: f={f} impossible on s={s} vertices")
    if t > r:
        raise ValueError(f"nu_G: regime violated (t={t} > r={r})")
    distinct = t * (r - t + 1) + binom(t, 2)
    if distinct > n:
        raise ValueError(
            f"nu_G: regime violated (structure needs {distinct} vertices, n={n})"
        )
    return (r - t + 1) ** (t - s) * binom(n - distinct, r - t + s - f)


def nu_emp_AB(n: int, r: int, t: int, delta: int) -> tuple[int, int]:
    """Main-term pair for a state with one vertex v of degree delta >= 3 and
    everything else simple of degree <= 2.

    With tbar = t - delta non-v edges and D = n - (r*t - C(tbar,2)
    - delta*tbar - (delta-1)) vertices untouched by the family:

      A-side (contain v, meet the v-edges in v only, meet each non-v edge in
      exactly one fresh vertex):  (r-t+1)^tbar * C(D, r - tbar - 1)
      B-side (avoid v, meet all t edges in one fresh vertex each):
              (r-t+1)^tbar * (r - tbar - 1)^delta * C(D, r - t)
    """
    if not (3 <= delta <= t):
        raise ValueError(f"nu_emp_AB: need 3 <= delta <= t, got delta={delta}, t={t}")
    if t > r:
        raise ValueError(f"nu_emp_AB: regime violated (t={t} > r={r})")
    tbar = t - delta
    used = r * t - binom(tbar, 2) - delta * tbar - (delta - 1)
    if used > n:
        raise ValueError(
            f"nu_emp_AB: regime violated (structure needs {used} vertices, n={n})"
        )
    free = n - used
    a = (r - t + 1) ** tbar * binom(free, r - tbar - 1)
    b = (r - t + 1) ** tbar * (r - tbar - 1) ** delta * binom(free, r - t)
    return a, b


def final_family_size(n: int, r: int, tbar: int) -> int:
    """Exact count of r-sets containing a vertex v and meeting all of tbar
    simple, pairwise-distinct-witness edges that avoid v:

        sum_{i=0}^{tbar} (-1)^i C(tbar, i) C(n-1-ri+i(i-1)/2, r-1)

    (valid for any such configuration; i edges jointly cover ri - C(i,2)
    vertices, which is what makes the formula configuration-independent).
    """
    if tbar < 0:
        raise ValueError("final_family_size: tbar must be nonnegative")
    if tbar * r + 1 > n:
        raise ValueError(
            f"final_family_size: no simple {tbar}-edge configuration avoiding v "
            f"fits in n={n}"
        )
    total = 0
    for i in range(tbar + 1):
        term = binom(tbar, i) * binom(n - 1 - r * i + i * (i - 1) // 2, r - 1)
        total += term if i % 2 == 0 else -term
    return total


def final_family_approx(n: int, r: int, tbar: int) -> LogNum:
    """Leading-order size (r^2/n)^tbar * C(n-1, r-1) in the log domain.

    Requires r^2 < n; at desk-scale parameters the neglected relative error
    is of order tbar^2/r + tbar*r^2/n and is not negligible.
    """
    if r * r >= n:
        raise ValueError(f"final_family_approx: needs r^2 < n, got r={r}, n={n}")
    if tbar < 0:
        raise ValueError("final_family_approx: tbar must be nonnegative")
    ratio = LogNum.from_float(r * r / n)
    return ratio.pow_int(tbar) * log_binom(n - 1, r - 1)


def nu_all_approx(n: int, r: int, t: int) -> LogNum:
    """Leading-order nu_all: r^t * C(n, r-t) in the log domain.

    The neglected relative error is of order t*r^2/n + t^2*n/r^3; at
    desk-scale parameters these terms are not negligible, so this is a
    scale estimate, not a certified count.
    """
    if not (0 <= t <= r):
        raise ValueError(f"nu_all_approx: need 0 <= t <= r, got t={t}, r={r}")
    return LogNum.from_int(r).pow_int(t) * log_binom(n, r - t)
