"""Closed forms and exact enumerators for the appendix functionals.

Two families: sums of x^f y^s over subgraph classes of the complete graph K_t
(f edges, s non-isolated vertices), and sums of x^h y^(u+l) over nonempty
subsets of a tbar x delta grid (h cells, u occupied rows, l occupied
columns).  The literature gives asymptotic bounds for most of these; here the
sums are evaluated exactly by enumeration (delegated to the oracle module)
and only the f=1 matching class and the grid leading term have closed forms.

Real-valued sums are accumulated with compensated summation; relative
tolerance 1e-12 documented for the enumeration caps used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import oracle
from .exactmath import binom, falling

GRAPH_CLASSES = ("matching_f1", "matching_f2plus", "nonmatching_nonempty")


@dataclass(frozen=True)
class FunctionalParams:
    """Arguments to the functional evaluators: t for the graph case,
    (tbar, delta) for the grid case; x, y positive reals."""

    x: float
    y: float
    t: Optional[int] = None
    tbar: Optional[int] = None
    delta: Optional[int] = None

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise ValueError("x and y must be positive")


def graph_sum_f1(params: FunctionalParams) -> float:
    """Closed form C(t,2) * x * y^2 for the single-edge subgraph class."""
    t = params.t
    if t is None or t < 2:
        raise ValueError("graph_sum_f1 needs t >= 2")
    return binom(t, 2) * params.x * params.y**2


def matching_count(t: int, f: int) -> int:
    """Number of f-edge matchings on t labeled vertices:
    (t)_{2f} / (2^f * f!), always integral."""
    if f < 0 or 2 * f > t:
        raise ValueError(f"matching_count: need 0 <= 2f <= t, got t={t}, f={f}")
    num = falling(t, 2 * f)
    den = (2**f) * _factorial(f)
    q, rem = divmod(num, den)
    assert rem == 0
    return q


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def graph_sum_class(params: FunctionalParams, cls: str) -> float:
    """Exact sum over a subgraph class by complete enumeration (t <= 7)."""
    if cls not in GRAPH_CLASSES:
        raise ValueError(f"unknown graph class {cls!r}; choose from {GRAPH_CLASSES}")
    t = params.t
    if t is None or t < 1:
        raise ValueError("graph_sum_class needs a positive t")
    return oracle.graph_class_sum_brute(t, params.x, params.y, cls)


def grid_sum(params: FunctionalParams) -> float:
    """Exact sum of x^h y^(u+l) over nonempty grid subsets (tbar*delta <= 20)."""
    if params.tbar is None or params.delta is None:
        raise ValueError("grid_sum needs tbar and delta")
    return oracle.grid_sum_brute(params.tbar, params.delta, params.x, params.y)


def grid_leading(params: FunctionalParams) -> float:
    """Leading term tbar * delta * x * y^2 of the grid sum."""
    if params.tbar is None or params.delta is None:
        raise ValueError("grid_leading needs tbar and delta")
    if params.tbar < 1 or params.delta < 1:
        raise ValueError("grid dimensions must be positive")
    return params.tbar * params.delta * params.x * params.y**2


def grid_bound_nhul(h: int, u: int, l: int) -> int:
    """Upper bound for the number of h-cell subsets of a u x l grid occupying
    every row and column: l^u * C(u*l, h-l) when u >= l, and the symmetric
    form otherwise."""
    if u < 1 or l < 1:
        raise ValueError("grid_bound_nhul: u and l must be >= 1")
    if h < max(u, l):
        raise ValueError("grid_bound_nhul: h must be at least max(u, l)")
    if u >= l:
        return l**u * binom(u * l, h - l)
    return u**l * binom(u * l, h - u)
