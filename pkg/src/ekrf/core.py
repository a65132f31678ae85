"""Domain types for the growing intersecting family and its trial records.

No probability or counting logic lives here: just the incremental bookkeeping
(degrees, pairwise intersection witnesses, common intersection, phase times)
plus a from-scratch recomputation used as an oracle against the incremental
flags.  Vertices are 1-based integers in [1, n]; an edge is a strictly
increasing tuple of r of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

Edge = tuple[int, ...]


def make_edge(vertices, n: int, r: int) -> Edge:
    """Validate and canonicalize a vertex collection into an Edge."""
    e = tuple(sorted(vertices))
    if len(e) != r:
        raise ValueError(f"edge must have exactly {r} vertices, got {len(e)}")
    if len(set(e)) != r:
        raise ValueError("edge vertices must be distinct")
    if e[0] < 1 or e[-1] > n:
        raise ValueError(f"edge vertices must lie in [1, {n}]")
    return e


@dataclass
class StructuralFlags:
    """Degree/simplicity summary of the current family.

    distinguished_v is set exactly when a single vertex has degree >= 3.
    """

    maxdeg: int = 0
    maxdeg_vertices: list[int] = field(default_factory=list)
    is_simple: bool = True
    distinguished_v: Optional[int] = None


@dataclass
class PhaseRecord:
    """First-occurrence times of the structural phase events.

    t_k maps k -> first step at which the maximum degree equals k (k >= 3).
    Each time records the FIRST step its condition held and is never
    overwritten.
    """

    t_k: dict[int, int] = field(default_factory=dict)
    t_nonsimple: Optional[int] = None
    t_delta0: Optional[int] = None

    @property
    def t3(self) -> Optional[int]:
        return self.t_k.get(3)

    @property
    def t4(self) -> Optional[int]:
        return self.t_k.get(4)


@dataclass
class Verdict:
    """Outcome classification of a trial.

    kind is one of 'fixed', 'not_fixed', 'predicted_fixed', 'undetermined'.
    Fixed(x, size) is exact: every member of the final family contains x and
    the final size is known.  PredictedFixed carries the residual ratio
    (fraction of still-eligible r-sets avoiding x) that the prediction leaves
    unaccounted for.
    """

    kind: str
    vertex: Optional[int] = None
    size: Optional[int] = None
    residual_ratio: Optional[float] = None

    FIXED = "fixed"
    NOT_FIXED = "not_fixed"
    PREDICTED_FIXED = "predicted_fixed"
    UNDETERMINED = "undetermined"


@dataclass
class ProcessState:
    """The growing intersecting family with incremental structure tracking.

    pair_witnesses[(i, j)] holds the full vertex set of E_i and E_j's
    intersection (i < j, 0-based edge indices), so non-simple states stay
    representable.  common_intersection is the intersection of all current
    edges and only ever shrinks.  Confined to a single trial executor; never
    shared mutably.
    """

    n: int
    r: int
    edges: list[Edge] = field(default_factory=list)
    degree: dict[int, int] = field(default_factory=dict)
    incidence: dict[int, list[int]] = field(default_factory=dict)
    pair_witnesses: dict[tuple[int, int], frozenset[int]] = field(default_factory=dict)
    common_intersection: set[int] = field(default_factory=set)
    flags: StructuralFlags = field(default_factory=StructuralFlags)
    phases: PhaseRecord = field(default_factory=PhaseRecord)
    delta0_target: Optional[int] = None

    _edge_set: set[Edge] = field(default_factory=set, repr=False)
    _nonsimple_pairs: int = field(default=0, repr=False)
    _high_degree: set[int] = field(default_factory=set, repr=False)  # deg >= 3
    _plans: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def empty(cls, n: int, r: int, delta0_target: Optional[int] = None) -> "ProcessState":
        if not (1 <= r < n):
            raise ValueError(f"need 1 <= r < n, got r={r}, n={n}")
        return cls(n=n, r=r, delta0_target=delta0_target)

    @property
    def t(self) -> int:
        return len(self.edges)

    def contains_edge(self, e: Edge) -> bool:
        return e in self._edge_set

    def vertices_of_degree(self, d: int) -> list[int]:
        return sorted(v for v, dv in self.degree.items() if dv == d)


def apply_edge(state: ProcessState, e: Edge) -> ProcessState:
    """Append edge e, updating all incremental structure in O(t*r) work.

    Mutates state in place and returns it.  Rejects edges that fail to
    intersect some current edge or duplicate a chosen one (a sampler bug).
    Phase times are recorded the first time their condition holds; one edge
    may push several vertices to degree 3 simultaneously and all of them are
    accounted for in the flags.
    """
    e = make_edge(e, state.n, state.r)
    if state.contains_edge(e):
        raise ValueError(f"duplicate edge {e}: sets are chosen without replacement")
    eset = set(e)
    new_idx = state.t
    for i, old in enumerate(state.edges):
        inter = eset.intersection(old)
        if not inter:
            raise ValueError(f"edge {e} does not intersect edge #{i} {old}")
        state.pair_witnesses[(i, new_idx)] = frozenset(inter)
        if len(inter) >= 2 and state.phases.t_nonsimple is None:
            state.phases.t_nonsimple = new_idx + 1
        if len(inter) >= 2:
            state._nonsimple_pairs += 1

    state.edges.append(e)
    state._edge_set.add(e)
    if new_idx == 0:
        state.common_intersection = set(e)
    else:
        state.common_intersection &= eset

    for v in e:
        d = state.degree.get(v, 0) + 1
        state.degree[v] = d
        state.incidence.setdefault(v, []).append(new_idx)
        if d >= 3:
            state._high_degree.add(v)

    _refresh_flags(state)
    t_now = state.t
    md = state.flags.maxdeg
    if md >= 3 and md not in state.phases.t_k:
        state.phases.t_k[md] = t_now
    if (
        state.delta0_target is not None
        and state.phases.t_delta0 is None
        and md >= state.delta0_target
    ):
        state.phases.t_delta0 = t_now
    state._plans.clear()
    return state


def _refresh_flags(state: ProcessState) -> None:
    if not state.degree:
        state.flags = StructuralFlags()
        return
    md = max(state.degree.values())
    state.flags = StructuralFlags(
        maxdeg=md,
        maxdeg_vertices=sorted(v for v, d in state.degree.items() if d == md),
        is_simple=state._nonsimple_pairs == 0,
        distinguished_v=(
            next(iter(state._high_degree)) if len(state._high_degree) == 1 else None
        ),
    )


def structural_flags(state: ProcessState) -> StructuralFlags:
    """Pure from-scratch recomputation of the flags (oracle for the
    incremental ones)."""
    degree: dict[int, int] = {}
    for edge in state.edges:
        for v in edge:
            degree[v] = degree.get(v, 0) + 1
    if not degree:
        return StructuralFlags()
    md = max(degree.values())
    simple = True
    t = len(state.edges)
    for i in range(t):
        si = set(state.edges[i])
        for j in range(i + 1, t):
            if len(si.intersection(state.edges[j])) >= 2:
                simple = False
    high = [v for v, d in degree.items() if d >= 3]
    return StructuralFlags(
        maxdeg=md,
        maxdeg_vertices=sorted(v for v, d in degree.items() if d == md),
        is_simple=simple,
        distinguished_v=high[0] if len(high) == 1 else None,
    )


@dataclass
class TrialRecord:
    """One trial's outcome: config echo, seed, phases, verdict, sizes.

    Re-running with the same config and seed reproduces the record exactly
    (wall_time excluded from comparison and from serialization).
    """

    n: int
    r: int
    seed: int
    trial_index: int
    config: dict
    phases: PhaseRecord
    simple_at_t4: Optional[bool]
    unique_v_at_t4: Optional[bool]
    t3_multiplicity: Optional[int]
    verdict: Verdict
    final_size_exact: Optional[int]
    final_size_predicted: Optional[int]
    stop_reason: str
    steps_executed: int
    strategy_log: list[tuple[str, int]]  # run-length encoded (strategy, count)
    wall_time: float = field(default=0.0, compare=False)

    STOP_REASONS = (
        "completed",
        "verdict_fixed",
        "verdict_not_fixed",
        "predicted_fixed",
        "horizon",
        "sampler_exhausted",
    )

    def __post_init__(self):
        if self.stop_reason not in self.STOP_REASONS:
            raise ValueError(f"unknown stop_reason {self.stop_reason!r}")
        if self.final_size_exact is not None and self.final_size_predicted is not None:
            raise ValueError("at most one of exact/predicted final size may be set")
