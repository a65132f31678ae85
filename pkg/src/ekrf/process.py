"""The trial driver: grow one family, detect phases, render a verdict.

Running the raw process to candidate exhaustion takes on the order of
C(n-1, r-1) steps, which is only feasible for tiny universes.  The driver
therefore supports two stopping modes:

  exact_completion  run until A(H_t) is empty (pool-feasible universes only),
                    with an exact early-verdict shortcut that finishes the
                    count analytically once the outcome is forced;
  structural        stop at an exact verdict, a prediction (degree threshold
                    reached and the residual ratio of candidates avoiding the
                    dominant vertex below eps_fix), or a step horizon.

Verdict rules (a) and (b) are exact, never heuristic:
  (a) empty common intersection: no vertex can ever be in every edge, so the
      final family cannot fix anything -- NotFixed, final.
  (b) some common vertex x is in every remaining candidate: every future
      edge will contain x and the final family is exactly the meet-all
      family, of size nu_all(t) = C(n-1, r-1) -- Fixed, with exact size.
Rule (c) is explicitly a prediction and is labeled as such.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import (
    ProcessState,
    TrialRecord,
    Verdict,
    apply_edge,
)
from .counting import (
    DEFAULT_IE_CAP,
    CapError,
    ConstraintInstance,
    nu_all,
    nu_emp,
)
from .exactmath import binom
from .sampler import (
    RejectionCapReached,
    RngStream,
    SamplerStrategy,
    auto_dispatch,
    sample_next,
    _pool_plan,
)

logger = logging.getLogger("ekrf")

EXACT_COMPLETION = "exact_completion"
STRUCTURAL = "structural"


def default_delta0(n: int, r: int) -> int:
    """Degree threshold floor(sqrt(r / n^(1/3))), clamped to at least 1."""
    return max(1, math.floor(math.sqrt(r / n ** (1.0 / 3.0))))


@dataclass
class StoppingPolicy:
    """When a trial stops and what it reports.

    t_max None means the mode default: unlimited for exact_completion, the
    inclusion-exclusion cap for structural (beyond it no verdict can be
    evaluated anyway).  delta_stop None means the default degree threshold
    default_delta0(n, r).
    """

    mode: str = STRUCTURAL
    t_max: Optional[int] = None
    delta_stop: Optional[int] = None
    eps_fix: float = 1e-6
    continue_after_verdict: bool = False

    def __post_init__(self):
        if self.mode not in (EXACT_COMPLETION, STRUCTURAL):
            raise ValueError(f"unknown stopping mode {self.mode!r}")


@dataclass
class TrialConfig:
    """Everything a single trial needs (echoed into its TrialRecord)."""

    n: int
    r: int
    strategy: SamplerStrategy = field(default_factory=SamplerStrategy)
    stopping: StoppingPolicy = field(default_factory=StoppingPolicy)

    def resolved_delta_stop(self) -> int:
        if self.stopping.delta_stop is not None:
            return self.stopping.delta_stop
        return default_delta0(self.n, self.r)

    def resolved_t_max(self) -> Optional[int]:
        if self.stopping.t_max is not None:
            return self.stopping.t_max
        return None if self.stopping.mode == EXACT_COMPLETION else self.strategy.ie_cap


def regime_warnings(n: int, r: int) -> list[str]:
    """Out-of-regime notes (logged, never fatal)."""
    notes = []
    if r > n / 2:
        notes.append(f"r={r} exceeds n/2={n / 2:.0f}: every pair of r-sets meets")
    third = n ** (1.0 / 3.0)
    window_hi = n ** (5.0 / 12.0)
    if not (third <= r <= window_hi):
        notes.append(
            f"r={r} outside the analyzed window [n^(1/3), n^(5/12)] = "
            f"[{third:.1f}, {window_hi:.1f}]"
        )
    return notes


def nu_containing(state: ProcessState, x: int, ie_cap: int = DEFAULT_IE_CAP) -> int:
    """Exact number of r-sets containing x that meet every edge: nu_all on
    the reduced instance (edges containing x are satisfied automatically)."""
    inst = ConstraintInstance.of(state.n, state.r, state.edges, required_vertex=x)
    return nu_all(inst, ie_cap)


def _exact_rules(state: ProcessState, counts: "_StepCounts") -> Optional[Verdict]:
    """Rules (a) and (b); None when neither applies."""
    if state.t == 0:
        return None
    if not state.common_intersection:
        return Verdict(Verdict.NOT_FIXED)
    star = binom(state.n - 1, state.r - 1)
    total = counts.nu_all_value()
    if total is not None and total == star:
        x = counts.star_vertex()
        if x is not None:
            return Verdict(Verdict.FIXED, vertex=x, size=total)
    return None


class _StepCounts:
    """Per-step exact counts, computed lazily and shared between the
    dispatcher and the verdict rules.  Falls back to pool tallies when the
    inclusion-exclusion cap is out of reach."""

    def __init__(self, state: ProcessState, strategy: SamplerStrategy):
        self.state = state
        self.strategy = strategy
        self._nu_all: Optional[int] = None
        self._have_nu_all = False

    def _pool(self):
        plan = self.state._plans.get("pool")
        if plan is None:
            return None
        if plan.t != self.state.t:
            plan = _pool_plan(self.state, self.strategy)
        return plan

    def nu_all_value(self) -> Optional[int]:
        if self._have_nu_all:
            return self._nu_all
        self._have_nu_all = True
        pool = self._pool()
        if pool is not None:
            self._nu_all = pool.size() + self.state.t
        else:
            try:
                self._nu_all = nu_all(
                    ConstraintInstance.of(
                        self.state.n, self.state.r, self.state.edges
                    ),
                    self.strategy.ie_cap,
                )
            except CapError:
                self._nu_all = None
        return self._nu_all

    def star_vertex(self) -> Optional[int]:
        """A common vertex contained in every candidate, if one exists."""
        pool = self._pool()
        for x in sorted(self.state.common_intersection):
            if pool is not None:
                if pool.all_contain(x):
                    return x
            else:
                # all edges contain x, so nu_containing(x) = C(n-1, r-1);
                # equality with nu_all means every candidate contains x.
                if self.nu_all_value() == binom(self.state.n - 1, self.state.r - 1):
                    return x
        return None

    def residual_for(self, v: int) -> Optional[tuple[float, int]]:
        """(nu_B / nu_all, tbar) for vertex v; None when uncomputable."""
        total = self.nu_all_value()
        if total is None or total == 0:
            return None
        try:
            with_v = nu_containing(self.state, v, self.strategy.ie_cap)
        except CapError:
            return None
        tbar = sum(1 for e in self.state.edges if v not in e)
        residual = float(Fraction(total - with_v, total))
        return residual, tbar


def _prediction_rule(
    state: ProcessState,
    policy: StoppingPolicy,
    strategy: SamplerStrategy,
    counts: "_StepCounts",
) -> Optional[Verdict]:
    """Rule (c): a dominant vertex has reached the degree threshold and the
    exact fraction of candidates avoiding it is below eps_fix.  The predicted
    size is tbar + (r-sets containing v meeting the tbar non-v edges), which
    equals tbar + final_family_size(n, r, tbar) whenever the non-v edges are
    simple with distinct witnesses, and stays exact for the realized
    configuration when they are not."""
    delta_stop = (
        policy.delta_stop
        if policy.delta_stop is not None
        else default_delta0(state.n, state.r)
    )
    if state.flags.maxdeg < delta_stop:
        return None
    for v in state.flags.maxdeg_vertices:
        got = counts.residual_for(v)
        if got is None:
            continue
        residual, tbar = got
        if residual <= policy.eps_fix:
            predicted = tbar + nu_containing(state, v, strategy.ie_cap)
            return Verdict(
                Verdict.PREDICTED_FIXED,
                vertex=v,
                size=predicted,
                residual_ratio=residual,
            )
    return None


def verdict(
    state: ProcessState,
    policy: Optional[StoppingPolicy] = None,
    strategy: Optional[SamplerStrategy] = None,
    counts: Optional[_StepCounts] = None,
) -> Verdict:
    """Classify the current state.

    Rule (b) Fixed is exact and takes precedence.  The prediction rule (c)
    is consulted before the NotFixed rule (a) because the typical endgame
    (a dominant vertex plus a few earlier edges avoiding it) has an empty
    common intersection: NotFixed correctly reports that the final family
    will not be a full star, while PredictedFixed reports the structural
    outcome, which is the more informative verdict when both hold.
    """
    policy = policy or StoppingPolicy()
    strategy = strategy or SamplerStrategy()
    counts = counts or _StepCounts(state, strategy)
    if state.t == 0:
        return Verdict(Verdict.UNDETERMINED)
    exact = _exact_rules(state, counts)
    if exact is not None and exact.kind == Verdict.FIXED:
        return exact
    predicted = _prediction_rule(state, policy, strategy, counts)
    if predicted is not None:
        return predicted
    if exact is not None:
        return exact
    return Verdict(Verdict.UNDETERMINED)


@dataclass
class StepProfile:
    """Exact conditional probabilities for the next step, computed from the
    concrete state (closed-form main term echoed when the idealized
    structure actually holds)."""

    nu_all: int
    pool_size: int
    keeps_simple_maxdeg2: int
    keeps_simple_maxdeg2_prob: float
    nu_emp_closed_form: Optional[int]
    v: Optional[int]
    hits_v: Optional[int]
    hits_v_prob: Optional[float]
    avoids_v: Optional[int]
    avoids_v_prob: Optional[float]


def _concrete_keeps_simple_maxdeg2(state: ProcessState) -> int:
    """Exact count of candidates meeting every edge in one degree-1 vertex
    with the rest untouched (keeps the family simple with max degree <= 2).

    After excluding degree->=2 vertices the per-edge choice sets are
    disjoint, so the count factorizes."""
    if state.r < 2 or state.t > state.r:
        return 0
    if not state.flags.is_simple or state.flags.maxdeg > 2:
        return 0
    prod = 1
    for e in state.edges:
        prod *= sum(1 for v in e if state.degree[v] == 1)
        if prod == 0:
            return 0
    free = state.n - len(state.degree)
    return prod * binom(free, state.r - state.t)


def step_probability_profile(
    state: ProcessState,
    v: Optional[int] = None,
    ie_cap: int = DEFAULT_IE_CAP,
) -> StepProfile:
    """Exact next-step ratios on the concrete state.

    v defaults to the distinguished vertex when one exists; the hit/avoid
    fields are omitted when no vertex is designated.  All ratios use the
    candidate pool (nu_all minus chosen edges) as denominator.
    """
    total = nu_all(ConstraintInstance.of(state.n, state.r, state.edges), ie_cap)
    pool = total - state.t
    keeps = _concrete_keeps_simple_maxdeg2(state)
    closed: Optional[int] = None
    t = state.t
    if (
        state.flags.is_simple
        and state.flags.maxdeg <= 2
        and t <= state.r
        and sum(1 for d in state.degree.values() if d == 2) == t * (t - 1) // 2
        and t * (state.r - t + 1) + t * (t - 1) // 2 <= state.n
    ):
        closed = nu_emp(state.n, state.r, t)
    if v is None:
        v = state.flags.distinguished_v
    hits = hits_p = avoids = avoids_p = None
    if v is not None:
        with_v = nu_containing(state, v, ie_cap)
        chosen_with_v = state.degree.get(v, 0)
        hits = with_v - chosen_with_v
        avoids = pool - hits
        if pool > 0:
            hits_p = hits / pool
            avoids_p = avoids / pool
    return StepProfile(
        nu_all=total,
        pool_size=pool,
        keeps_simple_maxdeg2=keeps,
        keeps_simple_maxdeg2_prob=(keeps / pool) if pool > 0 else 0.0,
        nu_emp_closed_form=closed,
        v=v,
        hits_v=hits,
        hits_v_prob=hits_p,
        avoids_v=avoids,
        avoids_v_prob=avoids_p,
    )


class TrialError(RuntimeError):
    """A trial failed; carries the replay context."""

    def __init__(self, message: str, config: "TrialConfig", seed: int, edges):
        super().__init__(
            f"{message} [replay: n={config.n} r={config.r} seed={seed} "
            f"edges_so_far={list(edges)}]"
        )
        self.config = config
        self.seed = seed
        self.edges = list(edges)


def run_trial(config: TrialConfig, seed: int, trial_index: int = 0) -> TrialRecord:
    """Run one trial of the process under the configured stopping policy."""
    n, r = config.n, config.r
    policy = config.stopping
    strategy = config.strategy
    if policy.mode == EXACT_COMPLETION:
        if math.comb(n, r) > strategy.pool_cap:
            raise ValueError(
                f"exact_completion needs C(n,r) <= pool_cap, got C({n},{r})"
            )
    for note in regime_warnings(n, r):
        logger.warning("trial %d: %s", trial_index, note)

    t_start = time.perf_counter()
    delta_stop = config.resolved_delta_stop()
    t_max = config.resolved_t_max()
    state = ProcessState.empty(n, r, delta0_target=delta_stop)
    rng = RngStream(seed)
    strategy_log: list[tuple[str, int]] = []
    simple_at_t4: Optional[bool] = None
    unique_v_at_t4: Optional[bool] = None
    t3_multiplicity: Optional[int] = None
    final_verdict = Verdict(Verdict.UNDETERMINED)
    stop_reason = None
    final_exact: Optional[int] = None
    final_pred: Optional[int] = None

    def log_strategy(kind: str) -> None:
        if strategy_log and strategy_log[-1][0] == kind:
            strategy_log[-1] = (kind, strategy_log[-1][1] + 1)
        else:
            strategy_log.append((kind, 1))

    try:
        while True:
            if t_max is not None and state.t >= t_max:
                stop_reason = "horizon"
                if state.t > 0 and not state.common_intersection:
                    final_verdict = Verdict(Verdict.NOT_FIXED)
                break
            kind = strategy.kind
            if kind == "auto":
                if policy.mode == EXACT_COMPLETION:
                    kind = "pool"
                else:
                    kind = auto_dispatch(state, strategy)
            try:
                edge = sample_next(state, rng, strategy, resolved=kind)
            except RejectionCapReached:
                if strategy.kind == "auto" and state.t <= strategy.ie_cap:
                    kind = "structured"
                    edge = sample_next(state, rng, strategy, resolved=kind)
                else:
                    raise
            if edge is None:
                # A(H_t) is empty: the process output is the current family.
                stop_reason = (
                    "completed" if policy.mode == EXACT_COMPLETION else "sampler_exhausted"
                )
                if state.common_intersection:
                    x = min(state.common_intersection)
                    final_verdict = Verdict(Verdict.FIXED, vertex=x, size=state.t)
                else:
                    final_verdict = Verdict(Verdict.NOT_FIXED)
                final_exact = state.t
                break
            log_strategy(kind)
            apply_edge(state, edge)

            if t3_multiplicity is None and state.phases.t3 == state.t:
                t3_multiplicity = len(state._high_degree)
            if simple_at_t4 is None and state.phases.t4 == state.t:
                simple_at_t4 = state.flags.is_simple
                unique_v_at_t4 = len(state._high_degree) == 1

            counts = _StepCounts(state, strategy)
            v_now = _exact_rules(state, counts)
            if v_now is not None:
                if policy.continue_after_verdict:
                    continue
                final_verdict = v_now
                if v_now.kind == Verdict.FIXED:
                    stop_reason = "verdict_fixed"
                    final_exact = v_now.size
                else:
                    stop_reason = "verdict_not_fixed"
                break
            if policy.mode == STRUCTURAL:
                v_pred = verdict(state, policy, strategy, counts)
                if v_pred.kind == Verdict.PREDICTED_FIXED:
                    final_verdict = v_pred
                    stop_reason = "predicted_fixed"
                    final_pred = v_pred.size
                    break
    except (CapError, RejectionCapReached, AssertionError, ValueError) as exc:
        raise TrialError(str(exc), config, seed, state.edges) from exc

    wall = time.perf_counter() - t_start
    return TrialRecord(
        n=n,
        r=r,
        seed=seed,
        trial_index=trial_index,
        config=config_as_dict(config),
        phases=state.phases,
        simple_at_t4=simple_at_t4,
        unique_v_at_t4=unique_v_at_t4,
        t3_multiplicity=t3_multiplicity,
        verdict=final_verdict,
        final_size_exact=final_exact,
        final_size_predicted=final_pred,
        stop_reason=stop_reason,
        steps_executed=state.t,
        strategy_log=strategy_log,
        wall_time=wall,
    )


def config_as_dict(config: TrialConfig) -> dict:
    """Stable, JSON-ready echo of the effective trial configuration."""
    return {
        "n": config.n,
        "r": config.r,
        "strategy": config.strategy.kind,
        "mode": config.stopping.mode,
        "t_max": config.stopping.t_max,
        "delta_stop": config.stopping.delta_stop,
        "eps_fix": config.stopping.eps_fix,
        "continue_after_verdict": config.stopping.continue_after_verdict,
        "ie_cap": config.strategy.ie_cap,
        "pool_cap": config.strategy.pool_cap,
        "rejection_cap": config.strategy.attempt_cap,
        "rejection_floor": config.strategy.rejection_floor,
    }


def config_from_dict(d: dict) -> TrialConfig:
    strategy = SamplerStrategy(
        kind=d["strategy"],
        attempt_cap=d["rejection_cap"],
        ie_cap=d["ie_cap"],
        pool_cap=d["pool_cap"],
        rejection_floor=d["rejection_floor"],
    )
    stopping = StoppingPolicy(
        mode=d["mode"],
        t_max=d["t_max"],
        delta_stop=d["delta_stop"],
        eps_fix=d["eps_fix"],
        continue_after_verdict=d["continue_after_verdict"],
    )
    return TrialConfig(n=d["n"], r=d["r"], strategy=strategy, stopping=stopping)
