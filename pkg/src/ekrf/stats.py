"""Limit-law evaluation and empirical comparison over trial records.

The theoretical laws:

  t3_tail(alpha)            exp(-alpha^3 / 6), the limit of
                            Pr(t3 >= alpha * r / n^(1/3))
  t4_tail(c)                exp(-c^3 / 6), same for t4
  t4_scaled_exponential(x)  exp(-x), the Exp(1) survival of n*t4^3/(6 r^3)
  fix_probability(c)        1 / (1 + c^3), the limit fixation probability
                            at r = c * n^(1/3)
  t4_gap_geometric(xi)      (r^5 / (n^2 + r^5))^xi, the limit of
                            Pr(t4 > t3 + xi)

All comparisons report (value, standard error, theory) style triples;
pass/fail judgments live only in the acceptance suite, because the laws are
asymptotic and the library must not hard-code finite-n verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import TrialRecord, Verdict

# z-quantile used by the fixed 0.999 chi-square threshold convention.
_Z_999 = 3.0902323061678132


@dataclass(frozen=True)
class LawSpec:
    """A law name plus its parameters; n and r are needed by the laws whose
    formulas involve them (gap law, and threshold scaling at call sites)."""

    law: str
    arg: float
    n: Optional[int] = None
    r: Optional[int] = None

    LAWS = (
        "t3_tail",
        "t4_tail",
        "t4_scaled_exponential",
        "fix_probability",
        "t4_gap_geometric",
    )


def law_value(spec: LawSpec) -> float:
    """Exact value of the law's formula at the spec's argument."""
    if spec.law == "t3_tail" or spec.law == "t4_tail":
        if spec.arg < 0:
            raise ValueError("tail argument must be nonnegative")
        return math.exp(-(spec.arg**3) / 6.0)
    if spec.law == "t4_scaled_exponential":
        if spec.arg < 0:
            raise ValueError("tail argument must be nonnegative")
        return math.exp(-spec.arg)
    if spec.law == "fix_probability":
        if spec.arg < 0:
            raise ValueError("c must be nonnegative")
        return 1.0 / (1.0 + spec.arg**3)
    if spec.law == "t4_gap_geometric":
        if spec.n is None or spec.r is None:
            raise ValueError("t4_gap_geometric needs n and r")
        if spec.arg < 0:
            raise ValueError("xi must be nonnegative")
        ratio = spec.r**5 / (spec.n**2 + spec.r**5)
        return ratio**spec.arg
    raise ValueError(f"unknown law {spec.law!r}")


def empirical_tail(samples: Sequence[float], threshold: float) -> tuple[float, float]:
    """(fraction of samples >= threshold, binomial standard error)."""
    if len(samples) == 0:
        raise ValueError("empirical_tail: empty sample")
    n = len(samples)
    p = sum(1 for s in samples if s >= threshold) / n
    se = math.sqrt(p * (1.0 - p) / n)
    return p, se


def ks_distance(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    """Sup-norm distance between the empirical CDF and a reference CDF."""
    if len(samples) < 30:
        raise ValueError("ks_distance: need at least 30 samples")
    xs = sorted(samples)
    n = len(xs)
    d = 0.0
    for i, x in enumerate(xs):
        fx = cdf(x)
        d = max(d, abs((i + 1) / n - fx), abs(i / n - fx))
    return d


def chi_square_uniform(counts: Sequence[int]) -> tuple[float, int]:
    """Pearson statistic of observed cell counts against the uniform
    expectation; returns (statistic, dof = cells - 1)."""
    k = len(counts)
    if k < 2:
        raise ValueError("chi_square_uniform: need at least 2 cells")
    total = sum(counts)
    if total < 5 * k:
        raise ValueError("chi_square_uniform: need total >= 5x cells")
    if any(c < 0 for c in counts):
        raise ValueError("chi_square_uniform: negative count")
    exp = total / k
    stat = sum((c - exp) ** 2 / exp for c in counts)
    return stat, k - 1


def chi_square_two_sample(
    counts_a: Sequence[int], counts_b: Sequence[int]
) -> tuple[float, int]:
    """Two-sample chi-square homogeneity statistic over shared cells.

    Cells where both samples are empty are dropped; dof = active cells - 1.
    """
    if len(counts_a) != len(counts_b):
        raise ValueError("count vectors must align")
    ka = sum(counts_a)
    kb = sum(counts_b)
    if ka == 0 or kb == 0:
        raise ValueError("both samples must be nonempty")
    sa = math.sqrt(kb / ka)
    sb = math.sqrt(ka / kb)
    stat = 0.0
    cells = 0
    for a, b in zip(counts_a, counts_b):
        if a + b == 0:
            continue
        cells += 1
        stat += (sa * a - sb * b) ** 2 / (a + b)
    if cells < 2:
        raise ValueError("need at least 2 populated cells")
    return stat, cells - 1


def chi2_quantile_999(dof: int) -> float:
    """0.999 quantile of chi-square via the Wilson-Hilferty cube
    approximation (relative error well under 1% for dof >= 5)."""
    if dof < 1:
        raise ValueError("dof must be positive")
    f = 2.0 / (9.0 * dof)
    return dof * (1.0 - f + _Z_999 * math.sqrt(f)) ** 3


def exp1_cdf(x: float) -> float:
    """CDF of the exponential distribution with mean 1."""
    return 1.0 - math.exp(-x) if x > 0 else 0.0


@dataclass
class LawComparison:
    law: str
    parameter: float
    empirical: float
    se: Optional[float]
    theory: float
    n_samples: int


@dataclass
class Summary:
    """Aggregates over a batch of same-configuration trial records."""

    n: int
    r: int
    n_records: int
    fixation_freq: float
    predicted_fix_freq: float
    not_fixed_freq: float
    simple_at_t4_freq: Optional[float]
    unique_v_at_t4_freq: Optional[float]
    gap_is_one_freq: Optional[float]
    mean_steps: float
    ks_t4_exp1: Optional[float]
    comparisons: list[LawComparison]


def _scale(n: int, r: int) -> float:
    return r / n ** (1.0 / 3.0)


def summarize(
    records: Sequence[TrialRecord],
    alphas: Sequence[float] = (1.0, 1.5),
    cs: Sequence[float] = (1.0, 1.5),
    xis: Sequence[int] = (1, 2),
) -> Summary:
    """Aggregate a batch and compare against the laws.

    All records must share (n, r).  Tail comparisons are evaluated at the
    requested alpha/c thresholds; the t4 gap law at the requested xi values.
    """
    if not records:
        raise ValueError("summarize: no records")
    n, r = records[0].n, records[0].r
    if any(rec.n != n or rec.r != r for rec in records):
        raise ValueError("summarize: mixed configurations")
    scale = _scale(n, r)
    t3s = [rec.phases.t3 for rec in records if rec.phases.t3 is not None]
    t4s = [rec.phases.t4 for rec in records if rec.phases.t4 is not None]
    comparisons: list[LawComparison] = []
    for alpha in alphas:
        if t3s:
            emp, se = empirical_tail(t3s, alpha * scale)
            comparisons.append(
                LawComparison(
                    "t3_tail",
                    alpha,
                    emp,
                    se,
                    law_value(LawSpec("t3_tail", alpha)),
                    len(t3s),
                )
            )
    for c in cs:
        if t4s:
            emp, se = empirical_tail(t4s, c * scale)
            comparisons.append(
                LawComparison(
                    "t4_tail", c, emp, se, law_value(LawSpec("t4_tail", c)), len(t4s)
                )
            )
    gaps = [
        rec.phases.t4 - rec.phases.t3
        for rec in records
        if rec.phases.t3 is not None and rec.phases.t4 is not None
    ]
    for xi in xis:
        if gaps:
            emp = sum(1 for g in gaps if g > xi) / len(gaps)
            se = math.sqrt(emp * (1 - emp) / len(gaps))
            comparisons.append(
                LawComparison(
                    "t4_gap_geometric",
                    xi,
                    emp,
                    se,
                    law_value(LawSpec("t4_gap_geometric", xi, n=n, r=r)),
                    len(gaps),
                )
            )
    ks = None
    if len(t4s) >= 30:
        scaled = [n * t**3 / (6.0 * r**3) for t in t4s]
        ks = ks_distance(scaled, exp1_cdf)
    fixed = sum(1 for rec in records if rec.verdict.kind == Verdict.FIXED)
    predicted = sum(
        1 for rec in records if rec.verdict.kind == Verdict.PREDICTED_FIXED
    )
    notfixed = sum(1 for rec in records if rec.verdict.kind == Verdict.NOT_FIXED)
    s4 = [rec.simple_at_t4 for rec in records if rec.simple_at_t4 is not None]
    uv = [rec.unique_v_at_t4 for rec in records if rec.unique_v_at_t4 is not None]
    m = len(records)
    return Summary(
        n=n,
        r=r,
        n_records=m,
        fixation_freq=fixed / m,
        predicted_fix_freq=predicted / m,
        not_fixed_freq=notfixed / m,
        simple_at_t4_freq=(sum(s4) / len(s4)) if s4 else None,
        unique_v_at_t4_freq=(sum(uv) / len(uv)) if uv else None,
        gap_is_one_freq=(sum(1 for g in gaps if g == 1) / len(gaps)) if gaps else None,
        mean_steps=sum(rec.steps_executed for rec in records) / m,
        ks_t4_exp1=ks,
        comparisons=comparisons,
    )
