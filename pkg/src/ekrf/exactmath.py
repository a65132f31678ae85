"""Exact combinatorial primitives and their log-domain counterparts.

All exact counts in this package are plain Python ints (arbitrary precision),
so "BigCount" is just ``int``.  The helpers here pin down the conventions the
counting formulas rely on: out-of-range binomials are 0, never an error,
because inclusion-exclusion sums routinely produce such terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

# Relative error budget for a single LogNum operation, documented and tested
# for operands with |ln| <= 2**12 (covers every quantity this package builds).
LOGNUM_OP_RELTOL = 2.0 ** -40


def binom(n: int, k: int) -> int:
    """C(n, k) exactly; 0 when k < 0 or k > n.  Requires n >= 0."""
    if n < 0:
        raise ValueError(f"binom: n must be nonnegative, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def falling(n: int, k: int) -> int:
    """Falling factorial n(n-1)...(n-k+1); 1 when k == 0, 0 when k > n."""
    if n < 0 or k < 0:
        raise ValueError(f"falling: arguments must be nonnegative, got ({n}, {k})")
    if k > n:
        return 0
    return math.perm(n, k)


def log_of_int(x: int) -> float:
    """Natural log of a positive int, accurate to ~1 ulp even for huge values."""
    if x <= 0:
        raise ValueError("log_of_int: argument must be positive")
    nbits = x.bit_length()
    if nbits <= 900:
        return math.log(x)
    shift = nbits - 900
    return math.log(x >> shift) + shift * math.log(2.0)


_MP_DPS = 40


def log_binom(n: int, k: int) -> "LogNum":
    """ln C(n, k) as a LogNum, within 1e-9 absolute for n <= 10**9.

    Double-precision lgamma differences lose too many digits at large n, so
    this goes through mpmath's loggamma at 40 significant digits.
    """
    if not (0 <= k <= n):
        raise ValueError(f"log_binom: need 0 <= k <= n, got ({n}, {k})")
    if k == 0 or k == n:
        return LogNum(0.0)
    if n <= 1000:
        return LogNum(log_of_int(math.comb(n, k)))
    with mpmath.workdps(_MP_DPS):
        val = (
            mpmath.loggamma(n + 1)
            - mpmath.loggamma(k + 1)
            - mpmath.loggamma(n - k + 1)
        )
        return LogNum(float(val))


@dataclass(frozen=True)
class LogNum:
    """A nonnegative quantity stored as its natural log; ln = -inf means zero.

    Each arithmetic operation introduces relative error at most
    LOGNUM_OP_RELTOL in the represented value (tested for |ln| <= 2**12;
    beyond that the float64 ulp of ln itself becomes the limit).
    """

    ln: float

    @classmethod
    def from_float(cls, x: float) -> "LogNum":
        if x < 0:
            raise ValueError("LogNum represents nonnegative quantities")
        return cls(-math.inf if x == 0 else math.log(x))

    @classmethod
    def from_int(cls, x: int) -> "LogNum":
        if x < 0:
            raise ValueError("LogNum represents nonnegative quantities")
        return cls(-math.inf if x == 0 else log_of_int(x))

    @property
    def is_zero(self) -> bool:
        return self.ln == -math.inf

    def to_float(self) -> float:
        """The represented value as a float (may overflow to inf)."""
        if self.is_zero:
            return 0.0
        try:
            return math.exp(self.ln)
        except OverflowError:
            return math.inf

    def __mul__(self, other: "LogNum") -> "LogNum":
        if self.is_zero or other.is_zero:
            return LogNum(-math.inf)
        return LogNum(self.ln + other.ln)

    def __truediv__(self, other: "LogNum") -> "LogNum":
        if other.is_zero:
            raise ZeroDivisionError("LogNum division by zero")
        if self.is_zero:
            return LogNum(-math.inf)
        return LogNum(self.ln - other.ln)

    def __add__(self, other: "LogNum") -> "LogNum":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        hi, lo = (self.ln, other.ln) if self.ln >= other.ln else (other.ln, self.ln)
        return LogNum(hi + math.log1p(math.exp(lo - hi)))

    def pow_int(self, k: int) -> "LogNum":
        if k < 0:
            raise ValueError("pow_int: nonnegative exponents only")
        if k == 0:
            return LogNum(0.0)
        if self.is_zero:
            return LogNum(-math.inf)
        return LogNum(self.ln * k)

    def ratio_to(self, other: "LogNum") -> float:
        """self/other as a float, exact-ish even when both overflow floats."""
        return (self / other).to_float()

    def __lt__(self, other: "LogNum") -> bool:
        return self.ln < other.ln

    def __le__(self, other: "LogNum") -> bool:
        return self.ln <= other.ln
