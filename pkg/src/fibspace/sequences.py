"""Sequences, the difference transform and its inverse, and certified norms.

A `Seq` is either finitely supported (zero beyond its stored prefix) or a
truncated view of a generator-backed sequence.  Truncated sequences may
carry a declared tail certificate; norms of truncated sequences without
one are flagged uncertified rather than silently treated as finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from .errors import HorizonError, MAX_HORIZON
from .fibcore import fib_diff_entry, fib_diff_entry_float, fib_diff_inv_entry, fib_diff_inv_entry_float

Scalar = Union[int, Fraction, float]

INF = math.inf


# ---------------------------------------------------------------------------
# Tail certificates
# ---------------------------------------------------------------------------


class TailBound:
    """Interface for declared tail mass beyond an evaluation horizon."""

    def power_sum(self, p: float, n: int) -> float:
        """Upper bound on sum_{k>n} |x_k|^p."""
        raise NotImplementedError

    def sup(self, n: int) -> float:
        """Upper bound on sup_{k>n} |x_k|."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantTail(TailBound):
    """A single user-declared bound, valid for the exponent the user will use."""

    bound: float

    def power_sum(self, p: float, n: int) -> float:
        return float(self.bound)

    def sup(self, n: int) -> float:
        return float(self.bound)


@dataclass(frozen=True)
class GeometricTail(TailBound):
    """Certificate |x_k| <= coeff * ratio^k with 0 <= ratio < 1."""

    coeff: float
    ratio: float

    def __post_init__(self):
        if not (0 <= self.ratio < 1) or self.coeff < 0:
            raise ValueError("geometric tail needs coeff >= 0 and 0 <= ratio < 1")

    def power_sum(self, p: float, n: int) -> float:
        if self.coeff == 0:
            return 0.0
        rp = self.ratio ** p
        return (self.coeff * self.ratio ** (n + 1)) ** p / (1.0 - rp)

    def sup(self, n: int) -> float:
        return self.coeff * self.ratio ** (n + 1)


@dataclass(frozen=True)
class DiffImageTail(TailBound):
    """Tail certificate for the difference transform of a certified sequence.

    Uses |y_k| <= |x_k| + 2|x_{k-1}| (the triangle's weights are bounded
    by 1 and 2) and convexity of t -> t^p.
    """

    source: TailBound

    def power_sum(self, p: float, n: int) -> float:
        s = self.source
        return 2.0 ** (p - 1) * (s.power_sum(p, n) + 2.0 ** p * s.power_sum(p, n - 1))

    def sup(self, n: int) -> float:
        return self.source.sup(n) + 2.0 * self.source.sup(n - 1)


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------


def _coerce_values(values: Iterable[Scalar], exact: Optional[bool]):
    vals = list(values)
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for v in vals)
    if exact:
        out = tuple(Fraction(v) for v in vals)
    else:
        out = tuple(float(v) for v in vals)
    return out, exact


@dataclass(frozen=True)
class Seq:
    """An immutable real sequence: a stored prefix plus tail semantics.

    finite=True means the sequence is exactly zero beyond the prefix;
    finite=False means the prefix is a truncation of something longer
    (evaluation past it raises HorizonError) with `tail` as the optional
    declared certificate for the unseen part.
    """

    coeffs: tuple
    exact: bool
    finite: bool
    tail: Optional[TailBound] = None

    @staticmethod
    def dense(values: Iterable[Scalar], exact: Optional[bool] = None) -> "Seq":
        vals, ex = _coerce_values(values, exact)
        while vals and vals[-1] == 0:
            vals = vals[:-1]
        return Seq(coeffs=vals, exact=ex, finite=True)

    @staticmethod
    def from_generator(
        fn: Callable[[int], Scalar],
        horizon: int,
        tail: Optional[TailBound] = None,
        exact: Optional[bool] = None,
    ) -> "Seq":
        if not (0 <= horizon <= MAX_HORIZON):
            raise HorizonError(f"horizon {horizon} outside [0, {MAX_HORIZON}]")
        vals, ex = _coerce_values((fn(k) for k in range(horizon + 1)), exact)
        return Seq(coeffs=vals, exact=ex, finite=False, tail=tail)

    @staticmethod
    def zero() -> "Seq":
        return Seq(coeffs=(), exact=True, finite=True)

    @property
    def support_max(self) -> int:
        """Largest stored index (-1 when empty)."""
        return len(self.coeffs) - 1

    @property
    def horizon(self) -> Optional[int]:
        return None if self.finite else len(self.coeffs) - 1

    def at(self, k: int) -> Scalar:
        if k < 0:
            raise ValueError("negative index")
        if k < len(self.coeffs):
            return self.coeffs[k]
        if self.finite:
            return Fraction(0) if self.exact else 0.0
        raise HorizonError(
            f"index {k} beyond declared horizon {len(self.coeffs) - 1}"
        )

    def prefix(self, n: int) -> tuple:
        return tuple(self.at(k) for k in range(n + 1))

    def scale(self, lam: Scalar) -> "Seq":
        if self.exact and isinstance(lam, (int, Fraction)):
            vals = tuple(Fraction(lam) * v for v in self.coeffs)
            return Seq(vals, True, self.finite, self.tail)
        vals = tuple(float(lam) * float(v) for v in self.coeffs)
        return Seq(vals, False, self.finite, self.tail)


def basis_seq(k: int) -> Seq:
    """The k-th standard unit sequence."""
    return Seq.dense([0] * k + [1])


def ones_seq(n: int) -> Seq:
    """All-ones sequence truncated as finite support 0..n."""
    return Seq.dense([1] * (n + 1))


# ---------------------------------------------------------------------------
# Exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentPair:
    """An exponent p in [1, inf] with its conjugate q, 1/p + 1/q = 1."""

    p: Union[Fraction, float]

    def __post_init__(self):
        if self.is_inf:
            return
        if not isinstance(self.p, Fraction):
            object.__setattr__(self, "p", Fraction(self.p))
        if self.p < 1:
            raise ValueError(f"exponent must satisfy p >= 1, got {self.p}")

    @staticmethod
    def parse(text: Union[str, int, Fraction, float]) -> "ExponentPair":
        if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
            return ExponentPair(INF)
        if isinstance(text, float) and math.isinf(text):
            return ExponentPair(INF)
        return ExponentPair(Fraction(text))

    @property
    def is_inf(self) -> bool:
        return isinstance(self.p, float) and math.isinf(self.p)

    @property
    def q(self) -> Union[Fraction, float]:
        """Conjugate exponent, with q = inf for p = 1 and q = 1 for p = inf."""
        if self.is_inf:
            return Fraction(1)
        if self.p == 1:
            return INF
        return self.p / (self.p - 1)

    def __str__(self) -> str:
        return "inf" if self.is_inf else str(self.p)


def as_exponent(p) -> ExponentPair:
    return p if isinstance(p, ExponentPair) else ExponentPair.parse(p)


_as_exponent = as_exponent


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def _check_span(x: Seq, n: int) -> None:
    if n < 0 or n > MAX_HORIZON:
        raise HorizonError(f"horizon {n} outside [0, {MAX_HORIZON}]")
    if not x.finite and n > x.support_max:
        raise HorizonError(
            f"transform horizon {n} exceeds the sequence's declared horizon "
            f"{x.support_max}"
        )


def fib_diff_transform(x: Seq, n: int) -> Seq:
    """Apply the difference triangle: y_0 = x_0, y_m = (f_m/f_{m+1}) x_m - (f_{m+1}/f_m) x_{m-1}."""
    _check_span(x, n)
    if x.exact:
        vals = [Fraction(x.at(0))]
        for m in range(1, n + 1):
            vals.append(
                fib_diff_entry(m, m) * x.at(m) + fib_diff_entry(m, m - 1) * x.at(m - 1)
            )
    else:
        vals = [float(x.at(0))]
        for m in range(1, n + 1):
            vals.append(
                fib_diff_entry_float(m, m) * x.at(m)
                + fib_diff_entry_float(m, m - 1) * x.at(m - 1)
            )
    finite_out = x.finite and n >= x.support_max + 1
    tail = None if x.tail is None or finite_out else DiffImageTail(x.tail)
    return Seq(tuple(vals), x.exact, finite_out, tail)


def fib_diff_inverse_transform(y: Seq, n: int) -> Seq:
    """Invert the triangle: x_m = sum_{k<=m} f_{m+1}^2/(f_k f_{k+1}) y_k."""
    _check_span(y, n)
    vals = []
    if y.exact:
        for m in range(n + 1):
            acc = Fraction(0)
            for k in range(min(m, y.support_max) + 1):
                acc += fib_diff_inv_entry(m, k) * y.at(k)
            vals.append(acc)
    else:
        for m in range(n + 1):
            acc = 0.0
            for k in range(min(m, y.support_max) + 1):
                acc += fib_diff_inv_entry_float(m, k) * y.at(k)
            vals.append(acc)
    # The inverse of a finitely supported sequence generally has full
    # support, so the result is always a truncation.
    return Seq(tuple(vals), y.exact, finite=False)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormResult:
    """A norm value with its certificate interval [value, value + tail]."""

    value: Scalar
    tail: Scalar
    exact: bool
    certified: bool

    @property
    def upper(self) -> Scalar:
        return self.value + self.tail

    def __float__(self) -> float:
        return float(self.value)


def seq_norm(x: Seq, p, n: Optional[int] = None) -> NormResult:
    """The p-norm of x over its support (finite) or prefix 0..n (truncated).

    Exact rational values for p in {1, inf} on exact sequences; binary64
    with compensated summation otherwise.  Truncated sequences yield an
    interval via the declared tail certificate, or an uncertified value
    when none was declared.
    """
    ep = _as_exponent(p)
    if n is None:
        n = x.support_max
    if x.finite:
        top = x.support_max
        certified = True
    else:
        _check_span(x, n)
        top = min(n, x.support_max)
        certified = x.tail is not None
    vals = [x.at(k) for k in range(top + 1)]

    if ep.is_inf:
        if x.exact:
            value: Scalar = max((abs(v) for v in vals), default=Fraction(0))
        else:
            value = max((abs(v) for v in vals), default=0.0)
        tail: Scalar = Fraction(0) if x.exact else 0.0
        if not x.finite and x.tail is not None:
            bound = x.tail.sup(top)
            tail = max(0.0, bound - float(value))
        return NormResult(value, tail, x.exact, certified)

    pf = float(ep.p)
    if ep.p == 1 and x.exact:
        value = sum((abs(v) for v in vals), Fraction(0))
        exact = True
    else:
        value = math.fsum(abs(float(v)) ** pf for v in vals) ** (1.0 / pf)
        exact = False
    tail = Fraction(0) if exact else 0.0
    if not x.finite and x.tail is not None:
        extra = x.tail.power_sum(pf, top)
        upper = (float(value) ** pf + extra) ** (1.0 / pf)
        tail = max(0.0, upper - float(value))
        if exact:
            value = float(value)
            exact = False
    return NormResult(value, tail, exact, certified)


def l2_norm_sq(x: Seq, n: Optional[int] = None) -> Fraction:
    """Exact squared 2-norm of an exact sequence prefix."""
    if not x.exact:
        raise ValueError("exact squared norm requires an exact sequence")
    if n is None:
        n = x.support_max
    top = min(n, x.support_max) if not x.finite else x.support_max
    return sum((Fraction(x.at(k)) ** 2 for k in range(top + 1)), Fraction(0))


def fib_diff_norm(x: Seq, p, n: Optional[int] = None) -> NormResult:
    """Norm of x in the difference-transformed space: the p-norm of the transform."""
    if n is None:
        if not x.finite:
            n = x.support_max
        else:
            n = x.support_max + 1 if x.coeffs else 0
    return seq_norm(fib_diff_transform(x, n), p)
