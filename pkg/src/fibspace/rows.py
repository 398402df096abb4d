"""Rows of infinite matrices: the convergence gate and the dual transform.

The dual transform of a row a is the row with entries
a~_k = sum_{j>=k} f_{j+1}^2 / (f_k f_{k+1}) a_j.  The weights grow like
phi^{2j}, so the sum only exists when a decays strictly faster than
phi^{-2}.  Finite-support rows always qualify; geometric rows are decided
by an exact integer comparison of |r| against (3 - sqrt 5)/2; arbitrary
generator rows must declare a decay certificate or are refused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple, Union

from .errors import ConvergenceGateError
from .fibcore import fib
from .sequences import (
    ExponentPair,
    Scalar,
    Seq,
    _as_exponent,
    fib_diff_inverse_transform,
    fib_diff_transform,
)

# ---------------------------------------------------------------------------
# Row kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteRow:
    """A finitely supported row stored as a dense prefix (trailing zeros trimmed)."""

    coeffs: tuple
    exact: bool

    @property
    def support_max(self) -> int:
        return len(self.coeffs) - 1

    def value(self, j: int) -> Scalar:
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return Fraction(0) if self.exact else 0.0


def finite_row(values, exact: Optional[bool] = None) -> FiniteRow:
    vals = list(values)
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for v in vals)
    vals = [Fraction(v) for v in vals] if exact else [float(v) for v in vals]
    while vals and vals[-1] == 0:
        vals.pop()
    return FiniteRow(tuple(vals), exact)


@dataclass(frozen=True)
class GeometricRow:
    """Row a_j = c * r^j with exact rational parameters."""

    c: Fraction
    r: Fraction

    def value(self, j: int) -> Fraction:
        return self.c * self.r ** j


@dataclass(frozen=True)
class DecayBound:
    """Declared certificate |a_j| <= coeff * rho^j."""

    coeff: Fraction
    rho: Fraction

    def __post_init__(self):
        if self.coeff < 0 or self.rho < 0:
            raise ValueError("decay bound parameters must be nonnegative")


@dataclass(frozen=True)
class GeneratorRow:
    """A row materialized from a generator up to a horizon.

    Without a declared decay bound the dual transform of such a row is an
    ill-posed infinite sum and the gate refuses it.
    """

    values: tuple
    exact: bool
    decay: Optional[DecayBound] = None

    @property
    def support_max(self) -> int:
        return len(self.values) - 1

    def value(self, j: int) -> Scalar:
        if 0 <= j < len(self.values):
            return self.values[j]
        raise ConvergenceGateError(f"generator row has no value at index {j}")


def generator_row(
    fn: Callable[[int], Scalar],
    horizon: int,
    decay: Optional[DecayBound] = None,
    exact: Optional[bool] = None,
) -> GeneratorRow:
    vals = [fn(j) for j in range(horizon + 1)]
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for v in vals)
    vals = [Fraction(v) for v in vals] if exact else [float(v) for v in vals]
    return GeneratorRow(tuple(vals), exact, decay)


Row = Union[FiniteRow, GeometricRow, GeneratorRow]


# ---------------------------------------------------------------------------
# Exact golden-ratio comparisons
# ---------------------------------------------------------------------------


def decays_faster_than_phi_sq(r: Fraction) -> bool:
    """Exact test |r| < (3 - sqrt 5)/2, i.e. phi^2 |r| < 1.

    Reduces to an integer comparison: with |r| = a/b the condition is
    3b - 2a > 0 and (3b - 2a)^2 > 5 b^2.  Equality cannot occur for
    rational r.
    """
    a = abs(r.numerator)
    b = r.denominator
    t = 3 * b - 2 * a
    return t > 0 and t * t > 5 * b * b


def geometric_weight_total(r: Fraction) -> Fraction:
    """Exact value of sum_{j>=0} f_{j+1}^2 r^j for phi^2 |r| < 1.

    The squared Fibonacci numbers satisfy s_{n+3} = 2 s_{n+2} + 2 s_{n+1}
    - s_n, which gives the rational generating function below.
    """
    if not decays_faster_than_phi_sq(r):
        raise ConvergenceGateError(f"series diverges for ratio {r}")
    return (1 + 2 * r - r * r) / (1 - 2 * r - 2 * r * r + r ** 3)


# ---------------------------------------------------------------------------
# Convergence gate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateResult:
    passed: bool
    reason: str
    witness: Optional[Tuple[int, int]] = None


def _divergence_witness(value_at: Callable[[int], float], scan: int) -> Tuple[int, int]:
    """First consecutive index pair whose weighted terms stop shrinking."""
    prev = None
    for j in range(scan + 1):
        t = abs(float(fib(j + 1)) ** 2 * value_at(j))
        if prev is not None and prev > 0 and t >= prev:
            return (j - 1, j)
        prev = t
    return (scan - 1, scan)


def convergence_gate(row: Row, scan: int = 60) -> GateResult:
    """Decide whether the dual transform of `row` is a convergent sum."""
    if isinstance(row, FiniteRow):
        return GateResult(True, "finite support")
    if isinstance(row, GeometricRow):
        if row.c == 0:
            return GateResult(True, "zero row")
        if decays_faster_than_phi_sq(row.r):
            return GateResult(True, f"ratio {row.r} decays faster than phi^-2")
        witness = _divergence_witness(lambda j: float(row.c) * float(row.r) ** j, scan)
        return GateResult(
            False,
            f"ratio {row.r} does not beat the phi^2 growth of the weights",
            witness,
        )
    if isinstance(row, GeneratorRow):
        if row.decay is None:
            return GateResult(
                False,
                "generator row carries no declared decay bound",
                (max(row.support_max - 1, 0), row.support_max),
            )
        if row.decay.coeff == 0 or decays_faster_than_phi_sq(row.decay.rho):
            return GateResult(True, f"declared decay rho={row.decay.rho} passes")
        witness = _divergence_witness(
            lambda j: float(row.decay.coeff) * float(row.decay.rho) ** j, scan
        )
        return GateResult(
            False, f"declared decay rho={row.decay.rho} is too slow", witness
        )
    raise TypeError(f"unknown row kind: {type(row)!r}")


def require_gate(row: Row) -> None:
    res = convergence_gate(row)
    if not res.passed:
        raise ConvergenceGateError(
            f"dual transform refused: {res.reason}", witness=res.witness, row=row
        )


# ---------------------------------------------------------------------------
# Dual transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualRow:
    """The transformed row a~, with completeness and per-entry error info.

    complete=True means entries beyond `values` are exactly zero.  For
    truncated listings `tails` (when present) bounds the absolute error
    of each stored entry.
    """

    values: tuple
    exact: bool
    complete: bool
    tails: Optional[tuple] = None

    @property
    def support_max(self) -> int:
        return len(self.values) - 1

    def value(self, k: int) -> Scalar:
        if 0 <= k < len(self.values):
            return self.values[k]
        if self.complete:
            return Fraction(0) if self.exact else 0.0
        raise ConvergenceGateError(f"dual row not materialized at column {k}")


def _finite_dual_values(row: FiniteRow):
    """Suffix-sum evaluation: a~_k = W_k / (f_k f_{k+1}), W_k = sum_{j>=k} f_{j+1}^2 a_j."""
    top = row.support_max
    if top < 0:
        return ()
    if row.exact:
        acc = Fraction(0)
    else:
        acc = 0.0
    suffix = [acc] * (top + 1)
    for j in range(top, -1, -1):
        w = fib(j + 1) ** 2
        acc = acc + (w * row.coeffs[j] if row.exact else float(w) * row.coeffs[j])
        suffix[j] = acc
    out = []
    for k in range(top + 1):
        d = fib(k) * fib(k + 1)
        out.append(suffix[k] / d if row.exact else suffix[k] / float(d))
    return tuple(out)


def geometric_tail_start(r: Fraction, k: int) -> Fraction:
    """Exact value of S_k = sum_{j>=k} f_{j+1}^2 r^j (gate must pass)."""
    s = geometric_weight_total(r)
    for j in range(k):
        s -= fib(j + 1) ** 2 * r ** j
    return s


def _geometric_dual_values(row: GeometricRow, horizon: int):
    vals = []
    s = geometric_weight_total(row.r)
    for k in range(horizon + 1):
        vals.append(row.c * s / (fib(k) * fib(k + 1)))
        s -= fib(k + 1) ** 2 * row.r ** k
    return tuple(vals)


def geometric_dual_entry_bound(row: GeometricRow, k: int) -> Fraction:
    """Exact bound on |a~_k| for a geometric row, monotone halving in k.

    |a~_k| <= |c| S~_k / (f_k f_{k+1}) where S~ uses |r|; consecutive
    bounds shrink by at least 1/2 because f_{k+2} >= 2 f_k.
    """
    s_abs = geometric_tail_start(abs(row.r), k)
    return abs(row.c) * s_abs / (fib(k) * fib(k + 1))


def beta_dual_row(row: Row, horizon: int = 160) -> DualRow:
    """The dual transform of a row; refuses rows that fail the gate."""
    require_gate(row)
    if isinstance(row, FiniteRow):
        return DualRow(_finite_dual_values(row), row.exact, complete=True)
    if isinstance(row, GeometricRow):
        if row.c == 0:
            return DualRow((), True, complete=True)
        return DualRow(_geometric_dual_values(row, horizon), True, complete=False)
    # GeneratorRow with a declared decay bound: truncated values plus
    # entrywise tail bounds from the geometric certificate.
    assert isinstance(row, GeneratorRow)
    top = row.support_max
    trunc = finite_row(row.values, exact=row.exact)
    base = _finite_dual_values(trunc)
    base = base + tuple(
        (Fraction(0) if row.exact else 0.0) for _ in range(len(base), top + 1)
    )
    s_tail = row.decay.coeff * geometric_tail_start(row.decay.rho, top + 1)
    tails = tuple(s_tail / (fib(k) * fib(k + 1)) for k in range(top + 1))
    return DualRow(tuple(base), row.exact, complete=False, tails=tails)


# ---------------------------------------------------------------------------
# Dual norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualNormValue:
    """A dual norm with exactness flag and certificate width."""

    value: Scalar
    tail: Scalar
    exact: bool
    certified: bool
    domain: str

    @property
    def upper(self) -> Scalar:
        return self.value + self.tail

    def __float__(self) -> float:
        return float(self.value)


_DOMAINS = ("l1_fib", "lp_fib", "linf_fib")


def _domain_q(domain: str, p) -> Union[Fraction, float]:
    if domain == "linf_fib":
        return Fraction(1)
    if domain == "l1_fib":
        return math.inf
    ep = _as_exponent(p)
    if ep.is_inf or ep.p == 1:
        raise ValueError("lp_fib requires 1 < p < inf")
    return ep.q


def _abs_power_sum(values, q) -> Tuple[Scalar, bool]:
    if isinstance(q, Fraction) and q == 1 and all(
        isinstance(v, (int, Fraction)) for v in values
    ):
        return sum((abs(v) for v in values), Fraction(0)), True
    qf = float(q)
    return math.fsum(abs(float(v)) ** qf for v in values), False


def dual_norm(row: Row, domain: str, p=None, horizon: int = 160) -> DualNormValue:
    """Norm of the coordinate functional induced by `row` on the given domain.

    domain "linf_fib" sums |a~_k|; "l1_fib" takes sup_k |a~_k|;
    "lp_fib" uses the conjugate-power sum (sum_k |a~_k|^q)^(1/q).
    Certified results satisfy |true - value| <= tail with true >= 0.
    """
    if domain not in _DOMAINS:
        raise ValueError(f"domain must be one of {_DOMAINS}")
    q = _domain_q(domain, p)
    dual = beta_dual_row(row, horizon=horizon)
    vals = dual.values

    # Bounds for the entries beyond the stored prefix, plus the aggregate
    # error of the stored entries themselves (generator rows only).
    unseen_sup = Fraction(0)
    unseen_sum = Fraction(0)
    stored_err_sup = Fraction(0)
    stored_err_sum = Fraction(0)
    certified = True
    if not dual.complete:
        if isinstance(row, GeometricRow):
            head = geometric_dual_entry_bound(row, len(vals))
            unseen_sup = head
            unseen_sum = 2 * head  # entry bounds halve column by column
        elif dual.tails is not None:
            k0 = len(vals)
            s_tail = row.decay.coeff * geometric_tail_start(row.decay.rho, k0)
            head = s_tail / (fib(k0) * fib(k0 + 1))
            unseen_sup = head
            unseen_sum = 2 * head
            stored_err_sup = max(dual.tails, default=Fraction(0))
            stored_err_sum = sum(dual.tails, Fraction(0))
        else:
            certified = False

    if isinstance(q, float) and math.isinf(q):  # sup norm of the dual row
        if dual.exact:
            value: Scalar = max((abs(v) for v in vals), default=Fraction(0))
        else:
            value = max((abs(float(v)) for v in vals), default=0.0)
        tail = stored_err_sup + max(Fraction(0), unseen_sup - value)
        if not dual.exact:
            tail = float(tail)
        return DualNormValue(value, tail, dual.exact, certified, domain)

    if q == 1:
        ssum, exact = _abs_power_sum(vals, Fraction(1))
        tail: Scalar = stored_err_sum + unseen_sum
        if not exact:
            tail = float(tail)
        return DualNormValue(ssum, tail, exact, certified, domain)

    qf = float(q)
    power, _ = _abs_power_sum(vals, q)
    power = float(power)
    tail_power = float(unseen_sup) ** qf / (1.0 - 2.0 ** (-qf)) if unseen_sup else 0.0
    value = power ** (1.0 / qf)
    upper = (power + tail_power) ** (1.0 / qf) + float(stored_err_sum)
    return DualNormValue(value, upper - value, False, certified, domain)


def dual_norm_attainment(row: FiniteRow, domain: str) -> Tuple[Seq, Fraction]:
    """An explicit unit-sphere witness attaining the dual norm exactly.

    For "linf_fib" the witness is the inverse transform of the sign
    pattern of a~; for "l1_fib" it is the inverse transform of the signed
    argmax basis vector.  Returns (witness prefix, |sum_k a_k x_k|).
    """
    if not isinstance(row, FiniteRow) or not row.exact:
        raise ValueError("attainment witnesses need an exact finite row")
    dual = beta_dual_row(row)
    vals = dual.values
    if not vals:
        return Seq.zero(), Fraction(0)
    if domain == "linf_fib":
        y = Seq.dense([1 if v > 0 else (-1 if v < 0 else 0) for v in vals])
    elif domain == "l1_fib":
        k_star = max(range(len(vals)), key=lambda k: abs(vals[k]))
        sign = 1 if vals[k_star] >= 0 else -1
        y = Seq.dense([0] * k_star + [sign])
    else:
        raise ValueError("attainment witnesses implemented for l1_fib and linf_fib")
    top = row.support_max
    x = fib_diff_inverse_transform(y, top)
    achieved = sum(
        (Fraction(row.coeffs[k]) * x.at(k) for k in range(top + 1)), Fraction(0)
    )
    return x, abs(achieved)


def duality_identity_check(row: FiniteRow, x: Seq, horizon: Optional[int] = None) -> Fraction:
    """Exact residual of sum_k a_k x_k = sum_k a~_k y_k with y the transform of x.

    Both sides are evaluated in rational arithmetic; a nonzero residual
    indicates a bug, never rounding noise.
    """
    if not row.exact or not x.exact or not x.finite:
        raise ValueError("identity check runs on exact finite inputs")
    top = row.support_max
    if top < 0:
        return Fraction(0)
    if horizon is not None and horizon < top:
        raise ValueError("horizon must cover the row support")
    lhs = sum(
        (Fraction(row.coeffs[k]) * x.at(k) for k in range(min(top, x.support_max) + 1)),
        Fraction(0),
    )
    y = fib_diff_transform(x, max(top, x.support_max + 1))
    dual = beta_dual_row(row)
    rhs = sum(
        (Fraction(dual.values[k]) * y.at(k) for k in range(len(dual.values))),
        Fraction(0),
    )
    return lhs - rhs
