"""Infinite matrices: dense windows, bands, and parametric families.

A `MatrixFamily` exposes its rows (for the dual transform and operator
application) plus optional closed-form hooks that the compactness engine
uses to certify limits.  Families without closed forms still work, but
their limit quantities stay windowed estimates and verdicts honestly
degrade to "inconclusive".
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

from .errors import ConvergenceGateError, InvariantError
from .fibcore import fib, fib_diff_entry
from .rows import (
    DualRow,
    FiniteRow,
    GeometricRow,
    Row,
    beta_dual_row,
    convergence_gate,
    decays_faster_than_phi_sq,
    dual_norm,
    finite_row,
    geometric_dual_entry_bound,
    geometric_tail_start,
    geometric_weight_total,
)
from .sequences import Scalar, Seq, as_exponent

INF = math.inf


@dataclass(frozen=True)
class CertValue:
    """A numeric claim: value, arithmetic exactness, and certification.

    `certified` means the value (up to `width`) is backed by a closed
    form or a declared residual bound, not just by windowed data.
    """

    value: Scalar
    exact: bool
    certified: bool
    note: str = ""
    width: float = 0.0

    @property
    def is_inf(self) -> bool:
        return isinstance(self.value, float) and math.isinf(self.value)

    def scaled(self, factor) -> "CertValue":
        if self.is_inf:
            value: Scalar = INF if factor != 0 else Fraction(0)
            return CertValue(value, self.exact, self.certified, self.note)
        if self.exact and isinstance(factor, (int, Fraction)):
            return CertValue(Fraction(factor) * self.value, True, self.certified, self.note)
        return CertValue(
            float(factor) * float(self.value),
            False,
            self.certified,
            self.note,
            abs(float(factor)) * self.width,
        )


def _root(value: Scalar, q) -> Tuple[Scalar, bool]:
    """value ** (1/q), staying exact when q == 1."""
    if isinstance(value, float) and math.isinf(value):
        return INF, False
    if q == 1:
        return value, isinstance(value, (int, Fraction))
    return float(value) ** (1.0 / float(q)), False


@dataclass(frozen=True)
class ClosedSeq:
    """A certified scalar sequence: optional pointwise values plus its limit."""

    limit: CertValue
    value_at: Optional[Callable[[int], Scalar]] = None


# ---------------------------------------------------------------------------
# Scalar families (diagonal / cross-row coefficient profiles)
# ---------------------------------------------------------------------------


class ScalarFamily:
    """A parametric scalar sequence with closed-form limit data."""

    exact: bool = True

    def value(self, n: int) -> Scalar:
        raise NotImplementedError

    def abs_limit(self) -> CertValue:
        raise NotImplementedError

    def signed_limit(self) -> Optional[CertValue]:
        raise NotImplementedError

    def abs_sup(self) -> CertValue:
        raise NotImplementedError

    def abs_tail_sup(self, m: int) -> Scalar:
        """sup_{n >= m} |v_n|."""
        raise NotImplementedError

    def abs_tail_power_sum(self, m: int, p) -> CertValue:
        """sum_{n >= m} |v_n|^p (may be +inf)."""
        raise NotImplementedError

    def max_subset_tail_sum(self, m: int) -> CertValue:
        """sup over finite N subset of (m, inf) of |sum_{n in N} v_n|."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class GeometricScalars(ScalarFamily):
    """v_n = c * r^n with exact rational parameters."""

    c: Fraction
    r: Fraction
    exact: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "r", Fraction(self.r))

    def value(self, n: int) -> Fraction:
        return self.c * self.r ** n

    def abs_limit(self) -> CertValue:
        if self.c == 0 or abs(self.r) < 1:
            return CertValue(Fraction(0), True, True)
        if abs(self.r) == 1:
            return CertValue(abs(self.c), True, True)
        return CertValue(INF, False, True, "|r| > 1: values diverge")

    def signed_limit(self) -> Optional[CertValue]:
        if self.c == 0 or abs(self.r) < 1:
            return CertValue(Fraction(0), True, True)
        if self.r == 1:
            return CertValue(self.c, True, True)
        return None

    def abs_sup(self) -> CertValue:
        if self.c == 0 or abs(self.r) <= 1:
            return CertValue(abs(self.c), True, True)
        return CertValue(INF, False, True, "|r| > 1: unbounded")

    def abs_tail_sup(self, m: int) -> Scalar:
        if self.c == 0:
            return Fraction(0)
        if abs(self.r) <= 1:
            return abs(self.c) * abs(self.r) ** m
        return INF

    def abs_tail_power_sum(self, m: int, p) -> CertValue:
        if self.c == 0:
            return CertValue(Fraction(0), True, True)
        rho = abs(self.r)
        if rho >= 1:
            return CertValue(INF, False, True, "tail power sums diverge")
        pf = Fraction(p) if not (isinstance(p, float) and math.isinf(p)) else None
        if pf is None:
            raise ValueError("power sums need finite p")
        if pf.denominator == 1:
            k = pf.numerator
            return CertValue(
                (abs(self.c) * rho ** m) ** k / (1 - rho ** k), True, True
            )
        pff = float(pf)
        val = (float(abs(self.c)) * float(rho) ** m) ** pff / (1.0 - float(rho) ** pff)
        return CertValue(val, False, True)

    def max_subset_tail_sum(self, m: int) -> CertValue:
        if self.c == 0:
            return CertValue(Fraction(0), True, True)
        if abs(self.r) >= 1:
            return CertValue(INF, False, True, "subset sums unbounded")
        if self.r >= 0:
            return CertValue(
                abs(self.c) * self.r ** (m + 1) / (1 - self.r), True, True
            )
        # Alternating signs: the best subset takes every term of one sign.
        rho2 = self.r * self.r
        first = abs(self.c) * abs(self.r) ** (m + 1) / (1 - rho2)
        second = abs(self.c) * abs(self.r) ** (m + 2) / (1 - rho2)
        return CertValue(max(first, second), True, True)

    def describe(self) -> str:
        return f"{self.c} * ({self.r})^n"


@dataclass(frozen=True)
class PowerScalars(ScalarFamily):
    """v_n = c * (n+1)^(-s) with rational c and s >= 0."""

    c: Fraction
    s: Fraction
    exact: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "s", Fraction(self.s))
        if self.s < 0:
            raise ValueError("power family needs s >= 0")
        object.__setattr__(self, "exact", self.s.denominator == 1)

    def value(self, n: int) -> Scalar:
        if self.exact:
            return self.c / Fraction((n + 1) ** self.s.numerator)
        return float(self.c) * (n + 1) ** (-float(self.s))

    def abs_limit(self) -> CertValue:
        if self.c == 0 or self.s > 0:
            return CertValue(Fraction(0), True, True)
        return CertValue(abs(self.c), True, True)

    def signed_limit(self) -> Optional[CertValue]:
        if self.c == 0 or self.s > 0:
            return CertValue(Fraction(0), True, True)
        return CertValue(self.c, True, True)

    def abs_sup(self) -> CertValue:
        return CertValue(abs(self.c), True, True)

    def abs_tail_sup(self, m: int) -> Scalar:
        if self.exact:
            return abs(self.c) / Fraction((m + 1) ** self.s.numerator)
        return float(abs(self.c)) * (m + 1) ** (-float(self.s))

    def abs_tail_power_sum(self, m: int, p) -> CertValue:
        if self.c == 0:
            return CertValue(Fraction(0), True, True)
        a = float(Fraction(p) * self.s)
        if a <= 1:
            return CertValue(INF, False, True, "tail power sums diverge (p*s <= 1)")
        cpow = float(abs(self.c)) ** float(p)
        # Partial sum plus integral bracket for the remainder.
        cut = m + 1000
        partial = math.fsum((j + 1) ** (-a) for j in range(m, cut))
        lo = (cut + 1) ** (1.0 - a) / (a - 1.0)
        hi = cut ** (1.0 - a) / (a - 1.0)
        return CertValue(
            cpow * (partial + 0.5 * (lo + hi)),
            False,
            True,
            width=cpow * 0.5 * (hi - lo),
        )

    def max_subset_tail_sum(self, m: int) -> CertValue:
        # Single-signed terms: the supremum is the full tail sum.
        return self.abs_tail_power_sum(m + 1, 1)

    def describe(self) -> str:
        return f"{self.c} * (n+1)^(-{self.s})"


# ---------------------------------------------------------------------------
# Matrix families
# ---------------------------------------------------------------------------


class MatrixFamily:
    """Base class: rows plus optional closed-form certification hooks."""

    kind = "abstract"
    exact = True

    def row(self, n: int) -> Row:
        raise NotImplementedError

    def entry(self, n: int, k: int) -> Scalar:
        return self.row(n).value(k)

    def row_count(self) -> Optional[int]:
        """Number of (possibly) nonzero rows, None when infinite."""
        return None

    def gate_check(self) -> None:
        """Raise ConvergenceGateError if some row cannot be dual-transformed."""

    def describe(self) -> str:
        return self.kind

    # Closed-form hooks (compactness certification); None means "no closed
    # form registered", which forces windowed, uncertified estimation.
    def closed_row_dualnorm(self, domain: str, p) -> Optional[ClosedSeq]:
        return None

    def closed_column_limits(self) -> Optional[Callable[[int], CertValue]]:
        return None

    def closed_centered_row_dualnorm(self, domain: str, p) -> Optional[ClosedSeq]:
        return None

    def closed_group_norm(self, q) -> Optional[ClosedSeq]:
        return None

    def closed_column_tail_sup(self, p, start: int = 0) -> Optional[ClosedSeq]:
        return None

    def closed_sup_row_dualnorm(self, domain: str, p) -> Optional[CertValue]:
        """sup_n of the row dual norms (operator norm into limit spaces)."""
        return None

    def closed_sup_column_pnorm(self, p) -> Optional[CertValue]:
        """sup_k (sum_n |a~_nk|^p)^(1/p) (operator norm out of the summable domain)."""
        return None


def _zero_closed() -> ClosedSeq:
    return ClosedSeq(
        limit=CertValue(Fraction(0), True, True, "finitely many nonzero rows"),
        value_at=None,
    )


class DenseFamily(MatrixFamily):
    """A finite window of explicit entries, zero outside the window.

    Such operators have finite rank, so every limit quantity is
    eventually zero and certifies exactly.
    """

    kind = "dense"

    def __init__(self, rows: Sequence[Sequence[Scalar]], exact: Optional[bool] = None):
        self._rows = tuple(finite_row(r, exact=exact) for r in rows)
        self.exact = all(r.exact for r in self._rows)

    def row(self, n: int) -> FiniteRow:
        if 0 <= n < len(self._rows):
            return self._rows[n]
        return FiniteRow((), self.exact)

    def row_count(self) -> int:
        return len(self._rows)

    def describe(self) -> str:
        cols = max((r.support_max + 1 for r in self._rows), default=0)
        return f"dense window {len(self._rows)}x{cols}, zero beyond"

    def closed_row_dualnorm(self, domain: str, p) -> ClosedSeq:
        def value_at(n: int) -> Scalar:
            return dual_norm(self.row(n), domain, p).value

        return ClosedSeq(limit=_zero_closed().limit, value_at=value_at)

    def closed_column_limits(self):
        return lambda k: CertValue(Fraction(0), True, True, "rows vanish eventually")

    def closed_centered_row_dualnorm(self, domain: str, p) -> ClosedSeq:
        return self.closed_row_dualnorm(domain, p)

    def closed_group_norm(self, q) -> ClosedSeq:
        return _zero_closed()

    def closed_column_tail_sup(self, p, start: int = 0) -> ClosedSeq:
        duals = [beta_dual_row(r) for r in self._rows]
        cols = max((d.support_max + 1 for d in duals), default=0)
        pf = float(p)

        def value_at(m: int) -> Scalar:
            best = 0.0
            for k in range(cols):
                acc = math.fsum(
                    abs(float(duals[n].value(k))) ** pf
                    for n in range(m + start, len(duals))
                )
                best = max(best, acc ** (1.0 / pf))
            return best

        return ClosedSeq(limit=_zero_closed().limit, value_at=value_at)

    def closed_sup_row_dualnorm(self, domain: str, p) -> CertValue:
        best: Scalar = Fraction(0)
        exact = True
        for r in self._rows:
            v = dual_norm(r, domain, p)
            exact = exact and v.exact
            if float(v.value) > float(best):
                best = v.value
        return CertValue(best, exact, True, "max over the finite window")

    def closed_sup_column_pnorm(self, p) -> CertValue:
        duals = [beta_dual_row(r) for r in self._rows]
        cols = max((d.support_max + 1 for d in duals), default=0)
        pf = float(p)
        best = 0.0
        for k in range(cols):
            acc = math.fsum(abs(float(d.value(k))) ** pf for d in duals)
            best = max(best, acc ** (1.0 / pf))
        return CertValue(best, False, True, "max over the finite window")


class BandFamily(MatrixFamily):
    """Banded matrix: entry at (n, n+o) is a rational polynomial in n.

    offsets maps a band offset o to the coefficient tuple (c_0, c_1, ...)
    of c_0 + c_1 n + ... evaluated at the row index.
    """

    kind = "band"

    def __init__(self, offsets: Dict[int, Sequence[Scalar]]):
        self._offsets = {
            int(o): tuple(Fraction(c) for c in coeffs) for o, coeffs in offsets.items()
        }
        self.exact = True

    def _poly(self, coeffs: Tuple[Fraction, ...], n: int) -> Fraction:
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * n + c
        return acc

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in coeffs) for coeffs in self._offsets.values())

    def row(self, n: int) -> FiniteRow:
        if not self._offsets:
            return FiniteRow((), True)
        top = max(n + o for o in self._offsets)
        if top < 0:
            return FiniteRow((), True)
        vals = [Fraction(0)] * (top + 1)
        for o, coeffs in self._offsets.items():
            k = n + o
            if k >= 0:
                vals[k] += self._poly(coeffs, n)
        return finite_row(vals, exact=True)

    def describe(self) -> str:
        offs = ",".join(str(o) for o in sorted(self._offsets))
        return f"band offsets [{offs}] with polynomial coefficients"

    def closed_row_dualnorm(self, domain: str, p) -> Optional[ClosedSeq]:
        return _zero_closed_with_rows(self, domain, p) if self.is_zero() else None

    def closed_column_limits(self):
        if self.is_zero():
            return lambda k: CertValue(Fraction(0), True, True, "zero matrix")
        return None

    def closed_centered_row_dualnorm(self, domain: str, p) -> Optional[ClosedSeq]:
        return self.closed_row_dualnorm(domain, p)

    def closed_group_norm(self, q) -> Optional[ClosedSeq]:
        return _zero_closed() if self.is_zero() else None

    def closed_column_tail_sup(self, p, start: int = 0) -> Optional[ClosedSeq]:
        if self.is_zero():
            return ClosedSeq(limit=CertValue(Fraction(0), True, True), value_at=lambda m: Fraction(0))
        return None

    def closed_sup_row_dualnorm(self, domain: str, p) -> Optional[CertValue]:
        if self.is_zero():
            return CertValue(Fraction(0), True, True, "zero matrix")
        return None

    def closed_sup_column_pnorm(self, p) -> Optional[CertValue]:
        if self.is_zero():
            return CertValue(Fraction(0), True, True, "zero matrix")
        return None


def _zero_closed_with_rows(family: MatrixFamily, domain: str, p) -> ClosedSeq:
    return ClosedSeq(
        limit=CertValue(Fraction(0), True, True, "zero matrix"),
        value_at=lambda n: Fraction(0),
    )


class DiagAssocFamily(MatrixFamily):
    """The family whose associated (dual-transformed) matrix is diag(d_n).

    Rows of the source matrix are d_n times the difference triangle's
    rows, so every row is finitely supported and the dual transform
    reproduces the diagonal exactly.
    """

    kind = "diag_assoc"

    def __init__(self, d: ScalarFamily):
        self.d = d
        self.exact = d.exact

    def row(self, n: int) -> FiniteRow:
        dn = self.d.value(n)
        if n == 0:
            return finite_row([dn], exact=self.exact)
        vals = [Fraction(0) if self.exact else 0.0] * (n + 1)
        if self.exact:
            vals[n - 1] = Fraction(dn) * fib_diff_entry(n, n - 1)
            vals[n] = Fraction(dn) * fib_diff_entry(n, n)
        else:
            vals[n - 1] = float(dn) * float(fib_diff_entry(n, n - 1))
            vals[n] = float(dn) * float(fib_diff_entry(n, n))
        return finite_row(vals, exact=self.exact)

    def describe(self) -> str:
        return f"diag_assoc with d_n = {self.d.describe()}"

    def closed_row_dualnorm(self, domain: str, p) -> ClosedSeq:
        return ClosedSeq(
            limit=self.d.abs_limit(),
            value_at=lambda n: abs(self.d.value(n)),
        )

    def closed_column_limits(self):
        return lambda k: CertValue(
            Fraction(0), True, True, "each column is eventually zero"
        )

    def closed_centered_row_dualnorm(self, domain: str, p) -> ClosedSeq:
        return self.closed_row_dualnorm(domain, p)

    def closed_group_norm(self, q) -> ClosedSeq:
        def value_at(m: int) -> Scalar:
            total = self.d.abs_tail_power_sum(m + 1, q)
            val, _ = _root(total.value, q)
            return val

        total0 = self.d.abs_tail_power_sum(0, q)
        if isinstance(total0.value, float) and math.isinf(total0.value):
            limit = CertValue(INF, False, True, "columnwise power sums diverge")
        else:
            limit = CertValue(Fraction(0), True, True, "convergent tail sums")
        return ClosedSeq(limit=limit, value_at=value_at)

    def closed_column_tail_sup(self, p, start: int = 0) -> ClosedSeq:
        return ClosedSeq(
            limit=self.d.abs_limit(),
            value_at=lambda m: self.d.abs_tail_sup(m + start),
        )

    def closed_sup_row_dualnorm(self, domain: str, p) -> CertValue:
        return self.d.abs_sup()

    def closed_sup_column_pnorm(self, p) -> CertValue:
        return self.d.abs_sup()


class GeomRowsFamily(MatrixFamily):
    """Rows a_{n,j} = c_n * r^j; the dual transform gives rank-one structure.

    Every dual row is c_n times the fixed profile v_k = S_k/(f_k f_{k+1})
    with S_k the exact weighted tail sum, so row norms and column limits
    factor through the coefficient family c_n.
    """

    kind = "geom_rows"

    def __init__(self, coeffs: ScalarFamily, r: Fraction, profile_len: int = 160):
        self.coeffs = coeffs
        self.r = Fraction(r)
        self.exact = coeffs.exact
        self._profile_len = profile_len
        self._profile: Optional[Tuple[Fraction, ...]] = None
        self._lock = threading.Lock()

    def gate_check(self) -> None:
        row0 = GeometricRow(Fraction(1), self.r)
        res = convergence_gate(row0)
        if not res.passed:
            raise ConvergenceGateError(
                f"row 0: {res.reason}", witness=res.witness, row=row0
            )

    def row(self, n: int) -> GeometricRow:
        cn = self.coeffs.value(n)
        return GeometricRow(Fraction(cn), self.r)

    def describe(self) -> str:
        return f"geom_rows a_nj = c_n * ({self.r})^j with c_n = {self.coeffs.describe()}"

    # -- profile machinery -------------------------------------------------

    def profile(self) -> Tuple[Fraction, ...]:
        """Exact v_k values for the unit-coefficient row."""
        with self._lock:
            if self._profile is None:
                self.gate_check()
                s = geometric_weight_total(self.r)
                vals = []
                for k in range(self._profile_len):
                    vals.append(s / (fib(k) * fib(k + 1)))
                    s -= fib(k + 1) ** 2 * self.r ** k
                self._profile = tuple(vals)
            return self._profile

    def _profile_head_bound(self) -> Fraction:
        """Bound on |v_k| past the stored profile; halves with each k."""
        return geometric_dual_entry_bound(
            GeometricRow(Fraction(1), self.r), self._profile_len
        )

    def profile_sup(self) -> CertValue:
        prof = self.profile()
        best = max((abs(v) for v in prof), default=Fraction(0))
        head = self._profile_head_bound()
        if head <= best:
            return CertValue(best, True, True)
        return CertValue(best, True, True, width=float(head - best))

    def profile_norm(self, q) -> CertValue:
        """(sum_k |v_k|^q)^(1/q), certified by the halving tail bound."""
        prof = self.profile()
        head = self._profile_head_bound()
        if isinstance(q, float) and math.isinf(q):
            return self.profile_sup()
        qf = float(q)
        power = math.fsum(abs(float(v)) ** qf for v in prof)
        tail = float(head) ** qf / (1.0 - 2.0 ** (-qf))
        value = power ** (1.0 / qf)
        upper = (power + tail) ** (1.0 / qf)
        return CertValue(value, False, True, width=upper - value)

    # -- closed-form hooks --------------------------------------------------

    def _domain_profile_norm(self, domain: str, p) -> CertValue:
        if domain == "linf_fib":
            return self.profile_norm(1)
        if domain == "l1_fib":
            return self.profile_sup()
        return self.profile_norm(as_exponent(p).q)

    def closed_row_dualnorm(self, domain: str, p) -> ClosedSeq:
        v = self._domain_profile_norm(domain, p)
        climit = self.coeffs.abs_limit()
        if not climit.is_inf and climit.value == 0:
            limit = CertValue(Fraction(0), True, True, "coefficients vanish")
        else:
            limit = climit.scaled(v.value)
        return ClosedSeq(
            limit=limit,
            value_at=lambda n: abs(float(self.coeffs.value(n))) * float(v.value),
        )

    def closed_column_limits(self):
        gamma = self.coeffs.signed_limit()
        if gamma is None:
            return None
        prof = self.profile()

        def limit_at(k: int) -> CertValue:
            if k < len(prof):
                if gamma.exact:
                    return CertValue(Fraction(gamma.value) * prof[k], True, True)
                return CertValue(float(gamma.value) * float(prof[k]), False, True)
            return CertValue(Fraction(0), True, True, "beyond stored profile")

        return limit_at

    def closed_centered_row_dualnorm(self, domain: str, p) -> Optional[ClosedSeq]:
        gamma = self.coeffs.signed_limit()
        if gamma is None:
            return None
        if gamma.value == 0:
            return self.closed_row_dualnorm(domain, p)
        # Nonzero limit only happens for eventually constant coefficients,
        # where the centered rows vanish identically.
        return ClosedSeq(
            limit=CertValue(Fraction(0), True, True, "rows converge to the profile"),
            value_at=lambda n: abs(float(self.coeffs.value(n)) - float(gamma.value))
            * float(self.profile_norm(1).value),
        )

    def closed_group_norm(self, q) -> ClosedSeq:
        v = self.profile_norm(q)

        def value_at(m: int) -> Scalar:
            best = self.coeffs.max_subset_tail_sum(m)
            if best.is_inf:
                return INF
            return float(best.value) * float(v.value)

        best0 = self.coeffs.max_subset_tail_sum(0)
        if best0.is_inf:
            limit = CertValue(INF, False, True, "subset coefficient sums unbounded")
        else:
            limit = CertValue(Fraction(0), True, True, "coefficient tails vanish")
        return ClosedSeq(limit=limit, value_at=value_at)

    def closed_column_tail_sup(self, p, start: int = 0) -> ClosedSeq:
        vsup = self.profile_sup()

        def value_at(m: int) -> Scalar:
            tail = self.coeffs.abs_tail_power_sum(m + start, p)
            if tail.is_inf:
                return INF
            val, _ = _root(tail.value, p)
            return float(val) * float(vsup.value)

        tail0 = self.coeffs.abs_tail_power_sum(0, p)
        if tail0.is_inf:
            limit = CertValue(INF, False, True, "columnwise power sums diverge")
        else:
            limit = CertValue(Fraction(0), True, True, "coefficient tails vanish")
        return ClosedSeq(limit=limit, value_at=value_at)

    def closed_sup_row_dualnorm(self, domain: str, p) -> CertValue:
        sup_c = self.coeffs.abs_sup()
        if sup_c.is_inf:
            return sup_c
        return sup_c.scaled(self._domain_profile_norm(domain, p).value)

    def closed_sup_column_pnorm(self, p) -> CertValue:
        tail = self.coeffs.abs_tail_power_sum(0, p)
        if tail.is_inf:
            return CertValue(INF, False, True, "coefficients not p-summable")
        val, _ = _root(tail.value, p)
        return CertValue(float(val) * float(self.profile_sup().value), False, True)


# ---------------------------------------------------------------------------
# Associated matrix
# ---------------------------------------------------------------------------


class AssociatedMatrix:
    """Lazily materialized, memoized dual transform of a family's rows.

    Row requests are lock-protected so compactness sweeps can share one
    instance across worker threads.
    """

    def __init__(self, source: MatrixFamily, horizon: int = 160):
        self.source = source
        self.horizon = horizon
        self._rows: Dict[int, DualRow] = {}
        self._lock = threading.Lock()

    def row(self, n: int, min_cols: Optional[int] = None) -> DualRow:
        need = max(self.horizon, (min_cols or 0) + 1)
        cached = self._rows.get(n)
        if cached is not None and (cached.complete or cached.support_max + 1 >= need):
            return cached
        with self._lock:
            cached = self._rows.get(n)
            if cached is not None and (
                cached.complete or cached.support_max + 1 >= need
            ):
                return cached
            try:
                dual = beta_dual_row(self.source.row(n), horizon=need - 1)
            except ConvergenceGateError as exc:
                raise ConvergenceGateError(
                    f"row {n}: {exc}", witness=exc.witness, row=exc.row
                ) from exc
            self._rows[n] = dual
            return dual

    def entry(self, n: int, k: int) -> Scalar:
        return self.row(n, min_cols=k + 1).value(k)


def associated_matrix(source: MatrixFamily, horizon: int = 160) -> AssociatedMatrix:
    """Dual-transform a whole family, refusing on any gate failure."""
    source.gate_check()
    return AssociatedMatrix(source, horizon=horizon)


def synthesize_from_associated(
    bar_rows: Sequence[Sequence[Scalar]], exact: Optional[bool] = None
) -> DenseFamily:
    """Build the source matrix whose dual transform equals the given rows.

    Inverts the columnwise tail sums by multiplying with the difference
    triangle: a_{n,j} = b_{n,j} f_j/f_{j+1} - b_{n,j+1} f_{j+2}/f_{j+1}.
    """
    out = []
    for row in bar_rows:
        b = [Fraction(v) for v in row]
        cols = len(b)
        vals = []
        for j in range(cols):
            nxt = b[j + 1] if j + 1 < cols else Fraction(0)
            vals.append(
                b[j] * fib_diff_entry(j, j) + nxt * fib_diff_entry(j + 1, j)
            )
        out.append(vals)
    return DenseFamily(out, exact=True if exact is None else exact)


def operator_apply(A: MatrixFamily, x: Seq, horizon: int) -> Seq:
    """The transform (Ax)_n = sum_k a_{nk} x_k for n = 0..horizon."""
    if not x.finite:
        raise ConvergenceGateError(
            "refusing to pair matrix rows with a truncated sequence: row sums "
            "cannot be certified"
        )
    exact = A.exact and x.exact
    top = x.support_max
    vals = []
    for n in range(horizon + 1):
        row = A.row(n)
        if isinstance(row, GeometricRow):
            rng = range(top + 1)
        else:
            rng = range(min(row.support_max, top) + 1)
        if exact:
            acc = sum((Fraction(row.value(j)) * x.at(j) for j in rng), Fraction(0))
        else:
            acc = math.fsum(float(row.value(j)) * float(x.at(j)) for j in rng)
        vals.append(acc)
    return Seq(tuple(vals), exact, finite=False)
