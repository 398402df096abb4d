"""Measure-of-noncompactness bounds and compactness verdicts.

The supported analysis table pairs a domain (one of the three
difference-transformed spaces) with a codomain and names the rule used:

    domain          codomain      rule
    --------------  ------------  ------------------------
    l1/lp/linf_fib  linf          upper-bound-into-linf     (one-sided)
    l1/lp/linf_fib  c0            identity-into-c0          (iff)
    l1/lp/linf_fib  c             sandwich-into-c           (iff)
    lp_fib (1<p<oo) lp, p = 1     group-norm-into-l1        (iff)
    l1_fib          lp (1<=p<oo)  column-tails-from-l1      (iff, identity)

A limit is *certified* only through a family's closed form or a declared
residual bound; otherwise the verdict degrades to "inconclusive".  The
bounded-domain pairs (linf_fib into c0 or c) short-circuit to "compact"
once their limit certifies to zero, since membership alone already forces
compactness there.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import (
    GROUP_WINDOW_CAP,
    FibspaceError,
    InvariantError,
    UnsupportedPairError,
    ZERO_TOL,
)
from .families import (
    AssociatedMatrix,
    CertValue,
    ClosedSeq,
    MatrixFamily,
    associated_matrix,
)
from .rows import dual_norm
from .sequences import ExponentPair, Scalar, as_exponent

INF = math.inf

RULE_INTO_LINF = "upper-bound-into-linf"
RULE_INTO_C0 = "identity-into-c0"
RULE_INTO_C = "sandwich-into-c"
RULE_INTO_L1 = "group-norm-into-l1"
RULE_FROM_L1 = "column-tails-from-l1"
RULE_AUTO_COMPACT = "bounded-domain-auto-compact"

SUPPORTED_TABLE = (
    "(l1_fib|lp_fib|linf_fib) -> linf   : upper-bound-into-linf",
    "(l1_fib|lp_fib|linf_fib) -> c0     : identity-into-c0",
    "(l1_fib|lp_fib|linf_fib) -> c      : sandwich-into-c",
    "lp_fib (1<p<inf) -> l1             : group-norm-into-l1",
    "l1_fib -> lp (1<=p<inf)            : column-tails-from-l1",
)

_LIMIT_CODOMAINS = ("linf", "c", "c0")


# ---------------------------------------------------------------------------
# Space pairs and horizons
# ---------------------------------------------------------------------------


def _parse_domain(tag: str, p) -> Tuple[str, ExponentPair]:
    tag = tag.strip().lower()
    if tag == "linf_fib":
        return "linf_fib", ExponentPair.parse("inf")
    if tag == "l1_fib":
        return "l1_fib", ExponentPair(Fraction(1))
    if tag == "lp_fib":
        if p is None:
            raise UnsupportedPairError("domain lp_fib requires an exponent p")
        ep = as_exponent(p)
    elif tag.startswith("l") and tag.endswith("_fib"):
        ep = ExponentPair.parse(tag[1:-4])
    else:
        raise UnsupportedPairError(f"unknown domain tag {tag!r}")
    if ep.is_inf:
        return "linf_fib", ep
    if ep.p == 1:
        return "l1_fib", ep
    return "lp_fib", ep


def _parse_codomain(tag: str, p) -> Tuple[str, str, Optional[ExponentPair]]:
    tag = tag.strip().lower()
    if tag in _LIMIT_CODOMAINS:
        return tag, "limit", None
    if tag == "lp":
        if p is None:
            raise UnsupportedPairError("codomain lp requires an exponent p")
        ep = as_exponent(p)
    elif tag.startswith("l"):
        ep = ExponentPair.parse(tag[1:])
    else:
        raise UnsupportedPairError(f"unknown codomain tag {tag!r}")
    if ep.is_inf:
        return "linf", "limit", None
    return tag, "lp", ep


@dataclass(frozen=True)
class SpacePair:
    """A supported (domain, codomain) combination with its analysis rule."""

    domain: str
    codomain: str
    codomain_kind: str
    domain_p: ExponentPair
    codomain_p: Optional[ExponentPair]
    rule: str

    @staticmethod
    def make(domain: str, codomain: str, p=None) -> "SpacePair":
        dom_needs = domain.strip().lower() == "lp_fib"
        cod_needs = codomain.strip().lower() == "lp"
        if dom_needs and cod_needs:
            raise UnsupportedPairError(
                "a single exponent cannot serve both lp_fib and lp; "
                "use explicit tags like l2_fib"
            )
        dom, dom_p = _parse_domain(domain, p if dom_needs else None)
        cod, kind, cod_p = _parse_codomain(codomain, p if cod_needs else None)
        if kind == "limit":
            rule = {
                "linf": RULE_INTO_LINF,
                "c0": RULE_INTO_C0,
                "c": RULE_INTO_C,
            }[cod]
        elif dom == "l1_fib":
            rule = RULE_FROM_L1
        elif dom == "lp_fib" and cod_p is not None and cod_p.p == 1:
            rule = RULE_INTO_L1
        else:
            raise UnsupportedPairError(
                f"pair ({dom}, {cod}) is not in the supported table:\n  "
                + "\n  ".join(SUPPORTED_TABLE)
            )
        return SpacePair(dom, cod, kind, dom_p, cod_p, rule)

    @property
    def q(self) -> Union[Fraction, float]:
        """Conjugate exponent of the domain, used by the dual-norm formulas."""
        return self.domain_p.q

    def describe(self) -> str:
        d = {"l1_fib": "l1_fib", "linf_fib": "linf_fib"}.get(self.domain)
        d = d or f"l{self.domain_p}_fib"
        c = self.codomain if self.codomain_kind == "limit" else f"l{self.codomain_p}"
        return f"({d} -> {c})"


@dataclass(frozen=True)
class Horizons:
    """Evaluation windows for the sweeps; all capped at desk scale."""

    rows: int = 160
    cols: int = 120
    m_max: int = 24
    window: int = 8
    samples: int = 200
    support_dim: int = 64

    def __post_init__(self):
        from .errors import MAX_HORIZON

        for name in ("rows", "cols", "m_max", "window", "samples", "support_dim"):
            v = getattr(self, name)
            if not (0 <= v <= MAX_HORIZON):
                raise ValueError(f"horizon {name}={v} outside [0, {MAX_HORIZON}]")
        if self.window > GROUP_WINDOW_CAP:
            raise ValueError(
                f"window {self.window} exceeds the exhaustive cap {GROUP_WINDOW_CAP}"
            )
        if self.m_max >= self.rows:
            raise ValueError("m_max must stay below the row horizon")


# ---------------------------------------------------------------------------
# Windowed sweeps
# ---------------------------------------------------------------------------


def _trend(values: Sequence[float]) -> str:
    if len(values) < 2:
        return "stable"
    finite = [v for v in values if not math.isinf(v)]
    scale = max([1.0] + [abs(v) for v in finite])
    eps = 1e-12 * scale
    up = down = False
    for a, b in zip(values, values[1:]):
        d = b - a
        if d > eps:
            up = True
        elif d < -eps:
            down = True
    if up and down:
        return "oscillating"
    if up:
        return "increasing"
    if down:
        return "decreasing"
    return "stable"


@dataclass(frozen=True)
class LimsupEstimate:
    """Windowed view of a nonnegative sequence plus its (certified?) limit."""

    window_start: int
    values: tuple
    windowed_max: float
    trend: str
    limit: CertValue
    closed_form: bool


def _estimate_from_values(
    window_start: int, vals: List[float], closed_limit: Optional[CertValue]
) -> LimsupEstimate:
    wmax = max(vals, default=0.0)
    trend = _trend(vals)
    if closed_limit is not None:
        limit = closed_limit
        closed = True
    else:
        limit = CertValue(
            wmax, False, False, f"windowed estimate only (trend: {trend})"
        )
        closed = False
    return LimsupEstimate(window_start, tuple(vals), wmax, trend, limit, closed)


def row_dualnorm_sequence(
    family: MatrixFamily,
    pair: SpacePair,
    n_top: int,
    window: int = 8,
    assoc: Optional[AssociatedMatrix] = None,
    centered: bool = False,
    col_horizon: int = 120,
) -> LimsupEstimate:
    """Dual norms of the rows (optionally recentered by column limits).

    Uses the family's closed form when registered; otherwise evaluates a
    window [n_top - window + 1, n_top] from the dual-transformed rows and
    reports an uncertified windowed estimate.
    """
    hook = (
        family.closed_centered_row_dualnorm(pair.domain, pair.domain_p)
        if centered
        else family.closed_row_dualnorm(pair.domain, pair.domain_p)
    )
    start = max(0, n_top - window + 1)
    if hook is not None and hook.value_at is not None:
        vals = [float(hook.value_at(n)) for n in range(start, n_top + 1)]
        return _estimate_from_values(start, vals, hook.limit)
    if hook is not None:
        return _estimate_from_values(start, [], hook.limit)

    if assoc is None:
        assoc = associated_matrix(family, horizon=col_horizon)
    shift = None
    if centered:
        cl = column_limits(family, col_horizon, (max(0, n_top - window), n_top), assoc)
        shift = [float(v) for v in cl.estimates]
    vals = []
    for n in range(start, n_top + 1):
        if centered:
            dr = assoc.row(n, min_cols=col_horizon)
            top = max(dr.support_max + 1, len(shift))
            diff = []
            for k in range(top):
                base = float(dr.value(k)) if k <= dr.support_max else 0.0
                diff.append(base - (shift[k] if k < len(shift) else 0.0))
            vals.append(_qnorm(diff, pair.q))
        else:
            vals.append(float(dual_norm(family.row(n), pair.domain, pair.domain_p).value))
    return _estimate_from_values(start, vals, None)


def _qnorm(values: Sequence[float], q) -> float:
    if isinstance(q, float) and math.isinf(q):
        return max((abs(v) for v in values), default=0.0)
    qf = float(q)
    return math.fsum(abs(v) ** qf for v in values) ** (1.0 / qf)


@dataclass(frozen=True)
class ColumnLimits:
    """Columnwise limit estimates with Cauchy residuals over the window."""

    estimates: tuple
    residuals: tuple
    exact: bool
    closed_form: bool


def column_limits(
    family: MatrixFamily,
    k_top: int,
    n_window: Tuple[int, int],
    assoc: Optional[AssociatedMatrix] = None,
) -> ColumnLimits:
    hook = family.closed_column_limits()
    if hook is not None:
        certs = [hook(k) for k in range(k_top + 1)]
        return ColumnLimits(
            estimates=tuple(c.value for c in certs),
            residuals=tuple(Fraction(0) for _ in certs),
            exact=all(c.exact for c in certs),
            closed_form=True,
        )
    if assoc is None:
        assoc = associated_matrix(family, horizon=k_top + 1)
    lo, hi = n_window
    ests, resids = [], []
    for k in range(k_top + 1):
        col = [float(assoc.entry(n, k)) for n in range(lo, hi + 1)]
        ests.append(col[-1] if col else 0.0)
        resids.append(max(col, default=0.0) - min(col, default=0.0))
    return ColumnLimits(tuple(ests), tuple(resids), exact=False, closed_form=False)


# ---------------------------------------------------------------------------
# Group norms (codomain l1)
# ---------------------------------------------------------------------------


def _window_rows(assoc: AssociatedMatrix, m: int, width: int, col_floor: int):
    rows = []
    exact = True
    for n in range(m + 1, m + width + 1):
        dr = assoc.row(n, min_cols=col_floor)
        rows.append(dr)
        exact = exact and dr.exact and dr.complete
    cols = max([col_floor] + [r.support_max + 1 for r in rows])
    return rows, cols, exact


def group_norm(
    assoc: AssociatedMatrix,
    q,
    m: int,
    window_w: int,
    mode: str = "exhaustive",
) -> Scalar:
    """sup over nonempty subsets N of {m+1, ..., m+w} of the q-norm of the
    columnwise sums of the selected dual rows.

    Exhaustive mode walks all 2^w - 1 subsets in Gray-code order; greedy
    mode evaluates sign-aligned candidate subsets only and is a lower
    bound.  Either way this windows the true supremum (which ranges over
    all finite subsets beyond m) from below.
    """
    if window_w < 1:
        raise ValueError("window must contain at least one row")
    if mode == "exhaustive" and window_w > GROUP_WINDOW_CAP:
        raise FibspaceError(
            f"exhaustive subset search refused for window {window_w} > "
            f"{GROUP_WINDOW_CAP}; use mode='greedy' for a lower bound"
        )
    rows, cols, exact = _window_rows(assoc, m, window_w, col_floor=0)
    exact = exact and q == 1
    zero: Scalar = Fraction(0) if exact else 0.0

    def val(i: int, k: int) -> Scalar:
        v = rows[i].value(k) if k <= rows[i].support_max else zero
        return v if exact else float(v)

    qf = None if exact else float(q)
    inf_q = isinstance(q, float) and math.isinf(q)

    def objective(sums) -> Scalar:
        if exact:
            return sum((abs(s) for s in sums), Fraction(0))
        if inf_q:
            return max((abs(s) for s in sums), default=0.0)
        return math.fsum(abs(s) ** qf for s in sums)

    if mode == "greedy":
        candidates = [tuple(range(window_w))]
        for k in range(cols):
            pos = tuple(i for i in range(window_w) if float(val(i, k)) > 0)
            neg = tuple(i for i in range(window_w) if float(val(i, k)) < 0)
            if pos:
                candidates.append(pos)
            if neg:
                candidates.append(neg)
        best = zero
        for cand in candidates:
            sums = [sum((val(i, k) for i in cand), zero) for k in range(cols)]
            best = max(best, objective(sums))
    else:
        sums = [zero] * cols
        best = zero
        prev_gray = 0
        for idx in range(1, 1 << window_w):
            gray = idx ^ (idx >> 1)
            bit = gray ^ prev_gray
            i = bit.bit_length() - 1
            if gray & bit:
                for k in range(cols):
                    sums[k] = sums[k] + val(i, k)
            else:
                for k in range(cols):
                    sums[k] = sums[k] - val(i, k)
            prev_gray = gray
            best = max(best, objective(sums))

    if exact or inf_q:
        return best
    return float(best) ** (1.0 / qf)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MncReport:
    """Bounds on the measure of noncompactness plus the justified verdict."""

    chi_lower: CertValue
    chi_upper: CertValue
    verdict: str
    rule: str
    condition: str
    notes: tuple
    operator_norm: Optional[CertValue]
    diagnostics: dict

    def __post_init__(self):
        lo, hi = float(self.chi_lower.value), float(self.chi_upper.value)
        if not (lo <= hi or math.isinf(hi)):
            raise InvariantError(f"chi bounds out of order: [{lo}, {hi}]")


def _zero_test(limit: CertValue) -> Optional[bool]:
    if not limit.certified:
        return None
    if limit.is_inf:
        return False
    if limit.exact:
        return limit.value == 0
    return abs(float(limit.value)) <= ZERO_TOL


def _fmt_limit(limit: CertValue) -> str:
    if limit.is_inf:
        return "inf"
    if limit.exact:
        v = Fraction(limit.value)
        return f"{v.numerator}/{v.denominator}"
    return format(float(limit.value), ".6g")


def _build_report(
    pair: SpacePair,
    limit: CertValue,
    lo_factor,
    iff: bool,
    rule: str,
    limit_name: str,
    notes: List[str],
    opnorm: Optional[CertValue],
    diagnostics: dict,
) -> MncReport:
    chi_upper = limit if not limit.is_inf else CertValue(INF, False, limit.certified)
    if lo_factor == 0:
        chi_lower = CertValue(Fraction(0), True, True)
    else:
        chi_lower = limit.scaled(lo_factor)
    zero = _zero_test(limit)
    if zero is True:
        verdict = "compact"
        condition = f"certified {limit_name} = {_fmt_limit(limit)}"
    elif zero is False and iff:
        verdict = "non-compact"
        condition = f"certified {limit_name} = {_fmt_limit(limit)} > 0"
        if limit.is_inf:
            notes = notes + [
                "limit is infinite: the operator is not even bounded into the codomain"
            ]
    elif zero is False:
        verdict = "inconclusive"
        condition = (
            f"{limit_name} = {_fmt_limit(limit)} > 0, but this rule is one-sided"
        )
    else:
        verdict = "inconclusive"
        condition = f"{limit_name} not certified: {limit.note}"
    return MncReport(
        chi_lower=chi_lower,
        chi_upper=chi_upper,
        verdict=verdict,
        rule=rule,
        condition=condition,
        notes=tuple(notes),
        operator_norm=opnorm,
        diagnostics=diagnostics,
    )


def mnc_bounds_into_limit_spaces(
    family: MatrixFamily,
    pair: SpacePair,
    horizons: Horizons = Horizons(),
    assoc: Optional[AssociatedMatrix] = None,
) -> MncReport:
    """Codomains linf, c0, c: bounds from the limsup of row dual norms."""
    if pair.codomain_kind != "limit":
        raise UnsupportedPairError("this rule needs a limit-space codomain")
    if assoc is None:
        assoc = associated_matrix(family, horizon=horizons.cols)
    centered = pair.codomain == "c"
    est = row_dualnorm_sequence(
        family,
        pair,
        n_top=horizons.rows,
        window=horizons.window,
        assoc=assoc,
        centered=centered,
        col_horizon=horizons.cols,
    )
    notes: List[str] = []
    diagnostics: dict = {"row_norms": est}
    if centered:
        diagnostics["column_limits"] = column_limits(
            family,
            min(horizons.cols, 40),
            (max(0, horizons.rows - horizons.window), horizons.rows),
            assoc,
        )
        if pair.domain in ("lp_fib", "l1_fib"):
            notes.append(
                "the c-codomain sandwich assumes the transformed domain has "
                "section convergence (AK); this hypothesis is noted, not verified"
            )
    if pair.codomain == "linf":
        rule, lo, iff = RULE_INTO_LINF, 0, False
        limit_name = "limit of row dual norms"
    elif pair.codomain == "c0":
        rule, lo, iff = RULE_INTO_C0, 1, True
        limit_name = "limit of row dual norms"
    else:
        rule, lo, iff = RULE_INTO_C, Fraction(1, 2), True
        limit_name = "limit of recentered row dual norms"

    opnorm = operator_norm(family, pair, horizons, assoc=assoc)
    report = _build_report(
        pair, est.limit, lo, iff, rule, limit_name, notes, opnorm, diagnostics
    )
    if (
        pair.domain == "linf_fib"
        and pair.codomain in ("c0", "c")
        and report.verdict == "compact"
    ):
        report = MncReport(
            chi_lower=report.chi_lower,
            chi_upper=report.chi_upper,
            verdict="compact",
            rule=RULE_AUTO_COMPACT,
            condition=report.condition
            + "; membership of the bounded domain in this codomain forces compactness",
            notes=report.notes,
            operator_norm=report.operator_norm,
            diagnostics=report.diagnostics,
        )
    if report.verdict == "non-compact" and pair.domain == "linf_fib":
        report = MncReport(
            chi_lower=report.chi_lower,
            chi_upper=report.chi_upper,
            verdict=report.verdict,
            rule=report.rule,
            condition=report.condition,
            notes=report.notes
            + (
                "a nonzero limit also means the operator does not map the "
                "bounded domain into the declared codomain",
            ),
            operator_norm=report.operator_norm,
            diagnostics=report.diagnostics,
        )
    return report


def mnc_into_l1(
    family: MatrixFamily,
    pair: SpacePair,
    horizons: Horizons = Horizons(),
    assoc: Optional[AssociatedMatrix] = None,
) -> MncReport:
    """Pair (lp_fib, l1): the group-norm rule with chi in [L, 4L]."""
    if pair.rule != RULE_INTO_L1:
        raise UnsupportedPairError("this rule needs domain lp_fib and codomain l1")
    if assoc is None:
        assoc = associated_matrix(family, horizon=horizons.cols)
    q = pair.q
    hook = family.closed_group_norm(q)
    ms = list(range(0, horizons.m_max + 1))
    if hook is not None and hook.value_at is not None:
        vals = [float(hook.value_at(m)) for m in ms]
    else:
        vals = [float(group_norm(assoc, q, m, horizons.window)) for m in ms]
    closed_limit = hook.limit if hook is not None else None
    est = _estimate_from_values(0, vals, closed_limit)
    diagnostics = {"group_norms": est, "group_window": horizons.window}
    limit = est.limit
    report = _build_report(
        pair,
        limit,
        1,
        True,
        RULE_INTO_L1,
        "limit of group norms",
        [],
        None,
        diagnostics,
    )
    # chi_upper is 4x the limit for this sandwich.
    return MncReport(
        chi_lower=report.chi_lower,
        chi_upper=limit.scaled(4),
        verdict=report.verdict,
        rule=report.rule,
        condition=report.condition,
        notes=report.notes,
        operator_norm=report.operator_norm,
        diagnostics=report.diagnostics,
    )


def column_tail_sups(
    family: MatrixFamily,
    p,
    horizons: Horizons,
    assoc: Optional[AssociatedMatrix] = None,
    start: int = 0,
) -> LimsupEstimate:
    """t_m = sup_k (sum_{n >= m + start} |a~_nk|^p)^(1/p) over m = 0..m_max."""
    hook = family.closed_column_tail_sup(p, start=start)
    ms = list(range(0, horizons.m_max + 1))
    if hook is not None and hook.value_at is not None:
        vals = [float(hook.value_at(m)) for m in ms]
        return _estimate_from_values(0, vals, hook.limit)
    if assoc is None:
        assoc = associated_matrix(family, horizon=horizons.cols)
    pf = float(p)
    rows = [assoc.row(n, min_cols=horizons.cols) for n in range(horizons.rows + 1)]
    cols = max([1] + [r.support_max + 1 for r in rows])
    suffix = [0.0] * cols
    tails: Dict[int, float] = {}
    wanted = {m + start for m in ms}
    for n in range(horizons.rows, -1, -1):
        r = rows[n]
        for k in range(min(cols, r.support_max + 1)):
            suffix[k] += abs(float(r.value(k))) ** pf
        if n in wanted:
            tails[n] = max(suffix) ** (1.0 / pf) if cols else 0.0
    vals = [tails.get(m + start, 0.0) for m in ms]
    return _estimate_from_values(0, vals, hook.limit if hook else None)


def mnc_l1_to_lp(
    family: MatrixFamily,
    pair: SpacePair,
    horizons: Horizons = Horizons(),
    assoc: Optional[AssociatedMatrix] = None,
    start: int = 0,
) -> MncReport:
    """Pair (l1_fib, lp): chi equals the limit of columnwise tail sups."""
    if pair.rule != RULE_FROM_L1:
        raise UnsupportedPairError("this rule needs domain l1_fib and codomain lp")
    p = pair.codomain_p
    est = column_tail_sups(family, p.p, horizons, assoc=assoc, start=start)
    diagnostics = {"column_tails": est}
    opnorm = operator_norm(family, pair, horizons, assoc=assoc)
    return _build_report(
        pair,
        est.limit,
        1,
        True,
        RULE_FROM_L1,
        "limit of column tail sups",
        [],
        opnorm,
        diagnostics,
    )


def operator_norm(
    family: MatrixFamily,
    pair: SpacePair,
    horizons: Horizons = Horizons(),
    assoc: Optional[AssociatedMatrix] = None,
) -> Optional[CertValue]:
    """Operator norm where a formula is registered for the pair's shape.

    Codomains linf/c/c0 use the sup of row dual norms; (l1_fib, lp) uses
    the sup of columnwise p-norms.  Other pairs return None.
    """
    if pair.codomain_kind == "limit":
        hook = family.closed_sup_row_dualnorm(pair.domain, pair.domain_p)
        if hook is not None:
            return hook
        vals = [
            float(dual_norm(family.row(n), pair.domain, pair.domain_p).value)
            for n in range(horizons.rows + 1)
        ]
        return CertValue(
            max(vals, default=0.0), False, False, "windowed sup over rows"
        )
    if pair.domain == "l1_fib":
        p = pair.codomain_p.p
        hook = family.closed_sup_column_pnorm(p)
        if hook is not None:
            return hook
        if assoc is None:
            assoc = associated_matrix(family, horizon=horizons.cols)
        pf = float(p)
        rows = [assoc.row(n, min_cols=horizons.cols) for n in range(horizons.rows + 1)]
        cols = max([1] + [r.support_max + 1 for r in rows])
        best = 0.0
        for k in range(cols):
            acc = math.fsum(
                abs(float(r.value(k))) ** pf for r in rows if k <= r.support_max
            )
            best = max(best, acc ** (1.0 / pf))
        return CertValue(best, False, False, "windowed sup over columns")
    return None


# ---------------------------------------------------------------------------
# Empirical lower path (cross-check only)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalLower:
    """Sampled lower estimates of the projection tails; never drives verdicts."""

    value: float
    m: int
    curve: tuple  # (m, max tail norm) pairs
    samples: int
    seed: int


def _normalize(vals: List[float], p: ExponentPair) -> Optional[List[float]]:
    if p.is_inf:
        norm = max((abs(v) for v in vals), default=0.0)
    else:
        pf = float(p.p)
        norm = math.fsum(abs(v) ** pf for v in vals) ** (1.0 / pf)
    if norm == 0.0:
        return None
    return [v / norm for v in vals]


def empirical_mnc_lower(
    family: MatrixFamily,
    pair: SpacePair,
    sample_count: int = 200,
    support_dim: int = 64,
    m_range: Iterable[int] = (8, 16, 24),
    seed: int = 0,
    rows_horizon: Optional[int] = None,
) -> EmpiricalLower:
    """Sample the domain's unit sphere through the operator and measure tails.

    Points are drawn in transformed coordinates (basis vectors first, then
    sparse sign patterns and dense directions), mapped through the
    dual-transformed matrix, and the codomain tail norm beyond each m is
    recorded.  The maximum at the deepest m is a certified lower bound on
    that projection supremum, reported as a cross-check only.
    """
    if pair.codomain_kind != "lp":
        raise UnsupportedPairError("the sampler needs an lp-type codomain")
    ms = sorted(set(int(m) for m in m_range))
    if not ms:
        raise ValueError("m_range must not be empty")
    m_deep = ms[-1]
    rows_n = max(rows_horizon or 0, support_dim + 8, m_deep + 8)
    assoc = associated_matrix(family, horizon=max(support_dim, 16))
    mat = [
        [float(assoc.entry(n, k)) for k in range(support_dim)]
        for n in range(rows_n + 1)
    ]
    pf = float(pair.codomain_p.p)
    rng = random.Random(seed)

    def tail_curve(y: List[Tuple[int, float]]) -> List[float]:
        z = [math.fsum(mat[n][k] * v for k, v in y) for n in range(rows_n + 1)]
        powers = [abs(t) ** pf for t in z]
        total = math.fsum(powers)
        out = []
        prefix = 0.0
        j = 0
        for m in ms:
            while j <= m and j <= rows_n:
                prefix += powers[j]
                j += 1
            out.append(max(0.0, total - prefix) ** (1.0 / pf))
        return out

    best = [0.0] * len(ms)
    produced = 0
    k_basis = 0
    while produced < sample_count:
        if k_basis < support_dim:
            y = [(k_basis, 1.0)]
            k_basis += 1
        elif produced % 2 == 0:
            size = rng.randint(1, 8)
            idxs = rng.sample(range(support_dim), size)
            vals = [(i, float(rng.choice((-1, 1)))) for i in sorted(idxs)]
            normed = _normalize([v for _, v in vals], pair.domain_p)
            if normed is None:
                continue
            y = list(zip([i for i, _ in vals], normed))
        else:
            dense = [rng.uniform(-1.0, 1.0) for _ in range(support_dim)]
            normed = _normalize(dense, pair.domain_p)
            if normed is None:
                continue
            y = list(enumerate(normed))
        curve = tail_curve(y)
        best = [max(b, c) for b, c in zip(best, curve)]
        produced += 1

    return EmpiricalLower(
        value=best[-1],
        m=m_deep,
        curve=tuple(zip(ms, best)),
        samples=produced,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------


def mnc_report(
    family: MatrixFamily,
    pair: SpacePair,
    horizons: Horizons = Horizons(),
    seed: int = 0,
    with_empirical: bool = True,
) -> MncReport:
    """Full analysis for a supported pair, deterministic in (family, horizons, seed)."""
    assoc = associated_matrix(family, horizon=horizons.cols)
    if pair.codomain_kind == "limit":
        report = mnc_bounds_into_limit_spaces(family, pair, horizons, assoc=assoc)
    elif pair.rule == RULE_INTO_L1:
        report = mnc_into_l1(family, pair, horizons, assoc=assoc)
    else:
        report = mnc_l1_to_lp(family, pair, horizons, assoc=assoc)
    if (
        with_empirical
        and pair.codomain_kind == "lp"
        and horizons.samples > 0
    ):
        emp = empirical_mnc_lower(
            family,
            pair,
            sample_count=horizons.samples,
            support_dim=horizons.support_dim,
            m_range=sorted({horizons.m_max // 3, 2 * horizons.m_max // 3, horizons.m_max} - {0}) or [horizons.m_max],
            seed=seed,
            rows_horizon=horizons.rows,
        )
        diagnostics = dict(report.diagnostics)
        diagnostics["empirical_lower"] = emp
        report = MncReport(
            chi_lower=report.chi_lower,
            chi_upper=report.chi_upper,
            verdict=report.verdict,
            rule=report.rule,
            condition=report.condition,
            notes=report.notes,
            operator_norm=report.operator_norm,
            diagnostics=diagnostics,
        )
    return report
