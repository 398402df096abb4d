"""Exact Fibonacci arithmetic and the Fibonacci difference triangle.

Indexing convention used everywhere in this package: f_0 = f_1 = 1 and
f_n = f_{n-1} + f_{n-2}.  The difference triangle has row n equal to
(-f_{n+1}/f_n, f_n/f_{n+1}) on columns (n-1, n); its inverse is the full
lower triangle with entries f_{n+1}^2 / (f_k f_{k+1}).

The exact path works in arbitrary-precision rationals (fixed-width
integers overflow at n = 92 and inverse entries grow like phi^{2(n-k)}).
The float path never builds huge integers: ratios come from the bounded
recurrence r_n = 1/(1 + r_{n-1}), and inverse entries beyond the safe
squaring range fall back to cached logarithms.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction

from .errors import InvariantError

# f_{n+1}^2 still fits in binary64 below this row index, so the most
# accurate float route is direct integer-to-float conversion.
_FLOAT_SQ_SAFE = 730


class FibCache:
    """Append-only cache of Fibonacci numbers with f_0 = f_1 = 1.

    Extension happens under a lock; readers only index into append-only
    lists, so a single cache may be shared across threads.  The defining
    recurrence is cross-checked against the alternating determinant
    identity f_{n-1} f_{n+1} - f_n^2 = (-1)^{n+1} as entries are added.
    """

    def __init__(self, presize: int = 128) -> None:
        self._fib = [1, 1]
        self._ratio = [1.0]  # ratio[n] == f_n / f_{n+1} in binary64
        self._log = [0.0, 0.0]  # log[n] == log f_n
        self._lock = threading.Lock()
        self.extend_to(presize)

    def extend_to(self, n: int) -> None:
        if n < len(self._fib):
            return
        with self._lock:
            fib = self._fib
            while len(fib) <= n:
                m = len(fib)
                nxt = fib[m - 1] + fib[m - 2]
                if fib[m - 2] * nxt - fib[m - 1] ** 2 != (-1) ** m:
                    raise InvariantError(
                        f"Fibonacci determinant identity failed at index {m}"
                    )
                fib.append(nxt)
                self._ratio.append(1.0 / (1.0 + self._ratio[m - 2]))
                self._log.append(self._log[m - 1] - math.log(self._ratio[m - 1]))

    def fib(self, n: int) -> int:
        if n >= len(self._fib):
            self.extend_to(max(n, 2 * len(self._fib)))
        return self._fib[n]

    def ratio(self, n: int) -> Fraction:
        """Exact f_n / f_{n+1}."""
        return Fraction(self.fib(n), self.fib(n + 1))

    def ratio_float(self, n: int) -> float:
        if n + 1 >= len(self._fib):
            self.extend_to(max(n + 1, 2 * len(self._fib)))
        return self._ratio[n]

    def log_fib(self, n: int) -> float:
        if n >= len(self._fib):
            self.extend_to(max(n, 2 * len(self._fib)))
        return self._log[n]

    def __len__(self) -> int:
        return len(self._fib)


_CACHE = FibCache()


def _check_index(n: int, name: str = "index") -> None:
    if n < 0:
        raise ValueError(f"{name} must be nonnegative, got {n}")


def fib(n: int) -> int:
    """The n-th Fibonacci number under the f_0 = f_1 = 1 convention."""
    _check_index(n)
    return _CACHE.fib(n)


def fib_ratio(n: int) -> Fraction:
    """Exact ratio f_n / f_{n+1}, always in [1/2, 1]."""
    _check_index(n)
    return _CACHE.ratio(n)


def fib_diff_entry(n: int, k: int) -> Fraction:
    """Entry (n, k) of the Fibonacci difference triangle, exact."""
    _check_index(n, "row")
    _check_index(k, "col")
    if k == n:
        return _CACHE.ratio(n)
    if k == n - 1:
        return -1 / _CACHE.ratio(n)
    return Fraction(0)


def fib_diff_inv_entry(n: int, k: int) -> Fraction:
    """Entry (n, k) of the inverse triangle: f_{n+1}^2/(f_k f_{k+1}) for k <= n."""
    _check_index(n, "row")
    _check_index(k, "col")
    if k > n:
        return Fraction(0)
    f = _CACHE.fib
    return Fraction(f(n + 1) ** 2, f(k) * f(k + 1))


def fib_diff_entry_float(n: int, k: int) -> float:
    """Float entry of the triangle via the bounded ratio recurrence."""
    _check_index(n, "row")
    _check_index(k, "col")
    if k == n:
        return _CACHE.ratio_float(n)
    if k == n - 1:
        return -1.0 / _CACHE.ratio_float(n)
    return 0.0


def fib_diff_inv_entry_float(n: int, k: int) -> float:
    """Float entry of the inverse triangle; +inf once past binary64 range."""
    _check_index(n, "row")
    _check_index(k, "col")
    if k > n:
        return 0.0
    if n < _FLOAT_SQ_SAFE:
        f = _CACHE.fib
        return float(f(n + 1)) ** 2 / (float(f(k)) * float(f(k + 1)))
    lg = _CACHE.log_fib
    t = 2.0 * lg(n + 1) - lg(k) - lg(k + 1)
    try:
        return math.exp(t)
    except OverflowError:
        return math.inf
