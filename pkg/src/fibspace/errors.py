"""Exception types shared across the package, plus desk-scale caps."""

# Hard ceiling on any index horizon a caller may request.
MAX_HORIZON = 1_000_000

# Absolute tolerance for "equals zero" verdicts on float paths.  Exact
# rational paths require exact zero instead.
ZERO_TOL = 1e-9

# Exhaustive subset search is refused beyond this window width.
GROUP_WINDOW_CAP = 20


class FibspaceError(Exception):
    """Base class for every error this package raises on purpose."""


class HorizonError(FibspaceError):
    """An operation needed values beyond a sequence's declared horizon."""


class ConvergenceGateError(FibspaceError):
    """A row failed the dual-transform convergence gate."""

    def __init__(self, message: str, witness=None, row=None):
        super().__init__(message)
        self.witness = witness
        self.row = row


class UnsupportedPairError(FibspaceError):
    """The (domain, codomain) pair is outside the supported analysis table."""


class JobSpecError(FibspaceError):
    """A job document failed schema validation."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class InvariantError(FibspaceError):
    """An internal consistency check failed; this indicates a bug."""
