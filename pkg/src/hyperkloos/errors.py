"""Exception hierarchy shared by all modules."""


class HyperKloosError(Exception):
    """Base class for every error raised by the package."""


class DegenerateCell(HyperKloosError, ValueError):
    """Matrix lies off the open cell where the w5-like factorization exists."""


class PoleError(HyperKloosError, ValueError):
    """A gamma-type factor is evaluated at (or numerically at) a pole."""

    def __init__(self, message, argument=None):
        super().__init__(message)
        self.argument = argument


class NoConvergence(HyperKloosError, RuntimeError):
    """An adaptive routine exhausted its refinement budget."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NoStationaryPoint(HyperKloosError, ValueError):
    """The phase has no stationary point in the support of the amplitude."""


class MultipleStationaryPoints(HyperKloosError, ValueError):
    """The phase has more than one stationary point in the support."""


class BadIntervals(HyperKloosError, ValueError):
    """Bump-function intervals are not properly nested."""


class WallError(HyperKloosError, ValueError):
    """Spectral parameter too close to a wall mu_i = mu_j for a direct evaluation."""


class MultipleWalls(WallError):
    """More than one pair of spectral coordinates is near a wall."""


class ContourError(HyperKloosError, RuntimeError):
    """Contour truncation error estimate exceeds the requested tolerance."""


class OutOfAsymptoticRange(HyperKloosError, ValueError):
    """Parameters fall outside the range where an asymptotic formula is valid."""


class MissingEigenvalue(HyperKloosError, KeyError):
    """A spectral record lacks a Hecke eigenvalue needed by the estimator."""

    def __init__(self, form_id, index):
        super().__init__(f"form {form_id!r} has no eigenvalue for index {index!r}")
        self.form_id = form_id
        self.index = index

    def __str__(self):
        return self.args[0]


class SchemaError(HyperKloosError, ValueError):
    """A dataset record does not match the expected schema."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class InvariantError(HyperKloosError, ValueError):
    """A record violates a mathematical invariant."""

    def __init__(self, message, invariant=None, line=None):
        super().__init__(message)
        self.invariant = invariant
        self.line = line
