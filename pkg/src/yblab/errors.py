"""Exception types shared across the package."""


class YbLabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(YbLabError):
    """Operands have incompatible shapes."""


class Singular(YbLabError):
    """Matrix is not invertible (exact zero determinant, or a pivot below
    the float-mode threshold)."""


class NonFinite(YbLabError):
    """A float operation produced NaN or infinity."""


class EvaluationFailed(YbLabError):
    """A user-supplied function raised or returned non-finite values while
    being probed (finite differences)."""


class BadIndex(YbLabError):
    """Invalid site index, e.g. i == j (mod N) for a two-site lift."""


class MapUndefined(YbLabError):
    """The map is not defined at the given point.  Concrete degeneracies
    subclass this so that generic checkers can skip out-of-domain trials."""


class ParamCollision(MapUndefined):
    """Site parameters collide (lambda_1 == lambda_2, or == -lambda_2 for
    the subspace map), so the map formulas degenerate."""


class DegeneratePairing(MapUndefined):
    """A covector/vector pairing <p, q> that appears in a denominator is
    zero."""


class SingularDenominator(MapUndefined):
    """Scalar map denominator vanishes (x + y == 0)."""


class NotTransversal(MapUndefined):
    """Kernel and image bases do not span the whole space."""


class EvenPeriod(YbLabError):
    """Chain operations that need an odd period were given an even one."""


class StepRejected(YbLabError):
    """ODE integration aborted (state norm exceeded the overflow guard)."""


class ConfigError(YbLabError):
    """Invalid run configuration (CLI exit code 2)."""
