"""Exception hierarchy shared by every posetcap module."""


class PosetCapError(Exception):
    """Root of all errors raised by the toolkit."""


class InvalidDistribution(PosetCapError, ValueError):
    """A probability vector is negative somewhere or does not sum to 1."""


class ShapeMismatch(PosetCapError, ValueError):
    """Arguments disagree on alphabet sizes or parent count."""


class BadSubset(PosetCapError, ValueError):
    """An ordered index subset is empty, repeats an index or leaves [d]."""


class BadParameter(PosetCapError, ValueError):
    """A channel or experiment parameter is outside its domain."""


class AbsoluteContinuityViolated(PosetCapError):
    """KL divergence requested where p puts mass outside the support of q."""


class UnsupportedScale(PosetCapError):
    """A custom family has no instance data at the requested scale."""


class SearchInconclusive(PosetCapError):
    """No equivalence witness was found within the searched scale."""


class NotADag(PosetCapError):
    """An instance graph contains a directed cycle."""

    def __init__(self, message: str, cycle=None):
        super().__init__(message)
        self.cycle = cycle or []


class Infeasible(PosetCapError):
    """The equality-constrained polytope is empty (or numerically empty)."""


class OracleFailure(PosetCapError):
    """The linear maximization oracle returned an infeasible vertex."""


class ScaleTooLarge(PosetCapError):
    """A computation exceeds its configured size cap."""


class NotStrictlyPositive(PosetCapError):
    """The kernel has a zero entry, so contraction arguments do not apply."""


class EmptySet(PosetCapError):
    """A distribution set used in a Hausdorff computation is empty."""


class EmptyList(PosetCapError):
    """An average over zero joints was requested."""


class MalformedFile(PosetCapError, ValueError):
    """A channel or family file cannot be parsed."""


class RowSumViolation(MalformedFile):
    """A kernel row does not sum to 1 within tolerance."""


class BadDimensions(MalformedFile):
    """A kernel table length disagrees with the declared sizes."""
