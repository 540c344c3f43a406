"""Exception and warning types shared across the package."""


class GainoptError(Exception):
    """Base class for all package-specific errors."""


# -- transfer functions -------------------------------------------------

class PoleEvaluationError(GainoptError):
    """Evaluation point coincides with a pole."""


class ImproperError(GainoptError):
    """Numerator degree exceeds denominator degree."""


class SingularLoopError(GainoptError):
    """1 + P*C vanishes identically; the feedback loop is ill posed."""


# -- gain margin ---------------------------------------------------------

class BadIntervalError(GainoptError):
    """Gain interval violates 0 < k1 < k2."""


class ForbiddenValueError(GainoptError):
    """Argument lies in the excluded real set of the conformal map."""


class OutsideDiskError(GainoptError):
    """Argument of the inverse conformal map must lie in the open unit disk."""


class DuplicateNodeError(GainoptError):
    """Interpolation nodes must be distinct."""


class InfeasibleError(GainoptError):
    """Pick matrix is not positive definite; no interpolant exists."""


class DegenerateError(GainoptError):
    """Controller recovery impossible (T identically one)."""


class NominalUnstableError(GainoptError):
    """Closed loop unstable already at the nominal gain."""


# -- synthesis -----------------------------------------------------------

class DegenerateBudgetError(GainoptError):
    """mu == ell leaves no synthesis freedom."""


class RateTooSlowError(GainoptError):
    """Requested rate is slower than what needs no feedthrough."""


class BadSolverLimitError(GainoptError):
    """Sub-solver conditioning limit outside its meaningful range."""


class NegativeFeedthroughError(GainoptError):
    """Negative direct feedthrough degrades performance; rejected."""


# -- certificates --------------------------------------------------------

class SingularTransformError(GainoptError):
    """Loop transformation is not invertible for this input."""


class UncertifiableError(GainoptError):
    """Positive-realness fails even at unit radius."""


# -- lifting -------------------------------------------------------------

class ImproperEntryError(GainoptError):
    """A lifted-system entry has no finite value at infinity."""


class HigherOrderPoleError(GainoptError):
    """Pole at z = 1 has multiplicity greater than one."""


# -- problems / runtime --------------------------------------------------

class InnerNotConvergedError(GainoptError):
    """Inner proximal solver hit its iteration cap."""


class DivergenceError(GainoptError):
    """Iterate error exceeded the divergence guard."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class FactorizationFailureError(GainoptError):
    """Matrix factorization for the implicit solve failed."""


class TooShortError(GainoptError):
    """Trace has too few usable steps for a rate estimate."""


# -- warnings ------------------------------------------------------------

class FeedthroughClampedWarning(UserWarning):
    """Computed feedthrough was negative and has been clamped to zero."""


class DegenerateBudgetWarning(UserWarning):
    """mu == ell; a degenerate fallback was substituted."""
