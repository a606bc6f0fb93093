"""Exception hierarchy shared across the toolkit.

Two branches matter for exit codes: HypothesisError (a structural assumption
of the method fails on the given problem, CLI exit 1) and ConfigurationError
(bad run configuration, CLI exit 2). Everything else signals misuse of an
API and derives from ValueError so it behaves like one.
"""


class SolispecError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SolispecError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ExtrapolationError(DomainError):
    """A tabulated nonlinearity was evaluated outside its table range."""


class GridMismatchError(SolispecError, ValueError):
    """Grid functions do not live on the expected grid."""


class SingularityError(DomainError):
    """An inversion was requested at a point where its weight vanishes."""


class ConditioningError(SolispecError):
    """A least-squares fit is too ill-conditioned to be trusted."""


class HypothesisError(SolispecError):
    """A structural hypothesis of the method fails (decay, sign, monotonicity)."""


class GroundStateError(HypothesisError):
    """The ground-state solver could not produce a valid profile."""


class ConfigurationError(SolispecError):
    """The run configuration is invalid or incomplete."""
