"""Exception hierarchy shared by every module.

All numerical failures derive from :class:`TodaError` so the CLI can map them
to a single exit status while still reporting the concrete class name.
"""


class TodaError(Exception):
    """Base class for numerical failures raised by this package."""


class IndexOutOfBackground(TodaError, IndexError):
    pass


class ConvergenceFailure(TodaError):
    pass


class PoleAtZ(TodaError, ZeroDivisionError):
    pass


class RankDeficient(TodaError):
    pass


class LossOfOrthogonality(TodaError):
    pass


class DegenerateDisk(TodaError):
    pass


class NearSpectrum(TodaError):
    pass


class PoleHit(TodaError, ZeroDivisionError):
    pass


class ChainEdgeFailure(TodaError):
    pass


class ExtrapolationDivergence(TodaError):
    pass


class NonPositiveASquared(TodaError):
    pass


class ChainTooDeep(TodaError, ValueError):
    pass


class OverflowGuard(TodaError, OverflowError):
    pass


class EnergyInsideSpectrum(TodaError):
    pass


class SignChange(TodaError):
    pass


class StepSizeUnderflow(TodaError):
    pass


class DomainError(TodaError, ValueError):
    pass


class EnvelopeViolation(TodaError):
    pass
