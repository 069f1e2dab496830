"""Exception types shared across the package."""


class PhotonStatError(Exception):
    """Base class for all package errors."""


class EmptyWindow(PhotonStatError):
    """A lag window selects fewer than two correlogram bins."""


class DegenerateSum(PhotonStatError):
    """Visibility denominator g2_max + g2_min is zero."""


class DomainError(PhotonStatError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class SingularSystem(PhotonStatError):
    """The excited-manifold linear system has no unique solution."""


class ToleranceNotMet(PhotonStatError):
    """A numerical scheme could not meet its accuracy contract."""


class ZeroPhotonNumber(PhotonStatError):
    """Correlator undefined: the reference state carries no photons."""


class InvalidSampling(PhotonStatError, ValueError):
    """Sampling step too coarse for the requested modulation period."""


class EmptyStream(PhotonStatError):
    """An operation requiring events received an empty stream."""


class EmptyStreams(PhotonStatError):
    """Acquisition input empty with no dark counts to populate it."""


class ZeroBaseline(PhotonStatError):
    """Accidental-coincidence baseline is zero; cannot normalize."""


class GridNotUniform(PhotonStatError, ValueError):
    """Operation requires a uniform lag grid."""


class PeakNotFound(PhotonStatError):
    """No significant spectral peak to anchor the fundamental."""


class BadInit(PhotonStatError, ValueError):
    """Fit initialization violates model invariants."""


class ParseError(PhotonStatError, ValueError):
    """Config or data file could not be parsed."""


class ValidationError(PhotonStatError, ValueError):
    """Config value violates a documented invariant."""


class Pts1FormatError(PhotonStatError, ValueError):
    """Binary event file violates the PTS1 container layout."""
