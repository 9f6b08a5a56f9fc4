"""Exception types shared across the package."""


class PhotonSyncError(Exception):
    """Base class for all errors raised by this package."""


class ContiguityError(PhotonSyncError):
    """Packages passed to a merge are not a contiguous run."""


class WindowError(PhotonSyncError):
    """Invalid time window (empty, inverted, or too few bins)."""


class ClockModelError(PhotonSyncError):
    """Clock parameters would produce a non-monotonic local clock."""


class ConfigError(PhotonSyncError):
    """Inconsistent or unparseable scenario configuration."""


class BinBudgetError(PhotonSyncError):
    """Requested histogram exceeds the cross-correlation point budget."""


class NoSignalError(PhotonSyncError):
    """Histogram carries no counts to analyze."""


class FitError(PhotonSyncError):
    """Peak fit did not converge; caller may fall back to the centroid."""


class AlignmentError(PhotonSyncError):
    """Package streams share no usable index range."""


class AcquisitionError(PhotonSyncError):
    """Offset acquisition found no candidate above the significance threshold."""


class FineTuneError(PhotonSyncError):
    """Skew fine tuning objective is flat; no extremum above noise."""


class TransportError(PhotonSyncError):
    """Stream transport failed mid-session.

    Carries the last package index successfully handled, or -1.
    """

    def __init__(self, message: str, last_index: int = -1):
        super().__init__(message)
        self.last_index = last_index


class DomainError(PhotonSyncError):
    """Analytic formula evaluated outside its domain."""


class UsageError(PhotonSyncError):
    """Bad command-line usage."""
