"""Exception hierarchy shared by all modules."""


class ClockSyncError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(ClockSyncError, ValueError):
    """Malformed or out-of-range input (non-finite values, bad shapes, ...)."""


class DegenerateRatesError(ClockSyncError, ValueError):
    """The total message rate is zero, so jump quantities are undefined."""


class ForbiddenReceiverError(InvalidInputError):
    """The server (node 1) was named as the receiver of a message."""


class CoincidentEigenvalueError(DegenerateRatesError):
    pass


class DomainError(ClockSyncError, ValueError):
    pass


class NoStationaryLimitError(ClockSyncError, ValueError):
    """Without server messages (alpha = 0) the moments have no finite limit."""


class NoSynchronizationPhaseError(ClockSyncError, ValueError):
    pass
