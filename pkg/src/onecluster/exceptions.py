"""Exception types raised by the onecluster package."""


class InvalidParameter(ValueError):
    """A parameter violates an operation's precondition."""


class SessionClosed(RuntimeError):
    """A query was issued to an AboveThreshold session that already halted."""


class SearchFailed(RuntimeError):
    """GoodCenter could not locate a heavy box.

    Privacy has already been spent when this is raised; ``ledger`` holds the
    entries consumed so far so callers can still account for them.
    """

    def __init__(self, message, ledger=(), rounds=0):
        super().__init__(message)
        self.ledger = list(ledger)
        self.rounds = rounds


class EmptyCluster(SearchFailed):
    """NoisyAVG returned bottom (noisy member count was not positive)."""


class CSVFormatError(InvalidParameter):
    """A CSV input could not be parsed; the message names the offending line."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
