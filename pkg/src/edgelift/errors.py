"""Exception types raised across the package."""


class EdgeLiftError(Exception):
    """Base class for all package errors."""


class DisconnectedGraph(EdgeLiftError):
    pass


class NonFiniteInput(EdgeLiftError, ValueError):
    pass


class DomainError(EdgeLiftError, ValueError):
    """A model hook was evaluated outside its state domain."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t={time:g})")
        self.time = time


class NonFiniteState(EdgeLiftError):
    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t={time:g})")
        self.time = time


class RankDeficientOutputChannel(EdgeLiftError):
    """H_i(x_i) of agent ``agent`` is not right invertible."""

    def __init__(self, agent, rank, required):
        super().__init__(
            f"agent {agent}: output channel rank {rank} < output dim {required}"
        )
        self.agent = agent
        self.rank = rank
        self.required = required


class DegenerateWindow(EdgeLiftError, ValueError):
    pass


class SchemaError(EdgeLiftError, ValueError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason
