"""Exception hierarchy shared by all ecsbell modules."""


class EcsError(Exception):
    """Base class for every error raised by ecsbell."""


class ValidationError(EcsError, ValueError):
    """Input outside the domain of an operation."""


class DegenerateStateError(ValidationError):
    """The requested state vanishes or collapses to a product state."""


class ConsistencyError(EcsError):
    """A closed form produced a value it can never produce (e.g. a complex parity)."""


class TruncationError(EcsError):
    """The Fock-basis truncation is too small for the requested input."""

    def __init__(self, message, required_n_max=None):
        super().__init__(message)
        self.required_n_max = required_n_max


class OptimizationError(EcsError):
    """The objective returned a non-finite value during a search."""

    def __init__(self, message, settings=None, sweep_param=None):
        super().__init__(message)
        self.settings = settings
        self.sweep_param = sweep_param
