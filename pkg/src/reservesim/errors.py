"""Exception types shared across the simulator."""


class ReserveSimError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(ReserveSimError):
    """Inconsistent dimensions or invalid configuration values."""


class LifecycleError(ReserveSimError):
    """Illegal container state transition."""


class SchedulerBugError(ReserveSimError):
    """A scheduler emitted an infeasible grant; the run is aborted."""


class GenerationError(ReserveSimError):
    """A workload generation spec cannot be satisfied."""


class ScenarioParseError(ReserveSimError):
    """A scenario file violates the schema.

    Carries the dotted path of the offending field in ``field``.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DeadlockError(ReserveSimError):
    """The engine made no progress while work was still pending."""


class TraceError(ReserveSimError):
    """A trace is incomplete or inconsistent with its scenario."""
