"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes do not line up (layer input width, gradient sets, ...)."""


class StateError(RuntimeError):
    """An object was used in a state it does not support (stale cache, layout mismatch)."""


class NumericError(ArithmeticError):
    """Non-finite values showed up in losses or gradients."""


class SchemaError(ValueError):
    """A table does not agree with its schema."""


class ParseError(ValueError):
    """A cell could not be parsed as the type its schema column declares."""


class VocabularyError(ValueError):
    """A category value is not present in a fitted vocabulary."""


class DegenerateColumnError(ValueError):
    """A continuous column has min == max and cannot be scaled."""


class UndefinedMetricError(ZeroDivisionError):
    """A comparison metric has a zero reference value."""


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class WorkerError(RuntimeError):
    """A worker lane failed during a distributed step."""

    def __init__(self, worker, cause):
        super().__init__(f"worker {worker} failed: {cause!r}")
        self.worker = worker
        self.cause = cause
