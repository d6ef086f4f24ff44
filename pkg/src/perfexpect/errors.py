"""Exception hierarchy shared by all modules."""


class PerfExpectError(Exception):
    """Base class; the CLI turns these into machine-readable error records."""

    kind = "error"


class CorpusParseError(PerfExpectError):
    kind = "parse"

    def __init__(self, message, line=None, offset=None):
        super().__init__(message)
        self.line = line
        self.offset = offset


class ValidationError(PerfExpectError):
    kind = "validation"

    def __init__(self, message, piece_id=None, field=None):
        super().__init__(message)
        self.piece_id = piece_id
        self.field = field


class SizeError(PerfExpectError):
    kind = "size"


class DegeneratePerformanceError(PerfExpectError):
    kind = "degenerate-performance"


class CoverageError(PerfExpectError):
    kind = "coverage"


class ConfigurationError(PerfExpectError):
    kind = "configuration"


class EmptyMelodyError(PerfExpectError):
    kind = "empty-melody"


class TrainingError(PerfExpectError):
    kind = "training"


class ModelError(PerfExpectError):
    kind = "model"


class CombinationError(PerfExpectError):
    kind = "combination"


class DomainError(PerfExpectError):
    kind = "domain"


class ShapeError(PerfExpectError):
    kind = "shape"


class DivergenceError(PerfExpectError):
    kind = "divergence"

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class UndefinedMetricError(PerfExpectError):
    kind = "undefined-metric"


class UndefinedTestError(PerfExpectError):
    kind = "undefined-test"
