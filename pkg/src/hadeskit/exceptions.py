"""Exception hierarchy shared by every hadeskit module."""


class HadesError(Exception):
    """Base class for all hadeskit errors."""


class DataError(HadesError, ValueError):
    """Input telemetry cannot be used as given."""


class EmptyInput(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"metric column {name!r} has no observed values")
        self.name = name


class InsufficientData(DataError):
    pass


class EmptySelection(DataError):
    pass


class UnmappedMetric(DataError):
    def __init__(self, name):
        super().__init__(f"metric {name!r} is not assigned to any aspect")
        self.name = name


class EmptyEvent(DataError):
    pass


class DegenerateVocabulary(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class EmptyBatch(DataError):
    pass


class EmptyTestSet(DataError):
    pass


class OverlappingFaults(DataError):
    pass


class ShapeError(HadesError, ValueError):
    pass


class NumericalError(HadesError, ArithmeticError):
    """Non-finite values reached a place that requires finite input."""


class ConfigError(HadesError, ValueError):
    pass
