"""Exception hierarchy.

The CLI maps :class:`DataError` subclasses to exit status 2 and
:class:`NumericalError` subclasses to exit status 3.
"""


class HinError(Exception):
    """Base class for all package errors."""


class DataError(HinError, ValueError):
    pass


class IngestionError(DataError):
    pass


class SchemaError(DataError):
    pass


class QueryError(DataError):
    pass


class ParameterError(DataError):
    pass


class GenerationError(DataError):
    pass


class NumericalError(HinError, ArithmeticError):
    pass


class CountOverflowError(NumericalError, OverflowError):
    pass
