# -*- coding: utf-8 -*-
"""
Excepciones de trendlime. Todas las fatales heredan de TrendLimeError.
"""


class TrendLimeError(Exception):
    """Fatal pipeline error."""


class ConfigError(TrendLimeError):
    pass


class MissingInputError(TrendLimeError):
    pass


class SchemaError(TrendLimeError):
    """Input columns missing, or too many malformed rows to trust the schema."""


class DataIntegrityError(TrendLimeError):
    """Corrupt price data: duplicate dates, OHLC sanity violations."""


class EmptyWindowError(TrendLimeError):

    def __init__(self, message, counts=None):
        super(EmptyWindowError, self).__init__(message)
        self.counts = dict(counts or {})


class OrderingError(TrendLimeError):
    """Writer-score ledger asked about a post earlier than its frontier."""


class ShapeError(TrendLimeError):
    pass


class NumericError(TrendLimeError):

    def __init__(self, message, layer=None, seed=None):
        super(NumericError, self).__init__(message)
        self.layer = layer
        self.seed = seed


class ScalerMismatchError(TrendLimeError):
    """Instance was not scaled with the model's own scaler."""


class OutputError(TrendLimeError):
    """Report or artifact directory cannot be written."""
