"""Exception hierarchy shared across the package."""


class MarginkitError(Exception):
    """Base class for all errors raised by marginkit."""


class ParseError(MarginkitError):
    """A malformed record was encountered while reading input data."""


class ConfigError(MarginkitError):
    """A run configuration is missing, malformed or inconsistent."""


class DataError(MarginkitError):
    """Input data violates a structural precondition."""


class InsufficientDataError(DataError):
    """The sample is too small for the requested statistic."""


class DegenerateSeriesError(DataError):
    """The series is constant or otherwise carries no usable variation."""


class EstimationError(MarginkitError):
    """An estimator failed to produce a valid result on this sample."""


class MarginUnavailable(MarginkitError):
    """The requested margin cannot be computed for this model and sample.

    Raised when a quantile is out of sample for the historical model, when a
    coverage level lies beyond the estimated tail region, or when a model has
    no scaling rule for the requested horizon.  Report builders translate
    this into an unavailable cell instead of aborting.
    """
