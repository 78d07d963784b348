"""Exception hierarchy mirroring the pipeline's failure classes.

The CLI maps these to exit codes: ingestion 2, analysis 3, emission 4.
"""


class NetspreadError(Exception):
    """Base class for all errors raised by this package."""


class IngestionError(NetspreadError):
    """Input files failed to parse or validate."""


class AnalysisError(NetspreadError):
    """A computation stage received data it cannot process."""


class EmissionError(NetspreadError):
    """An output artifact could not be produced."""


class DisconnectedGraphError(AnalysisError):
    """Path-based metric requested on a disconnected view."""


class FitDomainError(AnalysisError):
    """Data violates a curve family's domain constraints."""


class SingularDesignError(AnalysisError):
    """Least-squares design matrix is rank deficient."""


class DegenerateDataError(AnalysisError):
    """Sample has no usable spread (constant vector, empty input, ...)."""


class StageCutError(AnalysisError):
    """Density curve shows no two-stage structure."""
