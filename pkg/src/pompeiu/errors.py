"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError`; the CLI maps them to
exit code 2. Configuration problems raise :class:`ConfigError` (exit code 1).
"""


class PompeiuError(Exception):
    """Base class for all package errors."""


class ConfigError(PompeiuError, ValueError):
    pass


class NumericalError(PompeiuError):
    """A computation could not be carried out at the requested accuracy."""

    operation = "numerical"

    def __init__(self, message: str = "", operation: str = None):
        super().__init__(message)
        if operation is not None:
            self.operation = operation


class SingularMatrix(NumericalError):
    operation = "lu_solve"


class OnSpectrum(NumericalError):
    operation = "resolvent"


class MissingOracle(NumericalError):
    operation = "oracle_fc"


class BoxTooSmall(NumericalError):
    operation = "distance_field"


class DegenerateLevel(NumericalError):
    operation = "extract_level_set"

    def __init__(self, message, level=None, index=None):
        super().__init__(message)
        self.level = level
        self.index = index


class NonFiniteSample(NumericalError):
    operation = "quadrature"

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class PointTooClose(NumericalError):
    operation = "scalar_cauchy_pompeiu"


class SpectrumNotEnclosed(NumericalError):
    operation = "functional_calculus"


class NonConvergent(NumericalError):
    operation = "continuous_fc"


class DisagreeOnSpectrum(NumericalError):
    operation = "restriction_check"


class ClustersOverlap(NumericalError):
    operation = "spectral_projectors"

    def __init__(self, message, suggested_radius=None):
        super().__init__(message)
        self.suggested_radius = suggested_radius


class AtomOnBoundary(NumericalError):
    operation = "operator_measure"


class NonCauchy(NumericalError):
    operation = "boundary_limit_existence"
