"""Numerical functional calculus for matrices via the Cauchy-Pompeiu formula."""

__version__ = "0.1.0"

from .errors import (AtomOnBoundary, BoxTooSmall, ClustersOverlap, ConfigError, DegenerateLevel,
                     DisagreeOnSpectrum, MissingOracle, NonCauchy, NonConvergent, NonFiniteSample,
                     NumericalError, OnSpectrum, PointTooClose, PompeiuError, SingularMatrix,
                     SpectrumNotEnclosed)
from .matrix import (LinearFunctional, Spectrum, from_eigenstructure, lu_factor, lu_solve,
                     oracle_fc, random_conditioned, random_unitary, resolvent, resolvent_batch,
                     spectral_norm)
from .reduce import set_threads, threads, weighted_sum
from .contour import (Contour, ContourSequence, DistanceField, build_distance_field,
                      contour_sequence, extract_level_set, filled_disk_field)
from .quadrature import (RegionQuadrature, band_quadrature, coarea_check, contour_integral,
                         functional_exchange_check, region_integral, region_quadrature)
from .functions import FunctionSpec, MollifierSequence, almost_analytic_extension, make
from .calculus import (cfc_boundary_limit, continuous_fc, holomorphic_fc, restriction_check,
                       scalar_cauchy_pompeiu, smooth_fc, smooth_fc_terms)
from .spectral import (AtomicMeasure, SpectralFamily, borel_fc, cross_validate,
                       family_axiom_report, mu, operator_measure, spectral_projectors)
from .regularity import (IntegrabilityReport, boundary_limit_existence, distance_integral,
                         epsilon_ladder, resolvent_norm_integral, truncation_samples,
                         truncation_study)

__all__ = [
    "__version__",
    # errors
    "AtomOnBoundary", "BoxTooSmall", "ClustersOverlap", "ConfigError", "DegenerateLevel",
    "DisagreeOnSpectrum", "MissingOracle", "NonCauchy", "NonConvergent", "NonFiniteSample",
    "NumericalError", "OnSpectrum", "PointTooClose", "PompeiuError", "SingularMatrix",
    "SpectrumNotEnclosed",
    # matrix core and reduction
    "LinearFunctional", "Spectrum", "from_eigenstructure", "lu_factor", "lu_solve", "oracle_fc",
    "random_conditioned", "random_unitary", "resolvent", "resolvent_batch", "spectral_norm",
    "set_threads", "threads", "weighted_sum",
    # geometry and quadrature
    "Contour", "ContourSequence", "DistanceField", "build_distance_field", "contour_sequence",
    "extract_level_set", "filled_disk_field", "RegionQuadrature", "band_quadrature",
    "coarea_check", "contour_integral", "functional_exchange_check", "region_integral",
    "region_quadrature",
    # calculi
    "FunctionSpec", "MollifierSequence", "almost_analytic_extension", "make",
    "cfc_boundary_limit", "continuous_fc", "holomorphic_fc", "restriction_check",
    "scalar_cauchy_pompeiu", "smooth_fc", "smooth_fc_terms",
    # spectral and regularity
    "AtomicMeasure", "SpectralFamily", "borel_fc", "cross_validate", "family_axiom_report", "mu",
    "operator_measure", "spectral_projectors", "IntegrabilityReport", "boundary_limit_existence",
    "distance_integral", "epsilon_ladder", "resolvent_norm_integral", "truncation_samples",
    "truncation_study",
]
