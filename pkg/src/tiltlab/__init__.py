"""Tilt stability and well-posedness checkers on grid-sampled functions."""

from ._accel import backend
from .admissible import (AdmissibleFunction, antiderivative_function, construct_catalog,
                         derivative_function, inverse_derivative_function, parse_admissible)
from .certificate import Certificate
from .conjugate import (SmoothnessModulus, check_conjugate_lower_bound, conjugate_transform,
                        convex_envelope, fit_smoothness_modulus)
from .functions import parse_function
from .gridfn import GridFunction, PointSet, localized_argmin, sample_function, tilt_perturb
from .regularity import (check_metric_regularity, check_monotone,
                         check_selection_property_4_4, check_strong_metric_regularity,
                         single_valuedness_radius)
from .search import SearchResult, SweepSpec, search_certificate
from .subdiff import (SetValuedGraph, check_condition_6_1, convex_subdifferential_1d,
                      graph_from_grid, subdifferential_graph)
from .theorems import TheoremInstance, TheoremReport, verify_theorem
from .wellposed import (Sampling, TiltMapTable, WellPosednessInstance, check_growth_from_slope,
                        check_interiority, check_slwp, check_swlwp, check_tslm,
                        check_weak_tslm, tilt_minimizer_map)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleFunction", "Certificate", "GridFunction", "PointSet", "SearchResult",
    "Sampling", "SetValuedGraph", "SmoothnessModulus", "SweepSpec", "TheoremInstance",
    "TheoremReport", "TiltMapTable", "WellPosednessInstance", "antiderivative_function",
    "backend", "check_condition_6_1", "check_conjugate_lower_bound", "check_growth_from_slope",
    "check_interiority", "check_metric_regularity", "check_monotone",
    "check_selection_property_4_4", "check_slwp", "check_strong_metric_regularity",
    "check_swlwp", "check_tslm", "check_weak_tslm", "conjugate_transform",
    "construct_catalog", "convex_envelope", "convex_subdifferential_1d", "derivative_function",
    "fit_smoothness_modulus", "graph_from_grid", "inverse_derivative_function",
    "localized_argmin", "parse_admissible", "parse_function", "sample_function",
    "search_certificate", "single_valuedness_radius", "subdifferential_graph", "tilt_minimizer_map",
    "tilt_perturb", "verify_theorem",
]
