"""finslerlab: numerical toolkit for projectively flat (alpha,beta)-metrics."""

__version__ = "0.1.0"

from .abmetric import ABMetric, F_eval, NavigationData, fundamental_tensor, spray_ab
from .classify import InvariantSignature, Quadruple, invariants, reduce_quadruple, same_type
from .deform import berwald_chain, eta_factor, forward_chain, inverse_chain, standard_factors
from .flatness import (
    FlatnessReport,
    GeodesicTrace,
    hamel_residual,
    integrate_geodesic,
    rapcsak_residual,
    straightness_deviation,
    verify_flatness,
)
from .geometry import MetricField, OneFormField, christoffel, covariant_derivative, norm_b, spray_riemann
from .models import berwald_metric, build_model, closed_conformal_form, family_sigma_metric, funk_metric, space_form_metric
from .phifuncs import OdeParams, PhiSpec, QuadraturePhi, SigmaSeriesPhi, ode_residual, regularity_check

__all__ = [
    "__version__",
    "ABMetric", "F_eval", "NavigationData", "fundamental_tensor", "spray_ab",
    "InvariantSignature", "Quadruple", "invariants", "reduce_quadruple", "same_type",
    "berwald_chain", "eta_factor", "forward_chain", "inverse_chain", "standard_factors",
    "FlatnessReport", "GeodesicTrace", "hamel_residual", "integrate_geodesic",
    "rapcsak_residual", "straightness_deviation", "verify_flatness",
    "MetricField", "OneFormField", "christoffel", "covariant_derivative", "norm_b",
    "spray_riemann",
    "berwald_metric", "build_model", "closed_conformal_form", "family_sigma_metric",
    "funk_metric", "space_form_metric",
    "OdeParams", "PhiSpec", "QuadraturePhi", "SigmaSeriesPhi", "ode_residual",
    "regularity_check",
]
