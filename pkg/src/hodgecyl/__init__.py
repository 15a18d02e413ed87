"""Numerical laboratory for harmonic differential forms on 2D cylinders."""

from .geometry import (
    BoundaryJet,
    ConformalFactor,
    MetricField2D,
    boundary_jet,
    conformal_paper_metric,
    conformal_rescale,
    flat_metric,
    gaussian_curvature,
    hyperbolic_metric,
    local_distance,
    pseudosphere_check,
    reference_curvature_conformal,
    series_metric,
)

__all__ = [
    "BoundaryJet",
    "ConformalFactor",
    "MetricField2D",
    "boundary_jet",
    "conformal_paper_metric",
    "conformal_rescale",
    "flat_metric",
    "gaussian_curvature",
    "hyperbolic_metric",
    "local_distance",
    "pseudosphere_check",
    "reference_curvature_conformal",
    "series_metric",
]

__version__ = "0.1.0"
