"""caplab: a numerical laboratory for capillary surface geometry.

Conformally flat ambient charts (Euclidean space, the round 3-sphere in a
stereographic chart), immersed surfaces and their curvature, transitive
families of comparison surfaces, the difference tensor sigma with its
asymptotic/principal direction fields, half-integer singularity indices,
double-surface Poincare-Hopf audits, and scenario-driven verdicts with a
reproducible CLI.
"""

from caplab.geometry import (
    ConformalChart,
    FundamentalForms,
    ParametricSurface,
    christoffel,
    fundamental_forms,
    mean_and_principal_curvatures,
    metric_at,
    s3_lift,
)

__all__ = [
    "ConformalChart",
    "ParametricSurface",
    "FundamentalForms",
    "metric_at",
    "christoffel",
    "fundamental_forms",
    "mean_and_principal_curvatures",
    "s3_lift",
]

__version__ = "0.1.0"
