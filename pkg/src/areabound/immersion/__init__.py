"""Parametric immersions in R^3 and their weighted geometry."""

from .geodesic import (
    BoundaryCurvatures,
    GeodesicPolarChart,
    bonnet_gauss_defect,
    boundary_curvatures,
    chart_boundary_curvatures,
    geodesic_polar,
)
from .stability import mu_stability_estimate, rayleigh_quotient, stability_forms
from .surface import (
    BUILTINS,
    Immersion,
    ImmersionError,
    PolarMesh,
    catenoid,
    enneper,
    from_expressions,
    from_values,
    gauss_curvature,
    graph,
    immersion_from_json,
    plane,
    scherk,
    sphere_cap,
    unit_normal,
)
from .weights import (
    NormIntegrand,
    ParametricIntegrand,
    QuadraticNormIntegrand,
    ScaledNormIntegrand,
    WeightError,
    WeightMatrix,
    anisotropic_weight,
    det_prime,
    dirichlet_energies,
    identity_weight,
    weight_from_integrand,
    weighted_mean_curvature,
    weighted_metric,
)
