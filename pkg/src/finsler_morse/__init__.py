"""Geodesics, Jacobi fields and Morse indices for Riemannian and Randers metrics on chart manifolds."""

from .census import (
    BettiTable,
    CensusTable,
    GrowthReport,
    betti_table,
    boundedness_contradiction_demo,
    build_census,
    closed_geodesic_through,
    covered_bound_check,
    iterate_growth,
    morse_inequality_check,
    subadditivity_check,
)
from .geodesic import (
    GeodesicPath,
    concatenate_iterate,
    find_closed_geodesic,
    integrate_ivp,
    iterate_closed,
    principal_closed_geodesics,
    solve_bvp,
    split_at,
    verify_geodesic,
)
from .index import index_report, morse_index, verify_index_decomposition
from .jacobi import b_form, conjugate_points, jacobi_subspaces, linearize, monodromy, solve_jacobi, wronskian
from .metric import (
    MetricSpec,
    OneForm,
    TangentVector,
    cartan_tensor,
    check_strong_convexity,
    ellipsoid,
    euclidean_plane,
    eval_F,
    flat_torus,
    fundamental_tensor,
    load_metric,
    randers,
    round_sphere,
)

__version__ = "0.1.0"
