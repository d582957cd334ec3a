"""Alpha-geometry on the probability simplex.

Representations, geodesics, divergences, and energies of the alpha-connection
family on categorical distributions, plus a toy-scale geodesic flow-matching
trainer/sampler and a KDE evaluation harness.
"""

from .alpha_geometry import (
    AlphaParam,
    MappedState,
    MappedTangent,
    alpha_divergence,
    alpha_norm_sq,
    from_alpha_rep,
    map_tangent,
    measure_alpha_divergence,
    modified_alpha_rep,
    neg_divergence_gradient,
    project_sphere_tangent,
    q_logarithm,
    to_alpha_rep,
    unmap_tangent,
)
from .energy import (
    DiscreteCurve,
    curve_alpha_energy,
    discretize_geodesic,
    finsler_metric,
    kinetic_energy,
    max_relative_velocity,
    perturb_curve,
)
from .evaluation import (
    DensityGrid,
    kde_density,
    kde_kl,
    load_points_csv,
    make_density_grid,
    save_points_csv,
    simplex_to_plane,
    swiss_roll_simplex,
)
from .flow import (
    FlowConfig,
    LossReport,
    Model,
    elbo_report,
    load_model,
    sample,
    save_model,
    train,
    training_loss,
)
from .geodesics import (
    GeodesicCurve,
    conditional_vector_field,
    exp_map,
    geodesic,
    geodesic_equation_residual,
    log_map,
    m_plus_geodesic,
)
from .manifold import (
    DimensionMismatchError,
    InvariantViolationError,
    NumericalError,
    SimplexPoint,
    SimplexTangent,
    clamp_normalize,
    fisher_inner,
    make_rng,
    project_tangent,
    sample_uniform_simplex,
)
from .reparam import (
    ReparamSolution,
    closed_form_tau,
    solve_tau_bvp,
    solve_tau_ivp,
)

__version__ = "0.1.0"
