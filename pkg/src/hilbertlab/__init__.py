"""hilbertlab: a numerical laboratory for Hilbert-type singular integrals,
their sharp constants, and the orthogonal-martingale inequalities sharing them.
"""

from .core import (
    Domain,
    DomainError,
    GaugeDivergenceError,
    GaugePair,
    GridFunction,
    LLogLGauge,
    NormGauge,
    NormedSpace,
    PiecewiseFunction,
    PowerGauge,
    SCALAR,
    evaluate_gauge,
    format_piecewise,
    integrate_gauge,
    parse_gauge,
    parse_piecewise,
    project_zero_mean,
)
from .transforms import (
    BoxFunction,
    DirectionalHilbert,
    DiscreteHilbert,
    HilbertOperatorTj,
    PeriodicHilbert,
    RealHilbert,
    RieszMultiplier,
    RieszRotations,
    SemidiscreteHilbert,
    SingularConfigurationError,
    SingularPointError,
    directional_hilbert,
    discrete_hilbert,
    hilbert_operator_T,
    periodic_hilbert_fft,
    periodic_hilbert_step,
    real_hilbert_step,
    riesz_multiplier,
    riesz_power_constant,
    riesz_rotations,
    semidiscrete_hilbert,
)
from .norms import (
    CrossDomainReport,
    IterationError,
    NormEstimate,
    cross_domain_consistency,
    extrapolation_constant,
    phi_psi_ratio_ascent,
    pichorides_constant,
    p_norm_power_iteration,
    rayleigh_ratio,
    reference_constants,
)
from .mcsim import (
    AdaptedIntegrand,
    DeterministicIntegrand,
    PathPair,
    SimConfig,
    check_orthogonality,
    check_subordination,
    conjugate_extension,
    estimate_decoupling_gamma,
    exit_angles,
    harmonic_inequality_check,
    mc_inequality,
    poisson_extension,
    sample_exit_disc,
    sign_of_path_integrand,
    simulate_pair,
    tau_moment_check,
)

__version__ = "0.1.0"
