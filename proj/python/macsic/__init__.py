"""Asymptotic analysis, power optimization and Monte-Carlo simulation of
iterative soft interference cancellation for Gaussian random codes on the
AWGN multiple-access channel."""

from ._macsic import (  # noqa: F401
    BoundKind,
    CodeSpec,
    DecodeResult,
    EnvelopeError,
    EtaGrid,
    EvolutionState,
    FadingModel,
    LpProblem,
    LpSolution,
    LpStatus,
    OptimizeResult,
    PowerGroup,
    PowerProfile,
    ProfileEntry,
    QuadratureRule,
    SimReport,
    SimState,
    __version__,
    binary_entropy,
    block_error_prob,
    build_power_lp,
    conditional_pe_finite,
    decode,
    default_power_grid,
    evolve,
    fading_outer_bound,
    fading_outer_bound_a,
    final_pe,
    gauss_hermite,
    gaussian_q,
    gaussian_q_inv,
    generate_codebook,
    initial_sim_state,
    log_gaussian_q,
    log_q_pow,
    marcum_q,
    multiuser_efficiency,
    optimize_profile,
    pe_lower_bound,
    posterior_error_prob,
    q_pow,
    residual_fraction_lower,
    residual_fraction_upper,
    run_simulation,
    simplex_solve,
    single_user_pe,
    soft_cancel_iteration,
    threshold_snr,
    tradeoff_sweep,
)
