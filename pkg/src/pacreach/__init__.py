"""PAC-certified reachable-set estimation from sampled trajectories."""

from .bridge import (
    EquivalenceReport,
    JointParams,
    check_thm4,
    check_thm5,
    joint_parameterization,
    matched_params,
)
from .certify import (
    Method,
    PacCertificate,
    ScoreVector,
    calib_size_for,
    conformal_adjust,
    conformal_index,
    conformal_quantile,
    count_violations,
    empirical_conformal_certify,
    exact_discard_k,
    holdout_certify,
    max_discard_k,
    scenario_certify,
    scenario_discard,
    scores,
    split_conformal_certify,
)
from .dynamics import (
    Gaussian,
    SampleBatch,
    SamplingSpec,
    SystemSpec,
    UniformBall,
    UniformBox,
    derive_seed,
    draw_samples,
    duffing,
    duffing_sampling,
    simulate,
)
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DomainError,
    EmptySetError,
    InfeasibleError,
    InsufficientCalibrationError,
    SimulationDiverged,
)
from .setrep import Ellipsoid, fit_mvee, unit_ball_volume
from .specfun import (
    beta_cdf,
    beta_isf,
    beta_upper,
    binom_cdf,
    binom_tail_inv,
    log_beta_sf,
    log_binom_cdf,
    log_binom_pmf,
)

__version__ = "0.1.0"
