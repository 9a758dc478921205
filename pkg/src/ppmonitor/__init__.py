"""Bayesian predictive-probability monitoring for single-arm trials with
delayed response confirmation."""

from .betacore import BetaParams, beta_binomial_pmf, beta_cdf, beta_pdf, integrate, log_beta_fn
from .bivariate import JointBernoulli, ScenarioTruth, joint_from_marginals, rho_bounds, sample_pair
from .calibrate import CalibrationGrid, CalibrationResult, calibrate
from .decision import (
    Thresholds,
    Verdict,
    final_decision,
    interim_decision,
    min_success_threshold,
    predictive_probability,
    superiority_prob,
)
from .errors import AccuracyError, ConfigError, DomainError, FeasibilityError, NumericalIntegrityError
from .gbayes import InterimSnapshot, OutcomeFlag, SnapshotCounts, loss, quasi_posterior
from .inference import DiffPosterior, appell_f1, diff_credible_interval, diff_density, diff_mean
from .trialsim import (
    OperatingCharacteristics,
    ParticipantRecord,
    Policy,
    TimelineConfig,
    TrialDesign,
    TrialResult,
    operating_characteristics,
    simulate_trial,
)

__version__ = "0.1.0"
