"""Superiority probability, predictive probability and go/no-go rules.

All comparisons against thresholds are strict.  Future responses are
treated as confirmed outcomes (weight one).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .betacore import BetaParams, beta_binomial_pmf_all, beta_cdf, beta_pdf, integrate_unit
from .errors import DomainError

__all__ = [
    "Thresholds",
    "Verdict",
    "superiority_prob",
    "superiority_prob_given_y",
    "min_success_threshold",
    "predictive_probability",
    "predictive_probability_with_threshold",
    "interim_decision",
    "final_decision",
]

SUPERIORITY_TOL = 1e-10


@dataclass(frozen=True)
class Thresholds:
    lam: float
    theta_l: float
    theta_u: float

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise DomainError(f"lambda={self.lam!r} must lie in (0, 1)")
        if not (0.0 <= self.theta_l < self.theta_u <= 1.0):
            raise DomainError(
                f"need 0 <= theta_L < theta_U <= 1, got theta_L={self.theta_l!r}, theta_U={self.theta_u!r}")


class Verdict(enum.Enum):
    STOP_FUTILITY = "StopFutility"
    STOP_EFFICACY = "StopEfficacy"
    CONTINUE = "Continue"


@lru_cache(maxsize=None)
def superiority_prob(e: BetaParams, s: BetaParams) -> float:
    """Pr(p_E > p_S) for independent p_E ~ Beta(e), p_S ~ Beta(s)."""
    if e == s:
        # exchangeable continuous pair; avoid quadrature noise around 1/2
        return 0.5
    def integrand(p):
        return (1.0 - beta_cdf(p, e)) * beta_pdf(p, s)

    val = integrate_unit(integrand, tol=SUPERIORITY_TOL)
    return min(max(val, 0.0), 1.0)


def _check_y(y, m):
    if int(m) != m or m < 0:
        raise DomainError(f"m={m!r} must be a non-negative integer")
    if int(y) != y or not (0 <= y <= m):
        raise DomainError(f"y={y!r} must be an integer in [0, {m}]")


def superiority_prob_given_y(e_star: BetaParams, y: int, m: int, s: BetaParams) -> float:
    """Superiority probability after ``y`` responses among ``m`` future participants."""
    _check_y(y, m)
    return superiority_prob(BetaParams(e_star.alpha + y, e_star.beta + m - y), s)


def min_success_threshold(e_star: BetaParams, m: int, s: BetaParams, lam: float) -> int:
    """Smallest future response count y whose final superiority exceeds ``lam``.

    Returns ``m + 1`` when no y in 0..m succeeds.  Binary search relies on the
    superiority probability being nondecreasing in y.
    """
    if int(m) != m or m < 0:
        raise DomainError(f"m={m!r} must be a non-negative integer")
    m = int(m)
    lo_p = superiority_prob_given_y(e_star, 0, m, s)
    hi_p = superiority_prob_given_y(e_star, m, m, s)
    assert lo_p <= hi_p + 1e-12, "superiority probability must be nondecreasing in y"
    if lo_p > lam:
        return 0
    if not hi_p > lam:
        return m + 1
    lo, hi = 0, m  # invariant: fails at lo, succeeds at hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if superiority_prob_given_y(e_star, mid, m, s) > lam:
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=None)
def _pp_cached(e_star: BetaParams, s: BetaParams, m: int, lam: float) -> tuple[float, int]:
    ystar = min_success_threshold(e_star, m, s, lam)
    if ystar > m:
        return 0.0, ystar
    pmf = beta_binomial_pmf_all(m, e_star)
    return float(min(np.sum(pmf[ystar:]), 1.0)), ystar


def predictive_probability(e_star: BetaParams, s: BetaParams, m: int, lam: float) -> float:
    """Predictive probability that the end-of-trial superiority rule succeeds."""
    if int(m) != m or m < 0:
        raise DomainError(f"m={m!r} must be a non-negative integer")
    return _pp_cached(e_star, s, int(m), float(lam))[0]


def predictive_probability_with_threshold(e_star: BetaParams, s: BetaParams, m: int,
                                          lam: float) -> tuple[float, int]:
    """Like :func:`predictive_probability` but also returns the success threshold y*."""
    if int(m) != m or m < 0:
        raise DomainError(f"m={m!r} must be a non-negative integer")
    return _pp_cached(e_star, s, int(m), float(lam))


def interim_decision(pp: float, th: Thresholds) -> Verdict:
    if not (0.0 <= pp <= 1.0):
        raise DomainError(f"pp={pp!r} must lie in [0, 1]")
    if pp < th.theta_l:
        return Verdict.STOP_FUTILITY
    if pp > th.theta_u:
        return Verdict.STOP_EFFICACY
    return Verdict.CONTINUE


def final_decision(e_final: BetaParams, s: BetaParams, lam: float) -> bool:
    """True when the treatment is declared sufficiently promising."""
    return superiority_prob(e_final, s) > lam
