"""Correlated binary pairs (best response, best objective response)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FeasibilityError

__all__ = ["JointBernoulli", "ScenarioTruth", "rho_bounds", "joint_from_marginals",
           "sample_pair", "sample_pairs"]

_CELL_TOL = 1e-12


@dataclass(frozen=True)
class JointBernoulli:
    """Cell probabilities p_{u1 u2} of a bivariate Bernoulli pair."""

    p00: float
    p10: float
    p01: float
    p11: float

    def __post_init__(self):
        cells = (self.p00, self.p10, self.p01, self.p11)
        if any(not (0.0 <= c <= 1.0) for c in cells):
            raise DomainError(f"cell probabilities must lie in [0, 1], got {cells}")
        if abs(sum(cells) - 1.0) > _CELL_TOL:
            raise DomainError(f"cell probabilities must sum to 1, got {sum(cells)!r}")

    @property
    def mean1(self) -> float:
        return self.p10 + self.p11

    @property
    def mean2(self) -> float:
        return self.p01 + self.p11

    @property
    def cov(self) -> float:
        return self.p11 - self.mean1 * self.mean2

    @property
    def corr(self) -> float:
        v = self.mean1 * (1 - self.mean1) * self.mean2 * (1 - self.mean2)
        return self.cov / math.sqrt(v) if v > 0 else 0.0

    def cumulative(self) -> np.ndarray:
        """Cumulative cell probabilities in the order 00, 10, 01, 11."""
        return np.cumsum([self.p00, self.p10, self.p01, self.p11])


@dataclass(frozen=True)
class ScenarioTruth:
    """True best response rate, best objective response rate and their correlation."""

    p_br: float
    p_bor: float
    rho: float

    def __post_init__(self):
        if not (0.0 <= self.p_br <= 1.0 and 0.0 <= self.p_bor <= 1.0):
            raise DomainError(f"rates must lie in [0, 1], got ({self.p_br}, {self.p_bor})")
        if not (-1.0 <= self.rho <= 1.0):
            raise DomainError(f"rho={self.rho!r} must lie in [-1, 1]")


def rho_bounds(p1: float, p2: float) -> tuple[float, float]:
    """Admissible correlation interval for Bernoulli marginals p1, p2 (Frechet bounds)."""
    sd = math.sqrt(p1 * (1 - p1) * p2 * (1 - p2))
    if sd == 0:
        return 0.0, 0.0
    lo = (max(0.0, p1 + p2 - 1.0) - p1 * p2) / sd
    hi = (min(p1, p2) - p1 * p2) / sd
    return lo, hi


def joint_from_marginals(s: ScenarioTruth) -> JointBernoulli:
    p1, p2, rho = s.p_br, s.p_bor, s.rho
    sd = math.sqrt(p1 * (1 - p1) * p2 * (1 - p2))
    if sd == 0 and rho != 0:
        warnings.warn("degenerate marginal: correlation term forced to 0", RuntimeWarning, stacklevel=2)
    p11 = rho * sd + p1 * p2
    cells = [1.0 - p1 - p2 + p11, p1 - p11, p2 - p11, p11]
    if any(c < -_CELL_TOL or c > 1.0 + _CELL_TOL for c in cells):
        lo, hi = rho_bounds(p1, p2)
        raise FeasibilityError(
            f"rho={rho} infeasible for marginals ({p1}, {p2}); admissible interval [{lo:.6f}, {hi:.6f}]",
            interval=(lo, hi))
    cells = [min(max(c, 0.0), 1.0) for c in cells]
    return JointBernoulli(*cells)


def sample_pairs(j: JointBernoulli, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized draws; returns (u1, u2) integer arrays."""
    cell = np.searchsorted(j.cumulative(), rng.random(size), side="right")
    cell = np.minimum(cell, 3)  # guards against a cumulative sum a hair below 1
    u1 = (cell == 1) | (cell == 3)
    u2 = cell >= 2
    return u1.astype(np.int8), u2.astype(np.int8)


def sample_pair(j: JointBernoulli, rng: np.random.Generator) -> tuple[int, int]:
    u1, u2 = sample_pairs(j, rng, 1)
    return int(u1[0]), int(u2[0])
