"""Generalized-Bayes quasi-posterior with discounted pending outcomes.

Participants whose response status is still pending at the decision time
contribute a fractional count ``w`` (0 < w < 1) instead of a full
Bernoulli observation.  With a beta prior the quasi-posterior stays beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .betacore import BetaParams
from .errors import DomainError

__all__ = [
    "OutcomeFlag",
    "InterimSnapshot",
    "SnapshotCounts",
    "check_weight",
    "loss",
    "quasi_posterior",
    "quasi_posterior_from_counts",
]


def check_weight(w: float) -> float:
    w = float(w)
    if not (0.0 < w < 1.0):
        raise DomainError(f"weight w={w!r} must lie in the open interval (0, 1)")
    return w


@dataclass(frozen=True)
class OutcomeFlag:
    """Per-participant state at a decision time.

    ``x`` is 1 when a response has been seen, ``gamma`` is 1 when the outcome
    is ascertained (confirmed) and 0 while it is pending.
    """

    x: int
    gamma: int

    def __post_init__(self):
        if self.x not in (0, 1) or self.gamma not in (0, 1):
            raise DomainError(f"outcome flags must be binary, got x={self.x!r}, gamma={self.gamma!r}")


@dataclass(frozen=True)
class SnapshotCounts:
    confirmed_responses: int = 0
    pending_responses: int = 0
    confirmed_nonresponses: int = 0
    pending_nonresponses: int = 0

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if int(v) != v or v < 0:
                raise DomainError(f"{k}={v!r} must be a non-negative integer")

    @property
    def n(self) -> int:
        return (self.confirmed_responses + self.pending_responses
                + self.confirmed_nonresponses + self.pending_nonresponses)


@dataclass(frozen=True)
class InterimSnapshot:
    flags: tuple[OutcomeFlag, ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "InterimSnapshot":
        return cls(tuple(OutcomeFlag(int(x), int(g)) for x, g in pairs))

    @classmethod
    def from_counts(cls, counts: SnapshotCounts) -> "InterimSnapshot":
        flags = ([OutcomeFlag(1, 1)] * counts.confirmed_responses
                 + [OutcomeFlag(1, 0)] * counts.pending_responses
                 + [OutcomeFlag(0, 1)] * counts.confirmed_nonresponses
                 + [OutcomeFlag(0, 0)] * counts.pending_nonresponses)
        return cls(tuple(flags))

    def __len__(self):
        return len(self.flags)

    def counts(self) -> SnapshotCounts:
        c = {(1, 1): 0, (1, 0): 0, (0, 1): 0, (0, 0): 0}
        for f in self.flags:
            c[(f.x, f.gamma)] += 1
        return SnapshotCounts(c[(1, 1)], c[(1, 0)], c[(0, 1)], c[(0, 0)])


def _weighted_sums(data: InterimSnapshot | SnapshotCounts, w: float) -> tuple[float, float]:
    c = data.counts() if isinstance(data, InterimSnapshot) else data
    succ = c.confirmed_responses + w * c.pending_responses
    fail = c.confirmed_nonresponses + w * c.pending_nonresponses
    return succ, fail


def loss(p: float, data: InterimSnapshot, w: float) -> float:
    """Negative weighted log-likelihood of the snapshot at response rate ``p``."""
    w = check_weight(w)
    if not (0.0 < p < 1.0):
        raise DomainError(f"p={p!r} must lie strictly inside (0, 1)")
    succ, fail = _weighted_sums(data, w)
    return -succ * math.log(p) - fail * math.log1p(-p)


def quasi_posterior(prior: BetaParams, data: InterimSnapshot, w: float) -> BetaParams:
    """Beta quasi-posterior: pending outcomes enter with weight ``w``."""
    w = check_weight(w)
    succ, fail = _weighted_sums(data, w)
    return BetaParams(prior.alpha + succ, prior.beta + fail)


def quasi_posterior_from_counts(prior: BetaParams, counts: SnapshotCounts, w: float) -> BetaParams:
    w = check_weight(w)
    succ, fail = _weighted_sums(counts, w)
    return BetaParams(prior.alpha + succ, prior.beta + fail)
