"""Discrete-event simulation of single-arm trials with delayed confirmation.

Each participant gets an enrollment day, a (best response, best objective
response) pair and, when applicable, the assessment visits at which the
first response and its confirmation are seen.  Three monitoring policies
differ only in when an interim look happens and in how outcomes are
re-mapped at that time:

* ``PROPOSED``: look once every enrollee has two assessments; unconfirmed
  responses and unresolved non-responses enter with weight ``w``.
* ``EXPEDITION``: same timing, but only confirmed responses count.
* ``PERFORMANCE``: wait until every enrollee's outcome is ascertained.

Accrual is suspended while a look is pending and resumes on a Continue
verdict.  Batches of trials are simulated together; every trial owns an
independent random stream derived from ``(seed, trial index)`` so results
do not depend on batching or thread count.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .betacore import BetaParams
from .bivariate import ScenarioTruth, joint_from_marginals, sample_pair
from .decision import Thresholds, Verdict, final_decision, interim_decision, predictive_probability
from .errors import DomainError
from .gbayes import InterimSnapshot, OutcomeFlag, SnapshotCounts, check_weight, quasi_posterior_from_counts

__all__ = [
    "DAYS_PER_MONTH",
    "DAYS_PER_WEEK",
    "Policy",
    "TimelineConfig",
    "TrialDesign",
    "ParticipantRecord",
    "TrialResult",
    "LookRecord",
    "OperatingCharacteristics",
    "confirm_delay_law",
    "trial_rng",
    "simulate_participant",
    "decision_ready_day",
    "snapshot",
    "simulate_trial",
    "simulate_trial_trace",
    "simulate_trials",
    "operating_characteristics",
]

DAYS_PER_WEEK = 7.0
DAYS_PER_MONTH = 30.4375


class Policy(enum.Enum):
    PROPOSED = "Proposed"
    PERFORMANCE = "PerformanceOriented"
    EXPEDITION = "ExpeditionOriented"

    @classmethod
    def parse(cls, name: str) -> "Policy":
        key = name.strip().lower().replace("-", "").replace("_", "")
        for p in cls:
            if key in (p.value.lower(), p.name.lower(), p.value.lower().replace("oriented", "")):
                return p
        raise DomainError(f"unknown policy {name!r}; expected one of {[p.value for p in cls]}")


def confirm_delay_law(p_first: float = 0.68, p_second: float = 0.95,
                      interval: float = 56.0) -> tuple[float, float]:
    """Normal (mean, sd) of the surrogate-to-confirmation delay.

    Chosen so the delay is at most one assessment interval with probability
    ``p_first`` and at most two intervals with probability ``p_second``.
    """
    z1, z2 = stats.norm.ppf(p_first), stats.norm.ppf(p_second)
    sd = interval / (z2 - z1)
    return interval - z1 * sd, sd


_CONFIRM_MEAN, _CONFIRM_SD = confirm_delay_law()


@dataclass(frozen=True)
class TimelineConfig:
    ramp_up_days: float = 15 * DAYS_PER_MONTH
    cohort_accrual_days: float = 3 * DAYS_PER_MONTH
    assess_interval_days: float = 8 * DAYS_PER_WEEK
    response_window_assessments: int = 4
    confirm_mean_days: float = _CONFIRM_MEAN
    confirm_sd_days: float = _CONFIRM_SD
    min_confirm_gap_days: float = 4 * DAYS_PER_WEEK
    maturity_assessments: int = 2

    def __post_init__(self):
        for name in ("ramp_up_days", "cohort_accrual_days", "assess_interval_days",
                     "confirm_sd_days", "min_confirm_gap_days"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name}={v!r} must be a positive duration")
        if not math.isfinite(self.confirm_mean_days):
            raise DomainError("confirm_mean_days must be finite")
        for name in ("response_window_assessments", "maturity_assessments"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name}={v!r} must be an integer >= 1")


@dataclass(frozen=True)
class TrialDesign:
    n_min: int = 15
    n_max: int = 40
    cohort: int = 5
    thresholds: Thresholds = field(default_factory=lambda: Thresholds(0.8, 0.0, 0.8))
    w: float = 0.5
    prior_e: BetaParams = field(default_factory=lambda: BetaParams(0.5, 0.5))
    prior_s: BetaParams = field(default_factory=lambda: BetaParams(20.0, 80.0))
    timeline: TimelineConfig = field(default_factory=TimelineConfig)

    def __post_init__(self):
        if not (0 < self.n_min <= self.n_max):
            raise DomainError(f"need 0 < n_min <= n_max, got {self.n_min}, {self.n_max}")
        if self.cohort < 1:
            raise DomainError(f"cohort={self.cohort!r} must be >= 1")
        if (self.n_max - self.n_min) % self.cohort:
            raise DomainError("n_max - n_min must be divisible by the cohort size")
        check_weight(self.w)

    @property
    def looks(self) -> tuple[int, ...]:
        return tuple(range(self.n_min, self.n_max + 1, self.cohort))

    def with_thresholds(self, lam: float, theta_u: float) -> "TrialDesign":
        from dataclasses import replace
        return replace(self, thresholds=Thresholds(lam, self.thresholds.theta_l, theta_u))


@dataclass(frozen=True)
class ParticipantRecord:
    enroll_day: float
    br: int
    bor: int
    surrogate_day: float | None
    confirm_day: float | None
    ascertain_day: float


@dataclass(frozen=True)
class TrialResult:
    stopped_early: bool
    rejected_null: bool
    sample_size: int
    duration_days: float


@dataclass(frozen=True)
class LookRecord:
    n: int
    day: float
    counts: SnapshotCounts
    posterior: BetaParams
    pp: float | None
    verdict: Verdict | None


@dataclass(frozen=True)
class OperatingCharacteristics:
    pet: float
    prn: float
    ass: float
    asd: float
    n_sims: int


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


# ---------------------------------------------------------------------------
# participant timelines


def _relative_events(br, bor, visit, z, cfg: TimelineConfig):
    """Event offsets from enrollment (days); NaN where an event never happens."""
    step = cfg.assess_interval_days
    br = np.asarray(br, dtype=bool)
    bor = np.asarray(bor, dtype=bool)
    delay = np.maximum(cfg.confirm_mean_days + cfg.confirm_sd_days * np.asarray(z, dtype=float),
                       cfg.min_confirm_gap_days)
    confirm = np.asarray(visit, dtype=float) * step + np.ceil(delay / step) * step
    surrogate = np.where(bor & ~br, confirm - step, np.asarray(visit, dtype=float) * step)
    fail_check = surrogate + math.ceil(cfg.min_confirm_gap_days / step) * step
    window_end = cfg.response_window_assessments * step
    ascertain = np.where(bor, confirm, np.where(br, fail_check, window_end))
    surrogate = np.where(br | bor, surrogate, np.nan)
    confirm = np.where(bor, confirm, np.nan)
    return surrogate, confirm, ascertain


def simulate_participant(s: ScenarioTruth, enroll_day: float, cfg: TimelineConfig,
                         rng: np.random.Generator) -> ParticipantRecord:
    br, bor = sample_pair(joint_from_marginals(s), rng)
    visit = rng.integers(1, cfg.response_window_assessments + 1)
    z = rng.standard_normal()
    sur, conf, asc = _relative_events(br, bor, visit, z, cfg)
    return ParticipantRecord(
        enroll_day=float(enroll_day),
        br=int(br),
        bor=int(bor),
        surrogate_day=None if np.isnan(sur) else float(enroll_day + sur),
        confirm_day=None if np.isnan(conf) else float(enroll_day + conf),
        ascertain_day=float(enroll_day + asc),
    )


def decision_ready_day(records: Sequence[ParticipantRecord], policy: Policy, cfg: TimelineConfig) -> float:
    if not records:
        raise DomainError("need at least one participant")
    if policy is Policy.PERFORMANCE:
        return max(r.ascertain_day for r in records)
    return max(r.enroll_day for r in records) + cfg.maturity_assessments * cfg.assess_interval_days


def _flag(r: ParticipantRecord, t: float, policy: Policy) -> OutcomeFlag:
    if policy is Policy.PERFORMANCE:
        return OutcomeFlag(r.bor, 1)
    if policy is Policy.EXPEDITION:
        return OutcomeFlag(int(r.confirm_day is not None and r.confirm_day <= t), 1)
    if r.surrogate_day is not None and r.surrogate_day <= t:
        if r.confirm_day is not None and r.confirm_day <= t:
            return OutcomeFlag(1, 1)
        if not r.bor and r.ascertain_day <= t:
            return OutcomeFlag(0, 1)
        return OutcomeFlag(1, 0)
    return OutcomeFlag(0, int(r.ascertain_day <= t))


def snapshot(records: Sequence[ParticipantRecord], t: float, policy: Policy) -> InterimSnapshot:
    """Outcome flags of every enrolled participant as known on day ``t``."""
    if any(r.enroll_day > t for r in records):
        raise DomainError("snapshot time precedes an enrollment")
    return InterimSnapshot(tuple(_flag(r, t, policy) for r in records))


# ---------------------------------------------------------------------------
# batched engine


@dataclass
class _Draws:
    br: np.ndarray
    bor: np.ndarray
    surrogate: np.ndarray
    confirm: np.ndarray
    ascertain: np.ndarray
    accrual: np.ndarray  # uniforms, sorted within each accrual block


def _blocks(d: TrialDesign):
    out = [(0, d.n_min, d.timeline.ramp_up_days)]
    out += [(n - d.cohort, n, d.timeline.cohort_accrual_days) for n in d.looks[1:]]
    return out


def _draw_trial(d: TrialDesign, joint_cum: np.ndarray, rng: np.random.Generator):
    n = d.n_max
    cell = np.minimum(np.searchsorted(joint_cum, rng.random(n), side="right"), 3)
    visit = rng.integers(1, d.timeline.response_window_assessments + 1, size=n)
    z = rng.standard_normal(n)
    acc = rng.random(n)
    return cell, visit, z, acc


def _make_draws(d: TrialDesign, s: ScenarioTruth, rngs) -> _Draws:
    joint_cum = joint_from_marginals(s).cumulative()
    parts = [_draw_trial(d, joint_cum, r) for r in rngs]
    cell = np.stack([p[0] for p in parts])
    visit = np.stack([p[1] for p in parts])
    z = np.stack([p[2] for p in parts])
    acc = np.stack([p[3] for p in parts])
    for a, b, _ in _blocks(d):
        acc[:, a:b] = np.sort(acc[:, a:b], axis=1)
    br = (cell == 1) | (cell == 3)
    bor = cell >= 2
    sur, conf, asc = _relative_events(br, bor, visit, z, d.timeline)
    return _Draws(br, bor, sur, conf, asc, acc)


def _counts_at(policy: Policy, draws: _Draws, rows, n: int, enroll: np.ndarray, t: np.ndarray):
    """Vectorized snapshot counts (cr, pr, cn, pn) for trials ``rows`` at days ``t``."""
    tt = t[:, None]
    bor = draws.bor[rows, :n]
    if policy is Policy.PERFORMANCE:
        cr = bor.sum(1)
        return cr, np.zeros_like(cr), n - cr, np.zeros_like(cr)
    with np.errstate(invalid="ignore"):
        conf_seen = (enroll + draws.confirm[rows, :n]) <= tt
    if policy is Policy.EXPEDITION:
        cr = conf_seen.sum(1)
        return cr, np.zeros_like(cr), n - cr, np.zeros_like(cr)
    with np.errstate(invalid="ignore"):
        sur_seen = (enroll + draws.surrogate[rows, :n]) <= tt
    resolved = (enroll + draws.ascertain[rows, :n]) <= tt
    conf_resp = sur_seen & conf_seen
    failed = sur_seen & ~bor & resolved
    pend_resp = sur_seen & ~conf_resp & ~failed
    conf_non = (~sur_seen & resolved) | failed
    pend_non = ~sur_seen & ~resolved
    return conf_resp.sum(1), pend_resp.sum(1), conf_non.sum(1), pend_non.sum(1)


def _posteriors(policy: Policy, d: TrialDesign, cr, pr, cn, pn):
    a0, b0 = d.prior_e.alpha, d.prior_e.beta
    if policy is Policy.PROPOSED:
        return a0 + cr + d.w * pr, b0 + cn + d.w * pn
    return a0 + cr + pr, b0 + cn + pn


def _run_engine(d: TrialDesign, policy: Policy, draws: _Draws, trace: bool = False):
    n_tr = draws.bor.shape[0]
    step = d.timeline.assess_interval_days
    th = d.thresholds
    enroll = np.full((n_tr, d.n_max), np.nan)
    block_start = np.zeros(n_tr)
    active = np.ones(n_tr, dtype=bool)
    stopped = np.zeros(n_tr, dtype=bool)
    rejected = np.zeros(n_tr, dtype=bool)
    size = np.zeros(n_tr, dtype=np.int64)
    duration = np.zeros(n_tr)
    looks = []
    for (a, b, window), n in zip(_blocks(d), d.looks):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        enroll[rows, a:b] = block_start[rows, None] + draws.accrual[rows, a:b] * window
        e = enroll[rows, :n]
        if policy is Policy.PERFORMANCE:
            t = (e + draws.ascertain[rows, :n]).max(1)
        else:
            t = e.max(1) + d.timeline.maturity_assessments * step
        cr, pr, cn, pn = _counts_at(policy, draws, rows, n, e, t)
        alpha, beta = _posteriors(policy, d, cr, pr, cn, pn)
        keys, inverse = np.unique(np.stack([alpha, beta], 1), axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        m = d.n_max - n
        if m > 0:
            pp_u = np.array([predictive_probability(BetaParams(ka, kb), d.prior_s, m, th.lam)
                             for ka, kb in keys])
            pp = pp_u[inverse]
            eff = pp > th.theta_u
            fut = pp < th.theta_l
            stop = eff | fut
            stopped[rows[stop]] = True
            rejected[rows[eff]] = True
        else:
            ok_u = np.array([final_decision(BetaParams(ka, kb), d.prior_s, th.lam) for ka, kb in keys])
            pp = ok_u[inverse].astype(float)
            rejected[rows] = ok_u[inverse]
            stop = np.ones(rows.size, dtype=bool)
        done = rows[stop]
        size[done] = n
        duration[done] = t[stop]
        active[done] = False
        block_start[rows[~stop]] = t[~stop]
        if trace:
            i = 0
            verdict = None
            if m > 0:
                verdict = interim_decision(float(pp[i]), th)
            looks.append(LookRecord(
                n=n, day=float(t[i]),
                counts=SnapshotCounts(int(cr[i]), int(pr[i]), int(cn[i]), int(pn[i])),
                posterior=BetaParams(float(alpha[i]), float(beta[i])),
                pp=float(pp[i]) if m > 0 else None,
                verdict=verdict,
            ))
    return stopped, rejected, size, duration, enroll, looks


def _records(draws: _Draws, enroll_row: np.ndarray, i: int = 0) -> list[ParticipantRecord]:
    out = []
    for j in np.nonzero(~np.isnan(enroll_row))[0]:
        e = float(enroll_row[j])
        sur, conf = draws.surrogate[i, j], draws.confirm[i, j]
        out.append(ParticipantRecord(
            enroll_day=e,
            br=int(draws.br[i, j]),
            bor=int(draws.bor[i, j]),
            surrogate_day=None if np.isnan(sur) else e + float(sur),
            confirm_day=None if np.isnan(conf) else e + float(conf),
            ascertain_day=e + float(draws.ascertain[i, j]),
        ))
    return out


def simulate_trial_trace(d: TrialDesign, s: ScenarioTruth, policy: Policy, rng: np.random.Generator):
    """Simulate one trial; return (result, participant records, per-look records)."""
    draws = _make_draws(d, s, [rng])
    stopped, rejected, size, duration, enroll, looks = _run_engine(d, policy, draws, trace=True)
    result = TrialResult(bool(stopped[0]), bool(rejected[0]), int(size[0]), float(duration[0]))
    return result, _records(draws, enroll[0]), looks


def simulate_trial(d: TrialDesign, s: ScenarioTruth, policy: Policy, rng: np.random.Generator) -> TrialResult:
    draws = _make_draws(d, s, [rng])
    stopped, rejected, size, duration, _, _ = _run_engine(d, policy, draws)
    return TrialResult(bool(stopped[0]), bool(rejected[0]), int(size[0]), float(duration[0]))


_CHUNK = 2000


def simulate_trials(d: TrialDesign, s: ScenarioTruth, policy: Policy, n_sims: int, seed: int,
                    threads: int = 1):
    """Per-trial result arrays (stopped_early, rejected_null, sample_size, duration_days)."""
    if n_sims < 1:
        raise DomainError("n_sims must be >= 1")
    bounds = [(lo, min(lo + _CHUNK, n_sims)) for lo in range(0, n_sims, _CHUNK)]

    def work(lohi):
        lo, hi = lohi
        draws = _make_draws(d, s, [trial_rng(seed, i) for i in range(lo, hi)])
        return _run_engine(d, policy, draws)[:4]

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(4))


def operating_characteristics(d: TrialDesign, s: ScenarioTruth, policy: Policy, n_sims: int,
                              seed: int, threads: int = 1) -> OperatingCharacteristics:
    stopped, rejected, size, duration = simulate_trials(d, s, policy, n_sims, seed, threads)
    return OperatingCharacteristics(
        pet=float(stopped.mean()),
        prn=float(rejected.mean()),
        ass=float(size.mean()),
        asd=float(duration.mean()),
        n_sims=int(n_sims),
    )
