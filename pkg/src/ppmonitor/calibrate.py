"""Grid search over (lambda, theta_U) for type I error and power."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bivariate import ScenarioTruth, joint_from_marginals
from .errors import DomainError
from .trialsim import Policy, TrialDesign, operating_characteristics

__all__ = ["CalibrationGrid", "CalibrationResult", "calibrate", "cell_seed", "select_cell"]


def _increasing(xs) -> bool:
    return all(a < b for a, b in zip(xs, xs[1:]))


@dataclass(frozen=True)
class CalibrationGrid:
    lambdas: tuple[float, ...] = (0.65, 0.70, 0.75, 0.80, 0.85, 0.90)
    theta_us: tuple[float, ...] = (0.65, 0.70, 0.75, 0.80, 0.85, 0.90)
    alpha_max: float = 0.05
    power_min: float = 0.80
    n_sims: int = 10000
    seed: int = 20240101

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "theta_us", tuple(float(x) for x in self.theta_us))
        for name in ("lambdas", "theta_us"):
            xs = getattr(self, name)
            if not xs or not _increasing(xs) or not all(0 < x < 1 for x in xs):
                raise DomainError(f"{name} must be a nonempty strictly increasing grid inside (0, 1)")
        if not (0 < self.alpha_max < 1 and 0 < self.power_min < 1):
            raise DomainError("alpha_max and power_min must lie in (0, 1)")
        if self.n_sims < 1:
            raise DomainError("n_sims must be >= 1")


@dataclass(frozen=True)
class CalibrationResult:
    """Matrices are indexed [theta_u index, lambda index]."""

    lambdas: tuple[float, ...]
    theta_us: tuple[float, ...]
    type1: np.ndarray
    power: np.ndarray
    admissible: np.ndarray
    selected: tuple[float, float] | None
    diagnostic: str = ""
    alpha_max: float = field(default=0.05)
    power_min: float = field(default=0.80)

    @property
    def selected_power(self) -> float | None:
        if self.selected is None:
            return None
        lam, tu = self.selected
        return float(self.power[self.theta_us.index(tu), self.lambdas.index(lam)])

    @property
    def meets_power(self) -> bool:
        p = self.selected_power
        return p is not None and p > self.power_min


def cell_seed(seed: int, cell: int) -> int:
    """Deterministic per-cell seed derived from the grid seed and the cell index."""
    return int(np.random.SeedSequence(seed, spawn_key=(cell,)).generate_state(1, np.uint64)[0])


def select_cell(lambdas, theta_us, power: np.ndarray, admissible: np.ndarray):
    """Power-maximal admissible cell; ties go to larger lambda, then larger theta_U."""
    best = None
    for i, tu in enumerate(theta_us):
        for j, lam in enumerate(lambdas):
            if not admissible[i, j]:
                continue
            key = (power[i, j], lam, tu)
            if best is None or key > best:
                best = key
    return None if best is None else (best[1], best[2])


def calibrate(d: TrialDesign, null_s: ScenarioTruth, alt_s: ScenarioTruth, g: CalibrationGrid,
              threads: int = 1) -> CalibrationResult:
    joint_from_marginals(null_s)
    joint_from_marginals(alt_s)
    cells = [(i, j) for i in range(len(g.theta_us)) for j in range(len(g.lambdas))]

    def run(k):
        i, j = cells[k]
        design = d.with_thresholds(g.lambdas[j], g.theta_us[i])
        seed = cell_seed(g.seed, k)
        t1 = operating_characteristics(design, null_s, Policy.PROPOSED, g.n_sims, seed).prn
        pw = operating_characteristics(design, alt_s, Policy.PROPOSED, g.n_sims, seed).prn
        return t1, pw

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, range(len(cells))))
    else:
        out = [run(k) for k in range(len(cells))]

    shape = (len(g.theta_us), len(g.lambdas))
    type1 = np.array([o[0] for o in out]).reshape(shape)
    power = np.array([o[1] for o in out]).reshape(shape)
    admissible = type1 <= g.alpha_max
    selected = select_cell(g.lambdas, g.theta_us, power, admissible)
    diagnostic = ""
    if selected is None:
        diagnostic = (f"no grid cell keeps type I error <= {g.alpha_max}; "
                      f"smallest observed is {type1.min():.4f}")
    return CalibrationResult(g.lambdas, g.theta_us, type1, power, admissible, selected,
                             diagnostic, g.alpha_max, g.power_min)
