"""Strict TOML run configuration.

Every section is optional in a user file; missing keys fall back to the
bundled reference design.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .betacore import BetaParams
from .bivariate import ScenarioTruth, joint_from_marginals
from .calibrate import CalibrationGrid
from .decision import Thresholds
from .errors import ConfigError, DomainError
from .inference import DiffPosterior
from .trialsim import Policy, TimelineConfig, TrialDesign, confirm_delay_law

__all__ = ["NamedScenario", "RunConfig", "load_config", "reference_config_text"]

_SECTIONS = {
    "design": {"n_min", "n_max", "cohort", "lambda", "theta_l", "theta_u", "w", "prior_e", "prior_s"},
    "timeline": {"ramp_up_days", "cohort_accrual_days", "assess_interval_days",
                 "response_window_assessments", "min_confirm_gap_days", "maturity_assessments",
                 "confirm_prob_first_visit", "confirm_prob_second_visit",
                 "confirm_mean_days", "confirm_sd_days"},
    "scenarios": {"name", "p_br", "p_bor", "rho"},
    "run": {"n_sims", "seed", "threads", "policies"},
    "calibration": {"lambdas", "theta_us", "alpha_max", "power_min", "null", "alternative", "n_sims", "seed"},
    "inference": {"e", "s", "level", "grid_points"},
}


@dataclass(frozen=True)
class NamedScenario:
    name: str
    truth: ScenarioTruth


@dataclass(frozen=True)
class RunConfig:
    design: TrialDesign
    scenarios: tuple[NamedScenario, ...]
    policies: tuple[Policy, ...]
    n_sims: int
    seed: int
    threads: int
    grid: CalibrationGrid
    null: ScenarioTruth
    alternative: ScenarioTruth
    diff: DiffPosterior
    level: float
    grid_points: int
    raw: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)


def reference_config_text() -> str:
    return resources.files("ppmonitor").joinpath("data/reference_design.toml").read_text()


def _merge(base: dict, user: dict) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for section, body in user.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        if section == "scenarios":
            if not isinstance(body, list) or not body:
                raise ConfigError("[[scenarios]] must be a nonempty array of tables")
            for sc in body:
                _check_keys(section, sc)
            out[section] = body
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        _check_keys(section, body)
        out.setdefault(section, {}).update(body)
    return out


def _check_keys(section: str, body: dict):
    unknown = sorted(set(body) - _SECTIONS[section])
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def _pair(value, what: str) -> tuple[float, float]:
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigError(f"{what} must be a two-element list")
    return float(value[0]), float(value[1])


def _int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    return value


def _scenario(value, what: str) -> ScenarioTruth:
    if not (isinstance(value, list) and len(value) == 3):
        raise ConfigError(f"{what} must be [p_br, p_bor, rho]")
    return ScenarioTruth(*(float(v) for v in value))


def _timeline(t: dict) -> TimelineConfig:
    t = dict(t)
    p1 = t.pop("confirm_prob_first_visit", 0.68)
    p2 = t.pop("confirm_prob_second_visit", 0.95)
    if not (0 < p1 < p2 < 1):
        raise ConfigError("need 0 < confirm_prob_first_visit < confirm_prob_second_visit < 1")
    step = float(t.get("assess_interval_days", 56.0))
    mean, sd = confirm_delay_law(p1, p2, step)
    t.setdefault("confirm_mean_days", mean)
    t.setdefault("confirm_sd_days", sd)
    return TimelineConfig(**{k: _int(v, f"timeline.{k}") if k.endswith("assessments") else float(v)
                             for k, v in t.items()})


def _build(doc: dict) -> RunConfig:
    dsec, run, cal, inf = doc["design"], doc["run"], doc["calibration"], doc["inference"]
    design = TrialDesign(
        n_min=_int(dsec["n_min"], "design.n_min"),
        n_max=_int(dsec["n_max"], "design.n_max"),
        cohort=_int(dsec["cohort"], "design.cohort"),
        thresholds=Thresholds(float(dsec["lambda"]), float(dsec["theta_l"]), float(dsec["theta_u"])),
        w=float(dsec["w"]),
        prior_e=BetaParams(*_pair(dsec["prior_e"], "design.prior_e")),
        prior_s=BetaParams(*_pair(dsec["prior_s"], "design.prior_s")),
        timeline=_timeline(doc["timeline"]),
    )
    scenarios = []
    for i, sc in enumerate(doc["scenarios"]):
        missing = {"p_br", "p_bor", "rho"} - set(sc)
        if missing:
            raise ConfigError(f"scenario {i + 1} lacks {', '.join(sorted(missing))}")
        truth = ScenarioTruth(float(sc["p_br"]), float(sc["p_bor"]), float(sc["rho"]))
        joint_from_marginals(truth)
        scenarios.append(NamedScenario(str(sc.get("name", f"S{i + 1}")), truth))
    policies = tuple(Policy.parse(p) for p in run["policies"])
    if not policies:
        raise ConfigError("run.policies must not be empty")
    n_sims = _int(run["n_sims"], "run.n_sims")
    seed = _int(run["seed"], "run.seed")
    threads = _int(run["threads"], "run.threads")
    if n_sims < 1 or seed < 0 or threads < 1:
        raise ConfigError("need run.n_sims >= 1, run.seed >= 0 and run.threads >= 1")
    grid = CalibrationGrid(
        lambdas=tuple(cal["lambdas"]),
        theta_us=tuple(cal["theta_us"]),
        alpha_max=float(cal["alpha_max"]),
        power_min=float(cal["power_min"]),
        n_sims=_int(cal.get("n_sims", n_sims), "calibration.n_sims"),
        seed=_int(cal.get("seed", seed), "calibration.seed"),
    )
    null = _scenario(cal["null"], "calibration.null")
    alt = _scenario(cal["alternative"], "calibration.alternative")
    joint_from_marginals(null)
    joint_from_marginals(alt)
    diff = DiffPosterior(BetaParams(*_pair(inf["e"], "inference.e")),
                         BetaParams(*_pair(inf["s"], "inference.s")))
    level = float(inf["level"])
    if not 0 < level < 1:
        raise ConfigError("inference.level must lie in (0, 1)")
    points = _int(inf["grid_points"], "inference.grid_points")
    if points < 2:
        raise ConfigError("inference.grid_points must be >= 2")
    return RunConfig(design, tuple(scenarios), policies, n_sims, seed, threads, grid, null, alt,
                     diff, level, points, raw=doc)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Reference design overlaid with the TOML file at ``path`` (if any)."""
    base = tomllib.loads(reference_config_text())
    user: dict = {}
    if path is not None:
        try:
            user = tomllib.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"configuration file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    doc = _merge(base, user)
    try:
        return _build(doc)
    except ConfigError:
        raise
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
