"""Command-line entry point: ``ppmonitor <subcommand> [options]``.

Exit codes: 0 success, 1 calibration found no admissible cell,
2 configuration or usage error, 3 numerical accuracy failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import replace

from .betacore import BetaParams
from .calibrate import calibrate
from .config import RunConfig, load_config
from .decision import predictive_probability_with_threshold
from .errors import AccuracyError, ConfigError, DomainError, NumericalIntegrityError
from .gbayes import SnapshotCounts, check_weight, quasi_posterior_from_counts
from .inference import density_grid, diff_credible_interval, diff_mean
from .trialsim import operating_characteristics

EXIT_OK = 0
EXIT_NO_ADMISSIBLE = 1
EXIT_CONFIG = 2
EXIT_ACCURACY = 3


def _f(x: float) -> str:
    return f"{x:.6f}"


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        changes["seed"] = args.seed
        changes["grid"] = replace(cfg.grid, seed=args.seed)
    if getattr(args, "sims", None) is not None:
        if args.sims < 1:
            raise ConfigError("--sims must be >= 1")
        changes["n_sims"] = args.sims
        changes["grid"] = replace(changes.get("grid", cfg.grid), n_sims=args.sims)
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        changes["threads"] = args.threads
    return replace(cfg, **changes) if changes else cfg


def cmd_update(cfg: RunConfig, args) -> int:
    try:
        w = check_weight(cfg.design.w if args.w is None else args.w)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    counts = SnapshotCounts(*args.counts)
    post = quasi_posterior_from_counts(cfg.design.prior_e, counts, w)
    if args.format == "json":
        _emit(json.dumps({"alpha": post.alpha, "beta": post.beta}) + "\n", args.out)
    else:
        _emit(f"alpha,beta\n{_f(post.alpha)},{_f(post.beta)}\n", args.out)
    return EXIT_OK


def cmd_predprob(cfg: RunConfig, args) -> int:
    d = cfg.design
    lam = d.thresholds.lam if args.lam is None else args.lam
    if not 0 < lam < 1:
        raise ConfigError("--lam must lie in (0, 1)")
    if args.post is not None:
        e_star = BetaParams(*args.post)
    else:
        w = check_weight(d.w if args.w is None else args.w)
        e_star = quasi_posterior_from_counts(d.prior_e, SnapshotCounts(*(args.counts or (0, 0, 0, 0))), w)
    if args.m is not None:
        m = args.m
    else:
        n = sum(args.counts) if args.counts else d.n_min
        m = d.n_max - n
    if m < 0:
        raise ConfigError("number of future participants must be >= 0")
    pp, ystar = predictive_probability_with_threshold(e_star, d.prior_s, m, lam)
    if args.format == "json":
        _emit(json.dumps({"alpha": e_star.alpha, "beta": e_star.beta, "m": m, "lambda": lam,
                          "pp": pp, "y_star": ystar}) + "\n", args.out)
    else:
        _emit(f"alpha,beta,m,lambda,pp,y_star\n{_f(e_star.alpha)},{_f(e_star.beta)},{m},{_f(lam)},"
              f"{_f(pp)},{ystar}\n", args.out)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    rows = []
    for sc in cfg.scenarios:
        for policy in cfg.policies:
            oc = operating_characteristics(cfg.design, sc.truth, policy, cfg.n_sims, cfg.seed, cfg.threads)
            rows.append((sc.name, policy.value, oc))
    if args.format == "json":
        payload = [{"scenario": s, "policy": p, "pet": oc.pet, "prn": oc.prn, "ass": oc.ass, "asd": oc.asd,
                    "n_sims": oc.n_sims} for s, p, oc in rows]
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    buf = io.StringIO()
    buf.write("scenario,policy,pet,prn,ass,asd\n")
    for s, p, oc in rows:
        buf.write(f"{s},{p},{_f(oc.pet)},{_f(oc.prn)},{_f(oc.ass)},{_f(oc.asd)}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _matrix_csv(title: str, lambdas, theta_us, mat) -> str:
    lines = [f"# {title}", "theta_u," + ",".join(_f(x) for x in lambdas)]
    for i, tu in enumerate(theta_us):
        lines.append(_f(tu) + "," + ",".join(_f(v) for v in mat[i]))
    return "\n".join(lines) + "\n"


def cmd_calibrate(cfg: RunConfig, args) -> int:
    res = calibrate(cfg.design, cfg.null, cfg.alternative, cfg.grid, threads=cfg.threads)
    if args.format == "json":
        payload = {
            "lambdas": list(res.lambdas),
            "theta_us": list(res.theta_us),
            "type1": res.type1.tolist(),
            "power": res.power.tolist(),
            "admissible": res.admissible.tolist(),
            "selected": None if res.selected is None else {"lambda": res.selected[0], "theta_u": res.selected[1]},
            "diagnostic": res.diagnostic,
        }
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        text = _matrix_csv("type I error", res.lambdas, res.theta_us, res.type1)
        text += "\n" + _matrix_csv("power", res.lambdas, res.theta_us, res.power)
        if res.selected is None:
            text += f"\n# selected none: {res.diagnostic}\n"
        else:
            text += f"\n# selected lambda={_f(res.selected[0])} theta_u={_f(res.selected[1])}\n"
        _emit(text, args.out)
    if res.selected is None:
        print(f"ppmonitor: {res.diagnostic}", file=sys.stderr)
        return EXIT_NO_ADMISSIBLE
    return EXIT_OK


def cmd_diffdist(cfg: RunConfig, args) -> int:
    post = cfg.diff
    mean = diff_mean(post)
    lo, hi = diff_credible_interval(post, cfg.level)
    pd, dens = density_grid(post, cfg.grid_points)
    if args.format == "json":
        payload = {"mean": mean, "level": cfg.level, "lower": lo, "upper": hi,
                   "pd": pd.tolist(), "density": dens.tolist()}
        _emit(json.dumps(payload) + "\n", args.out)
        return EXIT_OK
    buf = io.StringIO()
    buf.write(f"# mean={_f(mean)} level={_f(cfg.level)} lower={_f(lo)} upper={_f(hi)}\n")
    buf.write("pd,density\n")
    for x, y in zip(pd, dens):
        buf.write(f"{_f(x)},{_f(y)}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file overriding the bundled reference design")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--sims", type=int)
    sim.add_argument("--threads", type=int)

    p = argparse.ArgumentParser(prog="ppmonitor", description="Predictive-probability monitoring with "
                                "discounted unconfirmed responses.")
    sub = p.add_subparsers(dest="command", required=True)

    u = sub.add_parser("update", parents=[common], help="quasi-posterior from snapshot counts")
    u.add_argument("--counts", type=int, nargs=4, required=True,
                   metavar=("CONF_RESP", "PEND_RESP", "CONF_NONRESP", "PEND_NONRESP"))
    u.add_argument("--w", type=float)
    u.set_defaults(func=cmd_update)

    pp = sub.add_parser("predprob", parents=[common], help="predictive probability and success threshold")
    src = pp.add_mutually_exclusive_group()
    src.add_argument("--counts", type=int, nargs=4,
                     metavar=("CONF_RESP", "PEND_RESP", "CONF_NONRESP", "PEND_NONRESP"))
    src.add_argument("--post", type=float, nargs=2, metavar=("ALPHA", "BETA"))
    pp.add_argument("--m", type=int, help="future participants (default n_max minus current n)")
    pp.add_argument("--lam", type=float)
    pp.add_argument("--w", type=float)
    pp.set_defaults(func=cmd_predprob)

    s = sub.add_parser("simulate", parents=[common, sim], help="operating characteristics per scenario and policy")
    s.set_defaults(func=cmd_simulate)
    c = sub.add_parser("calibrate", parents=[common, sim], help="type I error / power grid over (lambda, theta_U)")
    c.set_defaults(func=cmd_calibrate)
    d = sub.add_parser("diffdist", parents=[common], help="posterior of the response-rate difference")
    d.set_defaults(func=cmd_diffdist)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "counts", None) is not None and min(args.counts) < 0:
            raise ConfigError("--counts must be non-negative")
        cfg = _apply_overrides(load_config(args.config), args)
        return args.func(cfg, args)
    except (ConfigError, DomainError) as exc:
        print(f"ppmonitor: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AccuracyError, NumericalIntegrityError) as exc:
        print(f"ppmonitor: numerical failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY


if __name__ == "__main__":
    sys.exit(main())
