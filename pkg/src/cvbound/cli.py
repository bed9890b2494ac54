"""Command-line front end.

Exit status: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bounds import SCHEMA_VERSION, cv_bound
from .cv import empirical_class_from_bootstrap, empirical_class_from_kcv, run_kcv
from .data import DataError, DgpConfig, center, generate_dgp, load_sample, partition_folds, save_sample
from .experiments import (DEFAULT_GRID, SimulationConfig, output_name, run_simulation1,
                          run_simulation2, write_curves_csv, write_json)
from .lasso import SolverOptions
from .mixing import MixingError, MixingParams, geometric_beta, mixing_cv_bound
from .tails import REGIMES, estimate_theta, resolve_tail_params

log = logging.getLogger("cvbound")

EXIT_CONFIG = 2
EXIT_DATA = 3


class ConfigError(ValueError):
    pass


def _default_seed() -> int:
    raw = os.environ.get("CVBOUND_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"CVBOUND_SEED must be an integer, got {raw!r}") from None


COMMON_DEFAULTS = {
    "k": 2, "varpi": 0.10, "regime": "subgaussian", "theta": 1.0, "c": 1.0, "m": None,
    "rc_draws": 2000, "tol": 1e-8, "max_sweeps": 10_000,
}

DEFAULTS = {
    "bound": {**COMMON_DEFAULTS, "data": None, "lam": None, "b": None, "orlicz1": None,
              "theta_resamples": 0, "header": False, "center": False, "standardize": False,
              "class_source": "kcv", "bootstrap_reps": 25, "v_k": None, "out": None},
    "simulate": {**COMMON_DEFAULTS, "n": None, "p": 100, "reps": None, "paper_scale": False,
                 "oracle_sets": 2000, "lambda_grid": list(DEFAULT_GRID), "correlation": 0.5,
                 "noise_sd": 1.0, "class_source": "kcv", "bootstrap_reps": 25, "jobs": None,
                 "out": None},
    "mixing-bound": {"data": None, "lam": None, "k": 2, "a": None, "a_t": None, "mu": None,
                     "beta_c": None, "beta_r": None, "m": None, "varpi": 0.10, "v_k": None,
                     "rc_draws": 2000, "header": False, "center": False, "standardize": False,
                     "shuffle": False, "tol": 1e-8, "max_sweeps": 10_000, "out": None},
    "dgp": {"n": None, "p": 100, "correlation": 0.5, "noise_sd": 1.0, "header": False,
            "out": None},
}


def _add_common(sp: argparse.ArgumentParser, regime_flags: bool = True) -> None:
    sp.add_argument("--config", type=Path, help="JSON file of defaults; flags override it")
    sp.add_argument("--seed", type=int, help="random seed (fallback: $CVBOUND_SEED, then 0)")
    sp.add_argument("--out", type=Path, help="output directory")
    sp.add_argument("--k", type=int, help="number of folds")
    sp.add_argument("--varpi", type=float, help="tail probability, in (0, 1)")
    sp.add_argument("--rc-draws", type=int, help="Rademacher sign vectors")
    sp.add_argument("--tol", type=float, help="solver tolerance on coordinate change")
    sp.add_argument("--max-sweeps", type=int)
    if regime_flags:
        sp.add_argument("--regime", choices=REGIMES)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--c", type=float, help="absolute constant of the exponential inequality")
    sp.add_argument("--m", type=float, help="loss bound M")


def _add_data(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--data", type=Path, help="CSV with y in column 0")
    sp.add_argument("--lambda", dest="lam", type=float, help="lasso penalty")
    sp.add_argument("--header", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--center", action=argparse.BooleanOptionalAction, default=None,
                    help="remove column means before fitting")
    sp.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=None,
                    help="center and scale columns to unit variance")
    sp.add_argument("--v-k", type=float, help="override the autocovariance sum V_K (K > 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvbound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="upper bound on the K-fold CV error of a lasso fit")
    _add_common(b)
    _add_data(b)
    b.add_argument("--b", type=float, help="variance proxy B (estimated if omitted)")
    b.add_argument("--orlicz1", type=float, help="psi_1 norm of rho (estimated if omitted)")
    b.add_argument("--theta-resamples", type=int, help="estimate theta by resampling (0: use --theta)")
    b.add_argument("--class-source", choices=("kcv", "bootstrap"))
    b.add_argument("--bootstrap-reps", type=int)

    s = sub.add_parser("simulate", help="lasso simulations on the Gaussian DGP")
    s.add_argument("experiment", choices=("curves", "table"))
    _add_common(s)
    s.add_argument("--n", type=int, help="sample size")
    s.add_argument("--p", type=int, help="number of regressors")
    s.add_argument("--reps", type=int, help="repetitions (curves: one CSV per seed)")
    s.add_argument("--paper-scale", action=argparse.BooleanOptionalAction, default=None,
                   help="20000 oracle test sets and 120 repetitions")
    s.add_argument("--oracle-sets", type=int)
    s.add_argument("--lambda-grid", type=float, nargs="+")
    s.add_argument("--correlation", type=float)
    s.add_argument("--noise-sd", type=float)
    s.add_argument("--class-source", choices=("kcv", "bootstrap"))
    s.add_argument("--bootstrap-reps", type=int)
    s.add_argument("--jobs", type=int, help="worker processes (default: all cores)")

    mx = sub.add_parser("mixing-bound", help="CV-error bound for beta-mixing data")
    _add_common(mx, regime_flags=False)
    _add_data(mx)
    mx.add_argument("--a", type=int, help="validation block length a_s")
    mx.add_argument("--a-t", type=int, help="training block length (default: --a)")
    mx.add_argument("--mu", type=int, help="number of kept blocks")
    mx.add_argument("--beta-c", type=float, help="geometric mixing rate: beta_a = C r^a")
    mx.add_argument("--beta-r", type=float)
    mx.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=None,
                    help="random folds instead of contiguous time blocks")

    g = sub.add_parser("dgp", help="write a sample from the Gaussian DGP as CSV")
    g.add_argument("--config", type=Path)
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=int)
    g.add_argument("--correlation", type=float)
    g.add_argument("--noise-sd", type=float)
    g.add_argument("--header", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--out", type=Path, help="output CSV path")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    cfg = dict(DEFAULTS[args.command])
    cfg["seed"] = _default_seed()
    if getattr(args, "config", None) is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in ("command", "config", "verbose", "experiment") or value is None:
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    if getattr(args, "experiment", None):
        cfg["experiment"] = args.experiment
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-").replace("lam", "lambda") for k in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def _check_varpi(cfg: dict, closed_right: bool = False) -> None:
    v = cfg["varpi"]
    ok = 0 < v <= 1 if closed_right else 0 < v < 1
    if not ok:
        raise ConfigError(f"--varpi must lie in the open interval (0, 1), got {v}"
                          if not closed_right else f"--varpi must lie in (0, 1], got {v}")


def _check_common(cfg: dict) -> None:
    if cfg.get("k") is not None and cfg["k"] < 2:
        raise ConfigError(f"--k must be at least 2, got {cfg['k']}")
    if cfg.get("rc_draws") is not None and cfg["rc_draws"] < 1:
        raise ConfigError("--rc-draws must be at least 1")
    if cfg.get("tol") is not None and not cfg["tol"] > 0:
        raise ConfigError("--tol must be positive")
    if cfg.get("lam") is not None and cfg["lam"] < 0:
        raise ConfigError(f"--lambda must be nonnegative, got {cfg['lam']}")


def _prepare_out(cfg: dict) -> Path:
    _require(cfg, "out")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(out: Path, command: str, cfg: dict) -> None:
    write_json({"schema_version": SCHEMA_VERSION, "command": command, "config": cfg},
               out / "config.json")


def _load(cfg: dict):
    sample = load_sample(cfg["data"], header=bool(cfg["header"]))
    if cfg["standardize"]:
        sample = center(sample, scale=True)
    elif cfg["center"]:
        sample = center(sample)
    return sample


def cmd_bound(cfg: dict) -> int:
    _require(cfg, "data", "lam", "out")
    _check_common(cfg)
    _check_varpi(cfg)
    if cfg["regime"] == "bounded" and cfg["m"] is None:
        raise ConfigError("--regime bounded requires --m (the loss bound M)")
    if cfg["theta"] is not None and not cfg["theta"] > 0:
        raise ConfigError("--theta must be positive")
    if cfg["c"] is not None and not cfg["c"] > 0:
        raise ConfigError("--c must be positive")
    out = _prepare_out(cfg)
    sample = _load(cfg)
    K, seed = cfg["k"], cfg["seed"]
    if sample.n % K:
        raise ConfigError(f"sample size n={sample.n} is not divisible by --k {K}")
    options = SolverOptions(tol=cfg["tol"], max_sweeps=cfg["max_sweeps"])
    kcv = run_kcv(sample, K, cfg["lam"], seed, options)
    if cfg["class_source"] == "bootstrap":
        cls = empirical_class_from_bootstrap(sample, cfg["lam"], cfg["bootstrap_reps"], seed, options)
    else:
        cls = empirical_class_from_kcv(kcv)
    theta = cfg["theta"]
    if cfg["theta_resamples"]:
        theta = estimate_theta(cls, sample, K, cfg["theta_resamples"], seed)
    params = resolve_tail_params(cfg["regime"], cls, sample, kcv.folds, M=cfg["m"], B=cfg["b"],
                                 orlicz1=cfg["orlicz1"], theta=theta, c=cfg["c"])
    report = cv_bound(kcv, cls, sample, params, cfg["varpi"], cfg["rc_draws"], seed, cfg["v_k"])
    if not kcv.all_converged:
        log.warning("some lasso fits did not converge; see extras.unconverged_fits")
    write_json(report.to_dict(), out / "bound_report.json")
    _echo(out, "bound", cfg)
    log.info("upper bound %.6g at confidence %.4g", report.upper_bound, report.confidence)
    return 0


def _simulation_config(cfg: dict) -> SimulationConfig:
    return SimulationConfig(
        n=cfg["n"], p=cfg["p"], K=cfg["k"], lambda_grid=tuple(cfg["lambda_grid"]),
        varpi=cfg["varpi"], regime=cfg["regime"], theta=cfg["theta"], c=cfg["c"], M=cfg["m"],
        correlation=cfg["correlation"], noise_sd=cfg["noise_sd"], oracle_sets=cfg["oracle_sets"],
        rc_draws=cfg["rc_draws"], class_source=cfg["class_source"],
        bootstrap_reps=cfg["bootstrap_reps"], tol=cfg["tol"], max_sweeps=cfg["max_sweeps"],
        seed=cfg["seed"],
    )


def cmd_simulate(cfg: dict) -> int:
    _require(cfg, "n", "out")
    _check_common(cfg)
    _check_varpi(cfg)
    experiment = cfg["experiment"]
    if cfg["paper_scale"]:
        cfg["oracle_sets"] = 20_000
        if cfg["reps"] is None:
            cfg["reps"] = 120
    if cfg["reps"] is None:
        cfg["reps"] = 1 if experiment == "curves" else 30
    if cfg["reps"] < 1:
        raise ConfigError("--reps must be at least 1")
    if cfg["n"] % cfg["k"]:
        raise ConfigError(f"--n {cfg['n']} is not divisible by --k {cfg['k']}")
    if cfg["regime"] == "bounded" and cfg["m"] is None:
        raise ConfigError("--regime bounded requires --m (the loss bound M)")
    if experiment == "curves" and (cfg["oracle_sets"] < 2 or cfg["oracle_sets"] % 2):
        raise ConfigError("--oracle-sets must be a positive even number")
    grid = cfg["lambda_grid"]
    if any(b <= a for a, b in zip(grid, grid[1:])) or min(grid) < 0:
        raise ConfigError("--lambda-grid must be nonnegative and strictly increasing")
    jobs = cfg["jobs"] or os.cpu_count() or 1
    try:
        sim = _simulation_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _prepare_out(cfg)
    nk = cfg["n"] // cfg["k"]
    if experiment == "curves":
        for r in range(cfg["reps"]):
            seed = cfg["seed"] + r
            curves = run_simulation1(replace(sim, seed=seed))
            path = write_curves_csv(curves, out / output_name("curves", nk, seed, "csv"))
            log.info("wrote %s", path)
    else:
        metrics = run_simulation2(sim, cfg["reps"], cfg["seed"], jobs=min(jobs, cfg["reps"]))
        path = write_json(metrics.to_dict(), out / output_name("table", nk, cfg["seed"], "json"))
        log.info("wrote %s", path)
    echo = {k: v for k, v in cfg.items() if k != "jobs"}
    _echo(out, f"simulate {experiment}", echo)
    return 0


def cmd_mixing_bound(cfg: dict) -> int:
    _require(cfg, "data", "lam", "a", "mu", "beta_c", "beta_r", "m", "out")
    _check_common(cfg)
    _check_varpi(cfg, closed_right=True)
    out = _prepare_out(cfg)
    sample = _load(cfg)
    K, seed = cfg["k"], cfg["seed"]
    if sample.n % K:
        raise ConfigError(f"sample size n={sample.n} is not divisible by --k {K}")
    try:
        params = MixingParams(beta_fn=geometric_beta(cfg["beta_c"], cfg["beta_r"]), M=cfg["m"],
                              mu=cfg["mu"], a_t=cfg["a_t"] or cfg["a"], a_s=cfg["a"],
                              varpi=cfg["varpi"])
        folds = partition_folds(sample.n, K, seed, shuffle=bool(cfg["shuffle"]))
        options = SolverOptions(tol=cfg["tol"], max_sweeps=cfg["max_sweeps"])
        kcv = run_kcv(sample, K, cfg["lam"], seed, options, folds=folds)
        cls = empirical_class_from_kcv(kcv)
        report = mixing_cv_bound(kcv, cls, sample, params, cfg["v_k"], cfg["rc_draws"], seed)
    except MixingError as exc:
        raise ConfigError(str(exc)) from None
    write_json(report.to_dict(), out / "mixing_bound_report.json")
    _echo(out, "mixing-bound", cfg)
    return 0


def cmd_dgp(cfg: dict) -> int:
    _require(cfg, "n", "out")
    try:
        dgp = DgpConfig(n=cfg["n"], p=cfg["p"], correlation=cfg["correlation"],
                        noise_sd=cfg["noise_sd"], seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_sample(generate_dgp(dgp), out, header=bool(cfg["header"]))
    return 0


COMMANDS = {"bound": cmd_bound, "simulate": cmd_simulate, "mixing-bound": cmd_mixing_bound,
            "dgp": cmd_dgp}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"cvbound {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"cvbound {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"cvbound {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
