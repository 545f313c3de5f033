"""
Debiased weighted LASSO detection - command line entry point

Subcommands:
  simulate          Monte Carlo sweep from a config file, CSV/JSON output
  optimize-weights  fit (lambda0, alpha) of a weight model to a prior
  detect            one-shot detection on y.txt / A.txt
  fixpoint          solve the debiasing fixed point for a given estimate
"""

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from tools.experiment_runner import all_infeasible_cells, run_experiment, write_results
from tools.file_detection import detect_once, fixpoint_debug
from tools.scene import generate_scene, sigma_x2_for_snr
from tools.weight_opt import DEFAULT_N_MC, optimize_weights
from utils.config_loader import load_config
from utils.data_files import dump_scene
from utils.errors import (
    ConfigError,
    DataFileError,
    DebiasInfeasibleError,
    FixedPointError,
    InvalidDimensionError,
    InvalidParameterError,
    ObjectiveUndefinedError,
    SolverConvergenceError,
)
from utils.seeding import trial_rng
from utils.settings import Settings, configure_logging

load_dotenv()
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _overrides(args) -> dict:
    return {
        "seed": getattr(args, "seed", None),
        "trials": getattr(args, "trials", None),
        "threads": getattr(args, "threads", None),
        "out": getattr(args, "out", None),
        "format": getattr(args, "format", None),
    }


def _database_url(args, settings: Settings) -> Optional[str]:
    if getattr(args, "db", None):
        return args.db
    return settings.database_url


def cmd_simulate(args) -> int:
    settings = Settings.from_env()
    config = load_config(args.config, _overrides(args), settings)
    started = datetime.utcnow()

    if args.dump:
        # trial 0 at the first SNR point, weights of the first detector
        scene_config = config.scene.with_sigma_x2(
            sigma_x2_for_snr(config.snr_db[0], config.scene.gamma, config.scene.noise.sigma2)
        )
        scene = generate_scene(scene_config, trial_rng(config.master_seed, 0))
        weights = config.detectors[0].weights.resolve(config.scene.prior)
        dump_scene(args.dump, scene.A.entries, scene.y, scene.x0, weights.values, config.scene.prior.p)

    rows = run_experiment(config)
    out = config.output or str(Path(settings.results_dir) / f"{Path(args.config).stem}.{config.fmt}")
    write_results(rows, config, out, config.fmt)

    db_url = _database_url(args, settings)
    if db_url:
        from database.operations import persist_run
        persist_run(db_url, "simulate", config.to_dict(), config.master_seed, rows, out, started)

    failed = all_infeasible_cells(rows)
    for row in failed:
        logger.error(f"{row.detector} @ {row.snr_db:g} dB: every trial infeasible")
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_optimize(args) -> int:
    settings = Settings.from_env()
    config = load_config(args.config, _overrides(args), settings)
    snr = args.snr_db if args.snr_db is not None else config.snr_db[0]
    scene = config.scene.with_sigma_x2(sigma_x2_for_snr(snr, config.scene.gamma, config.scene.noise.sigma2))

    result = optimize_weights(
        args.model, scene, budget=args.budget, seed=config.master_seed,
        n_mc=args.n_mc, threads=config.threads, opts=config.solver,
    )
    summary = {
        "model": result.model.kind.value,
        "lambda0": result.model.lambda0,
        "alpha": result.model.alpha,
        "weights": result.model.describe(),
        "f2": result.estimate.mean_sigma_w2,
        "f2_std_error": result.estimate.std_error,
        "n_evaluations": result.n_evaluations,
        "snr_db": snr,
        "master_seed": config.master_seed,
        "prior": config.prior_name,
    }
    print(json.dumps(summary, indent=2))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w") as f:
            json.dump(summary, f, indent=2)
        logger.info(f"Optimized model written to {args.out}")

    db_url = _database_url(args, settings)
    if db_url:
        from database.operations import persist_run
        persist_run(db_url, "optimize-weights", dict(config.to_dict(), optimized=summary), config.master_seed, (), args.out)
    return EXIT_OK


def _weights_arg(args):
    if args.weights:
        return args.weights
    if args.lam is not None:
        return args.lam
    raise ConfigError("give --weights FILE or --lambda VALUE")


def cmd_detect(args) -> int:
    report = detect_once(args.y, args.A, _weights_arg(args), args.pfa, args.sigma2)
    if args.out:
        report.write(args.out)
    print(json.dumps(report.summary(), indent=2))
    return EXIT_OK


def cmd_fixpoint(args) -> int:
    report = fixpoint_debug(args.x_wl, _weights_arg(args), args.gamma)
    print(report.format())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dwld", description="Debiased weighted LASSO detection")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default: DWLD_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", required=True, help="experiment config (.ini or .json)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per SNR point")
        p.add_argument("--threads", help="worker processes, or 'auto'")
        p.add_argument("--out", help="output path")
        p.add_argument("--db", help="SQLAlchemy URL to store the run (default: DWLD_DATABASE_URL)")

    p = sub.add_parser("simulate", help="run a Monte Carlo sweep")
    add_run_flags(p)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--dump", metavar="DIR", help="write trial-0 scene files (A, y, x0, weights, prior)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize-weights", help="optimize a weight model for the config's scene")
    add_run_flags(p)
    p.add_argument("--model", choices=["linear", "exponential"], default="linear")
    p.add_argument("--budget", type=int, default=150, help="objective evaluations")
    p.add_argument("--n-mc", type=int, default=DEFAULT_N_MC, help="scenes per objective evaluation")
    p.add_argument("--snr-db", type=float, help="SNR of the optimization scenes (default: first sweep point)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("detect", help="one-shot detection on data files")
    p.add_argument("--y", required=True, help="measurement vector file")
    p.add_argument("--A", required=True, help="design matrix file")
    p.add_argument("--weights", help="weight vector file")
    p.add_argument("--lambda", dest="lam", type=float, help="uniform weight")
    p.add_argument("--pfa", type=float, default=0.01)
    p.add_argument("--sigma2", type=float, required=True, help="noise variance")
    p.add_argument("--out", help="directory for x_wl, x_d, kappa, decisions and report.json")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("fixpoint", help="solve the debiasing fixed point")
    p.add_argument("--x-wl", dest="x_wl", required=True, help="weighted LASSO estimate file")
    p.add_argument("--weights", help="weight vector file")
    p.add_argument("--lambda", dest="lam", type=float, help="uniform weight")
    p.add_argument("--gamma", type=float, required=True, help="compression rate M/N")
    p.set_defaults(func=cmd_fixpoint)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except (ConfigError, DataFileError, InvalidDimensionError, InvalidParameterError, OSError) as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except (DebiasInfeasibleError, ObjectiveUndefinedError, SolverConvergenceError, FixedPointError) as e:
        logger.error(str(e))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
