"""Command-line entry: key rates, sweeps, receiver simulation, figure datasets, maximum distance.

Every invocation writes a manifest.json into the output directory, also
when it fails. Exit codes: 0 success, 2 usage error, 3 invalid
configuration, 4 numerical-consistency failure.
"""

import argparse
import logging
import sys
from typing import Dict, Optional, Sequence, Tuple

import pandas as pd
from pydantic import ValidationError

from src.backend.figures import FIGURES, figure_dataset
from src.backend.sweep import key_rate, max_distance, run_sweep
from src.database.store import RunManifest, check_finite, write_csv, write_manifest
from src.frontend.config import RunConfig, load_config, parse_config, with_overrides
from src.keyrate.models import Scheme
from src.physics.discrimination import simulate_adaptive_receiver
from src.utils.errors import ConfigValidationError, CvqkdError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3

Tables = Dict[str, pd.DataFrame]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a `key = value` configuration file")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    common.add_argument("--regime", choices=["asymptotic", "finite", "composable"])
    common.add_argument("--mode", choices=["corrected", "paper-literal"], help="formula mode preset")
    common.add_argument("--format", choices=["csv"], default="csv")
    common.add_argument("--workers", type=int, help="worker threads for sweeps and simulation")
    common.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="diagnostic verbosity"
    )

    parser = argparse.ArgumentParser(prog="cvqkd", description="Four-state CVQKD key-rate toolkit")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("keyrate", parents=[common], help="one-shot key rate")
    sweep = commands.add_parser("sweep", parents=[common], help="parameter sweep")
    sweep.add_argument("--variable", choices=["distance_km", "v_mod", "mu", "n_total", "mean_photon"])
    sweep.add_argument("--min", type=float, dest="sweep_min")
    sweep.add_argument("--max", type=float, dest="sweep_max")
    sweep.add_argument("--points", type=int)
    sweep.add_argument("--scale", choices=["linear", "log"])
    commands.add_parser("discriminate", parents=[common], help="Monte Carlo adaptive receiver")
    figure = commands.add_parser("figure", parents=[common], help="figure dataset")
    figure.add_argument("figure_id", help=f"one of {', '.join(sorted(FIGURES))}")
    commands.add_parser("maxdist", parents=[common], help="maximum transmission distance")
    return parser


def clamp_rates(frame: pd.DataFrame) -> pd.DataFrame:
    """Key rates are presented as max(0, rate)"""
    frame = frame.copy()
    for column in frame.columns:
        if str(column).endswith(":rate"):
            frame[column] = frame[column].clip(lower=0.0)
    return frame


def _keyrate(cfg: RunConfig, args) -> Tuple[Tables, dict]:
    setup = cfg.to_setup()
    result = key_rate(setup)
    label = setup.scheme.value
    frame = pd.DataFrame(
        [
            {
                "distance_km": setup.distance_km,
                f"{label}:rate": result.rate,
                f"{label}:i_ab": result.i_ab,
                f"{label}:s_eb": result.s_eb,
                f"{label}:mu": result.diagnostics["mu"],
            }
        ]
    )
    results = {"regime": result.regime.value, "raw_rate": result.rate, "feasible": result.feasible}
    results["diagnostics"] = result.diagnostics
    return {"keyrate": frame}, results


def _sweep(cfg: RunConfig, args) -> Tuple[Tables, dict]:
    spec = cfg.to_sweep()
    return {"sweep": run_sweep(spec)}, {"variable": spec.variable.value, "points": spec.points}


def _discriminate(cfg: RunConfig, args) -> Tuple[Tables, dict]:
    disc = cfg.to_discrimination()
    result = simulate_adaptive_receiver(disc)
    receiver = f"receiver_m{disc.stages}"
    frame = pd.DataFrame(
        [
            {
                "mean_photon": result.mean_photon,
                "sql:p_err": result.p_sql,
                f"{receiver}:p_err": result.p_rec,
                f"{receiver}:stderr": result.p_rec_stderr,
                "helstrom:p_err": result.p_hel,
                "zeta:ratio": result.zeta,
                "zeta_opt:ratio": result.zeta_opt,
            }
        ]
    )
    return {"discriminate": frame}, result.model_dump()


def _figure(cfg: RunConfig, args) -> Tuple[Tables, dict]:
    frame = figure_dataset(
        args.figure_id,
        cfg.to_setup(),
        cfg.to_discrimination(),
        workers=cfg.resolved_workers(),
        reference_distance_km=cfg.reference_distance_km,
    )
    return {args.figure_id: frame}, {"figure": args.figure_id, "rows": len(frame)}


def _maxdist(cfg: RunConfig, args) -> Tuple[Tables, dict]:
    setup = cfg.to_setup()
    schemes = [setup.scheme] + ([Scheme.FOUR_STATE] if setup.scheme is not Scheme.FOUR_STATE else [])
    rows, distances = [], {}
    for scheme in schemes:
        found = max_distance(setup.replace(scheme=scheme), cfg.rate_threshold)
        distances[scheme.value] = found.distance_km
        rows.append(
            {
                "scheme": scheme.value,
                "max_distance_km": found.distance_km,
                "rate_threshold": found.rate_threshold,
                "below_threshold": int(found.below_threshold),
            }
        )
    return {"maxdist": pd.DataFrame(rows)}, {"max_distance_km": distances, "regime": setup.regime.value}


COMMANDS = {
    "keyrate": _keyrate,
    "sweep": _sweep,
    "discriminate": _discriminate,
    "figure": _figure,
    "maxdist": _maxdist,
}


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    return with_overrides(
        cfg,
        seed=args.seed,
        regime=args.regime,
        mode=args.mode,
        workers=args.workers,
        sweep_variable=getattr(args, "variable", None),
        sweep_min=getattr(args, "sweep_min", None),
        sweep_max=getattr(args, "sweep_max", None),
        sweep_points=getattr(args, "points", None),
        sweep_scale=getattr(args, "scale", None),
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    manifest = RunManifest(command=" ".join(["cvqkd", *(argv or [])]))
    exit_code, failure = EXIT_OK, None
    try:
        cfg = _load(args)
        manifest.full_config = cfg.model_dump(mode="json")
        manifest.seed = cfg.seed
        manifest.formula_modes = cfg.formula_modes().model_dump(mode="json")

        tables, results = COMMANDS[args.command](cfg, args)
        manifest.results = results
        tables = {name: clamp_rates(frame) for name, frame in tables.items()}
        # all tables are checked before any is written
        for name, frame in tables.items():
            check_finite(frame, name)
        manifest.outputs = [write_csv(frame, args.out, name) for name, frame in tables.items()]
    except CvqkdError as e:
        failure = f"{type(e).__name__}: {e}"
        exit_code = e.exit_code
    except ValidationError as e:
        failure = f"invalid parameters: {e}"
        exit_code = ConfigValidationError.exit_code
    except OSError as e:
        failure = f"cannot write outputs: {e}"
        exit_code = EXIT_CONFIG

    if exit_code != EXIT_OK:
        manifest.status = "error"
        manifest.exit_code = exit_code
        manifest.failure = failure
        logger.error(failure)
    try:
        write_manifest(manifest, args.out)
    except OSError as e:
        logger.error(f"Could not write manifest: {e}")
    return exit_code


def main():
    sys.exit(run(sys.argv[1:]))
