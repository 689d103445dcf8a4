"""
Command-line front-end for the block-sparse solvers and λ selectors.

  simulate  draw a synthetic problem           -> G.nmat, M.nmat, X_true.nmat, positions.csv, truth.json
  select    pick λ with sure | cv | lmap        -> selection.json, estimate.nmat
  sweep     amplitude × seed × method recovery  -> results.csv
  report    aggregate a results.csv             -> summary.json, table.csv

Every command reads one YAML/JSON config (default config/config.yaml); --seed,
--jobs and --out override it. The log level comes from SIS_LOG.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import pandas as pd

from experiments import RESULT_COLUMNS, build_report, run_sweep, select
from settings import DEFAULT_CONFIG_PATH, ExperimentConfig, load_config, parse_config
from simulator import simulate
from solvers.errors import ConfigError, CorruptFileError, NumericalError, SelectionError
from solvers.problem import BlockDesign, Measurements
from storage.nmat import read_matrix, write_nmat
from storage.outputs import read_positions, write_json, write_positions, write_table

logger = logging.getLogger("sis")


# -----------------------------
# Utils
# -----------------------------

def setup_logging() -> None:
    level = os.environ.get("SIS_LOG", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


def load_problem(cfg: ExperimentConfig) -> Tuple[BlockDesign, Measurements]:
    if cfg.simulate is not None:
        design, meas, _ = simulate(cfg.simulate)
        return design, meas
    files = cfg.files
    G = read_matrix(files.G)
    M = read_matrix(files.M)
    positions = read_positions(files.positions)
    return BlockDesign(G, files.n_orient, positions), Measurements(M, files.sigma)


# -----------------------------
# Commands
# -----------------------------

def cmd_simulate(cfg: ExperimentConfig) -> Path:
    if cfg.simulate is None:
        raise ConfigError("scenario.simulate", "simulate needs a simulated scenario")
    out = Path(cfg.output_dir)
    design, meas, truth = simulate(cfg.simulate)

    write_nmat(out / "G.nmat", design.G)
    write_nmat(out / "M.nmat", meas.M)
    write_nmat(out / "X_true.nmat", truth.X_true)
    write_positions(out / "positions.csv", design.positions)
    write_json(
        out / "truth.json",
        {
            "active_indices": truth.active_indices,
            "positions": truth.positions,
            "n_orient": design.n_orient,
            "sigma": meas.sigma,
            "spec": cfg.simulate.to_dict(),
        },
        cfg.to_dict(),
    )
    logger.info("[SIMULATE] out=%s N=%d P=%d T=%d active=%s", out, design.n_sensors, design.n_columns,
                meas.n_times, truth.active_indices.tolist())
    return out


def cmd_select(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    design, meas = load_problem(cfg)
    result = select(cfg, design, meas, cfg.method, cfg.seed)

    write_nmat(out / "estimate.nmat", result.estimate.X)
    write_json(out / "selection.json", result.summary(), cfg.to_dict())
    logger.info("[SELECT] method=%s lambda=%.6g ratio=%.4f n_sources=%d", result.method, result.lam,
                result.lambda_ratio, result.estimate.n_active)
    return out


def cmd_sweep(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    results = run_sweep(cfg)
    write_table(out / "results.csv", results.rows[RESULT_COLUMNS])
    logger.info("[SWEEP] rows=%d failed=%d out=%s", len(results.rows), results.n_failed, out)
    return out


def cmd_report(cfg: ExperimentConfig, results_path: str) -> Path:
    out = Path(cfg.output_dir)
    try:
        results = pd.read_csv(results_path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise CorruptFileError(f"{results_path}: {exc}") from exc
    try:
        report = build_report(results)
    except ValueError as exc:
        raise CorruptFileError(f"{results_path}: {exc}") from exc

    table = report.pop("table")
    write_table(out / "table.csv", table, index=True)
    write_json(out / "summary.json", {**report, "results": str(results_path)}, cfg.to_dict())
    logger.info("[REPORT] methods=%s rows=%d out=%s", list(table.columns), report["n_rows"], out)
    return out


# -----------------------------
# Entrypoint
# -----------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sis", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "select", "sweep", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=DEFAULT_CONFIG_PATH, help="YAML or JSON experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        if name == "report":
            p.add_argument("results", help="results.csv written by sweep")
    return parser


def _error(kind: str, message: str, **extra: Any) -> Dict[str, Any]:
    return {"error": kind, "message": message, **extra}


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)

    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed", f"must be >= 0, got {args.seed}")
        if args.jobs is not None and args.jobs == 0:
            raise ConfigError("--jobs", "must be non-zero")
        cfg = parse_config(load_config(args.config)).with_overrides(args.seed, args.jobs, args.out)

        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "select":
            cmd_select(cfg)
        elif args.command == "sweep":
            cmd_sweep(cfg)
        else:
            cmd_report(cfg, args.results)
    except ConfigError as exc:
        print(json.dumps(_error("config", str(exc), field=exc.field)), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps(_error("missing_file", str(exc), path=exc.filename)), file=sys.stderr)
        return 1
    except CorruptFileError as exc:
        print(json.dumps(_error("corrupt_file", str(exc))), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(json.dumps(_error("invalid_input", str(exc))), file=sys.stderr)
        return 1
    except (SelectionError, NumericalError) as exc:
        print(json.dumps(_error(type(exc).__name__, str(exc))), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
