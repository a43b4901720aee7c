"""Command-line entry point.

    python -m src.cli simulate --config configs/runtime.yaml
    python -m src.cli sweep    --config configs/sweeps/heatmap_L16.yaml --threads 4
    python -m src.cli fit      --config configs/sweeps/scaling_desk.yaml
    python -m src.cli collapse --config configs/sweeps/scaling_desk.yaml
    python -m src.cli plot     --config configs/sweeps/scaling_desk.yaml --kind ceff

Every subcommand reads a config file plus overrides and writes under
``output.directory``. Errors are logged and turned into exit status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .analysis.collapse import collapse_data_from_fits, fss_collapse
from .analysis.fits import crossing_summary, extrapolation_table, fit_table
from .config import ExperimentConfig, axis_values, config_hash, dump_config, load_experiment
from .entanglement.negativity import Bipartition
from .errors import LadderError
from .plots.figures import FIGURE_KINDS, emit_figures
from .simulation.ensemble import run_ensemble
from .simulation.sweep import MANIFEST_NAME, cell_params, run_sweep
from .tables.schema import EXTRAPOLATION_COLUMNS, FIT_COLUMNS
from .tables.store import load_results, read_table, write_table


logger = logging.getLogger(__name__)

FITS_NAME = "fits.csv"
EXTRAPOLATION_NAME = "extrapolation.csv"
CROSSINGS_NAME = "crossings.json"
COLLAPSE_NAME = "collapse.json"
FIT_KINDS = {"ceff", "extrapolation", "collapse"}


def _overrides(args: argparse.Namespace) -> List[str]:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"protocol.master_seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"protocol.n_jobs={args.threads}")
        overrides.append(f"analysis.n_jobs={args.threads}")
    if args.out is not None:
        overrides.append(f"output.directory={json.dumps(str(args.out))}")
    return overrides


def _write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def simulate(config: ExperimentConfig, args: argparse.Namespace) -> Dict[str, Any]:
    grid = config.grid
    L = args.L if args.L is not None else grid.sizes()[0]
    t2 = args.t2 if args.t2 is not None else axis_values(grid.t2)[0]
    p1 = args.p1 if args.p1 is not None else axis_values(grid.p1)[0]
    p2 = args.p2 if args.p2 is not None else axis_values(grid.p2)[0]
    params = cell_params(config, L, t2, p1, p2)
    lA = config.lA_for(params.L)
    result = run_ensemble(
        params,
        Bipartition(lA=lA, L=params.L),
        config.protocol.n_traj,
        config.protocol.master_seed,
        n_jobs=config.protocol.n_jobs,
        backend=config.protocol.backend,
    )
    summary = {
        "L": params.L,
        "t2": params.t2,
        "p1": params.p1,
        "p2": params.p2,
        "lA": lA,
        "N_st": params.n_st,
        "m": params.m,
        "mean": result.mean,
        "sem": result.sem,
        "n_traj": result.n_traj,
        "n_failed": result.n_failed,
        "master_seed": result.master_seed,
        "config_hash": config_hash(config),
    }
    _write_json(summary, config.output_dir / "simulate.json")
    print(json.dumps(summary))
    return summary


def sweep(config: ExperimentConfig, args: argparse.Namespace) -> pd.DataFrame:
    dump_config(config, config.output_dir / "config.yaml")
    table = run_sweep(config)
    print(json.dumps({"rows": len(table), "table": str(config.output_dir / config.output.table)}))
    return table


def fit(config: ExperimentConfig, args: argparse.Namespace) -> pd.DataFrame:
    results_path = Path(args.results) if args.results else config.output_dir / config.output.table
    table = load_results(results_path)
    fits = fit_table(table, config.analysis.windows)
    write_table(fits, config.output_dir / FITS_NAME, FIT_COLUMNS)
    extrapolated = extrapolation_table(fits, config.analysis.extrapolation_set())
    write_table(extrapolated, config.output_dir / EXTRAPOLATION_NAME, EXTRAPOLATION_COLUMNS)
    small, large = config.analysis.crossing_pair()
    crossings = crossing_summary(fits, config.analysis.control, small, large) if small != large else []
    _write_json(crossings, config.output_dir / CROSSINGS_NAME)
    print(json.dumps({"fits": len(fits), "crossings": len(crossings)}))
    return fits


def collapse(config: ExperimentConfig, args: argparse.Namespace) -> List[Dict[str, Any]]:
    fits = read_table(config.output_dir / FITS_NAME, FIT_COLUMNS)
    box = {name: tuple(bounds) for name, bounds in config.analysis.collapse_box.items()}
    summaries = []
    for (t2, p1), data in collapse_data_from_fits(fits, config.analysis.collapse_set()).items():
        result = fss_collapse(
            data,
            box=box,
            fix_zeta=config.analysis.fix_zeta,
            n_jobs=config.analysis.n_jobs,
            labels={"t2": t2, "p1": p1},
        )
        logger.info(
            "Collapse t2=%g p1=%g: p2c=%.4f±%.4f nu=%.3f±%.3f zeta=%.4f±%.4f",
            t2, p1, result.p2c, result.p2c_err, result.nu, result.nu_err, result.zeta, result.zeta_err,
        )
        summaries.append(result.as_dict())
    _write_json(summaries, config.output_dir / COLLAPSE_NAME)
    print(json.dumps(summaries))
    return summaries


def _data_hash(config: ExperimentConfig) -> str:
    manifest = config.output_dir / MANIFEST_NAME
    if manifest.exists():
        return json.loads(manifest.read_text(encoding="utf-8"))["config_hash"]
    return config_hash(config)


def plot(config: ExperimentConfig, args: argparse.Namespace) -> List[Path]:
    out_dir = config.output_dir
    options: Dict[str, Any] = {}
    if args.kind in FIT_KINDS:
        table = read_table(out_dir / FITS_NAME, FIT_COLUMNS)
        options["control"] = config.analysis.control
        if args.kind == "extrapolation":
            options["windows"] = config.analysis.extrapolation_set()
            if (out_dir / EXTRAPOLATION_NAME).exists():
                options["extrapolation"] = read_table(out_dir / EXTRAPOLATION_NAME, EXTRAPOLATION_COLUMNS)
        if args.kind == "collapse":
            options["windows"] = config.analysis.collapse_set()
            if (out_dir / COLLAPSE_NAME).exists():
                options["collapse"] = json.loads((out_dir / COLLAPSE_NAME).read_text(encoding="utf-8"))
    else:
        table = load_results(out_dir / config.output.table)
    paths = emit_figures(
        table,
        args.kind,
        out_dir / "figures",
        config_hash=_data_hash(config),
        contour_level=config.plot.contour_level,
        **options,
    )
    print(json.dumps([str(p) for p in paths]))
    return paths


COMMANDS = {"simulate": simulate, "sweep": sweep, "fit": fit, "collapse": collapse, "plot": plot}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Path to experiment config (YAML or JSON)")
    common.add_argument("--seed", type=int, help="Override protocol.master_seed")
    common.add_argument("--threads", type=int, help="Worker count for trajectories and collapse starts")
    common.add_argument("--out", help="Override output.directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override any config key (repeatable)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="python -m src.cli", description="Monitored free-fermion ladder toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="Run one trajectory ensemble")
    sim.add_argument("--L", type=int)
    sim.add_argument("--t2", type=float)
    sim.add_argument("--p1", type=float)
    sim.add_argument("--p2", type=float)

    sub.add_parser("sweep", parents=[common], help="Run the full parameter grid")
    fit_parser = sub.add_parser("fit", parents=[common], help="Fit c_eff over the configured windows")
    fit_parser.add_argument("--results", help="Result table to fit (defaults to the sweep output)")
    sub.add_parser("collapse", parents=[common], help="Finite-size-scaling collapse of c_eff")
    plot_parser = sub.add_parser("plot", parents=[common], help="Emit SVG figures")
    plot_parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_experiment(args.config, _overrides(args))
        COMMANDS[args.command](config, args)
    except (LadderError, ValueError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
