"""Parameter sweeps over the Cartesian grid of an experiment config.

Cells run one after another; the trajectories of a cell are spread over the
worker pool. The main process is the only writer: every finished cell is
appended to the result table as one complete row and the manifest is
rewritten atomically, so an interrupted sweep can be resumed and simply
skips the cells already on disk.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
import platform
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
import pandas as pd

from ..config import ExperimentConfig, axis_values, config_dict, config_hash
from ..entanglement.negativity import Bipartition
from ..errors import LadderError
from ..model.params import ModelParams, default_steady_cycles
from ..tables.store import ResultStore, cell_key, load_results
from .ensemble import run_ensemble


logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "PyYAML", "joblib", "threadpoolctl", "matplotlib")


def cell_params(config: ExperimentConfig, L: int, t2: float, p1: float, p2: float) -> ModelParams:
    n_st = config.protocol.n_st or default_steady_cycles(L)
    return ModelParams(
        L=L,
        t1=config.model.t1,
        t2=t2,
        t12=config.model.t12,
        tau_u=config.model.tau_u,
        p1=p1,
        p2=p2,
        n_st=n_st,
        m=config.protocol.m,
        filling=config.model.filling,
    )


def iter_cells(config: ExperimentConfig) -> Iterator[ModelParams]:
    """Grid cells in ``(L, t2, p1, p2)`` lexicographic order."""
    grid = config.grid
    for L, t2, p1, p2 in itertools.product(
        grid.sizes(), axis_values(grid.t2), axis_values(grid.p1), axis_values(grid.p2)
    ):
        yield cell_params(config, L, t2, p1, p2)


def result_row(params: ModelParams, lA: int, config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "L": params.L,
        "t1": params.t1,
        "t2": params.t2,
        "t12": params.t12,
        "tau_u": params.tau_u,
        "p1": params.p1,
        "p2": params.p2,
        "lA": lA,
        "n_traj": config.protocol.n_traj,
        "master_seed": config.protocol.master_seed,
        "E_mean": float("nan"),
        "E_sem": float("nan"),
        "N_st": params.n_st,
        "m": params.m,
        "wall_time_s": 0.0,
        "error": "",
    }


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


def write_manifest(config: ExperimentConfig, cells: List[Dict[str, Any]], out_dir: Path) -> Path:
    manifest = {
        "config_hash": config_hash(config),
        "master_seed": config.protocol.master_seed,
        "config": config_dict(config),
        "cells": cells,
        "versions": package_versions(),
    }
    path = out_dir / MANIFEST_NAME
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    os.replace(tmp, path)
    return path


def run_sweep(config: ExperimentConfig, *, n_jobs: Optional[int] = None) -> pd.DataFrame:
    """Run every missing grid cell and return the complete result table.

    Args:
        config: Validated experiment config.
        n_jobs: Worker count for trajectories (defaults to ``protocol.n_jobs``).
    """
    n_jobs = config.protocol.n_jobs if n_jobs is None else n_jobs
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    store = ResultStore(out_dir / config.output.table)
    done = store.completed_cells()
    cells: List[Dict[str, Any]] = []

    for params in iter_cells(config):
        lA = config.lA_for(params.L)
        row = result_row(params, lA, config)
        summary = {k: row[k] for k in ("L", "t2", "p1", "p2", "lA", "n_traj")}
        if cell_key(row) in done:
            logger.info("Skipping completed cell L=%d t2=%g p1=%g p2=%g", params.L, params.t2, params.p1, params.p2)
            cells.append({**summary, "status": "skipped"})
            continue

        logger.info("Running cell L=%d t2=%g p1=%g p2=%g", params.L, params.t2, params.p1, params.p2)
        start = time.perf_counter()
        try:
            result = run_ensemble(
                params,
                Bipartition(lA=lA, L=params.L),
                config.protocol.n_traj,
                config.protocol.master_seed,
                n_jobs=n_jobs,
                backend=config.protocol.backend,
            )
        except (LadderError, ValueError, np.linalg.LinAlgError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
            logger.warning("Cell L=%d t2=%g p1=%g p2=%g failed: %s", params.L, params.t2, params.p1, params.p2, exc)
            cells.append({**summary, "status": "error", "error": row["error"]})
        else:
            row["E_mean"] = result.mean
            row["E_sem"] = result.sem
            cells.append({**summary, "status": "done", "n_failed": result.n_failed})
            logger.info("Cell done: E = %.6f ± %.6f", result.mean, result.sem)
        row["wall_time_s"] = time.perf_counter() - start
        store.append(row)
        write_manifest(config, cells, out_dir)

    write_manifest(config, cells, out_dir)
    return load_results(store.path)
