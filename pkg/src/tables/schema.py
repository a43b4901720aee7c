"""Canonical schemas of the CSV artifacts.

Column order is fixed; every writer emits exactly these headers and every
reader checks them. Floats are written with 17 significant digits so a
table reloads to the same doubles.
"""

from __future__ import annotations

from typing import Dict, List

import pandas as pd

from ..errors import SchemaError


RESULT_COLUMNS: List[str] = [
    "L",
    "t1",
    "t2",
    "t12",
    "tau_u",
    "p1",
    "p2",
    "lA",
    "n_traj",
    "master_seed",
    "E_mean",
    "E_sem",
    "N_st",
    "m",
    "wall_time_s",
    "error",
]

RESULT_DTYPES: Dict[str, str] = {
    "L": "int64",
    "t1": "float64",
    "t2": "float64",
    "t12": "float64",
    "tau_u": "float64",
    "p1": "float64",
    "p2": "float64",
    "lA": "int64",
    "n_traj": "int64",
    "master_seed": "int64",
    "E_mean": "float64",
    "E_sem": "float64",
    "N_st": "int64",
    "m": "int64",
    "wall_time_s": "float64",
    "error": "string",
}

# Columns that identify a sweep cell; a rerun skips cells already present.
CELL_KEYS: List[str] = ["L", "t1", "t2", "t12", "tau_u", "p1", "p2", "lA", "n_traj", "master_seed", "N_st", "m"]

FIT_COLUMNS: List[str] = [
    "t2",
    "p1",
    "p2",
    "window",
    "L_min",
    "L_max",
    "n_points",
    "c_eff",
    "c_err",
    "a0",
    "a_err",
]

EXTRAPOLATION_COLUMNS: List[str] = [
    "t2",
    "p1",
    "p2",
    "n_windows",
    "c0",
    "c0_err",
    "c1",
    "c1_err",
    "c2",
    "c2_err",
]

FLOAT_FORMAT = "%.17g"


def check_columns(frame: pd.DataFrame, expected: List[str], what: str) -> None:
    """Raise ``SchemaError`` unless ``frame`` has exactly ``expected`` columns, in order."""
    actual = list(frame.columns)
    if actual != expected:
        missing = [c for c in expected if c not in actual]
        extra = [c for c in actual if c not in expected]
        raise SchemaError(f"{what} columns do not match schema (missing={missing}, extra={extra})")
