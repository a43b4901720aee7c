"""Append-only CSV storage for sweep results.

Each row is serialized to one complete line and written with a single
``write`` followed by ``fsync``. A run killed mid-write can leave at most a
truncated last line; it is cut off before the next append and ignored on
load.
"""

from __future__ import annotations

import io
import logging
import os
from pathlib import Path
from typing import Any, List, Mapping, Set, Tuple

import numpy as np
import pandas as pd

from ..errors import SchemaError
from .schema import CELL_KEYS, FLOAT_FORMAT, RESULT_COLUMNS, RESULT_DTYPES, check_columns


logger = logging.getLogger(__name__)


def format_rows(frame: pd.DataFrame, *, header: bool) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, header=header, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_table(frame: pd.DataFrame, path: str | Path, columns: List[str]) -> Path:
    """Write a whole table (fits, extrapolations) with the canonical float format."""
    check_columns(frame, columns, str(path))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_rows(frame, header=True), encoding="utf-8")
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def read_table(path: str | Path, columns: List[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Table not found: {path}")
    frame = pd.read_csv(path)
    check_columns(frame, columns, str(path))
    return frame


class ResultStore:
    """Single writer for a sweep's ``results.csv``."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.path.exists() and self.path.stat().st_size > 0:
            self._check_header()
            self._repair_tail()
        else:
            self._write(",".join(RESULT_COLUMNS) + "\n")

    def _check_header(self) -> None:
        with self.path.open("r", encoding="utf-8") as f:
            header = f.readline().rstrip("\n").split(",")
        if header != RESULT_COLUMNS:
            raise SchemaError(f"{self.path} has header {header}, expected {RESULT_COLUMNS}")

    def _repair_tail(self) -> None:
        data = self.path.read_bytes()
        if data.endswith(b"\n"):
            return
        keep = data.rfind(b"\n") + 1
        logger.warning("Dropping truncated last line of %s", self.path)
        with self.path.open("r+b") as f:
            f.truncate(keep)

    def _write(self, text: str) -> None:
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, text.encode("utf-8"))
            os.fsync(fd)
        finally:
            os.close(fd)

    def append(self, row: Mapping[str, Any]) -> None:
        missing = [c for c in RESULT_COLUMNS if c not in row]
        if missing:
            raise SchemaError(f"Result row is missing fields: {missing}")
        frame = pd.DataFrame([{c: row[c] for c in RESULT_COLUMNS}], columns=RESULT_COLUMNS)
        self._write(format_rows(frame, header=False))

    def completed_cells(self) -> Set[Tuple[Any, ...]]:
        """Cell keys of rows that finished without error."""
        table = load_results(self.path)
        done = table[table["error"].isna() | table["error"].eq("")]
        return {cell_key(row) for row in done[CELL_KEYS].to_dict("records")}


def cell_key(row: Mapping[str, Any]) -> Tuple[Any, ...]:
    return tuple(
        int(row[k]) if RESULT_DTYPES[k] == "int64" else float(row[k]) for k in CELL_KEYS
    )


def load_results(path: str | Path) -> pd.DataFrame:
    """Load a results table, dropping incomplete lines.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        SchemaError: The header is not the result schema.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Results not found: {path}")
    frame = pd.read_csv(path, on_bad_lines="skip", dtype={"error": "string"})
    check_columns(frame, RESULT_COLUMNS, str(path))
    numeric = [c for c in RESULT_COLUMNS if c not in ("error", "E_mean", "E_sem")]
    complete = frame[numeric].notna().all(axis=1)
    if not complete.all():
        logger.warning("Ignoring %d incomplete rows in %s", int((~complete).sum()), path)
    frame = frame[complete].reset_index(drop=True)
    for column in numeric:
        if RESULT_DTYPES[column] == "int64":
            frame[column] = frame[column].astype(np.int64)
    return frame
