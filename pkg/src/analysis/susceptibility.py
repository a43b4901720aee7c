"""Entanglement susceptibility to the ancilla measurement rate.

``χ₂ = d𝓔̄/dp₂`` by finite differences on a uniform ``p₂`` grid: central
differences inside, second-order one-sided stencils at both ends. Errors are
propagated linearly from the ensemble standard errors, treating grid points
as independent.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import FitError, SchemaError


logger = logging.getLogger(__name__)

GRID_RTOL = 1e-6
GROUP_KEYS = ["L", "t2", "p1"]


def _uniform_step(grid: np.ndarray) -> float:
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise FitError("p2 grid must be strictly increasing")
    step = float(steps[0])
    if not np.allclose(steps, step, rtol=GRID_RTOL, atol=0.0):
        raise FitError(f"p2 grid is not uniform (steps {steps.min():.6g}..{steps.max():.6g})")
    return step


def susceptibility(
    p2: Sequence[float], mean: Sequence[float], sem: Sequence[float] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference derivative of a negativity curve and its error.

    Returns:
        ``(chi, chi_err)`` on the input grid.

    Raises:
        FitError: Fewer than 3 points or a non-uniform grid.
    """
    grid = np.asarray(p2, dtype=float)
    values = np.asarray(mean, dtype=float)
    errors = np.zeros_like(values) if sem is None else np.asarray(sem, dtype=float)
    if grid.size < 3:
        raise FitError(f"susceptibility needs at least 3 grid points, got {grid.size}")
    if values.shape != grid.shape or errors.shape != grid.shape:
        raise ValueError("p2, mean and sem must have the same length")
    h = _uniform_step(grid)

    chi = np.gradient(values, h, edge_order=2)

    # Stencil weights of np.gradient with edge_order=2, squared for variance.
    variance = np.empty_like(values)
    variance[1:-1] = (errors[2:] ** 2 + errors[:-2] ** 2) / (2.0 * h) ** 2
    edge = np.array([1.5, 2.0, 0.5]) / h
    variance[0] = np.sum((edge * errors[:3]) ** 2)
    variance[-1] = np.sum((edge * errors[-1:-4:-1]) ** 2)
    return chi, np.sqrt(variance)


def susceptibility_table(table: pd.DataFrame) -> pd.DataFrame:
    """χ₂ for every ``(L, t2, p1)`` curve of a sweep table.

    Curves with fewer than 3 points or an irregular grid are skipped with a
    warning.
    """
    required = set(GROUP_KEYS) | {"p2", "E_mean", "E_sem"}
    missing = required - set(table.columns)
    if missing:
        raise SchemaError(f"Sweep table is missing columns: {sorted(missing)}")

    frames = []
    for key, group in table.groupby(GROUP_KEYS, sort=True):
        curve = group.sort_values("p2")
        try:
            chi, chi_err = susceptibility(curve["p2"], curve["E_mean"], curve["E_sem"])
        except FitError as exc:
            logger.warning("Skipping susceptibility for L,t2,p1=%s: %s", key, exc)
            continue
        frames.append(
            curve[GROUP_KEYS + ["p2"]].assign(chi2=chi, chi2_err=chi_err).reset_index(drop=True)
        )
    if not frames:
        return pd.DataFrame(columns=GROUP_KEYS + ["p2", "chi2", "chi2_err"])
    return pd.concat(frames, ignore_index=True)
