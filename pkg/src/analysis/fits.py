"""Logarithmic scaling fits of the steady-state negativity.

At fixed ``(t2, p1, p2)`` the half-chain negativity is fitted as
``𝓔̄ = (c_eff / 4) ln L + a0`` by weighted least squares over a window of
sizes. Moving windows track the drift of ``c_eff`` towards large ``L``;
the sign of that drift separates the logarithmic phase (growing) from the
area-law phase (shrinking), and a quadratic fit in ``1/L`` extrapolates
``c_eff`` to the thermodynamic limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import FitError, SchemaError
from ..tables.schema import EXTRAPOLATION_COLUMNS, FIT_COLUMNS, RESULT_COLUMNS


logger = logging.getLogger(__name__)

# Moving windows used for full-scale runs.
PRODUCTION_WINDOWS: Dict[str, Tuple[int, ...]] = {
    "L8-96": (8, 16, 24, 32, 48, 64, 80, 96),
    "L16-128": (16, 24, 32, 48, 64, 80, 96, 128),
    "L24-160": (24, 32, 48, 64, 80, 96, 128, 160),
    "L32-192": (32, 48, 64, 80, 96, 128, 160, 192),
    "L48-256": (48, 64, 80, 96, 128, 160, 192, 256),
}

# Reduced windows for sweeps limited to L <= 64.
DESK_WINDOWS: Dict[str, Tuple[int, ...]] = {
    "L8-32": (8, 16, 24, 32),
    "L16-48": (16, 24, 32, 48),
    "L24-64": (24, 32, 48, 64),
    "L8-64": (8, 16, 24, 32, 48, 64),
}

FIT_WINDOWS: Dict[str, Tuple[int, ...]] = {**PRODUCTION_WINDOWS, **DESK_WINDOWS}

MIN_WINDOW_POINTS = 3
CONTROL_KEYS = ("p2", "t2")


@dataclass(frozen=True)
class ScalingSeries:
    """Ensemble means versus system size at fixed ``(t2, p1, p2)``."""

    L: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    labels: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        L = np.asarray(self.L, dtype=int)
        mean = np.asarray(self.mean, dtype=float)
        sem = np.asarray(self.sem, dtype=float)
        if not (L.shape == mean.shape == sem.shape) or L.ndim != 1:
            raise ValueError("L, mean and sem must be 1-d arrays of equal length")
        if np.any(np.diff(L) <= 0):
            raise ValueError(f"L values must be strictly increasing, got {L.tolist()}")
        if np.any(sem <= 0):
            raise ValueError("All standard errors must be positive")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sem", sem)

    def restrict(self, sizes: Sequence[int]) -> "ScalingSeries":
        mask = np.isin(self.L, np.asarray(sizes, dtype=int))
        return ScalingSeries(self.L[mask], self.mean[mask], self.sem[mask], dict(self.labels))


@dataclass(frozen=True)
class FitResult:
    c_eff: float
    a0: float
    c_err: float
    a_err: float
    window: str
    sizes: Tuple[int, ...]

    @property
    def L_min(self) -> int:
        return min(self.sizes)

    @property
    def L_max(self) -> int:
        return max(self.sizes)


@dataclass(frozen=True)
class ExtrapolationResult:
    """``c_eff(1/L) = c0 + c1/L + c2/L²`` with standard errors."""

    coefficients: Tuple[float, float, float]
    errors: Tuple[float, float, float]

    @property
    def c0(self) -> float:
        return self.coefficients[0]

    @property
    def c0_err(self) -> float:
        return self.errors[0]


def _weighted_polyfit(
    x: np.ndarray, y: np.ndarray, sigma: np.ndarray, degree: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients (constant term first) and their standard errors."""
    if np.unique(x).size <= degree:
        raise FitError(f"singular design: {np.unique(x).size} distinct abscissae for degree {degree}")
    coefficients, covariance = np.polyfit(x, y, degree, w=1.0 / sigma, cov="unscaled")
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    return coefficients[::-1], errors[::-1]


def largest_sizes(windows: Sequence[str]) -> Dict[str, int]:
    """Largest size of each registered window.

    Raises:
        FitError: Unknown window, or two windows ending at the same size.
    """
    unknown = [w for w in windows if w not in FIT_WINDOWS]
    if unknown:
        raise FitError(f"Unknown fit windows: {unknown}")
    sizes = {w: max(FIT_WINDOWS[w]) for w in windows}
    clashes = sorted(w for w in sizes if list(sizes.values()).count(sizes[w]) > 1)
    if clashes:
        raise FitError(f"windows {clashes} share their largest size; keep one window per L_max")
    return sizes


def fit_ceff(series: ScalingSeries, window: str) -> FitResult:
    """Weighted fit of ``𝓔̄`` against ``ln L`` over a registered window.

    Raises:
        FitError: Unknown window or fewer than 3 sizes of the window present.
    """
    if window not in FIT_WINDOWS:
        raise FitError(f"Unknown fit window: {window}")
    sub = series.restrict(FIT_WINDOWS[window])
    if sub.L.size < MIN_WINDOW_POINTS:
        raise FitError(
            f"window {window} needs >= {MIN_WINDOW_POINTS} sizes, series has {sub.L.tolist()}"
        )
    (a0, slope), (a_err, slope_err) = _weighted_polyfit(np.log(sub.L), sub.mean, sub.sem, 1)
    return FitResult(
        c_eff=float(4.0 * slope),
        a0=float(a0),
        c_err=float(4.0 * slope_err),
        a_err=float(a_err),
        window=window,
        sizes=tuple(int(v) for v in sub.L),
    )


def fit_windows(series: ScalingSeries, windows: Sequence[str]) -> List[FitResult]:
    """Fit every window that has enough sizes; others are skipped with a warning."""
    results = []
    for window in windows:
        try:
            results.append(fit_ceff(series, window))
        except FitError as exc:
            logger.warning("Skipping window %s for %s: %s", window, series.labels, exc)
    return results


def extrapolate_ceff(
    L: Sequence[float], c_eff: Sequence[float], c_err: Sequence[float]
) -> ExtrapolationResult:
    """Weighted quadratic fit of ``c_eff`` in ``x = 1/L``; ``c0`` is the ``L → ∞`` value."""
    sizes = np.asarray(L, dtype=float)
    values = np.asarray(c_eff, dtype=float)
    errors = np.asarray(c_err, dtype=float)
    if sizes.size < 3:
        raise FitError(f"extrapolation needs at least 3 points, got {sizes.size}")
    if np.any(errors <= 0):
        raise FitError("extrapolation needs positive c_eff errors")
    coefficients, coefficient_errors = _weighted_polyfit(1.0 / sizes, values, errors, 2)
    return ExtrapolationResult(
        coefficients=tuple(float(c) for c in coefficients),
        errors=tuple(float(e) for e in coefficient_errors),
    )


def detect_crossing(
    grid: Sequence[float], c_small: Sequence[float], c_large: Sequence[float]
) -> Optional[float]:
    """Control value where ``dc_eff/dL`` changes sign between two windows.

    The drift is ``c_large - c_small``; the first sign change along the
    grid is located by linear interpolation. Returns ``None`` when the drift
    keeps one sign.
    """
    x = np.asarray(grid, dtype=float)
    drift = np.asarray(c_large, dtype=float) - np.asarray(c_small, dtype=float)
    if x.shape != drift.shape:
        raise ValueError("grid and c_eff arrays must have equal length")
    order = np.argsort(x)
    x, drift = x[order], drift[order]
    for i in range(x.size - 1):
        left, right = drift[i], drift[i + 1]
        if left == 0.0:
            return float(x[i])
        if left * right < 0:
            return float(x[i] - left * (x[i + 1] - x[i]) / (right - left))
    if x.size and drift[-1] == 0.0:
        return float(x[-1])
    return None


def classify_regime(drifts: Sequence[float]) -> str:
    """Label a control sweep from the drift of ``c_eff`` with ``L``.

    ``drifts`` are ordered by increasing control value. ``log-only``: grows
    everywhere; ``area-only``: shrinks everywhere. A single sign change is
    named by its two sides in control order: ``log-area`` when growth comes
    first (increasing ``p2``), ``area-log`` when shrinking comes first
    (increasing ``t2``). Anything else is ``mixed``.
    """
    signs = np.sign(np.asarray(drifts, dtype=float))
    if signs.size == 0:
        raise ValueError("No drifts to classify")
    if np.all(signs > 0):
        return "log-only"
    if np.all(signs < 0):
        return "area-only"
    changes = np.flatnonzero(np.diff(signs) != 0)
    if changes.size == 1 and signs[0] * signs[-1] < 0:
        return "log-area" if signs[0] > 0 else "area-log"
    return "mixed"


def _require(table: pd.DataFrame, columns: Sequence[str], what: str) -> None:
    missing = [c for c in columns if c not in table.columns]
    if missing:
        raise SchemaError(f"{what} is missing columns: {missing}")


def scaling_series(table: pd.DataFrame) -> Dict[Tuple[float, float, float], ScalingSeries]:
    """Group a result table into one series per ``(t2, p1, p2)``.

    Rows with a recorded error or a non-positive sem are dropped.
    """
    _require(table, RESULT_COLUMNS, "Result table")
    ok = table[table["error"].fillna("").astype(str).eq("") & (table["E_sem"] > 0)]
    series = {}
    for key, group in ok.groupby(["t2", "p1", "p2"], sort=True):
        group = group.sort_values("L").drop_duplicates("L", keep="last")
        labels = dict(zip(("t2", "p1", "p2"), (float(v) for v in key)))
        series[tuple(float(v) for v in key)] = ScalingSeries(
            group["L"].to_numpy(), group["E_mean"].to_numpy(), group["E_sem"].to_numpy(), labels
        )
    return series


def fit_table(table: pd.DataFrame, windows: Sequence[str]) -> pd.DataFrame:
    """One fit row per ``(t2, p1, p2, window)`` with enough sizes."""
    rows = []
    for (t2, p1, p2), series in scaling_series(table).items():
        for fit in fit_windows(series, windows):
            rows.append(
                {
                    "t2": t2,
                    "p1": p1,
                    "p2": p2,
                    "window": fit.window,
                    "L_min": fit.L_min,
                    "L_max": fit.L_max,
                    "n_points": len(fit.sizes),
                    "c_eff": fit.c_eff,
                    "c_err": fit.c_err,
                    "a0": fit.a0,
                    "a_err": fit.a_err,
                }
            )
    return pd.DataFrame(rows, columns=FIT_COLUMNS)


def extrapolation_table(fits: pd.DataFrame, windows: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Quadratic ``1/L`` extrapolation per ``(t2, p1, p2)``.

    Each window in ``windows`` (all windows of the table by default)
    contributes one point at its largest size.

    Raises:
        FitError: Two of the selected windows end at the same size.
    """
    _require(fits, FIT_COLUMNS, "Fit table")
    if windows is not None:
        fits = fits[fits["window"].isin(list(windows))]
    rows = []
    for (t2, p1, p2), group in fits.groupby(["t2", "p1", "p2"], sort=True):
        group = group.sort_values("L_max")
        clash = group[group["L_max"].duplicated(keep=False)]
        if not clash.empty:
            raise FitError(
                f"windows {sorted(set(clash['window']))} share L_max at t2={t2:g} p1={p1:g} p2={p2:g}; "
                "select one window per size"
            )
        try:
            result = extrapolate_ceff(group["L_max"], group["c_eff"], group["c_err"])
        except FitError as exc:
            logger.warning("Skipping extrapolation for t2=%g p1=%g p2=%g: %s", t2, p1, p2, exc)
            continue
        rows.append(
            {
                "t2": t2,
                "p1": p1,
                "p2": p2,
                "n_windows": len(group),
                "c0": result.coefficients[0],
                "c0_err": result.errors[0],
                "c1": result.coefficients[1],
                "c1_err": result.errors[1],
                "c2": result.coefficients[2],
                "c2_err": result.errors[2],
            }
        )
    return pd.DataFrame(rows, columns=EXTRAPOLATION_COLUMNS)


def crossing_summary(
    fits: pd.DataFrame, control: str, small_window: str, large_window: str
) -> List[Dict[str, object]]:
    """Crossings and regime labels along ``control`` for every fixed slice."""
    _require(fits, FIT_COLUMNS, "Fit table")
    if control not in CONTROL_KEYS:
        raise ValueError(f"control must be one of {CONTROL_KEYS}, got {control}")
    fixed = [key for key in ("t2", "p1", "p2") if key != control]
    summary = []
    for key, group in fits.groupby(fixed, sort=True):
        small = group[group["window"] == small_window].set_index(control)["c_eff"]
        large = group[group["window"] == large_window].set_index(control)["c_eff"]
        common = small.index.intersection(large.index).sort_values()
        if common.empty:
            continue
        drift = large[common] - small[common]
        summary.append(
            {
                **{name: float(value) for name, value in zip(fixed, key)},
                "control": control,
                "windows": [small_window, large_window],
                "grid": [float(v) for v in common],
                "drift": [float(v) for v in drift],
                "crossing": detect_crossing(common, small[common], large[common]),
                "regime": classify_regime(drift.to_numpy()),
            }
        )
    return summary
