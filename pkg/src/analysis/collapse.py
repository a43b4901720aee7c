"""Finite-size-scaling collapse of ``c_eff(p2, L)``.

The scaling ansatz is ``c_eff = L^(ζ/ν) f(L^(1/ν) (p2 - p2c))``. For trial
parameters every point is rescaled to ``x = L^(1/ν)(p2 - p2c)``,
``y = c_eff L^(-ζ/ν)``; the collapse cost is the error-weighted squared
distance of each point from the linear interpolation through the rescaled
points of every other size, averaged over all point/size pairs whose ``x``
falls inside the other curve's range.

The cost is minimized with Nelder-Mead from a fixed lattice of starting
points inside a parameter box, so the result is deterministic. Parameter
errors come from the curvature of the total chi-square at the minimum,
scaled by the number of sizes.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import minimize

from ..errors import CollapseError
from ..tables.schema import FIT_COLUMNS


logger = logging.getLogger(__name__)

DEFAULT_BOX: Dict[str, Tuple[float, float]] = {
    "p2c": (0.0, 1.0),
    "nu": (0.5, 10.0),
    "zeta": (-1.0, 1.0),
}
START_P2C = (0.125, 0.375, 0.625, 0.875)
START_NU = (1.0, 2.5, 4.5, 7.5)
MIN_SIZES = 3
MIN_POINTS_PER_SIZE = 5
# Returned when too few point/size pairs overlap to judge a collapse.
OVERLAP_PENALTY = 1e6


@dataclass(frozen=True)
class CollapseData:
    """Flat ``(L, p2, c_eff, c_err)`` points, sorted by ``(L, p2)``."""

    L: np.ndarray
    p2: np.ndarray
    c_eff: np.ndarray
    c_err: np.ndarray

    def __post_init__(self) -> None:
        arrays = [np.asarray(a, dtype=float) for a in (self.L, self.p2, self.c_eff, self.c_err)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise CollapseError("L, p2, c_eff and c_err must be 1-d arrays of equal length")
        order = np.lexsort((arrays[1], arrays[0]))
        L, p2, c_eff, c_err = (a[order] for a in arrays)
        if not np.all(np.isfinite(c_eff)) or np.any(c_err <= 0) or not np.all(np.isfinite(c_err)):
            raise CollapseError("collapse needs finite c_eff values with positive errors")
        sizes, counts = np.unique(L, return_counts=True)
        if sizes.size < MIN_SIZES:
            raise CollapseError(f"collapse needs >= {MIN_SIZES} sizes, got {sizes.tolist()}")
        if np.any(counts < MIN_POINTS_PER_SIZE):
            raise CollapseError(
                f"collapse needs >= {MIN_POINTS_PER_SIZE} p2 points per size, got {counts.tolist()}"
            )
        for name, value in zip(("L", "p2", "c_eff", "c_err"), (L, p2, c_eff, c_err)):
            object.__setattr__(self, name, value)

    @property
    def sizes(self) -> np.ndarray:
        return np.unique(self.L)

    @classmethod
    def from_curves(cls, curves: Dict[int, Tuple[Sequence[float], Sequence[float], Sequence[float]]]) -> "CollapseData":
        """Build from ``{L: (p2, c_eff, c_err)}``."""
        parts = [
            (np.full(len(p2), float(size)), np.asarray(p2), np.asarray(c), np.asarray(e))
            for size, (p2, c, e) in curves.items()
        ]
        if not parts:
            raise CollapseError("no curves to collapse")
        return cls(*(np.concatenate(column) for column in zip(*parts)))


@dataclass(frozen=True)
class CollapseResult:
    p2c: float
    nu: float
    zeta: float
    p2c_err: float
    nu_err: float
    zeta_err: float
    quality: float
    n_pairs: int
    zeta_fixed: bool = False
    starts_converged: int = 0
    labels: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {
            **self.labels,
            "p2c": self.p2c,
            "p2c_err": self.p2c_err,
            "nu": self.nu,
            "nu_err": self.nu_err,
            "zeta": self.zeta,
            "zeta_err": self.zeta_err,
            "quality": self.quality,
            "n_pairs": self.n_pairs,
            "zeta_fixed": self.zeta_fixed,
            "starts_converged": self.starts_converged,
        }


def rescale(theta: Sequence[float], data: CollapseData) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaling variables ``(x, y, dy)`` for ``theta = (p2c, nu, zeta)``."""
    p2c, nu, zeta = theta
    x = data.L ** (1.0 / nu) * (data.p2 - p2c)
    factor = data.L ** (-zeta / nu)
    return x, data.c_eff * factor, data.c_err * factor


def _pair_terms(theta: Sequence[float], data: CollapseData) -> np.ndarray:
    x, y, dy = rescale(theta, data)
    terms = []
    for size in data.sizes:
        own = data.L == size
        for other in data.sizes:
            if other == size:
                continue
            mask = data.L == other
            order = np.argsort(x[mask], kind="stable")
            ox, oy, ody = x[mask][order], y[mask][order], dy[mask][order]
            inside = (x[own] >= ox[0]) & (x[own] <= ox[-1])
            if not np.any(inside):
                continue
            xi = x[own][inside]
            y_ref = np.interp(xi, ox, oy)
            dy_ref = np.interp(xi, ox, ody)
            terms.append((y[own][inside] - y_ref) ** 2 / (dy[own][inside] ** 2 + dy_ref**2))
    return np.concatenate(terms) if terms else np.empty(0)


def collapse_cost(theta: Sequence[float], data: CollapseData) -> float:
    """Mean weighted interpolation residual; a large penalty without overlap."""
    terms = _pair_terms(theta, data)
    if terms.size < max(1, data.L.size // 2):
        return OVERLAP_PENALTY
    return float(np.mean(terms))


def _chi_square(theta: Sequence[float], data: CollapseData) -> float:
    return float(np.sum(_pair_terms(theta, data)))


def _curvature_errors(theta: np.ndarray, data: CollapseData, free: List[int]) -> np.ndarray:
    """Standard errors from the finite-difference Hessian of the chi-square."""
    steps = {i: 1e-4 * max(1.0, abs(theta[i])) for i in free}
    hessian = np.zeros((len(free), len(free)))
    base = _chi_square(theta, data)
    for a, i in enumerate(free):
        for b, j in enumerate(free):
            if b < a:
                continue
            if i == j:
                plus = theta.copy()
                minus = theta.copy()
                plus[i] += steps[i]
                minus[i] -= steps[i]
                value = (_chi_square(plus, data) - 2.0 * base + _chi_square(minus, data)) / steps[i] ** 2
            else:
                corners = []
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    shifted = theta.copy()
                    shifted[i] += si * steps[i]
                    shifted[j] += sj * steps[j]
                    corners.append(_chi_square(shifted, data))
                value = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * steps[i] * steps[j])
            hessian[a, b] = hessian[b, a] = value
    # The ordered-pair sum counts every residual once per size.
    covariance = 2.0 * data.sizes.size * np.linalg.pinv(hessian)
    errors = np.zeros(3)
    errors[free] = np.sqrt(np.abs(np.diag(covariance)))
    return errors


def _minimize_from(start: np.ndarray, data: CollapseData, bounds, fixed_zeta: Optional[float]):
    if fixed_zeta is None:
        objective = lambda theta: collapse_cost(theta, data)  # noqa: E731
        x0, box = start, bounds
    else:
        objective = lambda theta: collapse_cost((theta[0], theta[1], fixed_zeta), data)  # noqa: E731
        x0, box = start[:2], bounds[:2]
    return minimize(
        objective,
        x0,
        method="Nelder-Mead",
        bounds=box,
        options={"xatol": 1e-8, "fatol": 1e-14, "maxiter": 5000, "maxfev": 10000},
    )


def fss_collapse(
    data: CollapseData,
    *,
    box: Optional[Dict[str, Tuple[float, float]]] = None,
    fix_zeta: Optional[float] = None,
    n_jobs: int = 1,
    labels: Optional[Dict[str, float]] = None,
) -> CollapseResult:
    """Best collapse over a deterministic lattice of Nelder-Mead starts.

    Args:
        data: Points to collapse.
        box: Bounds for ``p2c``, ``nu`` and ``zeta``.
        fix_zeta: Hold ``zeta`` at this value (reduced model).
        n_jobs: Workers for the independent starts.

    Raises:
        CollapseError: No start converged.
    """
    box = {**DEFAULT_BOX, **(box or {})}
    bounds = [box["p2c"], box["nu"], box["zeta"]]
    zeta0 = 0.0 if fix_zeta is None else float(fix_zeta)
    starts = [np.array([p, n, zeta0]) for p, n in itertools.product(START_P2C, START_NU)]
    starts = [np.clip(s, [b[0] for b in bounds], [b[1] for b in bounds]) for s in starts]
    logger.debug("Collapse: %d starts, fixed zeta=%s", len(starts), fix_zeta)

    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_minimize_from)(start, data, bounds, fix_zeta) for start in starts
    )
    converged = [o for o in outcomes if o.success and np.isfinite(o.fun) and o.fun < OVERLAP_PENALTY]
    if not converged:
        raise CollapseError("Nelder-Mead did not converge from any start")
    # Ties go to the earliest start, so the choice does not depend on n_jobs.
    best = min(converged, key=lambda o: o.fun)
    theta = np.array([best.x[0], best.x[1], best.x[2] if fix_zeta is None else zeta0])
    free = [0, 1] if fix_zeta is not None else [0, 1, 2]
    errors = _curvature_errors(theta, data, free)
    quality = collapse_cost(theta, data)
    return CollapseResult(
        p2c=float(theta[0]),
        nu=float(theta[1]),
        zeta=float(theta[2]),
        p2c_err=float(errors[0]),
        nu_err=float(errors[1]),
        zeta_err=float(errors[2]),
        quality=float(quality),
        n_pairs=int(_pair_terms(theta, data).size),
        zeta_fixed=fix_zeta is not None,
        starts_converged=len(converged),
        labels=dict(labels or {}),
    )


def collapse_data_from_fits(fits: pd.DataFrame, windows: Optional[Sequence[str]] = None) -> Dict[Tuple[float, float], CollapseData]:
    """One dataset per ``(t2, p1)``; each window contributes at its largest size.

    Raises:
        CollapseError: Missing columns, or two selected windows give a point
            at the same ``(L_max, p2)``.
    """
    missing = [c for c in FIT_COLUMNS if c not in fits.columns]
    if missing:
        raise CollapseError(f"Fit table is missing columns: {missing}")
    if windows is not None:
        fits = fits[fits["window"].isin(list(windows))]
    datasets = {}
    for (t2, p1), group in fits.groupby(["t2", "p1"], sort=True):
        clash = group[group.duplicated(["L_max", "p2"], keep=False)]
        if not clash.empty:
            raise CollapseError(
                f"windows {sorted(set(clash['window']))} share L_max at t2={t2:g} p1={p1:g}; "
                "select one window per size"
            )
        try:
            datasets[(float(t2), float(p1))] = CollapseData(
                group["L_max"].to_numpy(), group["p2"].to_numpy(), group["c_eff"].to_numpy(), group["c_err"].to_numpy()
            )
        except CollapseError as exc:
            logger.warning("Skipping collapse for t2=%g p1=%g: %s", t2, p1, exc)
    return datasets
