"""Trajectory ensembles.

Trajectories are independent work units dispatched through a joblib pool.
Per-trajectory seeds depend only on ``(master_seed, index)`` and results are
reduced in index order, so an ensemble is a pure function of its inputs
regardless of the number of workers. BLAS is pinned to one thread inside
every worker so that matrix products are bitwise reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from joblib import Parallel, delayed, parallel_config
from threadpoolctl import threadpool_limits

from ..dynamics.rng import derive_seed
from ..entanglement.negativity import Bipartition
from ..errors import EnsembleError, TrajectoryError
from ..model.params import ModelParams
from .trajectory import NUMERICAL_ERRORS, TrajectoryResult, run_trajectory


logger = logging.getLogger(__name__)

# An ensemble fails when more than this fraction of its trajectories error.
MAX_FAILURE_FRACTION = 0.01


@dataclass(frozen=True)
class EnsembleResult:
    """Average over the surviving trajectories.

    ``n_traj`` counts the trajectories behind ``mean`` and ``sem``; the
    requested count is ``n_traj + n_failed``.
    """

    mean: float
    sem: float
    n_traj: int
    params: ModelParams
    lA: int
    master_seed: int
    steady_means: np.ndarray
    n_failed: int = 0


@dataclass(frozen=True)
class StationarityReport:
    """Ensemble means over two consecutive windows of ``m`` cycles."""

    first_mean: float
    first_sem: float
    second_mean: float
    second_sem: float
    tolerance: float

    @property
    def combined_sem(self) -> float:
        return float(np.hypot(self.first_sem, self.second_sem))

    @property
    def passed(self) -> bool:
        gap = abs(self.first_mean - self.second_mean)
        return gap <= self.tolerance * self.combined_sem or gap == 0.0


def mean_and_sem(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and its standard error (0 for a single value)."""
    array = np.asarray(values, dtype=float)
    if array.size == 0:
        raise ValueError("Cannot average an empty set of values")
    mean = float(np.mean(array))
    if array.size == 1:
        return mean, 0.0
    return mean, float(np.std(array, ddof=1) / np.sqrt(array.size))


def _run_indexed(
    params: ModelParams, part: Bipartition, master_seed: int, index: int
) -> TrajectoryResult | TrajectoryError:
    seed = derive_seed(master_seed, index)
    try:
        return run_trajectory(params, part, seed)
    except TrajectoryError as exc:
        return exc
    except NUMERICAL_ERRORS as exc:
        # Raised before the first cycle.
        return TrajectoryError(f"{type(exc).__name__}: {exc}", seed, 0)


def _pool(n_jobs: int, backend: str):
    if n_jobs != 1 and backend == "loky":
        return parallel_config(backend=backend, n_jobs=n_jobs, inner_max_num_threads=1)
    return parallel_config(backend=backend, n_jobs=n_jobs)


def collect_trajectories(
    params: ModelParams,
    part: Bipartition,
    n_traj: int,
    master_seed: int,
    *,
    n_jobs: int = 1,
    backend: str = "loky",
) -> tuple[List[TrajectoryResult], List[TrajectoryError]]:
    """Run ``n_traj`` trajectories; results come back in index order.

    Raises:
        EnsembleError: More than 1% of the trajectories failed.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    with threadpool_limits(limits=1), _pool(n_jobs, backend):
        outcomes = Parallel()(
            delayed(_run_indexed)(params, part, master_seed, index) for index in range(n_traj)
        )

    results = [item for item in outcomes if isinstance(item, TrajectoryResult)]
    failures = [item for item in outcomes if isinstance(item, TrajectoryError)]
    for failure in failures:
        logger.warning("Dropped trajectory: %s", failure)
    if len(failures) > MAX_FAILURE_FRACTION * n_traj:
        raise EnsembleError(
            f"{len(failures)} of {n_traj} trajectories failed for L={params.L} "
            f"t2={params.t2} p1={params.p1} p2={params.p2}",
            failures,
        )
    return results, failures


def run_ensemble(
    params: ModelParams,
    part: Bipartition,
    n_traj: int,
    master_seed: int,
    *,
    n_jobs: int = 1,
    backend: str = "loky",
) -> EnsembleResult:
    """Trajectory-averaged steady-state negativity with its standard error."""
    results, failures = collect_trajectories(
        params, part, n_traj, master_seed, n_jobs=n_jobs, backend=backend
    )
    steady_means = np.array([result.steady_mean for result in results], dtype=float)
    mean, sem = mean_and_sem(steady_means)
    return EnsembleResult(
        mean=mean,
        sem=sem,
        n_traj=len(results),
        params=params,
        lA=part.lA,
        master_seed=master_seed,
        steady_means=steady_means,
        n_failed=len(failures),
    )


def stationarity_check(
    params: ModelParams,
    part: Bipartition,
    n_traj: int,
    master_seed: int,
    *,
    tolerance: float = 2.0,
    n_jobs: int = 1,
    backend: str = "loky",
) -> StationarityReport:
    """Compare cycles ``(n_st, n_st+m]`` with ``(n_st+m, n_st+2m]``.

    Both windows come from the same trajectories, run ``m`` cycles longer
    than the production protocol.
    """
    extended = params.model_copy(update={"m": 2 * params.m})
    results, _ = collect_trajectories(
        extended, part, n_traj, master_seed, n_jobs=n_jobs, backend=backend
    )
    m = params.m
    first = [float(np.mean(result.negativity_series[:m])) for result in results]
    second = [float(np.mean(result.negativity_series[m:])) for result in results]
    first_mean, first_sem = mean_and_sem(first)
    second_mean, second_sem = mean_and_sem(second)
    report = StationarityReport(first_mean, first_sem, second_mean, second_sem, tolerance)
    logger.info(
        "Stationarity L=%d: %.5f±%.5f vs %.5f±%.5f (%s)",
        params.L,
        first_mean,
        first_sem,
        second_mean,
        second_sem,
        "ok" if report.passed else "drifting",
    )
    return report
