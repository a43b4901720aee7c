"""One quantum trajectory of the monitored ladder.

A trajectory starts from a random half-filled product state and repeats
``n_st + m`` cycles of (unitary interval, measurement sweep). The negativity
of the system chain is evaluated at the end of a cycle, after the sweep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np

from ..dynamics.gaussian import MeasurementRecord, init_half_filling, measure_sweep, unitary_step
from ..dynamics.rng import RngStream
from ..entanglement.negativity import Bipartition, fermionic_negativity, reduce_to_system
from ..errors import ConditioningError, NumericalDegradationError, TrajectoryError
from ..model.params import ModelParams
from ..model.propagator import build_propagator


logger = logging.getLogger(__name__)

RecordPolicy = Literal["steady", "full"]

# Failures that end one trajectory without invalidating the ensemble.
NUMERICAL_ERRORS = (NumericalDegradationError, ConditioningError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class TrajectoryResult:
    """Negativity series of one trajectory.

    ``recorded_cycles[i]`` is the (1-based) cycle at which
    ``negativity_series[i]`` was evaluated. ``steady_mean`` always averages
    the last ``m`` entries, whatever the record policy.
    """

    negativity_series: np.ndarray
    recorded_cycles: np.ndarray
    steady_mean: float
    seed: int
    record_policy: str
    initial_occupations: np.ndarray
    records: Optional[List[MeasurementRecord]] = None


def run_trajectory(
    params: ModelParams,
    part: Bipartition,
    seed: int,
    *,
    record_policy: RecordPolicy = "steady",
    keep_records: bool = False,
) -> TrajectoryResult:
    """Run the unitary/measurement protocol for ``n_st + m`` cycles.

    Args:
        params: Model and protocol parameters.
        part: Bipartition of the system chain.
        seed: Seed of the trajectory's random stream.
        record_policy: ``steady`` evaluates the negativity only on the last
            ``m`` cycles; ``full`` evaluates it after every cycle.
        keep_records: Keep the measurement record of every sweep (for
            replay against the Fock oracle).

    Raises:
        TrajectoryError: A cycle hit one of ``NUMERICAL_ERRORS``.
    """
    if part.L != params.L:
        raise ValueError(f"Bipartition is for L={part.L}, params have L={params.L}")
    if record_policy not in ("steady", "full"):
        raise ValueError(f"Unsupported record policy: {record_policy}")

    propagator = build_propagator(params)
    rng = RngStream(seed)
    state = init_half_filling(params.L, rng, params.filling)
    initial = np.rint(state.occupations()).astype(int)

    values: List[float] = []
    cycles: List[int] = []
    records: List[MeasurementRecord] = []
    total = params.n_st + params.m
    for cycle in range(1, total + 1):
        try:
            state = unitary_step(state, propagator)
            state, record = measure_sweep(state, params, rng)
            evaluate = record_policy == "full" or cycle > params.n_st
            value = fermionic_negativity(reduce_to_system(state), part) if evaluate else None
        except NUMERICAL_ERRORS as exc:
            raise TrajectoryError(f"{type(exc).__name__}: {exc}", seed, cycle) from exc
        if keep_records:
            records.append(record)
        if value is not None:
            values.append(value)
            cycles.append(cycle)

    series = np.asarray(values, dtype=float)
    steady_mean = float(np.mean(series[-params.m :]))
    logger.debug("Trajectory seed=%d finished: steady mean %.6f", seed, steady_mean)
    return TrajectoryResult(
        negativity_series=series,
        recorded_cycles=np.asarray(cycles, dtype=int),
        steady_mean=steady_mean,
        seed=seed,
        record_policy=record_policy,
        initial_occupations=initial,
        records=records if keep_records else None,
    )
