from __future__ import annotations

import math
import pickle

import numpy as np
import pytest

from src.entanglement.negativity import Bipartition
from src.errors import NumericalDegradationError, TrajectoryError
from src.model.params import ModelParams
from src.oracle.fock import oracle_measure, oracle_negativity, oracle_unitary, product_fock_state
from src.simulation import trajectory as trajectory_module
from src.simulation.trajectory import run_trajectory


def test_fully_measured_ladder_has_no_steady_negativity():
    params = ModelParams(L=8, t2=5.0, p1=1.0, p2=1.0, n_st=20, m=5)
    result = run_trajectory(params, Bipartition.half(8), seed=3)
    assert abs(result.steady_mean) < 1e-8
    assert np.all(np.abs(result.negativity_series) < 1e-8)


def test_same_seed_gives_identical_results():
    params = ModelParams(L=8, t2=2.0, p1=0.3, p2=0.6, n_st=30, m=5)
    a = run_trajectory(params, Bipartition.half(8), seed=11)
    b = run_trajectory(params, Bipartition.half(8), seed=11)
    np.testing.assert_array_equal(a.negativity_series, b.negativity_series)
    np.testing.assert_array_equal(a.initial_occupations, b.initial_occupations)
    assert a.steady_mean == b.steady_mean


def test_steady_mean_averages_the_last_m_cycles():
    params = ModelParams(L=8, p1=0.2, p2=0.1, n_st=10, m=4)
    result = run_trajectory(params, Bipartition.half(8), seed=5)
    assert result.record_policy == "steady"
    np.testing.assert_array_equal(result.recorded_cycles, [11, 12, 13, 14])
    assert result.steady_mean == pytest.approx(np.mean(result.negativity_series))
    assert np.all(np.isfinite(result.negativity_series)) and np.all(result.negativity_series >= 0)


def test_full_policy_records_every_cycle_with_same_steady_mean():
    params = ModelParams(L=8, p1=0.2, p2=0.4, n_st=10, m=4)
    steady = run_trajectory(params, Bipartition.half(8), seed=9)
    full = run_trajectory(params, Bipartition.half(8), seed=9, record_policy="full")
    assert len(full.negativity_series) == 14
    np.testing.assert_array_equal(full.negativity_series[-4:], steady.negativity_series)
    assert full.steady_mean == steady.steady_mean


def test_negativity_series_matches_oracle_replay():
    L = 4
    part = Bipartition.half(L)
    rng = np.random.default_rng(21)
    for _ in range(5):
        params = ModelParams(
            L=L,
            t1=1.0,
            t2=float(rng.uniform(0, 5)),
            t12=math.pi / 2,
            p1=float(rng.uniform(0, 1)),
            p2=float(rng.uniform(0, 1)),
            n_st=6,
            m=4,
        )
        result = run_trajectory(params, part, seed=int(rng.integers(2**31)), record_policy="full", keep_records=True)
        fock = product_fock_state(result.initial_occupations)
        replayed = []
        for record in result.records:
            fock = oracle_unitary(fock, params)
            fock, _ = oracle_measure(fock, record)
            replayed.append(oracle_negativity(fock, part))
        np.testing.assert_allclose(result.negativity_series, replayed, atol=1e-8)


def test_full_rotation_point_matches_decoupled_chain():
    # With t1 = t2 and t12 τ = π the one-cycle propagator is minus the decoupled one.
    part = Bipartition.half(8)
    coupled = ModelParams(L=8, t1=1.0, t2=1.0, t12=math.pi, p1=0.3, p2=0.7, n_st=40, m=5)
    decoupled = coupled.model_copy(update={"t12": 0.0})
    for seed in range(5):
        a = run_trajectory(coupled, part, seed)
        b = run_trajectory(decoupled, part, seed)
        np.testing.assert_allclose(a.negativity_series, b.negativity_series, atol=1e-8)


def test_numerical_failure_carries_trajectory_context(monkeypatch):
    def broken(D1, part):
        raise NumericalDegradationError("mu spectrum left [0, 1]", {"mu_imag": 1e-3})

    monkeypatch.setattr(trajectory_module, "fermionic_negativity", broken)
    params = ModelParams(L=4, n_st=3, m=2)
    with pytest.raises(TrajectoryError) as info:
        run_trajectory(params, Bipartition.half(4), seed=42)
    assert info.value.seed == 42
    assert info.value.cycle == 4
    assert isinstance(info.value.__cause__, NumericalDegradationError)


def test_trajectory_error_survives_pickling():
    error = pickle.loads(pickle.dumps(TrajectoryError("bad spectrum", 7, 12)))
    assert (error.seed, error.cycle) == (7, 12)
    assert "seed=7 cycle=12" in str(error)


def test_bipartition_must_fit_the_ladder():
    with pytest.raises(ValueError):
        run_trajectory(ModelParams(L=8), Bipartition.half(6), seed=0)


def test_linear_algebra_failure_carries_trajectory_context(monkeypatch):
    def broken(D1, part):
        raise np.linalg.LinAlgError("Eigenvalues did not converge")

    monkeypatch.setattr(trajectory_module, "fermionic_negativity", broken)
    params = ModelParams(L=4, n_st=2, m=2)
    with pytest.raises(TrajectoryError) as info:
        run_trajectory(params, Bipartition.half(4), seed=9, record_policy="full")
    assert info.value.cycle == 1
    assert isinstance(info.value.__cause__, np.linalg.LinAlgError)
