from __future__ import annotations

import itertools

import numpy as np
import pytest

from conftest import random_pure_gaussian
from src.dynamics.gaussian import (
    CorrelationMatrix,
    born_outcome,
    init_half_filling,
    measure_sweep,
    product_state,
    project_occupation,
    sweep_order,
    unitary_step,
)
from src.dynamics.rng import RngStream, derive_seed
from src.model.params import ModelParams
from src.model.propagator import build_propagator, composite_index


def test_derive_seed_is_stable_and_index_dependent():
    assert derive_seed(7, 3) == derive_seed(7, 3)
    assert derive_seed(7, 3) != derive_seed(7, 4)
    assert derive_seed(7, 3) != derive_seed(8, 3)
    assert 0 <= derive_seed(7, 3) < 2**64


def test_uniform_draws_lie_in_half_open_unit_interval():
    stream = RngStream(5)
    draws = np.array([stream.uniform() for _ in range(10_000)])
    assert np.all(draws > 0.0) and np.all(draws <= 1.0)
    assert stream.counter == 10_000


@pytest.mark.parametrize("filling", ["global", "per_chain"])
def test_half_filling_initial_state(filling):
    for seed in range(20):
        state = init_half_filling(8, RngStream(seed), filling)
        occ = np.diag(state.D).real
        assert set(np.unique(occ)) <= {0.0, 1.0}
        assert occ.sum() == 8
        if filling == "per_chain":
            assert occ[0::2].sum() == 4 and occ[1::2].sum() == 4
        assert state.purity_residual() == 0.0


def test_product_state_rejects_bad_occupations():
    with pytest.raises(ValueError):
        product_state([1, 0, 1])
    with pytest.raises(ValueError):
        product_state([1, 0.5, 0, 1])


def test_sweep_order_is_system_first():
    assert sweep_order(2) == [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert sweep_order(2, reverse=True)[0] == (1, 1)


def test_unitary_step_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        unitary_step(product_state([1, 0, 1, 0]), build_propagator(ModelParams(L=4)))


def test_no_measurements_consume_one_draw_per_site():
    params = ModelParams(L=4, p1=0.0, p2=0.0)
    stream = RngStream(1)
    state = product_state([1, 0] * 4)
    after, record = measure_sweep(state, params, stream)
    assert stream.counter == 8
    assert len(record) == 0
    np.testing.assert_array_equal(after.D, state.D)


def test_deterministic_outcomes_still_consume_the_outcome_draw():
    params = ModelParams(L=4, p1=1.0, p2=1.0)
    occupations = [1, 0, 0, 1, 1, 1, 0, 0]
    stream = RngStream(2)
    after, record = measure_sweep(product_state(occupations), params, stream)
    assert stream.counter == 16
    for site, chain, outcome in record:
        assert outcome == occupations[composite_index(site, chain)]
    np.testing.assert_array_equal(after.D.real, np.diag(occupations))


def test_born_outcome_thresholds():
    assert born_outcome(0.0, 1e-20) == 0
    assert born_outcome(1.0, 1.0) == 1
    assert born_outcome(0.3, 0.3) == 1
    assert born_outcome(0.3, 0.31) == 0


@pytest.mark.parametrize("outcome", [0, 1])
def test_projection_pins_measured_row_and_column(outcome, rng):
    D = random_pure_gaussian(8, 4, rng)
    index = 3
    occupation = float(D[index, index].real)
    project_occupation(D, index, outcome, occupation)
    expected_row = np.zeros(8)
    expected_row[index] = outcome
    np.testing.assert_array_equal(D[index], expected_row)
    np.testing.assert_array_equal(D[:, index], expected_row)
    assert np.max(np.abs(D @ D - D)) < 1e-10
    assert abs(np.trace(D).real - 4) < 1e-10


def test_born_statistics_match_occupations(rng):
    L = 4
    D0 = random_pure_gaussian(2 * L, L, rng)
    params = ModelParams(L=L, p1=1.0, p2=1.0)
    stream = RngStream(99)
    n_sweeps = 10_000
    counts = np.zeros(2 * L)
    for _ in range(n_sweeps):
        _, record = measure_sweep(CorrelationMatrix(D0.copy()), params, stream)
        for site, chain, outcome in record:
            counts[composite_index(site, chain)] += outcome
    expected = np.diag(D0).real
    sigma = np.sqrt(expected * (1 - expected) / n_sweeps)
    assert np.all(np.abs(counts / n_sweeps - expected) <= 4 * sigma + 1e-12)


@pytest.mark.parametrize("p1, p2", list(itertools.product([0.0, 0.5, 1.0], repeat=2)))
def test_purity_and_particle_number_are_conserved(p1, p2):
    L = 16
    params = ModelParams(L=L, t2=5.0, p1=p1, p2=p2)
    propagator = build_propagator(params)
    stream = RngStream(derive_seed(3, 0))
    state = init_half_filling(L, stream)
    for _ in range(300):
        state = unitary_step(state, propagator)
        state, record = measure_sweep(state, params, stream)
        assert state.purity_residual() < 1e-7
        assert abs(state.trace() - L) < 1e-7
        assert state.hermiticity_residual() == 0.0
        for site, chain, outcome in record:
            index = composite_index(site, chain)
            assert state.D[index, index].real == outcome


def test_identical_streams_give_identical_sweeps(rng):
    D0 = random_pure_gaussian(8, 4, rng)
    params = ModelParams(L=4, p1=0.5, p2=0.5)
    a, rec_a = measure_sweep(CorrelationMatrix(D0.copy()), params, RngStream(4))
    b, rec_b = measure_sweep(CorrelationMatrix(D0.copy()), params, RngStream(4))
    assert rec_a.entries == rec_b.entries
    np.testing.assert_array_equal(a.D, b.D)


def _configuration_counts(D0, params, order, seed, n_sweeps):
    stream = RngStream(seed)
    counts = {}
    for _ in range(n_sweeps):
        _, record = measure_sweep(CorrelationMatrix(D0.copy()), params, stream, order=order)
        outcomes = [0] * params.n_modes
        for site, chain, outcome in record:
            outcomes[composite_index(site, chain)] = outcome
        counts[tuple(outcomes)] = counts.get(tuple(outcomes), 0) + 1
    return counts


def test_sweep_order_does_not_change_the_outcome_law(rng):
    L = 2
    D0 = random_pure_gaussian(2 * L, L, rng)
    params = ModelParams(L=L, p1=1.0, p2=1.0)
    n_sweeps = 10_000
    forward = _configuration_counts(D0, params, sweep_order(L), 21, n_sweeps)
    reverse = _configuration_counts(D0, params, sweep_order(L, reverse=True), 22, n_sweeps)
    for configuration in set(forward) | set(reverse):
        a = forward.get(configuration, 0) / n_sweeps
        b = reverse.get(configuration, 0) / n_sweeps
        pooled = (a + b) / 2
        sigma = np.sqrt(2 * pooled * (1 - pooled) / n_sweeps)
        assert abs(a - b) <= 4 * sigma + 1e-12
        assert sum(configuration) == L
