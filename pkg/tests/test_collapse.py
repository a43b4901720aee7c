from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from src.analysis.collapse import (
    OVERLAP_PENALTY,
    CollapseData,
    collapse_cost,
    collapse_data_from_fits,
    fss_collapse,
    rescale,
)
from src.errors import CollapseError
from src.tables.schema import FIT_COLUMNS


P2C, NU = 0.3, 2.0
GRID = np.linspace(0.1, 0.5, 11)


def _master(x: np.ndarray) -> np.ndarray:
    return 1.0 + 0.5 * x


def _curves(sizes, zeta: float = 0.0):
    return {
        L: (GRID, L ** (zeta / NU) * _master(L ** (1.0 / NU) * (GRID - P2C)), np.full(GRID.size, 0.01))
        for L in sizes
    }


def test_rescaling_maps_exact_data_onto_the_master_curve():
    data = CollapseData.from_curves(_curves([16, 32, 64]))
    x, y, dy = rescale((P2C, NU, 0.0), data)
    np.testing.assert_allclose(y, _master(x))
    np.testing.assert_allclose(dy, 0.01)
    assert collapse_cost((P2C, NU, 0.0), data) == pytest.approx(0.0, abs=1e-20)


def test_exact_scaling_data_is_collapsed():
    data = CollapseData.from_curves(_curves([16, 32, 64]))
    result = fss_collapse(data)
    assert result.p2c == pytest.approx(P2C, abs=1e-3)
    assert result.nu == pytest.approx(NU, abs=1e-3)
    assert result.zeta == pytest.approx(0.0, abs=1e-3)
    assert result.quality < 1e-6
    assert result.starts_converged >= 1
    assert result.n_pairs > 0


def test_collapse_ignores_point_order():
    curves = _curves([16, 32, 64])
    data = CollapseData.from_curves(curves)
    shuffled = CollapseData.from_curves({L: curves[L] for L in (64, 16, 32)})
    np.testing.assert_array_equal(data.L, shuffled.L)
    np.testing.assert_array_equal(data.c_eff, shuffled.c_eff)
    a = fss_collapse(data)
    b = fss_collapse(shuffled)
    assert (a.p2c, a.nu, a.zeta) == (b.p2c, b.nu, b.zeta)


def test_adding_an_exactly_scaling_size_keeps_the_collapse():
    before = fss_collapse(CollapseData.from_curves(_curves([16, 32, 64])))
    after = fss_collapse(CollapseData.from_curves(_curves([16, 32, 64, 128])))
    assert after.p2c == pytest.approx(P2C, abs=1e-3)
    assert after.nu == pytest.approx(NU, abs=1e-3)
    assert after.quality - before.quality < 1e-8
    truth = (P2C, NU, 0.0)
    larger = collapse_cost(truth, CollapseData.from_curves(_curves([16, 32, 64, 128])))
    assert larger - collapse_cost(truth, CollapseData.from_curves(_curves([16, 32, 64]))) < 1e-8


def test_fixed_zeta_collapse():
    result = fss_collapse(CollapseData.from_curves(_curves([16, 32, 64])), fix_zeta=0.0)
    assert result.zeta_fixed
    assert result.zeta == 0.0 and result.zeta_err == 0.0
    assert result.p2c == pytest.approx(P2C, abs=1e-3)
    assert result.nu == pytest.approx(NU, abs=1e-3)


def test_collapse_is_independent_of_worker_count():
    data = CollapseData.from_curves(_curves([16, 32, 64]))
    serial = fss_collapse(data, fix_zeta=0.0, n_jobs=1)
    parallel = fss_collapse(data, fix_zeta=0.0, n_jobs=2)
    assert (serial.p2c, serial.nu) == (parallel.p2c, parallel.nu)


def test_disjoint_curves_cost_the_penalty():
    # Each size covers its own p2 range, so no rescaled point falls inside another curve.
    sparse = CollapseData(
        np.repeat([16.0, 32.0, 64.0], 5),
        np.concatenate([np.linspace(0.0, 0.1, 5), np.linspace(0.45, 0.55, 5), np.linspace(0.9, 1.0, 5)]),
        np.ones(15),
        np.full(15, 0.01),
    )
    assert collapse_cost((0.5, 10.0, 0.0), sparse) == OVERLAP_PENALTY


def test_degenerate_inputs_raise():
    with pytest.raises(CollapseError):
        CollapseData.from_curves(_curves([16, 32]))
    with pytest.raises(CollapseError):
        CollapseData.from_curves({16: (GRID[:3], GRID[:3], np.full(3, 0.1)), 32: (GRID, GRID, GRID), 64: (GRID, GRID, GRID)})
    curves = _curves([16, 32, 64])
    curves[32] = (curves[32][0], curves[32][1], np.zeros(GRID.size))
    with pytest.raises(CollapseError):
        CollapseData.from_curves(curves)


def test_collapse_data_from_fit_table():
    rows = []
    for window, L in (("L8-32", 32), ("L16-48", 48), ("L24-64", 64)):
        for p2, c in zip(*_curves([L])[L][:2]):
            rows.append(
                {"t2": 1.0, "p1": 0.2, "p2": p2, "window": window, "L_min": 8, "L_max": L,
                 "n_points": 4, "c_eff": c, "c_err": 0.01, "a0": 0.0, "a_err": 0.01}
            )
    fits = pd.DataFrame(rows, columns=FIT_COLUMNS)
    datasets = collapse_data_from_fits(fits)
    assert list(datasets) == [(1.0, 0.2)]
    np.testing.assert_array_equal(datasets[(1.0, 0.2)].sizes, [32, 48, 64])
    assert collapse_data_from_fits(fits, ["L8-32", "L16-48"]) == {}


@pytest.mark.slow
def test_collapse_errors_cover_the_truth(rng):
    sigma = 0.005
    exact = CollapseData.from_curves(_curves([16, 32, 64]))
    covered_p2c = covered_nu = 0
    for _ in range(100):
        noisy = CollapseData(exact.L, exact.p2, exact.c_eff + rng.normal(0.0, sigma, exact.L.size), np.full(exact.L.size, sigma))
        result = fss_collapse(noisy, fix_zeta=0.0)
        covered_p2c += abs(result.p2c - P2C) <= 3.0 * result.p2c_err
        covered_nu += abs(result.nu - NU) <= 3.0 * result.nu_err
    assert covered_p2c >= 97
    assert covered_nu >= 97


def test_noisy_collapse_recovers_the_critical_point(rng):
    sigma = 0.005
    exact = CollapseData.from_curves(_curves([16, 32, 64]))
    noisy = CollapseData(exact.L, exact.p2, exact.c_eff + rng.normal(0.0, sigma, exact.L.size), np.full(exact.L.size, sigma))
    result = fss_collapse(noisy, fix_zeta=0.0)
    assert 0.0 < result.p2c_err < 0.05
    assert abs(result.p2c - P2C) <= 3.0 * result.p2c_err
    assert abs(result.nu - NU) <= 3.0 * result.nu_err
