"""Pytest configuration.

Ensures the project root is on sys.path so tests can import the `src` package
without needing an editable install, and gates long statistical runs behind
``--runslow``.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest


PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow statistical tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical acceptance run (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def synthetic_results_csv() -> Path:
    """Noise-free table with c_eff = 2 at p2 = 0.1 and c_eff = 0.4 at p2 = 0.7."""
    return FIXTURES / "synthetic_results.csv"


def random_pure_gaussian(n_modes: int, n_particles: int, rng: np.random.Generator) -> np.ndarray:
    """Correlation matrix of a random Slater determinant."""
    a = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    q, _ = np.linalg.qr(a)
    orbitals = q[:, :n_particles]
    # D[p, q] = <c†_p c_q> = Σ_k conj(φ_k(p)) φ_k(q)
    return orbitals.conj() @ orbitals.T
