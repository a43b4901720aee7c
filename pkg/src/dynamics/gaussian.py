"""Correlation-matrix engine for Gaussian ladder trajectories.

The state of one trajectory is the two-point function
``D[p, q] = <c†_p c_q>`` over the composite index ``p = 2*site + chain``.
Quadratic unitaries and occupation measurements keep the state Gaussian, so
``D`` is the only dynamical object: a unitary cycle conjugates it with the
one-cycle propagator, a projective measurement applies a rank-1 update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from ..model.params import ModelParams
from ..model.propagator import Propagator, composite_index
from .rng import RngStream


logger = logging.getLogger(__name__)

# Born probabilities closer than this to 0 or 1 are treated as deterministic.
DEGENERATE_TOL = 1e-12


@dataclass
class CorrelationMatrix:
    D: np.ndarray

    @property
    def L(self) -> int:
        return self.D.shape[0] // 2

    def trace(self) -> float:
        return float(np.trace(self.D).real)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.D - self.D.conj().T)))

    def purity_residual(self) -> float:
        return float(np.max(np.abs(self.D @ self.D - self.D)))

    def occupations(self) -> np.ndarray:
        return np.clip(np.diag(self.D).real, 0.0, 1.0)


@dataclass
class MeasurementRecord:
    """Outcomes of one sweep as ``(site, chain, outcome)`` in sweep order."""

    entries: List[Tuple[int, int, int]] = field(default_factory=list)

    def append(self, site: int, chain: int, outcome: int) -> None:
        self.entries.append((site, chain, outcome))

    def __iter__(self) -> Iterator[Tuple[int, int, int]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def hermitize(D: np.ndarray) -> np.ndarray:
    return 0.5 * (D + D.conj().T)


def product_state(occupations: Sequence[int]) -> CorrelationMatrix:
    """Fock product state with the given 0/1 occupations (composite order)."""
    occ = np.asarray(occupations, dtype=float)
    if occ.ndim != 1 or occ.size % 2 or not np.all((occ == 0.0) | (occ == 1.0)):
        raise ValueError(f"occupations must be a 0/1 vector of even length, got {occupations!r}")
    return CorrelationMatrix(np.diag(occ).astype(complex))


def init_half_filling(L: int, rng: RngStream, filling: str = "global") -> CorrelationMatrix:
    """Random product state at half filling.

    ``global`` draws L occupied modes uniformly among all 2L; ``per_chain``
    places L/2 particles on each chain.
    """
    if L < 2 or L % 2:
        raise ValueError(f"L must be an even integer >= 2, got {L}")
    occupations = np.zeros(2 * L, dtype=int)
    if filling == "global":
        occupations[rng.choose(2 * L, L)] = 1
    elif filling == "per_chain":
        for chain in (0, 1):
            sites = rng.choose(L, L // 2)
            occupations[2 * sites + chain] = 1
    else:
        raise ValueError(f"Unsupported filling: {filling}")
    return product_state(occupations)


def unitary_step(state: CorrelationMatrix, propagator: Propagator) -> CorrelationMatrix:
    """``D ↦ R† D R`` for one unitary interval."""
    R = propagator.R
    if R.shape != state.D.shape:
        raise ValueError(f"Propagator shape {R.shape} does not match state shape {state.D.shape}")
    return CorrelationMatrix(R.conj().T @ state.D @ R)


def sweep_order(L: int, *, reverse: bool = False) -> List[Tuple[int, int]]:
    """Lexicographic measurement order: system sites 0..L-1, then ancilla."""
    order = [(site, chain) for chain in (0, 1) for site in range(L)]
    return order[::-1] if reverse else order


def born_outcome(occupation: float, draw: float) -> int:
    if occupation < DEGENERATE_TOL:
        return 0
    if occupation > 1.0 - DEGENERATE_TOL:
        return 1
    return 1 if draw <= occupation else 0


def project_occupation(D: np.ndarray, index: int, outcome: int, occupation: float) -> None:
    """In-place update of ``D`` after measuring ``n_index`` with ``outcome``.

    The measured row and column are pinned to their exact post-measurement
    values afterwards; the rank-1 formulas produce the same entries up to
    round-off.
    """
    deterministic = occupation < DEGENERATE_TOL or occupation > 1.0 - DEGENERATE_TOL
    if not deterministic:
        if outcome == 1:
            column = D[:, index].copy()
            row = D[index, :].copy()
            D -= np.outer(column, row) / occupation
        else:
            column = -D[:, index]
            column[index] += 1.0
            row = -D[index, :]
            row[index] += 1.0
            D += np.outer(column, row) / (1.0 - occupation)
    D[index, :] = 0.0
    D[:, index] = 0.0
    D[index, index] = float(outcome)


def measure_sweep(
    state: CorrelationMatrix,
    params: ModelParams,
    rng: RngStream,
    *,
    order: Sequence[Tuple[int, int]] | None = None,
) -> Tuple[CorrelationMatrix, MeasurementRecord]:
    """One stochastic sweep of projective occupation measurements.

    Per site: a draw ``z`` decides whether the site is measured
    (``z <= p_chain``); if so, a second draw ``q`` selects the outcome
    (``q <= <n>`` gives 1). ``q`` is consumed even when the outcome is
    deterministic.
    """
    if order is None:
        order = sweep_order(state.L)
    D = state.D.copy()
    probabilities = params.measure_probabilities
    record = MeasurementRecord()
    for site, chain in order:
        if rng.uniform() > probabilities[chain]:
            continue
        index = composite_index(site, chain)
        occupation = min(max(float(D[index, index].real), 0.0), 1.0)
        outcome = born_outcome(occupation, rng.uniform())
        project_occupation(D, index, outcome, occupation)
        record.append(site, chain, outcome)
    return CorrelationMatrix(hermitize(D)), record
