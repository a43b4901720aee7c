"""Brute-force Fock-space simulator used as a test oracle.

States live in the full ``2**(2L)`` occupation basis with modes in the
composite order ``2*site + chain``; mode 0 is the most significant bit.
Operators follow the Jordan-Wigner convention with the parity string on
lower modes, so ``|n> = Π_{p ascending, n_p=1} c†_p |0>``.

Nothing here is used by the production pipeline; it exists to check the
correlation-matrix engine and the negativity formula against dense linear
algebra.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from scipy import sparse

from ..dynamics.gaussian import MeasurementRecord, born_outcome, sweep_order
from ..dynamics.rng import RngStream
from ..entanglement.negativity import Bipartition
from ..errors import OracleDisagreementError
from ..model.params import ModelParams
from ..model.propagator import composite_index, single_particle_hamiltonian


logger = logging.getLogger(__name__)

MAX_UNITARY_L = 4
MAX_NEGATIVITY_L = 4
ZERO_PROBABILITY = 1e-10


@dataclass
class FockState:
    amplitudes: np.ndarray
    L: int

    @property
    def n_modes(self) -> int:
        return 2 * self.L

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _guard(L: int, cap: int) -> None:
    if L > cap:
        raise ValueError(f"Fock oracle is limited to L <= {cap}, got L={L}")


@lru_cache(maxsize=None)
def fermion_operators(n_modes: int) -> Tuple[List[sparse.csr_matrix], List[sparse.csr_matrix]]:
    """Jordan-Wigner annihilation and creation operators for ``n_modes`` modes."""
    identity = sparse.identity(2, format="csr")
    parity = sparse.csr_matrix([[1.0, 0.0], [0.0, -1.0]])
    lower = sparse.csr_matrix([[0.0, 1.0], [0.0, 0.0]])
    annihilators = []
    for mode in range(n_modes):
        op = sparse.identity(1, format="csr")
        for other in range(n_modes):
            if other < mode:
                factor = parity
            elif other == mode:
                factor = lower
            else:
                factor = identity
            op = sparse.kron(op, factor, format="csr")
        op.eliminate_zeros()
        annihilators.append(op)
    creators = [sparse.csr_matrix(op.conj().T) for op in annihilators]
    return annihilators, creators


def occupation_diagonal(n_modes: int, mode: int) -> np.ndarray:
    basis = np.arange(2**n_modes)
    return ((basis >> (n_modes - 1 - mode)) & 1).astype(float)


def product_fock_state(occupations: Sequence[int]) -> FockState:
    occ = [int(x) for x in occupations]
    index = 0
    for bit in occ:
        index = (index << 1) | bit
    amplitudes = np.zeros(2 ** len(occ), dtype=complex)
    amplitudes[index] = 1.0
    return FockState(amplitudes=amplitudes, L=len(occ) // 2)


def many_body_hamiltonian(params: ModelParams) -> np.ndarray:
    """Dense ``H = Σ h_pq c†_p c_q`` on the full Fock space."""
    _guard(params.L, MAX_UNITARY_L)
    h = single_particle_hamiltonian(params)
    annihilators, creators = fermion_operators(params.n_modes)
    dim = 2**params.n_modes
    H = sparse.csr_matrix((dim, dim), dtype=complex)
    rows, cols = np.nonzero(h)
    for p, q in zip(rows, cols):
        H = H + h[p, q] * (creators[p] @ annihilators[q])
    return H.toarray()


def dense_propagator(h: np.ndarray, tau: float) -> np.ndarray:
    """``exp(-i τ h)`` through the Hermitian eigendecomposition of ``h``."""
    energies, vectors = la.eigh(h)
    return (vectors * np.exp(-1j * tau * energies)) @ vectors.conj().T


@lru_cache(maxsize=8)
def _many_body_propagator(key: Tuple[int, float, float, float, float]) -> np.ndarray:
    L, t1, t2, t12, tau_u = key
    params = ModelParams(L=L, t1=t1, t2=t2, t12=t12, tau_u=tau_u)
    return dense_propagator(many_body_hamiltonian(params), tau_u)


def oracle_unitary(state: FockState, params: ModelParams) -> FockState:
    """Evolve the Fock state for one unitary interval ``τ_u``."""
    _guard(state.L, MAX_UNITARY_L)
    U = _many_body_propagator(params.hopping_key())
    return FockState(amplitudes=U @ state.amplitudes, L=state.L)


def oracle_correlation_matrix(state: FockState) -> np.ndarray:
    """``D[p, q] = <ψ| c†_p c_q |ψ>`` computed from the amplitudes."""
    annihilators, _ = fermion_operators(state.n_modes)
    lowered = np.stack([op @ state.amplitudes for op in annihilators])
    # <ψ|c†_p c_q|ψ> = (c_p ψ)† (c_q ψ)
    return lowered.conj() @ lowered.T


def _project(state: FockState, mode: int, outcome: int) -> Tuple[FockState, float]:
    occupied = occupation_diagonal(state.n_modes, mode)
    mask = occupied if outcome == 1 else 1.0 - occupied
    projected = mask * state.amplitudes
    probability = float(np.vdot(projected, projected).real)
    if probability < ZERO_PROBABILITY:
        return state, probability
    return FockState(amplitudes=projected / np.sqrt(probability), L=state.L), probability


def oracle_measure(
    state: FockState,
    source: MeasurementRecord | RngStream,
    params: ModelParams | None = None,
) -> Tuple[FockState, MeasurementRecord]:
    """Projective occupation measurements on the Fock state.

    With a ``MeasurementRecord`` the recorded outcomes are replayed; with an
    ``RngStream`` the sweep is sampled using the same draw discipline as the
    correlation-matrix engine (``params`` supplies ``p1``, ``p2``).
    """
    _guard(state.L, MAX_UNITARY_L)
    performed = MeasurementRecord()
    if isinstance(source, MeasurementRecord):
        for site, chain, outcome in source:
            mode = composite_index(site, chain)
            state, probability = _project(state, mode, outcome)
            if probability < ZERO_PROBABILITY:
                raise OracleDisagreementError(
                    f"outcome {outcome} at site={site} chain={chain} has probability {probability:.3e}"
                )
            performed.append(site, chain, outcome)
        return state, performed

    if params is None:
        raise ValueError("Sampling measurements from a stream requires params")
    probabilities = params.measure_probabilities
    for site, chain in sweep_order(state.L):
        if source.uniform() > probabilities[chain]:
            continue
        mode = composite_index(site, chain)
        weights = occupation_diagonal(state.n_modes, mode)
        occupation = float(np.sum(weights * np.abs(state.amplitudes) ** 2))
        outcome = born_outcome(min(max(occupation, 0.0), 1.0), source.uniform())
        state, _ = _project(state, mode, outcome)
        performed.append(site, chain, outcome)
    return state, performed


def reorder_modes(state: FockState, order: Sequence[int]) -> np.ndarray:
    """Amplitudes in a new mode ordering, with fermionic reordering signs.

    ``order[a]`` is the old mode placed at new position ``a``.
    """
    n_modes = state.n_modes
    position = np.empty(n_modes, dtype=int)
    position[list(order)] = np.arange(n_modes)
    out = np.zeros_like(state.amplitudes)
    for index, amplitude in enumerate(state.amplitudes):
        if amplitude == 0:
            continue
        occupied = [mode for mode in range(n_modes) if (index >> (n_modes - 1 - mode)) & 1]
        new_positions = [position[mode] for mode in occupied]
        inversions = sum(
            1 for a, b in itertools.combinations(new_positions, 2) if a > b
        )
        new_index = sum(1 << (n_modes - 1 - pos) for pos in new_positions)
        out[new_index] = (-1) ** inversions * amplitude
    return out


def system_density_matrix(state: FockState) -> np.ndarray:
    """Reduced density matrix of the system chain (ancilla traced out).

    Modes are first reordered so that the system chain precedes the ancilla
    in the Jordan-Wigner string; only then is the qubit partial trace over
    the trailing modes a fermionic partial trace.
    """
    L = state.L
    order = [composite_index(site, 0) for site in range(L)] + [
        composite_index(site, 1) for site in range(L)
    ]
    psi = reorder_modes(state, order).reshape(2**L, 2**L)
    return psi @ psi.conj().T


@lru_cache(maxsize=None)
def _majorana_monomials(n_modes: int) -> List[Tuple[Tuple[int, ...], np.ndarray]]:
    gammas = majorana_operators(n_modes)
    dim = 2**n_modes
    monomials = []
    for bits in itertools.product((0, 1), repeat=2 * n_modes):
        monomial = np.eye(dim, dtype=complex)
        for gamma, bit in zip(gammas, bits):
            if bit:
                monomial = monomial @ gamma
        monomials.append((bits, monomial))
    return monomials


@lru_cache(maxsize=None)
def majorana_operators(n_modes: int) -> List[np.ndarray]:
    """Dense Majoranas ``γ_{2j} = c_j + c†_j``, ``γ_{2j+1} = i(c_j − c†_j)``."""
    annihilators, creators = fermion_operators(n_modes)
    gammas = []
    for c, cdag in zip(annihilators, creators):
        gammas.append((c + cdag).toarray())
        gammas.append((1j * (c - cdag)).toarray())
    return gammas


def partial_time_reversal_negativity(rho: np.ndarray, lA: int) -> float:
    """``ln Tr|ρ^{R_A}|`` by explicit expansion in Majorana monomials.

    The first ``lA`` modes form block A. Each monomial is multiplied by
    ``i^{|κ|}`` with ``|κ|`` the number of its Majoranas on A.
    """
    dim = rho.shape[0]
    n_modes = int(round(np.log2(dim)))
    reversed_rho = np.zeros_like(rho, dtype=complex)
    for bits, monomial in _majorana_monomials(n_modes):
        weight = np.trace(monomial.conj().T @ rho) / dim
        if abs(weight) < 1e-15:
            continue
        on_a = sum(bits[: 2 * lA])
        reversed_rho += weight * (1j**on_a) * monomial
    singular_values = la.svdvals(reversed_rho)
    return float(np.log(np.sum(singular_values)))


def oracle_negativity(state: FockState, part: Bipartition) -> float:
    _guard(state.L, MAX_NEGATIVITY_L)
    if part.L != state.L:
        raise ValueError(f"Bipartition is for L={part.L}, state has L={state.L}")
    rho = system_density_matrix(state)
    return max(partial_time_reversal_negativity(rho, part.lA), 0.0)
