"""Exact single-particle propagator of one unitary cycle.

The ladder Hamiltonian is translation invariant under periodic boundary
conditions, so it is block diagonal in momentum: each ``k`` carries a 2x2
Bloch matrix over the (system, ancilla) chain index. The real-space
propagator is recovered by a discrete Fourier sum over the blocks.

Composite index convention (used everywhere in the package):
``index = 2 * site + chain`` with chain 0 the system and chain 1 the ancilla.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import ModelParams


logger = logging.getLogger(__name__)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def composite_index(site: int, chain: int) -> int:
    return 2 * site + chain


def momenta(L: int) -> np.ndarray:
    """Momentum grid ``k_j = 2πj/L`` compatible with ``c_{L+n} = c_n``."""
    return 2.0 * np.pi * np.arange(L) / L


def bloch_hamiltonian(params: ModelParams, k: float) -> np.ndarray:
    """2x2 Bloch Hamiltonian ``H_k`` in (system, ancilla) space."""
    cos_k = np.cos(k)
    return np.array(
        [
            [2.0 * params.t1 * cos_k, params.t12],
            [params.t12, 2.0 * params.t2 * cos_k],
        ],
        dtype=float,
    )


def mode_propagator(params: ModelParams, k: float) -> np.ndarray:
    """Closed form of ``exp(-i τ_u H_k)``.

    ``H_k = t cos k · 1 + δ cos k · σz + t12 · σx`` with ``t = t1 + t2`` and
    ``δ = t1 - t2``; the σ part rotates with frequency
    ``ω = sqrt(t12² + δ² cos² k)``. ``np.sinc`` supplies the ``ω → 0`` limit
    of ``sin(ωτ)/ω``.
    """
    tau = params.tau_u
    cos_k = np.cos(k)
    total = params.t1 + params.t2
    delta = params.t1 - params.t2
    omega = np.sqrt(params.t12**2 + (delta * cos_k) ** 2)
    sin_over_omega = tau * np.sinc(omega * tau / np.pi)
    rotation = np.cos(omega * tau) * np.eye(2, dtype=complex) - 1j * sin_over_omega * (
        params.t12 * PAULI_X + delta * cos_k * PAULI_Z
    )
    return np.exp(-1j * total * cos_k * tau) * rotation


@dataclass(frozen=True)
class Propagator:
    """Real-space one-cycle propagator ``R`` (2L x 2L, composite index)."""

    R: np.ndarray
    params_hash: str

    @property
    def L(self) -> int:
        return self.R.shape[0] // 2

    def unitarity_residual(self) -> float:
        eye = np.eye(self.R.shape[0])
        return float(np.max(np.abs(self.R.conj().T @ self.R - eye)))


def _hopping_hash(key: tuple) -> str:
    return hashlib.sha256(repr(key).encode("utf-8")).hexdigest()[:16]


@lru_cache(maxsize=64)
def _cached_propagator(key: tuple[int, float, float, float, float]) -> Propagator:
    L, t1, t2, t12, tau_u = key
    params = ModelParams(L=L, t1=t1, t2=t2, t12=t12, tau_u=tau_u)
    blocks_k = np.stack([mode_propagator(params, k) for k in momenta(L)])
    # blocks[d] = (1/L) Σ_k exp(-i k d) U_k, which is exactly a forward DFT over k.
    blocks = np.fft.fft(blocks_k, axis=0) / L
    sites = np.arange(L)
    separation = (sites[:, None] - sites[None, :]) % L
    R = blocks[separation].transpose(0, 2, 1, 3).reshape(2 * L, 2 * L)
    R.setflags(write=False)
    propagator = Propagator(R=R, params_hash=_hopping_hash(key))
    logger.debug(
        "Built propagator L=%d t1=%g t2=%g t12=%g tau_u=%g (unitarity %.2e)",
        L,
        t1,
        t2,
        t12,
        tau_u,
        propagator.unitarity_residual(),
    )
    return propagator


def build_propagator(params: ModelParams) -> Propagator:
    """Propagator of one unitary interval; cached per hopping parameters."""
    return _cached_propagator(params.hopping_key())


def single_particle_hamiltonian(params: ModelParams) -> np.ndarray:
    """Real-space single-particle matrix ``h`` with ``H = Σ h_pq c†_p c_q``.

    Bonds are accumulated, so for ``L = 2`` the two periodic bonds between
    the same pair of sites add up, matching ``2 t cos k`` on the grid.
    """
    L = params.L
    h = np.zeros((2 * L, 2 * L), dtype=float)
    for site in range(L):
        nxt = (site + 1) % L
        for chain, hop in ((0, params.t1), (1, params.t2)):
            a = composite_index(site, chain)
            b = composite_index(nxt, chain)
            h[a, b] += hop
            h[b, a] += hop
        a = composite_index(site, 0)
        b = composite_index(site, 1)
        h[a, b] += params.t12
        h[b, a] += params.t12
    return h
