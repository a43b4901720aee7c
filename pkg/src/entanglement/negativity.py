"""Fermionic logarithmic negativity of the system chain.

The negativity of a Gaussian state follows from two spectra: that of the
system correlation matrix ``D¹`` and that of

    Γ× = ½ [1 − (1 + Γ₊Γ₋)⁻¹ (Γ₊ + Γ₋)],

where ``Γ₊`` and ``Γ₋`` are the covariance matrices of the partial time
reversal of the system state and of its adjoint, built from
``Γ = 2 D¹ − 1``. All logarithms are natural; values are in nats.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Dict

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, ConfigDict, model_validator

from ..dynamics.gaussian import CorrelationMatrix
from ..errors import ConditioningError, NumericalDegradationError


logger = logging.getLogger(__name__)

SPECTRUM_TOL = 1e-6
NEGATIVE_TOL = 1e-8


class Bipartition(BaseModel):
    """Block A = sites ``0..lA-1`` of the system chain, B = the rest."""

    model_config = ConfigDict(frozen=True)

    lA: int
    L: int

    @model_validator(mode="after")
    def _check_sizes(self) -> "Bipartition":
        if not 1 <= self.lA <= self.L - 1:
            raise ValueError(f"lA must satisfy 1 <= lA <= L-1, got lA={self.lA}, L={self.L}")
        return self

    @classmethod
    def half(cls, L: int) -> "Bipartition":
        return cls(lA=L // 2, L=L)


@dataclass(frozen=True)
class NegativitySpectra:
    lam: np.ndarray
    mu: np.ndarray
    clamp_report: Dict[str, float]


def reduce_to_system(state: CorrelationMatrix) -> np.ndarray:
    """Chain-0 block of the ladder correlation matrix (traces out the ancilla)."""
    return state.D[0::2, 0::2].copy()


def _check_real_spectrum(values: np.ndarray, label: str) -> tuple[np.ndarray, Dict[str, float]]:
    imag = float(np.max(np.abs(values.imag), initial=0.0))
    real = values.real
    below = float(max(0.0, -np.min(real, initial=0.0)))
    above = float(max(0.0, np.max(real, initial=1.0) - 1.0))
    report = {f"{label}_imag": imag, f"{label}_below": below, f"{label}_above": above}
    if max(imag, below, above) > SPECTRUM_TOL:
        raise NumericalDegradationError(f"{label} spectrum left [0, 1]", report)
    if max(below, above) > 1e-10:
        logger.warning("Clamping %s spectrum by %.2e", label, max(below, above))
    return np.clip(real, 0.0, 1.0), report


def negativity_spectra(D1: np.ndarray, part: Bipartition) -> NegativitySpectra:
    """Spectra ``λ`` of ``D¹`` and ``μ`` of ``Γ×`` for the bipartition."""
    L = D1.shape[0]
    if L != part.L:
        raise ValueError(f"Bipartition is for L={part.L}, matrix has L={L}")
    lA = part.lA
    gamma = 2.0 * D1 - np.eye(L)
    gamma_aa = gamma[:lA, :lA]
    gamma_ab = gamma[:lA, lA:]
    gamma_ba = gamma[lA:, :lA]
    gamma_bb = gamma[lA:, lA:]
    gamma_plus = np.block([[gamma_aa, 1j * gamma_ab], [1j * gamma_ba, -gamma_bb]])
    gamma_minus = np.block([[gamma_aa, -1j * gamma_ab], [-1j * gamma_ba, -gamma_bb]])

    lhs = np.eye(L) + gamma_plus @ gamma_minus
    with warnings.catch_warnings():
        warnings.simplefilter("error", la.LinAlgWarning)
        try:
            solved = la.solve(lhs, gamma_plus + gamma_minus)
        except (la.LinAlgError, la.LinAlgWarning) as exc:
            raise ConditioningError(f"1 + Γ₊Γ₋ is near-singular: {exc}") from exc
    gamma_cross = 0.5 * (np.eye(L) - solved)

    lam, lam_report = _check_real_spectrum(la.eigvalsh(D1).astype(complex), "lambda")
    mu, mu_report = _check_real_spectrum(la.eigvals(gamma_cross), "mu")
    return NegativitySpectra(lam=lam, mu=mu, clamp_report={**lam_report, **mu_report})


def fermionic_negativity(D1: np.ndarray, part: Bipartition) -> float:
    """Logarithmic negativity between A and B of a (possibly mixed) system state."""
    spectra = negativity_spectra(D1, part)
    mu, lam = spectra.mu, spectra.lam
    value = float(
        np.sum(np.log(np.sqrt(mu) + np.sqrt(1.0 - mu)))
        + 0.5 * np.sum(np.log((1.0 - lam) ** 2 + lam**2))
    )
    if value < -NEGATIVE_TOL:
        raise NumericalDegradationError(f"negativity {value:.3e} is negative", spectra.clamp_report)
    return max(value, 0.0)


def renyi_half_entropy(D_A: np.ndarray) -> float:
    """Rényi-½ entropy of a block from its correlation matrix.

    For a pure system state this equals the negativity across the block.
    """
    lam, _ = _check_real_spectrum(la.eigvalsh(D_A).astype(complex), "lambda")
    return float(2.0 * np.sum(np.log(np.sqrt(lam) + np.sqrt(1.0 - lam))))
