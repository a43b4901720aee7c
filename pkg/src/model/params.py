"""Physical and protocol parameters of the monitored ladder.

``ModelParams`` is immutable; anything derived from it (the one-cycle
propagator in particular) is keyed by :meth:`ModelParams.params_hash`.
"""

from __future__ import annotations

import hashlib
import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


# Steady-state depth used when ``n_st`` is not given explicitly.
SHORT_STEADY_CYCLES = 150
LONG_STEADY_CYCLES = 250
SHORT_STEADY_MAX_L = 64


def default_steady_cycles(L: int) -> int:
    """Cycles needed to reach the steady state at chain length ``L``."""
    return SHORT_STEADY_CYCLES if L <= SHORT_STEADY_MAX_L else LONG_STEADY_CYCLES


class ModelParams(BaseModel):
    """All parameters of one ladder ensemble.

    Chain 0 is the system (hopping ``t1``, measured with ``p1``), chain 1 the
    ancilla (``t2``, ``p2``). Energies are in units of ``t1 = 1`` by
    convention, but nothing here enforces it.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    L: int
    t1: float = 1.0
    t2: float = 1.0
    t12: float = math.pi / 2
    tau_u: float = 1.0
    p1: float = Field(0.0, ge=0.0, le=1.0)
    p2: float = Field(0.0, ge=0.0, le=1.0)
    n_st: int = Field(SHORT_STEADY_CYCLES, ge=1)
    m: int = Field(5, ge=1)
    filling: Literal["global", "per_chain"] = "global"

    @field_validator("L")
    @classmethod
    def _check_length(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError(f"L must be an even integer >= 2, got {value}")
        return value

    @field_validator("tau_u")
    @classmethod
    def _check_tau(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"tau_u must be positive, got {value}")
        return value

    @property
    def n_modes(self) -> int:
        return 2 * self.L

    @property
    def measure_probabilities(self) -> tuple[float, float]:
        return (self.p1, self.p2)

    def hopping_key(self) -> tuple[int, float, float, float, float]:
        """The subset of parameters the unitary cycle depends on."""
        return (self.L, self.t1, self.t2, self.t12, self.tau_u)

    def params_hash(self) -> str:
        payload = self.model_dump_json()
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
