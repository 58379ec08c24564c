"""Model parameters for the Trotter-mapped transverse-field Ising system.

The quantum model has N spins with uniform pair couplings J_ij = J0/N, a
longitudinal field h and a transverse field gamma, at inverse temperature
beta. Its Trotter representation is a classical N x M Ising system whose
inter-slice bond strength is

    B = -1/2 * log(tanh(beta * gamma / M)),

so that exp(-2B) = tanh(beta*gamma/M). B > 0 whenever gamma > 0 and it
diverges as gamma -> 0, which is why operations that need finite B must
reject gamma = 0 explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def trotter_bond(beta: float, gamma: float, M: int) -> float:
    """Inter-slice coupling B = -1/2 log tanh(beta*gamma/M).

    Returns math.inf for gamma == 0.
    """
    if gamma == 0.0:
        return math.inf
    return -0.5 * math.log(math.tanh(beta * gamma / M))


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the N-site, M-slice Trotter lattice.

    Attributes:
        N: number of sites (>= 1).
        M: number of Trotter slices (>= 3, periodic).
        beta: inverse temperature (> 0).
        gamma: transverse field (>= 0).
        h: longitudinal field.
        J0: ferromagnetic coupling scale; pair couplings are J0/N.
        tau: time unit of the spin-flip dynamics (> 0).
        B: derived inter-slice coupling, computed from (beta, gamma, M).
    """

    N: int
    M: int
    beta: float
    gamma: float
    h: float
    J0: float
    tau: float = 1.0
    B: float = field(init=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.M < 3:
            raise ValueError(f"M must be >= 3, got {self.M}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "B", trotter_bond(self.beta, self.gamma, self.M))

    def require_finite_bond(self) -> float:
        """Return B, raising if the transverse field is zero."""
        if not math.isfinite(self.B):
            raise ValueError(
                "inter-slice coupling B is infinite (gamma = 0); "
                "this operation needs gamma > 0"
            )
        return self.B
