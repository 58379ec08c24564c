"""Trotter lattice state, energies, Glauber rates and flip susceptibilities.

A configuration is an N x M array of spins s[i, k] in {-1, +1}; the slice
index k is periodic mod M. With mean-field couplings J_ij = J0/N the energy
is

    H(s) = -(1/M) sum_k (J0/N) sum_{i<j} s_ik s_jk
           -(h/M) sum_{k,i} s_ik
           -(B/beta) sum_{k mod M, i} s_ik s_{i,k+1},

where the pair sum is evaluated through sum_{i<j} s_ik s_jk =
((sum_i s_ik)^2 - N) / 2. All macroscopic observables are functions of the
per-slice spin sums S_k = sum_i s_ik and bond sums W_k = sum_i s_ik s_{i,k+1},
which TrotterConfig caches and updates incrementally on flips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams

# tanh saturates to +-1 within double precision well before |arg| = 40;
# beyond the clamp the flip rate is exactly 0 or 1.
TANH_CLAMP = 40.0


class TrotterConfig:
    """Spin configuration with cached slice and bond sums.

    A single instance is single-writer: flips mutate the caches in place.
    Distinct instances are independent and safe to use concurrently.
    """

    __slots__ = ("spins", "slice_sums", "bond_sums")

    def __init__(self, spins: np.ndarray):
        spins = np.asarray(spins)
        if spins.ndim != 2:
            raise ValueError(f"spins must be 2-D (N, M), got shape {spins.shape}")
        if not np.all(np.abs(spins) == 1):
            raise ValueError("spins must all be -1 or +1")
        self.spins = spins.astype(np.int8)
        self.slice_sums = np.zeros(self.M, dtype=np.int64)
        self.bond_sums = np.zeros(self.M, dtype=np.int64)
        self.recompute_sums()

    @property
    def N(self) -> int:
        return self.spins.shape[0]

    @property
    def M(self) -> int:
        return self.spins.shape[1]

    def recompute_sums(self):
        """Audit path: rebuild the cached sums from the spin array."""
        s = self.spins.astype(np.int64)
        self.slice_sums[:] = s.sum(axis=0)
        self.bond_sums[:] = (s * np.roll(s, -1, axis=1)).sum(axis=0)

    def flip(self, i: int, k: int):
        """Flip spin (i, k) and update the cached sums."""
        s = int(self.spins[i, k])
        M = self.M
        kp = (k + 1) % M
        km = (k - 1) % M
        self.slice_sums[k] -= 2 * s
        self.bond_sums[k] -= 2 * s * int(self.spins[i, kp])
        self.bond_sums[km] -= 2 * s * int(self.spins[i, km])
        self.spins[i, k] = -s

    def flipped(self, i: int, k: int) -> "TrotterConfig":
        """Return a new configuration with spin (i, k) flipped."""
        out = TrotterConfig(self.spins.copy())
        out.flip(i, k)
        return out

    def copy(self) -> "TrotterConfig":
        return TrotterConfig(self.spins.copy())


@dataclass(frozen=True)
class SliceObservables:
    """Per-slice magnetizations m_k, coupling energies E_k and bond energies."""

    m: np.ndarray
    E: np.ndarray
    Eps: np.ndarray


@dataclass(frozen=True)
class AvgObservables:
    """Slice-averaged magnetization, coupling energy and bond energy."""

    m: float
    E: float
    Eps: float


def _check_dims(config: TrotterConfig, params: ModelParams):
    if config.N != params.N or config.M != params.M:
        raise ValueError(
            f"config shape ({config.N}, {config.M}) does not match "
            f"params (N={params.N}, M={params.M})"
        )


def _check_indices(config: TrotterConfig, i: int, k: int):
    if not (0 <= i < config.N and 0 <= k < config.M):
        raise IndexError(
            f"site index ({i}, {k}) out of range for lattice "
            f"({config.N}, {config.M})"
        )


def hamiltonian(config: TrotterConfig, params: ModelParams) -> float:
    """Total energy H(s) of the configuration.

    Evaluated from the cached sums; the quadratic slice term uses the
    mean-field identity sum_{i<j} s_ik s_jk = (S_k^2 - N)/2.
    """
    _check_dims(config, params)
    N, M = params.N, params.M
    S = config.slice_sums.astype(np.float64)
    pair = float(np.sum(S * S) - N * M) / 2.0
    e_coupling = -(params.J0 / N) * pair / M
    e_field = -(params.h / M) * float(config.slice_sums.sum())
    e_bond = -(params.B / params.beta) * float(config.bond_sums.sum())
    return e_coupling + e_field + e_bond


def local_field(config: TrotterConfig, i: int, k: int, params: ModelParams) -> float:
    """Local field on spin (i, k):

        h_ik = (1/M) sum_{j != i} (J0/N) s_jk
               + (B/beta) (s_{i,k+1} + s_{i,k-1}) + h/M.
    """
    _check_dims(config, params)
    _check_indices(config, i, k)
    M = params.M
    s = int(config.spins[i, k])
    kp = (k + 1) % M
    km = (k - 1) % M
    neighbor = int(config.spins[i, kp]) + int(config.spins[i, km])
    coupling = (params.J0 / params.N) * (int(config.slice_sums[k]) - s) / M
    return coupling + (params.B / params.beta) * neighbor + params.h / M


def flip_rate(config: TrotterConfig, i: int, k: int, params: ModelParams) -> float:
    """Glauber rate for flipping spin (i, k):

        w_ik = 1/2 [1 - s_ik tanh(beta * h_ik)].
    """
    field = local_field(config, i, k, params)
    s = int(config.spins[i, k])
    arg = params.beta * field
    if arg > TANH_CLAMP:
        th = 1.0
    elif arg < -TANH_CLAMP:
        th = -1.0
    else:
        th = math.tanh(arg)
    return 0.5 * (1.0 - s * th)


def observables_slice(config: TrotterConfig, params: ModelParams) -> SliceObservables:
    """Per-slice observables:

        m_k   = N^-1 sum_i s_ik
        Eps_k = N^-1 sum_i s_ik s_{i,k+1}
        E_k   = -N^-1 sum_{i<j} (J0/N) s_ik s_jk = -(J0/2)(m_k^2 - 1/N).
    """
    _check_dims(config, params)
    N = params.N
    S = config.slice_sums.astype(np.float64)
    m = S / N
    Eps = config.bond_sums.astype(np.float64) / N
    E = -(params.J0 / (2.0 * N * N)) * (S * S - N)
    return SliceObservables(m=m, E=E, Eps=Eps)


def observables_avg(config: TrotterConfig, params: ModelParams) -> AvgObservables:
    """Slice averages of the per-slice observables."""
    _check_dims(config, params)
    N, M = params.N, params.M
    S = config.slice_sums.astype(np.float64)
    m = float(config.slice_sums.sum()) / (N * M)
    Eps = float(config.bond_sums.sum()) / (N * M)
    E = -(params.J0 / (2.0 * N * N * M)) * float(np.sum(S * S) - N * M)
    return AvgObservables(m=m, E=E, Eps=Eps)


def flip_delta_avg(
    config: TrotterConfig, i: int, k: int, params: ModelParams
) -> tuple[float, float, float]:
    """Changes of the slice-averaged observables under a flip of (i, k):

        dm   = -2 (NM)^-1 s_ik
        dE   = +2 (NM)^-1 s_ik sum_{j != i} (J0/N) s_jk
        dEps = -2 (NM)^-1 s_ik (s_{i,k+1} + s_{i,k-1}).
    """
    _check_dims(config, params)
    _check_indices(config, i, k)
    N, M = params.N, params.M
    s = int(config.spins[i, k])
    kp = (k + 1) % M
    km = (k - 1) % M
    neighbor = int(config.spins[i, kp]) + int(config.spins[i, km])
    dm = -2.0 * s / (N * M)
    dE = params.J0 * float(2 * s * (int(config.slice_sums[k]) - s)) / (N * N * M)
    dEps = float(-2 * s * neighbor) / (N * M)
    return dm, dE, dEps


def flip_delta_slice(
    config: TrotterConfig, i: int, k: int, params: ModelParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Changes of the per-slice observables under a flip of (i, k).

    Only slice k changes for m and E; the bond observable changes at
    slices k (bond k -> k+1) and k-1 (bond k-1 -> k). Returned as dense
    length-M vectors so they can be compared against recomputation.
    """
    _check_dims(config, params)
    _check_indices(config, i, k)
    N, M = params.N, params.M
    s = int(config.spins[i, k])
    kp = (k + 1) % M
    km = (k - 1) % M
    dm = np.zeros(M)
    dE = np.zeros(M)
    dEps = np.zeros(M)
    dm[k] = -2.0 * s / N
    dE[k] = params.J0 * float(2 * s * (int(config.slice_sums[k]) - s)) / (N * N)
    dEps[k] = float(-2 * s * int(config.spins[i, kp])) / N
    dEps[km] += float(-2 * s * int(config.spins[i, km])) / N
    return dm, dE, dEps
