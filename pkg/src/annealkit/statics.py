"""Equilibrium theory of the mean-field transverse-field Ising model.

The magnetization solves

    m = (h + J0 m) tanh(beta R) / R,      R = sqrt((h + J0 m)^2 + gamma^2),

and the free energy density is

    f(m) = J0 m^2 / 2 - log[2 cosh(beta R)] / beta.

For J0 = 0 the model is exactly solvable; in the Trotter representation the
single-spin partition function is M-independent, which is used here as a
correctness identity. The stability of the slice-uniform saddle against
slice-symmetry breaking is decided by the spectrum of a circulant
correlation matrix built from the 2x2 transfer matrix at
x = beta (h + J0 m)/M, y = B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, trotter_bond
from .transfer import _core, signed_pow

GRID_POINTS = 10_000
BISECT_TOL = 1e-12


def log2cosh(z: float) -> float:
    """log(2 cosh z) without overflow."""
    return abs(z) + math.log1p(math.exp(-2.0 * abs(z)))


def _tanh_over(r: float, beta: float) -> float:
    """tanh(beta r)/r with the r -> 0 limit beta."""
    if r < 1e-12:
        return beta * (1.0 - (beta * r) ** 2 / 3.0)
    return math.tanh(beta * r) / r


def magnetization_residual(m: float, params: ModelParams) -> float:
    """(h + J0 m) tanh(beta R)/R - m."""
    w = params.h + params.J0 * m
    R = math.hypot(w, params.gamma)
    return w * _tanh_over(R, params.beta) - m


def free_energy_ferro(m: float, params: ModelParams) -> float:
    """f(m) = J0 m^2/2 - log[2 cosh(beta R)]/beta."""
    w = params.h + params.J0 * m
    R = math.hypot(w, params.gamma)
    return 0.5 * params.J0 * m * m - log2cosh(params.beta * R) / params.beta


@dataclass(frozen=True)
class EquilibriumResult:
    """All real magnetization roots, their free energies and the best root."""

    roots: np.ndarray
    f: np.ndarray
    best_index: int
    residual: float

    @property
    def m(self) -> float:
        """The free-energy-minimizing root."""
        return float(self.roots[self.best_index])

    @property
    def f_min(self) -> float:
        return float(self.f[self.best_index])


def solve_m(params: ModelParams) -> EquilibriumResult:
    """All roots of the magnetization equation on [-1, 1].

    Sign-change scan on a uniform grid followed by bisection; among several
    roots the thermodynamic one minimizes the free energy.
    """
    grid = np.linspace(-1.0, 1.0, GRID_POINTS + 1)
    vals = np.array([magnetization_residual(m, params) for m in grid])
    roots: list[float] = []
    for j in range(GRID_POINTS):
        f0, f1 = vals[j], vals[j + 1]
        if f0 == 0.0:
            roots.append(float(grid[j]))
            continue
        if f0 * f1 < 0.0:
            lo, hi, flo = float(grid[j]), float(grid[j + 1]), f0
            while hi - lo > BISECT_TOL:
                mid = 0.5 * (lo + hi)
                fm = magnetization_residual(mid, params)
                if fm == 0.0:
                    lo = hi = mid
                elif flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(1.0)

    uniq: list[float] = []
    for r in sorted(roots):
        if not uniq or r - uniq[-1] > 1e-9:
            uniq.append(r)
    roots_arr = np.array(uniq)
    f_arr = np.array([free_energy_ferro(m, params) for m in uniq])
    best = int(np.argmin(f_arr))
    residual = max(abs(magnetization_residual(m, params)) for m in uniq)
    return EquilibriumResult(roots=roots_arr, f=f_arr, best_index=best, residual=residual)


def free_energy_noninteracting(params: ModelParams, with_h: bool = True) -> float:
    """Exact free energy density of the J0 = 0 model:
    -log[2 cosh(beta sqrt(gamma^2 + h^2))]/beta (h dropped if with_h=False).
    """
    field = math.hypot(params.gamma, params.h) if with_h else params.gamma
    return -log2cosh(params.beta * field) / params.beta


def partition_noninteracting_trotter(M: int, beta: float, gamma: float) -> float:
    """log Z per spin of the M-slice Trotter chain at J0 = h = 0:

        (M/2) log[sinh(2 beta gamma / M)/2] + log(lam_+^M + lam_-^M),

    with lam_+ = 2 cosh B, lam_- = 2 sinh B. Evaluated in log space; equals
    log(2 cosh(beta gamma)) for every M >= 2.
    """
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if not beta > 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not gamma > 0.0:
        raise ValueError(f"gamma must be > 0 (B undefined at gamma = 0), got {gamma}")
    B = trotter_bond(beta, gamma, M)
    log_lam_p = B + math.log1p(math.exp(-2.0 * B))  # log(2 cosh B)
    log_ratio_M = M * (math.log(math.tanh(B)))  # (lam_-/lam_+)^M = tanh(B)^M
    prefactor = 0.5 * M * math.log(0.5 * math.sinh(2.0 * beta * gamma / M))
    return prefactor + M * log_lam_p + math.log1p(math.exp(log_ratio_M))


@dataclass(frozen=True)
class BifurcationReport:
    """Spectrum of the slice-correlation matrix at the uniform saddle.

    a[k] are the circulant eigenvalues of the non-uniform (symmetry
    breaking) sector; the uniform mode picks up the extra shift
    uniform_mode_shift on top of a[0]. The saddle is stable against
    slice-symmetry breaking while max_k beta J0 a_k / M < 1.
    """

    a: np.ndarray
    max_criterion: float
    symmetric_stable: bool
    uniform_mode_shift: float


def toeplitz_spectrum(params: ModelParams, m: float) -> BifurcationReport:
    """Eigenvalues a_k of the slice-correlation matrix

        A_qr = <s_q s_r>_chain - m_chain^2

    of the single-site chain at x = beta (h + J0 m)/M, y = B, and the
    symmetry-breaking criterion max_k beta J0 a_k / M < 1.
    """
    B = params.require_finite_bond()
    M = params.M
    x = params.beta * (params.h + params.J0 * m) / M
    _, _, _, _, D, phi, zeta, w2 = _core(x, B)
    r = signed_pow(phi, M)
    theta = 2.0 * math.pi * np.arange(M) / M
    a = (w2 / (1.0 + r)) * (1.0 - r) * (1.0 - phi * phi) / (
        1.0 + phi * phi - 2.0 * phi * np.cos(theta)
    )
    m_chain = zeta * (1.0 - r) / (1.0 + r)
    uniform_shift = M * (zeta * zeta - m_chain * m_chain)
    crit = float(np.max(params.beta * params.J0 * a / M))
    return BifurcationReport(
        a=a,
        max_criterion=crit,
        symmetric_stable=bool(crit < 1.0),
        uniform_mode_shift=uniform_shift,
    )


def chain_pair_matrix(params: ModelParams, m: float) -> np.ndarray:
    """Dense slice-correlation matrix A_qr (audit path for the spectrum):

        A_qr = [zeta^2 (1 + r) + (phi^|q-r| + phi^(M-|q-r|)) omega^2] / (1+r)
               - m_chain^2.
    """
    B = params.require_finite_bond()
    M = params.M
    x = params.beta * (params.h + params.J0 * m) / M
    _, _, _, _, D, phi, zeta, w2 = _core(x, B)
    r = signed_pow(phi, M)
    m_chain = zeta * (1.0 - r) / (1.0 + r)
    A = np.empty((M, M))
    for q in range(M):
        for p in range(M):
            d = abs(q - p)
            pair = zeta * zeta + w2 * (signed_pow(phi, d) + signed_pow(phi, M - d)) / (1.0 + r)
            A[q, p] = pair - m_chain * m_chain
    return A
