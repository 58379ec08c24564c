"""Exact quantities of periodic single-site Ising chains via transfer matrices.

For the homogeneous chain with weight exp(sum_k [x s_k + y s_k s_{k+1}])
(k mod M), everything follows from the 2x2 symmetric transfer matrix

    K = [[e^{y+x}, e^{-y}], [e^{-y}, e^{y-x}]],
    lambda_pm = e^y [cosh(x) +- sqrt(sinh^2(x) + e^{-4y})].

With D = sqrt(sinh^2 x + e^{-4y}), phi = lambda_-/lambda_+ and r = phi^M:

    <s_1>     = (sinh x / D) (1 - r)/(1 + r)
    <s_1 s_2> = sinh^2 x/D^2 + (e^{-4y}/D^2) (phi + phi^{M-1})/(1 + r)
    <s_1 s_3> = sinh^2 x/D^2 + (e^{-4y}/D^2) (phi^2 + phi^{M-2})/(1 + r)
    log Z     = M log lambda_+ + log(1 + r).

|phi| < 1 always; phi < 0 exactly when y < 0 (then lambda_- < 0), which the
signed-power helper handles together with the parity of M. Heterogeneous
chains are handled by an O(M) two-pass product of per-site matrices with
max-norm renormalization, safe up to M ~ 1e5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChainParams:
    """Field x, bond y and length M of a homogeneous periodic chain."""

    x: float
    y: float
    M: int

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"chain parameters must be finite, got x={self.x}, y={self.y}")
        if self.M < 3:
            raise ValueError(f"chain length M must be >= 3, got {self.M}")


@dataclass(frozen=True)
class ChainMoments:
    """First and second moments of the homogeneous chain."""

    m1: float
    c12: float
    c13: float
    logZ: float
    phi: float


@dataclass(frozen=True)
class HeteroMoments:
    """Site-resolved moments of a heterogeneous chain.

    c_bond[q] = <s_q s_{q+1}>, c_nnn[q] = <s_{q-1} s_{q+1}> (indices mod M).
    """

    m: np.ndarray
    c_bond: np.ndarray
    c_nnn: np.ndarray
    logZ: float


def signed_pow(base: float, n: int) -> float:
    """base**n for |base| < 1, stable for large n, tracking the sign."""
    if base == 0.0:
        return 0.0 if n > 0 else 1.0
    mag = math.exp(n * math.log(abs(base)))
    if base < 0.0 and n % 2 == 1:
        return -mag
    return mag


def _core(x: float, y: float):
    """Shared pieces: sinh x, cosh x, e^{-4y}, D, phi, zeta, omega^2."""
    sh = math.sinh(x)
    ch = math.cosh(x)
    e2 = math.exp(-2.0 * y)
    e4 = e2 * e2
    D = math.hypot(sh, e2)
    # phi = (ch - D)/(ch + D), rationalized so the sign comes from 1 - e^{-4y}
    phi = (1.0 - e4) / (ch + D) / (ch + D)
    zeta = sh / D
    w2 = e4 / (D * D)
    return sh, ch, e2, e4, D, phi, zeta, w2


def eigensystem(x: float, y: float):
    """Eigenvalues, their ratio and normalized eigenvectors of K(x, y).

    Returns (lambda_plus, lambda_minus, phi, v_plus, v_minus).
    """
    sh, ch, e2, e4, D, phi, _, _ = _core(x, y)
    ey = math.exp(y)
    lam_p = ey * (ch + D)
    lam_m = ey * (1.0 - e4) / (ch + D)
    # D - sinh x without cancellation for sinh x > 0
    gap = e4 / (D + sh) if sh > 0.0 else D - sh
    L = math.hypot(e2, gap)
    v_plus = np.array([e2 / L, gap / L])
    v_minus = np.array([gap / L, -e2 / L])
    return lam_p, lam_m, phi, v_plus, v_minus


def moments(x: float, y: float, M: int) -> ChainMoments:
    """Closed-form <s_1>, <s_1 s_2>, <s_1 s_3> and log Z for the chain."""
    ChainParams(x, y, M)
    sh, ch, e2, e4, D, phi, zeta, w2 = _core(x, y)
    r = signed_pow(phi, M)
    m1 = zeta * (1.0 - r) / (1.0 + r)
    c12 = zeta * zeta + w2 * (phi + signed_pow(phi, M - 1)) / (1.0 + r)
    c13 = zeta * zeta + w2 * (phi * phi + signed_pow(phi, M - 2)) / (1.0 + r)
    logZ = M * (y + math.log(ch + D)) + math.log1p(r)
    return ChainMoments(m1=m1, c12=c12, c13=c13, logZ=logZ, phi=phi)


def moments_jacobian(x: float, y: float, M: int) -> np.ndarray:
    """Analytic Jacobian d(m1, c12)/d(x, y) of the chain moments.

    Obtained by differentiating the closed forms through D, phi, zeta and
    omega^2; used by the closure Newton solver.
    """
    ChainParams(x, y, M)
    sh, ch, e2, e4, D, phi, zeta, w2 = _core(x, y)
    r = signed_pow(phi, M)
    pm1 = signed_pow(phi, M - 1)
    pm2 = signed_pow(phi, M - 2)
    t = (1.0 - r) / (1.0 + r)
    g1 = (phi + pm1) / (1.0 + r)

    denom = (ch + D) * (ch + D)
    # d/dx
    dzeta_dx = ch * e4 / (D * D * D)
    dw2_dx = -2.0 * e4 * sh * ch / (D * D * D * D)
    dphi_dx = 2.0 * sh * (e4 - 1.0) / (D * denom)
    # d/dy
    dzeta_dy = 2.0 * zeta * w2
    dw2_dy = -4.0 * w2 * zeta * zeta
    dphi_dy = 4.0 * e4 * ch / (D * denom)

    out = np.empty((2, 2))
    for col, (dzeta, dw2, dphi) in enumerate(
        ((dzeta_dx, dw2_dx, dphi_dx), (dzeta_dy, dw2_dy, dphi_dy))
    ):
        dr = M * pm1 * dphi
        dt = -2.0 * dr / ((1.0 + r) * (1.0 + r))
        dg1 = ((1.0 + (M - 1) * pm2) * dphi * (1.0 + r) - (phi + pm1) * dr) / (
            (1.0 + r) * (1.0 + r)
        )
        out[0, col] = t * dzeta + zeta * dt
        out[1, col] = 2.0 * zeta * dzeta + dw2 * g1 + w2 * dg1
    return out


def _site_matrix(x: float, y: float) -> np.ndarray:
    """Transfer matrix T[s, s'] = exp(x s + y s s') with +1 -> index 0."""
    return np.array(
        [
            [math.exp(x + y), math.exp(x - y)],
            [math.exp(-x - y), math.exp(-x + y)],
        ]
    )


_SIGMA = np.diag([1.0, -1.0])


def _scaled_products(mats: np.ndarray):
    """Prefix and suffix products of (M, 2, 2) matrices with log scaling.

    prefix[q] = T_0 ... T_{q-1}, suffix[q] = T_q ... T_{M-1}; each stored
    matrix is divided by its max-abs entry, whose log accumulates.
    """
    M = mats.shape[0]
    pre = np.empty((M + 1, 2, 2))
    pre_log = np.zeros(M + 1)
    pre[0] = np.eye(2)
    for q in range(M):
        P = pre[q] @ mats[q]
        s = np.abs(P).max()
        pre[q + 1] = P / s
        pre_log[q + 1] = pre_log[q] + math.log(s)
    suf = np.empty((M + 1, 2, 2))
    suf_log = np.zeros(M + 1)
    suf[M] = np.eye(2)
    for q in range(M - 1, -1, -1):
        Sq = mats[q] @ suf[q + 1]
        s = np.abs(Sq).max()
        suf[q] = Sq / s
        suf_log[q] = suf_log[q + 1] + math.log(s)
    return pre, pre_log, suf, suf_log


def hetero_moments(xs: np.ndarray, ys: np.ndarray) -> HeteroMoments:
    """Site-resolved moments of the chain with weight
    exp(sum_q [x_q s_q + y_q s_q s_{q+1}]), periodic in q mod M."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"xs and ys must be equal-length vectors, got {xs.shape}, {ys.shape}")
    M = xs.size
    if M < 3:
        raise ValueError(f"chain length M must be >= 3, got {M}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("chain parameters must be finite")

    mats = np.empty((M, 2, 2))
    for q in range(M):
        mats[q] = _site_matrix(xs[q], ys[q])
    pre, pre_log, suf, suf_log = _scaled_products(mats)

    trZ = float(np.trace(pre[M]))
    logZ = math.log(trZ) + pre_log[M]

    def ratio(mat: np.ndarray, log_scale: float) -> float:
        return float(np.trace(mat)) / trZ * math.exp(log_scale - pre_log[M])

    m = np.empty(M)
    c_bond = np.empty(M)
    c_nnn = np.empty(M)
    for p in range(M):
        m[p] = ratio(pre[p] @ _SIGMA @ suf[p], pre_log[p] + suf_log[p])
    for p in range(M - 1):
        c_bond[p] = ratio(
            pre[p] @ _SIGMA @ mats[p] @ _SIGMA @ suf[p + 1],
            pre_log[p] + suf_log[p + 1],
        )
    # wrap bond (M-1, 0): sigma at sites 0 and M-1
    c_bond[M - 1] = ratio(
        _SIGMA @ pre[M - 1] @ _SIGMA @ mats[M - 1], pre_log[M - 1]
    )
    for p in range(1, M - 1):
        c_nnn[p] = ratio(
            pre[p - 1] @ _SIGMA @ mats[p - 1] @ mats[p] @ _SIGMA @ suf[p + 1],
            pre_log[p - 1] + suf_log[p + 1],
        )
    # centered at M-1: pair (M-2, 0)
    c_nnn[M - 1] = ratio(
        _SIGMA @ pre[M - 2] @ _SIGMA @ mats[M - 2] @ mats[M - 1], pre_log[M - 2]
    )
    # centered at 0: pair (M-1, 1); one direct O(M) pass
    R = mats[0] @ _SIGMA
    log_r = 0.0
    for q in range(1, M - 1):
        R = R @ mats[q]
        s = np.abs(R).max()
        R /= s
        log_r += math.log(s)
    R = R @ _SIGMA @ mats[M - 1]
    c_nnn[0] = ratio(R, log_r)

    return HeteroMoments(m=m, c_bond=c_bond, c_nnn=c_nnn, logZ=logZ)


def xi_exact(u: float, v: float, M: int, ell: int) -> float:
    """Bond-observable scaling function at (x, e^{-2y}) = (u/M, v/M):

        Xi_ell = [sinh^2(x) + (v/M)^2 F_ell/F_0] / [sinh^2(x) + (v/M)^2],

    with F_ell = cosh[(M/2 - ell) log phi].
    """
    if not v > 0.0:
        raise ValueError(f"v must be > 0, got {v}")
    x = u / M
    e2 = v / M
    e4 = e2 * e2
    sh = math.sinh(x)
    ch = math.cosh(x)
    D = math.hypot(sh, e2)
    phi = (1.0 - e4) / (ch + D) / (ch + D)
    logphi = math.log(phi)
    ratio = math.cosh((0.5 * M - ell) * logphi) / math.cosh(0.5 * M * logphi)
    return (sh * sh + e4 * ratio) / (D * D)


def xi_expansion(u: float, v: float, M: int, ell: int) -> float:
    """Large-M expansion of Xi_ell, accurate to O(M^-3):

        1 - (2 ell v^2 / M) tanh(R)/R + 2 ell^2 v^2 / M^2,  R = sqrt(u^2+v^2).
    """
    R = math.hypot(u, v)
    return 1.0 - (2.0 * ell * v * v / M) * math.tanh(R) / R + 2.0 * ell * ell * v * v / (M * M)
