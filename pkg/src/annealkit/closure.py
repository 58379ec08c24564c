"""Inverting the maximum-entropy closure.

The macroscopic flow equations need correlators of the single-site chain
measure that reproduces the current macroscopic state. Three inverse
problems appear:

  * solve_xy:        find (x, y) with <s_1> = m and <s_1 s_2> = eps for the
                     homogeneous M-chain; the closure correlator is then
                     C = <s_1 s_3>.
  * solve_xy_hetero: the slice-resolved version, a 2M-dimensional system.
  * solve_u:         the reduced large-M self-consistency
                     m = u tanh(sqrt(u^2 + b^2)) / sqrt(u^2 + b^2),
                     keeping the root of largest |u| when several exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .transfer import hetero_moments, moments, moments_jacobian

# Newton iterates are kept inside a numerically safe box.
_X_CAP = 200.0
_Y_LO, _Y_HI = -30.0, 120.0


class InfeasibleTargetError(ValueError):
    """Target (m, eps) violates a necessary bound of the chain measure."""


class ClosureError(RuntimeError):
    """Newton failed to converge; carries the best residual seen."""

    def __init__(self, message: str, residual: float, x=None, y=None):
        super().__init__(message)
        self.residual = residual
        self.x = x
        self.y = y


@dataclass(frozen=True)
class ClosureSolution:
    x: float
    y: float
    C: float
    residual: float
    iters: int


@dataclass(frozen=True)
class HeteroClosureSolution:
    xs: np.ndarray
    ys: np.ndarray
    C: np.ndarray
    residual: float
    iters: int


@dataclass(frozen=True)
class URoot:
    u: float
    branch_count: int
    residual: float


def check_feasible(m: float, eps: float, label: str = ""):
    """Necessary bounds for (m, eps) to be moments of a +-1 chain:
    |m| < 1, |eps| < 1 and eps >= 2|m| - 1 (pair Frechet bound)."""
    tag = f" at {label}" if label else ""
    if not abs(m) < 1.0:
        raise InfeasibleTargetError(f"|m| < 1 violated{tag}: m = {m}")
    if not abs(eps) < 1.0:
        raise InfeasibleTargetError(f"|eps| < 1 violated{tag}: eps = {eps}")
    if eps < 2.0 * abs(m) - 1.0:
        raise InfeasibleTargetError(
            f"eps >= 2|m| - 1 violated{tag}: eps = {eps}, m = {m}"
        )


def _clip_xy(x: float, y: float) -> tuple[float, float]:
    return min(max(x, -_X_CAP), _X_CAP), min(max(y, _Y_LO), _Y_HI)


def _fd_jacobian(x: float, y: float, M: int) -> np.ndarray:
    step = 1e-6
    J = np.empty((2, 2))
    for col, (dx, dy) in enumerate(((step, 0.0), (0.0, step))):
        hi = moments(x + dx, y + dy, M)
        lo = moments(x - dx, y - dy, M)
        J[0, col] = (hi.m1 - lo.m1) / (2 * step)
        J[1, col] = (hi.c12 - lo.c12) / (2 * step)
    return J


def _newton_xy(m, eps, M, x0, y0, tol, max_iter, analytic: bool):
    x, y = _clip_xy(x0, y0)
    mom = moments(x, y, M)
    F = np.array([mom.m1 - m, mom.c12 - eps])
    best = (float(np.max(np.abs(F))), x, y, mom)
    for it in range(1, max_iter + 1):
        err = float(np.max(np.abs(F)))
        if err < tol:
            return x, y, mom, err, it - 1
        J = moments_jacobian(x, y, M) if analytic else _fd_jacobian(x, y, M)
        if not np.all(np.isfinite(J)):
            J = _fd_jacobian(x, y, M)
        try:
            dz = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dz)):
            break
        step = 1.0
        norm0 = float(np.linalg.norm(F))
        for _ in range(30):
            xn, yn = _clip_xy(x + step * dz[0], y + step * dz[1])
            momn = moments(xn, yn, M)
            Fn = np.array([momn.m1 - m, momn.c12 - eps])
            if np.all(np.isfinite(Fn)) and float(np.linalg.norm(Fn)) < norm0:
                break
            step *= 0.5
        else:
            break
        x, y, mom, F = xn, yn, momn, Fn
        err = float(np.max(np.abs(F)))
        if err < best[0]:
            best = (err, x, y, mom)
    err = float(np.max(np.abs(F)))
    if err < tol:
        return x, y, mom, err, max_iter
    return None, None, None, best[0], max_iter


def solve_xy(
    m: float,
    eps: float,
    M: int,
    tol: float = 1e-12,
    max_iter: int = 100,
    initial: tuple[float, float] | None = None,
) -> ClosureSolution:
    """Chain parameters (x, y) reproducing (m, eps), plus C = <s_1 s_3>.

    Damped Newton with the analytic moment Jacobian; falls back to a
    finite-difference Jacobian and then to a ladder of rescaled starting
    points before giving up.
    """
    check_feasible(m, eps)
    mc = min(max(m, -1.0 + 1e-15), 1.0 - 1e-15)
    ec = min(max(eps, -1.0 + 1e-15), 1.0 - 1e-15)
    if initial is not None:
        starts = [initial]
    else:
        x0 = math.atanh(mc) / M
        y0 = 0.5 * math.atanh(ec)
        starts = [(x0, y0)]
    # fallback ladder around the heuristic start
    x0, y0 = starts[0]
    for fy in (0.5, 2.0, 4.0, 1.0):
        for fx in (1.0, float(M)):
            if (fy, fx) != (1.0, 1.0):
                starts.append((x0 * fx, y0 * fy if y0 != 0.0 else fy - 1.0))

    best_err = math.inf
    best_xy = (float("nan"), float("nan"))
    for xs, ys in starts:
        for analytic in (True, False):
            x, y, mom, err, iters = _newton_xy(m, eps, M, xs, ys, tol, max_iter, analytic)
            if x is not None:
                return ClosureSolution(x=x, y=y, C=mom.c13, residual=err, iters=iters)
            if err < best_err:
                best_err, best_xy = err, (xs, ys)
    raise ClosureError(
        f"closure Newton did not reach tol={tol} for target "
        f"(m={m}, eps={eps}, M={M}); best residual {best_err:.3e}",
        best_err,
        x=best_xy[0],
        y=best_xy[1],
    )


def solve_xy_hetero(
    m: np.ndarray,
    eps: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 60,
    initial: tuple[np.ndarray, np.ndarray] | None = None,
) -> HeteroClosureSolution:
    """Slice-resolved closure: find (x_q, y_q) with per-site magnetization m_q
    and per-bond correlator eps_q, returning the next-nearest correlators C_q.

    Newton on the 2M-dimensional system with a forward-difference Jacobian;
    the starting point replicates the homogeneous solution of the means.
    """
    m = np.asarray(m, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if m.shape != eps.shape or m.ndim != 1:
        raise ValueError(f"m and eps must be equal-length vectors, got {m.shape}, {eps.shape}")
    M = m.size
    for q in range(M):
        check_feasible(float(m[q]), float(eps[q]), label=f"slice {q}")
        # pair bounds for the joint (s_q, s_{q+1}) distribution
        qp = (q + 1) % M
        if abs(m[q] - m[qp]) > 1.0 - eps[q]:
            raise InfeasibleTargetError(
                f"|m_q - m_q+1| <= 1 - eps_q violated at slice {q}: "
                f"|{m[q]} - {m[qp]}| > 1 - {eps[q]}"
            )
        if abs(m[q] + m[qp]) > 1.0 + eps[q]:
            raise InfeasibleTargetError(
                f"|m_q + m_q+1| <= 1 + eps_q violated at slice {q}"
            )

    if initial is not None:
        xs = np.array(initial[0], dtype=np.float64)
        ys = np.array(initial[1], dtype=np.float64)
    else:
        base = solve_xy(float(m.mean()), float(eps.mean()), M, tol=min(1e-10, tol))
        xs = np.full(M, base.x)
        ys = np.full(M, base.y)

    def residual(xv, yv):
        mom = hetero_moments(xv, yv)
        return np.concatenate([mom.m - m, mom.c_bond - eps]), mom

    F, mom = residual(xs, ys)
    z = np.concatenate([xs, ys])
    best_err = float(np.max(np.abs(F)))
    for it in range(1, max_iter + 1):
        err = float(np.max(np.abs(F)))
        if err < tol:
            return HeteroClosureSolution(
                xs=z[:M].copy(), ys=z[M:].copy(), C=mom.c_nnn.copy(),
                residual=err, iters=it - 1,
            )
        J = np.empty((2 * M, 2 * M))
        h = 1e-7
        for j in range(2 * M):
            zp = z.copy()
            zp[j] += h
            Fp, _ = residual(zp[:M], zp[M:])
            J[:, j] = (Fp - F) / h
        try:
            dz = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            dz = np.linalg.lstsq(J, -F, rcond=None)[0]
        step = 1.0
        norm0 = float(np.linalg.norm(F))
        for _ in range(30):
            zn = z + step * dz
            zn[:M] = np.clip(zn[:M], -_X_CAP, _X_CAP)
            zn[M:] = np.clip(zn[M:], _Y_LO, _Y_HI)
            Fn, momn = residual(zn[:M], zn[M:])
            if np.all(np.isfinite(Fn)) and float(np.linalg.norm(Fn)) < norm0:
                break
            step *= 0.5
        else:
            break
        z, F, mom = zn, Fn, momn
        best_err = min(best_err, float(np.max(np.abs(F))))
    err = float(np.max(np.abs(F)))
    if err < tol:
        return HeteroClosureSolution(
            xs=z[:M].copy(), ys=z[M:].copy(), C=mom.c_nnn.copy(),
            residual=err, iters=max_iter,
        )
    raise ClosureError(
        f"slice-resolved closure Newton did not reach tol={tol}; "
        f"best residual {best_err:.3e}",
        best_err,
    )


def _g_slow(u: float, m: float, b: float) -> float:
    R = math.hypot(u, b)
    return u * math.tanh(R) / R - m


def solve_u(
    m: float,
    betagamma: float,
    tol: float = 1e-12,
    sign_hint: float = 1.0,
) -> URoot:
    """Root of m = u tanh(sqrt(u^2 + b^2)) / sqrt(u^2 + b^2), b = betagamma.

    Scans a log-spaced grid over |u| <= max(50, 20 b) for sign changes and
    bisects each bracket; among all roots found, the one with the largest
    |u| is returned (ties between +-u broken toward sign_hint).
    """
    if not abs(m) < 1.0:
        raise InfeasibleTargetError(f"|m| < 1 required, got m = {m}")
    if not betagamma > 0.0:
        raise ValueError(f"betagamma must be > 0, got {betagamma}")
    b = betagamma
    u_max = max(50.0, 20.0 * b)
    mags = np.logspace(-8, math.log10(u_max), 400)
    grid = np.concatenate([-mags[::-1], [0.0], mags])
    vals = np.array([_g_slow(u, m, b) for u in grid])

    roots: list[float] = []
    for j in range(len(grid) - 1):
        g0, g1 = vals[j], vals[j + 1]
        if g0 == 0.0:
            roots.append(float(grid[j]))
            continue
        if g0 * g1 < 0.0:
            lo, hi = float(grid[j]), float(grid[j + 1])
            flo = g0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = _g_slow(mid, m, b)
                if fm == 0.0 or (hi - lo) < tol:
                    lo = hi = mid
                    break
                if flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    # dedupe
    uniq: list[float] = []
    for r in sorted(roots):
        if not uniq or abs(r - uniq[-1]) > max(10 * tol, 1e-10 * max(1.0, abs(r))):
            uniq.append(r)
    if not uniq:
        raise InfeasibleTargetError(
            f"no root with |u| <= {u_max}: |m| = {abs(m)} exceeds the "
            f"attainable range of the scan"
        )
    best = max(abs(r) for r in uniq)
    candidates = [r for r in uniq if abs(abs(r) - best) <= max(10 * tol, 1e-10 * best)]
    if len(candidates) > 1:
        want = 1.0 if sign_hint >= 0.0 else -1.0
        signed = [r for r in candidates if math.copysign(1.0, r) == want]
        u = signed[0] if signed else candidates[0]
    else:
        u = candidates[0]
    return URoot(u=u, branch_count=len(uniq), residual=abs(_g_slow(u, m, b)))
