"""Closed macroscopic flow equations and a fixed-step RK4 integrator.

Flow kinds and their state vectors:

    noninteracting   (m, eps)      J0 = 0, h = 0
    fields           (m, eps)      J0 = 0
    ferro            (m, eps)      general mean-field parameters
    ferro_slice      (m_0..m_{M-1}, eps_0..eps_{M-1})  slice-resolved
    slow             (m,)          large-M reduced flow, u from solve_u
    slow_approx      (m,)          same with u replaced by beta(J0 m + h)

For the finite-M kinds, rhs returns the velocities in units of the attempt
time tau (the natural form of the master-equation drift); integrate divides
by tau. The slow kinds' equations already live on the tau = 1/M^2 timescale
and are integrated as-is, so with tau = 1/M^2 all kinds and the Monte Carlo
engine share one time axis.

The drift needs the closure correlator at each evaluation: C from solve_xy
(slice-averaged kinds), the vector C_q from solve_xy_hetero (slice-resolved)
or u from solve_u (slow). Closure solves are warm-started from the previous
evaluation, so integration costs O(steps) Newton iterations overall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closure import (
    ClosureError,
    HeteroClosureSolution,
    InfeasibleTargetError,
    solve_u,
    solve_xy,
    solve_xy_hetero,
)
from .glauber import Trajectory
from .model import ModelParams

FLOW_KINDS = ("noninteracting", "fields", "ferro", "ferro_slice", "slow", "slow_approx")

# eps this close to 1 is treated as the fully bond-aligned boundary, where
# the closure correlator is exactly 1
_EPS_BOUNDARY = 1e-12


class FlowError(RuntimeError):
    """Integration failure; carries the partial trajectory when available."""

    def __init__(self, message: str, trajectory: Trajectory | None = None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class FlowState:
    """State of a flow integration at one time."""

    t: float
    y: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def state_dim(kind: str, M: int) -> int:
    if kind not in FLOW_KINDS:
        raise ValueError(f"unknown flow kind {kind!r}; expected one of {FLOW_KINDS}")
    return {"ferro_slice": 2 * M, "slow": 1, "slow_approx": 1}.get(kind, 2)


def _check_kind_params(kind: str, params: ModelParams):
    if kind == "noninteracting" and (params.J0 != 0.0 or params.h != 0.0):
        raise ValueError("noninteracting flow requires J0 = 0 and h = 0")
    if kind == "fields" and params.J0 != 0.0:
        raise ValueError("fields flow requires J0 = 0")


def q_pm(m: float, params: ModelParams) -> tuple[float, float]:
    """The two tanh combinations entering every finite-M drift:

        Q+ = 1/2 [tanh(a + 2B) + tanh(a - 2B)] = sinh(2a) / (cosh 2a + cosh 4B)
        Q- = 1/2 [tanh(a + 2B) - tanh(a - 2B)] = sinh(4B) / (cosh 2a + cosh 4B)

    with a = beta (J0 m + h) / M. The quotient forms avoid the cancellation
    that makes the tanh difference lose precision at large B.
    """
    B = params.require_finite_bond()
    a = params.beta * (params.J0 * m + params.h) / params.M
    den = math.cosh(2.0 * a) + math.cosh(4.0 * B)
    return math.sinh(2.0 * a) / den, math.sinh(4.0 * B) / den


class ClosureTracker:
    """Warm-start context threaded through consecutive rhs evaluations."""

    def __init__(self):
        self.xy: tuple[float, float] | None = None
        self.hetero: tuple[np.ndarray, np.ndarray] | None = None
        self.u_sign: float = 1.0


def _closure_C(m: float, eps: float, M: int, tracker: ClosureTracker | None, diag: dict):
    if eps >= 1.0 - _EPS_BOUNDARY:
        diag.update({"x": math.nan, "y": math.inf, "C": 1.0, "residual": 0.0})
        return 1.0
    sol = solve_xy(m, eps, M, initial=tracker.xy if tracker else None)
    if tracker is not None:
        tracker.xy = (sol.x, sol.y)
    diag.update({"x": sol.x, "y": sol.y, "C": sol.C, "residual": sol.residual})
    return sol.C


def _closure_C_slice(m, eps, tracker: ClosureTracker | None, diag: dict) -> np.ndarray:
    if np.min(eps) >= 1.0 - _EPS_BOUNDARY:
        diag.update({"C": 1.0, "residual": 0.0})
        return np.ones_like(eps)
    sol: HeteroClosureSolution = solve_xy_hetero(
        m, eps, initial=tracker.hetero if tracker else None
    )
    if tracker is not None:
        tracker.hetero = (sol.xs, sol.ys)
    diag.update({"C": float(sol.C.mean()), "residual": sol.residual})
    return sol.C


def rhs(
    kind: str,
    state: np.ndarray,
    params: ModelParams,
    tracker: ClosureTracker | None = None,
    diag: dict | None = None,
) -> np.ndarray:
    """Drift of the chosen flow at `state` (see module docstring for units).

    Closure failures propagate as ClosureError annotated with the state.
    """
    if diag is None:
        diag = {}
    _check_kind_params(kind, params)
    state = np.atleast_1d(np.asarray(state, dtype=np.float64))
    if state.size != state_dim(kind, params.M):
        raise ValueError(
            f"state dimension {state.size} does not match kind {kind!r} "
            f"(expected {state_dim(kind, params.M)})"
        )
    beta, J0, h, M = params.beta, params.J0, params.h, params.M

    if kind in ("slow", "slow_approx"):
        m = float(state[0])
        b = beta * params.gamma
        if kind == "slow":
            hint = tracker.u_sign if tracker else 1.0
            root = solve_u(m, b, sign_hint=hint)
            u = root.u
            if tracker is not None and u != 0.0:
                tracker.u_sign = math.copysign(1.0, u)
            diag.update({"u": u, "branch_count": root.branch_count, "residual": root.residual})
        else:
            u = beta * (J0 * m + h)
            diag.update({"u": u, "branch_count": 1, "residual": 0.0})
        R = math.hypot(u, b)
        drift = 2.0 * beta**2 * params.gamma**2 * (
            beta * (h + J0 * m) * math.tanh(R) / R - m
        )
        return np.array([drift])

    if kind == "ferro_slice":
        m = state[:M]
        eps = state[M:]
        try:
            C = _closure_C_slice(m, eps, tracker, diag)
        except ClosureError as exc:
            raise ClosureError(
                f"slice closure failed during {kind} flow at state m_mean="
                f"{m.mean():.6g}, eps_mean={eps.mean():.6g}: {exc}", exc.residual
            ) from exc
        mp = np.roll(m, -1)   # m_{q+1}
        mm = np.roll(m, 1)    # m_{q-1}
        mpp = np.roll(m, -2)  # m_{q+2}
        Cp = np.roll(C, -1)   # C_{q+1}
        a = beta * (h + J0 * m) / M
        ap = np.roll(a, -1)
        Qp = np.empty(M)
        Qm = np.empty(M)
        for q in range(M):
            Qp[q], Qm[q] = q_pm(float(m[q]), params)
        Qpp = np.roll(Qp, -1)
        Qmp = np.roll(Qm, -1)
        th = np.tanh(a)
        thp = np.roll(th, -1)
        dm = 0.5 * (1 + C) * Qp + 0.5 * (mp + mm) * Qm - m + 0.5 * (1 - C) * th
        deps = (
            0.5 * (mp + mm) * Qp
            + 0.5 * (1 + C) * Qm
            + 0.5 * (m + mpp) * Qpp
            + 0.5 * (1 + Cp) * Qmp
            + 0.5 * (mp - mm) * th
            + 0.5 * (m - mpp) * thp
            - 2.0 * eps
        )
        return np.concatenate([dm, deps])

    # slice-averaged kinds: noninteracting, fields, ferro
    m, eps = float(state[0]), float(state[1])
    try:
        C = _closure_C(m, eps, M, tracker, diag)
    except ClosureError as exc:
        raise ClosureError(
            f"closure failed during {kind} flow at state m={m:.6g}, "
            f"eps={eps:.6g}: {exc}", exc.residual
        ) from exc
    Qp, Qm = q_pm(m, params)
    a = beta * (h + J0 * m) / M
    dm = 0.5 * (1 + C) * Qp + m * Qm - m + 0.5 * (1 - C) * math.tanh(a)
    deps = 2.0 * m * Qp + (1 + C) * Qm - 2.0 * eps
    return np.array([dm, deps])


_DIAG_KEYS = ("x", "y", "C", "u", "branch_count", "residual")


def integrate(
    kind: str,
    y0: np.ndarray,
    params: ModelParams,
    t_end: float,
    dt: float | None = None,
    record_dt: float | None = None,
) -> Trajectory:
    """Classical RK4 with fixed step dt from t = 0 to t_end.

    Defaults: dt = 0.01 for the slow kinds (their drift is O(1)) and
    dt = 0.01 tau for the finite-M kinds (drift O(1)/tau). States are
    required to stay inside [-1, 1] up to 1e-9; a velocity that flips sign
    on most steps is flagged in meta as a step-size advisory.
    """
    if dt is None:
        dt = 0.01 if kind in ("slow", "slow_approx") else 0.01 * params.tau
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if record_dt is None:
        record_dt = max(dt, t_end / 2000.0)

    scale = 1.0 if kind in ("slow", "slow_approx") else 1.0 / params.tau
    y = np.atleast_1d(np.asarray(y0, dtype=np.float64)).copy()
    if y.size != state_dim(kind, params.M):
        raise ValueError(
            f"y0 dimension {y.size} does not match kind {kind!r} "
            f"(expected {state_dim(kind, params.M)})"
        )
    tracker = ClosureTracker()
    n_steps = max(1, int(round(t_end / dt)))
    dt = t_end / n_steps
    every = max(1, int(round(record_dt / dt)))

    times = [0.0]
    ys = [y.copy()]
    diags: list[dict] = []
    sign_flips = 0
    prev_v: np.ndarray | None = None

    def fail(msg, t):
        while len(diags) < len(times):
            diags.append({})
        traj = _as_trajectory(kind, np.array(times), ys, diags, params, meta_extra={
            "failed_at_t": t, "failure": msg,
        })
        raise FlowError(f"{msg} (t = {t:.6g})", traj)

    diag0: dict = {}
    try:
        rhs(kind, y, params, tracker, diag0)
    except (ClosureError, InfeasibleTargetError) as exc:
        fail(f"closure failure at the initial state: {exc}", 0.0)
    diags.append(diag0)

    for step in range(1, n_steps + 1):
        t = (step - 1) * dt
        diag: dict = {}
        try:
            k1 = scale * rhs(kind, y, params, tracker, diag)
            k2 = scale * rhs(kind, y + 0.5 * dt * k1, params, tracker, {})
            k3 = scale * rhs(kind, y + 0.5 * dt * k2, params, tracker, {})
            k4 = scale * rhs(kind, y + dt * k3, params, tracker, {})
        except (ClosureError, InfeasibleTargetError) as exc:
            fail(f"closure failure: {exc}", t)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.max(np.abs(y)) > 1.0 + 1e-9:
            fail(f"state left [-1, 1]: max |y| = {np.max(np.abs(y)):.12g}", t + dt)
        if prev_v is not None and np.any(prev_v * k1 < 0.0):
            sign_flips += 1
        prev_v = k1
        if step % every == 0 or step == n_steps:
            times.append(step * dt)
            ys.append(y.copy())
            diags.append(diag)

    meta_extra = {}
    if n_steps >= 10 and sign_flips > 0.6 * n_steps:
        meta_extra["step_size_advisory"] = (
            f"velocity sign flipped on {sign_flips}/{n_steps} steps; dt may be too large"
        )
    return _as_trajectory(kind, np.array(times), ys, diags, params, meta_extra)


def _as_trajectory(kind, times, ys, diags, params, meta_extra=None) -> Trajectory:
    Y = np.vstack(ys)
    M = params.M
    if kind == "ferro_slice":
        slice_m = Y[:, :M]
        slice_eps = Y[:, M:]
        m = slice_m.mean(axis=1)
        eps = slice_eps.mean(axis=1)
        E = -(params.J0 / 2.0) * (slice_m**2).mean(axis=1)
    elif kind in ("slow", "slow_approx"):
        m = Y[:, 0]
        eps = np.full_like(m, np.nan)
        slice_m = slice_eps = None
        E = -(params.J0 / 2.0) * m * m
    else:
        m = Y[:, 0]
        eps = Y[:, 1]
        slice_m = slice_eps = None
        E = -(params.J0 / 2.0) * m * m
    diagnostics = {}
    for key in _DIAG_KEYS:
        if any(key in d for d in diags):
            diagnostics[key] = np.array([d.get(key, math.nan) for d in diags])
    meta = {
        "kind": kind,
        "params": {
            "N": params.N, "M": params.M, "beta": params.beta, "gamma": params.gamma,
            "h": params.h, "J0": params.J0, "tau": params.tau, "B": params.B,
        },
    }
    if meta_extra:
        meta.update(meta_extra)
    return Trajectory(
        times=times, m=m, E=E, eps=eps, meta=meta,
        slice_m=slice_m, slice_eps=slice_eps,
        diagnostics=diagnostics or None,
    )


def relaxed_eps(m: float, params: ModelParams, tol: float = 1e-12) -> float:
    """Bond observable on its nullcline at fixed m: the solution of
    eps = m Q+ + (1 + C(m, eps)) Q- / 2, i.e. where the eps-drift vanishes."""
    Qp, Qm = q_pm(m, params)

    def g(eps: float) -> float:
        d: dict = {}
        C = _closure_C(m, eps, params.M, None, d)
        return m * Qp + 0.5 * (1.0 + C) * Qm - eps

    lo = max(2.0 * abs(m) - 1.0, -1.0) + 1e-9
    hi = 1.0 - 1e-12
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0.0:
        raise FlowError(f"no eps nullcline bracket for m = {m}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo < tol:
            return mid
        if glo * gm < 0.0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def ferro_fixed_point(
    params: ModelParams, m_seed: float, tol: float = 1e-12
) -> tuple[float, float, float]:
    """Self-consistent stationary point (m*, eps*, C*) of the ferro flow at
    finite M, found by rootfinding the m-drift along the eps nullcline.

    m_seed (e.g. the equilibrium magnetization) locates the bracket.
    """

    def drift_m(m: float) -> float:
        eps = relaxed_eps(m, params)
        d: dict = {}
        C = _closure_C(m, eps, params.M, None, d)
        Qp, Qm = q_pm(m, params)
        a = params.beta * (params.h + params.J0 * m) / params.M
        return 0.5 * (1 + C) * Qp + m * Qm - m + 0.5 * (1 - C) * math.tanh(a)

    # expand a bracket around the seed
    width = 0.05
    lo = hi = m_seed
    flo = fhi = drift_m(m_seed)
    for _ in range(30):
        lo = max(-1.0 + 1e-9, m_seed - width)
        hi = min(1.0 - 1e-9, m_seed + width)
        flo, fhi = drift_m(lo), drift_m(hi)
        if flo * fhi <= 0.0:
            break
        width *= 2.0
    else:
        raise FlowError(f"no fixed-point bracket around m_seed = {m_seed}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = drift_m(mid)
        if fm == 0.0 or hi - lo < tol:
            lo = hi = mid
            break
        if flo * fm < 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    m_star = 0.5 * (lo + hi)
    eps_star = relaxed_eps(m_star, params)
    d: dict = {}
    C_star = _closure_C(m_star, eps_star, params.M, None, d)
    return m_star, eps_star, C_star
