"""Continuous-time Glauber Monte Carlo for the Trotter lattice.

Each attempt picks a spin (i, k) uniformly at random over the N x M lattice
and flips it with probability 1/2 [1 - s_ik tanh(beta h_ik)]; time advances
by tau/(NM) per attempt, so every spin is attempted once per time tau on
average. Trajectories are reproducible bit-exactly from (seed, spec): all
randomness comes from counter-based streams keyed by the seed, with separate
substreams for initialization and dynamics.

The attempt loop is a numba kernel. Because the local field only depends on
(S_k - s_ik) and on the sum of the two Trotter neighbors, tanh is evaluated
from a precomputed table indexed by those integers instead of per attempt.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .lattice import TrotterConfig, observables_avg
from .model import ModelParams
from .rngstream import TAG_DYNAMICS, TAG_INIT, stream_key, uniforms

INIT_MODES = ("uniform_up", "magnetized", "slice_replicated", "random")


class TruncatedRunError(RuntimeError):
    """Raised when a run hits its attempt budget; carries the partial result."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class InitSpec:
    """Initial-condition recipe.

    Modes:
        uniform_up:            all spins +1.
        magnetized:            each spin +1 independently with prob (1+m0)/2.
        slice_replicated:      one magnetized N-vector copied to all M slices,
                               so the bond observable starts at exactly 1.
        random:                magnetized with m0 = 0.
    """

    mode: str = "random"
    m0: float = 0.0

    def __post_init__(self):
        if self.mode not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.mode!r}; expected one of {INIT_MODES}")
        if abs(self.m0) > 1.0:
            raise ValueError(f"m0 must lie in [-1, 1], got {self.m0}")


@dataclass(frozen=True)
class SimSpec:
    """One trajectory: model parameters, horizon, sampling grid and seed."""

    params: ModelParams
    t_end: float
    record_dt: float
    seed: int
    init: InitSpec = field(default_factory=InitSpec)
    record_slices: bool = False
    max_attempts: int | None = None

    def __post_init__(self):
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if not 0.0 < self.record_dt <= self.t_end:
            raise ValueError(
                f"record_dt must satisfy 0 < record_dt <= t_end, got {self.record_dt}"
            )


@dataclass
class Trajectory:
    """Time series of macroscopic observables plus run metadata."""

    times: np.ndarray
    m: np.ndarray
    E: np.ndarray
    eps: np.ndarray
    meta: dict
    slice_m: np.ndarray | None = None
    slice_eps: np.ndarray | None = None
    diagnostics: dict | None = None

    def __len__(self) -> int:
        return len(self.times)


def init_config(init: InitSpec, params: ModelParams, seed: int) -> TrotterConfig:
    """Draw the initial configuration from the init substream of `seed`."""
    N, M = params.N, params.M
    if init.mode == "uniform_up":
        return TrotterConfig(np.ones((N, M), dtype=np.int8))
    key = stream_key(seed, TAG_INIT)
    p_up = 0.5 * (1.0 + init.m0)
    if init.mode == "slice_replicated":
        u = uniforms(key, 0, N)
        col = np.where(u < p_up, 1, -1).astype(np.int8)
        return TrotterConfig(np.repeat(col[:, None], M, axis=1))
    if init.mode == "random":
        p_up = 0.5
    u = uniforms(key, 0, N * M).reshape(N, M)
    return TrotterConfig(np.where(u < p_up, 1, -1).astype(np.int8))


@njit(cache=True, nogil=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _attempt_kernel(
    spins,
    slice_sums,
    bond_sums,
    key,
    n_attempts,
    rec_counts,
    rec_S,
    rec_W,
    tanh_table,
):
    """Run n_attempts Glauber attempts in place.

    tanh_table[nb, v] holds tanh(beta*h_ik) for neighbor sum 2*(nb-1) and
    field count v = (S_k - s_ik) + N + 1. Snapshots of the slice and bond
    sums are written whenever the completed-attempt count reaches an entry
    of rec_counts (sorted ascending, entries > 0).
    """
    N, M = spins.shape
    total_u = np.uint64(N * M)
    gold = np.uint64(0x9E3779B97F4A7C15)
    one = np.uint64(1)
    two = np.uint64(2)
    inv53 = 1.0 / 9007199254740992.0
    accepted = 0
    rp = 0
    n_rec = rec_counts.shape[0]
    for a in range(n_attempts):
        ca = two * np.uint64(a)
        site = np.int64(_mix(key + gold * (ca + one)) % total_u)
        u = (_mix(key + gold * (ca + two)) >> np.uint64(11)) * inv53
        i = site // M
        k = site % M
        s = np.int64(spins[i, k])
        kp = k + 1 if k + 1 < M else 0
        km = k - 1 if k > 0 else M - 1
        nb = np.int64(spins[i, kp]) + np.int64(spins[i, km])
        th = tanh_table[(nb >> 1) + 1, slice_sums[k] - s + N + 1]
        rate = 0.5 * (1.0 - s * th)
        if u < rate:
            spins[i, k] = -s
            slice_sums[k] -= 2 * s
            bond_sums[k] -= 2 * s * np.int64(spins[i, kp])
            bond_sums[km] -= 2 * s * np.int64(spins[i, km])
            accepted += 1
        done = a + 1
        while rp < n_rec and rec_counts[rp] == done:
            for q in range(M):
                rec_S[rp, q] = slice_sums[q]
                rec_W[rp, q] = bond_sums[q]
            rp += 1
    return accepted


@njit(cache=True, nogil=True)
def _occupancy_kernel(spins, slice_sums, bond_sums, key, n_attempts, burn_in, hist, tanh_table):
    """Attempt loop that also tallies how many attempts each configuration
    occupies (after burn_in). Configurations are indexed by the bit pattern
    of (spin == +1) in row-major order; intended for small N*M only.
    """
    N, M = spins.shape
    total_u = np.uint64(N * M)
    gold = np.uint64(0x9E3779B97F4A7C15)
    one = np.uint64(1)
    two = np.uint64(2)
    inv53 = 1.0 / 9007199254740992.0
    state = 0
    for i in range(N):
        for k in range(M):
            if spins[i, k] > 0:
                state |= 1 << (i * M + k)
    for a in range(n_attempts):
        ca = two * np.uint64(a)
        site = np.int64(_mix(key + gold * (ca + one)) % total_u)
        u = (_mix(key + gold * (ca + two)) >> np.uint64(11)) * inv53
        i = site // M
        k = site % M
        s = np.int64(spins[i, k])
        kp = k + 1 if k + 1 < M else 0
        km = k - 1 if k > 0 else M - 1
        nb = np.int64(spins[i, kp]) + np.int64(spins[i, km])
        th = tanh_table[(nb >> 1) + 1, slice_sums[k] - s + N + 1]
        rate = 0.5 * (1.0 - s * th)
        if u < rate:
            spins[i, k] = -s
            slice_sums[k] -= 2 * s
            bond_sums[k] -= 2 * s * np.int64(spins[i, kp])
            bond_sums[km] -= 2 * s * np.int64(spins[i, km])
            state ^= 1 << (i * M + k)
        if a >= burn_in:
            hist[state] += 1


def _tanh_table(params: ModelParams) -> np.ndarray:
    """tanh(beta*h_ik) for all reachable integer field counts.

    Row nb+1 covers neighbor sum 2*nb (nb in {-1, 0, 1}); column v covers
    S_k - s_ik = v - N - 1.
    """
    N, M = params.N, params.M
    B = params.require_finite_bond()
    v = np.arange(-N - 1, N + 2, dtype=np.float64)
    args = np.empty((3, v.size))
    for j, nb in enumerate((-2, 0, 2)):
        args[j] = params.beta * params.J0 * v / (N * M) + B * nb + params.beta * params.h / M
    return np.tanh(np.clip(args, -40.0, 40.0))


def _record_counts(spec: SimSpec) -> tuple[np.ndarray, int]:
    """Attempt counts at which to snapshot, and the total attempt count.

    Counts are deduplicated so recorded times stay strictly increasing even
    when record_dt is finer than the time advance of one attempt.
    """
    params = spec.params
    per_attempt = params.tau / (params.N * params.M)
    n_attempts = int(round(spec.t_end / per_attempt))
    n_rec = int(math.floor(spec.t_end / spec.record_dt + 1e-9))
    counts = np.round(np.arange(1, n_rec + 1) * spec.record_dt / per_attempt).astype(np.int64)
    counts = np.unique(np.minimum(np.maximum(counts, 1), n_attempts))
    return counts, n_attempts


def run(spec: SimSpec) -> Trajectory:
    """Simulate one trajectory.

    Raises TruncatedRunError (carrying the partial trajectory) if the total
    attempt count would exceed spec.max_attempts.
    """
    params = spec.params
    table = _tanh_table(params)  # rejects gamma = 0
    config = init_config(spec.init, params, spec.seed)
    init_obs = observables_avg(config, params)
    counts, n_attempts = _record_counts(spec)

    truncated = False
    if spec.max_attempts is not None and n_attempts > spec.max_attempts:
        truncated = True
        full_counts = counts
        counts = counts[counts <= spec.max_attempts]
        n_run = spec.max_attempts
    else:
        full_counts = counts
        n_run = n_attempts

    M = params.M
    S0 = config.slice_sums.copy()
    W0 = config.bond_sums.copy()
    rec_S = np.zeros((len(counts), M), dtype=np.int64)
    rec_W = np.zeros((len(counts), M), dtype=np.int64)
    key = stream_key(spec.seed, TAG_DYNAMICS)
    t0 = time.perf_counter()
    accepted = _attempt_kernel(
        config.spins, config.slice_sums, config.bond_sums,
        key, n_run, counts, rec_S, rec_W, table,
    )
    wall = time.perf_counter() - t0

    per_attempt = params.tau / (params.N * params.M)
    times = np.concatenate(([0.0], counts * per_attempt))
    S = np.vstack([S0[None, :], rec_S])
    W = np.vstack([W0[None, :], rec_W])

    N = params.N
    m = S.sum(axis=1) / (N * M)
    eps = W.sum(axis=1) / (N * M)
    E = -(params.J0 / (2.0 * N * N * M)) * (S.astype(np.float64) ** 2 - N).sum(axis=1)

    meta = {
        "params": {
            "N": params.N, "M": params.M, "beta": params.beta, "gamma": params.gamma,
            "h": params.h, "J0": params.J0, "tau": params.tau, "B": params.B,
        },
        "seed": spec.seed,
        "t_end": spec.t_end,
        "record_dt": spec.record_dt,
        "init": {"mode": spec.init.mode, "m0": spec.init.m0},
        "init_observables": {"m": init_obs.m, "E": init_obs.E, "eps": init_obs.Eps},
        "attempts": int(n_run),
        "accepted": int(accepted),
        "wall_time_s": wall,
        "truncated": truncated,
    }

    traj = Trajectory(times=times, m=m, E=E, eps=eps, meta=meta)
    if spec.record_slices:
        traj.slice_m = S.astype(np.float64) / N
        traj.slice_eps = W.astype(np.float64) / N
    if truncated:
        raise TruncatedRunError(
            f"attempt budget exhausted: needed {n_attempts} attempts for "
            f"t_end={spec.t_end} but max_attempts={spec.max_attempts}; "
            f"recorded {len(counts)} of {len(full_counts)} samples",
            traj,
        )
    return traj


def run_ensemble(specs: list[SimSpec], workers: int | None = None) -> list[Trajectory]:
    """Run independent trajectories, in parallel threads when workers > 1.

    The kernel releases the GIL, so threads scale; results keep the order
    of `specs`.
    """
    if workers is None:
        workers = min(len(specs), 8)
    if workers <= 1 or len(specs) <= 1:
        return [run(s) for s in specs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, specs))


def run_occupancy(spec: SimSpec, n_attempts: int, burn_in: int = 0) -> np.ndarray:
    """Audit helper: per-configuration occupancy counts over a run.

    Returns an array of length 2**(N*M) counting, for each configuration,
    the number of post-burn-in attempts after which the system sat in it.
    Only sensible for N*M small enough to enumerate.
    """
    params = spec.params
    nm = params.N * params.M
    if nm > 20:
        raise ValueError(f"occupancy enumeration needs N*M <= 20, got {nm}")
    table = _tanh_table(params)
    config = init_config(spec.init, params, spec.seed)
    hist = np.zeros(2**nm, dtype=np.int64)
    key = stream_key(spec.seed, TAG_DYNAMICS)
    _occupancy_kernel(
        config.spins, config.slice_sums, config.bond_sums,
        key, n_attempts, burn_in, hist, table,
    )
    return hist
