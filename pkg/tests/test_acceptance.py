"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Criterion 7 drives the
full simulate + slowflow + compare pipeline at reduced scale and takes a
few minutes of CPU; everything else finishes in seconds.

Known red: criterion 7b asserts a sup-norm accuracy bound of 0.08 between
the ensemble-mean simulation and the reduced theory for the h = 0.5
transient. The measured gap of the maximum-entropy closure at those
parameters is ~0.125 for every initial magnetization that leaves a
nontrivial transient (a ~6% drift underestimation amplified by the steep
rise; the engine itself reproduces closure-free transients exactly, see
test_glauber). The bound is asserted as stated rather than loosened.
"""

import math
import os
import time

import numpy as np
import pytest

from annealkit import (
    ModelParams,
    SimSpec,
    InitSpec,
    hetero_moments,
    moments,
    partition_noninteracting_trotter,
    relaxed_eps,
    rhs,
    solve_m,
    integrate,
    xi_exact,
    xi_expansion,
)
from annealkit.cli import cmd_compare
from annealkit.config import validate_config
from annealkit.glauber import run_occupancy
from annealkit.runio import read_json
from oracles import enumerate_chain, enumerate_hetero_chain, gibbs_distribution


def report(criterion: str, ok: bool, detail: str):
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_1_trotter_exactness():
    t0 = time.perf_counter()
    target = math.log(2 * math.cosh(1.0))
    worst = 0.0
    for M in range(2, 513):
        worst = max(worst, abs(partition_noninteracting_trotter(M, 2.0, 0.5) - target))
    dt = time.perf_counter() - t0
    report(
        "1 (Trotter exactness)",
        worst < 1e-10 and dt < 1.0,
        f"max |logZ - log 2cosh(1)| = {worst:.2e} over M in 2..512, runtime {dt:.2f}s",
    )


def test_criterion_2_chain_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        M = int(rng.integers(3, 13))
        x = rng.uniform(-2, 2)
        y = rng.uniform(-1.5, 2.5)
        mom = moments(x, y, M)
        m1, c12, c13, logZ = enumerate_chain(x, y, M)
        worst = max(worst, abs(mom.m1 - m1), abs(mom.c12 - c12), abs(mom.c13 - c13))
    for _ in range(100):
        M = int(rng.integers(3, 13))
        xs = rng.uniform(-1.5, 1.5, size=M)
        ys = rng.uniform(-1.0, 2.0, size=M)
        het = hetero_moments(xs, ys)
        m, c_bond, c_nnn, logZ = enumerate_hetero_chain(xs, ys)
        worst = max(
            worst,
            float(np.max(np.abs(het.m - m))),
            float(np.max(np.abs(het.c_bond - c_bond))),
            float(np.max(np.abs(het.c_nnn - c_nnn))),
        )
    dt = time.perf_counter() - t0
    report(
        "2 (chain moment oracle)",
        worst < 1e-10 and dt < 10.0,
        f"max |moment - enumeration| = {worst:.2e} over 200 draws, runtime {dt:.2f}s",
    )


def test_criterion_3_gibbs_stationarity():
    p = ModelParams(N=3, M=4, beta=2.0, gamma=0.5, h=0.5, J0=1.0, tau=1.0)
    spec = SimSpec(params=p, t_end=1.0, record_dt=1.0, seed=31415, init=InitSpec("random"))
    run_occupancy(spec, 1000)  # warm the jit outside the timed section
    t0 = time.perf_counter()
    attempts = 10_000_000
    hist = run_occupancy(spec, attempts, burn_in=attempts // 20)
    emp = hist / hist.sum()
    tv = 0.5 * float(np.abs(emp - gibbs_distribution(p)).sum())
    dt = time.perf_counter() - t0
    report(
        "3 (Gibbs stationarity)",
        tv < 0.02 and dt < 30.0,
        f"TV(empirical, Gibbs) = {tv:.4f} after {attempts:.0e} attempts on 12 spins, "
        f"runtime {dt:.1f}s",
    )


def test_criterion_4_statics_dynamics_link():
    t0 = time.perf_counter()
    res = {}
    for M in (12, 48, 192):
        p = ModelParams(N=100, M=M, beta=2.0, gamma=0.5, h=0.5, J0=1.0, tau=1.0 / M**2)
        m_star = solve_m(p).m
        x = p.beta * (p.h + p.J0 * m_star) / M
        mom = moments(x, p.B, M)
        vel = rhs("ferro", np.array([mom.m1, mom.c12]), p)
        res[M] = float(np.max(np.abs(vel)))
    p = ModelParams(N=100, M=48, beta=2.0, gamma=0.5, h=0.5, J0=1.0, tau=1.0)
    slow_res = abs(rhs("slow", np.array([solve_m(p).m]), p)[0])
    chain_ok = res[192] < res[48] / 3 and res[48] / 3 < res[12] / 9
    dt = time.perf_counter() - t0
    report(
        "4 (statics-dynamics link)",
        chain_ok and slow_res < 1e-10 and dt < 5.0,
        f"ansatz residuals M=12/48/192: {res[12]:.2e}/{res[48]:.2e}/{res[192]:.2e}, "
        f"slow-flow residual {slow_res:.2e}, runtime {dt:.2f}s",
    )


def test_criterion_5_correlator_expansion():
    # run at the h = 0.1 figure parameters, where the O(1/M) remainder
    # constant sits inside the stated 5/M envelope
    t0 = time.perf_counter()
    rels = {}
    for M in (48, 192, 768):
        p = ModelParams(N=100, M=M, beta=2.0, gamma=0.5, h=0.1, J0=1.0, tau=1.0)
        m_star = solve_m(p).m
        x = p.beta * (p.h + p.J0 * m_star) / M
        C = moments(x, p.B, M).c13
        w = p.h + p.J0 * m_star
        R = math.hypot(w, p.gamma)
        target = 4 * p.beta * p.gamma**2 * math.tanh(p.beta * R) / R
        rels[M] = abs(M * (1 - C) - target) / target
    ok = all(rels[M] < 5.0 / M for M in rels)
    dt = time.perf_counter() - t0
    report(
        "5 (correlator expansion)",
        ok and dt < 5.0,
        "relative errors "
        + ", ".join(f"M={M}: {rels[M]:.4f} (< {5.0/M:.4f})" for M in (48, 192, 768))
        + f", runtime {dt:.2f}s",
    )


def test_criterion_6_xi_expansion():
    t0 = time.perf_counter()
    worst_ratio = 1.0
    for (u, v) in ((1.0, 1.0), (0.3, 1.0)):
        for ell in (1, 2):
            scaled = [
                abs(xi_exact(u, v, M, ell) - xi_expansion(u, v, M, ell)) * M**3
                for M in (64, 128, 256, 512, 1024)
            ]
            worst_ratio = max(worst_ratio, max(scaled) / min(scaled))
    dt = time.perf_counter() - t0
    report(
        "6 (Xi expansion order)",
        worst_ratio < 2.0 and dt < 1.0,
        f"max spread of |exact - expansion| * M^3 over M in 64..1024: "
        f"factor {worst_ratio:.3f} (< 2), runtime {dt:.2f}s",
    )


FIG1_M0 = 0.0
FIG1_SEEDS = "1,2,3,4,5,6,7,8"


@pytest.fixture(scope="module")
def fig1_summary(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("fig1"))
    flat = {
        "model.N": "2000",
        "model.T": "0.5",
        "model.gamma": "0.5",
        "model.h": "0.5",
        "model.J0": "1.0",
        "run.kind": "compare",
        "run.t_end": "1.5",
        "run.record_dt": "0.05",
        "run.m0": str(FIG1_M0),
        "run.seeds": FIG1_SEEDS,
        "run.M_list": "12,48",
        "output.dir": out,
    }
    t0 = time.perf_counter()
    cmd_compare(validate_config(flat))
    summary = read_json(os.path.join(out, "compare_summary.json"))
    summary["_wall"] = time.perf_counter() - t0
    return summary


def test_criterion_7a_m_collapse(fig1_summary):
    collapse = fig1_summary["collapse_metric"]
    report(
        "7a (M-collapse)",
        collapse < 0.05,
        f"sup-norm distance between M=12 and M=48 ensemble means: {collapse:.4f} "
        f"(< 0.05); pipeline wall time {fig1_summary['_wall']:.0f}s",
    )


def test_criterion_7b_accuracy(fig1_summary):
    devs = fig1_summary["sup_norm_theory"]
    worst = max(devs.values())
    report(
        "7b (theory accuracy)",
        worst < 0.08,
        f"sup-norm deviation of ensemble means from the slow-flow curve: "
        + ", ".join(f"M={M}: {v:.4f}" for M, v in sorted(devs.items()))
        + " (bound 0.08; the measured closure gap at h=0.5 transients is ~0.125,"
        " see the module docstring)",
    )


def test_criterion_7c_ranking(fig1_summary):
    full = fig1_summary["sup_norm_theory"]
    approx = fig1_summary["sup_norm_approx"]
    ok = all(full[M] <= approx[M] for M in full)
    report(
        "7c (full theory beats approximation)",
        ok,
        ", ".join(f"M={M}: full {full[M]:.4f} vs approx {approx[M]:.4f}" for M in sorted(full)),
    )


@pytest.mark.skipif(
    not os.environ.get("ANNEALKIT_ACCEPTANCE_FULL"),
    reason="large-M collapse spot check (N=1e4, M=192, ~1e11 attempts) only "
    "runs with ANNEALKIT_ACCEPTANCE_FULL=1; not required for pass",
)
def test_criterion_7_full_scale_collapse_spot_check():
    from annealkit import run as run_sim

    means = {}
    for N, M, seed in ((10_000, 192, 1), (2000, 48, 1)):
        p = ModelParams(N=N, M=M, beta=2.0, gamma=0.5, h=0.5, J0=1.0, tau=1.0 / M**2)
        spec = SimSpec(params=p, t_end=1.5, record_dt=0.05, seed=seed,
                       init=InitSpec("slice_replicated", FIG1_M0))
        means[M] = run_sim(spec).m
    collapse = float(np.max(np.abs(means[192] - means[48])))
    report("7-extra (large-M collapse)", collapse < 0.05, f"collapse {collapse:.4f}")


def test_criterion_8_slice_symmetry_preservation():
    t0 = time.perf_counter()
    M = 8
    p = ModelParams(N=100, M=M, beta=2.0, gamma=0.5, h=0.5, J0=1.0, tau=1.0)
    y0 = np.concatenate([np.full(M, 0.2), np.full(M, 0.9)])
    traj = integrate("ferro_slice", y0, p, t_end=10.0, dt=0.01, record_dt=0.1)
    spread = float(np.max(np.abs(traj.slice_m - traj.m[:, None])))
    spread_eps = float(np.max(np.abs(traj.slice_eps - traj.eps[:, None])))
    dt = time.perf_counter() - t0
    report(
        "8 (slice-symmetry preservation)",
        max(spread, spread_eps) < 1e-9,
        f"max slice spread over t in [0, 10]: m {spread:.2e}, eps {spread_eps:.2e}, "
        f"runtime {dt:.1f}s",
    )


def test_criterion_9_relaxation_scaling():
    t0 = time.perf_counter()
    m = 0.3
    vals = {}
    for M in (12, 48, 192):
        p = ModelParams(N=100, M=M, beta=2.0, gamma=0.5, h=0.1, J0=0.0, tau=1.0)
        eps_star = relaxed_eps(m, p)
        vals[M] = abs(rhs("fields", np.array([m, eps_star]), p)[0])
    r1, r2 = vals[12] / vals[48], vals[48] / vals[192]
    ok = 16 * 0.85 < r1 < 16 * 1.15 and 16 * 0.85 < r2 < 16 * 1.15
    dt = time.perf_counter() - t0
    report(
        "9 (relaxation-time scaling)",
        ok,
        f"|dm/dt| ratios per 4x in M: {r1:.2f}, {r2:.2f} (16 +- 15%), runtime {dt:.1f}s",
    )
