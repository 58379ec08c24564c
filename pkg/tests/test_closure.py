import math

import numpy as np
import pytest

from annealkit import (
    InfeasibleTargetError,
    ModelParams,
    moments,
    hetero_moments,
    solve_m,
    solve_u,
    solve_xy,
    solve_xy_hetero,
)
from annealkit.transfer import moments_jacobian


class TestMomentsJacobian:
    def test_against_central_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            M = int(rng.integers(3, 60))
            x = rng.uniform(-1.0, 1.0)
            y = rng.uniform(-0.8, 2.5)
            J = moments_jacobian(x, y, M)
            h = 1e-6
            fd = np.empty((2, 2))
            for col, (dx, dy) in enumerate(((h, 0.0), (0.0, h))):
                hi = moments(x + dx, y + dy, M)
                lo = moments(x - dx, y - dy, M)
                fd[0, col] = (hi.m1 - lo.m1) / (2 * h)
                fd[1, col] = (hi.c12 - lo.c12) / (2 * h)
            np.testing.assert_allclose(J, fd, rtol=2e-5, atol=2e-7)


class TestSolveXY:
    def test_zero_magnetization_forces_x_zero(self):
        for eps in (-0.4, 0.1, 0.8):
            sol = solve_xy(0.0, eps, 8)
            assert abs(sol.x) < 1e-12
            mom = moments(0.0, sol.y, 8)
            assert mom.c12 == pytest.approx(eps, abs=1e-11)
            assert sol.C == pytest.approx(mom.c13, abs=1e-11)

    def test_equilibrium_forward_invert(self):
        # at the equilibrium field/bond values the solver must return them back
        p = ModelParams(N=100, M=48, beta=2.0, gamma=0.5, h=0.5, J0=1.0, tau=1.0)
        m_star = solve_m(p).m
        x_star = p.beta * (p.h + p.J0 * m_star) / p.M
        mom = moments(x_star, p.B, p.M)
        sol = solve_xy(mom.m1, mom.c12, p.M)
        assert sol.x == pytest.approx(x_star, abs=1e-8)
        assert sol.y == pytest.approx(p.B, abs=1e-8)

    def test_strong_bond_target_converges(self):
        sol = solve_xy(0.3, 0.99, 192)
        assert sol.residual < 1e-10
        assert sol.y > 1.0
        mom = moments(sol.x, sol.y, 192)
        assert mom.m1 == pytest.approx(0.3, abs=1e-10)
        assert mom.c12 == pytest.approx(0.99, abs=1e-10)

    def test_round_trip_small_chains(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            M = int(rng.integers(3, 13))
            x = rng.uniform(-1.5, 1.5)
            y = rng.uniform(-1.0, 2.0)
            mom = moments(x, y, M)
            sol = solve_xy(mom.m1, mom.c12, M)
            assert sol.x == pytest.approx(x, abs=1e-8)
            assert sol.y == pytest.approx(y, abs=1e-8)
            assert sol.C == pytest.approx(mom.c13, abs=1e-9)

    def test_round_trip_long_chains(self):
        rng = np.random.default_rng(13)
        for M in (48, 96, 192):
            for _ in range(10):
                x = rng.uniform(-4.0, 4.0) / M
                y = rng.uniform(0.2, 3.5)
                mom = moments(x, y, M)
                sol = solve_xy(mom.m1, mom.c12, M)
                assert sol.x == pytest.approx(x, abs=1e-8)
                assert sol.y == pytest.approx(y, abs=1e-8)

    def test_monotone_bond_recovery(self):
        # at fixed m, a larger bond correlator needs a larger y
        ys = [solve_xy(0.2, eps, 16).y for eps in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a < b for a, b in zip(ys, ys[1:]))

    @pytest.mark.parametrize(
        "m,eps,frag",
        [(1.2, 0.5, "|m| < 1"), (0.3, 1.0, "|eps| < 1"), (0.8, 0.1, "2|m| - 1")],
    )
    def test_infeasible_targets(self, m, eps, frag):
        with pytest.raises(InfeasibleTargetError, match=frag.replace("|", r"\|")):
            solve_xy(m, eps, 8)


class TestSolveXYHetero:
    def test_uniform_reduces_to_homogeneous(self):
        M = 6
        hom = solve_xy(0.25, 0.6, M)
        het = solve_xy_hetero(np.full(M, 0.25), np.full(M, 0.6))
        np.testing.assert_allclose(het.xs, hom.x, atol=1e-8)
        np.testing.assert_allclose(het.ys, hom.y, atol=1e-8)
        np.testing.assert_allclose(het.C, hom.C, atol=1e-8)

    def test_recovery_from_known_parameters(self):
        rng = np.random.default_rng(19)
        M = 6
        xs = rng.uniform(-0.5, 0.5, size=M)
        ys = rng.uniform(0.2, 1.2, size=M)
        target = hetero_moments(xs, ys)
        het = solve_xy_hetero(target.m, target.c_bond)
        np.testing.assert_allclose(het.xs, xs, atol=1e-8)
        np.testing.assert_allclose(het.ys, ys, atol=1e-8)
        np.testing.assert_allclose(het.C, target.c_nnn, atol=1e-8)

    def test_boundary_rejected(self):
        M = 5
        eps = np.full(M, 0.5)
        eps[2] = 1.0
        with pytest.raises(InfeasibleTargetError, match="slice 2"):
            solve_xy_hetero(np.zeros(M), eps)

    def test_pairwise_bound_rejected(self):
        # strongly bonded neighbors cannot carry wildly different m_q
        M = 4
        m = np.array([0.3, -0.3, 0.3, -0.3])
        with pytest.raises(InfeasibleTargetError, match=r"m_q \- m_q\+1"):
            solve_xy_hetero(m, np.full(M, 0.8))


def bisect_slow(m, b, lo, hi, tol=1e-14):
    def g(u):
        R = math.hypot(u, b)
        return u * math.tanh(R) / R - m

    flo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = g(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


class TestSolveU:
    def test_zero_magnetization(self):
        root = solve_u(0.0, 1.0)
        assert root.u == pytest.approx(0.0, abs=1e-10)
        assert root.branch_count >= 1

    def test_against_independent_bisection(self):
        expected = bisect_slow(0.5, 1.0, 0.0, 10.0)
        root = solve_u(0.5, 1.0)
        assert root.u == pytest.approx(expected, abs=1e-9)
        assert root.residual < 1e-10

    def test_round_trip(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            b = rng.uniform(0.2, 3.0)
            u = rng.uniform(-5.0, 5.0)
            R = math.hypot(u, b)
            m = u * math.tanh(R) / R
            root = solve_u(m, b)
            assert root.u == pytest.approx(u, abs=1e-7)

    def test_unattainable_target_errors_fast(self):
        with pytest.raises(InfeasibleTargetError):
            solve_u(0.9999, 1.0)

    def test_sign_hint_used_for_ties(self):
        # craft a symmetric two-root situation artificially: m = 0 has the
        # single root 0, so the hint must not matter there
        assert solve_u(0.0, 0.5, sign_hint=-1.0).u == pytest.approx(0.0, abs=1e-10)
