"""Closed-form surfaces, orderings, and generator certificates."""

import math

import numpy as np
import pytest

import drawdown as dd
from drawdown import valuefn as vf
from drawdown.errors import ScaleTooSmall, StateOutsideDomain

P = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=1.2, alpha=0.3)
SEV = dd.Exponential(rate=1.0)
ALPHA = P.alpha


@pytest.fixture(scope="module")
def problem():
    return dd.DrawdownProblem(P, SEV)


@pytest.fixture(scope="module")
def constants(problem):
    return problem.constants


class TestPsiD:
    def test_one_on_barrier(self, problem):
        for m in np.linspace(0.2, 8.0, 100):
            assert vf.psi_D(ALPHA * m, m, problem.rho_D, ALPHA) == 1.0

    def test_alpha_zero_pure_ruin(self, problem):
        rho = problem.rho_D
        for x in (0.0, 1.0, 3.7):
            got = vf.psi_D(x, 10.0, rho, 0.0)
            assert abs(got - math.exp(-rho * x)) < 1e-12

    def test_vanishes_along_diagonal(self, problem):
        m = 50.0 / problem.rho_D
        assert vf.psi_D(m, m, problem.rho_D, ALPHA) < 1e-8

    def test_domain_guard(self, problem):
        with pytest.raises(StateOutsideDomain):
            vf.psi_D(3.0, 2.0, problem.rho_D, ALPHA)

    def test_monotonicity_on_grid(self, problem):
        rho = problem.rho_D
        for m in (1.0, 2.5, 6.0):
            xs = np.linspace(ALPHA * m, m, 50)
            vals = [vf.psi_D(x, m, rho, ALPHA) for x in xs]
            assert all(a > b for a, b in zip(vals, vals[1:]))
        for x in (0.9, 1.5):
            ms = np.linspace(x, 4 * x, 40)
            vals = [vf.psi_D(x, m, rho, ALPHA) for m in ms]
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_values_in_unit_interval(self, problem):
        for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 10, 10):
            v = vf.psi_D(x, m, problem.rho_D, ALPHA)
            assert 0.0 <= v <= 1.0


class TestBoundSurfaces:
    def test_psibar_n_dominates_psi_D(self, problem):
        n = 16.0
        rho_n = problem.rho_n(n)
        for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 8, 8):
            assert (vf.psibar_n(x, m, rho_n, ALPHA)
                    >= vf.psi_D(x, m, problem.rho_D, ALPHA) - 1e-14)

    def test_psibar_n_tends_to_psi_D(self, problem):
        x, m = 2.0, 3.0
        gaps = []
        for n in (16.0, 256.0, 4096.0):
            gaps.append(vf.psibar_n(x, m, problem.rho_n(n), ALPHA)
                        - vf.psi_D(x, m, problem.rho_D, ALPHA))
        assert gaps[0] > gaps[1] > gaps[2] > 0.0
        assert gaps[2] < gaps[0] / 8.0

    def test_u_n_scale_guard(self, problem, constants):
        with pytest.raises(ScaleTooSmall):
            vf.u_n(2.0, 2.0, float(constants.N_lemma32 - 1), constants,
                   ALPHA)

    def test_ell_n_scale_guard(self, problem, constants):
        with pytest.raises(ScaleTooSmall):
            vf.ell_n(2.0, 2.0, float(constants.N_lower - 1), constants,
                     ALPHA)

    def test_ordering_u_psibar_psi(self, problem, constants):
        n = float(constants.N_prime)
        rho_n = problem.rho_n(n)
        for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 8, 8):
            u = vf.u_n(x, m, n, constants, ALPHA)
            bar = vf.psibar_n(x, m, rho_n, ALPHA)
            psi = vf.psi_D(x, m, problem.rho_D, ALPHA)
            assert u >= bar - 1e-13
            assert bar >= psi - 1e-13

    def test_ell_n_below_psi_D_and_barrier_jump(self, problem, constants):
        n = float(constants.N_prime)
        m = 2.0
        assert vf.ell_n(ALPHA * m, m, n, constants, ALPHA) == pytest.approx(
            1.0 - constants.delta / math.sqrt(n))
        for x in np.linspace(ALPHA * m, m, 20):
            assert (vf.ell_n(x, m, n, constants, ALPHA)
                    <= vf.psi_D(x, m, problem.rho_D, ALPHA) + 1e-15)

    def test_sandwich_and_psibar_Dn(self, problem, constants):
        n = float(constants.N_prime)
        rho_dn = problem.rho_n_of_RD(n)
        for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 10, 10):
            ell = vf.ell_n(x, m, n, constants, ALPHA)
            u = vf.u_n(x, m, n, constants, ALPHA)
            dn_val = vf.psibar_Dn(x, m, rho_dn, ALPHA)
            bar = vf.psibar_n(x, m, problem.rho_n(n), ALPHA)
            assert ell <= dn_val <= u + 1e-13
            assert ell <= bar <= u + 1e-13

    @pytest.mark.parametrize("mult", [1, 4, 16])
    def test_gap_bound(self, problem, constants, mult):
        n = float(constants.N_prime * mult)
        worst = max(
            vf.u_n(x, m, n, constants, ALPHA)
            - vf.ell_n(x, m, n, constants, ALPHA)
            for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 10, 10))
        assert worst <= 2.0 * constants.C_prime / math.sqrt(n)

    def test_boundary_dm_exact_zero(self, problem, constants):
        n = float(constants.N_prime)
        surf_u = vf.DrawdownSurface(rho=problem.rho_n(n), alpha=ALPHA)
        surf_l = vf.DrawdownSurface(
            rho=problem.rho_D, alpha=ALPHA,
            factor=1.0 - constants.delta / math.sqrt(n))
        for m in np.linspace(0.05, 12.0, 100):
            assert abs(surf_u.dm(m, m)) < 1e-12
            assert abs(surf_l.dm(m, m)) < 1e-12

    def test_dm_finite_difference_crosscheck(self, problem):
        surf = vf.DrawdownSurface(rho=0.4, alpha=0.3)
        x, m, h = 1.7, 2.9, 1e-6
        fd = (surf.value(x, m + h) - surf.value(x, m - h)) / (2 * h)
        assert surf.dm(x, m) == pytest.approx(fd, abs=1e-6)

    def test_dx_finite_difference_crosscheck(self, problem):
        surf = vf.DrawdownSurface(rho=0.4, alpha=0.3)
        x, m, h = 1.7, 2.9, 1e-6
        fd = (surf.value(x + h, m) - surf.value(x - h, m)) / (2 * h)
        assert surf.dx(x, m) == pytest.approx(fd, abs=1e-6)


class TestLundberg:
    def test_one_on_barrier(self, problem):
        m = 2.0
        assert vf.lundberg_bound(ALPHA * m, m, dd.Full(), P, SEV) == 1.0

    def test_decreasing_in_x(self, problem):
        vals = [vf.lundberg_bound(x, 3.0, dd.Full(), P, SEV)
                for x in np.linspace(0.9, 3.0, 10)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_full_retention_value(self, problem):
        # J = 1/6 for this market, so the bound at x - alpha m = 5 is e^{-5/6}
        m = 5.0 / (1 - ALPHA)
        got = vf.lundberg_bound(m, m, dd.Full(), P, SEV)
        assert got == pytest.approx(math.exp(-5.0 / 6.0), rel=1e-9)


class TestGenerator:
    def test_supersolution_certificate(self, problem):
        n = 64.0
        rho_n = problem.rho_n(n)
        surf = vf.DrawdownSurface(rho=rho_n, alpha=ALPHA)
        R = problem.max_adjust_retention(n)
        worst = max(
            vf.apply_generator_n(surf, R, n, P, SEV, x, m)
            for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 6, 6))
        assert worst <= 1e-8

    def test_subsolution_certificate(self, problem, constants):
        n = float(constants.N_prime)
        surf = vf.DrawdownSurface(
            rho=problem.rho_D, alpha=ALPHA,
            factor=1.0 - constants.delta / math.sqrt(n))
        for R in (dd.Full(), problem.R_D, dd.Cap(d=1.0)):
            worst = min(
                vf.apply_generator_n(surf, R, n, P, SEV, x, m)
                for (x, m) in vf.certification_grid(ALPHA, problem.rho_D,
                                                    6, 6))
            assert worst >= -1e-8

    def test_diffusion_strategy_certificate(self, problem, constants):
        n = float(constants.N_prime)
        surf = vf.DrawdownSurface(rho=problem.rho_n_of_RD(n), alpha=ALPHA)
        worst = max(
            vf.apply_generator_n(surf, problem.R_D, n, P, SEV, x, m)
            for (x, m) in vf.certification_grid(ALPHA, problem.rho_D, 6, 6))
        assert worst <= 1e-8

    def test_generator_domain_guard(self, problem):
        surf = vf.DrawdownSurface(rho=0.4, alpha=ALPHA)
        with pytest.raises(StateOutsideDomain):
            vf.apply_generator_n(surf, dd.Full(), 4.0, P, SEV, 3.0, 2.0)


class TestBoundBundle:
    def test_bundle_fields_and_ordering(self, problem, constants):
        n = float(constants.N_prime)
        b = problem.bounds(2.0, 2.0, n)
        assert 0.0 <= b.ell_n <= b.psibar_Dn <= b.u_n <= 1.0
        assert b.ell_n <= b.psi_D <= b.psibar_n
        d = b.as_dict()
        assert set(d) == {"psi_D", "psibar_n", "u_n", "ell_n", "psibar_Dn",
                          "lundberg"}
