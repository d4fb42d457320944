"""Picard fixed-point oracle for the fixed-barrier hitting probability."""

import math

import numpy as np
import pytest
from scipy import integrate as sci_integrate

import drawdown as dd
from drawdown import oracle

P = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=1.2, alpha=0.3)
SEV = dd.Exponential(rate=1.0)
M = 3.0


class TestPicardStep:
    def test_base_iterate_is_zero(self):
        grid = oracle.picard_grid(dd.Full(), P, SEV, M)
        assert np.all(grid.values == 0.0)
        assert grid.x[0] == pytest.approx(P.alpha * M)

    def test_psi1_full_retention_closed_form(self):
        # first claim must beat the premium race:
        # psi_1(x) = lam/(lam + mu p_R) * e^{-(x - alpha m)}
        grid = oracle.picard_grid(dd.Full(), P, SEV, M, nodes=4096)
        g1 = oracle.picard_step(grid, dd.Full(), P, SEV, M)
        exact = (1.0 / 2.2) * np.exp(-(grid.x - P.alpha * M))
        assert np.max(np.abs(g1.values - exact)) < 2e-4

    def test_psi1_capped_retention_vs_quadrature(self):
        R = dd.Cap(d=1.5)
        p_R = dd.net_profit_check(R, P, SEV).p_R
        grid = oracle.picard_grid(R, P, SEV, M, nodes=4096)
        g1 = oracle.picard_step(grid, R, P, SEV, M)
        for idx in (0, 400, 1200):
            x = grid.x[idx]

            def integrand(t):
                u = x - P.alpha * M + p_R * t
                surv = math.exp(-u) if u < 1.5 else 0.0  # P(min(Y,1.5) > u)
                return math.exp(-t) * surv

            want, _ = sci_integrate.quad(integrand, 0.0,
                                         (1.5 - (x - P.alpha * M)) / p_R
                                         if x - P.alpha * M < 1.5 else 0.0,
                                         epsabs=1e-12)
            assert g1.values[idx] == pytest.approx(want, abs=1e-3)

    def test_lundberg_domination_every_iteration(self):
        R = dd.Full()
        grid = oracle.picard_grid(R, P, SEV, M)
        bound = np.exp(-grid.J * (grid.x - P.alpha * M))
        for _ in range(12):
            grid = oracle.picard_step(grid, R, P, SEV, M)
            assert np.all(grid.values <= bound + 1e-12)

    def test_monotone_in_k_and_x(self):
        R = dd.Proportional(q=0.8)
        grid = oracle.picard_grid(R, P, SEV, M)
        prev = grid.values
        for _ in range(10):
            grid = oracle.picard_step(grid, R, P, SEV, M)
            assert np.all(grid.values >= prev - 1e-15)
            assert np.all(np.diff(grid.values) <= 1e-15)
            prev = grid.values


class TestPicardSolve:
    def test_converged_and_monotone_trace(self):
        R = dd.Full()
        sol = oracle.picard_solve(R, P, SEV, M, tol=1e-7)
        assert sol.sup_change < 1e-7
        # rerunning a few manual steps shows nonincreasing sup-changes
        grid = oracle.picard_grid(R, P, SEV, M)
        changes = []
        for _ in range(30):
            nxt = oracle.picard_step(grid, R, P, SEV, M)
            changes.append(float(np.max(np.abs(nxt.values - grid.values))))
            grid = nxt
        burn = changes[3:]
        assert all(a >= b - 1e-12 for a, b in zip(burn, burn[1:]))

    def test_agrees_with_fixed_ruin_mc(self):
        R = dd.Full()
        sol = oracle.picard_solve(R, P, SEV, M, tol=1e-7)
        rho_D = dd.solve_rho_D(P, SEV)
        for x in (1.0, 2.0, 3.0):
            cfg = dd.SimConfig(n=1.0, retention=R, x0=x, m0=M, paths=30000,
                               seed=17, barrier_mode="fixed_ruin",
                               barrier_mult=16.0)
            est = dd.mc_estimate(cfg, P, SEV, rho_D=rho_D)
            assert abs(est.p_hat - sol.interp(x)) < 3.0 * est.se + 1e-3

    def test_deep_tail_negligible(self):
        # alpha = 0 and x far beyond 30/J
        p0 = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=1.2,
                             alpha=0.0)
        R = dd.Full()
        sol = oracle.picard_solve(R, p0, SEV, 0.0, tol=1e-7)
        J = sol.J
        deep = sol.interp(32.0 / J)
        assert deep < 1e-8

    def test_grid_refinement_first_order(self):
        R = dd.Full()
        coarse = oracle.picard_solve(R, P, SEV, M, tol=1e-9, nodes=512)
        fine = oracle.picard_solve(R, P, SEV, M, tol=1e-9, nodes=1024)
        finer = oracle.picard_solve(R, P, SEV, M, tol=1e-9, nodes=2048)
        probe = np.linspace(P.alpha * M, M + 4.0, 40)
        err_coarse = np.max(np.abs(coarse.interp(probe) - fine.interp(probe)))
        err_fine = np.max(np.abs(fine.interp(probe) - finer.interp(probe)))
        assert err_fine < 4.0 * err_coarse

    def test_truncation_budget_small_at_desk_states(self):
        sol = oracle.picard_solve(dd.Full(), P, SEV, M, tol=1e-7)
        idx = np.searchsorted(sol.x, M)
        assert sol.trunc_budget[idx] < 1e-30

    def test_deterministic_severity_atom_path(self):
        p = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=3.5,
                            alpha=0.3)
        s = dd.Deterministic(b=3.0)
        sol = oracle.picard_solve(dd.Full(), p, s, M, tol=1e-7)
        assert np.all((0.0 <= sol.values) & (sol.values <= 1.0))
        assert np.all(np.diff(sol.values) <= 1e-15)
        rho_D = dd.solve_rho_D(p, s)
        cfg = dd.SimConfig(n=1.0, retention=dd.Full(), x0=2.0, m0=M,
                           paths=30000, seed=3, barrier_mode="fixed_ruin",
                           barrier_mult=16.0)
        est = dd.mc_estimate(cfg, p, s, rho_D=rho_D)
        assert abs(est.p_hat - sol.interp(2.0)) < 3.0 * est.se + 2e-3
