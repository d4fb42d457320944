"""Monte Carlo estimator: exactness, determinism, barrier handling."""

import math

import numpy as np
import pytest
from scipy import stats

import drawdown as dd
from drawdown import _kernels
from drawdown.errors import ConfigError, NetProfitViolated

P = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=1.2, alpha=0.3)
SEV = dd.Exponential(rate=1.0)


@pytest.fixture(scope="module")
def problem():
    return dd.DrawdownProblem(P, SEV)


class TestKernelSamplers:
    def test_exponential_ziggurat_exact(self):
        draws = _kernels.exp_draws(10 ** 6, seed=42)
        ks = stats.kstest(draws, "expon")
        assert ks.pvalue > 1e-4
        assert abs(draws.mean() - 1.0) < 4e-3
        assert abs(np.mean(draws ** 3) - 6.0) < 0.15

    def test_normal_ziggurat_exact(self):
        draws = _kernels.norm_draws(10 ** 6, seed=42)
        ks = stats.kstest(draws, "norm")
        assert ks.pvalue > 1e-4
        assert abs(draws.mean()) < 4e-3
        assert abs(draws.var() - 1.0) < 6e-3

    def test_streams_disjoint_across_paths(self):
        a = _kernels.exp_draws(1000, seed=1, path=0)
        b = _kernels.exp_draws(1000, seed=1, path=1)
        assert not np.allclose(a, b)


class TestSimulatePath:
    def test_start_at_barrier_escapes_immediately(self, problem):
        # barrier_mult 1 with m0 >= 1/rho_D puts b exactly at x0 = m0
        m0 = 1.2 * max(2.0, 1.0 / problem.rho_D)
        cfg = dd.SimConfig(n=1.0, retention=dd.Full(), x0=m0, m0=m0,
                           paths=1, seed=0, barrier_mult=1.0)
        assert dd.simulate_path(cfg, P, SEV, rho_D=problem.rho_D) == "escaped"

    def test_alpha_zero_modes_identical_pathwise(self):
        p0 = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=1.2,
                             alpha=0.0)
        rho = dd.solve_rho_D(p0, SEV)
        kw = dict(n=4.0, retention=dd.Full(), x0=1.0, m0=1.0, paths=4000,
                  seed=77)
        a = dd.simulate_outcomes(dd.SimConfig(barrier_mode="drawdown", **kw),
                                 p0, SEV, rho_D=rho)
        b = dd.simulate_outcomes(dd.SimConfig(barrier_mode="fixed_ruin",
                                              **kw), p0, SEV, rho_D=rho)
        assert np.array_equal(a, b)

    def test_deterministic_first_jump_race(self):
        # huge claims guarantee drawdown at the first jump, so the drawdown
        # frequency is the probability the jump clock beats the barrier
        p = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=4.0,
                            alpha=0.3)
        s = dd.Deterministic(b=3.0)
        rho_D = dd.solve_rho_D(p, s)
        x0 = m0 = 2.0
        cfg = dd.SimConfig(n=1.0, retention=dd.Full(), x0=x0, m0=m0,
                           paths=60000, seed=5, barrier_mult=1.7)
        b = cfg.barrier_mult * max(m0, 1.0 / rho_D)
        assert 3.0 > (1 - p.alpha) * b  # claim kills any surplus below b
        rep = dd.net_profit_check(dd.Full(), p, s)
        t_b = (b - x0) / rep.p_R
        want = 1.0 - math.exp(-t_b)
        est = dd.mc_estimate(cfg, p, s, rho_D=rho_D)
        assert abs(est.p_hat - want) < 4.0 * math.sqrt(want * (1 - want)
                                                       / cfg.paths)

    def test_net_profit_gate(self, problem):
        cfg = dd.SimConfig(n=1.0, retention=dd.Cap(d=0.0), x0=2.0, m0=2.0,
                           paths=10, seed=0)
        with pytest.raises(NetProfitViolated):
            dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)

    def test_invalid_initial_state(self, problem):
        cfg = dd.SimConfig(n=1.0, retention=dd.Full(), x0=0.1, m0=2.0,
                           paths=10, seed=0)
        with pytest.raises(ConfigError):
            dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)


class TestMcEstimate:
    def test_bit_for_bit_determinism(self, problem):
        cfg = dd.SimConfig(n=16.0, retention=problem.R_D, x0=2.0, m0=2.0,
                           paths=30000, seed=123)
        a = dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)
        b = dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)
        assert a == b

    def test_inside_certified_band(self, problem):
        cc = problem.constants
        n = 16.0
        cfg = dd.SimConfig(n=n, retention=problem.R_D, x0=2.0, m0=2.0,
                           paths=30000, seed=8)
        est = dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)
        from drawdown.valuefn import ell_n_formula, u_n_formula
        lo = ell_n_formula(2.0, 2.0, n, cc, P.alpha) - 3 * est.se
        hi = (u_n_formula(2.0, 2.0, n, cc, P.alpha) + 3 * est.se
              + est.truncation_bound)
        assert lo <= est.p_hat <= hi

    def test_fixed_ruin_below_lundberg(self, problem):
        cfg = dd.SimConfig(n=1.0, retention=dd.Full(), x0=2.5, m0=3.0,
                           paths=30000, seed=9, barrier_mode="fixed_ruin",
                           barrier_mult=16.0)
        est = dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)
        bound = dd.lundberg_bound(2.5, 3.0, dd.Full(), P, SEV)
        assert est.p_hat <= bound + 3 * est.se + est.truncation_bound

    def test_mode_ordering_common_randomness(self, problem):
        kw = dict(n=4.0, retention=dd.Full(), x0=2.0, m0=3.0, paths=20000,
                  seed=5)
        a = dd.simulate_outcomes(dd.SimConfig(barrier_mode="drawdown", **kw),
                                 P, SEV, rho_D=problem.rho_D)
        b = dd.simulate_outcomes(dd.SimConfig(barrier_mode="fixed_ruin",
                                              **kw), P, SEV,
                                 rho_D=problem.rho_D)
        # running barrier only rises: drawdown implies fixed-mode drawdown
        assert np.all((a == 1) | (b != 1))

    def test_barrier_consistency(self, problem):
        kw = dict(n=4.0, retention=problem.R_D, x0=2.0, m0=2.0,
                  paths=40000, seed=12)
        small = dd.mc_estimate(dd.SimConfig(barrier_mult=5.0, **kw), P, SEV,
                               rho_D=problem.rho_D)
        large = dd.mc_estimate(dd.SimConfig(barrier_mult=10.0, **kw), P, SEV,
                               rho_D=problem.rho_D)
        allowed = (small.truncation_bound
                   + 3.0 * math.hypot(small.se, large.se))
        assert abs(small.p_hat - large.p_hat) < allowed

    def test_se_and_ci(self, problem):
        cfg = dd.SimConfig(n=4.0, retention=dd.Full(), x0=2.0, m0=2.0,
                           paths=10000, seed=3)
        est = dd.mc_estimate(cfg, P, SEV, rho_D=problem.rho_D)
        assert est.se == pytest.approx(
            math.sqrt(est.p_hat * (1 - est.p_hat) / est.paths))
        assert est.ci95[0] <= est.p_hat <= est.ci95[1]


class TestDiffusion:
    def test_alpha_zero_matches_exponential_law(self):
        p0 = dd.MarketParams(lambda_=1.0, theta=0.1, eta=0.2, c=1.2,
                             alpha=0.0)
        rho = dd.solve_rho_D(p0, SEV)
        R = dd.diffusion_optimal(rho, p0)
        cfg = dd.SimConfig(n=1.0, retention=R, x0=2.0, m0=2.0, paths=40000,
                           seed=21, scheme="diffusion_euler", dt=1e-3,
                           barrier_mult=10.0)
        est = dd.diffusion_estimate(cfg, p0, SEV, rho_D=rho)
        want = math.exp(-rho * 2.0)
        assert abs(est.p_hat - want) < 3 * est.se + 6e-3
        assert est.dt == 1e-3

    def test_requires_diffusion_scheme(self, problem):
        cfg = dd.SimConfig(n=1.0, retention=dd.Full(), x0=2.0, m0=2.0,
                           paths=10, seed=0)
        with pytest.raises(ConfigError):
            dd.diffusion_estimate(cfg, P, SEV, rho_D=problem.rho_D)

    def test_variance_positive_under_net_profit(self, problem):
        m = dd.retention_moments(problem.R_D, SEV)
        assert m.e_r2 > 0.0


class TestDriftIdentity:
    @pytest.mark.parametrize("n", [1.0, 4.0, 16.0, 256.0])
    def test_scale_invariance(self, n):
        cfg = dd.SimConfig(n=n, retention=dd.Full(), x0=2.0, m0=2.0,
                           paths=1, seed=0)
        rep = dd.drift_identity_check(cfg, P, SEV)
        assert rep.scale_invariant
        assert rep.positive
        assert rep.net_drift == pytest.approx(0.2, rel=1e-12)

    def test_diffusion_optimal_positive(self, problem):
        cfg = dd.SimConfig(n=4.0, retention=problem.R_D, x0=2.0, m0=2.0,
                           paths=1, seed=0)
        rep = dd.drift_identity_check(cfg, P, SEV)
        assert rep.positive

    def test_full_reinsurance_flagged(self):
        cfg = dd.SimConfig(n=4.0, retention=dd.Cap(d=0.0), x0=2.0, m0=2.0,
                           paths=1, seed=0)
        with pytest.raises(NetProfitViolated):
            dd.drift_identity_check(cfg, P, SEV)
