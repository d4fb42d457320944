"""Adjustment coefficients and the explicit convergence constants.

Every coefficient is the unique positive root of a monotone scalar
equation and is found by bracket growth plus bisection:

* ``solve_rho_D``    - exponent of the diffusion drawdown formula;
* ``solve_rho_n``    - maximal adjustment coefficient of the n-scaled
                       jump model (outer solve; the ceded-branch kernel is
                       re-solved at every quadrature node);
* ``solve_rho_n_of_R`` - adjustment coefficient of a fixed retention;
* ``solve_J``        - Lundberg exponent of the unscaled model, identical
                       to ``solve_rho_n_of_R`` at n = 1.

The remaining functions build the explicit constants (C, epsilon,
varsigma, delta, and the integer thresholds) that appear in the
O(n^{-1/2}) sandwich bounds.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import roots
from .errors import NetProfitViolated, TailConditionFailed
from .model import (MarketParams, SeverityModel, hazard_tail_check, kappa,
                    sup_excess_exp_sq, sup_excess_mean)
from .retention import (RetentionFn, diffusion_optimal, exp_moment,
                        exp_moment_centered, max_adjust, require_net_profit,
                        retention_moments, _kernel_root)

_RTOL = 1e-15


def _net_premium(p, s):
    return p.c - p.lambda_ * s.mean()


def _rd_survival_integral(rho, p, s):
    """integral of min((theta + eta y)/(rho + eta), y) * S_Y(y) dy."""
    theta, eta = p.theta, p.eta

    def g(y):
        return np.minimum((theta + eta * y) / (rho + eta), y)

    return float(s.expect_survival(g, breakpoints=(theta / rho,)))


def solve_rho_D(p: MarketParams, s: SeverityModel) -> float:
    """Unique rho > 0 with c - lambda E[Y] = lambda rho int R_D S_Y dy."""
    lhs = _net_premium(p, s)

    def f(rho):
        return p.lambda_ * rho * _rd_survival_integral(rho, p, s) - lhs

    return roots.solve_increasing(f, lo=1e-9, hi=1.0, rtol=_RTOL)


def rho_D_residual(rho, p, s):
    lhs = _net_premium(p, s)
    rhs = p.lambda_ * rho * _rd_survival_integral(rho, p, s)
    return abs(rhs - lhs) / lhs


def _rhs_const(R, p, s):
    """lambda (theta E[R] + eta E[YR] - eta/2 E[R^2]) - kappa; positive iff
    the net-profit condition holds."""
    m = retention_moments(R, s)
    return (p.lambda_ * (p.theta * m.e_r + p.eta * m.e_yr
                         - 0.5 * p.eta * m.e_r2) - kappa(p, s))


def _gn(rho, R, s, n):
    """g_n(rho; R) = (E[e^{rho R / sqrt(n)}] - 1 - rho/sqrt(n) E[R]) / rho."""
    return exp_moment_centered(R, s, rho / math.sqrt(n)) / rho


def solve_rho_n_of_R(R: RetentionFn, n: float, p: MarketParams,
                     s: SeverityModel) -> float:
    """Adjustment coefficient of the n-scaled model under fixed retention R
    (given on the original claim scale)."""
    require_net_profit(R, p, s)
    target = _rhs_const(R, p, s)

    def f(rho):
        return n * p.lambda_ * _gn(rho, R, s, n) - target

    cap = math.inf
    if math.isfinite(s.t0) and R.tail_slope > 0.0:
        cap = 0.999 * math.sqrt(n) * s.t0 / R.tail_slope
    return roots.solve_increasing(f, lo=1e-9, hi=min(1.0, cap), hi_cap=cap,
                                  rtol=_RTOL)


def rho_n_of_R_residual(rho, R, n, p, s):
    target = _rhs_const(R, p, s)
    return abs(n * p.lambda_ * _gn(rho, R, s, n) - target) / abs(target)


def solve_J(R: RetentionFn, p: MarketParams, s: SeverityModel) -> float:
    """Lundberg exponent: lambda(E[e^{JR}] - 1 - J E[R]) = J * (drift gap)."""
    require_net_profit(R, p, s)
    target = _rhs_const(R, p, s)

    def f(J):
        return p.lambda_ * exp_moment_centered(R, s, J) - J * target

    cap = math.inf
    if math.isfinite(s.t0) and R.tail_slope > 0.0:
        cap = 0.999 * s.t0 / R.tail_slope
    return roots.solve_increasing(f, lo=1e-9, hi=min(0.5, cap), hi_cap=cap,
                                  rtol=_RTOL)


def J_residual(J, R, p, s):
    target = _rhs_const(R, p, s)
    lhs = p.lambda_ * exp_moment_centered(R, s, J)
    return abs(lhs - J * target) / abs(J * target)


def rho_n_rhs(rho: float, n: float, p: MarketParams,
              s: SeverityModel) -> float:
    """Right side of the maximal-coefficient equation in original-scale
    form: sqrt(n) lambda int (e^{rho Rcheck(t)/sqrt(n)} - 1) S_Y(t) dt.

    On the ceded branch the kernel equation turns the exponential into
    (theta + eta (t - Rcheck)) / sqrt(n), so each quadrature node costs one
    vectorized kernel solve and no exponentials of large arguments appear.
    """
    root = math.sqrt(n)
    a = rho / root
    shift = root + p.theta
    eta = p.eta
    threshold = (root / rho) * math.log1p(p.theta / root)

    def g(t):
        out = np.empty_like(t)
        below = t <= threshold
        out[below] = np.expm1(a * t[below])
        tb = t[~below]
        if tb.size:
            rc = _kernel_root(tb, a, shift, eta, root)
            out[~below] = (p.theta + eta * (tb - rc)) / root
        return out

    return root * p.lambda_ * float(
        s.expect_survival(g, breakpoints=(threshold,)))


def solve_rho_n(n: float, p: MarketParams, s: SeverityModel) -> float:
    """Maximal adjustment coefficient of the n-scaled model."""
    lhs = _net_premium(p, s)

    def f(rho):
        return rho_n_rhs(rho, n, p, s) - lhs

    return roots.solve_increasing(f, lo=1e-9, hi=1.0, rtol=_RTOL)


def rho_n_residual(rho, n, p, s):
    lhs = _net_premium(p, s)
    return abs(rho_n_rhs(rho, n, p, s) - lhs) / lhs


def rho_diffusion_of_R(R: RetentionFn, p: MarketParams,
                       s: SeverityModel) -> float:
    """Adjustment coefficient of the diffusion under fixed retention R:
    2 * drift / variance of the approximating Brownian surplus."""
    rep = require_net_profit(R, p, s)
    m = retention_moments(R, s)
    drift = rep.p_R - p.lambda_ * m.e_r
    return 2.0 * drift / (p.lambda_ * m.e_r2)


@dataclass(frozen=True)
class ConvergenceConstants:
    """Every explicit constant of the O(n^{-1/2}) convergence machinery.

    ``rho_n`` and ``rho_n_of_RD`` depend on the scale; the stored values
    are taken at n = N_prime, the scale from which all bounds are
    certified simultaneously.
    """

    rho_D: float
    rho_n: float
    rho_n_of_RD: float
    C: float
    epsilon: float
    varsigma: float
    delta: float
    N_lower: int
    N_lemma32: int
    M: int
    M_prime: int
    C_prime: float
    N_prime: int

    def as_dict(self):
        return {
            "rho_D": self.rho_D,
            "rho_n": self.rho_n,
            "rho_n_of_RD": self.rho_n_of_RD,
            "C": self.C,
            "epsilon": self.epsilon,
            "varsigma": self.varsigma,
            "delta": self.delta,
            "N_lower": self.N_lower,
            "N_lemma32": self.N_lemma32,
            "M": self.M,
            "M_prime": self.M_prime,
            "C_prime": self.C_prime,
            "N_prime": self.N_prime,
        }


# Strict paper inequalities are honored with a 1% multiplicative margin so
# they survive floating point.
_STRICT_MARGIN = 1.01


def const_C(p: MarketParams, s: SeverityModel, rho_D: float) -> float:
    """C > rho_D^2 E[R_D^3] / (3 E[R_D^2])."""
    m = retention_moments(diffusion_optimal(rho_D, p), s)
    return _STRICT_MARGIN * rho_D ** 2 * m.e_r3 / (3.0 * m.e_r2)


def const_delta_N(p: MarketParams, s: SeverityModel, rho_D: float):
    """epsilon, varsigma, delta and the lower-bound scale threshold.

    varsigma puts rho_D / sqrt(varsigma) at or below half the mgf radius;
    epsilon defaults to 1% of rho_D * sup_d E[Z_d]; N_lower is the smallest
    integer above max(delta^2, 4 varsigma) at which the overshoot
    correction sup_d rho_D^2/sqrt(N) E[Z_d^2 e^{rho_D Z_d / sqrt(N)}] fits
    inside epsilon.
    """
    if math.isinf(s.t0):
        varsigma = 1.0
    else:
        varsigma = max(1.0, (2.0 * rho_D / s.t0) ** 2)
    try:
        hazard_tail_check(s, rho_D / math.sqrt(varsigma))
    except Exception as exc:
        raise TailConditionFailed(str(exc)) from exc

    sup_mean = sup_excess_mean(s)
    epsilon = 0.01 * rho_D * sup_mean
    delta = rho_D * sup_mean + epsilon

    floor = max(delta ** 2, 4.0 * varsigma)

    def pred(N):
        if N <= floor:
            return False
        a = rho_D / math.sqrt(N)
        return (rho_D ** 2 / math.sqrt(N)) * sup_excess_exp_sq(s, a) <= epsilon

    N_lower = roots.smallest_integer_where(pred, start=int(floor) + 1)
    return {"epsilon": epsilon, "varsigma": varsigma, "delta": delta,
            "N_lower": N_lower}


def find_N_lemma32(p: MarketParams, s: SeverityModel, rho_D: float,
                   C: float) -> int:
    """Smallest integer N with rho_D - C/sqrt(N) > 0 and
    E[R_D^2] C - rho_D^2 E[R_D^3]/3 > rho_D^3/(3 sqrt(N)) E[R_D^4
    e^{rho_D R_D / sqrt(N)}]; the right side decreases in N."""
    R_D = diffusion_optimal(rho_D, p)
    m = retention_moments(R_D, s)
    gap = m.e_r2 * C - rho_D ** 2 * m.e_r3 / 3.0

    def pred(N):
        if rho_D - C / math.sqrt(N) <= 0.0:
            return False
        a = rho_D / math.sqrt(N)

        def g(y):
            r = R_D(y)
            return r ** 4 * np.exp(a * r)

        fourth = float(s.expect(g, breakpoints=R_D.kinks(),
                                growth=a * R_D.tail_slope))
        return rho_D ** 3 / (3.0 * math.sqrt(N)) * fourth < gap

    return roots.smallest_integer_where(pred, start=1)


def _mprime_pred(n, C, rho_D):
    if n < 1:
        return False
    x = C / (rho_D * math.sqrt(n))
    if x >= 1.0:
        return False
    return (1.0 - x) ** (1.0 / x) <= 2.0 * math.exp(-1.0)


def const_Cprime_Nprime(p: MarketParams, s: SeverityModel, rho_D: float,
                        C: float, delta: float, N_lower: int,
                        N_lemma32: int):
    """Uniform-rate constant C' and the scale N' from which it holds."""
    M = int(math.floor((C / rho_D) ** 2)) + 1
    M_prime = roots.smallest_integer_where(
        lambda n: _mprime_pred(n, C, rho_D), start=M)
    amp = max(p.alpha / (1.0 - p.alpha), 1.0)
    C_prime = max(delta,
                  amp * C / rho_D
                  + 2.0 * math.exp(-1.0) * C
                  / (rho_D - C / math.sqrt(M_prime)))
    N_prime = max(N_lower, M, M_prime, N_lemma32)
    return {"M": M, "M_prime": M_prime, "C_prime": C_prime,
            "N_prime": N_prime}


def convergence_constants(p: MarketParams,
                          s: SeverityModel) -> ConvergenceConstants:
    """Solve every constant of the convergence machinery for one market."""
    rho_D = solve_rho_D(p, s)
    C = const_C(p, s, rho_D)
    dn = const_delta_N(p, s, rho_D)
    N_lemma32 = find_N_lemma32(p, s, rho_D, C)
    cn = const_Cprime_Nprime(p, s, rho_D, C, dn["delta"], dn["N_lower"],
                             N_lemma32)
    n_star = float(cn["N_prime"])
    return ConvergenceConstants(
        rho_D=rho_D,
        rho_n=solve_rho_n(n_star, p, s),
        rho_n_of_RD=solve_rho_n_of_R(diffusion_optimal(rho_D, p), n_star,
                                     p, s),
        C=C,
        epsilon=dn["epsilon"],
        varsigma=dn["varsigma"],
        delta=dn["delta"],
        N_lower=dn["N_lower"],
        N_lemma32=N_lemma32,
        M=cn["M"],
        M_prime=cn["M_prime"],
        C_prime=cn["C_prime"],
        N_prime=cn["N_prime"],
    )
