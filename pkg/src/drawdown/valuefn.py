"""Closed-form drawdown surfaces, sandwich bounds, and the generator check.

All surfaces share one template on the domain {alpha*m <= x <= m},

    psi(x, m) = factor * (1 - h(m) * (1 - e^{-rho (x - alpha m)})),
    h(m) = (1 - e^{-rho (1 - alpha) m})^{alpha / (1 - alpha)},

extended by 1 below the barrier x < alpha*m.  The diffusion value, the
jump-model upper bounds, and the lower bound differ only in the exponent
rho and the leading factor.  ``apply_generator_n`` evaluates the scaled
jump generator on such a surface, which is how the one-sided
sub/supersolution conditions are certified numerically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .adjustment import ConvergenceConstants, solve_J
from .errors import ScaleTooSmall, StateOutsideDomain
from .model import MarketParams, SeverityModel, kappa
from .retention import RetentionFn, retention_moments, require_net_profit


def check_state(x, m, alpha):
    if x > m:
        raise StateOutsideDomain(f"x={x!r} exceeds the running maximum m={m!r}")
    if m < 0:
        raise StateOutsideDomain(f"running maximum m={m!r} is negative")


@dataclass(frozen=True)
class DrawdownSurface:
    """Template surface with exponent ``rho`` and leading ``factor``."""

    rho: float
    alpha: float
    factor: float = 1.0

    def h(self, m):
        if self.alpha == 0.0:
            return np.ones_like(np.asarray(m, dtype=float))
        power = self.alpha / (1.0 - self.alpha)
        return (1.0 - np.exp(-self.rho * (1.0 - self.alpha) * np.asarray(m, dtype=float))) ** power

    def value(self, x, m):
        """Surface value, with the extension u = 1 below the barrier."""
        x = np.asarray(x, dtype=float)
        m = np.asarray(m, dtype=float)
        barrier = self.alpha * m
        on_domain = (1.0 - self.h(m) * (1.0 - np.exp(-self.rho * (x - barrier))))
        out = np.where(x < barrier, 1.0, self.factor * on_domain)
        return out if out.ndim else float(out)

    def dx(self, x, m):
        """d/dx on the domain (analytic)."""
        x = np.asarray(x, dtype=float)
        m = np.asarray(m, dtype=float)
        out = (-self.factor * self.rho * self.h(m)
               * np.exp(-self.rho * (x - self.alpha * m)))
        return out if out.ndim else float(out)

    def dm(self, x, m):
        """d/dm on the domain; vanishes identically on the diagonal x = m.

        The diagonal exponent is computed through the same expression
        (m - alpha*m) as the x-exponent so the two terms cancel exactly in
        floating point at x = m.
        """
        if self.alpha == 0.0:
            return 0.0 if np.ndim(x) == 0 else np.zeros(np.shape(x))
        x = np.asarray(x, dtype=float)
        m = np.asarray(m, dtype=float)
        ex = np.exp(-self.rho * (x - self.alpha * m))
        ed = np.exp(-self.rho * (m - self.alpha * m))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.factor * self.alpha * self.rho * self.h(m)
                   * (ex - ed) / (1.0 - ed))
        out = np.where(m == 0.0, 0.0, out)
        return out if out.ndim else float(out)


def psi_D(x, m, rho_D: float, alpha: float):
    """Minimum drawdown probability of the diffusion approximation."""
    check_state(x, m, alpha)
    return DrawdownSurface(rho=rho_D, alpha=alpha).value(x, m)


def psibar_n(x, m, rho_n: float, alpha: float):
    """Exponential upper bound of the n-scaled minimum drawdown probability."""
    check_state(x, m, alpha)
    return DrawdownSurface(rho=rho_n, alpha=alpha).value(x, m)


def psibar_Dn(x, m, rho_n_of_RD: float, alpha: float):
    """Upper bound of the drawdown probability when the diffusion-optimal
    retention is used in the n-scaled model."""
    check_state(x, m, alpha)
    return DrawdownSurface(rho=rho_n_of_RD, alpha=alpha).value(x, m)


def u_n(x, m, n: float, cc: ConvergenceConstants, alpha: float):
    """Closed-form upper bound with exponent rho_D - C/sqrt(n)."""
    if n < cc.N_lemma32:
        raise ScaleTooSmall(
            f"upper bound certified only for n >= {cc.N_lemma32}, got {n!r}")
    check_state(x, m, alpha)
    return u_n_formula(x, m, n, cc, alpha)


def u_n_formula(x, m, n, cc, alpha):
    """Same formula without the scale guard (study rows below N' are
    reported as pre-asymptotic rather than suppressed)."""
    rho = cc.rho_D - cc.C / math.sqrt(n)
    return DrawdownSurface(rho=rho, alpha=alpha).value(x, m)


def ell_n(x, m, n: float, cc: ConvergenceConstants, alpha: float):
    """Lower bound (1 - delta/sqrt(n)) psi_D on the domain, 1 below it."""
    if n < cc.N_lower or n <= cc.delta ** 2:
        raise ScaleTooSmall(
            f"lower bound certified only for n >= {cc.N_lower}, got {n!r}")
    check_state(x, m, alpha)
    return ell_n_formula(x, m, n, cc, alpha)


def ell_n_formula(x, m, n, cc, alpha):
    factor = 1.0 - cc.delta / math.sqrt(n)
    return DrawdownSurface(rho=cc.rho_D, alpha=alpha,
                           factor=factor).value(x, m)


def lundberg_bound(x, m, R: RetentionFn, p: MarketParams,
                   s: SeverityModel):
    """min(1, e^{-J(R) (x - alpha m)}) with J the Lundberg exponent of R."""
    check_state(x, m, p.alpha)
    J = solve_J(R, p, s)
    return lundberg_curve(x, m, J, p.alpha)


def lundberg_curve(x, m, J, alpha):
    x = np.asarray(x, dtype=float)
    out = np.minimum(1.0, np.exp(-J * (x - alpha * np.asarray(m, dtype=float))))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BoundBundle:
    """Every closed-form bound evaluated at one state and scale."""

    psi_D: float
    psibar_n: float
    u_n: float
    ell_n: float
    psibar_Dn: float
    lundberg: float

    def as_dict(self):
        return {
            "psi_D": self.psi_D,
            "psibar_n": self.psibar_n,
            "u_n": self.u_n,
            "ell_n": self.ell_n,
            "psibar_Dn": self.psibar_Dn,
            "lundberg": self.lundberg,
        }


def apply_generator_n(surface, R: RetentionFn, n: float, p: MarketParams,
                      s: SeverityModel, x: float, m: float,
                      rel_tol=1e-12) -> float:
    """Scaled jump generator applied to a closed-form surface at (x, m).

    ``R`` is the retention on the original claim scale; the n-scaled model
    retains R(Y)/sqrt(n) out of the scaled claim Y/sqrt(n).  The surface
    derivative is analytic and the jump expectation is integrated with the
    difference u(x - R(Y)/sqrt(n), m) - u(x, m) inside the integrand, so
    the large multiplier n*lambda does not amplify cancellation error.
    """
    check_state(x, m, p.alpha)
    mom = retention_moments(R, s)
    root = math.sqrt(n)
    drift = (-kappa(p, s)
             + p.lambda_ * ((root + p.theta) * mom.e_r + p.eta * mom.e_yr
                            - 0.5 * p.eta * mom.e_r2))
    u_x = float(surface.dx(x, m))
    u_here = float(surface.value(x, m))

    breakpoints = list(R.kinks())
    target = root * (x - p.alpha * m)
    if target < R.sup_value():
        y_cross = R.inverse(target)
        if math.isfinite(y_cross):
            breakpoints.append(y_cross)

    def integrand(y):
        return surface.value(x - R(y) / root, m) - u_here

    jump = float(s.expect(integrand, breakpoints=tuple(breakpoints),
                          growth=0.0, rel_tol=rel_tol))
    return drift * u_x + n * p.lambda_ * jump


def certification_grid(alpha: float, rho_D: float, nx=20, nm=20):
    """Tensor grid over {(x, m): alpha m <= x <= m, m in [0.1, 10/rho_D]}."""
    ms = np.linspace(0.1, 10.0 / rho_D, nm)
    states = []
    for m in ms:
        for t in np.linspace(0.0, 1.0, nx):
            states.append((min(alpha * m + t * (m - alpha * m), m), m))
    return states
