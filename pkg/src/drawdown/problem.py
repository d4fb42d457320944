"""Caching facade tying one market + severity to all solved objects."""

import math
from functools import cached_property

from . import adjustment, valuefn
from .errors import ConfigError
from .model import MarketParams, SeverityModel, validate_market
from .adjustment import solve_J
from .retention import (Cap, Full, Proportional, RetentionFn,
                        diffusion_optimal, max_adjust)


class DrawdownProblem:
    """One insurance market with cached solver results.

    Coefficients that depend on the scale index n are memoized per n; the
    convergence constants are solved once.
    """

    def __init__(self, market: MarketParams, severity: SeverityModel):
        self.market = market
        self.severity = severity
        self._rho_n = {}
        self._rho_n_RD = {}

    def validate(self):
        return validate_market(self.market, self.severity)

    @cached_property
    def rho_D(self) -> float:
        return adjustment.solve_rho_D(self.market, self.severity)

    @cached_property
    def R_D(self):
        return diffusion_optimal(self.rho_D, self.market)

    def rho_n(self, n: float) -> float:
        if n not in self._rho_n:
            self._rho_n[n] = adjustment.solve_rho_n(n, self.market,
                                                    self.severity)
        return self._rho_n[n]

    def rho_n_of_RD(self, n: float) -> float:
        if n not in self._rho_n_RD:
            self._rho_n_RD[n] = adjustment.solve_rho_n_of_R(
                self.R_D, n, self.market, self.severity)
        return self._rho_n_RD[n]

    def max_adjust_retention(self, n: float) -> RetentionFn:
        return max_adjust(self.rho_n(n), n, self.market)

    @cached_property
    def constants(self) -> adjustment.ConvergenceConstants:
        return adjustment.convergence_constants(self.market, self.severity)

    def J(self, R: RetentionFn) -> float:
        return solve_J(R, self.market, self.severity)

    def psi_D(self, x, m):
        return valuefn.psi_D(x, m, self.rho_D, self.market.alpha)

    def bounds(self, x, m, n, R: RetentionFn = None) -> valuefn.BoundBundle:
        """All closed-form bounds at one state and scale (Lundberg bound for
        the given retention, full retention by default)."""
        alpha = self.market.alpha
        cc = self.constants
        R = Full() if R is None else R
        return valuefn.BoundBundle(
            psi_D=float(self.psi_D(x, m)),
            psibar_n=float(valuefn.psibar_n(x, m, self.rho_n(n), alpha)),
            u_n=float(valuefn.u_n(x, m, n, cc, alpha)),
            ell_n=float(valuefn.ell_n(x, m, n, cc, alpha)),
            psibar_Dn=float(valuefn.psibar_Dn(x, m, self.rho_n_of_RD(n),
                                              alpha)),
            lundberg=float(valuefn.lundberg_bound(x, m, R, self.market,
                                                  self.severity)),
        )

    def resolve_retention(self, spec: dict, n: float = 1.0) -> RetentionFn:
        """Build a retention function from a config fragment."""
        spec = dict(spec)
        kind = spec.pop("kind", None)
        if kind == "full":
            extra = spec
            out = Full()
        elif kind == "proportional":
            out = Proportional(q=float(spec.pop("q")))
            extra = spec
        elif kind == "cap":
            out = Cap(d=float(spec.pop("d")))
            extra = spec
        elif kind == "diffusion_optimal":
            out = self.R_D
            extra = spec
        elif kind == "max_adjust":
            out = self.max_adjust_retention(n)
            extra = spec
        else:
            raise ConfigError(f"unknown retention kind {kind!r}")
        if extra:
            raise ConfigError(
                f"unknown retention keys {sorted(extra)} for kind {kind!r}")
        return out
