"""Monte Carlo estimation of drawdown probabilities.

The n-scaled compound Poisson surplus is simulated exactly on its jump
chain (between jumps the path is a known line, so time discretization
would be pure error); the diffusion approximation is simulated with an
Euler scheme.  Paths are stopped at an escape barrier b, and the
unresolved probability mass beyond the barrier is certified with the
Lundberg exponent of the simulated strategy.

Paths are partitioned into 64 fixed batches whose results are merged in
batch order; together with the counter-based per-path RNG this makes
every estimate bit-for-bit reproducible regardless of how many workers
process the batches.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels, adjustment
from .errors import ConfigError, DriftNonpositive
from .model import (Deterministic, Exponential, MarketParams, SeverityModel,
                    Uniform)
from .retention import (Cap, DiffusionOptimal, Full, MaxAdjust, Proportional,
                        RetentionFn, require_net_profit, retention_moments)

N_BATCHES = 64

DRAWDOWN = "drawdown"
FIXED_RUIN = "fixed_ruin"
JUMP_EXACT = "jump_exact"
DIFFUSION_EULER = "diffusion_euler"


@dataclass(frozen=True)
class SimConfig:
    """Simulation request.

    ``retention`` is given on the original claim scale and is scaled
    internally (the n-model retains R(Y)/sqrt(n) from the scaled claim).
    The escape barrier is ``barrier_mult * max(m0, 1/rho_D)``.
    """

    n: float
    retention: RetentionFn
    x0: float
    m0: float
    paths: int
    seed: int
    barrier_mode: str = DRAWDOWN
    scheme: str = JUMP_EXACT
    dt: float = 1e-3
    barrier_mult: float = 8.0

    def validate(self, alpha: float):
        if self.paths < 1:
            raise ConfigError("paths must be >= 1")
        if self.n < 1:
            raise ConfigError("scale index n must be >= 1")
        if not alpha * self.m0 <= self.x0 <= self.m0:
            raise ConfigError(
                f"initial state ({self.x0}, {self.m0}) outside the domain")
        if self.barrier_mode not in (DRAWDOWN, FIXED_RUIN):
            raise ConfigError(f"unknown barrier mode {self.barrier_mode!r}")
        if self.scheme not in (JUMP_EXACT, DIFFUSION_EULER):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.scheme == DIFFUSION_EULER and self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.barrier_mult < 1.0:
            raise ConfigError("barrier_mult must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    se: float
    paths: int
    truncation_bound: float
    ci95: tuple
    barrier: float
    mode: str
    scheme: str
    n: float
    dt: Optional[float] = None

    def as_dict(self):
        out = {
            "p_hat": self.p_hat,
            "se": self.se,
            "paths": self.paths,
            "truncation_bound": self.truncation_bound,
            "ci95": list(self.ci95),
            "barrier": self.barrier,
            "mode": self.mode,
            "scheme": self.scheme,
            "n": self.n,
        }
        if self.dt is not None:
            out["dt"] = self.dt
        return out


_SEV_CODE = {
    Exponential: (_kernels.SEV_EXPONENTIAL, lambda s: s.rate),
    Uniform: (_kernels.SEV_UNIFORM, lambda s: s.b),
    Deterministic: (_kernels.SEV_DETERMINISTIC, lambda s: s.b),
}


def _severity_code(s: SeverityModel):
    try:
        kind, param = _SEV_CODE[type(s)]
    except KeyError:
        raise ConfigError(f"severity {type(s).__name__} has no kernel")
    return kind, param(s)


def _retention_code(R: RetentionFn):
    if isinstance(R, Full):
        return _kernels.RET_FULL, ()
    if isinstance(R, Proportional):
        return _kernels.RET_PROPORTIONAL, (R.q,)
    if isinstance(R, Cap):
        return _kernels.RET_CAP, (R.d,)
    if isinstance(R, DiffusionOptimal):
        return _kernels.RET_DIFFUSION_OPTIMAL, (R.rho, R.theta, R.eta)
    if isinstance(R, MaxAdjust):
        return _kernels.RET_MAX_ADJUST, (R.rho, R.n, R.theta, R.eta)
    raise ConfigError(f"retention {type(R).__name__} has no kernel")


def _batch_edges(paths: int):
    base, extra = divmod(paths, N_BATCHES)
    edges = [0]
    for i in range(N_BATCHES):
        edges.append(edges[-1] + base + (1 if i < extra else 0))
    return edges


@dataclass(frozen=True)
class _Plan:
    barrier: float
    drift: float
    jump_rate: float
    mu: float
    sigma: float
    trunc_exponent: float


def _plan(cfg: SimConfig, p: MarketParams, s: SeverityModel,
          rho_D: Optional[float]) -> _Plan:
    cfg.validate(p.alpha)
    rep = require_net_profit(cfg.retention, p, s)
    mom = retention_moments(cfg.retention, s)
    if rho_D is None:
        rho_D = adjustment.solve_rho_D(p, s)
    barrier = cfg.barrier_mult * max(cfg.m0, 1.0 / rho_D)

    root = math.sqrt(cfg.n)
    drift = rep.p_R + p.lambda_ * (root - 1.0) * mom.e_r
    if drift <= 0.0:
        raise DriftNonpositive(
            f"inter-jump drift {drift!r} <= 0")  # unreachable under net profit

    mu = rep.p_R - p.lambda_ * mom.e_r
    sigma = math.sqrt(p.lambda_ * mom.e_r2)

    if cfg.scheme == JUMP_EXACT:
        trunc_exp = adjustment.solve_rho_n_of_R(cfg.retention, cfg.n, p, s)
    else:
        trunc_exp = adjustment.rho_diffusion_of_R(cfg.retention, p, s)
    return _Plan(barrier=barrier, drift=drift, jump_rate=cfg.n * p.lambda_,
                 mu=mu, sigma=sigma, trunc_exponent=trunc_exp)


def simulate_outcomes(cfg: SimConfig, p: MarketParams, s: SeverityModel,
                      rho_D: Optional[float] = None) -> np.ndarray:
    """Per-path outcome codes (1 = drawdown, 2 = escaped)."""
    plan = _plan(cfg, p, s, rho_D)
    running_max = cfg.barrier_mode == DRAWDOWN
    edges = _batch_edges(cfg.paths)
    if cfg.scheme == JUMP_EXACT:
        skind, sparam = _severity_code(s)
        rkind, rparams = _retention_code(cfg.retention)
        return _kernels.jump_paths(
            edges, cfg.seed, cfg.x0, cfg.m0, p.alpha, plan.barrier,
            plan.drift, plan.jump_rate, 1.0 / math.sqrt(cfg.n), running_max,
            skind, sparam, rkind, rparams)
    return _kernels.diffusion_paths(
        edges, cfg.seed, cfg.x0, cfg.m0, p.alpha, plan.barrier, plan.mu,
        plan.sigma, cfg.dt, running_max)


def simulate_path(cfg: SimConfig, p: MarketParams, s: SeverityModel,
                  path_index: int = 0, rho_D: Optional[float] = None) -> str:
    """Outcome of one path ('drawdown' or 'escaped'), deterministic in
    (seed, path_index)."""
    plan = _plan(cfg, p, s, rho_D)
    running_max = cfg.barrier_mode == DRAWDOWN
    if cfg.scheme == JUMP_EXACT:
        skind, sparam = _severity_code(s)
        rkind, rparams = _retention_code(cfg.retention)
        code = _kernels.jump_single(
            path_index, cfg.seed, cfg.x0, cfg.m0, p.alpha, plan.barrier,
            plan.drift, plan.jump_rate, 1.0 / math.sqrt(cfg.n), running_max,
            skind, sparam, rkind, rparams)
    else:
        code = _kernels.diffusion_single(
            path_index, cfg.seed, cfg.x0, cfg.m0, p.alpha, plan.barrier,
            plan.mu, plan.sigma, cfg.dt, running_max)
    return "drawdown" if code == _kernels.OUT_DRAWDOWN else "escaped"


def _estimate_from_outcomes(cfg: SimConfig, plan: _Plan, alpha: float,
                            outcomes: np.ndarray) -> McEstimate:
    hits = int(np.sum(outcomes == _kernels.OUT_DRAWDOWN))
    p_hat = hits / cfg.paths
    se = math.sqrt(p_hat * (1.0 - p_hat) / cfg.paths)
    z95 = 1.959963984540054
    trunc = math.exp(-plan.trunc_exponent * plan.barrier * (1.0 - alpha))
    return McEstimate(
        p_hat=p_hat, se=se, paths=cfg.paths, truncation_bound=trunc,
        ci95=(max(0.0, p_hat - z95 * se), min(1.0, p_hat + z95 * se)),
        barrier=plan.barrier, mode=cfg.barrier_mode, scheme=cfg.scheme,
        n=cfg.n, dt=cfg.dt if cfg.scheme == DIFFUSION_EULER else None)


def mc_estimate(cfg: SimConfig, p: MarketParams, s: SeverityModel,
                rho_D: Optional[float] = None) -> McEstimate:
    """Drawdown-probability estimate under the configured strategy."""
    plan = _plan(cfg, p, s, rho_D)
    outcomes = simulate_outcomes(cfg, p, s, rho_D)
    return _estimate_from_outcomes(cfg, plan, p.alpha, outcomes)


def diffusion_estimate(cfg: SimConfig, p: MarketParams, s: SeverityModel,
                       rho_D: Optional[float] = None) -> McEstimate:
    """Euler-scheme estimate for the diffusion approximation."""
    if cfg.scheme != DIFFUSION_EULER:
        raise ConfigError("diffusion_estimate requires the diffusion scheme")
    return mc_estimate(cfg, p, s, rho_D)


@dataclass(frozen=True)
class DriftIdentityReport:
    net_drift: float
    gap: float
    scale_invariant: bool
    positive: bool


def drift_identity_check(cfg: SimConfig, p: MarketParams,
                         s: SeverityModel) -> DriftIdentityReport:
    """Verify drift_n - n lambda E_n[R_n] equals the unscaled net drift."""
    rep = require_net_profit(cfg.retention, p, s)
    mom = retention_moments(cfg.retention, s)
    root = math.sqrt(cfg.n)
    drift_n = rep.p_R + p.lambda_ * (root - 1.0) * mom.e_r
    jump_outflow = cfg.n * p.lambda_ * mom.e_r / root
    net = rep.p_R - p.lambda_ * mom.e_r
    gap = abs((drift_n - jump_outflow) - net)
    return DriftIdentityReport(net_drift=net, gap=gap,
                               scale_invariant=gap <= 1e-12
                               * max(1.0, abs(net)),
                               positive=net > 0.0)
