"""Retention functions and their moment functionals.

A retention function maps a claim y to the part the insurer keeps,
0 <= R(y) <= y.  Besides the obvious full / proportional / capped rules
the catalogue contains the two optimal rules of the theory:

* ``DiffusionOptimal`` - kept amount min((theta + eta*y)/(rho + eta), y),
  optimal for the diffusion limit;
* ``MaxAdjust`` - the rule maximizing the adjustment coefficient of the
  n-scaled jump model, whose ceded branch solves a transcendental kernel.

Both are stored on the original claim scale; the n-scaled rule applied to
the scaled claim y is recovered through R_n(y) = R(sqrt(n) * y) / sqrt(n).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BranchMisuse, ExponentBeyondRadius, NetProfitViolated
from .model import Exponential, MarketParams, SeverityModel, kappa
from .quadrature import integrate


def _vectorized(fn):
    def wrapper(self, y):
        arr = np.asarray(y, dtype=float)
        out = fn(self, np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)
    return wrapper


class RetentionFn:
    """Base class: evaluation, sup-inverse, kinks and tail growth."""

    #: bound on the asymptotic slope of R (controls exp-moment radii)
    tail_slope: float = 1.0

    def __call__(self, y):
        raise NotImplementedError

    def inverse(self, r):
        """sup{y : R(y) <= r}; +inf when r >= sup R."""
        raise NotImplementedError

    def kinks(self):
        """Abscissae where R changes branch (quadrature breakpoints)."""
        return ()

    def sup_value(self):
        """Supremum of R over its domain."""
        return math.inf


@dataclass(frozen=True)
class Full(RetentionFn):
    """No reinsurance: R(y) = y."""

    tail_slope = 1.0

    @_vectorized
    def __call__(self, y):
        return y.copy()

    def inverse(self, r):
        return r


@dataclass(frozen=True)
class Proportional(RetentionFn):
    """Quota share: R(y) = q * y with q in (0, 1]."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must be in (0, 1]")

    @property
    def tail_slope(self):
        return self.q

    @_vectorized
    def __call__(self, y):
        return self.q * y

    def inverse(self, r):
        return r / self.q


@dataclass(frozen=True)
class Cap(RetentionFn):
    """Excess-of-loss: R(y) = min(y, d)."""

    d: float

    tail_slope = 0.0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be nonnegative")

    @_vectorized
    def __call__(self, y):
        return np.minimum(y, self.d)

    def inverse(self, r):
        return r if r < self.d else math.inf

    def kinks(self):
        return (self.d,)

    def sup_value(self):
        return self.d


@dataclass(frozen=True)
class DiffusionOptimal(RetentionFn):
    """R(y) = min((theta + eta*y) / (rho + eta), y)."""

    rho: float
    theta: float
    eta: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    @property
    def tail_slope(self):
        return self.eta / (self.rho + self.eta)

    @property
    def threshold(self):
        """Claims below theta/rho are fully retained."""
        return self.theta / self.rho

    @_vectorized
    def __call__(self, y):
        return np.minimum((self.theta + self.eta * y) / (self.rho + self.eta), y)

    def inverse(self, r):
        if r <= self.threshold:
            return r
        return ((self.rho + self.eta) * r - self.theta) / self.eta

    def kinks(self):
        return (self.threshold,)


@dataclass(frozen=True)
class MaxAdjust(RetentionFn):
    """Adjustment-coefficient-maximizing rule on the original claim scale.

    Fully retains claims up to (sqrt(n)/rho) * log(1 + theta/sqrt(n)); above
    that the kept amount R solves
        (sqrt(n) + theta) + eta * (y - R) = sqrt(n) * e^{rho R / sqrt(n)}.
    """

    rho: float
    n: float
    theta: float
    eta: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def tail_slope(self):
        return self.eta / (self.rho + self.eta)

    @property
    def threshold(self):
        root = math.sqrt(self.n)
        return (root / self.rho) * math.log1p(self.theta / root)

    @_vectorized
    def __call__(self, y):
        root = math.sqrt(self.n)
        out = y.copy()
        above = y > self.threshold
        if np.any(above):
            out[above] = _kernel_root(y[above], self.rho / root,
                                      root + self.theta, self.eta, root)
        return out

    def inverse(self, r):
        if r <= self.threshold:
            return r
        root = math.sqrt(self.n)
        return r + (root * math.exp(self.rho * r / root)
                    - root - self.theta) / self.eta

    def kinks(self):
        return (self.threshold,)


def _kernel_root(y, a, shift, eta, scale, tol=1e-13):
    """Vectorized bisection for R in [0, y) solving
    shift + eta*(y - R) = scale * e^{a R}; the left side minus the right is
    strictly decreasing in R."""
    lo = np.zeros_like(y)
    hi = y.astype(float).copy()
    with np.errstate(over="ignore"):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            resid = shift + eta * (y - mid) - scale * np.exp(a * mid)
            pos = resid > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
            if np.max(hi - lo) <= tol:
                break
    return 0.5 * (lo + hi)


def eval_RD(y, rho: float, p: MarketParams):
    """Diffusion-optimal retained amount for claim y."""
    return DiffusionOptimal(rho=rho, theta=p.theta, eta=p.eta)(y)


def solve_Rc(y: float, rho: float, n: float, p: MarketParams) -> float:
    """Ceded-branch root of the scaled kernel
    (1 + theta_n) + eta*(y - R) = e^{rho R}, valid above the full-retention
    threshold; bisection to 1e-12 absolute."""
    theta_n = p.theta / math.sqrt(n)
    threshold = math.log1p(theta_n) / rho
    if y <= threshold:
        raise BranchMisuse(
            f"y={y!r} is on the full-retention branch (threshold {threshold!r})")
    root = _kernel_root(np.array([y]), rho, 1.0 + theta_n, p.eta, 1.0,
                        tol=1e-13)
    return float(root[0])


def eval_Rn_rho(y, rho: float, n: float, p: MarketParams):
    """Adjustment-maximizing retention for the n-scaled model (scaled claim
    scale): full retention up to log(1 + theta_n)/rho, then the kernel root."""
    theta_n = p.theta / math.sqrt(n)
    threshold = math.log1p(theta_n) / rho
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = arr.copy()
    above = arr > threshold
    if np.any(above):
        out[above] = _kernel_root(arr[above], rho, 1.0 + theta_n, p.eta, 1.0)
    if np.asarray(y).ndim == 0:
        return float(out[0])
    return out.reshape(np.asarray(y).shape)


def diffusion_optimal(rho: float, p: MarketParams) -> DiffusionOptimal:
    return DiffusionOptimal(rho=rho, theta=p.theta, eta=p.eta)


def max_adjust(rho: float, n: float, p: MarketParams) -> MaxAdjust:
    return MaxAdjust(rho=rho, n=n, theta=p.theta, eta=p.eta)


@dataclass(frozen=True)
class RetentionMoments:
    """Moments of the retained and ceded claim under one severity."""

    e_r: float
    e_r2: float
    e_r3: float
    e_r4: float
    e_yr: float
    e_ceded: float
    e_ceded_sq: float


@lru_cache(maxsize=256)
def retention_moments(R: RetentionFn, s: SeverityModel) -> RetentionMoments:
    """All moment functionals of (R(Y), Y - R(Y)) in one quadrature pass.

    The evaluation grid is shared across the seven integrands, and the
    result is cached per (retention, severity) pair because the outer
    adjustment-coefficient solvers request these repeatedly.
    """

    def integrand(y):
        r = R(y)
        ceded = y - r
        return np.stack([r, r * r, r ** 3, r ** 4, y * r, ceded,
                         ceded * ceded])

    vals = s.expect(integrand, breakpoints=R.kinks(), growth=0.0)
    return RetentionMoments(*(float(v) for v in np.asarray(vals)))


def exp_moment(R: RetentionFn, s: SeverityModel, t: float) -> float:
    """E[e^{t R(Y)}] by quadrature; requires t below the effective radius."""
    _check_radius(R, s, t)
    if t == 0.0:
        return 1.0
    if isinstance(s, Exponential):
        # fold the density into the exponent so the slowly-decaying tail
        # cannot produce inf * 0
        mu = s.rate
        cut = s.tail_cut(max(t, 0.0) * R.tail_slope)

        def integrand(y):
            return mu * np.exp(t * R(y) - mu * y)

        return float(integrate(integrand, 0.0, cut,
                                breakpoints=R.kinks()))

    def integrand(y):
        return np.exp(t * R(y))

    return float(s.expect(integrand, breakpoints=R.kinks(),
                          growth=max(t, 0.0) * R.tail_slope))


def exp_moment_centered(R: RetentionFn, s: SeverityModel, t: float) -> float:
    """E[e^{t R} - 1 - t R], stable for small t and at heavy exponents."""
    _check_radius(R, s, t)
    if t == 0.0:
        return 0.0
    if isinstance(s, Exponential):
        mu = s.rate
        cut = s.tail_cut(max(t, 0.0) * R.tail_slope)

        def integrand(y):
            x = t * R(y)
            dens = mu * np.exp(-mu * y)
            out = np.empty_like(x)
            small = x <= 50.0
            xs = x[small]
            out[small] = (np.expm1(xs) - xs) * dens[small]
            if np.any(~small):
                xl = x[~small]
                # e^x - 1 - x written through the joint exponent x - mu y
                out[~small] = (mu * np.exp(xl - mu * y[~small])
                               - (1.0 + xl) * dens[~small])
            return out

        return float(integrate(integrand, 0.0, cut,
                                breakpoints=R.kinks()))

    def integrand(y):
        x = t * R(y)
        return np.expm1(x) - x

    return float(s.expect(integrand, breakpoints=R.kinks(),
                          growth=max(t, 0.0) * R.tail_slope))


def _check_radius(R, s, t):
    if t * R.tail_slope >= s.t0:
        raise ExponentBeyondRadius(
            f"exponent {t!r} with retention slope {R.tail_slope!r} reaches "
            f"the severity radius {s.t0!r}")


@dataclass(frozen=True)
class NetProfitReport:
    p_R: float
    margin: float
    ok: bool
    identity_gap: float


def retained_premium_rate(R: RetentionFn, p: MarketParams,
                          s: SeverityModel) -> float:
    """Premium income net of the reinsurance premium for retention R."""
    m = retention_moments(R, s)
    return (p.c - (1.0 + p.theta) * p.lambda_ * m.e_ceded
            - 0.5 * p.eta * p.lambda_ * m.e_ceded_sq)


def drift_form(R: RetentionFn, p: MarketParams, s: SeverityModel) -> float:
    """The same rate written as -kappa + lambda * [(1+theta)E[R] + eta E[YR]
    - (eta/2) E[R^2]] (the drift of the surplus dynamics)."""
    m = retention_moments(R, s)
    return -kappa(p, s) + p.lambda_ * ((1.0 + p.theta) * m.e_r
                                       + p.eta * m.e_yr
                                       - 0.5 * p.eta * m.e_r2)


def net_profit_check(R: RetentionFn, p: MarketParams,
                     s: SeverityModel) -> NetProfitReport:
    """Net-profit condition p_R > lambda E[R], plus the algebraic identity
    between the premium form and the drift form of p_R."""
    m = retention_moments(R, s)
    p_R = retained_premium_rate(R, p, s)
    margin = p_R - p.lambda_ * m.e_r
    gap = abs(p_R - drift_form(R, p, s))
    return NetProfitReport(p_R=p_R, margin=margin, ok=margin > 0.0,
                           identity_gap=gap)


def require_net_profit(R: RetentionFn, p: MarketParams,
                       s: SeverityModel) -> NetProfitReport:
    rep = net_profit_check(R, p, s)
    if not rep.ok:
        raise NetProfitViolated(
            f"retention {R!r} has net margin {rep.margin!r} <= 0")
    return rep


RETENTION_KINDS = ("full", "proportional", "cap", "diffusion_optimal",
                   "max_adjust")
