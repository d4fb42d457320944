"""Picard iteration for the fixed-barrier hitting probability.

For a constant retention R and a frozen barrier alpha*m, the probability
of hitting the barrier at or before the k-th claim satisfies

    psi_k(x) = int_x^inf (lam/p_R) e^{-lam (z-x)/p_R}
               * E[psi_{k-1}(z - R(Y))] dz,

with psi_0 = 0 above the barrier and every iterate equal to 1 below it.
The iterates increase to the hitting probability.

Discretization: psi is stored at uniform nodes and interpolated linearly.
Because the nodes are uniform, the inner expectation of the interpolant
has exact weights: partition claims y by which multiple of the grid step
R(y) reaches; on each cell the argument z - R(y) stays inside one linear
segment, so only the cell mass F_k and the partial first moment
G_k = int R(y) dF(y) are needed, both computed once per solve.  Each
iteration is then two discrete convolutions plus an exact backward sweep
for the outer exponential kernel.  The outer integral is truncated at
x_max, chosen so the Lundberg tail e^{-J (x_max - alpha m)} is below
1e-10; the dropped mass is tracked per node in ``trunc_budget``.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import MaxIterations
from .model import Deterministic, Exponential, MarketParams, SeverityModel
from .retention import (RetentionFn, require_net_profit)
from .adjustment import solve_J

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class PicardGrid:
    """State of the iteration: nodes, values, and bookkeeping."""

    x: np.ndarray
    values: np.ndarray
    m: float
    alpha: float
    p_R: float
    J: float
    iteration: int
    trunc_budget: np.ndarray
    sup_change: float = math.inf

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    def interp(self, x):
        """Surface value with the barrier extension (1 below alpha*m)."""
        pts = np.asarray(x, dtype=float)
        vals = np.interp(pts, self.x, self.values)
        out = np.where(pts < self.x[0], 1.0, vals)
        return out if out.ndim else float(out)


class _Operator:
    """Iteration-independent machinery of one Picard solve."""

    def __init__(self, R: RetentionFn, p: MarketParams, s: SeverityModel,
                 m: float, nodes: int, x_max):
        rep = require_net_profit(R, p, s)
        self.R, self.p, self.s, self.m = R, p, s, m
        self.p_R = rep.p_R
        self.J = solve_J(R, p, s)
        self.barrier = p.alpha * m
        if x_max is None:
            x_max = self.barrier + 26.0 / self.J
        self.x = np.linspace(self.barrier, x_max, nodes)
        self.h = float(self.x[1] - self.x[0])
        self.beta = p.lambda_ / self.p_R
        n_seg = nodes - 1

        # tail mass P(R(Y) > i h), exact through the severity survival
        inv = np.array([R.inverse(i * self.h) for i in range(nodes)])
        self.tail = np.asarray(s.survival(inv), dtype=float)

        self.atom = isinstance(s, Deterministic)
        if self.atom:
            self.r_atom = float(R(s.b))
        else:
            self._build_weights(inv, n_seg)

        # outer kernel coefficients on one grid step
        q = math.exp(-self.beta * self.h)
        self.q = q
        self.c1 = (1.0 - q) / self.beta
        x = self.beta * self.h
        self.c2 = (-math.expm1(-x) - x * q) / self.beta ** 2

    def _build_weights(self, inv, n_seg):
        y_cut = self.s.tail_cut(0.0)
        # cells in claim space: preimages of the grid multiples of h;
        # beyond y_cut the remaining mass is numerically absent
        n_cells = min(int(np.searchsorted(inv, y_cut, side="left")),
                      len(inv) - 1)
        n_cells = max(n_cells, 1)
        sv = np.asarray(self.s.survival(inv), dtype=float)
        F = sv[:n_cells] - sv[1:n_cells + 1]
        self.F = F

        # partial first moments G_k = int_cell R dF, by panel quadrature
        edges = np.minimum(inv[:n_cells + 1], y_cut)
        kinks = [k for k in self.R.kinks() if edges[0] < k < edges[-1]]
        breaks = np.unique(np.concatenate([edges, kinks]))
        if isinstance(self.s, Exponential):
            max_w = 0.5 / self.s.rate
        else:
            max_w = y_cut / 16.0
        panels = []
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            if hi <= lo:
                continue
            n_p = max(1, int(math.ceil((hi - lo) / max_w)))
            sub = np.linspace(lo, hi, n_p + 1)
            panels.append(np.stack([sub[:-1], sub[1:]], axis=1))
        panels = np.concatenate(panels, axis=0)
        mid = 0.5 * (panels[:, 0] + panels[:, 1])
        half = 0.5 * (panels[:, 1] - panels[:, 0])
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        dens = self._density(pts)
        vals = self.R(pts.ravel()).reshape(pts.shape) * dens
        panel_ints = half * (vals @ _GL_WEIGHTS)
        owner = np.clip(np.searchsorted(edges, mid, side="right") - 1,
                        0, n_cells - 1)
        G = np.zeros(n_cells)
        np.add.at(G, owner, panel_ints)
        self.G = G
        ks = np.arange(n_cells)
        self.W1 = (ks + 1.0) * self.h * F - G

    def _density(self, y):
        if isinstance(self.s, Exponential):
            return self.s.rate * np.exp(-self.s.rate * y)
        return np.full_like(y, 1.0 / self.s.b)

    def inner(self, values):
        """E[psi(z_i - R(Y))] at every node, exact for the interpolant."""
        if self.atom:
            return np.where(self.x - self.r_atom < self.x[0], 1.0,
                            np.interp(self.x - self.r_atom, self.x, values))
        a = values[:-1]
        b = np.diff(values) / self.h
        conv = (np.convolve(a, self.F) + np.convolve(b, self.W1))
        out = np.empty_like(values)
        out[0] = self.tail[0]
        n = len(values)
        out[1:] = conv[:n - 1] + self.tail[1:n]
        return out

    def sweep(self, g):
        """beta * int_x^xmax e^{-beta (z-x)} G(z) dz for pw-linear G."""
        n = len(g)
        slope = np.diff(g) / self.h
        acc = 0.0
        out = np.empty_like(g)
        out[-1] = 0.0
        for j in range(n - 2, -1, -1):
            acc = self.c1 * g[j] + self.c2 * slope[j] + self.q * acc
            out[j] = acc
        return self.beta * out

    def step(self, values):
        return self.sweep(self.inner(values))

    def initial_grid(self):
        budget = np.exp(-self.beta * (self.x[-1] - self.x))
        return PicardGrid(x=self.x, values=np.zeros_like(self.x), m=self.m,
                          alpha=self.p.alpha, p_R=self.p_R, J=self.J,
                          iteration=0, trunc_budget=budget)


def picard_grid(R: RetentionFn, p: MarketParams, s: SeverityModel, m: float,
                nodes: int = 2048, x_max=None) -> PicardGrid:
    """Fresh grid with psi_0 = 0 above the barrier."""
    return _Operator(R, p, s, m, nodes, x_max).initial_grid()


def picard_step(grid: PicardGrid, R: RetentionFn, p: MarketParams,
                s: SeverityModel, m: float) -> PicardGrid:
    """One application of the claim-indexed recursion."""
    op = _Operator(R, p, s, m, len(grid.x), float(grid.x[-1]))
    new_vals = op.step(grid.values)
    return replace(grid, values=new_vals, iteration=grid.iteration + 1,
                   sup_change=float(np.max(np.abs(new_vals - grid.values))))


def picard_solve(R: RetentionFn, p: MarketParams, s: SeverityModel, m: float,
                 tol: float = 1e-7, max_iter: int = 10 ** 4,
                 nodes: int = 2048, x_max=None) -> PicardGrid:
    """Iterate to the monotone fixed point (sup-node change below tol)."""
    op = _Operator(R, p, s, m, nodes, x_max)
    grid = op.initial_grid()
    values = grid.values
    for it in range(1, max_iter + 1):
        new_vals = op.step(values)
        change = float(np.max(np.abs(new_vals - values)))
        values = new_vals
        if change < tol:
            return replace(grid, values=values, iteration=it,
                           sup_change=change)
    raise MaxIterations(
        f"no convergence below {tol!r} within {max_iter} iterations "
        f"(last change {change!r})")
