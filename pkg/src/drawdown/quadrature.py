"""Composite Gauss-Legendre quadrature with panel doubling.

All expectations in the library reduce to integrals of piecewise-smooth
integrands on finite intervals (severity tails are truncated where the
survival mass is negligible).  Splitting at the known kinks and doubling
the panel count until two refinements agree gives near machine-precision
results at modest cost, and the integrands accept numpy arrays so each
refinement is one vectorized call.
"""

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(12)


def _panel_eval(f, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = (mid[:, None] + half * _NODES[None, :]).ravel()
    vals = np.asarray(f(pts), dtype=float)
    if vals.ndim == 1:
        vals = vals.reshape(panels, _NODES.size)
        return half * np.sum(vals @ _WEIGHTS)
    # multi-component integrand: shape (k, npts)
    k = vals.shape[0]
    vals = vals.reshape(k, panels, _NODES.size)
    return half * np.sum(vals @ _WEIGHTS, axis=1)


def _segment(f, a, b, rel_tol, abs_tol, max_level):
    prev = _panel_eval(f, a, b, 2)
    panels = 4
    for _ in range(max_level):
        cur = _panel_eval(f, a, b, panels)
        err = np.abs(cur - prev)
        tol = rel_tol * np.abs(cur) + abs_tol
        if np.all(err <= tol):
            return cur
        prev = cur
        panels *= 2
    return cur


def integrate(f, a, b, *, breakpoints=(), rel_tol=1e-13, abs_tol=1e-300,
              max_level=12):
    """Integrate ``f`` on ``[a, b]``, splitting at interior ``breakpoints``.

    ``f`` maps a 1-D numpy array of abscissae to either a matching array or
    a ``(k, n)`` array of ``k`` integrand components evaluated jointly.
    """
    if b <= a:
        probe = np.asarray(f(np.array([a])), dtype=float)
        return 0.0 if probe.ndim == 1 else np.zeros(probe.shape[0])
    cuts = [a]
    for p in sorted(breakpoints):
        if a < p < b:
            cuts.append(float(p))
    cuts.append(b)
    total = None
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        part = _segment(f, lo, hi, rel_tol, abs_tol, max_level)
        total = part if total is None else total + part
    return total
