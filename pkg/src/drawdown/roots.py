"""Scalar root bracketing, bisection, and monotone integer searches.

Bisection is used everywhere a transcendental equation must be solved: it
is slower than Newton but the objectives here are monotone on a known
bracket, so convergence is unconditional.
"""

import math

from .errors import SolverNoBracket

_MAX_ITER = 300


def bisect(f, lo, hi, *, f_lo=None, f_hi=None, rtol=4e-16, atol=0.0,
           max_iter=_MAX_ITER):
    """Root of ``f`` on ``[lo, hi]`` given a sign change at the endpoints.

    Stops when the bracket width falls below ``rtol * |mid| + atol`` (or on
    an exact zero) and returns the midpoint.
    """
    if f_lo is None:
        f_lo = f(lo)
    if f_hi is None:
        f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise SolverNoBracket(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if (hi - lo) <= rtol * abs(mid) + atol:
            break
    return 0.5 * (lo + hi)


def grow_bracket(f, lo, hi, *, factor=2.0, hi_cap=math.inf,
                 max_iter=_MAX_ITER):
    """Expand ``hi`` geometrically until ``f`` changes sign against ``f(lo)``.

    Returns ``(lo, hi, f_lo, f_hi)``.  ``hi`` never exceeds ``hi_cap``.
    """
    f_lo = f(lo)
    f_hi = f(hi)
    for _ in range(max_iter):
        if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0.0) != (f_hi > 0.0):
            return lo, hi, f_lo, f_hi
        if hi >= hi_cap:
            break
        lo, f_lo = hi, f_hi
        hi = min(hi * factor, hi_cap)
        f_hi = f(hi)
    if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0.0) != (f_hi > 0.0):
        return lo, hi, f_lo, f_hi
    raise SolverNoBracket(
        f"could not bracket a root below {hi_cap!r} (last f={f_hi!r})")


def solve_increasing(f, *, lo=1e-12, hi=1.0, hi_cap=math.inf, rtol=4e-16):
    """Positive root of an increasing ``f`` with ``f(0+) < 0``."""
    lo, hi, f_lo, f_hi = grow_bracket(f, lo, hi, hi_cap=hi_cap)
    return bisect(f, lo, hi, f_lo=f_lo, f_hi=f_hi, rtol=rtol)


def smallest_integer_where(pred, start=1, max_exponent=200):
    """Smallest integer ``n >= start`` with ``pred(n)`` true.

    ``pred`` must be monotone (False up to some point, then True).  Search
    doubles from ``start`` and then bisects on the integers.
    """
    n = max(int(start), 1)
    if pred(n):
        return n
    lo = n
    hi = n
    for _ in range(max_exponent):
        hi = max(hi * 2, hi + 1)
        if pred(hi):
            break
        lo = hi
    else:
        raise SolverNoBracket("monotone integer predicate never became true")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi
