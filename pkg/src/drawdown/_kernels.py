"""Compiled Monte Carlo kernels with a counter-based RNG.

RNG: Philox4x32-10.  Each 64-bit draw is a pure function of
(key, counter) = ((seed_lo, seed_hi), (block, path, stream, 0)), so path i
consumes the same randomness no matter how paths are grouped into batches
or threads; one block yields two 64-bit words and the kernels cache the
spare word.  Exponential and normal variates use exact ziggurat samplers
(tables are built at import time by solving the layer-closure condition),
so the hot path needs no transcendental calls.  Rejection steps simply
consume further words of the path's stream, which keeps everything
deterministic per (seed, path index).
"""

import math

import numpy as np
from numba import njit, prange

U32 = np.uint32
U64 = np.uint64

_M0 = U64(0xD2511F53)
_M1 = U64(0xCD9E8D57)
_W0 = U32(0x9E3779B9)
_W1 = U32(0xBB67AE85)
_MASK32 = U64(0xFFFFFFFF)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53

SEV_EXPONENTIAL = 0
SEV_UNIFORM = 1
SEV_DETERMINISTIC = 2

RET_FULL = 0
RET_PROPORTIONAL = 1
RET_CAP = 2
RET_DIFFUSION_OPTIMAL = 3
RET_MAX_ADJUST = 4

OUT_DRAWDOWN = 1
OUT_ESCAPED = 2

STREAM_JUMP = 0
STREAM_DIFFUSION = 1


def _build_exp_ziggurat(n_layers=256):
    """Layer tables for f(x) = exp(-x): solve the base width r so the
    equal-area recursion closes exactly at the density maximum."""

    def top_gap(r):
        v = (r + 1.0) * math.exp(-r)  # rect + tail area of the base strip
        x = r
        for _ in range(n_layers - 2):
            arg = v / x + math.exp(-x)
            if arg >= 1.0:
                return 1.0  # slabs reached the maximum early: r too small
            x = -math.log(arg)
        return v / x + math.exp(-x) - 1.0

    lo, hi = 1.0, 20.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if top_gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    r = hi  # safe side: the recursion stays below the density maximum
    v = (r + 1.0) * math.exp(-r)
    xs = np.zeros(n_layers + 1)
    ys = np.zeros(n_layers + 1)
    xs[1] = r
    xs[0] = v * math.exp(r)  # virtual width of the base strip
    for i in range(1, n_layers - 1):
        xs[i + 1] = -math.log(v / xs[i] + math.exp(-xs[i]))
    xs[n_layers] = 0.0
    ys[0] = 0.0
    for i in range(1, n_layers + 1):
        ys[i] = math.exp(-xs[i]) if xs[i] > 0.0 else 1.0
    return xs, ys, r


def _build_norm_ziggurat(n_layers=256):
    """Layer tables for f(x) = exp(-x^2/2) on x >= 0 (sign added later)."""

    def top_gap(r):
        v = r * math.exp(-0.5 * r * r) \
            + math.sqrt(0.5 * math.pi) * math.erfc(r / math.sqrt(2.0))
        x = r
        for _ in range(n_layers - 2):
            arg = v / x + math.exp(-0.5 * x * x)
            if arg >= 1.0:
                return 1.0  # r too small
            x = math.sqrt(-2.0 * math.log(arg))
        return v / x + math.exp(-0.5 * x * x) - 1.0

    lo, hi = 1.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if top_gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    r = hi
    v = r * math.exp(-0.5 * r * r) \
        + math.sqrt(0.5 * math.pi) * math.erfc(r / math.sqrt(2.0))
    xs = np.zeros(n_layers + 1)
    ys = np.zeros(n_layers + 1)
    xs[1] = r
    xs[0] = v * math.exp(0.5 * r * r)
    for i in range(1, n_layers - 1):
        xs[i + 1] = math.sqrt(-2.0 * math.log(v / xs[i]
                                              + math.exp(-0.5 * xs[i] * xs[i])))
    xs[n_layers] = 0.0
    ys[0] = 0.0
    for i in range(1, n_layers + 1):
        ys[i] = math.exp(-0.5 * xs[i] * xs[i]) if xs[i] > 0.0 else 1.0
    return xs, ys, r


_EXP_X, _EXP_Y, _EXP_R = _build_exp_ziggurat()
_NORM_X, _NORM_Y, _NORM_R = _build_norm_ziggurat()


@njit(cache=True, inline="always")
def _philox_block(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * U64(c0)
        p1 = _M1 * U64(c2)
        hi0 = U32(p0 >> U64(32))
        lo0 = U32(p0 & _MASK32)
        hi1 = U32(p1 >> U64(32))
        lo1 = U32(p1 & _MASK32)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = U32(k0 + _W0)
        k1 = U32(k1 + _W1)
    return c0, c1, c2, c3


@njit(cache=True, inline="always")
def _next_u64(idx, cache, have, path, stream, k0, k1):
    """Next 64-bit word of the path's stream; one Philox block per two."""
    if have:
        return cache, idx, U64(0), False
    x0, x1, x2, x3 = _philox_block(U32(idx), U32(path), U32(stream), U32(0),
                                   k0, k1)
    w0 = (U64(x0) << U64(32)) | U64(x1)
    w1 = (U64(x2) << U64(32)) | U64(x3)
    return w0, idx + 1, w1, True


@njit(cache=True, inline="always")
def _w_to_u01(w):
    return float(w >> U64(11)) * _INV53


@njit(cache=True, inline="always")
def _exp_draw(idx, cache, have, path, stream, k0, k1):
    """Exact unit-exponential variate by ziggurat."""
    while True:
        w, idx, cache, have = _next_u64(idx, cache, have, path, stream,
                                        k0, k1)
        i = int(w & U64(255))
        u = _w_to_u01(w)
        x = u * _EXP_X[i]
        if x < _EXP_X[i + 1]:
            return x, idx, cache, have
        w2, idx, cache, have = _next_u64(idx, cache, have, path, stream,
                                         k0, k1)
        u2 = _w_to_u01(w2)
        if i == 0:
            # beyond the base strip: memoryless tail
            return _EXP_R - np.log1p(-u2), idx, cache, have
        if _EXP_Y[i] + u2 * (_EXP_Y[i + 1] - _EXP_Y[i]) < np.exp(-x):
            return x, idx, cache, have


@njit(cache=True, inline="always")
def _norm_draw(idx, cache, have, path, stream, k0, k1):
    """Exact standard-normal variate by ziggurat (sign from bit 8)."""
    while True:
        w, idx, cache, have = _next_u64(idx, cache, have, path, stream,
                                        k0, k1)
        i = int(w & U64(255))
        sign = -1.0 if (w >> U64(8)) & U64(1) else 1.0
        u = _w_to_u01(w)
        x = u * _NORM_X[i]
        if x < _NORM_X[i + 1]:
            return sign * x, idx, cache, have
        if i == 0:
            # tail beyond r: Marsaglia's exact tail sampler
            while True:
                wa, idx, cache, have = _next_u64(idx, cache, have, path,
                                                 stream, k0, k1)
                wb, idx, cache, have = _next_u64(idx, cache, have, path,
                                                 stream, k0, k1)
                xt = -np.log1p(-_w_to_u01(wa)) / _NORM_R
                yt = -np.log1p(-_w_to_u01(wb))
                if 2.0 * yt > xt * xt:
                    return sign * (_NORM_R + xt), idx, cache, have
        w2, idx, cache, have = _next_u64(idx, cache, have, path, stream,
                                         k0, k1)
        u2 = _w_to_u01(w2)
        if (_NORM_Y[i] + u2 * (_NORM_Y[i + 1] - _NORM_Y[i])
                < np.exp(-0.5 * x * x)):
            return sign * x, idx, cache, have


@njit(cache=True, inline="always")
def _severity_draw(idx, cache, have, path, stream, k0, k1, skind, sparam):
    if skind == SEV_EXPONENTIAL:
        e, idx, cache, have = _exp_draw(idx, cache, have, path, stream,
                                        k0, k1)
        return e / sparam, idx, cache, have
    if skind == SEV_UNIFORM:
        w, idx, cache, have = _next_u64(idx, cache, have, path, stream,
                                        k0, k1)
        return sparam * (1.0 - _w_to_u01(w)), idx, cache, have
    return sparam, idx, cache, have


@njit(cache=True, inline="always")
def _retained(y, rkind, rp0, rp1, rp2, rp3):
    # parameters: PROPORTIONAL (q), CAP (d), DIFFUSION_OPTIMAL
    # (rho, theta, eta), MAX_ADJUST (rho, n, theta, eta)
    if rkind == RET_FULL:
        return y
    if rkind == RET_PROPORTIONAL:
        return rp0 * y
    if rkind == RET_CAP:
        return min(y, rp0)
    if rkind == RET_DIFFUSION_OPTIMAL:
        return min((rp1 + rp2 * y) / (rp0 + rp2), y)
    # adjustment-maximizing rule: full retention below the threshold, then
    # bisection on (sqrt(n)+theta) + eta (y - R) = sqrt(n) e^{rho R/sqrt(n)}
    rho, n, theta, eta = rp0, rp1, rp2, rp3
    root = np.sqrt(n)
    threshold = (root / rho) * np.log1p(theta / root)
    if y <= threshold:
        return y
    lo = 0.0
    hi = y
    shift = root + theta
    a = rho / root
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if shift + eta * (y - mid) - root * np.exp(a * mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13:
            break
    return 0.5 * (lo + hi)


@njit(cache=True)
def _jump_range(path_lo, path_hi, k0, k1, x0, m0, alpha, b, drift,
                jump_rate, inv_root_n, running_max, skind, sparam,
                rkind, rp0, rp1, rp2, rp3, outcomes, base):
    """Exact jump-chain simulation of paths [path_lo, path_hi)."""
    inv_rate = 1.0 / jump_rate
    for path in range(path_lo, path_hi):
        x = x0
        mx = m0
        bar = alpha * m0
        out = OUT_ESCAPED
        idx = 0
        cache = U64(0)
        have = False
        if x0 < b:
            while True:
                e, idx, cache, have = _exp_draw(idx, cache, have, path,
                                                STREAM_JUMP, k0, k1)
                x_pre = x + drift * (e * inv_rate)
                if x_pre >= b:
                    out = OUT_ESCAPED
                    break
                if running_max and x_pre > mx:
                    mx = x_pre
                    bar = alpha * mx
                y, idx, cache, have = _severity_draw(
                    idx, cache, have, path, STREAM_JUMP, k0, k1, skind,
                    sparam)
                x = x_pre - _retained(y, rkind, rp0, rp1, rp2, rp3) \
                    * inv_root_n
                if x < bar:
                    out = OUT_DRAWDOWN
                    break
        outcomes[path - base] = out


@njit(cache=True, parallel=True)
def _jump_all(edges, k0, k1, x0, m0, alpha, b, drift, jump_rate,
              inv_root_n, running_max, skind, sparam, rkind,
              rp0, rp1, rp2, rp3, outcomes):
    for bi in prange(len(edges) - 1):
        _jump_range(edges[bi], edges[bi + 1], k0, k1, x0, m0, alpha, b,
                    drift, jump_rate, inv_root_n, running_max, skind,
                    sparam, rkind, rp0, rp1, rp2, rp3, outcomes, 0)


@njit(cache=True)
def _diffusion_range(path_lo, path_hi, k0, k1, x0, m0, alpha, b, mu_dt,
                     sig_dt, running_max, outcomes, base):
    """Euler scheme for the Brownian surplus; one normal per step."""
    for path in range(path_lo, path_hi):
        x = x0
        mx = m0
        bar = alpha * m0
        out = OUT_ESCAPED
        idx = 0
        cache = U64(0)
        have = False
        if x0 < b:
            while True:
                z, idx, cache, have = _norm_draw(idx, cache, have, path,
                                                 STREAM_DIFFUSION, k0, k1)
                x += mu_dt + sig_dt * z
                if x >= b:
                    out = OUT_ESCAPED
                    break
                if running_max and x > mx:
                    mx = x
                    bar = alpha * mx
                if x < bar:
                    out = OUT_DRAWDOWN
                    break
        outcomes[path - base] = out


@njit(cache=True, parallel=True)
def _diffusion_all(edges, k0, k1, x0, m0, alpha, b, mu_dt, sig_dt,
                   running_max, outcomes):
    for bi in prange(len(edges) - 1):
        _diffusion_range(edges[bi], edges[bi + 1], k0, k1, x0, m0, alpha, b,
                         mu_dt, sig_dt, running_max, outcomes, 0)


def _split_seed(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return U32(seed & 0xFFFFFFFF), U32((seed >> 32) & 0xFFFFFFFF)


def jump_paths(edges, seed, x0, m0, alpha, b, drift, jump_rate, inv_root_n,
               running_max, skind, sparam, rkind, rparams):
    """All batches of the jump simulation; outcome codes per path."""
    k0, k1 = _split_seed(seed)
    edges = np.asarray(edges, dtype=np.int64)
    outcomes = np.zeros(int(edges[-1]), dtype=np.uint8)
    rp = _pad(rparams)
    _jump_all(edges, k0, k1, x0, m0, alpha, b, drift, jump_rate,
              inv_root_n, running_max, skind, sparam, rkind,
              rp[0], rp[1], rp[2], rp[3], outcomes)
    return outcomes


def jump_single(path_index, seed, x0, m0, alpha, b, drift, jump_rate,
                inv_root_n, running_max, skind, sparam, rkind, rparams):
    k0, k1 = _split_seed(seed)
    outcomes = np.zeros(1, dtype=np.uint8)
    rp = _pad(rparams)
    _jump_range(path_index, path_index + 1, k0, k1, x0, m0, alpha, b, drift,
                jump_rate, inv_root_n, running_max, skind, sparam, rkind,
                rp[0], rp[1], rp[2], rp[3], outcomes, path_index)
    return int(outcomes[0])


def diffusion_paths(edges, seed, x0, m0, alpha, b, mu, sigma, dt,
                    running_max):
    k0, k1 = _split_seed(seed)
    edges = np.asarray(edges, dtype=np.int64)
    outcomes = np.zeros(int(edges[-1]), dtype=np.uint8)
    _diffusion_all(edges, k0, k1, x0, m0, alpha, b, mu * dt,
                   sigma * math.sqrt(dt), running_max, outcomes)
    return outcomes


def diffusion_single(path_index, seed, x0, m0, alpha, b, mu, sigma, dt,
                     running_max):
    k0, k1 = _split_seed(seed)
    outcomes = np.zeros(1, dtype=np.uint8)
    _diffusion_range(path_index, path_index + 1, k0, k1, x0, m0, alpha, b,
                     mu * dt, sigma * math.sqrt(dt), running_max, outcomes,
                     path_index)
    return int(outcomes[0])


def exp_draws(count, seed, stream=STREAM_JUMP, path=0):
    """Unit-exponential stream (test hook for the ziggurat sampler)."""
    k0, k1 = _split_seed(seed)
    out = np.empty(count)
    _fill_exp(out, U32(path), U32(stream), k0, k1)
    return out


def norm_draws(count, seed, stream=STREAM_DIFFUSION, path=0):
    """Standard-normal stream (test hook for the ziggurat sampler)."""
    k0, k1 = _split_seed(seed)
    out = np.empty(count)
    _fill_norm(out, U32(path), U32(stream), k0, k1)
    return out


@njit(cache=True)
def _fill_exp(out, path, stream, k0, k1):
    idx = 0
    cache = U64(0)
    have = False
    for j in range(out.size):
        out[j], idx, cache, have = _exp_draw(idx, cache, have, path, stream,
                                             k0, k1)


@njit(cache=True)
def _fill_norm(out, path, stream, k0, k1):
    idx = 0
    cache = U64(0)
    have = False
    for j in range(out.size):
        out[j], idx, cache, have = _norm_draw(idx, cache, have, path, stream,
                                              k0, k1)


def _pad(params):
    out = [0.0, 0.0, 0.0, 0.0]
    for i, v in enumerate(params):
        out[i] = float(v)
    return out
