"""numba kernels behind the Monte Carlo routines.

Conventions shared by every kernel:

* ``g`` is a ``numpy.random.Generator`` owned by one block of replications.
* distributions travel as ``(code, param, loc, scale)`` float arrays, codes as
  in ``distlab.FAMILY_CODES``; KDE draws use ``kdata`` / ``bw``.
* a run length ``cap + 1`` means "no signal within cap observations".
* a negative return ``-m`` means the normalizer table must hold index ``m``.
"""
import math

import numba
import numpy as np

from ._normal import ndtri_raw

SQRT3 = math.sqrt(3.0)


@numba.njit(nogil=True, cache=True)
def draw(g, dist, kdata, bw):
    code = int(dist[0])
    if code == 0:
        raw = g.standard_normal()
    elif code == 1:
        raw = g.standard_t(dist[1])
    elif code == 2:
        d = dist[1] / math.sqrt(1.0 + dist[1] * dist[1])
        raw = d * abs(g.standard_normal()) + math.sqrt(1.0 - d * d) * g.standard_normal()
    elif code == 3:
        raw = 2.0 * g.random() - 1.0
    else:
        j = int(g.random() * kdata.shape[0])
        return kdata[j] + bw * g.standard_normal()
    return (raw - dist[2]) / dist[3]


@numba.njit(nogil=True, cache=True)
def fill_stream(g, x, start, tau, pre, post, shift, factor, kdata, bw):
    # x[k] is observation k + 1; observations 1..tau come from `pre`
    for k in range(start, x.shape[0]):
        if k < tau:
            x[k] = draw(g, pre, kdata, bw)
        else:
            x[k] = shift + factor * draw(g, post, kdata, bw)


@numba.njit(nogil=True, cache=True)
def xi_value(kind, i, s, r, nu):
    if kind == 2:
        return 6.0 * r * r / ((2.0 * i + 1.0) * (i + 1.0)) - 1.0
    if s == 0:
        return 0.0
    u = r / (i + 1.0)
    if kind == 0:
        j = SQRT3 * u
    else:
        j = ndtri_raw(0.5 * (1.0 + u))
    return s * j / nu[i]


@numba.njit(nogil=True, cache=True)
def tie_high_positions(mags):
    n = mags.shape[0]
    order = np.argsort(mags)
    pos = np.empty(n, dtype=np.int64)
    k = n - 1
    while k >= 0:
        top = k
        while k > 0 and mags[order[k - 1]] == mags[order[top]]:
            k -= 1
        for m in range(k, top + 1):
            pos[order[m]] = top + 1
        k -= 1
    return pos


@numba.njit(nogil=True, cache=True)
def _chart_pass(x, n, kind, nu, zu, hu, zd, hd, up, down):
    """Run the chart over x[:n]; returns signal index, 0 if none, or -need."""
    pos = tie_high_positions(np.abs(x[:n]))
    tree = np.zeros(n + 1, dtype=np.int64)
    dp = 0.0
    dm = 0.0
    for k in range(n):
        i = k + 1
        if kind != 2 and i >= nu.shape[0]:
            return -i
        p = pos[k]
        while p <= n:
            tree[p] += 1
            p += p & (-p)
        p = pos[k]
        r = 0
        while p > 0:
            r += tree[p]
            p -= p & (-p)
        v = x[k]
        s = 1 if v > 0.0 else (-1 if v < 0.0 else 0)
        xi = xi_value(kind, i, s, r, nu)
        if up:
            dp = max(0.0, dp + xi - zu)
            if dp > hu:
                return i
        if down:
            dm = min(0.0, dm + xi + zd)
            if dm < -hd:
                return i
    return 0


@numba.njit(nogil=True, cache=True)
def run_block_data(g, out, kind, nu, zu, hu, zd, hd, up, down, tau,
                   pre, post, shift, factor, kdata, bw, cap, init_len):
    """Data-driven replications: sample, rank, score, chart."""
    for rep in range(out.shape[0]):
        n = min(init_len, cap)
        x = np.empty(n)
        fill_stream(g, x, 0, tau, pre, post, shift, factor, kdata, bw)
        while True:
            res = _chart_pass(x, n, kind, nu, zu, hu, zd, hd, up, down)
            if res < 0:
                return res
            if res > 0:
                out[rep] = res
                break
            if n >= cap:
                out[rep] = cap + 1
                break
            m = min(2 * n, cap)
            y = np.empty(m)
            y[:n] = x
            fill_stream(g, y, n, tau, pre, post, shift, factor, kdata, bw)
            x = y
            n = m
    return 0


@numba.njit(nogil=True, cache=True)
def run_block_ranks(g, out, kind, nu, zu, hu, zd, hd, up, down, cap):
    """In-control replications drawing (sign, rank) directly from their null law."""
    for rep in range(out.shape[0]):
        dp = 0.0
        dm = 0.0
        res = cap + 1
        for i in range(1, cap + 1):
            if kind != 2 and i >= nu.shape[0]:
                return -i
            r = 1 + int(g.random() * i)
            if r > i:
                r = i
            s = 1 if g.random() < 0.5 else -1
            xi = xi_value(kind, i, s, r, nu)
            if up:
                dp = max(0.0, dp + xi - zu)
                if dp > hu:
                    res = i
                    break
            if down:
                dm = min(0.0, dm + xi + zd)
                if dm < -hd:
                    res = i
                    break
        out[rep] = res
    return 0


@numba.njit(nogil=True, cache=True)
def run_block_normal(g, out, zu, hu, zd, hd, up, down, tau, delta, cap):
    """Normal CUSUM: xi ~ N(0, 1) through tau, N(delta, 1) afterwards."""
    for rep in range(out.shape[0]):
        dp = 0.0
        dm = 0.0
        res = cap + 1
        for i in range(1, cap + 1):
            xi = g.standard_normal()
            if i > tau:
                xi += delta
            if up:
                dp = max(0.0, dp + xi - zu)
                if dp > hu:
                    res = i
                    break
            if down:
                dm = min(0.0, dm + xi + zd)
                if dm < -hd:
                    res = i
                    break
        out[rep] = res
    return 0


@numba.njit(nogil=True, cache=True)
def post_change_xi_means(g, out, kind, nu, tau, m, pre, post, shift, factor, kdata, bw):
    """Per replication, the mean of xi over observations tau+1..tau+m."""
    n = tau + m
    if kind != 2 and n >= nu.shape[0]:
        return -n
    x = np.empty(n)
    for rep in range(out.shape[0]):
        fill_stream(g, x, 0, tau, pre, post, shift, factor, kdata, bw)
        pos = tie_high_positions(np.abs(x))
        tree = np.zeros(n + 1, dtype=np.int64)
        acc = 0.0
        for k in range(n):
            i = k + 1
            p = pos[k]
            while p <= n:
                tree[p] += 1
                p += p & (-p)
            p = pos[k]
            r = 0
            while p > 0:
                r += tree[p]
                p -= p & (-p)
            if i > tau:
                v = x[k]
                s = 1 if v > 0.0 else (-1 if v < 0.0 else 0)
                acc += xi_value(kind, i, s, r, nu)
        out[rep] = acc / m
    return 0
