"""Numba kernels for piecewise Poisson cost functions.

A cost function of the segment mean is stored as a float64 array with one
row per piece. Each row holds the interval, the coefficients of
``linear * mu + log * log(mu) + const`` and the backtrace annotations used
by the decoder. An array with zero rows is the all-infinite function.

Every kernel returns a fresh array and never writes to its inputs.
"""

import numpy as np
from numba import njit

LO, HI, LINEAR, LOG, CONST, PREV_END, PREV_STATE, PREV_MEAN = range(8)
NCOL = 8

# prev_end / prev_state sentinel; prev_mean uses NaN for "same as current"
NO_PREV = -1.0

MERGE_TOL = 1e-10
ROOT_RTOL = 1e-12
SNAP_RTOL = 1e-12

# update modes, indexed by [rule code, state]
MODE_INFINITE = 0
MODE_STAY = 1
MODE_STAY_OR_CHANGE = 2

RULE_MODES = np.array(
    [
        [2, 2],  # unlabeled
        [2, 0],  # noPeaks
        [2, 0],  # peakStart, first index
        [1, 2],  # peakStart, interior
        [0, 2],  # peakStart, last index
        [0, 2],  # peakEnd, first index
        [2, 1],  # peakEnd, interior
        [2, 0],  # peakEnd, last index
    ],
    dtype=np.int8,
)


@njit(cache=True)
def piece_value(a, b, c, mu):
    """Evaluate a*mu + b*log(mu) + c with the 0*log(0) = 0 convention."""
    if mu <= 0.0:
        if b == 0.0:
            return c
        return np.inf if b < 0.0 else -np.inf
    return a * mu + b * np.log(mu) + c


@njit(cache=True)
def empty_function():
    return np.empty((0, NCOL))


@njit(cache=True)
def zero_function(mu_min, mu_max):
    out = np.zeros((1, NCOL))
    out[0, LO] = mu_min
    out[0, HI] = mu_max
    out[0, PREV_END] = NO_PREV
    out[0, PREV_STATE] = NO_PREV
    out[0, PREV_MEAN] = np.nan
    return out


@njit(cache=True)
def _same_mean(x, y):
    if np.isnan(x):
        return np.isnan(y)
    if np.isnan(y):
        return False
    return abs(x - y) <= MERGE_TOL


@njit(cache=True)
def _push(out, k, lo, hi, a, b, c, pe, ps, pm):
    """Append a piece on [lo, hi], merging with the previous one if equal."""
    if k > 0:
        lo = out[k - 1, HI]
    if not hi > lo:
        return k
    if k > 0:
        q = k - 1
        if (
            abs(out[q, LINEAR] - a) < MERGE_TOL
            and abs(out[q, LOG] - b) < MERGE_TOL
            and abs(out[q, CONST] - c) < MERGE_TOL
            and out[q, PREV_END] == pe
            and out[q, PREV_STATE] == ps
            and _same_mean(out[q, PREV_MEAN], pm)
        ):
            out[q, HI] = hi
            return k
    out[k, LO] = lo
    out[k, HI] = hi
    out[k, LINEAR] = a
    out[k, LOG] = b
    out[k, CONST] = c
    out[k, PREV_END] = pe
    out[k, PREV_STATE] = ps
    out[k, PREV_MEAN] = pm
    return k + 1


@njit(cache=True)
def _record(tmp, k, lo, hi, a, b, c, pe, ps, pm):
    """Unmerged append used by right-to-left scans."""
    if not hi > lo:
        return k
    tmp[k, LO] = lo
    tmp[k, HI] = hi
    tmp[k, LINEAR] = a
    tmp[k, LOG] = b
    tmp[k, CONST] = c
    tmp[k, PREV_END] = pe
    tmp[k, PREV_STATE] = ps
    tmp[k, PREV_MEAN] = pm
    return k + 1


@njit(cache=True)
def stationary_point(a, b, lo, hi):
    """Interior zero of a + b/mu on (lo, hi), or -1 when there is none."""
    if a == 0.0 or b == 0.0:
        return -1.0
    m = -b / a
    if lo < m < hi:
        return m
    return -1.0


@njit(cache=True)
def _snap(x, lo, hi):
    tol = SNAP_RTOL * max(abs(lo), abs(hi), 1.0)
    if x - lo <= tol:
        return lo
    if hi - x <= tol:
        return hi
    return x


@njit(cache=True)
def find_root(a, b, c, lo, hi):
    """Zero of a*mu + b*log(mu) + c on [lo, hi].

    The function must be monotone on the interval with a sign change
    between the endpoints. Newton steps are taken while they stay inside
    the current bracket, bisection otherwise.
    """
    glo = piece_value(a, b, c, lo)
    ghi = piece_value(a, b, c, hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    increasing = ghi > glo
    x = 0.5 * (lo + hi)
    for _ in range(300):
        g = piece_value(a, b, c, x)
        if g == 0.0:
            return x
        if (g < 0.0) == increasing:
            lo = x
        else:
            hi = x
        if hi - lo <= ROOT_RTOL * hi:
            return 0.5 * (lo + hi)
        d = a + b / x
        xn = x - g / d if d != 0.0 else x
        if d != 0.0 and lo < xn < hi:
            if abs(xn - x) <= ROOT_RTOL * abs(x):
                return xn
            x = xn
        else:
            x = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


@njit(cache=True)
def add_loss(F, z, w):
    out = F.copy()
    for k in range(out.shape[0]):
        out[k, LINEAR] += w
        out[k, LOG] -= w * z
    return out


@njit(cache=True)
def add_constant(F, lam):
    out = F.copy()
    for k in range(out.shape[0]):
        out[k, CONST] += lam
    return out


@njit(cache=True)
def set_backtrace(F, prev_end, prev_state):
    out = F.copy()
    for k in range(out.shape[0]):
        out[k, PREV_END] = prev_end
        out[k, PREV_STATE] = prev_state
    return out


@njit(cache=True)
def min_less(F):
    """Prefix minimum: out(mu) = min over x <= mu of F(x)."""
    P = F.shape[0]
    out = np.empty((3 * P + 1, NCOL))
    k = 0
    run_min = np.inf
    run_arg = np.nan
    run_pe = NO_PREV
    run_ps = NO_PREV
    for j in range(P):
        a = F[j, LINEAR]
        b = F[j, LOG]
        c = F[j, CONST]
        pe = F[j, PREV_END]
        ps = F[j, PREV_STATE]
        lo = F[j, LO]
        hi = F[j, HI]
        m = stationary_point(a, b, lo, hi)
        nsub = 2 if m > 0.0 else 1
        for t in range(nsub):
            if nsub == 1:
                l, h = lo, hi
            elif t == 0:
                l, h = lo, m
            else:
                l, h = m, hi
            slope = a + b / (0.5 * (l + h))
            fl = piece_value(a, b, c, l)
            fh = piece_value(a, b, c, h)
            if slope < 0.0:
                if fh >= run_min:
                    k = _push(out, k, l, h, 0.0, 0.0, run_min, run_pe, run_ps, run_arg)
                else:
                    if fl <= run_min:
                        x = l
                    else:
                        x = _snap(find_root(a, b, c - run_min, l, h), l, h)
                    k = _push(out, k, l, x, 0.0, 0.0, run_min, run_pe, run_ps, run_arg)
                    k = _push(out, k, x, h, a, b, c, pe, ps, np.nan)
                    run_min = fh
                    run_arg = h
                    run_pe = pe
                    run_ps = ps
            else:
                if fl < run_min:
                    run_min = fl
                    run_arg = l
                    run_pe = pe
                    run_ps = ps
                k = _push(out, k, l, h, 0.0, 0.0, run_min, run_pe, run_ps, run_arg)
    return out[:k].copy()


@njit(cache=True)
def min_more(F):
    """Suffix minimum: out(mu) = min over x >= mu of F(x)."""
    P = F.shape[0]
    tmp = np.empty((3 * P + 1, NCOL))
    k = 0
    run_min = np.inf
    run_arg = np.nan
    run_pe = NO_PREV
    run_ps = NO_PREV
    for j in range(P - 1, -1, -1):
        a = F[j, LINEAR]
        b = F[j, LOG]
        c = F[j, CONST]
        pe = F[j, PREV_END]
        ps = F[j, PREV_STATE]
        lo = F[j, LO]
        hi = F[j, HI]
        m = stationary_point(a, b, lo, hi)
        nsub = 2 if m > 0.0 else 1
        for t in range(nsub):
            if nsub == 1:
                l, h = lo, hi
            elif t == 0:
                l, h = m, hi
            else:
                l, h = lo, m
            slope = a + b / (0.5 * (l + h))
            fl = piece_value(a, b, c, l)
            fh = piece_value(a, b, c, h)
            if slope > 0.0:
                if fl >= run_min:
                    k = _record(tmp, k, l, h, 0.0, 0.0, run_min, run_pe, run_ps, run_arg)
                else:
                    if fh <= run_min:
                        x = h
                    else:
                        x = _snap(find_root(a, b, c - run_min, l, h), l, h)
                    k = _record(tmp, k, x, h, 0.0, 0.0, run_min, run_pe, run_ps, run_arg)
                    k = _record(tmp, k, l, x, a, b, c, pe, ps, np.nan)
                    run_min = fl
                    run_arg = l
                    run_pe = pe
                    run_ps = ps
            else:
                if fh < run_min:
                    run_min = fh
                    run_arg = h
                    run_pe = pe
                    run_ps = ps
                k = _record(tmp, k, l, h, 0.0, 0.0, run_min, run_pe, run_ps, run_arg)
    out = np.empty((k, NCOL))
    q = 0
    for r in range(k - 1, -1, -1):
        q = _push(
            out, q, tmp[r, LO], tmp[r, HI], tmp[r, LINEAR], tmp[r, LOG],
            tmp[r, CONST], tmp[r, PREV_END], tmp[r, PREV_STATE], tmp[r, PREV_MEAN],
        )
    return out[:q].copy()


@njit(cache=True)
def _push_row(out, k, F, j, lo, hi):
    return _push(
        out, k, lo, hi, F[j, LINEAR], F[j, LOG], F[j, CONST],
        F[j, PREV_END], F[j, PREV_STATE], F[j, PREV_MEAN],
    )


@njit(cache=True)
def pointwise_min(A, B):
    """out(mu) = min(A(mu), B(mu)); ties keep the piece from A."""
    PA = A.shape[0]
    PB = B.shape[0]
    if PA == 0:
        return B.copy()
    if PB == 0:
        return A.copy()
    out = np.empty((3 * (PA + PB) + 1, NCOL))
    cuts = np.empty(4)
    k = 0
    i = 0
    j = 0
    while i < PA and j < PB:
        l = max(A[i, LO], B[j, LO])
        h = min(A[i, HI], B[j, HI])
        if h > l:
            da = A[i, LINEAR] - B[j, LINEAR]
            db = A[i, LOG] - B[j, LOG]
            dc = A[i, CONST] - B[j, CONST]
            nc = 0
            cuts[nc] = l
            nc += 1
            m = stationary_point(da, db, l, h)
            bounds_lo = l
            for t in range(2):
                if t == 0:
                    u = l
                    v = m if m > 0.0 else h
                else:
                    if not m > 0.0:
                        break
                    u = m
                    v = h
                du = piece_value(da, db, dc, u)
                dv = piece_value(da, db, dc, v)
                if (du < 0.0 and dv > 0.0) or (du > 0.0 and dv < 0.0):
                    r = _snap(find_root(da, db, dc, u, v), bounds_lo, h)
                    if cuts[nc - 1] < r < h:
                        cuts[nc] = r
                        nc += 1
            cuts[nc] = h
            nc += 1
            for t in range(nc - 1):
                u = cuts[t]
                v = cuts[t + 1]
                if not v > u:
                    continue
                dm = piece_value(da, db, dc, 0.5 * (u + v))
                if dm <= 0.0:
                    k = _push_row(out, k, A, i, u, v)
                else:
                    k = _push_row(out, k, B, j, u, v)
        a_done = A[i, HI] <= h
        b_done = B[j, HI] <= h
        if a_done:
            i += 1
        if b_done:
            j += 1
        if not a_done and not b_done:
            # zero-overlap pair, advance whichever ends first
            if A[i, HI] < B[j, HI]:
                i += 1
            else:
                j += 1
    return out[:k].copy()


@njit(cache=True)
def minimize(F):
    """Return (mu, cost, piece index); leftmost minimizer wins ties."""
    best = np.inf
    best_mu = np.nan
    best_j = -1
    for j in range(F.shape[0]):
        a = F[j, LINEAR]
        b = F[j, LOG]
        c = F[j, CONST]
        lo = F[j, LO]
        hi = F[j, HI]
        v = piece_value(a, b, c, lo)
        if v < best:
            best, best_mu, best_j = v, lo, j
        if a > 0.0 and b < 0.0:
            m = -b / a
            if lo < m < hi:
                v = piece_value(a, b, c, m)
                if v < best:
                    best, best_mu, best_j = v, m, j
        v = piece_value(a, b, c, hi)
        if v < best:
            best, best_mu, best_j = v, hi, j
    return best_mu, best, best_j


@njit(cache=True)
def find_piece(F, mu):
    """Index of the piece covering mu (right piece at a shared breakpoint)."""
    P = F.shape[0]
    lo = 0
    hi = P - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if F[mid, LO] <= mu:
            lo = mid
        else:
            hi = mid - 1
    return lo


@njit(cache=True)
def step_cost(mode, s, prev0, prev1, z, w, lam, prev_index):
    """One GetCost update for state s at a data point.

    prev_index is the 1-based index of the previous data point, which is
    where a segment ends when a change enters state s here.
    """
    if mode == MODE_INFINITE:
        return empty_function()
    stay = prev0 if s == 0 else prev1
    base = stay
    if mode == MODE_STAY_OR_CHANGE:
        other = prev1 if s == 0 else prev0
        if other.shape[0] > 0:
            if s == 0:
                change = min_more(other)
            else:
                change = min_less(other)
            change = set_backtrace(add_constant(change, lam), prev_index, 1 - s)
            base = pointwise_min(stay, change)
    if base.shape[0] == 0:
        return base
    return add_loss(base, z, w)


@njit(cache=True, nogil=True)
def fit_kernel(z, w, rules, lam, mu_min, mu_max):
    """Fill the cost matrix and decode it.

    Only piece intervals and backtrace fields are retained per cost
    function; coefficients are not needed to walk the backtrace.

    Returns (status, penalized cost, segment starts, segment ends,
    segment means, segment states, max piece count). status is -1 on
    success, otherwise the 1-based index where both costs became infinite.
    """
    n = z.shape[0]
    cap = 8 * n + 64
    lo_s = np.empty(cap)
    pm_s = np.empty(cap)
    pe_s = np.empty(cap, dtype=np.int32)
    ps_s = np.empty(cap, dtype=np.int8)
    off = np.zeros(2 * n + 1, dtype=np.int64)
    k = 0
    pieces_max = 0
    zero = zero_function(mu_min, mu_max)
    prev0 = empty_function()
    prev1 = empty_function()
    for i in range(n):
        code = rules[i]
        cur0 = empty_function()
        cur1 = empty_function()
        for s in range(2):
            mode = RULE_MODES[code, s]
            if i == 0:
                if mode == MODE_INFINITE:
                    cur = empty_function()
                else:
                    cur = add_loss(zero, z[0], w[0])
            else:
                cur = step_cost(mode, s, prev0, prev1, z[i], w[i], lam, float(i))
            P = cur.shape[0]
            if P > pieces_max:
                pieces_max = P
            if k + P > cap:
                cap = 2 * cap + P
                lo_n = np.empty(cap)
                pm_n = np.empty(cap)
                pe_n = np.empty(cap, dtype=np.int32)
                ps_n = np.empty(cap, dtype=np.int8)
                lo_n[:k] = lo_s[:k]
                pm_n[:k] = pm_s[:k]
                pe_n[:k] = pe_s[:k]
                ps_n[:k] = ps_s[:k]
                lo_s, pm_s, pe_s, ps_s = lo_n, pm_n, pe_n, ps_n
            for r in range(P):
                lo_s[k] = cur[r, LO]
                pm_s[k] = cur[r, PREV_MEAN]
                pe_s[k] = np.int32(cur[r, PREV_END])
                ps_s[k] = np.int8(cur[r, PREV_STATE])
                k += 1
            off[2 * i + s + 1] = k
            if s == 0:
                cur0 = cur
            else:
                cur1 = cur
        if cur0.shape[0] == 0 and cur1.shape[0] == 0:
            e = np.empty(0, dtype=np.int64)
            return i + 1, np.inf, e, e, np.empty(0), e, pieces_max
        prev0 = cur0
        prev1 = cur1

    best_s = 0
    mu0, cost0, _ = minimize(prev0) if prev0.shape[0] > 0 else (np.nan, np.inf, -1)
    mu1, cost1, _ = minimize(prev1) if prev1.shape[0] > 0 else (np.nan, np.inf, -1)
    mu = mu0
    best = cost0
    if cost1 < cost0:
        best_s = 1
        mu = mu1
        best = cost1

    starts = np.empty(n, dtype=np.int64)
    ends = np.empty(n, dtype=np.int64)
    means = np.empty(n)
    states = np.empty(n, dtype=np.int64)
    nseg = 0
    s = best_s
    i = n
    while True:
        f = 2 * (i - 1) + s
        a = off[f]
        b = off[f + 1]
        # largest q in [a, b) with lo_s[q] <= mu
        lo = a
        hi = b - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if lo_s[mid] <= mu:
                lo = mid
            else:
                hi = mid - 1
        q = lo
        pe = pe_s[q]
        starts[nseg] = pe + 1 if pe >= 1 else 1
        ends[nseg] = i
        means[nseg] = mu
        states[nseg] = s
        nseg += 1
        if pe < 1:
            break
        if not np.isnan(pm_s[q]):
            mu = pm_s[q]
        s = ps_s[q]
        i = pe
    return (
        -1,
        best,
        starts[:nseg][::-1].copy(),
        ends[:nseg][::-1].copy(),
        means[:nseg][::-1].copy(),
        states[:nseg][::-1].copy(),
        pieces_max,
    )
