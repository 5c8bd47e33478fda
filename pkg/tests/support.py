"""Shared test helpers: random piecewise functions and dense-grid oracles."""

import math

import numpy as np

from flopart.cost_function import CostFunction, PoissonPiece

GRID_POINTS = 1000


def piece_value(a, b, c, mu):
    if mu == 0:
        if b == 0:
            return c
        return math.inf if b < 0 else -math.inf
    return a * mu + b * math.log(mu) + c


def random_function(rng, n_pieces=None, dp_like=False, zero_lo=False, lo=None, hi=None):
    """A continuous random piecewise function.

    dp_like restricts to the shapes the DP produces (positive linear,
    non-positive log coefficients, or flat pieces).
    """
    if n_pieces is None:
        n_pieces = int(rng.integers(1, 7))
    if lo is None:
        lo = 0.0 if zero_lo else float(rng.uniform(0.1, 3.0))
    if hi is None:
        hi = lo + float(rng.uniform(0.5, 10.0))
    inner = np.sort(rng.uniform(lo, hi, n_pieces - 1))
    edges = np.concatenate(([lo], inner, [hi]))
    pieces = []
    value = float(rng.uniform(-5, 5))
    for k in range(n_pieces):
        a_lo, a_hi = edges[k], edges[k + 1]
        if not a_hi > a_lo:
            continue
        if dp_like:
            if rng.random() < 0.2:
                a, b = 0.0, 0.0
            else:
                a = float(rng.uniform(0.2, 5.0))
                b = -float(rng.uniform(0.0, 3.0)) * a * float(rng.uniform(lo + 0.1, hi))
        else:
            a = float(rng.uniform(-3, 3))
            b = float(rng.uniform(-5, 5))
        if a_lo == 0.0:
            if b > 0:
                b = -b
            c = value if b == 0 else float(rng.uniform(-5, 5))
        else:
            c = value - a * a_lo - b * math.log(a_lo)
        pieces.append(PoissonPiece(a, b, c, float(a_lo), float(a_hi), k, k % 2, None))
        value = piece_value(a, b, c, a_hi)
    return CostFunction.from_pieces(pieces)


def critical_points(C):
    """Breakpoints plus interior stationary points of every piece."""
    pts = list(C.breakpoints())
    for p in C.pieces:
        if p.linear_coef != 0 and p.log_coef != 0:
            m = -p.log_coef / p.linear_coef
            if p.mu_lo < m < p.mu_hi:
                pts.append(m)
    return np.array(pts)


def oracle_grid(*functions, points=GRID_POINTS):
    lo, hi = functions[0].domain
    grid = [np.linspace(lo, hi, points)]
    grid += [critical_points(F) for F in functions]
    return np.unique(np.concatenate(grid))


def eval_pointwise(C, grid):
    """Reference evaluation straight from the piece list."""
    pieces = C.pieces
    out = np.empty(len(grid))
    for k, x in enumerate(grid):
        for p in pieces:
            if p.mu_lo <= x <= p.mu_hi:
                out[k] = piece_value(p.linear_coef, p.log_coef, p.const_coef, x)
                break
    return out


def close(a, b, tol=1e-8):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    both_inf = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
    with np.errstate(invalid="ignore"):
        ok = np.abs(a - b) <= tol * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return bool(np.all(ok | both_inf))


def continuity_gaps(C):
    """Largest relative jump at internal breakpoints."""
    worst = 0.0
    pieces = C.pieces
    for left, right in zip(pieces, pieces[1:]):
        x = left.mu_hi
        va = piece_value(left.linear_coef, left.log_coef, left.const_coef, x)
        vb = piece_value(right.linear_coef, right.log_coef, right.const_coef, x)
        if math.isinf(va) and math.isinf(vb):
            continue
        worst = max(worst, abs(va - vb) / max(1.0, abs(va), abs(vb)))
    return worst


def monotone_probe(C):
    """Breakpoints and midpoints, sorted."""
    bp = C.breakpoints()
    mids = 0.5 * (bp[1:] + bp[:-1])
    return np.sort(np.concatenate((bp, mids)))
