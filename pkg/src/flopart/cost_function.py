"""Piecewise Poisson cost functions of a segment mean.

Each piece is ``linear * mu + log * log(mu) + const`` on ``[mu_lo, mu_hi]``
together with the backtrace fields the decoder follows. The heavy lifting
is done by the numba kernels in :mod:`flopart._kernels`; this module wraps
them in an immutable value type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from flopart import _kernels as K

__all__ = [
    "PoissonPiece",
    "CostFunction",
    "NoFeasibleModelError",
    "add_loss",
    "add_constant",
    "min_less",
    "min_more",
    "pointwise_min",
    "minimize",
    "evaluate",
]


class NoFeasibleModelError(ValueError):
    """Raised when minimizing a function that is infinite everywhere."""


@dataclass(frozen=True)
class PoissonPiece:
    """One piece of a cost function.

    ``prev_end`` and ``prev_state`` are ``None`` when the piece has no
    predecessor segment. ``prev_mean`` is ``None`` when the previous segment
    shares the current mean (the equality-active case).
    """

    linear_coef: float
    log_coef: float
    const_coef: float
    mu_lo: float
    mu_hi: float
    prev_end: Optional[int] = None
    prev_state: Optional[int] = None
    prev_mean: Optional[float] = None

    def __call__(self, mu: float) -> float:
        return K.piece_value(self.linear_coef, self.log_coef, self.const_coef, float(mu))


def _piece_row(p: PoissonPiece) -> list:
    return [
        p.mu_lo,
        p.mu_hi,
        p.linear_coef,
        p.log_coef,
        p.const_coef,
        K.NO_PREV if p.prev_end is None else float(p.prev_end),
        K.NO_PREV if p.prev_state is None else float(p.prev_state),
        math.nan if p.prev_mean is None else float(p.prev_mean),
    ]


class CostFunction:
    """Immutable piecewise cost function on a fixed mean domain.

    Args:
        table: array of shape (pieces, 8) in the kernel column layout.
        domain: (mu_min, mu_max). Required when ``table`` has no rows.
    """

    __slots__ = ("_table", "_domain")

    def __init__(self, table: np.ndarray, domain: Optional[tuple] = None):
        table = np.ascontiguousarray(table, dtype=np.float64)
        if table.ndim != 2 or table.shape[1] != K.NCOL:
            raise ValueError(f"table must have shape (pieces, {K.NCOL})")
        if domain is None:
            if table.shape[0] == 0:
                raise ValueError("domain is required for an infinite function")
            domain = (float(table[0, K.LO]), float(table[-1, K.HI]))
        table.setflags(write=False)
        self._table = table
        self._domain = (float(domain[0]), float(domain[1]))

    @classmethod
    def zero(cls, mu_min: float, mu_max: float) -> "CostFunction":
        if not mu_max > mu_min:
            raise ValueError("mu_max must exceed mu_min")
        return cls(K.zero_function(float(mu_min), float(mu_max)))

    @classmethod
    def infinite(cls, mu_min: float, mu_max: float) -> "CostFunction":
        return cls(K.empty_function(), (mu_min, mu_max))

    @classmethod
    def from_pieces(cls, pieces: Iterable[PoissonPiece]) -> "CostFunction":
        rows = [_piece_row(p) for p in pieces]
        if not rows:
            raise ValueError("use CostFunction.infinite for an empty function")
        return cls(np.array(rows, dtype=np.float64))

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def domain(self) -> tuple:
        return self._domain

    @property
    def is_infinite(self) -> bool:
        return self._table.shape[0] == 0

    def __len__(self) -> int:
        return self._table.shape[0]

    @property
    def pieces(self) -> List[PoissonPiece]:
        out = []
        for row in self._table:
            out.append(
                PoissonPiece(
                    linear_coef=float(row[K.LINEAR]),
                    log_coef=float(row[K.LOG]),
                    const_coef=float(row[K.CONST]),
                    mu_lo=float(row[K.LO]),
                    mu_hi=float(row[K.HI]),
                    prev_end=None if row[K.PREV_END] < 0 else int(row[K.PREV_END]),
                    prev_state=None if row[K.PREV_STATE] < 0 else int(row[K.PREV_STATE]),
                    prev_mean=None if math.isnan(row[K.PREV_MEAN]) else float(row[K.PREV_MEAN]),
                )
            )
        return out

    def breakpoints(self) -> np.ndarray:
        """Piece boundaries, including both domain ends."""
        if self.is_infinite:
            return np.array(self._domain)
        return np.append(self._table[:, K.LO], self._table[-1, K.HI])

    def piece_at(self, mu: float) -> int:
        self._check_domain(mu)
        return int(K.find_piece(self._table, float(mu)))

    def _check_domain(self, mu: float) -> None:
        lo, hi = self._domain
        if not lo <= mu <= hi:
            raise ValueError(f"mu={mu} outside domain [{lo}, {hi}]")

    def __call__(self, mu: float) -> float:
        return evaluate(self, mu)

    def values(self, grid: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on a sorted grid inside the domain."""
        grid = np.asarray(grid, dtype=np.float64)
        if self.is_infinite:
            return np.full(grid.shape, np.inf)
        t = self._table
        idx = np.searchsorted(t[:, K.LO], grid, side="right") - 1
        idx = np.clip(idx, 0, t.shape[0] - 1)
        a, b, c = t[idx, K.LINEAR], t[idx, K.LOG], t[idx, K.CONST]
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(grid > 0, np.log(np.where(grid > 0, grid, 1.0)), -np.inf)
            blog = np.where(b == 0, 0.0, b * logs)
        return a * grid + blog + c

    def dump(self) -> str:
        """Debug dump, one tab-separated line per piece."""
        lines = []
        for p in self.pieces:
            lines.append(
                "\t".join(
                    [
                        repr(p.mu_lo),
                        repr(p.mu_hi),
                        repr(p.linear_coef),
                        repr(p.log_coef),
                        repr(p.const_coef),
                        "none" if p.prev_end is None else str(p.prev_end),
                        "none" if p.prev_state is None else str(p.prev_state),
                        "same" if p.prev_mean is None else repr(p.prev_mean),
                    ]
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    def __repr__(self) -> str:
        if self.is_infinite:
            return f"CostFunction(infinite, domain={self._domain})"
        return f"CostFunction({len(self)} pieces, domain={self._domain})"


def _wrap(table: np.ndarray, like: CostFunction) -> CostFunction:
    return CostFunction(table, like.domain)


def add_loss(C: CostFunction, z: float, w: float = 1.0) -> CostFunction:
    """Add the weighted Poisson loss w * (mu - z * log(mu))."""
    if not w > 0:
        raise ValueError("weight must be positive")
    if not (math.isfinite(z) and z >= 0):
        raise ValueError("data value must be finite and non-negative")
    return _wrap(K.add_loss(C.table, float(z), float(w)), C)


def add_constant(C: CostFunction, lam: float) -> CostFunction:
    if lam < 0:
        raise ValueError("penalty must be non-negative")
    return _wrap(K.add_constant(C.table, float(lam)), C)


def min_less(C: CostFunction) -> CostFunction:
    """Running minimum from the left: min over x <= mu of C(x)."""
    return _wrap(K.min_less(C.table), C)


def min_more(C: CostFunction) -> CostFunction:
    """Running minimum from the right: min over x >= mu of C(x)."""
    return _wrap(K.min_more(C.table), C)


def pointwise_min(A: CostFunction, B: CostFunction) -> CostFunction:
    if not np.allclose(A.domain, B.domain, rtol=1e-12, atol=0.0):
        raise ValueError(f"domains differ: {A.domain} vs {B.domain}")
    return _wrap(K.pointwise_min(A.table, B.table), A)


def minimize(C: CostFunction) -> tuple:
    """Return (mu_star, cost_star, piece index)."""
    if C.is_infinite:
        raise NoFeasibleModelError("no feasible model")
    mu, cost, j = K.minimize(C.table)
    return float(mu), float(cost), int(j)


def evaluate(C: CostFunction, mu: float) -> float:
    C._check_domain(mu)
    if C.is_infinite:
        return math.inf
    row = C.table[K.find_piece(C.table, float(mu))]
    return float(K.piece_value(row[K.LINEAR], row[K.LOG], row[K.CONST], float(mu)))
