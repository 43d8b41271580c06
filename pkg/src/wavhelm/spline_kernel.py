"""Exact piecewise-quadratic polynomials.

Every basis function in this package is a piecewise polynomial of degree at
most two on a dyadic grid.  ``PiecewisePoly`` stores one coefficient triple per
interval in the monomial basis centred at the interval's left breakpoint, so
``p(x) = c0 + c1*(x - b_i) + c2*(x - b_i)**2`` on ``[b_i, b_{i+1})``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "PiecewisePoly",
    "QuadratureRule",
    "gauss_rule",
    "mother_scaling",
    "boundary_scaling",
    "mother_wavelet",
    "boundary_wavelet",
    "differentiate",
    "integrate",
    "integrate_product",
    "linear_combination",
]


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    breakpoints: np.ndarray
    pieces: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        c = np.asarray(self.pieces, dtype=float).reshape(-1, 3)
        if b.ndim != 1 or len(b) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(c) != len(b) - 1:
            raise ValueError("pieces.count must equal breakpoints.count - 1")
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "pieces", c)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        b = self.breakpoints
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, len(b) - 2)
        t = x - b[i]
        c = self.pieces[i]
        val = c[..., 0] + t * (c[..., 1] + t * c[..., 2])
        inside = (x >= b[0]) & (x <= b[-1])
        return np.where(inside, val, 0.0)

    def __neg__(self):
        return PiecewisePoly(self.breakpoints, -self.pieces)

    def __mul__(self, factor: float):
        return PiecewisePoly(self.breakpoints, factor * self.pieces)

    __rmul__ = __mul__

    def affine(self, scale: float, shift: float, factor: float = 1.0) -> "PiecewisePoly":
        """Return ``x -> factor * p(scale * x + shift)``; ``scale`` may be negative."""
        if scale == 0:
            raise ValueError("scale must be nonzero")
        b = self.breakpoints
        new_b = (b - shift) / scale
        order = np.argsort(new_b)
        new_b = new_b[order]
        # left end of each new piece maps into old piece i, at offset delta
        y0 = scale * new_b[:-1] + shift
        if scale > 0:
            i = np.arange(len(b) - 1)
        else:
            i = np.arange(len(b) - 2, -1, -1)
        delta = y0 - b[i]
        c = self.pieces[i]
        c0 = c[:, 0] + c[:, 1] * delta + c[:, 2] * delta**2
        c1 = (c[:, 1] + 2 * c[:, 2] * delta) * scale
        c2 = c[:, 2] * scale**2
        return PiecewisePoly(new_b, factor * np.column_stack([c0, c1, c2]))

    def on_grid(self, grid: np.ndarray) -> np.ndarray:
        """Coefficients re-centred on the pieces of ``grid`` (zero outside support).

        ``grid`` must contain all breakpoints lying strictly inside its range.
        """
        grid = np.asarray(grid, dtype=float)
        left = grid[:-1]
        mid = 0.5 * (grid[:-1] + grid[1:])
        b = self.breakpoints
        i = np.clip(np.searchsorted(b, mid, side="right") - 1, 0, len(b) - 2)
        delta = left - b[i]
        c = self.pieces[i]
        out = np.column_stack([
            c[:, 0] + c[:, 1] * delta + c[:, 2] * delta**2,
            c[:, 1] + 2 * c[:, 2] * delta,
            c[:, 2],
        ])
        out[(mid < b[0]) | (mid > b[-1])] = 0.0
        return out


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> QuadratureRule:
    if order < 1:
        raise ValueError("order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, order)


def _merge(*polys: PiecewisePoly, lo=None, hi=None) -> np.ndarray:
    grid = np.unique(np.concatenate([p.breakpoints for p in polys]))
    if lo is not None:
        grid = np.unique(np.concatenate([[lo, hi], grid[(grid > lo) & (grid < hi)]]))
    return grid


def linear_combination(terms) -> PiecewisePoly:
    """Sum of ``coef * p`` over ``terms`` on the merged breakpoint grid."""
    terms = list(terms)
    grid = _merge(*(p for _, p in terms))
    coeffs = sum(coef * p.on_grid(grid) for coef, p in terms)
    return PiecewisePoly(grid, coeffs)


def differentiate(p: PiecewisePoly) -> PiecewisePoly:
    c = p.pieces
    return PiecewisePoly(p.breakpoints, np.column_stack([c[:, 1], 2 * c[:, 2], np.zeros(len(c))]))


def integrate(p: PiecewisePoly) -> float:
    h = np.diff(p.breakpoints)
    c = p.pieces
    return float(np.sum(c[:, 0] * h + c[:, 1] * h**2 / 2 + c[:, 2] * h**3 / 3))


def integrate_product(p: PiecewisePoly, q: PiecewisePoly, order: int = 3) -> float:
    """Exact ``int p*q`` over the common support; Gauss order 3 covers degree 4."""
    lo = max(p.breakpoints[0], q.breakpoints[0])
    hi = min(p.breakpoints[-1], q.breakpoints[-1])
    if lo >= hi:
        return 0.0
    grid = _merge(p, q, lo=lo, hi=hi)
    cp = p.on_grid(grid)
    cq = q.on_grid(grid)
    rule = gauss_rule(order)
    h = np.diff(grid)
    t = np.outer(h, rule.nodes)
    vp = cp[:, :1] + t * (cp[:, 1:2] + t * cp[:, 2:3])
    vq = cq[:, :1] + t * (cq[:, 1:2] + t * cq[:, 2:3])
    return float(np.sum(h * ((vp * vq) @ rule.weights)))


@lru_cache(maxsize=None)
def mother_scaling() -> PiecewisePoly:
    """Quadratic B-spline on knots 0, 1, 2, 3."""
    return PiecewisePoly(
        [0.0, 1.0, 2.0, 3.0],
        [[0.0, 0.0, 0.5],     # x^2/2
         [0.5, 1.0, -1.0],    # -x^2 + 3x - 3/2 around 1
         [0.5, -1.0, 0.5]],   # x^2/2 - 3x + 9/2 around 2
    )


@lru_cache(maxsize=None)
def boundary_scaling() -> PiecewisePoly:
    """Quadratic B-spline on knots 0, 0, 1, 2."""
    return PiecewisePoly(
        [0.0, 1.0, 2.0],
        [[0.0, 3.0, -2.25],   # -9x^2/4 + 3x
         [0.75, -1.5, 0.75]], # 3x^2/4 - 3x + 3 around 1
    )


@lru_cache(maxsize=None)
def mother_wavelet() -> PiecewisePoly:
    phi = mother_scaling()
    return linear_combination([(-0.5, phi.affine(2.0, -1.0)), (0.5, phi.affine(2.0, -2.0))])


@lru_cache(maxsize=None)
def boundary_wavelet() -> PiecewisePoly:
    return linear_combination([(-0.5, boundary_scaling().affine(2.0, 0.0)),
                               (0.5, mother_scaling().affine(2.0, 0.0))])
