"""Manufactured tensor-product solutions, load vectors and discrete error norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis1d import collocation_matrix
from .spline_kernel import gauss_rule
from .tensor_operator import HelmholtzOperator, along_axis

Profile = Callable[[np.ndarray], np.ndarray]

MIN_GRID_EXP = 10


def layer_profile(x):
    return x * (1.0 - np.exp(50.0 * x - 50.0))


def layer_profile_d1(x):
    return 1.0 - (1.0 + 50.0 * x) * np.exp(50.0 * x - 50.0)


def layer_profile_d2(x):
    return -(100.0 + 2500.0 * x) * np.exp(50.0 * x - 50.0)


@dataclass(frozen=True)
class SeparableTerm:
    """``coef * g_1(x_1) * ... * g_d(x_d)``."""

    coef: float
    factors: tuple

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(X.shape[:-1], self.coef)
        for i, g in enumerate(self.factors):
            out = out * g(X[..., i])
        return out


@dataclass(frozen=True)
class ManufacturedProblem:
    """``-eps Lap u + a u = f`` on the unit cube with ``u(x) = prod_i v(x_i)``."""

    dim: int
    eps: float = 1.0
    a: float = 0.0
    v: Profile = layer_profile
    dv: Profile = layer_profile_d1
    d2v: Profile = layer_profile_d2

    @classmethod
    def boundary_layer(cls, dim: int = 2, eps: float = 1.0, a: float = 0.0):
        return cls(dim, eps, a)

    def u(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.prod(self.v(X), axis=-1)

    def grad(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        V, dV = self.v(X), self.dv(X)
        out = np.empty_like(X)
        for i in range(self.dim):
            out[..., i] = dV[..., i] * np.prod(np.delete(V, i, axis=-1), axis=-1)
        return out

    def laplacian(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        V, d2V = self.v(X), self.d2v(X)
        return sum(d2V[..., i] * np.prod(np.delete(V, i, axis=-1), axis=-1)
                   for i in range(self.dim))

    def f(self, X) -> np.ndarray:
        return -self.eps * self.laplacian(X) + self.a * self.u(X)

    def rhs_terms(self) -> list[SeparableTerm]:
        terms = []
        if self.eps:
            for i in range(self.dim):
                fac = tuple(self.d2v if l == i else self.v for l in range(self.dim))
                terms.append(SeparableTerm(-self.eps, fac))
        if self.a:
            terms.append(SeparableTerm(self.a, (self.v,) * self.dim))
        return terms


def composite_gauss(J: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights of an ``nodes``-point Gauss rule on every cell of width 2**-J."""
    rule = gauss_rule(nodes)
    h = 2.0**-J
    left = np.arange(2**J) * h
    x = (left[:, None] + h * rule.nodes[None, :]).ravel()
    w = np.tile(h * rule.weights, 2**J)
    return x, w


def single_scale_load(terms: Sequence[SeparableTerm], J: int, dim: int,
                      nodes: int = 10) -> np.ndarray:
    """``<f, phi_{J,k_1} x ... x phi_{J,k_d}>`` for a sum of separable terms."""
    x, w = composite_gauss(J, nodes)
    B = collocation_matrix(J, x)
    n = 2**J
    F = np.zeros((n,) * dim)
    for term in terms:
        if len(term.factors) != dim:
            raise ValueError("term dimension mismatch")
        vecs = [B.T @ (w * g(x)) for g in term.factors]
        outer = vecs[0]
        for vec in vecs[1:]:
            outer = np.multiply.outer(outer, vec)
        F += term.coef * outer
    return F


def load_vector(terms: Sequence[SeparableTerm], op: HelmholtzOperator, nodes: int = 10,
                preconditioned: bool = True) -> np.ndarray:
    F = single_scale_load(terms, op.J, op.dim, nodes)
    f = op.load_from_single_scale(F)
    return f / np.sqrt(op.diag) if preconditioned else f


def rhs_load_vector(p: ManufacturedProblem, op: HelmholtzOperator, nodes: int = 10,
                    preconditioned: bool = True) -> np.ndarray:
    """Diagonally scaled ``<f, psi_lambda>`` for the manufactured right-hand side."""
    if p.dim != op.dim:
        raise ValueError("problem and operator dimensions differ")
    return load_vector(p.rhs_terms(), op, nodes, preconditioned)


def error_norms(coeffs: np.ndarray, p: ManufacturedProblem, op: HelmholtzOperator,
                preconditioned: bool = True, grid_exp: int | None = None,
                l2_nodes: int = 5, chunk_points: int = 2**22) -> tuple[float, float]:
    """Max-norm on a uniform grid and L2 norm by composite Gauss of ``u_s - u``.

    ``coeffs`` are multiscale coefficients; when ``preconditioned`` they refer
    to the diagonally scaled system, i.e. the function is
    ``(D^{-1/2} coeffs)^T Psi``.  The grid has ``2**grid_exp + 1`` points per
    axis; ``grid_exp`` defaults to ``max(J + 2, 10)`` because on coarse
    levels a grid of only ``2**(J+2)`` cells misses the peak of the error
    inside the boundary layer.
    """
    c = np.asarray(coeffs, dtype=float)
    if preconditioned:
        c = c / np.sqrt(op.diag)
    U = op.to_single_scale(c)
    d, J = op.dim, op.J

    def sweep(x, w):
        B = collocation_matrix(J, x)
        exact = p.v(x)
        rows_per = max(1, chunk_points // len(x) ** (d - 1))
        worst, acc = 0.0, 0.0
        for start in range(0, len(x), rows_per):
            sl = slice(start, start + rows_per)
            V = along_axis(B[sl], U, 0)
            for ax in range(1, d):
                V = along_axis(B, V, ax)
            E = exact[sl]
            for _ in range(1, d):
                E = np.multiply.outer(E, exact)
            diff = V - E
            if w is None:
                worst = max(worst, float(np.abs(diff).max()))
            else:
                W = w[sl]
                for _ in range(1, d):
                    W = np.multiply.outer(W, w)
                acc += float(np.sum(W * diff**2))
        return worst, acc

    g = max(J + 2, MIN_GRID_EXP) if grid_exp is None else grid_exp
    linf, _ = sweep(np.linspace(0.0, 1.0, 2**g + 1), None)
    xq, wq = composite_gauss(J, l2_nodes)
    _, l2sq = sweep(xq, wq)
    return linf, float(np.sqrt(l2sq))
