"""Matrix-free Helmholtz operator in isotropic tensor wavelet coordinates.

A multiscale vector on ``(0,1)^d`` lists the coarsest block
``Phi_{j0} x ... x Phi_{j0}`` first, then for every level ``j`` the blocks
``e in {0,1}^d \\ {0}`` in lexicographic order (``e_l = 0`` selects
``phi_{j,k_l}``, ``e_l = 1`` selects ``psi_{j,k_l}``), each in lexicographic
``k`` order.  Internally coefficients live in the usual pyramid ("Mallat")
layout, a ``(2**J,)*d`` array whose corner ``[0:2**j)^d`` holds level-``j``
scaling coefficients.

The operator is applied as ``W T^T A_single T W`` where ``T`` is the tensor
synthesis, ``A_single`` the single-scale stiffness/mass combination at the
finest level and ``W`` the diagonal normalization.
"""

from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .basis1d import BasisSpec1D
from .gram1d import (
    mass_matrix,
    orthogonalize_coarsest,
    stiffness_matrix,
    wavelet_gram,
    wavelet_stiffness,
)
from .refinement import dual_m0, dual_m1, primal_matrices


def along_axis(A, arr: np.ndarray, axis: int) -> np.ndarray:
    """Apply the matrix ``A`` to every 1D fibre of ``arr`` along ``axis``."""
    moved = np.moveaxis(arr, axis, 0)
    shape = moved.shape
    out = A @ moved.reshape(shape[0], -1)
    return np.moveaxis(np.asarray(out).reshape((A.shape[0],) + shape[1:]), 0, axis)


def wavelet_types(dim: int) -> list[tuple[int, ...]]:
    return [e for e in itertools.product((0, 1), repeat=dim) if any(e)]


def tensor_layout(j0: int, s: int, dim: int):
    """Per flat multiscale index: level, kinds (0 scaling / 1 wavelet), 0-based positions.

    Also returns the raveled pyramid-layout index of each entry.
    """
    J = j0 + s
    n = 2**J
    levels, kinds, pos = [], [], []

    def block(j, e):
        h = 2**j
        k = np.indices((h,) * dim).reshape(dim, -1).T
        levels.append(np.full(len(k), j))
        kinds.append(np.tile(np.array(e, dtype=np.int8), (len(k), 1)))
        pos.append(k)

    block(j0, (0,) * dim)
    for j in range(j0, J):
        for e in wavelet_types(dim):
            block(j, e)
    levels = np.concatenate(levels)
    kinds = np.concatenate(kinds)
    pos = np.concatenate(pos)
    mallat = pos + kinds * (2**levels)[:, None]
    flat = np.ravel_multi_index(tuple(mallat.T), (n,) * dim)
    return levels, kinds, pos, flat


class HelmholtzOperator:
    """``A_s = eps <grad Psi_s, grad Psi_s> + a <Psi_s, Psi_s>`` on ``(0,1)^dim``."""

    def __init__(self, eps: float, a: float, dim: int, spec: BasisSpec1D):
        if eps < 0 or a < 0:
            raise ValueError("eps and a must be nonnegative")
        if eps + a <= 0:
            raise ValueError("eps + a must be positive")
        if dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        self.eps = float(eps)
        self.a = float(a)
        self.dim = dim
        self.spec = spec
        self.J = spec.finest
        self.n = 2**self.J
        self.size = self.n**dim
        self.mass = mass_matrix(self.J)
        self.stiff = stiffness_matrix(self.J)
        self.refinements = [primal_matrices(j) for j in range(spec.j0, self.J)]
        self.coarse_T = orthogonalize_coarsest(spec) if spec.ortho else None
        self.levels, self.kinds, self.positions, self._flat = tensor_layout(spec.j0, spec.s, dim)
        self.weights = self._normalization_weights()

    def __repr__(self):
        return (f"HelmholtzOperator(eps={self.eps}, a={self.a}, dim={self.dim}, "
                f"j0={self.spec.j0}, s={self.spec.s}, ortho={self.spec.ortho})")

    # factor norms -----------------------------------------------------------
    def _factor_norms(self) -> tuple[np.ndarray, np.ndarray]:
        """Squared L2 norms and H1 seminorms of every 1D factor, shape (N, dim)."""
        j0 = self.spec.j0
        tables = {}
        for j in range(j0, max(self.J, j0 + 1)):
            tables[j, 0] = (mass_matrix(j).diagonal(), stiffness_matrix(j).diagonal())
            tables[j, 1] = (wavelet_gram(j).diagonal(), wavelet_stiffness(j).diagonal())
        if self.coarse_T is not None:
            T = self.coarse_T
            tables[j0, 0] = (
                np.diag(T.T @ mass_matrix(j0).toarray() @ T),
                np.diag(T.T @ stiffness_matrix(j0).toarray() @ T),
            )
        m = np.empty(self.positions.shape)
        s = np.empty(self.positions.shape)
        for (j, kind), (mt, st) in tables.items():
            sel = (self.levels[:, None] == j) & (self.kinds == kind)
            m[sel] = mt[self.positions[sel]]
            s[sel] = st[self.positions[sel]]
        return m, s

    def _raw_diagonal(self) -> np.ndarray:
        m, s = self._factor_norms()
        prod = np.prod(m, axis=1)
        stiff = sum(s[:, i] * np.prod(np.delete(m, i, axis=1), axis=1) for i in range(self.dim))
        return m, s, prod, stiff

    def _normalization_weights(self) -> np.ndarray:
        norm = self.spec.normalization
        if norm == "none":
            return np.ones(self.size)
        _, _, l2, h1 = self._raw_diagonal()
        return 1.0 / np.sqrt(l2 if norm == "L2" else h1)

    @cached_property
    def factor_norms(self) -> tuple[np.ndarray, np.ndarray]:
        return self._factor_norms()

    @cached_property
    def diag(self) -> np.ndarray:
        _, _, l2, h1 = self._raw_diagonal()
        d = (self.eps * h1 + self.a * l2) * self.weights**2
        if np.any(d <= 0):
            raise ValueError("zero diagonal entry")
        return d

    def diagonal(self) -> np.ndarray:
        return self.diag

    # layout -----------------------------------------------------------------
    def to_pyramid(self, v: np.ndarray) -> np.ndarray:
        X = np.zeros(self.size)
        X[self._flat] = v
        return X.reshape((self.n,) * self.dim)

    def from_pyramid(self, X: np.ndarray) -> np.ndarray:
        return X.reshape(-1)[self._flat]

    # transforms -------------------------------------------------------------
    def _coarse_region(self):
        return min(2 * 2**self.spec.j0, self.n)

    def synthesize(self, X: np.ndarray) -> np.ndarray:
        """Pyramid coefficients to single-scale coefficients at level J (in place)."""
        d = self.dim
        n0 = 2**self.spec.j0
        if self.coarse_T is not None:
            m = self._coarse_region()
            for ax in range(d):
                idx = [slice(0, m)] * d
                idx[ax] = slice(0, n0)
                X[tuple(idx)] = along_axis(self.coarse_T, X[tuple(idx)], ax)
        for R in self.refinements:
            h = 2**R.level
            for ax in range(d):
                region = [slice(0, 2 * h)] * d
                sub = X[tuple(region)]
                lo = np.take(sub, np.arange(h), axis=ax)
                hi = np.take(sub, np.arange(h, 2 * h), axis=ax)
                X[tuple(region)] = along_axis(R.m0, lo, ax) + along_axis(R.m1, hi, ax)
        return X

    def synthesize_transpose(self, Y: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`synthesize` (in place)."""
        d = self.dim
        n0 = 2**self.spec.j0
        for R in reversed(self.refinements):
            h = 2**R.level
            region = tuple([slice(0, 2 * h)] * d)
            for ax in reversed(range(d)):
                sub = Y[region]
                Y[region] = np.concatenate(
                    [along_axis(R.m0.T, sub, ax), along_axis(R.m1.T, sub, ax)], axis=ax)
        if self.coarse_T is not None:
            m = self._coarse_region()
            for ax in reversed(range(d)):
                idx = [slice(0, m)] * d
                idx[ax] = slice(0, n0)
                Y[tuple(idx)] = along_axis(self.coarse_T.T, Y[tuple(idx)], ax)
        return Y

    def analyze(self, X: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`synthesize` via the dual refinement matrices (in place)."""
        d = self.dim
        n0 = 2**self.spec.j0
        for R in reversed(self.refinements):
            h = 2**R.level
            region = tuple([slice(0, 2 * h)] * d)
            mt0, mt1 = dual_m0(R.level), dual_m1(R.level)
            for ax in reversed(range(d)):
                sub = X[region]
                X[region] = np.concatenate(
                    [along_axis(mt0.T, sub, ax), along_axis(mt1.T, sub, ax)], axis=ax)
        if self.coarse_T is not None:
            Tinv = np.linalg.inv(self.coarse_T)
            m = self._coarse_region()
            for ax in reversed(range(d)):
                idx = [slice(0, m)] * d
                idx[ax] = slice(0, n0)
                X[tuple(idx)] = along_axis(Tinv, X[tuple(idx)], ax)
        return X

    def from_single_scale(self, U: np.ndarray) -> np.ndarray:
        """Multiscale coefficients of the function with single-scale coefficients ``U``."""
        X = np.array(U, dtype=float).reshape((self.n,) * self.dim)
        return self.from_pyramid(self.analyze(X)) / self.weights

    def to_single_scale(self, v: np.ndarray) -> np.ndarray:
        """Coefficients w.r.t. ``phi_{J,k1} x ... x phi_{J,kd}`` of ``v^T Psi_s``."""
        return self.synthesize(self.to_pyramid(np.asarray(v, dtype=float) * self.weights))

    def load_from_single_scale(self, F: np.ndarray) -> np.ndarray:
        """Map ``<f, phi_{J,k}>`` values (array ``(2**J,)*d``) to ``<f, psi_lambda>``."""
        Y = np.array(F, dtype=float).reshape((self.n,) * self.dim)
        return self.from_pyramid(self.synthesize_transpose(Y)) * self.weights

    # operator ---------------------------------------------------------------
    def apply_single_scale(self, U: np.ndarray) -> np.ndarray:
        d = self.dim
        M, S = self.mass, self.stiff
        out = np.zeros_like(U)
        if self.eps:
            for i in range(d):
                V = U
                for ax in range(d):
                    V = along_axis(S if ax == i else M, V, ax)
                out += self.eps * V
        if self.a:
            V = U
            for ax in range(d):
                V = along_axis(M, V, ax)
            out += self.a * V
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}, got shape {v.shape}")
        U = self.to_single_scale(v)
        Y = self.apply_single_scale(U)
        return self.from_pyramid(self.synthesize_transpose(Y)) * self.weights

    def apply_preconditioned(self, v: np.ndarray) -> np.ndarray:
        dm = 1.0 / np.sqrt(self.diag)
        return dm * self.apply(dm * np.asarray(v, dtype=float))

    def dense(self, preconditioned: bool = False) -> np.ndarray:
        """Dense matrix by applying to unit vectors; for small sizes only."""
        f = self.apply_preconditioned if preconditioned else self.apply
        return np.column_stack([f(e) for e in np.eye(self.size)])
