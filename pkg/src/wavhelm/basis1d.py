"""The one-dimensional basis on [0, 1] with homogeneous Dirichlet conditions.

Level ``j`` carries ``2**j`` scaling functions ``phi_{j,k}`` and ``2**j``
wavelets ``psi_{j,k}``, ``k = 1..2**j``.  The multiscale set with coarsest
level ``j0`` and ``s`` wavelet levels is
``Phi_{j0} + Psi_{j0} + ... + Psi_{j0+s-1}`` and spans ``V_{j0+s}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np
import scipy.sparse as sp

from .spline_kernel import (
    PiecewisePoly,
    boundary_scaling,
    boundary_wavelet,
    differentiate,
    integrate_product,
    mother_scaling,
    mother_wavelet,
)

SCALING = "scaling"
WAVELET = "wavelet"
Kind = Literal["scaling", "wavelet"]


class FunctionIndex(NamedTuple):
    level: int
    kind: Kind
    position: int


@dataclass(frozen=True)
class BasisSpec1D:
    j0: int = 2
    s: int = 0
    ortho: bool = False
    normalization: Literal["none", "L2", "H1seminorm"] = "none"
    ortho_method: Literal["eigen", "cholesky", "lowdin"] = "eigen"

    def __post_init__(self):
        if self.j0 < 2:
            raise ValueError("coarsest level must be >= 2")
        if self.s < 0:
            raise ValueError("number of wavelet levels must be >= 0")
        if self.normalization not in ("none", "L2", "H1seminorm"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.ortho_method not in ("eigen", "cholesky", "lowdin"):
            raise ValueError(f"unknown orthogonalization {self.ortho_method!r}")

    @property
    def finest(self) -> int:
        """Level of the single-scale space spanned by the multiscale set."""
        return self.j0 + self.s

    @property
    def dim(self) -> int:
        return 2**self.j0 + sum(2**j for j in range(self.j0, self.j0 + self.s))


def _check(j: int, k: int):
    if j < 2:
        raise ValueError(f"level {j} < 2")
    if not 1 <= k <= 2**j:
        raise ValueError(f"position {k} outside 1..{2**j}")


@lru_cache(maxsize=None)
def scaling_function(j: int, k: int) -> PiecewisePoly:
    _check(j, k)
    n = 2**j
    amp = 2.0 ** (j / 2)
    if k == 1:
        return boundary_scaling().affine(n, 0.0, amp)
    if k == n:
        return boundary_scaling().affine(-n, n, amp)
    return mother_scaling().affine(n, 2.0 - k, amp)


@lru_cache(maxsize=None)
def wavelet_function(j: int, k: int) -> PiecewisePoly:
    _check(j, k)
    n = 2**j
    amp = 2.0 ** (j / 2)
    if k == 1:
        return boundary_wavelet().affine(n, 0.0, amp)
    if k == n:
        return boundary_wavelet().affine(-n, n, -amp)
    return mother_wavelet().affine(n, 2.0 - k, amp)


def basis_function(idx: FunctionIndex) -> PiecewisePoly:
    j, kind, k = idx
    return scaling_function(j, k) if kind == SCALING else wavelet_function(j, k)


def enumerate_basis(spec: BasisSpec1D) -> list[FunctionIndex]:
    out = [FunctionIndex(spec.j0, SCALING, k) for k in range(1, 2**spec.j0 + 1)]
    for j in range(spec.j0, spec.finest):
        out += [FunctionIndex(j, WAVELET, k) for k in range(1, 2**j + 1)]
    return out


@lru_cache(maxsize=None)
def norms(idx: FunctionIndex) -> tuple[float, float]:
    """Squared L2 norm and squared H1 seminorm of a basis function."""
    f = basis_function(FunctionIndex(*idx))
    df = differentiate(f)
    return integrate_product(f, f), integrate_product(df, df)


def normalization_weights(spec: BasisSpec1D) -> np.ndarray:
    """Factor ``w`` such that the normalized function is ``w * f``, in enumeration order."""
    idx = enumerate_basis(spec)
    if spec.normalization == "none":
        return np.ones(len(idx))
    col = 0 if spec.normalization == "L2" else 1
    return np.array([1.0 / np.sqrt(norms(i)[col]) for i in idx])


def support(idx: FunctionIndex) -> tuple[float, float]:
    """Support interval of a basis function on [0, 1]."""
    j, kind, k = idx
    n = 2**j
    h = 1.0 / n
    if kind == SCALING:
        if k == 1:
            return 0.0, 2 * h
        if k == n:
            return 1.0 - 2 * h, 1.0
        return (k - 2) * h, (k + 1) * h
    if k == 1:
        return 0.0, 1.5 * h
    if k == n:
        return 1.0 - 1.5 * h, 1.0
    return (k - 1.5) * h, (k + 0.5) * h


def collocation_matrix(J: int, x, deriv: int = 0) -> sp.csr_matrix:
    """Sparse matrix of ``phi_{J,k}(x_i)`` (or first derivatives), shape (len(x), 2**J)."""
    x = np.asarray(x, dtype=float).ravel()
    n = 2**J
    cell = np.clip(np.floor(x * n).astype(np.int64), 0, n - 1)
    rows, cols, vals = [], [], []
    phi, phib = mother_scaling(), boundary_scaling()
    if deriv:
        phi, phib = differentiate(phi), differentiate(phib)
    amp = 2.0 ** (J / 2) * (n if deriv else 1.0)
    for off in range(3):
        k = cell + off  # 1-based positions cell, cell+1, cell+2
        ok = (k >= 1) & (k <= n)
        kk, xx, rr = k[ok], x[ok], np.nonzero(ok)[0]
        v = phi(n * xx - kk + 2)
        left, right = kk == 1, kk == n
        v = np.where(left, phib(n * xx), v)
        mirrored = phib(n * (1 - xx))
        v = np.where(right, -mirrored if deriv else mirrored, v)
        rows.append(rr)
        cols.append(kk - 1)
        vals.append(amp * v)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(x), n))
    A.eliminate_zeros()
    return A
