"""Exact one-dimensional mass, stiffness and wavelet Gram matrices."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .basis1d import (
    BasisSpec1D,
    FunctionIndex,
    SCALING,
    WAVELET,
    basis_function,
)
from .spline_kernel import differentiate, integrate_product


def _shape(k: int, n: int) -> str:
    if k == 1:
        return "L"
    if k == n:
        return "R"
    return "I"


def _banded_gram(j: int, kind: str, deriv: bool, band: int = 2) -> sp.csr_matrix:
    """Assemble ``<f_k, f_l>`` for ``|k-l| <= band`` at level ``j``.

    Entries depend only on the boundary/interior shape of both functions and
    their offset, so each distinct combination is integrated once.
    """
    n = 2**j
    cache: dict = {}
    rows, cols, vals = [], [], []
    for k in range(1, n + 1):
        for l in range(k, min(n, k + band) + 1):
            key = (_shape(k, n), _shape(l, n), l - k, min(k, 3), min(n + 1 - l, 3))
            if key not in cache:
                f = basis_function(FunctionIndex(j, kind, k))
                g = basis_function(FunctionIndex(j, kind, l))
                if deriv:
                    f, g = differentiate(f), differentiate(g)
                cache[key] = integrate_product(f, g)
            v = cache[key]
            if v != 0.0:
                rows.append(k - 1)
                cols.append(l - 1)
                vals.append(v)
    upper = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return (upper + sp.triu(upper, 1).T).tocsr()


@lru_cache(maxsize=None)
def mass_matrix(j: int) -> sp.csr_matrix:
    """``<phi_{j,k}, phi_{j,l}>``; pentadiagonal, symmetric positive definite."""
    return _banded_gram(j, SCALING, deriv=False)


@lru_cache(maxsize=None)
def stiffness_matrix(j: int) -> sp.csr_matrix:
    """``<phi'_{j,k}, phi'_{j,l}>``; pentadiagonal, symmetric positive definite."""
    return _banded_gram(j, SCALING, deriv=True)


@lru_cache(maxsize=None)
def wavelet_gram(j: int) -> sp.csr_matrix:
    """``U_j = <Psi_j, Psi_j>``, tridiagonal."""
    return _banded_gram(j, WAVELET, deriv=False)


@lru_cache(maxsize=None)
def wavelet_stiffness(j: int) -> sp.csr_matrix:
    return _banded_gram(j, WAVELET, deriv=True)


ORTHO_METHODS = ("eigen", "cholesky", "lowdin")


def orthogonalize_coarsest(spec: BasisSpec1D) -> np.ndarray:
    """``T`` with ``T.T @ G @ T = I`` for the Gram matrix ``G`` of ``Phi_{j0}``.

    The new scaling functions are ``Phi'_{j0} = T.T @ Phi_{j0}``.  Methods:

    ``eigen``
        generalized eigenvectors of the stiffness/mass pencil, so the new
        functions are L2-orthonormal *and* mutually orthogonal in H1;
    ``cholesky``
        ``T = L^{-T}`` with ``G = L L^T``;
    ``lowdin``
        symmetric ``T = G^{-1/2}``.

    Any two choices differ by an orthogonal factor, which leaves the mass
    part of the preconditioned operator spectrally unchanged but not the
    stiffness part.
    """
    return _coarse_transform(spec.j0, spec.ortho_method).copy()


@lru_cache(maxsize=None)
def _coarse_transform(j0: int, method: str) -> np.ndarray:
    G = mass_matrix(j0).toarray()
    if method == "cholesky":
        L = np.linalg.cholesky(G)
        return sla.solve_triangular(L, np.eye(len(G)), lower=True).T
    if method == "lowdin":
        w, V = np.linalg.eigh(G)
        return (V / np.sqrt(w)) @ V.T
    if method == "eigen":
        _, V = sla.eigh(stiffness_matrix(j0).toarray(), G)
        # fix the sign of every column for reproducibility
        signs = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])])
        return V * signs
    raise ValueError(f"unknown orthogonalization {method!r}")
