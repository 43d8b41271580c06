"""Refinement matrices, their biorthogonal duals and the fast 1D transform.

With ``Phi_j`` and ``Psi_j`` viewed as column vectors of functions,

    Phi_j = M0(j).T @ Phi_{j+1},    Psi_j = M1(j).T @ Phi_{j+1},

and the duals satisfy ``M0.T @ Mt0 = I``, ``M1.T @ Mt0 = 0``,
``M0.T @ Mt1 = 0``, ``M1.T @ Mt1 = I``.  Rows and columns are 0-based here;
docstrings use the 1-based positions ``k = 1..2**j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .basis1d import BasisSpec1D

SQRT2 = np.sqrt(2.0)
H_INTERIOR = np.array([0.25, 0.75, 0.75, 0.25])
H_BOUNDARY = np.array([0.5, 9 / 8, 3 / 8])
# closed-form constants of the dual M~_{j,0}
A_DECAY = -3.0 - 2.0 * SQRT2
B_CORNER = (13.0 - 9.0 * SQRT2) / 6.0


@dataclass(frozen=True)
class RefinementPair:
    m0: sp.csr_matrix
    m1: sp.csr_matrix
    level: int


@dataclass(frozen=True)
class DualPair:
    mt0: np.ndarray
    mt1: np.ndarray
    level: int


@lru_cache(maxsize=None)
def primal_matrices(j: int) -> RefinementPair:
    """Sparse ``M_{j,0}``, ``M_{j,1}`` of shape ``(2**(j+1), 2**j)``.

    Interior column ``n`` of ``M_{j,0}`` holds ``h/sqrt(2)`` in rows
    ``2n-2 .. 2n+1``; the first column holds ``h_b/sqrt(2)`` in rows 1..3 and
    the last column its mirror image.
    """
    if j < 2:
        raise ValueError("level must be >= 2")
    n = 2**j
    rows, cols, vals = [0, 1, 2], [0, 0, 0], list(H_BOUNDARY)
    rows += [2 * n - 3, 2 * n - 2, 2 * n - 1]
    cols += [n - 1] * 3
    vals += list(H_BOUNDARY[::-1])
    for c in range(1, n - 1):
        rows += range(2 * c - 1, 2 * c + 3)
        cols += [c] * 4
        vals += list(H_INTERIOR)
    m0 = sp.csr_matrix((np.array(vals) / SQRT2, (rows, cols)), shape=(2 * n, n))
    c = np.arange(n)
    m1 = sp.csr_matrix(
        (np.tile([-0.5 / SQRT2, 0.5 / SQRT2], n), (np.ravel([2 * c, 2 * c + 1], "F"), np.repeat(c, 2))),
        shape=(2 * n, n),
    )
    return RefinementPair(m0, m1, j)


def _dual_coefficients(j: int):
    n = 2**j
    a, b = A_DECAY, B_CORNER
    s2 = SQRT2
    alpha = 1.0 / (1.0 - 36.0 * b**2 * a ** (4 - 2 * n) / (11.0 + 6.0 * s2))
    k = np.arange(1, n + 1, dtype=float)
    d = (-6.0 * b * alpha * a ** (2 - k) / (3.0 + s2)
         + 36.0 * b**2 * alpha * a ** (k + 3 - 2 * n) / (11.0 + 6.0 * s2))
    d[0] = 6.0 * alpha / (3.0 + s2)
    d[-1] = -36.0 * b * alpha * a ** (2 - n) / (11.0 + 6.0 * s2)
    return d


@lru_cache(maxsize=None)
def dual_m0(j: int) -> np.ndarray:
    """Dense ``M~_{j,0}`` from its closed form; rows ``2k-1`` and ``2k`` coincide.

    The displayed entry formulas give ``D^{-1} C^{-1}``; the corner entries
    3/2 of ``H_j`` still have to be divided out of the first and last column.
    """
    if j < 2:
        raise ValueError("level must be >= 2")
    n = 2**j
    r = 1.0 / A_DECAY
    d = _dual_coefficients(j)
    l = np.arange(1, n + 1)
    B = np.empty((n, n))
    B[0] = d[0] * r ** np.abs(1 - l) + d[-1] * r ** np.abs(n - l)
    B[-1] = d[0] * r ** np.abs(n - l) + d[-1] * r ** np.abs(1 - l)
    for k in range(2, n):
        B[k - 1] = (r ** np.abs(k - l) + d[k - 1] * r ** np.abs(1 - l)
                    + d[n - k] * r ** np.abs(n - l))
    B[:, 0] *= 2.0 / 3.0
    B[:, -1] *= 2.0 / 3.0
    out = np.repeat(B, 2, axis=0)
    out.setflags(write=False)
    return out


def _paired_system(j: int) -> np.ndarray:
    """Banded storage of ``A_j = M0.T @ G`` (``G`` duplicates rows pairwise)."""
    n = 2**j
    ab = np.zeros((3, n))
    ab[1, :] = 1.5
    ab[0, 1:] = 0.25
    ab[2, :-1] = 0.25
    ab[1, 0] = ab[1, -1] = 13 / 8
    ab[0, 1] = 3 / 8    # A[0, 1]
    ab[2, -2] = 3 / 8   # A[n-1, n-2]
    return ab / SQRT2


@lru_cache(maxsize=None)
def dual_m1(j: int) -> np.ndarray:
    """Dense ``M~_{j,1}`` from the paired banded system.

    ``M1.T @ x = e_l`` forces ``x[2k-1] = x[2k] - 2*sqrt(2)*delta_{kl}``;
    with ``y_k = x[2k]`` the condition ``M0.T @ x = 0`` becomes
    ``A_j y = 2*sqrt(2) * M0[2l-1, :]``.
    """
    if j < 2:
        raise ValueError("level must be >= 2")
    n = 2**j
    m0 = primal_matrices(j).m0.toarray()
    odd_rows = m0[0::2, :]                       # rows 2l-1 (1-based)
    rhs = 2.0 * SQRT2 * odd_rows.T               # column l is the rhs for wavelet l
    y = sla.solve_banded((1, 1), _paired_system(j), rhs)
    out = np.repeat(y, 2, axis=0)
    out[0::2, :] -= 2.0 * SQRT2 * np.eye(n)
    out.setflags(write=False)
    return out


def dual_pair(j: int) -> DualPair:
    return DualPair(dual_m0(j), dual_m1(j), j)


def reconstruct(c, d, j: int | None = None) -> np.ndarray:
    """``c_{j+1} = M0 c + M1 d`` (acts along the first axis)."""
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if c.shape != d.shape:
        raise ValueError("scaling and wavelet coefficient lengths differ")
    j = _level_of(len(c)) if j is None else j
    if len(c) != 2**j:
        raise ValueError(f"expected length {2**j}, got {len(c)}")
    R = primal_matrices(j)
    return R.m0 @ c + R.m1 @ d


def decompose(c_fine, j: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`reconstruct` using the dual matrices."""
    c_fine = np.asarray(c_fine, dtype=float)
    if len(c_fine) % 2:
        raise ValueError("length must be even")
    j = _level_of(len(c_fine) // 2) if j is None else j
    if len(c_fine) != 2 ** (j + 1):
        raise ValueError(f"expected length {2**(j+1)}, got {len(c_fine)}")
    return dual_m0(j).T @ c_fine, dual_m1(j).T @ c_fine


def _level_of(n: int) -> int:
    j = int(round(np.log2(n)))
    if 2**j != n or j < 2:
        raise ValueError(f"length {n} is not 2**j with j >= 2")
    return j


def coarsest_transform(spec: BasisSpec1D) -> np.ndarray:
    from .gram1d import orthogonalize_coarsest
    return orthogonalize_coarsest(spec)


def multiscale_synthesis(spec: BasisSpec1D, v) -> np.ndarray:
    """Single-scale coefficients at level ``j0+s`` of a multiscale vector.

    ``v`` is ordered as :func:`basis1d.enumerate_basis`; normalization
    weights of ``spec`` are *not* applied here.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] != spec.dim:
        raise ValueError(f"expected length {spec.dim}, got {v.shape[0]}")
    n0 = 2**spec.j0
    c = v[:n0]
    if spec.ortho:
        c = coarsest_transform(spec) @ c
    for j in range(spec.j0, spec.finest):
        c = reconstruct(c, v[2**j:2 ** (j + 1)], j)
    return c


def multiscale_synthesis_transpose(spec: BasisSpec1D, w) -> np.ndarray:
    """Transpose of :func:`multiscale_synthesis` (maps single-scale functionals to multiscale)."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != 2**spec.finest:
        raise ValueError(f"expected length {2**spec.finest}, got {w.shape[0]}")
    out = np.empty(spec.dim)
    c = w
    for j in range(spec.finest - 1, spec.j0 - 1, -1):
        R = primal_matrices(j)
        out[2**j:2 ** (j + 1)] = R.m1.T @ c
        c = R.m0.T @ c
    if spec.ortho:
        c = coarsest_transform(spec).T @ c
    out[: 2**spec.j0] = c
    return out


def synthesis_matrix(spec: BasisSpec1D) -> np.ndarray:
    """Dense matrix of :func:`multiscale_synthesis`, built column by column."""
    return np.column_stack([multiscale_synthesis(spec, e) for e in np.eye(spec.dim)])


def spectral_norm(A) -> float:
    """Largest singular value (dense LAPACK; these matrices are at most a few thousand wide)."""
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    return float(np.linalg.norm(A, 2))


@dataclass
class NormLemmaReport:
    dual_norms: dict[int, float]          # ||M~_{j,0}||_2
    compressed_norms: dict[int, float]    # ||S~_j||_2
    product_norms: dict[int, float]       # ||M~_{2,0}^T ... M~_{n-1,0}^T||_2 keyed by n
    exponent: float                       # fitted p in C * 2**(p (n - m))
    constant: float

    @property
    def dual_ok(self) -> bool:
        return all(v <= 2.8 for v in self.dual_norms.values())

    @property
    def compressed_ok(self) -> bool:
        return all(v < 2.0 * SQRT2 for v in self.compressed_norms.values())

    @property
    def exponent_ok(self) -> bool:
        return self.exponent < 0.5


def compressed_product(j: int) -> np.ndarray:
    """``S~_j``: rows ``2k-1`` and ``2k`` of ``S_j = M~_{j,0}^T M~_{j+1,0}^T`` summed."""
    S = dual_m0(j).T @ dual_m0(j + 1).T
    return S[0::2] + S[1::2]


def verify_norm_lemmas(jmax: int = 9, m: int = 2) -> NormLemmaReport:
    dual = {j: spectral_norm(dual_m0(j)) for j in range(2, jmax + 1)}
    comp = {j: spectral_norm(compressed_product(j)) for j in range(2, jmax)}
    prods = {}
    P = None
    for n in range(m + 1, jmax + 1):
        Mt = dual_m0(n - 1).T
        P = Mt if P is None else P @ Mt
        prods[n] = spectral_norm(P)
    steps = np.array([n - m for n in prods], dtype=float)
    logs = np.log2(np.array(list(prods.values())))
    p, logc = np.polyfit(steps, logs, 1)
    return NormLemmaReport(dual, comp, prods, float(p), float(2.0**logc))
