"""A simplified adaptive wavelet Galerkin solver on the unit square.

Indices are tensor products of equal-level 1D functions.  Every 1D function
up to ``maxlevel`` gets an integer id; the 1D Gram and stiffness matrices
among all of them are obtained exactly by refining each function down to
the single-scale space of level ``maxlevel + 1``.  Entries of the
preconditioned stiffness matrix on arbitrary index sets are then products
of 1D table values, assembled by a compiled loop that only walks from each
index to neighbors on coarser or equal levels.

One cycle of the solver:

1. extend the active set by all indices whose supports intersect an active
   one and whose level differs by at most one (the parent is among them);
2. evaluate the residual exactly on the extended set;
3. bulk chasing: add the largest residual entries carrying a fraction
   ``theta`` of its norm;
4. Galerkin solve on the active set by CG with tolerance ``0.1 * residual``;
5. every ``coarsen_every``-th cycle first drop coefficients below
   ``coarsen_fraction`` times the mean magnitude, smallest first and only as
   long as the discarded l2 mass stays below ``coarsen_fraction`` times the
   last residual norm (without this cap the set oscillates instead of
   growing).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numba
import numpy as np
import scipy.sparse as sp

from .basis1d import (
    SCALING,
    WAVELET,
    BasisSpec1D,
    FunctionIndex,
    basis_function,
    collocation_matrix,
)
from .gram1d import mass_matrix, stiffness_matrix
from .problems import ManufacturedProblem, SeparableTerm, composite_gauss, error_norms
from .refinement import primal_matrices
from .solver import cg
from .spline_kernel import differentiate, integrate_product
from .tensor_operator import HelmholtzOperator

log = logging.getLogger(__name__)


class TensorIndex(NamedTuple):
    """Level, per-axis kinds and per-axis 1-based positions."""

    level: int
    kinds: tuple
    positions: tuple

    def factors(self) -> list[FunctionIndex]:
        return [FunctionIndex(self.level, e, k) for e, k in zip(self.kinds, self.positions)]


# ---------------------------------------------------------------------------
# 1D tables

class Tables1D:
    """All 1D scaling functions and wavelets on levels ``j0..maxlevel``."""

    def __init__(self, j0: int = 2, maxlevel: int = 10):
        if maxlevel < j0:
            raise ValueError("maxlevel must be >= j0")
        self.j0, self.maxlevel = j0, maxlevel
        self.fine = maxlevel + 1
        levels = np.arange(j0, maxlevel + 1)
        self.offsets = np.concatenate([[0], np.cumsum(2 * 2**levels)]).astype(np.int64)
        self.offsets = np.concatenate([np.zeros(j0, np.int64), self.offsets])  # index by level
        self.size = int(self.offsets[-1])
        lev, kind, pos = [], [], []
        for L in levels:
            n = 2**L
            lev.append(np.full(2 * n, L))
            kind.append(np.repeat([0, 1], n))
            pos.append(np.tile(np.arange(n), 2))
        self.level = np.concatenate(lev).astype(np.int64)
        self.kind = np.concatenate(kind).astype(np.int64)
        self.pos = np.concatenate(pos).astype(np.int64)

    def id(self, level: int, kind: str, position: int) -> int:
        if not (self.j0 <= level <= self.maxlevel and 1 <= position <= 2**level):
            raise ValueError(f"index ({level}, {kind}, {position}) out of range")
        return int(self.offsets[level] + (kind == WAVELET) * 2**level + position - 1)

    def function_index(self, i: int) -> FunctionIndex:
        return FunctionIndex(int(self.level[i]), WAVELET if self.kind[i] else SCALING,
                             int(self.pos[i]) + 1)

    @cached_property
    def synthesis(self) -> sp.csc_matrix:
        """Columns: every 1D function in single-scale coordinates of the fine level."""
        cols = {}
        C = sp.identity(2**self.fine, format="csr")
        for L in range(self.fine - 1, self.j0 - 1, -1):
            R = primal_matrices(L)
            cols[L] = (C @ R.m0, C @ R.m1)
            C = cols[L][0]
        blocks = []
        for L in range(self.j0, self.maxlevel + 1):
            blocks += list(cols[L])
        return sp.hstack(blocks, format="csc")

    @cached_property
    def gram(self) -> sp.csr_matrix:
        """Complex CSR matrix: real part mass, imaginary part stiffness; sorted rows."""
        P = self.synthesis
        G = (P.T @ (mass_matrix(self.fine) + 1j * stiffness_matrix(self.fine)) @ P).tocsr()
        G = ((G + G.T) * 0.5).tocsr()
        G.sort_indices()
        return G

    @cached_property
    def mass_diag(self) -> np.ndarray:
        return self.gram.diagonal().real.copy()

    @cached_property
    def stiff_diag(self) -> np.ndarray:
        return self.gram.diagonal().imag.copy()

    @cached_property
    def supports(self) -> tuple[np.ndarray, np.ndarray]:
        h = 2.0 ** -self.level.astype(float)
        k = self.pos + 1.0
        lo = np.where(self.kind == 0, (k - 2) * h, (k - 1.5) * h)
        hi = np.where(self.kind == 0, (k + 1) * h, (k + 0.5) * h)
        return np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)

    def moments(self, g, nodes: int = 10) -> np.ndarray:
        """``<g, f_i>`` for every 1D function by composite Gauss on the fine level."""
        x, w = composite_gauss(self.fine, nodes)
        B = collocation_matrix(self.fine, x)
        return self.synthesis.T @ (B.T @ (w * g(x)))


# ---------------------------------------------------------------------------
# compiled kernels

@numba.njit(cache=True)
def _pair_key(q1, q2, L, offsets, key_offsets):
    return key_offsets[L] + (q1 - offsets[L]) * (2 << L) + (q2 - offsets[L])


@numba.njit(cache=True)
def _coarser_pairs(src1, src2, level, lookup, offsets, key_offsets, indptr, indices,
                   gm, gs, eps, a, strict, j0, fill, out_src, out_tgt, out_val):
    """Walk from every source index to target indices on coarser (or equal) levels."""
    count = 0
    for i in range(src1.shape[0]):
        p1, p2 = src1[i], src2[i]
        j = level[p1]
        top = j if strict else j + 1
        r1 = indices[indptr[p1]:indptr[p1 + 1]]
        r2 = indices[indptr[p2]:indptr[p2 + 1]]
        for L in range(j0, top):
            a1 = np.searchsorted(r1, offsets[L])
            b1 = np.searchsorted(r1, offsets[L + 1])
            a2 = np.searchsorted(r2, offsets[L])
            b2 = np.searchsorted(r2, offsets[L + 1])
            for u in range(a1, b1):
                q1 = r1[u]
                for v in range(a2, b2):
                    q2 = r2[v]
                    t = lookup[_pair_key(q1, q2, L, offsets, key_offsets)]
                    if t < 0:
                        continue
                    if fill:
                        m1, s1 = gm[indptr[p1] + u], gs[indptr[p1] + u]
                        m2, s2 = gm[indptr[p2] + v], gs[indptr[p2] + v]
                        out_src[count] = i
                        out_tgt[count] = t
                        out_val[count] = eps * (s1 * m2 + m1 * s2) + a * m1 * m2
                    count += 1
    return count


@numba.njit(cache=True)
def _neighbor_pairs(src1, src2, level, kind, pos, lo, hi, offsets, j0, maxlevel, fill,
                    out1, out2):
    """Indices within one level whose supports overlap a source index (positive measure)."""
    count = 0
    for i in range(src1.shape[0]):
        p1, p2 = src1[i], src2[i]
        j = level[p1]
        for L in range(max(j0, j - 1), min(maxlevel, j + 1) + 1):
            n = 1 << L
            h = 1.0 / n
            for e1 in range(2):
                for e2 in range(2):
                    if e1 == 0 and e2 == 0 and L != j0:
                        continue
                    # per axis: 1-based k with (k - left) h < hi and (k + right) h > lo
                    left1 = 2.0 if e1 == 0 else 1.5
                    right1 = 1.0 if e1 == 0 else 0.5
                    left2 = 2.0 if e2 == 0 else 1.5
                    right2 = 1.0 if e2 == 0 else 0.5
                    k1a = max(1, int(np.floor(lo[p1] / h - right1)) + 1)
                    k1b = min(n, int(np.ceil(hi[p1] / h + left1)) - 1)
                    k2a = max(1, int(np.floor(lo[p2] / h - right2)) + 1)
                    k2b = min(n, int(np.ceil(hi[p2] / h + left2)) - 1)
                    for k1 in range(k1a, k1b + 1):
                        for k2 in range(k2a, k2b + 1):
                            if fill:
                                out1[count] = offsets[L] + e1 * n + k1 - 1
                                out2[count] = offsets[L] + e2 * n + k2 - 1
                            count += 1
    return count


# ---------------------------------------------------------------------------
# entry cache

class EntryCache:
    """Exact preconditioned entries keyed by an ordered index pair."""

    def __init__(self):
        self._store: dict = {}
        self.hits = 0

    def __len__(self):
        return len(self._store)

    @staticmethod
    def key(lam: TensorIndex, mu: TensorIndex):
        return (lam, mu) if lam <= mu else (mu, lam)

    def get(self, lam, mu):
        val = self._store.get(self.key(lam, mu))
        if val is not None:
            self.hits += 1
        return val

    def put(self, lam, mu, value: float):
        self._store[self.key(lam, mu)] = value


def _factor_products(f: FunctionIndex, g: FunctionIndex) -> tuple[float, float]:
    p, q = basis_function(f), basis_function(g)
    return integrate_product(p, q), integrate_product(differentiate(p), differentiate(q))


# ---------------------------------------------------------------------------
# operator

class AdaptiveOperator:
    """Preconditioned 2D Helmholtz form on arbitrary finite index sets."""

    def __init__(self, eps: float = 1.0, a: float = 0.0, j0: int = 2, maxlevel: int = 10,
                 dim: int = 2):
        if dim != 2:
            raise ValueError("the adaptive solver is implemented for dim=2")
        if eps < 0 or a < 0 or eps + a <= 0:
            raise ValueError("need eps, a >= 0 with eps + a > 0")
        self.eps, self.a, self.dim = float(eps), float(a), dim
        self.j0, self.maxlevel = j0, maxlevel
        self.tables = Tables1D(j0, maxlevel)
        self.cache = EntryCache()
        levels = np.arange(maxlevel + 2)
        widths = np.where(levels >= j0, 4 * 4**levels, 0)
        self.key_offsets = np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)
        self._lookup = np.full(int(self.key_offsets[maxlevel + 1]), -1, dtype=np.int64)

    # index bookkeeping ----------------------------------------------------
    def to_ids(self, indices: Sequence[TensorIndex]) -> tuple[np.ndarray, np.ndarray]:
        ids = np.array([[self.tables.id(t.level, e, k) for e, k in zip(t.kinds, t.positions)]
                        for t in indices], dtype=np.int64).reshape(-1, 2)
        return ids[:, 0].copy(), ids[:, 1].copy()

    def to_indices(self, f1: np.ndarray, f2: np.ndarray) -> list[TensorIndex]:
        T = self.tables
        out = []
        for p, q in zip(f1, f2):
            a, b = T.function_index(p), T.function_index(q)
            out.append(TensorIndex(a.level, (a.kind, b.kind), (a.position, b.position)))
        return out

    def keys(self, f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
        T = self.tables
        L = T.level[f1]
        return self.key_offsets[L] + (f1 - T.offsets[L]) * (2 << L) + (f2 - T.offsets[L])

    def coarsest(self) -> tuple[np.ndarray, np.ndarray]:
        n = 2**self.j0
        k1, k2 = np.divmod(np.arange(n * n), n)
        off = self.tables.offsets[self.j0]
        return (off + k1).astype(np.int64), (off + k2).astype(np.int64)

    def diagonal(self, f1, f2) -> np.ndarray:
        m, s = self.tables.mass_diag, self.tables.stiff_diag
        return self.eps * (s[f1] * m[f2] + m[f1] * s[f2]) + self.a * m[f1] * m[f2]

    # entries ---------------------------------------------------------------
    def entry(self, lam: TensorIndex, mu: TensorIndex) -> float:
        """Exact preconditioned entry from pairwise 1D integrals (cached)."""
        val = self.cache.get(lam, mu)
        if val is not None:
            return val
        lam, mu = self.cache.key(lam, mu)
        fl, fm = lam.factors(), mu.factors()
        pairs = [_factor_products(x, y) for x, y in zip(fl, fm)]
        if all(m == 0.0 and s == 0.0 for m, s in pairs):
            return 0.0
        raw = self._form(pairs)
        dl = self._form([_factor_products(x, x) for x in fl])
        dm = self._form([_factor_products(y, y) for y in fm])
        val = raw / np.sqrt(dl * dm)
        if raw != 0.0:
            self.cache.put(lam, mu, val)
        return val

    def _form(self, pairs) -> float:
        (m1, s1), (m2, s2) = pairs
        return self.eps * (s1 * m2 + m1 * s2) + self.a * m1 * m2

    def matrix(self, rows: tuple, cols: tuple) -> sp.csr_matrix:
        """Preconditioned stiffness block ``A[rows, cols]`` from the 1D tables."""
        T = self.tables
        G = T.gram
        gm, gs = G.data.real.copy(), G.data.imag.copy()
        r1, r2 = rows
        c1, c2 = cols
        parts = []
        for (s1, s2), (t1, t2), strict, swap in (((r1, r2), (c1, c2), False, False),
                                                 ((c1, c2), (r1, r2), True, True)):
            lookup = self._lookup
            keys = self.keys(t1, t2)
            lookup[keys] = np.arange(len(t1))
            args = (s1, s2, T.level, lookup, T.offsets, self.key_offsets,
                    G.indptr.astype(np.int64), G.indices.astype(np.int64), gm, gs,
                    self.eps, self.a, strict, self.j0)
            empty_i, empty_f = np.empty(0, np.int64), np.empty(0)
            n = _coarser_pairs(*args, False, empty_i, empty_i, empty_f)
            src, tgt, val = np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n)
            _coarser_pairs(*args, True, src, tgt, val)
            lookup[keys] = -1
            parts.append((tgt, src, val) if swap else (src, tgt, val))
        ri = np.concatenate([p[0] for p in parts])
        ci = np.concatenate([p[1] for p in parts])
        v = np.concatenate([p[2] for p in parts])
        scale_r = 1.0 / np.sqrt(self.diagonal(r1, r2))
        scale_c = 1.0 / np.sqrt(self.diagonal(c1, c2))
        v = v * scale_r[ri] * scale_c[ci]
        return sp.csr_matrix((v, (ri, ci)), shape=(len(r1), len(c1)))

    def neighbors(self, f1: np.ndarray, f2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Deduplicated neighbor set in first-appearance order, excluding nothing."""
        T = self.tables
        lo, hi = T.supports
        args = (f1, f2, T.level, T.kind, T.pos, lo, hi, T.offsets, self.j0, self.maxlevel)
        e = np.empty(0, np.int64)
        n = _neighbor_pairs(*args, False, e, e)
        o1, o2 = np.empty(n, np.int64), np.empty(n, np.int64)
        _neighbor_pairs(*args, True, o1, o2)
        _, first = np.unique(self.keys(o1, o2), return_index=True)
        first.sort()
        return o1[first], o2[first]

    def load(self, terms: Sequence[SeparableTerm], f1, f2, nodes: int = 10) -> np.ndarray:
        """Preconditioned ``<f, psi_lambda>`` on an index set."""
        out = np.zeros(len(f1))
        for term in terms:
            key = tuple(id(g) for g in term.factors) + (nodes,)
            if key not in self._moment_cache:
                self._moment_cache[key] = [self.tables.moments(g, nodes) for g in term.factors]
            b1, b2 = self._moment_cache[key]
            out += term.coef * b1[f1] * b2[f2]
        return out / np.sqrt(self.diagonal(f1, f2))

    @cached_property
    def _moment_cache(self) -> dict:
        return {}

    # embedding ---------------------------------------------------------------
    def embed(self, f1, f2, coeffs) -> tuple[HelmholtzOperator, np.ndarray]:
        """Full multiscale operator covering the set and the coefficients placed into it."""
        T = self.tables
        top = int(T.level[f1].max()) if len(f1) else self.j0
        op = HelmholtzOperator(self.eps, self.a, 2, BasisSpec1D(self.j0, top + 1 - self.j0))
        L = T.level[f1]
        k1, k2 = T.pos[f1], T.pos[f2]
        e1, e2 = T.kind[f1], T.kind[f2]
        n = 2**L
        block = e1 * 2 + e2
        flat = np.where(block == 0, k1 * n + k2, n * n * block + k1 * n + k2)
        full = np.zeros(op.size)
        full[flat] = coeffs
        return op, full


# ---------------------------------------------------------------------------
# driver

@dataclass
class AdaptiveResult:
    active: list
    coefficients: np.ndarray
    history: list = field(default_factory=list)
    status: str = "converged"
    ids: tuple = ()


def bulk_select(r: np.ndarray, theta: float) -> np.ndarray:
    """Smallest set of largest entries with ``||r_sel|| >= theta ||r||``; stable ties."""
    order = np.argsort(-np.abs(r), kind="stable")
    energy = np.cumsum(r[order] ** 2)
    if energy[-1] == 0.0:
        return order[:0]
    m = int(np.searchsorted(energy, theta**2 * energy[-1] * (1 - 1e-14))) + 1
    return order[:m]


def coarsen_mask(u: np.ndarray, protected: np.ndarray, fraction: float,
                 budget: float) -> np.ndarray:
    """Drop entries below ``fraction * mean|u|``, smallest first, while the
    discarded l2 mass stays within ``budget``; protected entries are kept."""
    mag = np.abs(u)
    candidates = np.nonzero((mag < fraction * mag.mean()) & ~protected)[0]
    candidates = candidates[np.argsort(mag[candidates], kind="stable")]
    dropped = np.sqrt(np.cumsum(mag[candidates] ** 2))
    keep = np.ones(len(u), dtype=bool)
    keep[candidates[dropped <= budget]] = False
    return keep


def adaptive_solve(op: AdaptiveOperator, rhs, theta: float = 0.5, target: float = 1e-6,
                   max_cycles: int = 100, max_size: int | None = None,
                   coarsen_every: int = 5, coarsen_fraction: float = 0.1,
                   exact: ManufacturedProblem | None = None, grid_exp: int | None = None,
                   ) -> AdaptiveResult:
    """Run the adaptive loop.  ``rhs`` is a ManufacturedProblem or a list of separable terms.

    ``history`` rows are ``(cycle, |Lambda|, residual, linf, l2)``; error
    columns are NaN unless an exact solution is known.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if isinstance(rhs, ManufacturedProblem):
        exact = rhs if exact is None else exact
        terms = rhs.rhs_terms()
    else:
        terms = list(rhs)
    f1, f2 = op.coarsest()
    u = cg(op.matrix((f1, f2), (f1, f2)).dot, op.load(terms, f1, f2), tol=1e-10).solution
    history, status = [], "max_cycles"
    residuals = []
    for cycle in range(max_cycles):
        if cycle and coarsen_every and cycle % coarsen_every == 0:
            keep = coarsen_mask(u, op.tables.level[f1] == op.j0, coarsen_fraction,
                                coarsen_fraction * residuals[-1])
            f1, f2, u = f1[keep], f2[keep], u[keep]
        n1, n2 = op.neighbors(f1, f2)
        active_keys = op.keys(f1, f2)
        new = ~np.isin(op.keys(n1, n2), active_keys)
        e1 = np.concatenate([f1, n1[new]])
        e2 = np.concatenate([f2, n2[new]])
        r = op.load(terms, e1, e2) - op.matrix((e1, e2), (f1, f2)) @ u
        res = float(np.linalg.norm(r))
        residuals.append(res)
        if res <= target:
            status = "converged"
            break
        recent_coarsening = coarsen_every and cycle % coarsen_every < 3 and cycle >= coarsen_every
        if len(residuals) > 3 and not recent_coarsening and residuals[-1] > 0.99 * residuals[-4]:
            status = "stagnated"
            log.warning("adaptive iteration stagnated at residual %.3e", res)
            break
        chosen = bulk_select(r, theta)
        grow = chosen[chosen >= len(f1)]
        if len(grow) == 0:
            # bulk sits on the active set: take it from the candidates alone
            grow = len(f1) + bulk_select(r[len(f1):], theta)
        if len(grow) == 0:
            status = "saturated"
            break
        grow.sort()
        f1 = np.concatenate([f1, e1[grow]])
        f2 = np.concatenate([f2, e2[grow]])
        u = np.concatenate([u, np.zeros(len(grow))])
        A = op.matrix((f1, f2), (f1, f2))
        rep = cg(A.dot, op.load(terms, f1, f2), u, tol=0.1 * res, maxit=10 * len(u) + 100)
        u = rep.solution
        linf = l2 = float("nan")
        if exact is not None:
            full_op, full = op.embed(f1, f2, u / np.sqrt(op.diagonal(f1, f2)))
            g = grid_exp if grid_exp is None else min(grid_exp, full_op.J + 2)
            linf, l2 = error_norms(full, exact, full_op, preconditioned=False, grid_exp=g)
        history.append((cycle, len(f1), res, linf, l2))
        log.info("cycle %d |Lambda|=%d residual=%.3e", cycle, len(f1), res)
        if max_size is not None and len(f1) >= max_size:
            status = "max_size"
            break
    return AdaptiveResult(op.to_indices(f1, f2), u, history, status, (f1, f2))


def concentration(op: AdaptiveOperator, f1, f2, box=(0.75, 1.0)) -> float:
    """Fraction of indices whose support meets ``box x box`` in a set of positive measure."""
    lo, hi = op.tables.supports
    inside = ((hi[f1] > box[0]) & (lo[f1] < box[1]) & (hi[f2] > box[0]) & (lo[f2] < box[1]))
    return float(inside.mean()) if len(f1) else 0.0
