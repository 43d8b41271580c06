"""Conjugate gradients, nested multilevel Galerkin iteration and Lanczos spectrum bounds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

log = logging.getLogger(__name__)

LinearMap = Callable[[np.ndarray], np.ndarray]


class ConvergenceError(RuntimeError):
    """Raised by callers that treat a missed tolerance as fatal."""


@dataclass
class CGReport:
    solution: np.ndarray
    iterations: int
    residual_history: list[float]
    converged: bool


def cg(apply: LinearMap, f: np.ndarray, x0: np.ndarray | None = None,
       tol: float = 1e-8, maxit: int = 10000) -> CGReport:
    """Plain CG; stops when the Euclidean residual norm is at most ``tol``."""
    f = np.asarray(f, dtype=float)
    x = np.zeros_like(f) if x0 is None else np.array(x0, dtype=float)
    r = f - apply(x) if np.any(x) else f.copy()
    rr = float(r @ r)
    history = [np.sqrt(rr)]
    if history[-1] <= tol:
        return CGReport(x, 0, history, True)
    p = r.copy()
    for it in range(1, maxit + 1):
        Ap = apply(p)
        alpha = rr / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        history.append(np.sqrt(rr_new))
        if history[-1] <= tol:
            return CGReport(x, it, history, True)
        p *= rr_new / rr
        p += r
        rr = rr_new
    log.warning("CG did not reach %.3e in %d iterations (residual %.3e)", tol, maxit, history[-1])
    return CGReport(x, maxit, history, False)


# ---------------------------------------------------------------------------
# Lanczos

@dataclass
class SpectrumEstimate:
    lmin: float
    lmax: float
    iterations: int
    converged: bool

    @property
    def cond(self) -> float:
        return self.lmax / self.lmin


def extreme_eigenvalues(apply: LinearMap, n: int, tol: float = 1e-6, maxit: int = 1000,
                        check_every: int = 5, seed: int = 0) -> SpectrumEstimate:
    """Smallest and largest eigenvalue of a symmetric operator by Lanczos.

    Full reorthogonalization (two Gram-Schmidt passes).  A Ritz value counts
    as converged when ``min(res, res**2/gap) <= tol*|theta|`` where ``res`` is
    the usual ``beta_k |y_k|`` bound and ``gap`` the distance to the next
    Ritz value.  The start vector is drawn from a seeded generator so that
    runs are reproducible yet not aligned with symmetric eigenvectors.
    """
    maxit = min(maxit, n)
    q = np.random.default_rng(seed).standard_normal(n)
    q /= np.linalg.norm(q)
    # Lanczos vectors live in fixed-size blocks allocated on demand, so that
    # memory follows the iteration count rather than maxit
    blocks: list[np.ndarray] = []
    block_rows = 32
    alphas, betas = [], []
    beta = 0.0
    theta = np.array([np.nan])
    for k in range(maxit):
        b, r = divmod(k, block_rows)
        if r == 0:
            blocks.append(np.empty((block_rows, n)))
        blocks[b][r] = q
        w = apply(q)
        alpha = float(q @ w)
        alphas.append(alpha)
        w -= alpha * q
        if k:
            w -= beta * q_prev
        for _ in range(2):
            for i, B in enumerate(blocks):
                B = B if i < b else B[: r + 1]
                w -= B.T @ (B @ w)
        beta = float(np.linalg.norm(w))
        m = k + 1
        done = beta <= 1e-14 * max(abs(alpha), 1.0) or m == maxit
        if m >= 2 and (m % check_every == 0 or done):
            theta, Y = eigh_tridiagonal(np.array(alphas), np.array(betas))
            res = beta * np.abs(Y[-1, [0, -1]])
            gaps = np.array([theta[1] - theta[0], theta[-1] - theta[-2]])
            bound = np.minimum(res, res**2 / np.maximum(gaps, 1e-300))
            ok = np.all(bound <= tol * np.abs(theta[[0, -1]]))
            if ok or beta <= 1e-14 * max(abs(alpha), 1.0):
                return SpectrumEstimate(theta[0], theta[-1], m, True)
            if done:
                break
        if m == 1 and done:
            return SpectrumEstimate(alpha, alpha, 1, True)
        betas.append(beta)
        q_prev = q
        q = w / beta
    log.warning("Lanczos not converged after %d steps", len(alphas))
    return SpectrumEstimate(theta[0], theta[-1], len(alphas), False)


def condition_number(op, tol: float = 1e-6, maxit: int = 1000) -> SpectrumEstimate:
    """Spectrum of the diagonally preconditioned operator ``D^{-1/2} A D^{-1/2}``."""
    return extreme_eigenvalues(op.apply_preconditioned, op.size, tol=tol, maxit=maxit)


# ---------------------------------------------------------------------------
# nested iteration

@dataclass
class MultilevelReport:
    level_iterations: list[int]
    equivalent_iterations: float
    solution: np.ndarray
    residual_norms: list[float]
    converged: bool
    errors: dict = field(default_factory=dict)


def equivalent_iterations(level_iterations: Sequence[int], dim: int = 2) -> float:
    """``sum_j M_j / 2**(dim*(s-j))``; with dim=2 this is the ``4**(s-j)`` weighting."""
    s = len(level_iterations) - 1
    return float(sum(m / 2.0 ** (dim * (s - j)) for j, m in enumerate(level_iterations)))


def multilevel_galerkin(operators: Sequence, rhs: Sequence[np.ndarray], tol: float,
                        maxit: int = 10000) -> MultilevelReport:
    """Solve the preconditioned systems level by level with prolonged warm starts.

    ``operators[j]`` and ``rhs[j]`` describe level ``j`` (j = 0..s); the
    right-hand sides are already diagonally scaled.  Since multiscale
    vectors of consecutive levels share their leading block, the warm start
    is the previous solution padded with zeros.
    """
    if len(operators) != len(rhs) or not operators:
        raise ValueError("need one right-hand side per level")
    x = None
    iters, residuals, ok = [], [], True
    for op, f in zip(operators, rhs):
        x0 = np.zeros(len(f))
        if x is not None:
            x0[: len(x)] = x
        rep = cg(op.apply_preconditioned, f, x0, tol=tol, maxit=maxit)
        x = rep.solution
        iters.append(rep.iterations)
        residuals.append(rep.residual_history[-1])
        ok &= rep.converged
    dim = getattr(operators[-1], "dim", 2)
    return MultilevelReport(iters, equivalent_iterations(iters, dim), x, residuals, ok)
