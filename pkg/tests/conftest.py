import functools
import sys

import numpy as np

from wavhelm.basis1d import scaling_function, wavelet_function
from wavhelm.gram1d import orthogonalize_coarsest
from wavhelm.spline_kernel import differentiate, integrate_product, linear_combination


@functools.lru_cache(maxsize=None)
def factor_function(level, kind, pos0, spec=None):
    """1D factor of a tensor index; ``spec`` switches on the coarse orthogonalization."""
    if kind == 1:
        return wavelet_function(level, pos0 + 1)
    if spec is not None and spec.ortho and level == spec.j0:
        T = orthogonalize_coarsest(spec)
        n = 2**level
        return linear_combination([(T[k, pos0], scaling_function(level, k + 1))
                                   for k in range(n) if T[k, pos0] != 0.0])
    return scaling_function(level, pos0 + 1)


@functools.lru_cache(maxsize=None)
def pair_integrals(f, g):
    return integrate_product(f, g), integrate_product(differentiate(f), differentiate(g))


def dense_oracle(op):
    """Pairwise-quadrature assembly of eps<grad, grad> + a<., .> in op's ordering."""
    spec = op.spec if op.spec.ortho else None
    funcs = [tuple(factor_function(int(j), int(e), int(k), spec) for e, k in zip(es, ks))
             for j, es, ks in zip(op.levels, op.kinds, op.positions)]
    N = len(funcs)
    A = np.zeros((N, N))
    for i in range(N):
        for l in range(i, N):
            pairs = [pair_integrals(f, g) for f, g in zip(funcs[i], funcs[l])]
            m = np.prod([p[0] for p in pairs])
            if m == 0.0 and all(p[1] == 0.0 for p in pairs):
                continue
            stiff = sum(pairs[t][1] * np.prod([p[0] for q, p in enumerate(pairs) if q != t])
                        for t in range(len(pairs)))
            A[i, l] = A[l, i] = op.eps * stiff + op.a * m
    w = op.weights
    return A * np.outer(w, w)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
