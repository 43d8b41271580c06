import numpy as np
import pytest

from wavhelm.basis1d import (
    SCALING,
    WAVELET,
    BasisSpec1D,
    FunctionIndex,
    collocation_matrix,
    enumerate_basis,
    norms,
    normalization_weights,
    scaling_function,
    support,
    wavelet_function,
)
from wavhelm.spline_kernel import boundary_wavelet, differentiate, integrate, integrate_product


@pytest.mark.parametrize("j", [2, 3, 5])
def test_dirichlet_conditions(j):
    for k in range(1, 2**j + 1):
        for f in (scaling_function(j, k), wavelet_function(j, k)):
            assert abs(f(0.0)) <= 1e-14 * 2**j and abs(f(1.0)) <= 1e-14 * 2**j


@pytest.mark.parametrize("j", [2, 4, 7])
def test_interior_scaling_norms(j):
    f = scaling_function(j, 2)
    assert integrate_product(f, f) == pytest.approx(11 / 20, rel=1e-13)
    df = differentiate(f)
    assert integrate_product(df, df) == pytest.approx(4.0**j, rel=1e-13)


@pytest.mark.parametrize("j", [2, 3, 4])
def test_wavelet_vanishing_moment(j):
    for k in range(1, 2**j + 1):
        assert abs(integrate(wavelet_function(j, k))) <= 1e-14


def test_interior_wavelet_support_length():
    for j in (2, 5):
        lo, hi = wavelet_function(j, 2).support
        assert hi - lo == pytest.approx(2 * 2.0**-j)
        assert support(FunctionIndex(j, WAVELET, 2)) == pytest.approx((lo, hi))


def test_right_boundary_wavelet_is_negated_mirror():
    x = np.linspace(0, 1, 257)
    psi = wavelet_function(2, 4)
    mirror = 2.0 * boundary_wavelet()(4 * (1 - x))
    assert np.max(np.abs(psi(x) + mirror)) <= 1e-14


def test_enumeration():
    assert len(enumerate_basis(BasisSpec1D(2, 0))) == 4
    idx = enumerate_basis(BasisSpec1D(2, 3))
    assert len(idx) == 32 == BasisSpec1D(2, 3).dim
    assert all(i.kind == SCALING for i in idx[:4]) and all(i.kind == WAVELET for i in idx[4:])
    assert [i.level for i in idx[4:]] == sorted(i.level for i in idx[4:])
    idx3 = enumerate_basis(BasisSpec1D(3, 1))
    assert sum(i.kind == SCALING for i in idx3) == 8 and sum(i.kind == WAVELET for i in idx3) == 8


def test_norms():
    assert norms(FunctionIndex(4, WAVELET, 5))[0] == pytest.approx(1 / 12, rel=1e-13)
    assert norms(FunctionIndex(4, WAVELET, 1))[0] == pytest.approx(27 / 320, rel=1e-13)
    for j in (2, 3, 4, 5):
        ratio = norms(FunctionIndex(j + 1, WAVELET, 3))[1] / norms(FunctionIndex(j, WAVELET, 3))[1]
        assert ratio == pytest.approx(4.0, rel=1e-12)


def test_seminorm_equivalence_bracket():
    def ratios(j):
        return np.array([np.sqrt(norms(FunctionIndex(j, WAVELET, k))[1]) / 2**j
                         for k in range(1, 2**j + 1)])
    ref = ratios(2)
    lo, hi = ref.min(), ref.max()
    for j in range(3, 9):
        r = ratios(j)
        assert lo - 1e-12 <= r.min() and r.max() <= hi + 1e-12


@pytest.mark.parametrize("j", [2, 3, 6])
def test_quadratic_lies_in_spline_space(j):
    x = np.linspace(0, 1, 400)
    B = collocation_matrix(j, x).toarray()
    y = x * (1 - x)
    c, *_ = np.linalg.lstsq(B, y, rcond=None)
    assert np.max(np.abs(B @ c - y)) <= 1e-12


def test_collocation_matches_functions():
    x = np.random.default_rng(3).uniform(0, 1, 200)
    j = 3
    B = collocation_matrix(j, x).toarray()
    D = collocation_matrix(j, x, deriv=1).toarray()
    for k in range(1, 2**j + 1):
        f = scaling_function(j, k)
        assert np.allclose(B[:, k - 1], f(x), atol=1e-13)
        assert np.allclose(D[:, k - 1], differentiate(f)(x), atol=1e-12)


def test_normalization_weights():
    spec = BasisSpec1D(2, 2, normalization="H1seminorm")
    w = normalization_weights(spec)
    for wi, idx in zip(w, enumerate_basis(spec)):
        assert wi**2 * norms(idx)[1] == pytest.approx(1.0)
    assert np.all(normalization_weights(BasisSpec1D(2, 2)) == 1.0)


def test_invalid_indices():
    with pytest.raises(ValueError):
        scaling_function(2, 0)
    with pytest.raises(ValueError):
        wavelet_function(1, 1)
    with pytest.raises(ValueError):
        BasisSpec1D(j0=1)
    with pytest.raises(ValueError):
        BasisSpec1D(s=-1)
