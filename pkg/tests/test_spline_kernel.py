import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from wavhelm.spline_kernel import (
    PiecewisePoly,
    boundary_scaling,
    boundary_wavelet,
    differentiate,
    gauss_rule,
    integrate,
    integrate_product,
    mother_scaling,
    mother_wavelet,
)


def quad_oracle(f, lo, hi, breaks):
    """Adaptive scipy quadrature split at breakpoints."""
    pts = sorted(set([lo, hi] + [b for b in breaks if lo < b < hi]))
    return sum(quad(f, a, b, epsabs=1e-15, epsrel=1e-14)[0] for a, b in zip(pts[:-1], pts[1:]))


def test_scaling_values():
    phi = mother_scaling()
    assert phi(1.0) == pytest.approx(0.5, abs=1e-15)
    assert phi(1.5) == pytest.approx(0.75, abs=1e-15)
    assert phi(3.0) == 0.0
    assert phi(-0.1) == 0.0


def test_boundary_scaling_values():
    phib = boundary_scaling()
    assert phib(0.5) == pytest.approx(0.9375, abs=1e-15)
    left, right = phib.pieces[0], phib.pieces[1]
    # value at x=1 from both neighbouring pieces (local monomials at left breakpoint)
    assert np.polyval(left[::-1], 1.0) == pytest.approx(0.75, abs=1e-15)
    assert right[0] == pytest.approx(0.75, abs=1e-15)
    assert phib(2.0) == 0.0


def test_wavelet_values_and_moments():
    psi, psib = mother_wavelet(), boundary_wavelet()
    assert psi(1.0) == pytest.approx(-0.25, abs=1e-15)
    assert psib(0.75) == pytest.approx(0.28125, abs=1e-15)
    assert abs(integrate(psi)) <= 1e-14
    assert abs(integrate(psib)) <= 1e-14
    assert psi.support == (0.5, 2.5)
    assert psib.support == (0.0, 1.5)


@pytest.mark.parametrize("f", [mother_scaling, boundary_scaling, mother_wavelet, boundary_wavelet])
def test_continuity_at_breakpoints(f):
    p = f()
    for i, b in enumerate(p.breakpoints[1:-1], start=1):
        width = p.breakpoints[i] - p.breakpoints[i - 1]
        from_left = np.polyval(p.pieces[i - 1][::-1], width)
        assert from_left == pytest.approx(p.pieces[i][0], abs=1e-14)


def test_refinement_identity_pointwise():
    phi = mother_scaling()
    x = np.random.default_rng(1).uniform(0, 3, 1000)
    rhs = 0.25 * phi(2 * x) + 0.75 * phi(2 * x - 1) + 0.75 * phi(2 * x - 2) + 0.25 * phi(2 * x - 3)
    assert np.max(np.abs(phi(x) - rhs)) <= 1e-14


def test_boundary_refinement_identity_pointwise():
    phi, phib = mother_scaling(), boundary_scaling()
    x = np.random.default_rng(2).uniform(0, 2, 1000)
    rhs = 0.5 * phib(2 * x) + 9 / 8 * phi(2 * x) + 3 / 8 * phi(2 * x - 1)
    assert np.max(np.abs(phib(x) - rhs)) <= 1e-14


def test_derivative_energy():
    dphi = differentiate(mother_scaling())
    assert integrate_product(dphi, dphi) == pytest.approx(1.0, rel=1e-14)
    zero = PiecewisePoly(np.array([0.0, 1.0]), np.array([[2.5, 0.0, 0.0]]))
    assert np.all(differentiate(zero).pieces == 0.0)


def test_boundary_derivative_energy_against_oracle():
    dphib = differentiate(boundary_scaling())
    # phi_b' = 3 - 4.5x on [0,1], 1.5(x - 2) on [1,2]
    oracle = quad_oracle(lambda x: (3 - 4.5 * x) ** 2, 0, 1, []) + 0.75
    assert integrate_product(dphib, dphib) == pytest.approx(oracle, rel=1e-13)
    assert integrate_product(dphib, dphib) == pytest.approx(3.0, rel=1e-14)


def test_inner_products():
    phi, psi = mother_scaling(), mother_wavelet()
    assert integrate_product(phi, phi) == pytest.approx(11 / 20, rel=1e-13)
    assert integrate_product(phi, phi.affine(1.0, -3.0)) == 0.0
    assert integrate_product(psi, psi) == pytest.approx(1 / 12, rel=1e-13)


def test_gauss_rule_exactness():
    for order in (1, 2, 3, 5, 10):
        rule = gauss_rule(order)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
        for deg in range(2 * order):
            assert rule.weights @ rule.nodes**deg == pytest.approx(1 / (deg + 1), rel=1e-13)


def test_rejects_bad_breakpoints():
    with pytest.raises(ValueError):
        PiecewisePoly(np.array([0.0, 0.0, 1.0]), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        PiecewisePoly(np.array([0.0, 1.0]), np.zeros((2, 3)))


coeff = st.floats(-5, 5, allow_nan=False)


@st.composite
def polys(draw):
    n = draw(st.integers(1, 4))
    start = draw(st.floats(-2, 2))
    widths = draw(st.lists(st.floats(0.1, 1.5), min_size=n, max_size=n))
    bps = start + np.concatenate([[0.0], np.cumsum(widths)])
    pieces = np.array(draw(st.lists(st.lists(coeff, min_size=3, max_size=3), min_size=n, max_size=n)))
    return PiecewisePoly(bps, pieces)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys(), st.floats(-3, 3))
def test_integrate_product_symmetric_bilinear_exact(p, q, r, c):
    pq = integrate_product(p, q)
    assert pq == pytest.approx(integrate_product(q, p), rel=1e-14, abs=1e-14)
    qr = integrate_product(q * c, r)
    assert qr == pytest.approx(c * integrate_product(q, r), rel=1e-12, abs=1e-12)
    lo, hi = max(p.support[0], q.support[0]), min(p.support[1], q.support[1])
    if lo < hi:
        oracle = quad_oracle(lambda x: p(x) * q(x), lo, hi,
                             list(p.breakpoints) + list(q.breakpoints))
        assert pq == pytest.approx(oracle, rel=1e-10, abs=1e-10)
    else:
        assert pq == 0.0
