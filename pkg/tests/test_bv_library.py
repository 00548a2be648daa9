import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varpath.bv_library import (MatrixBV, ScalarBV, SingularMatrixError,
                                cantor_coefficient, cantor_function,
                                cantor_integral, cantor_level_atoms,
                                cantor_matrix, cayley_inverse, cone_indicator,
                                cone_matrix, constant_scalar, curl_check,
                                distortion_check, halfplane_below_line,
                                indicator_disk, indicator_interval,
                                inverse_matrix_field, jump_line_matrix,
                                lipschitz_wrap, matrix_det, mollify)


def test_cantor_function_known_values():
    xs = np.array([-1.0, 0.0, 1.0 / 4, 1.0 / 3, 0.5, 2.0 / 3, 3.0 / 4, 1.0, 2.0])
    expect = np.array([0.0, 0.0, 1.0 / 3, 0.5, 0.5, 0.5, 2.0 / 3, 1.0, 1.0])
    assert np.allclose(cantor_function(xs), expect, atol=1e-12)


def test_cantor_function_monotone():
    xs = np.linspace(-0.5, 1.5, 4001)
    assert np.all(np.diff(cantor_function(xs)) >= -1e-15)


def test_cantor_integral_endpoints():
    # self-similarity gives integral over [0,1] equal to 1/2; the function
    # clips its argument to [0,1]
    assert cantor_integral(np.array([1.0]))[0] == pytest.approx(0.5, abs=1e-10)
    assert cantor_integral(np.array([0.0]))[0] == 0.0
    assert cantor_integral(np.array([2.0]))[0] == pytest.approx(0.5, abs=1e-10)
    # crude Riemann cross-check on an interior point
    xs = np.linspace(0, 0.7, 20001)
    riemann = np.trapezoid(cantor_function(xs), xs)
    assert cantor_integral(np.array([0.7]))[0] == pytest.approx(riemann, abs=1e-4)


def test_cantor_level_atoms_count_and_support():
    atoms = cantor_level_atoms(6)
    assert len(atoms) == 2 ** 6
    assert atoms.min() >= 0 and atoms.max() <= 1
    # every atom avoids the removed middle third
    assert not np.any((atoms > 1.0 / 3 + 1e-12) & (atoms < 2.0 / 3 - 1e-12))


def test_cantor_coefficient_gradient_mass():
    phi = cantor_coefficient(2)
    box = np.array([[-0.5, 1.5], [-0.5, 1.5]])
    mu = phi.gradient_measure(box, 8)
    # total variation of the staircase over a full crossing is 1 per unit
    # of lateral length (here 2.0)
    assert mu.total_mass == pytest.approx(2.0, rel=0.01)


def test_indicator_interval_and_disk():
    ind = indicator_interval(0.0, 1.0)
    assert ind(np.array([[0.5]])) == pytest.approx(1.0)
    assert ind(np.array([[1.5]])) == pytest.approx(0.0)
    disk = indicator_disk((0.0, 0.0), 1.0)
    vals = disk(np.array([[0.0, 0.0], [2.0, 0.0]]))
    assert np.allclose(vals, [1.0, 0.0])
    # gradient measure concentrates on the circle with mass = perimeter
    mu = disk.gradient_measure(np.array([[-2, 2], [-2, 2]]), 8)
    assert mu.total_mass == pytest.approx(2 * np.pi, rel=0.02)
    assert np.allclose(np.linalg.norm(mu.locations, axis=1), 1.0, atol=0.02)


def test_halfplane_jump_mass_scales_with_box():
    phi = halfplane_below_line(2.0)
    box = np.array([[-1.0, 1.0], [-4.0, 4.0]])
    mu = phi.gradient_measure(box, 8)
    # locus x2 = 2 x1 crosses the box over x1 in [-1,1]: length 2*sqrt(5)
    assert mu.total_mass == pytest.approx(2 * np.sqrt(5), rel=0.02)
    assert np.allclose(mu.locations[:, 1], 2 * mu.locations[:, 0], atol=1e-8)


def test_cone_indicator_values():
    # indicator of the open cone between the rays of slopes 1/3 and 3
    phi = cone_indicator(1.0, 3.0)
    pts = np.array([[1.0, 1.0],    # between the rays
                    [1.0, 0.1],    # below the lower ray
                    [1.0, 4.0],    # above the upper ray
                    [-1.0, 0.0],   # opposite half-plane
                    [1.0, 3.0]])   # on the upper ray
    assert np.allclose(phi(pts), [1.0, 0.0, 0.0, 0.0, 0.5])


def test_constant_scalar_empty_gradient():
    phi = constant_scalar(4.2, 3)
    assert phi.gradient_measure(np.zeros((3, 2)), 6).n_atoms == 0
    assert phi(np.array([[1.0, 2.0, 3.0]])) == pytest.approx(4.2)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_cayley_inverse_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    A = rng.standard_normal((n, n)) + 3 * np.eye(n)
    assert np.allclose(cayley_inverse(A), np.linalg.inv(A), atol=1e-10)
    assert matrix_det(A) == pytest.approx(np.linalg.det(A), rel=1e-9)


def test_cayley_inverse_refuses_singular():
    with pytest.raises(SingularMatrixError):
        cayley_inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_inverse_matrix_field_pointwise():
    sigma = jump_line_matrix(2.0)
    inv = inverse_matrix_field(sigma)
    for x in [np.array([0.5, 3.0]), np.array([0.5, -3.0]), np.array([-1.0, 0.3])]:
        A = sigma.evaluate(x)
        assert np.allclose(inv.evaluate(x) @ A, np.eye(2), atol=1e-12)


def test_lipschitz_wrap_gradient_mass():
    # f(x) = x1 has |grad f| = 1, so the gradient measure of the unit box
    # carries total mass 1
    phi = lipschitz_wrap(lambda p: p[:, 0], L=1.0, dim=2)
    mu = phi.gradient_measure(np.array([[0.0, 1.0], [0.0, 1.0]]), 6)
    assert mu.total_mass == pytest.approx(1.0, rel=1e-4)
    assert phi(np.array([[0.3, 0.9]])) == pytest.approx(0.3)


def test_mollify_smooths_jump():
    ind = indicator_interval(0.0, 1.0)
    sm = mollify(ind, eps=0.1)
    # far from the jump the mollification is exact; near it, intermediate
    assert sm(np.array([[0.5]])) == pytest.approx(1.0, abs=1e-6)
    assert sm(np.array([[-1.0]])) == pytest.approx(0.0, abs=1e-6)
    mid = sm(np.array([[0.0]]))
    assert 0.2 < mid < 0.8


def test_curl_check_jump_line_symmetric():
    sigma = jump_line_matrix(2.0)
    inv = inverse_matrix_field(sigma)
    rep = curl_check(inv, np.array([[-1.0, 1.0], [-1.0, 1.0]]), eps=0.1, spacing=0.025)
    assert rep["max_residual"] < 0.5


def test_curl_check_cone_asymmetric():
    sigma = cone_matrix(1.0, 3.0)
    inv = inverse_matrix_field(sigma)
    rep = curl_check(inv, np.array([[-1.0, 1.0], [-1.0, 1.0]]), eps=0.1, spacing=0.025)
    assert rep["max_residual"] > 0.5


def test_distortion_check_identity_like():
    sigma = cantor_matrix()
    rep = distortion_check(sigma, np.array([[0.5, 0.5], [-0.5, 0.2]]))
    assert rep["delta_admissible"]
    assert rep["kappa"] >= 1.0
