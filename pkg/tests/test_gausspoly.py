"""Algebra layer: polynomials, kernels, moments and exact integration."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from harmonium.gausspoly import (
    CapacityError,
    GaussianKernel,
    GaussPolyFunction,
    NonPositiveDefiniteError,
    SparsePolynomial,
    _mul_dense,
    _mul_dict,
    antisymmetrize,
    gaussian_even_moment,
    gaussian_shifted_moment,
    hermite,
    vandermonde,
)

RNG = np.random.default_rng(20240811)


def random_poly(num_vars, degree, rng, terms=6):
    out = {}
    for _ in range(terms):
        exps = tuple(int(e) for e in rng.integers(0, degree + 1, num_vars))
        if sum(exps) > degree:
            continue
        out[exps] = float(rng.normal())
    return SparsePolynomial(num_vars, out)


def random_gauss_poly(num_vars, rng, degree=4):
    m = rng.normal(size=(num_vars, num_vars))
    a = m @ m.T + num_vars * np.eye(num_vars)
    b = rng.normal(size=num_vars) * 0.3
    kernel = GaussianKernel(a, b, float(rng.normal() * 0.1))
    return GaussPolyFunction(kernel, random_poly(num_vars, degree, rng))


# ---------------------------------------------------------------------------
# SparsePolynomial
# ---------------------------------------------------------------------------


def test_zero_coefficients_never_stored():
    p = SparsePolynomial(2, {(1, 0): 1.0, (0, 1): 0.0})
    assert (0, 1) not in p.terms
    q = p - p
    assert q.is_zero()


def test_exponent_length_validated():
    with pytest.raises(ValueError):
        SparsePolynomial(2, {(1,): 1.0})


def test_poly_mul_monomials():
    x = SparsePolynomial.variable(1, 0)
    assert (x * x).terms == {(2,): 1}
    h1 = hermite(1)
    assert (h1 * h1).terms == {(2,): 4}


def test_poly_mul_dimension_mismatch():
    with pytest.raises(ValueError):
        SparsePolynomial.variable(1, 0) * SparsePolynomial.variable(2, 0)


def test_poly_mul_pointwise_oracle():
    for _ in range(10):
        p = random_poly(3, 4, RNG)
        q = random_poly(3, 4, RNG)
        prod = p * q
        pts = RNG.normal(size=(100, 3))
        expect = p.evaluate_many(pts) * q.evaluate_many(pts)
        got = prod.evaluate_many(pts)
        assert np.allclose(got, expect, rtol=1e-12, atol=1e-12)


def test_dense_and_dict_products_agree():
    for _ in range(5):
        p = random_poly(3, 5, RNG, terms=12)
        q = random_poly(3, 5, RNG, terms=12)
        a = _mul_dict(p, q)
        b = _mul_dense(p, q)
        keys = set(a.terms) | set(b.terms)
        for k in keys:
            assert math.isclose(
                float(a.terms.get(k, 0.0)), float(b.terms.get(k, 0.0)),
                rel_tol=1e-12, abs_tol=1e-12,
            )


def test_fraction_coefficients_stay_exact():
    p = SparsePolynomial(1, {(1,): Fraction(1, 3)})
    q = p * p * 9
    assert q.terms == {(2,): Fraction(1)}


def test_substitute_linear_evaluation():
    p = random_poly(2, 3, RNG)
    m = RNG.normal(size=(2, 3))
    sub = p.substitute_linear(m)
    for _ in range(20):
        y = RNG.normal(size=3)
        assert math.isclose(sub.evaluate(y), p.evaluate(m @ y), rel_tol=1e-10, abs_tol=1e-12)


def test_prune_drops_dust():
    p = SparsePolynomial(1, {(0,): 1.0, (1,): 1e-20})
    assert p.prune().terms == {(0,): 1.0}


# ---------------------------------------------------------------------------
# hermite
# ---------------------------------------------------------------------------


def test_hermite_low_orders():
    assert hermite(0).terms == {(0,): 1}
    assert hermite(1).terms == {(1,): 2}
    assert hermite(4).terms == {(4,): 16, (2,): -48, (0,): 12}


def test_hermite_leading_coefficient_and_degree():
    for n in range(9):
        h = hermite(n)
        assert h.degree() == n
        assert h.terms[(n,)] == 2**n


def test_hermite_recurrence_independent():
    # reference values from the recurrence evaluated numerically at points
    for n in range(1, 8):
        h_n = hermite(n)
        h_prev = hermite(n - 1)
        h_next = hermite(n + 1)
        for x in np.linspace(-2, 2, 9):
            lhs = h_next.evaluate([x])
            rhs = 2 * x * h_n.evaluate([x]) - 2 * n * h_prev.evaluate([x])
            assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-9)


def test_hermite_rejects_negative():
    with pytest.raises(ValueError):
        hermite(-1)


# ---------------------------------------------------------------------------
# vandermonde / antisymmetrize
# ---------------------------------------------------------------------------


def test_vandermonde_single_variable_is_one():
    assert vandermonde(3, [1]).terms == {(0, 0, 0): 1}


def test_vandermonde_two_variables():
    assert vandermonde(2, [0, 1]).terms == {(1, 0): 1, (0, 1): -1}


def test_vandermonde_equals_antisymmetrized_hermites():
    # product of H_0(x1)..H_{N-1}(xN) antisymmetrized gives the pairwise
    # difference product up to the factor (-2)^{N(N-1)/2} sign convention
    for n in (2, 3, 4):
        prod = SparsePolynomial.constant(n, 1)
        for i in range(n):
            prod = prod * hermite(i).map_variables([i], n)
        anti = antisymmetrize(prod, range(n))
        pairs = n * (n - 1) // 2
        expected = vandermonde(n, range(n)).scale((-1) ** pairs * 2**pairs)
        assert anti == expected


def test_antisymmetrize_symmetric_input_vanishes():
    p = SparsePolynomial(2, {(1, 1): 1})  # x1 x2
    assert antisymmetrize(p, [0, 1]).is_zero()


def test_antisymmetrize_explicit_two_variables():
    p = SparsePolynomial(2, {(2, 1): 1})  # x1^2 x2
    out = antisymmetrize(p, [0, 1])
    assert out.terms == {(2, 1): 1, (1, 2): -1}


def test_antisymmetrize_sign_flip_under_transposition():
    rng = np.random.default_rng(7)
    p = random_poly(4, 3, rng, terms=8)
    out = antisymmetrize(p, [0, 1, 3])
    swapped_terms = {}
    for exps, coeff in out.terms.items():
        e = list(exps)
        e[0], e[3] = e[3], e[0]
        swapped_terms[tuple(e)] = coeff
    assert SparsePolynomial(4, swapped_terms) == -out


def test_antisymmetrize_capacity_cap():
    p = SparsePolynomial.constant(9, 1)
    with pytest.raises(CapacityError):
        antisymmetrize(p, range(9))


# ---------------------------------------------------------------------------
# Gaussian moments
# ---------------------------------------------------------------------------


def test_even_moment_basic():
    assert math.isclose(gaussian_even_moment(1.0, 0), math.sqrt(math.pi), rel_tol=1e-15)
    assert gaussian_even_moment(2.0, 3) == 0.0


def test_even_moment_quadrature_oracle():
    val, _ = sp_integrate.quad(lambda z: math.exp(-2 * z * z) * z**2, -20, 20)
    assert math.isclose(gaussian_even_moment(2.0, 2), val, rel_tol=1e-10)
    assert math.isclose(gaussian_even_moment(2.0, 2), 2 ** -1.5 * math.gamma(1.5), rel_tol=1e-15)


def test_even_moment_domain():
    with pytest.raises(ValueError):
        gaussian_even_moment(0.0, 2)
    with pytest.raises(ValueError):
        gaussian_even_moment(-1.0, 2)


def test_shifted_moment_basic():
    assert math.isclose(gaussian_shifted_moment(1.0, 0.0, 0), math.sqrt(math.pi), rel_tol=1e-15)
    assert gaussian_shifted_moment(1.0, 0.0, 1) == 0.0


def test_shifted_moment_quadrature_oracle():
    for alpha, beta, n in [(1.0, 2.0, 2), (0.7, -1.3, 5), (2.5, 0.4, 8)]:
        val, _ = sp_integrate.quad(
            lambda z: math.exp(-alpha * z * z + beta * z) * z**n, -30, 30
        )
        assert math.isclose(gaussian_shifted_moment(alpha, beta, n), val, rel_tol=1e-10)


def test_shifted_moment_reduces_to_even():
    for n in range(21):
        for alpha in (0.5, 1.0, 3.7):
            assert math.isclose(
                gaussian_shifted_moment(alpha, 0.0, n),
                gaussian_even_moment(alpha, n),
                rel_tol=1e-13,
                abs_tol=1e-300,
            )


def test_shifted_moment_domain():
    with pytest.raises(ValueError):
        gaussian_shifted_moment(-1.0, 0.0, 2)


# ---------------------------------------------------------------------------
# GaussPolyFunction algebra
# ---------------------------------------------------------------------------


def test_gp_mul_identity_element():
    f = random_gauss_poly(2, RNG)
    one = GaussPolyFunction(
        GaussianKernel.zero(2), SparsePolynomial.constant(2, 1), f.labels
    )
    g = f * one
    pts = RNG.normal(size=(50, 2))
    assert np.allclose(g.evaluate_many(pts), f.evaluate_many(pts), rtol=1e-14)


def test_gp_mul_gaussians_add():
    k = GaussianKernel(np.array([[2.0]]))  # exp(-x^2)
    f = GaussPolyFunction(k, SparsePolynomial.constant(1, 1), ("x",))
    g = f * f
    assert np.allclose(g.kernel.A, [[4.0]])
    assert math.isclose(g.evaluate([0.7]), math.exp(-2 * 0.49), rel_tol=1e-14)


def test_gp_mul_pointwise_oracle():
    for _ in range(5):
        f = random_gauss_poly(3, RNG)
        g = GaussPolyFunction(random_gauss_poly(3, RNG).kernel, random_poly(3, 3, RNG), f.labels)
        prod = f * g
        pts = RNG.normal(size=(100, 3)) * 0.7
        expect = f.evaluate_many(pts) * g.evaluate_many(pts)
        assert np.allclose(prod.evaluate_many(pts), expect, rtol=1e-12, atol=1e-13)


def test_gp_mul_label_mismatch():
    f = random_gauss_poly(2, RNG)
    g = GaussPolyFunction(f.kernel, f.poly, ("u", "v"))
    with pytest.raises(ValueError, match="label"):
        f * g


def test_substitute_identity():
    f = random_gauss_poly(3, RNG)
    g = f.substitute_linear(np.eye(3))
    pts = RNG.normal(size=(20, 3))
    assert np.allclose(g.evaluate_many(pts), f.evaluate_many(pts), rtol=1e-13)


def test_substitute_rotation_invariance():
    # exp(-x1^2 - x2^2) is rotation invariant
    f = GaussPolyFunction(
        GaussianKernel(2 * np.eye(2)), SparsePolynomial.constant(2, 1)
    )
    theta = math.pi / 4
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    g = f.substitute_linear(rot)
    pts = RNG.normal(size=(30, 2))
    assert np.allclose(g.evaluate_many(pts), f.evaluate_many(pts), rtol=1e-13)


def test_substitute_singular_rejected():
    f = random_gauss_poly(2, RNG)
    with pytest.raises(ValueError, match="singular"):
        f.substitute_linear(np.ones((2, 2)))


def test_substitute_orthogonal_preserves_integral():
    for _ in range(5):
        f = random_gauss_poly(3, RNG)
        q, _ = np.linalg.qr(RNG.normal(size=(3, 3)))
        g = f.substitute_linear(q)
        assert math.isclose(g.integrate_all(), f.integrate_all(), rel_tol=1e-10)


def test_kernel_symmetry_enforced():
    with pytest.raises(ValueError, match="symmetric"):
        GaussianKernel(np.array([[1.0, 0.5], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def test_integrate_out_plain_gaussian():
    f = GaussPolyFunction(
        GaussianKernel(2 * np.eye(2)), SparsePolynomial.constant(2, 1), ("x", "y")
    )
    g = f.integrate_out(["y"])
    assert g.labels == ("x",)
    for x in (0.0, 0.5, -1.2):
        assert math.isclose(
            g.evaluate([x]), math.sqrt(math.pi) * math.exp(-x * x), rel_tol=1e-13
        )


def test_integrate_out_polynomial_factor():
    # x y^2 exp(-x^2 - y^2) over y -> (sqrt(pi)/2) x exp(-x^2)
    f = GaussPolyFunction(
        GaussianKernel(2 * np.eye(2)), SparsePolynomial(2, {(1, 2): 1.0}), ("x", "y")
    )
    g = f.integrate_out(["y"])
    for x in (0.3, -0.9):
        assert math.isclose(
            g.evaluate([x]),
            math.sqrt(math.pi) / 2 * x * math.exp(-x * x),
            rel_tol=1e-13,
        )


def test_integrate_out_not_positive_definite():
    f = GaussPolyFunction(
        GaussianKernel(np.diag([1.0, -0.5])), SparsePolynomial.constant(2, 1)
    )
    with pytest.raises(NonPositiveDefiniteError):
        f.integrate_out([1])


def test_integrate_out_matches_adaptive_quadrature():
    # random 2-4 variable instances, partial and full marginals
    for dim in (2, 3, 4):
        f = random_gauss_poly(dim, RNG, degree=3)
        subset = list(f.labels[1:])
        marginal = f.integrate_out(subset)
        for _ in range(3):
            x0 = float(RNG.normal() * 0.5)

            def section(*ys, x0=x0):
                return f.evaluate([x0, *ys])

            expected, err = sp_integrate.nquad(
                section, [(-9, 9)] * (dim - 1), opts={"epsabs": 1e-11, "epsrel": 1e-11}
            )
            got = marginal.evaluate([x0])
            assert math.isclose(got, expected, rel_tol=1e-8, abs_tol=1e-10)


def test_integrate_all_matches_quadrature():
    f = random_gauss_poly(2, RNG, degree=4)
    expected, _ = sp_integrate.nquad(
        lambda x, y: f.evaluate([x, y]), [(-10, 10)] * 2,
        opts={"epsabs": 1e-12, "epsrel": 1e-12},
    )
    assert math.isclose(f.integrate_all(), expected, rel_tol=1e-9, abs_tol=1e-12)


def test_integration_order_does_not_matter():
    f = random_gauss_poly(4, RNG, degree=3)
    a = f.integrate_out([f.labels[1], f.labels[3]])
    b = f.integrate_out([f.labels[3], f.labels[1]])
    pts = RNG.normal(size=(25, 2))
    assert np.allclose(a.evaluate_many(pts), b.evaluate_many(pts), rtol=1e-10, atol=1e-13)


def test_dense_and_dict_integration_agree():
    # a polynomial big enough to trip the dense subset path
    rng = np.random.default_rng(3)
    poly = random_poly(4, 6, rng, terms=200)
    f = GaussPolyFunction(
        GaussianKernel((np.eye(4) + 0.2)), poly
    )
    dense = f.integrate_out(f.labels[:3])
    step_by_step = f
    for lab in f.labels[:3]:
        step_by_step = step_by_step.integrate_out([lab])
    pts = rng.normal(size=(30, 1))
    assert np.allclose(
        dense.evaluate_many(pts), step_by_step.evaluate_many(pts), rtol=1e-10, atol=1e-12
    )


def test_gp_evaluate_unit_and_gaussian():
    one = GaussPolyFunction(GaussianKernel.zero(3), SparsePolynomial.constant(3, 1))
    assert one.evaluate([4.0, -2.0, 0.5]) == 1.0
    f = GaussPolyFunction(GaussianKernel(np.array([[2.0]])), SparsePolynomial.constant(1, 1))
    assert math.isclose(f.evaluate([1.0]), math.exp(-1.0), rel_tol=1e-15)


def test_gp_evaluate_length_mismatch():
    f = random_gauss_poly(2, RNG)
    with pytest.raises(ValueError):
        f.evaluate([1.0])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_json_round_trip():
    f = random_gauss_poly(3, RNG)
    obj = f.to_json_obj()
    assert set(obj) == {"labels", "A", "b", "c", "terms"}
    assert len(obj["A"]) == 9  # row-major flattening
    g = GaussPolyFunction.from_json(json.dumps(obj))
    assert g.labels == f.labels
    pts = RNG.normal(size=(20, 3))
    assert np.allclose(g.evaluate_many(pts), f.evaluate_many(pts), rtol=1e-14)
