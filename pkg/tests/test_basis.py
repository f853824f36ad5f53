import numpy as np
import pytest

from dglab import basis as bs


def test_gauss_degree1_nodes_weights():
    b = bs.build_basis(1, bs.GAUSS)
    assert np.allclose(b.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-14)
    assert np.allclose(b.weights, [1.0, 1.0], atol=1e-14)


def test_lobatto_degree1_endpoints():
    b = bs.build_basis(1, bs.GAUSS_LOBATTO)
    assert np.allclose(b.nodes, [-1.0, 1.0], atol=1e-15)
    assert np.allclose(b.weights, [1.0, 1.0], atol=1e-15)


def test_lobatto_degree2_moment_conditions():
    # nodes/weights solve the moment conditions exactly up to degree 3
    b = bs.build_basis(2, bs.GAUSS_LOBATTO)
    assert np.allclose(b.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(b.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-14)
    for j in range(4):
        exact = 2.0 / (j + 1) if j % 2 == 0 else 0.0
        assert np.sum(b.weights * b.nodes ** j) == pytest.approx(exact, abs=1e-14)


@pytest.mark.parametrize("family", bs.NODE_FAMILIES)
@pytest.mark.parametrize("degree", [1, 2, 3, 5, 8, 12, 16, 20])
def test_basis_invariants(family, degree):
    b = bs.build_basis(degree, family)
    n = degree + 1
    assert np.all(np.diff(b.nodes) > 0)
    assert np.all(b.weights > 0)
    assert np.sum(b.weights) == pytest.approx(2.0, abs=1e-13)
    assert np.max(np.abs(b.diff @ np.ones(n))) < 1e-12
    assert np.allclose(b.diff @ b.nodes, np.ones(n), atol=1e-11)
    assert np.allclose(b.inverse_vandermonde @ b.vandermonde, np.eye(n),
                       atol=1e-12)


def test_lobatto_boundary_weights_are_selectors():
    for degree in (1, 3, 7):
        b = bs.build_basis(degree, bs.GAUSS_LOBATTO)
        left = np.zeros(degree + 1)
        left[0] = 1.0
        right = np.zeros(degree + 1)
        right[-1] = 1.0
        assert np.allclose(b.left, left, atol=1e-14)
        assert np.allclose(b.right, right, atol=1e-14)


@pytest.mark.parametrize("family", bs.NODE_FAMILIES)
@pytest.mark.parametrize("degree", [2, 4, 7, 11])
def test_differentiation_exact_for_polynomials(family, degree):
    b = bs.build_basis(degree, family)
    for j in range(degree + 1):
        p = b.nodes ** j
        dp = j * b.nodes ** (j - 1) if j > 0 else np.zeros_like(b.nodes)
        assert np.max(np.abs(b.diff @ p - dp)) < 1e-10


@pytest.mark.parametrize("family,extra", [(bs.GAUSS, 1), (bs.GAUSS_LOBATTO, -1)])
@pytest.mark.parametrize("degree", [1, 3, 6, 10])
def test_quadrature_exactness(family, extra, degree):
    # Gauss integrates degree 2N+1, Lobatto 2N-1
    b = bs.build_basis(degree, family)
    top = 2 * degree + extra
    for j in range(top + 1):
        exact = 2.0 / (j + 1) if j % 2 == 0 else 0.0
        got = np.sum(b.weights * b.nodes ** j)
        assert abs(got - exact) < 1e-12 * max(1.0, abs(exact)), (j, got)


def test_interpolation_at_boundaries():
    b = bs.build_basis(6, bs.GAUSS)
    coeffs = np.array([0.3, -1.2, 0.5, 0.0, 2.0, -0.7, 0.1])
    values = np.polyval(coeffs, b.nodes)
    assert b.left @ values == pytest.approx(np.polyval(coeffs, -1.0), abs=1e-12)
    assert b.right @ values == pytest.approx(np.polyval(coeffs, 1.0), abs=1e-12)


def test_build_basis_errors():
    with pytest.raises(bs.BasisError):
        bs.build_basis(-1, bs.GAUSS)
    with pytest.raises(bs.BasisError):
        bs.build_basis(0, bs.GAUSS_LOBATTO)
    with pytest.raises(bs.BasisError):
        bs.build_basis(3, "chebyshev")
    with pytest.raises(bs.BasisError):
        bs.build_basis(21, bs.GAUSS)


class TestSvvKernel:
    def test_power_linear_ramp(self):
        k = bs.svv_kernel(4, power=1.0)
        assert np.allclose(k.q, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)

    def test_power_zero_recovers_plain_viscosity(self):
        # identically one, so filtering is a no-op
        k = bs.svv_kernel(4, power=0.0)
        assert np.array_equal(k.q, np.ones(5))

    def test_power_large_keeps_only_top_mode(self):
        k = bs.svv_kernel(4, power=1000.0)
        assert k.q[-1] == pytest.approx(1.0, abs=1e-15)
        assert np.max(np.abs(k.q[:-1])) < 1e-12

    @pytest.mark.parametrize("degree,power", [(3, 0.1), (7, 1.0), (8, 2.5),
                                              (5, 0.0), (6, 42.0)])
    def test_power_kernel_monotone_unit_range(self, degree, power):
        k = bs.svv_kernel(degree, power=power)
        assert np.all(np.diff(k.q) >= -1e-15)
        assert np.all((k.q >= 0) & (k.q <= 1 + 1e-15))
        if power > 0:
            assert k.q[0] == 0.0
        assert k.q[-1] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("degree,cutoff", [(7, 0), (7, 3), (7, 6), (5, 2)])
    def test_exponential_kernel(self, degree, cutoff):
        k = bs.svv_kernel(degree, bs.EXPONENTIAL, cutoff=cutoff)
        assert np.all(k.q[:cutoff + 1] == 0.0)
        assert np.all(np.diff(k.q) >= -1e-15)
        assert k.q[-1] == pytest.approx(1.0, abs=1e-15)

    def test_kernel_errors(self):
        with pytest.raises(bs.BasisError):
            bs.svv_kernel(0, power=1.0)  # k/N division by zero
        with pytest.raises(bs.BasisError):
            bs.svv_kernel(4, power=-1.0)
        with pytest.raises(bs.BasisError):
            bs.svv_kernel(4, bs.EXPONENTIAL, cutoff=4)
        with pytest.raises(bs.BasisError):
            bs.svv_kernel(4, bs.EXPONENTIAL, cutoff=-1)
        with pytest.raises(bs.BasisError):
            bs.svv_kernel(4, "sigmoid", power=1.0)


class TestModalFilter:
    def test_identity_kernel(self):
        b = bs.build_basis(5, bs.GAUSS)
        k = bs.svv_kernel(5, power=0.0)
        rng = np.random.default_rng(3)
        v = rng.standard_normal(6)
        assert np.allclose(bs.apply_modal_filter(b, k, v), v, atol=1e-13)

    def test_legendre_mode_is_eigenvector(self):
        degree, mode = 6, 4
        b = bs.build_basis(degree, bs.GAUSS)
        k = bs.svv_kernel(degree, power=0.7)
        nodal = b.vandermonde[:, mode]
        out = bs.apply_modal_filter(b, k, nodal)
        assert np.allclose(out, k.q[mode] * nodal, atol=1e-12)

    def test_constant_killed_by_zero_mode_entry(self):
        # Q = {0,1,1} on degree 2: the constant is pure mode 0.
        # Expected value from the explicit 3x3 matrix product.
        b = bs.build_basis(2, bs.GAUSS_LOBATTO)
        k = bs.SvvKernel(family=bs.POWER, q=np.array([0.0, 1.0, 1.0]))
        expected = (b.vandermonde @ np.diag(k.q)
                    @ b.inverse_vandermonde) @ np.ones(3)
        out = bs.apply_modal_filter(b, k, np.ones(3))
        assert np.allclose(out, expected, atol=1e-14)
        assert np.max(np.abs(out)) < 1e-13

    def test_idempotent_for_binary_kernel(self):
        b = bs.build_basis(7, bs.GAUSS)
        k = bs.SvvKernel(family=bs.POWER,
                         q=np.array([0, 0, 0, 1, 1, 1, 1, 1.0]))
        rng = np.random.default_rng(11)
        v = rng.standard_normal(8)
        once = bs.apply_modal_filter(b, k, v)
        twice = bs.apply_modal_filter(b, k, once)
        assert np.allclose(once, twice, atol=1e-12)

    def test_self_adjoint_in_quadrature_inner_product(self):
        b = bs.build_basis(6, bs.GAUSS_LOBATTO)
        k = bs.svv_kernel(6, power=1.3)
        f = bs.filter_matrix(b, k)
        rng = np.random.default_rng(5)
        u, v = rng.standard_normal((2, 7))
        lhs = np.sum(b.weights * (f @ u) * v)
        rhs = np.sum(b.weights * u * (f @ v))
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_dimension_mismatch(self):
        b = bs.build_basis(4, bs.GAUSS)
        k = bs.svv_kernel(4, power=1.0)
        with pytest.raises(bs.BasisError):
            bs.apply_modal_filter(b, k, np.ones(6))
        with pytest.raises(bs.BasisError):
            bs.filter_matrix(b, bs.svv_kernel(5, power=1.0))
