import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from oracles import zero_profile_eigenvalues
from os_portrait.discretize import (
    Scheme,
    apply,
    build,
    build_chebyshev,
    build_finite_difference,
    chebyshev_d2,
    fd2_laplacian,
)
from os_portrait.errors import DimensionMismatch, InvalidSize, NonPositiveEpsilon
from os_portrait.profile import QuadraticProfile

ZERO = QuadraticProfile(0, 0, 0)


def smallest(values, k):
    return values[np.argsort(np.abs(values))][:k]


@pytest.mark.parametrize("builder", [build_chebyshev, build_finite_difference])
def test_argument_checks(builder):
    with pytest.raises(InvalidSize):
        builder(ZERO, 0.01, 3)
    with pytest.raises(NonPositiveEpsilon):
        builder(ZERO, 0.0, 10)
    with pytest.raises(NonPositiveEpsilon):
        builder(ZERO, -1.0, 10)


def test_chebyshev_exact_case():
    op = build_chebyshev(ZERO, 0.01, 200)
    ev = smallest(scipy.linalg.eigvals(op.matrix), 10)
    exact = zero_profile_eigenvalues(0.01, 10)
    assert np.max(np.abs(ev - exact) / np.abs(exact)) <= 1e-8


def test_chebyshev_shift_by_constant():
    ev0 = smallest(scipy.linalg.eigvals(build_chebyshev(ZERO, 0.01, 200).matrix), 10)
    op = build_chebyshev(QuadraticProfile(0, 0, 0.5), 0.01, 200)
    ev = scipy.linalg.eigvals(op.matrix)
    ev = ev[np.argsort(np.abs(ev - 0.5))][:10]
    np.testing.assert_allclose(ev[np.argsort(ev.imag)], (ev0 + 0.5)[np.argsort(ev0.imag)], rtol=0, atol=1e-10)


def test_fd2_exact_case():
    op = build_finite_difference(ZERO, 0.01, 2000)
    d = np.diag(op.matrix)
    off = np.diag(op.matrix, 1)
    # tridiagonal Toeplitz: eigenvalues are known in closed form, no dense solve needed
    n = op.n
    k = np.arange(1, 6)
    ev = d[0] + 2 * off[0] * np.cos(np.pi * k / (n + 1))
    exact = zero_profile_eigenvalues(0.01, 5)
    assert np.max(np.abs(ev - exact) / np.abs(exact)) <= 1e-5


def test_fd2_structure():
    p = QuadraticProfile(1.0, 0.3, -0.2)
    op = build_finite_difference(p, 0.02, 50)
    A = op.matrix
    assert np.count_nonzero(np.triu(A, 2)) == 0 and np.count_nonzero(np.tril(A, -2)) == 0
    T = (A - np.diag(np.diag(A).real)) / (1j * 0.02)
    assert np.allclose(T.imag, 0) and np.allclose(T.real, T.real.T)
    np.testing.assert_array_equal(np.diag(A).real, p(op.grid.nodes))


@pytest.mark.parametrize("n", [4, 5, 16, 63])
def test_grids(n):
    x, _ = chebyshev_d2(n)
    assert len(x) == n and np.all(np.diff(x) > 0) and np.all(np.abs(x) < 1)
    assert np.array_equal(x, -x[::-1])
    x, _ = fd2_laplacian(n)
    assert len(x) == n and np.all(np.diff(x) > 0) and np.all(np.abs(x) < 1)


def test_chebyshev_d2_exact_on_polynomials():
    n = 24
    x, D2 = chebyshev_d2(n)
    # f vanishes at +-1, so eliminating the boundary columns loses nothing
    f = (1 - x**2) * x**3
    f2 = 6 * x - 20 * x**3
    np.testing.assert_allclose(D2 @ f, f2, atol=1e-10)


def test_apply():
    op = build_chebyshev(QuadraticProfile(0, 0, 0.7), 0.01, 8)
    e1 = np.zeros(8, complex)
    e1[0] = 1
    np.testing.assert_array_equal(apply(op, e1), op.matrix[:, 0])
    np.testing.assert_array_equal(apply(op, np.zeros(8)), np.zeros(8))
    v = np.random.default_rng(0).standard_normal(8)
    _, D2 = chebyshev_d2(8)
    np.testing.assert_allclose(apply(op, v), 1j * 0.01 * D2 @ v + 0.7 * v, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        apply(op, np.zeros(3))


def test_matrix_is_read_only():
    op = build(ZERO, 0.1, 10, "fd2")
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 1


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3),
    st.sampled_from(list(Scheme)), st.integers(4, 40),
)
def test_shift_identity_exact(a, b, c, s, scheme, n):
    A = build(QuadraticProfile(a, b, c), 0.05, n, scheme).matrix
    B = build(QuadraticProfile(a, b, c + s), 0.05, n, scheme).matrix
    off = ~np.eye(n, dtype=bool)
    assert np.array_equal(A[off], B[off])
    np.testing.assert_allclose(np.diag(B) - np.diag(A), s, rtol=0, atol=1e-14 * max(1, abs(a) + abs(b) + abs(c) + abs(s)))


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.integers(4, 40))
def test_fd2_reflection_is_flip_similarity(a, b, c, n):
    A = build_finite_difference(QuadraticProfile(a, b, c), 0.05, n).matrix
    B = build_finite_difference(QuadraticProfile(a, -b, c), 0.05, n).matrix
    J = np.eye(n)[::-1]
    np.testing.assert_allclose(J @ A @ J, B, rtol=0, atol=1e-13 * max(1, abs(a) + abs(b) + abs(c)))


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(1e-3, 1.0), st.integers(4, 60))
def test_fd2_numerical_range(a, b, c, eps, n):
    p = QuadraticProfile(a, b, c)
    A = build_finite_difference(p, eps, n).matrix
    ev = scipy.linalg.eigvals(A)
    q = p(np.linspace(-1, 1, 2001))
    lo, hi = q.min() - 1e-12, q.max() + 1e-12
    tol = 1e-12 * np.linalg.norm(A)
    assert np.all(ev.imag < tol)
    assert np.all(ev.real >= lo - tol) and np.all(ev.real <= hi + tol)


def test_convergence_in_n():
    p = QuadraticProfile(1, 0, 0)
    ref = scipy.linalg.eigvals(build_chebyshev(p, 0.01, 200).matrix)

    def err(n):
        ev = scipy.linalg.eigvals(build_finite_difference(p, 0.01, n).matrix)
        ev = ev[np.argsort(np.abs(ev.imag))][:5]
        return max(np.min(np.abs(ref - z)) for z in ev)

    assert err(400) < err(200) < err(100)
