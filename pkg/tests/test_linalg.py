import math

import numpy as np
import pytest

from qrwt.linalg import (
    DimensionError,
    SubspaceSplit,
    Superoperator,
    dagger,
    decap_exp,
    dyad,
    kron,
    mat_exp,
    slice_op,
    superop_distance,
    superop_exp,
    unvec,
    vec,
)

RNG = np.random.default_rng(42)


def rnd(d):
    return RNG.standard_normal((d, d)) + 1j * RNG.standard_normal((d, d))


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_elementary_structure(self):
        e = np.array([[0.0, 1.0], [0.0, 0.0]])
        k = kron(e, np.eye(2))
        assert np.count_nonzero(k) == 2
        assert set(np.round(k[k != 0], 12)) == {1.0}

    def test_mixed_product(self):
        a, b, c, d = rnd(2), rnd(2), rnd(2), rnd(2)
        assert np.allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d))

    def test_associativity_exact(self):
        # small-integer entries keep the products exact in floating point
        a, b, c = (RNG.integers(-4, 5, size=(d, d)) + 1j * RNG.integers(-4, 5, size=(d, d))
                   for d in (2, 3, 2))
        assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))

    def test_index_pairing(self):
        a, b = rnd(2), rnd(3)
        # left factor is the slow index
        assert kron(a, b)[1 * 3 + 2, 0 * 3 + 1] == pytest.approx(a[1, 0] * b[2, 1])


class TestSlice:
    def test_product_case(self):
        a, b = rnd(3), rnd(4)
        x = RNG.standard_normal(4) + 1j * RNG.standard_normal(4)
        y = RNG.standard_normal(4) + 1j * RNG.standard_normal(4)
        assert np.allclose(slice_op(kron(a, b), x, y, 3), np.vdot(x, b @ y) * a)

    def test_identity(self):
        x = RNG.standard_normal(3) + 1j * RNG.standard_normal(3)
        y = RNG.standard_normal(3) + 1j * RNG.standard_normal(3)
        assert np.allclose(slice_op(np.eye(6), x, y, 2), np.vdot(x, y) * np.eye(2))

    def test_block_extraction(self):
        t = rnd(6)
        e0 = np.array([1.0, 0.0, 0.0])
        assert np.allclose(slice_op(t, e0, e0, 2), t.reshape(2, 3, 2, 3)[:, 0, :, 0])

    def test_sesquilinearity(self):
        t = rnd(8)
        x1, x2, y = (RNG.standard_normal(4) + 1j * RNG.standard_normal(4)
                     for _ in range(3))
        lam = 0.7 - 0.2j
        lhs = slice_op(t, lam * x1 + x2, y, 2)
        rhs = np.conj(lam) * slice_op(t, x1, y, 2) + slice_op(t, x2, y, 2)
        assert np.allclose(lhs, rhs, atol=1e-12)
        assert np.allclose(slice_op(t, y, lam * x1, 2), lam * slice_op(t, y, x1, 2),
                           atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            slice_op(rnd(6), np.zeros(4), np.zeros(4), 2)


class TestMatExp:
    def test_zero(self):
        assert np.allclose(mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(mat_exp(np.diag([1j * np.pi, 0.0])), np.diag([-1.0, 1.0]))

    def test_hermitian_vs_eigh_oracle(self):
        a = rnd(5)
        a = a + dagger(a)
        w, u = np.linalg.eigh(a)
        oracle = (u * np.exp(w)) @ dagger(u)
        assert np.linalg.norm(mat_exp(a, hermitian=True) - oracle) <= 1e-12 * np.linalg.norm(oracle)
        assert np.linalg.norm(mat_exp(a) - oracle) <= 1e-11 * np.linalg.norm(oracle)

    def test_adjoint(self):
        a = rnd(4)
        assert np.allclose(dagger(mat_exp(a)), mat_exp(dagger(a)), atol=1e-12)

    def test_nonsquare_rejected(self):
        with pytest.raises(DimensionError):
            mat_exp(np.zeros((2, 3)))


class TestDecapExp:
    def test_leading_terms(self):
        assert decap_exp(1, 0.0) == pytest.approx(1.0)
        assert decap_exp(2, 0.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("z", [1.0, 1.0j, 2.0 - 3.0j])
    def test_reflection_identity(self, z):
        # exp_1(z) exp(-z) = exp_1(-z)
        assert decap_exp(1, z) * np.exp(-z) == pytest.approx(decap_exp(1, -z), abs=1e-12)

    def test_product_identity(self):
        for z in (0.3 + 1.1j, -2.0j, 4.0):
            lhs = decap_exp(1, z) * decap_exp(1, -z)
            rhs = decap_exp(2, z) + decap_exp(2, -z)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_series_fallback_matches_long_series(self):
        for z in (1e-4, 1e-4 + 2e-5j, -3e-4j):
            for order in (1, 2):
                oracle = sum(z ** n / math.factorial(n + order) for n in range(30))
                assert decap_exp(order, z) == pytest.approx(oracle, rel=1e-14)

    def test_matrix_identities_hermitian(self):
        a = rnd(3)
        a = a + dagger(a)
        e1 = decap_exp(1, a)            # exp_1(-iA)
        e1m = decap_exp(1, -a)          # exp_1(+iA)
        e2 = decap_exp(2, a)
        e2m = decap_exp(2, -a)
        expm = mat_exp(1j * a)          # exp(-(-iA))
        assert np.linalg.norm(e1 @ expm - e1m) <= 1e-10
        assert np.linalg.norm(e1 @ e1m - (e2 + e2m)) <= 1e-10

    def test_matrix_requires_hermitian(self):
        with pytest.raises(ValueError):
            decap_exp(1, np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_bad_order(self):
        with pytest.raises(ValueError):
            decap_exp(3, 1.0)


class TestSuperoperator:
    def test_identity_exp(self):
        s = Superoperator.zero(2, (2, 2))
        e = superop_exp(s, 1.7)
        assert superop_distance(e, Superoperator.identity(2)) <= 1e-14

    def test_semigroup(self):
        m = rnd(9)
        s = Superoperator(m, 3, (3, 3))
        lhs = superop_exp(s, 0.9)
        rhs = superop_exp(s, 0.4).compose(superop_exp(s, 0.5))
        assert superop_distance(lhs, rhs) <= 1e-10 * max(1.0, lhs.norm())

    def test_commutator_generator(self):
        h = rnd(3)
        h = h + dagger(h)

        def comm(a):
            return -1j * (h @ a - a @ h)

        s = Superoperator.from_function(comm, 3, (3, 3))
        a = rnd(3)
        t = 0.8
        u = mat_exp(-1j * t * h, hermitian=False)
        assert np.linalg.norm(superop_exp(s, t)(a) - u @ a @ dagger(u)) <= 1e-10

    def test_distance_zero_to_identity(self):
        z = Superoperator.zero(2, (2, 2))
        assert superop_distance(z, Superoperator.identity(2)) == pytest.approx(2.0)

    def test_triangle_inequality(self):
        p, q, r = (Superoperator(rnd(4), 2, (2, 2)) for _ in range(3))
        assert superop_distance(p, r) <= superop_distance(p, q) + superop_distance(q, r) + 1e-12

    def test_from_function_matches_entrywise(self):
        x, y = rnd(3), rnd(3)
        s = Superoperator.left_right(x, y)
        a = rnd(3)
        assert np.allclose(s(a), x @ a @ y)

    def test_nonendomorphic_exp_rejected(self):
        s = Superoperator.zero(2, (3, 3))
        with pytest.raises(DimensionError):
            s.expm(1.0)


class TestVecUnvec:
    def test_roundtrip_and_convention(self):
        a, b, c = rnd(3), rnd(3), rnd(3)
        assert np.allclose(unvec(kron(c.T, a) @ vec(b)), a @ b @ c)

    def test_dyad(self):
        u = np.array([1.0, 2.0j])
        v = np.array([1.0j, 1.0])
        assert np.allclose(dyad(u, v), np.outer(u, v.conj()))


class TestSubspaceSplit:
    def test_projections(self):
        q, _ = np.linalg.qr(rnd(4))
        s = SubspaceSplit(q, 1)
        p = s.front_projection()
        assert np.allclose(p @ p, p)
        assert np.allclose(p + s.back_projection(), np.eye(4))

    def test_nonorthonormal_rejected(self):
        with pytest.raises(ValueError):
            SubspaceSplit(rnd(3), 1)
