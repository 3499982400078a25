import numpy as np
import pytest

from orbiym import matalg as ma


def rng_for(seed=0):
    return np.random.default_rng(seed)


class TestBasis:
    @pytest.mark.parametrize("n", [2, 3])
    def test_orthonormal(self, n):
        basis = ma.su_basis(n)
        assert basis.shape == (n * n - 1, n, n)
        gram = np.einsum("aij,bji->ab", basis, ma.dagger(basis))
        assert np.abs(gram - np.eye(n * n - 1)).max() < 1e-14

    @pytest.mark.parametrize("n", [2, 3])
    def test_traceless_antihermitian(self, n):
        basis = ma.su_basis(n)
        assert np.abs(basis + ma.dagger(basis)).max() < 1e-15
        assert np.abs(np.trace(basis, axis1=-2, axis2=-1)).max() < 1e-15


class TestRandomAlgebra:
    def test_traceless_antihermitian(self):
        x = ma.random_algebra(rng_for(3), 3)
        assert np.abs(x + ma.dagger(x)).max() <= 1e-13
        assert abs(np.trace(x)) <= 1e-13

    def test_kinetic_mean(self):
        # 1e5 draws of (1/2) sum_a p_a^2; 3 generators at n=2 give mean 3/2
        rng = rng_for(11)
        x = ma.random_algebra(rng, 2, size=(100_000,))
        k = 0.5 * np.sum(np.abs(x) ** 2, axis=(-2, -1))
        err = k.std() / np.sqrt(len(k))
        assert abs(k.mean() - 1.5) < 3 * err

    def test_deterministic_given_seed(self):
        a = ma.random_algebra(rng_for(42), 3)
        b = ma.random_algebra(rng_for(42), 3)
        assert np.array_equal(a, b)

    def test_coefficients_round_trip(self):
        rng = rng_for(5)
        x = ma.random_algebra(rng, 3, size=(4,))
        coeffs = ma.algebra_coefficients(x)
        back = np.einsum("...a,aij->...ij", coeffs, ma.su_basis(3))
        assert np.abs(back - x).max() < 1e-13


class TestExpAlgebra:
    def test_exp_zero_is_identity(self):
        assert np.array_equal(ma.exp_algebra(np.zeros((2, 2))), np.eye(2))

    def test_diagonal_closed_form(self):
        theta = 0.7
        x = np.diag([1j * theta, -1j * theta])
        expected = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
        assert np.abs(ma.exp_algebra(x, 1.0) - expected).max() < 1e-14

    @pytest.mark.parametrize("n", [2, 3])
    def test_special_unitary_output(self, n):
        rng = rng_for(n)
        x = ma.random_algebra(rng, n, size=(20,))
        u = ma.exp_algebra(x, 1.7)
        assert np.abs(u @ ma.dagger(u) - np.eye(n)).max() <= 1e-12
        assert np.abs(ma.determinant(u) - 1).max() <= 1e-12

    def test_inverse_pairing(self):
        rng = rng_for(8)
        for n in (2, 3):
            x = ma.random_algebra(rng, n, size=(10,))
            prod = ma.exp_algebra(x, 0.9) @ ma.exp_algebra(x, -0.9)
            assert np.abs(prod - np.eye(n)).max() <= 1e-12

    def test_large_norm_still_unitary(self):
        # validated domain extends to Frobenius norm 10
        x = ma.su_basis(2)[0] * 9.9
        u = ma.exp_algebra(x, 1.0)
        assert np.abs(u @ ma.dagger(u) - np.eye(2)).max() <= 1e-12

    def test_norm_overflow_raises(self):
        x = ma.su_basis(2)[0] * 30.0
        with pytest.raises(ma.NormOverflowError):
            ma.exp_algebra(x, 1.0)
        with pytest.raises(ma.NormOverflowError):
            ma.exp_algebra(np.full((2, 2), np.nan), 1.0)


class TestPolarDecompose:
    def test_identity_case(self):
        c = 0.5
        z = np.sqrt(c) * np.eye(3, dtype=complex)
        w, u = ma.polar_decompose(z, c)
        assert np.abs(w - np.eye(3)).max() < 1e-12
        assert np.abs(u - np.eye(3)).max() < 1e-12

    def test_frozen_su2_link(self):
        rng = rng_for(2)
        c = 0.5
        u0 = ma.random_special_unitary(rng, 2)
        w, u = ma.polar_decompose(np.sqrt(c) * u0, c)
        assert np.abs(w - np.eye(2)).max() <= 1e-10
        assert np.abs(u - u0).max() <= 1e-10

    def test_random_3x3_invariants(self):
        rng = rng_for(9)
        c = 0.5
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        w, u = ma.polar_decompose(z, c)
        assert np.abs(np.sqrt(c) * w @ u - z).max() <= 1e-10 * np.abs(z).max()
        assert np.abs(w - ma.dagger(w)).max() <= 1e-12
        assert np.min(np.linalg.eigvalsh(w)) > 0
        assert np.abs(u @ ma.dagger(u) - np.eye(3)).max() <= 1e-12
        assert abs(abs(ma.determinant(u)) - 1) <= 1e-12

    def test_reconstruction_on_batch(self):
        rng = rng_for(10)
        z = rng.standard_normal((40, 2, 2)) + 1j * rng.standard_normal((40, 2, 2))
        w, u = ma.polar_decompose(z, 2.0)
        err = np.abs(np.sqrt(2.0) * w @ u - z).max()
        assert err <= 1e-10 * np.abs(z).max()

    def test_near_singular_raises(self):
        z = np.diag([1.0, 1e-12]).astype(complex)
        with pytest.raises(ma.DecompositionError) as excinfo:
            ma.polar_decompose(z, 1.0)
        assert excinfo.value.singular_value is not None


class TestAdjugate:
    def test_identity(self):
        assert np.abs(ma.adjugate(np.eye(3)) - np.eye(3)).max() == 0

    def test_2x2_closed_form(self):
        z = np.array([[1.0 + 2j, 3.0], [4.0, 5.0 - 1j]])
        expected = np.array([[5.0 - 1j, -3.0], [-4.0, 1.0 + 2j]])
        assert np.array_equal(ma.adjugate(z), expected)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_defining_identity_random(self, n):
        rng = rng_for(n)
        z = rng.standard_normal((1000, n, n)) + 1j * rng.standard_normal((1000, n, n))
        lhs = z @ ma.adjugate(z)
        det = ma.determinant(z)
        err = np.abs(lhs - det[..., None, None] * np.eye(n))
        assert (err.max(axis=(-2, -1)) <= 1e-12 * np.maximum(np.abs(det), 1)).all()

    def test_singular_input_ok(self):
        z = np.array([[1.0, 2.0], [2.0, 4.0]], dtype=complex)  # rank 1
        lhs = z @ ma.adjugate(z)
        assert np.abs(lhs).max() < 1e-14


class TestReunitarize:
    def test_exact_input_unchanged(self):
        u0 = ma.random_special_unitary(rng_for(1), 2)
        assert np.abs(ma.reunitarize(u0) - u0).max() <= 1e-14

    def test_scaling_perturbation(self):
        u0 = ma.random_special_unitary(rng_for(4), 3)
        out = ma.reunitarize((1 + 1e-8) * u0)
        assert np.abs(out - u0).max() <= 1e-10

    def test_idempotent(self):
        rng = rng_for(6)
        u0 = ma.random_special_unitary(rng, 3, size=(5,))
        drifted = u0 + 1e-8 * (
            rng.standard_normal(u0.shape) + 1j * rng.standard_normal(u0.shape)
        )
        once = ma.reunitarize(drifted)
        twice = ma.reunitarize(once)
        assert np.abs(twice - once).max() <= 1e-14

    def test_drift_error(self):
        with pytest.raises(ma.DriftError):
            ma.reunitarize(1.1 * np.eye(2, dtype=complex))


def test_random_special_unitary_invariants():
    u = ma.random_special_unitary(rng_for(12), 3, size=(50,))
    assert np.abs(u @ ma.dagger(u) - np.eye(3)).max() <= 1e-12
    assert np.abs(ma.determinant(u) - 1).max() <= 1e-12
