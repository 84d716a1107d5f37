import numpy as np
import pytest

from eqpnp.grid import circular_convolve, dot, norm2
from eqpnp.groups import GroupElement, apply
from eqpnp.operators import (
    BlurOperator,
    DenseOperator,
    DiagonalOperator,
    IdentityOperator,
    InpaintingOperator,
    MriOperator,
    SuperResolutionOperator,
    full_mri_mask,
    gram_matrix,
    make_gaussian_kernel,
    make_inpainting_mask,
    make_line_kernel,
    make_mri_mask,
    simulate,
)
from eqpnp.rng import SeededRng


def all_operators(rng):
    shape = (8, 8)
    kernel = make_gaussian_kernel(1.0, 5)
    yield IdentityOperator(shape)
    yield DiagonalOperator(rng.normal(size=shape))
    yield DenseOperator(rng.normal(size=(10, 64)), shape)
    yield BlurOperator(kernel, shape)
    yield InpaintingOperator(make_inpainting_mask(8, 8, 0.6, SeededRng(3)))
    yield MriOperator(make_mri_mask(8, 8, 4, 0.1, SeededRng(4)))
    yield SuperResolutionOperator(kernel, 2, shape)


def real_inner(a, b):
    return float(np.real(np.vdot(a, b)))


class TestAdjointIdentity:
    def test_all_operators_twenty_trials(self, rng):
        for A in all_operators(rng):
            for _ in range(20):
                x = rng.normal(size=A.in_shape)
                y = rng.normal(size=A.out_shape)
                if A.out_dtype == np.complex128:
                    y = y + 1j * rng.normal(size=A.out_shape)
                lhs = real_inner(A.apply(x), y)
                rhs = dot(x, A.adjoint(y))
                assert abs(lhs - rhs) < 1e-10 * (1.0 + abs(lhs)), type(A).__name__


class TestBlur:
    def test_delta_kernel_is_identity(self, rng):
        delta = np.zeros((3, 3))
        delta[1, 1] = 1.0
        A = BlurOperator(delta, (6, 6))
        x = rng.normal(size=(6, 6))
        assert np.max(np.abs(A.apply(x) - x)) < 1e-12

    def test_matches_circular_convolve(self, rng):
        k = rng.normal(size=(3, 3))
        A = BlurOperator(k, (8, 8))
        x = rng.normal(size=(8, 8))
        assert np.allclose(A.apply(x), circular_convolve(x, k), atol=1e-12)

    def test_commutes_with_shifts(self, rng):
        A = BlurOperator(make_gaussian_kernel(1.0, 5), (8, 8))
        x = rng.normal(size=(8, 8))
        for g in [GroupElement(dy=1, dx=0), GroupElement(dy=3, dx=5)]:
            assert np.allclose(A.apply(apply(g, x)), apply(g, A.apply(x)), atol=1e-12)


class TestInpainting:
    def test_adjoint_apply_is_masking(self, rng):
        mask = make_inpainting_mask(8, 8, 0.5, SeededRng(0))
        A = InpaintingOperator(mask)
        x = rng.normal(size=(8, 8))
        assert np.array_equal(A.adjoint(A.apply(x)), mask * x)

    def test_gram_idempotent(self):
        mask = make_inpainting_mask(4, 4, 0.5, SeededRng(1))
        A = InpaintingOperator(mask)
        G = gram_matrix(A)
        assert np.allclose(G @ G, G, atol=1e-12)
        assert np.array_equal(np.diag(G), mask.ravel())

    def test_partial_mask_breaks_shift_equivariance(self, rng):
        mask = make_inpainting_mask(8, 8, 0.5, SeededRng(2))
        A = InpaintingOperator(mask)
        x = rng.normal(size=(8, 8))
        g = GroupElement(dy=1, dx=2)
        assert norm2(A.apply(apply(g, x)) - apply(g, A.apply(x))) > 1e-3

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            InpaintingOperator(np.full((4, 4), 0.5))


class TestMri:
    def test_full_mask_isometry(self, rng):
        A = MriOperator(full_mri_mask(8, 8))
        x = rng.normal(size=(8, 8))
        assert abs(norm2(A.apply(x)) - norm2(x)) < 1e-10
        assert np.max(np.abs(A.adjoint(A.apply(x)) - x)) < 1e-10

    def test_partial_mask_breaks_shift_equivariance(self, rng):
        A = MriOperator(make_mri_mask(8, 8, 4, 0.1, SeededRng(5)))
        x = rng.normal(size=(8, 8))
        g = GroupElement(dy=0, dx=3)
        assert norm2(A.apply(apply(g, x)) - apply(g, A.apply(x))) > 1e-3


class TestSuperResolution:
    def test_shapes(self):
        A = SuperResolutionOperator(make_gaussian_kernel(1.0, 3), 2, (8, 8))
        assert A.out_shape == (4, 4)
        assert A.apply(np.zeros((8, 8))).shape == (4, 4)
        assert A.adjoint(np.zeros((4, 4))).shape == (8, 8)

    def test_indivisible_shape(self):
        with pytest.raises(ValueError):
            SuperResolutionOperator(make_gaussian_kernel(1.0, 3), 3, (8, 8))


class TestGramMatrix:
    def test_identity(self):
        assert np.allclose(gram_matrix(IdentityOperator((2, 2))), np.eye(4), atol=1e-14)

    def test_diagonal_squares(self):
        A = DiagonalOperator(np.array([[2.0, 1.0]]))
        assert np.allclose(gram_matrix(A), np.diag([4.0, 1.0]), atol=1e-14)

    def test_two_assembly_paths_agree(self, rng):
        for A in all_operators(rng):
            G = gram_matrix(A)
            # independent path: columns are adjoint(apply(e_j))
            n = A.in_shape[0] * A.in_shape[1]
            G2 = np.empty((n, n))
            basis = np.zeros(A.in_shape)
            for j in range(n):
                basis.flat[j] = 1.0
                G2[:, j] = A.adjoint(A.apply(basis)).ravel()
                basis.flat[j] = 0.0
            assert np.max(np.abs(G - G2)) < 1e-12, type(A).__name__
            assert np.max(np.abs(G - G.T)) < 1e-10


class TestSimulate:
    def test_zero_noise_exact(self, rng):
        A = IdentityOperator((4, 4))
        x = rng.normal(size=(4, 4))
        assert np.array_equal(simulate(A, x, 0.0, SeededRng(0)), x)

    def test_reproducible(self, rng):
        A = IdentityOperator((4, 4))
        x = rng.normal(size=(4, 4))
        assert np.array_equal(
            simulate(A, x, 0.1, SeededRng(8)), simulate(A, x, 0.1, SeededRng(8))
        )

    def test_noise_std_within_two_percent(self):
        A = IdentityOperator((400, 250))  # 1e5 pixels
        x = np.zeros((400, 250))
        y = simulate(A, x, 0.05, SeededRng(9))
        assert abs(y.std() - 0.05) < 0.02 * 0.05

    def test_complex_noise_parts(self):
        A = MriOperator(full_mri_mask(128, 128))
        x = np.zeros((128, 128))
        y = simulate(A, x, 0.05, SeededRng(10))
        assert abs(y.real.std() - 0.05) < 0.05 * 0.05
        assert abs(y.imag.std() - 0.05) < 0.05 * 0.05

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError):
            simulate(IdentityOperator((4, 4)), np.zeros((4, 4)), -0.1, SeededRng(0))


class TestKernels:
    def test_gaussian_normalized_and_symmetric(self):
        k = make_gaussian_kernel(1.0, 7)
        assert k.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(k, k[::-1, ::-1], atol=1e-15)
        assert np.allclose(k, k.T, atol=1e-15)

    def test_gaussian_center_value_closed_form(self):
        k = make_gaussian_kernel(1.0, 7)
        # direct evaluation of the normalized discrete Gaussian
        r = np.arange(7) - 3
        g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / 2.0)
        assert k[3, 3] == pytest.approx(1.0 / g.sum(), rel=1e-12)

    def test_tiny_std_is_delta(self):
        k = make_gaussian_kernel(1e-6, 5)
        delta = np.zeros((5, 5))
        delta[2, 2] = 1.0
        assert np.max(np.abs(k - delta)) < 1e-9

    def test_even_side_rejected(self):
        with pytest.raises(ValueError):
            make_gaussian_kernel(1.0, 6)

    def test_line_kernel_diagonal(self):
        k = make_line_kernel(9, 45)
        assert k.shape == (9, 9)
        assert k.sum() == pytest.approx(1.0)
        assert np.count_nonzero(k) == 9
        assert k[4, 4] == pytest.approx(1.0 / 9.0)
        assert k[3, 5] == pytest.approx(1.0 / 9.0)  # anti-diagonal direction

    def test_line_kernel_bad_angle(self):
        with pytest.raises(ValueError):
            make_line_kernel(5, 30)


class TestMriMask:
    def test_column_counts_example(self):
        mask = make_mri_mask(64, 64, 4, 0.08, SeededRng(11))
        cols = mask[0]
        assert np.array_equal(mask, np.tile(cols, (64, 1)))
        assert int(cols.sum()) == 16  # 64 / 4
        # ceil(0.08 * 64) = 6 low-frequency columns wrapping around index 0
        band = [(c - 3) % 64 for c in range(6)]
        assert np.all(cols[band] == 1.0)
        assert cols[0] == 1.0  # the zero-frequency column is always sampled

    def test_deterministic(self):
        a = make_mri_mask(16, 32, 4, 0.1, SeededRng(12))
        b = make_mri_mask(16, 32, 4, 0.1, SeededRng(12))
        assert np.array_equal(a, b)

    def test_infeasible_center(self):
        with pytest.raises(ValueError, match="budget"):
            make_mri_mask(16, 16, 8, 0.9, SeededRng(0))

    def test_full_mask_gram_is_identity(self):
        A = MriOperator(full_mri_mask(4, 4))
        assert np.allclose(gram_matrix(A), np.eye(16), atol=1e-12)
