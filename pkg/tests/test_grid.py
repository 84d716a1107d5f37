import numpy as np
import pytest

from eqpnp.grid import (
    circular_convolve,
    dot,
    embed_kernel,
    fft2,
    frobenius,
    ifft2,
    norm2,
    psnr,
)


def dft2_direct(x):
    """O(n^2) reference DFT with unitary normalization."""
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            acc = 0.0 + 0.0j
            for i in range(h):
                for j in range(w):
                    acc += x[i, j] * np.exp(-2j * np.pi * (u * i / h + v * j / w))
            out[u, v] = acc
    return out / np.sqrt(h * w)


def conv2_direct(x, kernel):
    """O(n^2) spatial-domain circular convolution with a centered kernel."""
    h, w = x.shape
    kh, kw = kernel.shape
    cy, cx = kh // 2, kw // 2
    out = np.zeros_like(x)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for u in range(kh):
                for v in range(kw):
                    acc += kernel[u, v] * x[(i - (u - cy)) % h, (j - (v - cx)) % w]
            out[i, j] = acc
    return out


class TestFft:
    def test_zeros(self):
        assert np.all(fft2(np.zeros((4, 4))) == 0)

    def test_constant_dc(self):
        c = 0.7
        X = fft2(np.full((4, 4), c))
        assert X[0, 0] == pytest.approx(c * 4.0, abs=1e-12)  # c * sqrt(16)
        X[0, 0] = 0
        assert np.max(np.abs(X)) < 1e-12

    def test_matches_direct_dft(self, rng):
        x = rng.normal(size=(8, 8))
        assert np.max(np.abs(fft2(x) - dft2_direct(x))) < 1e-10

    @pytest.mark.parametrize("shape", [(8, 8), (16, 32), (64, 64)])
    def test_parseval(self, rng, shape):
        x = rng.normal(size=shape)
        assert abs(norm2(fft2(x)) - norm2(x)) < 1e-12

    def test_roundtrip(self, rng):
        x = rng.normal(size=(8, 8))
        assert np.max(np.abs(ifft2(fft2(x)) - x)) < 1e-12

    def test_impulse_roundtrip(self):
        x = np.zeros((4, 4))
        x[0, 0] = 1.0
        assert np.max(np.abs(ifft2(fft2(x)) - x)) < 1e-12

    def test_dc_only_spectrum(self):
        X = np.zeros((4, 4), dtype=complex)
        X[0, 0] = 4.0  # sqrt(16)
        assert np.max(np.abs(ifft2(X) - 1.0)) < 1e-12

    def test_non_hermitian_flagged(self):
        X = np.zeros((4, 4), dtype=complex)
        X[1, 1] = 1.0  # no conjugate partner
        with pytest.raises(AssertionError):
            ifft2(X)


class TestCircularConvolve:
    def test_delta_identity(self, rng):
        x = rng.normal(size=(5, 7))
        delta = np.zeros((3, 3))
        delta[1, 1] = 1.0
        assert np.max(np.abs(circular_convolve(x, delta) - x)) < 1e-12

    def test_shift_kernel_on_row(self):
        x = np.array([[1.0, 2.0, 3.0, 4.0]])
        k = np.zeros((1, 3))
        k[0, 2] = 1.0  # offset +1 relative to center
        out = circular_convolve(x, k)
        assert np.allclose(out, [[4.0, 1.0, 2.0, 3.0]], atol=1e-12)

    def test_box_on_impulse_vs_oracle(self):
        x = np.zeros((4, 4))
        x[1, 2] = 1.0
        box = np.ones((3, 3)) / 9.0
        out = circular_convolve(x, box)
        assert np.max(np.abs(out - conv2_direct(x, box))) < 1e-12
        # impulse spreads 1/9 over the circular 3x3 neighborhood
        assert out[1, 2] == pytest.approx(1.0 / 9.0)
        assert out.sum() == pytest.approx(1.0)

    def test_random_vs_oracle(self, rng):
        x = rng.normal(size=(8, 8))
        k = rng.normal(size=(3, 3))
        assert np.max(np.abs(circular_convolve(x, k) - conv2_direct(x, k))) < 1e-10

    def test_convolution_theorem_identity(self, rng):
        x = rng.normal(size=(8, 8))
        k = rng.normal(size=(3, 3))
        h, w = x.shape
        via_unitary = ifft2(fft2(x) * fft2(embed_kernel(k, h, w))) * np.sqrt(h * w)
        assert np.max(np.abs(circular_convolve(x, k) - via_unitary)) < 1e-10

    def test_shift_equivariance(self, rng):
        x = rng.normal(size=(8, 8))
        k = rng.normal(size=(3, 3))
        shifted = np.roll(x, (2, 5), axis=(0, 1))
        assert np.allclose(
            circular_convolve(shifted, k),
            np.roll(circular_convolve(x, k), (2, 5), axis=(0, 1)),
            atol=1e-12,
        )

    def test_kernel_too_large(self):
        with pytest.raises(ValueError):
            circular_convolve(np.zeros((2, 2)), np.ones((3, 3)))


class TestPsnr:
    def test_identical_is_infinite(self, rng):
        x = rng.normal(size=(4, 4))
        assert psnr(x, x) == float("inf")

    def test_unit_error(self):
        assert psnr(np.zeros((4, 4)), np.ones((4, 4)), peak=1.0) == pytest.approx(0.0)

    def test_constant_offset(self):
        ref = np.full((4, 4), 0.3)
        assert psnr(ref + 0.1, ref, peak=1.0) == pytest.approx(20.0)

    def test_sign_symmetry(self, rng):
        ref = rng.uniform(size=(6, 6))
        e = rng.normal(size=(6, 6))
        assert psnr(ref + e, ref) == pytest.approx(psnr(ref - e, ref), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((2, 2)), np.zeros((3, 3)))


class TestNorms:
    def test_dot(self):
        assert dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    def test_norm2_is_sqrt_dot(self, rng):
        x = rng.normal(size=(5, 5))
        assert norm2(x) == pytest.approx(np.sqrt(dot(x, x)), rel=1e-14)

    def test_frobenius_perturbation_matrix(self):
        # a reference 2x2 perturbation matrix and its flip average
        P = np.array([[-0.228, -0.023], [0.066, 0.1]])
        PG = np.array([[-0.064, 0.022], [0.022, -0.064]])
        assert abs(frobenius(P) - 0.26) < 0.005
        assert abs(frobenius(PG) - 0.10) < 0.005

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dot(np.zeros(3), np.zeros(4))
