"""Linear forward operators with exact adjoints, plus measurement simulation.

Every operator maps an image of shape ``in_shape`` to a measurement array of
shape ``out_shape`` (real, or complex for the Fourier-domain operator) and
satisfies the adjoint identity ``<A x, y> == <x, A^T y>`` for the real inner
product.  Operators are immutable after construction and their methods are
pure, so they are safe to share across threads.
"""

import numpy as np

from .grid import as_image, circular_convolve, embed_kernel

__all__ = [
    "LinearOperator",
    "IdentityOperator",
    "DiagonalOperator",
    "DenseOperator",
    "BlurOperator",
    "InpaintingOperator",
    "MriOperator",
    "SuperResolutionOperator",
    "gram_matrix",
    "simulate",
    "make_gaussian_kernel",
    "make_line_kernel",
    "make_mri_mask",
    "full_mri_mask",
    "make_inpainting_mask",
]

_GRAM_SIZE_CAP = 4096


class LinearOperator:
    """Interface: ``apply`` / ``adjoint`` plus shape descriptors."""

    in_shape: tuple
    out_shape: tuple
    out_dtype = np.float64

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_in(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != self.in_shape:
            raise ValueError(f"expected input shape {self.in_shape}, got {x.shape}")
        return x

    def _check_out(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        if y.shape != self.out_shape:
            raise ValueError(f"expected measurement shape {self.out_shape}, got {y.shape}")
        return y


class IdentityOperator(LinearOperator):
    def __init__(self, shape: tuple):
        self.in_shape = self.out_shape = tuple(shape)

    def apply(self, x):
        return self._check_in(x).astype(np.float64).copy()

    def adjoint(self, y):
        return self._check_out(y).astype(np.float64).copy()


class DiagonalOperator(LinearOperator):
    """Pointwise multiplication by a fixed real array."""

    def __init__(self, diag: np.ndarray):
        self.diag = as_image(diag)
        self.in_shape = self.out_shape = self.diag.shape

    def apply(self, x):
        return self.diag * self._check_in(x)

    def adjoint(self, y):
        return self.diag * self._check_out(y)


class DenseOperator(LinearOperator):
    """Small dense matrix acting on flattened images; measurements are 1D."""

    def __init__(self, matrix: np.ndarray, in_shape: tuple):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be 2D")
        self.in_shape = tuple(in_shape)
        n = self.in_shape[0] * self.in_shape[1]
        if self.matrix.shape[1] != n:
            raise ValueError(
                f"matrix has {self.matrix.shape[1]} columns, image has {n} pixels"
            )
        self.out_shape = (self.matrix.shape[0],)

    def apply(self, x):
        return self.matrix @ self._check_in(x).ravel()

    def adjoint(self, y):
        return (self.matrix.T @ self._check_out(y)).reshape(self.in_shape)


class BlurOperator(LinearOperator):
    """Circular convolution with a small kernel (periodic boundary)."""

    def __init__(self, kernel: np.ndarray, shape: tuple):
        self.kernel = as_image(kernel)
        self.in_shape = self.out_shape = tuple(shape)
        self._khat = np.fft.fft2(embed_kernel(self.kernel, *self.in_shape))

    def apply(self, x):
        x = self._check_in(x)
        return np.ascontiguousarray(np.fft.ifft2(np.fft.fft2(x) * self._khat).real)

    def adjoint(self, y):
        y = self._check_out(y)
        return np.ascontiguousarray(
            np.fft.ifft2(np.fft.fft2(y) * np.conj(self._khat)).real
        )


class InpaintingOperator(LinearOperator):
    """Binary pixel mask, kept at full image size with zeroed entries.

    The measurement has the same shape as the image, so the data-fidelity
    value matches the compacted representation and ``A^T A == diag(mask)``.
    """

    def __init__(self, mask: np.ndarray):
        mask = as_image(mask)
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ValueError("inpainting mask must be binary")
        self.mask = mask
        self.keep_rate = float(mask.mean())
        self.in_shape = self.out_shape = mask.shape

    def apply(self, x):
        return self.mask * self._check_in(x)

    def adjoint(self, y):
        return self.mask * self._check_out(y)


class MriOperator(LinearOperator):
    """Masked unitary 2D Fourier sampling: ``y = mask * fft2(x)``.

    Measurements are complex; the adjoint takes the real part of the inverse
    transform (the image domain is real), which is the exact adjoint for the
    real inner product.  With a full mask the operator is an isometry.
    """

    out_dtype = np.complex128

    def __init__(self, fourier_mask: np.ndarray):
        mask = as_image(fourier_mask)
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ValueError("Fourier mask must be binary")
        self.mask = mask
        sampled = mask.sum()
        self.acceleration = float(mask.size / sampled) if sampled else float("inf")
        self.in_shape = self.out_shape = mask.shape

    def apply(self, x):
        x = self._check_in(x)
        return self.mask * np.fft.fft2(x, norm="ortho")

    def adjoint(self, y):
        y = self._check_out(y)
        return np.ascontiguousarray(
            np.fft.ifft2(self.mask * y, norm="ortho").real
        )


class SuperResolutionOperator(LinearOperator):
    """Blur followed by ``factor``-fold subsampling on both axes."""

    def __init__(self, kernel: np.ndarray, factor: int, shape: tuple):
        if factor < 1:
            raise ValueError("factor must be a positive integer")
        h, w = shape
        if h % factor or w % factor:
            raise ValueError(f"shape {shape} not divisible by factor {factor}")
        self.factor = int(factor)
        self.blur = BlurOperator(kernel, shape)
        self.in_shape = tuple(shape)
        self.out_shape = (h // factor, w // factor)

    def apply(self, x):
        x = self._check_in(x)
        return self.blur.apply(x)[:: self.factor, :: self.factor].copy()

    def adjoint(self, y):
        y = self._check_out(y)
        up = np.zeros(self.in_shape)
        up[:: self.factor, :: self.factor] = y
        return self.blur.adjoint(up)


def gram_matrix(A: LinearOperator) -> np.ndarray:
    """Dense ``A^T A`` with entry ``(i, j) = <A e_j, A e_i>``.

    Assembled by applying ``A`` to the canonical basis images; symmetric and
    positive semidefinite up to rounding.
    """
    h, w = A.in_shape
    n = h * w
    if n > _GRAM_SIZE_CAP:
        raise ValueError(f"grid size {n} exceeds gram-matrix cap {_GRAM_SIZE_CAP}")
    cols = np.empty((n, int(np.prod(A.out_shape))), dtype=A.out_dtype)
    basis = np.zeros((h, w))
    for j in range(n):
        basis.flat[j] = 1.0
        cols[j] = A.apply(basis).ravel()
        basis.flat[j] = 0.0
    return np.real(np.conj(cols) @ cols.T)


def simulate(A: LinearOperator, x_true: np.ndarray, noise_std: float, rng) -> np.ndarray:
    """Simulate ``y = A x + noise``.

    Gaussian noise with standard deviation ``noise_std`` is added to every
    real measurement entry; for complex measurements the real and imaginary
    parts independently receive noise of that standard deviation.
    ``noise_std = 0`` returns exact measurements.
    """
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    y = A.apply(x_true)
    if noise_std == 0.0:
        return y
    if np.iscomplexobj(y):
        noise = rng.normal(0.0, noise_std, y.shape) + 1j * rng.normal(
            0.0, noise_std, y.shape
        )
    else:
        noise = rng.normal(0.0, noise_std, y.shape)
    return y + noise


def make_gaussian_kernel(std: float, side: int) -> np.ndarray:
    """Normalized isotropic Gaussian kernel on an odd-sided grid."""
    if side % 2 == 0:
        raise ValueError("kernel side must be odd")
    if std <= 0:
        raise ValueError("std must be positive")
    c = side // 2
    r = np.arange(side) - c
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * std * std))
    return g / g.sum()


def make_line_kernel(length: int, angle: int) -> np.ndarray:
    """Normalized 1-pixel-wide line segment; ``angle`` in {0, 45, 90, 135} degrees.

    A simple synthetic stand-in for a motion-blur point spread function; the
    default experiment recipes use a 9-pixel diagonal (45 degrees).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if angle not in (0, 45, 90, 135):
        raise ValueError("angle must be one of 0, 45, 90, 135")
    side = length if length % 2 == 1 else length + 1
    k = np.zeros((side, side))
    c = side // 2
    offsets = range(-(length // 2), length - length // 2)
    for t in offsets:
        if angle == 0:
            k[c, c + t] = 1.0
        elif angle == 90:
            k[c + t, c] = 1.0
        elif angle == 45:
            k[c - t, c + t] = 1.0
        else:
            k[c + t, c + t] = 1.0
    return k / k.sum()


def make_mri_mask(height: int, width: int, acceleration: int, center_fraction: float, rng) -> np.ndarray:
    """Cartesian column-line Fourier mask in the unshifted FFT layout.

    Keeps a fully sampled band of ``ceil(center_fraction * width)`` columns
    around the zero-frequency column (index 0, so the band wraps around the
    array edge) plus uniformly random columns, ``width // acceleration``
    sampled columns in total.
    """
    if acceleration not in (4, 8):
        raise ValueError("acceleration must be 4 or 8")
    if not 0.0 < center_fraction < 1.0:
        raise ValueError("center_fraction must be in (0, 1)")
    total = width // acceleration
    n_center = int(np.ceil(center_fraction * width))
    if n_center > total:
        raise ValueError(
            f"center band ({n_center} columns) exceeds budget ({total} columns)"
        )
    center = [(c - n_center // 2) % width for c in range(n_center)]
    remaining = [c for c in range(width) if c not in center]
    extra = []
    for _ in range(total - n_center):
        pick = int(rng.integers(len(remaining)))
        extra.append(remaining.pop(pick))
    mask = np.zeros((height, width))
    mask[:, center + extra] = 1.0
    return mask


def full_mri_mask(height: int, width: int) -> np.ndarray:
    """Fully sampled mask (test helper; the acceleration-1 limit)."""
    return np.ones((height, width))


def make_inpainting_mask(height: int, width: int, keep_rate: float, rng) -> np.ndarray:
    """Bernoulli pixel mask keeping each pixel with probability ``keep_rate``."""
    if not 0.0 <= keep_rate <= 1.0:
        raise ValueError("keep_rate must be in [0, 1]")
    return (rng.uniform(size=(height, width)) < keep_rate).astype(np.float64)
