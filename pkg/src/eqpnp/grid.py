"""Core numeric carriers: 2D images, unitary FFTs, circular convolution, norms, PSNR.

Images are plain ``numpy`` float64 arrays of shape ``(height, width)``.
Values nominally live in ``[0, 1]`` but are never clamped; iterates of the
solvers are free to leave that range.
"""

import numpy as np

__all__ = [
    "as_image",
    "fft2",
    "ifft2",
    "embed_kernel",
    "circular_convolve",
    "psnr",
    "dot",
    "norm2",
    "frobenius",
]


def as_image(x) -> np.ndarray:
    """Coerce ``x`` to a 2D float64 array and check it is finite."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def fft2(x: np.ndarray) -> np.ndarray:
    """Unitary 2D FFT (scale 1/sqrt(H*W) in both directions).

    With this normalization ``norm2(fft2(x)) == norm2(x)`` and the fully
    sampled Fourier measurement operator is an isometry.
    """
    return np.fft.fft2(np.asarray(x), norm="ortho")


def ifft2(X: np.ndarray) -> np.ndarray:
    """Inverse unitary 2D FFT, returning the real part.

    Intended for spectra of real images (conjugate-symmetric input).  A debug
    assertion flags non-Hermitian input; it is stripped under ``python -O``.
    Callers that deliberately feed non-Hermitian spectra (e.g. the adjoint of
    a masked Fourier operator) use ``numpy.fft`` directly instead.
    """
    out = np.fft.ifft2(np.asarray(X), norm="ortho")
    assert np.max(np.abs(out.imag)) < 1e-9, "ifft2: input spectrum is not Hermitian"
    return np.ascontiguousarray(out.real)


def embed_kernel(kernel: np.ndarray, height: int, width: int) -> np.ndarray:
    """Embed a small convolution kernel on a ``height x width`` torus.

    The kernel center ``(kh // 2, kw // 2)`` maps to pixel ``(0, 0)``;
    negative offsets wrap circularly.  With this embedding a delta kernel is
    the exact identity for :func:`circular_convolve`.
    """
    kernel = as_image(kernel)
    kh, kw = kernel.shape
    if kh > height or kw > width:
        raise ValueError(f"kernel {kernel.shape} larger than image ({height}, {width})")
    out = np.zeros((height, width))
    out[:kh, :kw] = kernel
    return np.roll(out, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def circular_convolve(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Circular (periodic) convolution of an image with a small kernel.

    Computed in the Fourier domain; equal to
    ``ifft2(fft2(x) * fft2(embed_kernel(kernel))) * sqrt(H*W)`` under the
    unitary convention, and exactly shift-equivariant.
    """
    x = as_image(x)
    h, w = x.shape
    khat = np.fft.fft2(embed_kernel(kernel, h, w))
    return np.ascontiguousarray(np.fft.ifft2(np.fft.fft2(x) * khat).real)


def psnr(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB: ``10*log10(peak**2 / MSE)``.

    Returns ``math.inf`` when the images coincide (MSE = 0).
    """
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = np.mean((x - ref) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def dot(x: np.ndarray, y: np.ndarray) -> float:
    """Euclidean inner product of two equally shaped real arrays."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.vdot(x, y).real)


def norm2(x: np.ndarray) -> float:
    """Euclidean norm; works for real and complex arrays."""
    return float(np.linalg.norm(np.asarray(x).ravel()))


def frobenius(M: np.ndarray) -> float:
    """Frobenius norm of a matrix."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    return float(np.linalg.norm(M))
