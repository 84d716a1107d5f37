"""Denoisers and group-equivariant wrappers.

Every denoiser implements ``denoise(x, sigma)`` where ``sigma`` is a noise
level in image units.  Proximal-type denoisers map ``sigma`` to a threshold;
fixed linear and convolutional denoisers ignore it, so all solver code can
use one interface.

Two wrappers turn any denoiser into a group-equivariant one: exact averaging
over a finite group of transforms (cost ``|G|`` base evaluations per call),
and a one-sample Monte-Carlo version that applies a random transform to the
input and its inverse to the output.
"""

import struct
from pathlib import Path

import numpy as np

from .grid import as_image
from .groups import Group, apply, inverse, matrix_of, sample

__all__ = [
    "soft_threshold",
    "haar2",
    "ihaar2",
    "Denoiser",
    "LinearMatrixDenoiser",
    "CirculantDenoiser",
    "HaarSoftThresholdDenoiser",
    "PerturbedProxDenoiser",
    "TinyConvDenoiser",
    "ReynoldsEquivariantDenoiser",
    "MonteCarloEquivariantDenoiser",
    "build_equivariant_B1",
    "save_tiny_conv_weights",
    "load_tiny_conv_weights",
    "make_random_tiny_conv",
    "default_tiny_conv",
]

_REYNOLDS_GROUP_CAP = 256
_SQRT2 = np.sqrt(2.0)


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    """Componentwise ``sign(z) * max(|z| - t, 0)``; the prox of ``t * ||.||_1``."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _haar_axis(x: np.ndarray, axis: int) -> np.ndarray:
    ev = np.take(x, np.arange(0, x.shape[axis], 2), axis=axis)
    od = np.take(x, np.arange(1, x.shape[axis], 2), axis=axis)
    return np.concatenate([(ev + od) / _SQRT2, (ev - od) / _SQRT2], axis=axis)


def _ihaar_axis(c: np.ndarray, axis: int) -> np.ndarray:
    half = c.shape[axis] // 2
    a = np.take(c, np.arange(half), axis=axis)
    d = np.take(c, np.arange(half, c.shape[axis]), axis=axis)
    ev = (a + d) / _SQRT2
    od = (a - d) / _SQRT2
    out = np.empty_like(c)
    sl_ev = [slice(None)] * c.ndim
    sl_od = [slice(None)] * c.ndim
    sl_ev[axis] = slice(0, None, 2)
    sl_od[axis] = slice(1, None, 2)
    out[tuple(sl_ev)] = ev
    out[tuple(sl_od)] = od
    return out


def haar2(x: np.ndarray, levels: int) -> np.ndarray:
    """Orthogonal (decimated) 2D Haar transform, Mallat layout.

    Both image sides must be divisible by ``2**levels``.
    """
    x = as_image(x)
    h, w = x.shape
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if h % (1 << levels) or w % (1 << levels):
        raise ValueError(f"shape {x.shape} not divisible by 2**{levels}")
    c = x.copy()
    for lev in range(levels):
        hh, ww = h >> lev, w >> lev
        sub = c[:hh, :ww]
        sub = _haar_axis(sub, axis=1)
        sub = _haar_axis(sub, axis=0)
        c[:hh, :ww] = sub
    return c


def ihaar2(c: np.ndarray, levels: int) -> np.ndarray:
    """Inverse of :func:`haar2`."""
    c = as_image(c)
    h, w = c.shape
    out = c.copy()
    for lev in reversed(range(levels)):
        hh, ww = h >> lev, w >> lev
        sub = out[:hh, :ww]
        sub = _ihaar_axis(sub, axis=0)
        sub = _ihaar_axis(sub, axis=1)
        out[:hh, :ww] = sub
    return out


class Denoiser:
    """Interface: ``denoise(x, sigma)`` returning an image of the same shape.

    Implementations are deterministic given their inputs; the only stochastic
    denoiser is the Monte-Carlo wrapper, whose randomness lives in the stream
    it owns.
    """

    def denoise(self, x: np.ndarray, sigma: float) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def _check(x: np.ndarray, sigma: float) -> np.ndarray:
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"expected a 2D image, got shape {x.shape}")
        return x


class LinearMatrixDenoiser(Denoiser):
    """Fixed linear map ``x -> M @ vec(x)``; ignores ``sigma``."""

    def __init__(self, matrix: np.ndarray):
        M = np.asarray(matrix, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        self.matrix = M

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        if x.size != self.matrix.shape[0]:
            raise ValueError(
                f"matrix is {self.matrix.shape[0]}x{self.matrix.shape[0]}, image has {x.size} pixels"
            )
        return (self.matrix @ x.ravel()).reshape(x.shape)


class CirculantDenoiser(Denoiser):
    """Circular convolution with a full-size spatial filter (origin at (0, 0)).

    ``symmetrize=True`` replaces the filter by its even part
    ``d[i, j] <- mean of d[+-i, +-j]``, making the frequency response real and
    the Jacobian symmetric.
    """

    def __init__(self, spatial_filter: np.ndarray, symmetrize: bool = False):
        d = as_image(spatial_filter)
        if symmetrize:
            d = _even_part(d)
        self.spatial_filter = d
        self.even_real = bool(symmetrize)
        self.freq = np.fft.fft2(d)

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        if x.shape != self.spatial_filter.shape:
            raise ValueError(
                f"filter shape {self.spatial_filter.shape} does not match image {x.shape}"
            )
        return np.ascontiguousarray(np.fft.ifft2(np.fft.fft2(x) * self.freq).real)


def _even_part(d: np.ndarray) -> np.ndarray:
    # Pairwise symmetrization; each step is an exact two-term average, so the
    # result is bitwise even: d[i, j] == d[-i, -j].
    s = 0.5 * (d + np.roll(d[::-1, :], 1, axis=0))
    return 0.5 * (s + np.roll(s[:, ::-1], 1, axis=1))


class HaarSoftThresholdDenoiser(Denoiser):
    """Soft thresholding of orthogonal Haar coefficients.

    Exactly the proximal operator of ``t * ||Psi . ||_1`` with ``t = scale *
    sigma`` and ``Psi`` the orthogonal Haar transform (all coefficients are
    thresholded, including the approximation band), hence nonexpansive.
    """

    def __init__(self, levels: int = 2, scale: float = 1.0):
        if levels < 1:
            raise ValueError("levels must be >= 1")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.levels = int(levels)
        self.scale = float(scale)

    def threshold(self, sigma: float) -> float:
        return self.scale * sigma

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        t = self.threshold(sigma)
        if t == 0.0:
            return x.copy()
        return ihaar2(soft_threshold(haar2(x, self.levels), t), self.levels)


class PerturbedProxDenoiser(Denoiser):
    """``x -> (B1^T + P) soft_t(B1 x)``: a perturbed proximal operator.

    ``B1`` must be unitary; with ``P = 0`` this is the exact prox of
    ``t * ||B1 . ||_1``.  The fixed threshold ``t`` makes the denoiser
    independent of ``sigma``.
    """

    def __init__(self, B1: np.ndarray, P: np.ndarray, threshold: float):
        B1 = np.asarray(B1, dtype=np.float64)
        P = np.asarray(P, dtype=np.float64)
        if B1.shape != P.shape or B1.ndim != 2 or B1.shape[0] != B1.shape[1]:
            raise ValueError("B1 and P must be square matrices of equal size")
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        ortho_err = np.linalg.norm(B1.T @ B1 - np.eye(B1.shape[0]))
        if ortho_err > 1e-10:
            raise ValueError(f"B1 is not unitary (||B1^T B1 - I||_F = {ortho_err:.2e})")
        self.B1 = B1
        self.P = P
        self.B2 = B1.T + P
        self.threshold = float(threshold)

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        if x.size != self.B1.shape[0]:
            raise ValueError(
                f"B1 is {self.B1.shape[0]}x{self.B1.shape[0]}, image has {x.size} pixels"
            )
        z = soft_threshold(self.B1 @ x.ravel(), self.threshold)
        return (self.B2 @ z).reshape(x.shape)


# --- small convolutional denoiser ------------------------------------------

_TCW_MAGIC = b"EQPNPTCW"
_TCW_HEADER = struct.Struct("<8sII")


def _conv_circ_small(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    # Circular convolution with a small odd-sided centered kernel via wrap
    # padding; matches grid.circular_convolve on the same inputs.
    kh, kw = k.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("kernel sides must be odd")
    h, w = x.shape
    if kh > h or kw > w:
        raise ValueError(f"kernel {k.shape} larger than image {x.shape}")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((ph, ph), (pw, pw)), mode="wrap")
    out = np.zeros_like(x)
    for u in range(kh):
        for v in range(kw):
            # term k[u, v] * x[p - (u - ph)] is the padded window at 2*ph - u
            out += k[u, v] * xp[2 * ph - u : 2 * ph - u + h, 2 * pw - v : 2 * pw - v + w]
    return out


class TinyConvDenoiser(Denoiser):
    """Residual two-layer convolutional denoiser with circular boundaries.

    ``D(x) = x - sum_c w2[c] * relu(w1[c] * x + b[c])`` where ``*`` is
    circular convolution.  The individual convolutions are shift-equivariant,
    but with generic (asymmetric) kernels the map is neither flip- nor
    rotation-equivariant, making it a useful desk-scale stand-in for
    non-equivariant learned denoisers.  Ignores ``sigma``.
    """

    def __init__(self, w1: np.ndarray, bias: np.ndarray, w2: np.ndarray):
        w1 = np.asarray(w1, dtype=np.float64)
        w2 = np.asarray(w2, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if w1.ndim != 3 or w2.shape != w1.shape or bias.shape != (w1.shape[0],):
            raise ValueError("expected w1, w2 of shape (k1, s, s) and bias of shape (k1,)")
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2)) and np.all(np.isfinite(bias))):
            raise ValueError("weights contain non-finite values")
        self.w1, self.bias, self.w2 = w1, bias, w2

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        acc = np.zeros_like(x)
        for c in range(self.w1.shape[0]):
            hidden = np.maximum(_conv_circ_small(x, self.w1[c]) + self.bias[c], 0.0)
            acc += _conv_circ_small(hidden, self.w2[c])
        return x - acc


def save_tiny_conv_weights(path, denoiser: TinyConvDenoiser) -> None:
    """Write weights: 16-byte header ``[magic | u32 k1 | u32 kernel_side]``
    followed by little-endian float64 ``w1``, ``bias``, ``w2`` (in that order)."""
    k1, side, _ = denoiser.w1.shape
    with open(path, "wb") as f:
        f.write(_TCW_HEADER.pack(_TCW_MAGIC, k1, side))
        f.write(denoiser.w1.astype("<f8").tobytes())
        f.write(denoiser.bias.astype("<f8").tobytes())
        f.write(denoiser.w2.astype("<f8").tobytes())


def load_tiny_conv_weights(path) -> TinyConvDenoiser:
    raw = Path(path).read_bytes()
    if len(raw) < _TCW_HEADER.size:
        raise ValueError(f"{path}: truncated weight file")
    magic, k1, side = _TCW_HEADER.unpack_from(raw)
    if magic != _TCW_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    n_kernel = k1 * side * side
    expected = _TCW_HEADER.size + 8 * (2 * n_kernel + k1)
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8", offset=_TCW_HEADER.size)
    w1 = flat[:n_kernel].reshape(k1, side, side)
    bias = flat[n_kernel : n_kernel + k1]
    w2 = flat[n_kernel + k1 :].reshape(k1, side, side)
    return TinyConvDenoiser(w1, bias, w2)


def make_random_tiny_conv(rng, k1: int = 4, side: int = 3) -> TinyConvDenoiser:
    """Random weight set; moderate scales keep the residual perturbation mild."""
    w1 = rng.normal(0.0, 0.5, (k1, side, side))
    bias = rng.normal(0.0, 0.1, k1)
    w2 = rng.normal(0.0, 0.35 / k1, (k1, side, side))
    return TinyConvDenoiser(w1, bias, w2)


def default_tiny_conv() -> TinyConvDenoiser:
    """The checked-in weight set (generated once from a fixed seed)."""
    from importlib.resources import files

    with files("eqpnp.data").joinpath("tiny_conv_default.bin").open("rb") as f:
        raw = f.read()
    magic, k1, side = _TCW_HEADER.unpack_from(raw)
    if magic != _TCW_MAGIC:
        raise ValueError("packaged weight file is corrupt")
    n_kernel = k1 * side * side
    flat = np.frombuffer(raw, dtype="<f8", offset=_TCW_HEADER.size)
    return TinyConvDenoiser(
        flat[:n_kernel].reshape(k1, side, side),
        flat[n_kernel : n_kernel + k1],
        flat[n_kernel + k1 :].reshape(k1, side, side),
    )


# --- equivariant wrappers ---------------------------------------------------


class ReynoldsEquivariantDenoiser(Denoiser):
    """Exact group average ``(1/|G|) sum_g T_g^-1 D(T_g x)``.

    Equivariant to the group by construction.  The cost is ``|G|`` base
    evaluations per call, so groups are capped at 256 elements; use the
    Monte-Carlo wrapper beyond that.
    """

    def __init__(self, base: Denoiser, group: Group):
        if len(group) > _REYNOLDS_GROUP_CAP:
            raise ValueError(
                f"group '{group.name}' has {len(group)} elements (cap "
                f"{_REYNOLDS_GROUP_CAP}); use MonteCarloEquivariantDenoiser"
            )
        self.base = base
        self.group = group

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        acc = np.zeros_like(x)
        for g in self.group.elements:
            acc += apply(inverse(g), self.base.denoise(apply(g, x), sigma))
        return acc / len(self.group)


class MonteCarloEquivariantDenoiser(Denoiser):
    """One-sample estimate of the group average: draw ``g``, apply
    ``T_g^-1 D(T_g x)``.

    Owns its random stream and advances it by exactly one draw per call, so a
    fixed seed reproduces the call sequence bit for bit.  Not safe to share
    across threads; parallel runs should construct their own wrapper with
    derived seeds.
    """

    def __init__(self, base: Denoiser, group: Group, rng):
        self.base = base
        self.group = group
        self.rng = rng

    def denoise(self, x, sigma=0.0):
        x = self._check(x, sigma)
        g = sample(self.group, self.rng)
        return apply(inverse(g), self.base.denoise(apply(g, x), sigma))


def build_equivariant_B1(group: Group, height: int, width: int, rng) -> np.ndarray:
    """Unitary matrix commuting with every transform of the group.

    Construction: draw a Gaussian matrix, project it onto the commutant by
    averaging ``T_g^-1 M T_g`` over the group, then orthogonalize with the
    polar factor (which stays in the commutant).  Retries on a numerically
    rank-deficient draw, failing after 10 attempts.
    """
    n = height * width
    mats = [matrix_of(g, height, width) for g in group.elements]
    for _ in range(10):
        M = rng.normal(0.0, 1.0, (n, n))
        avg = sum(T.T @ M @ T for T in mats) / len(mats)
        u, s, vt = np.linalg.svd(avg)
        if s[-1] < 1e-10 * s[0]:
            continue
        return u @ vt
    raise RuntimeError("equivariant basis construction degenerate after 10 attempts")
