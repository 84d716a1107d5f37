"""Image file I/O and synthetic test phantoms.

Two image formats are supported:

* raw float64 (lossless): 24-byte header ``[magic "EQPNPIMG" | u32 height |
  u32 width | u64 reserved]``, little-endian, followed by ``height*width``
  float64 values in row-major order.  Round-trips are bit-exact.
* binary PGM (``P5``, maxval 255): 8-bit grayscale, mapped to ``[0, 1]``
  by dividing by 255 on load.  Import is lossy by quantization.

``save_image`` picks the format from the file extension (``.pgm`` writes PGM,
anything else writes the raw format).
"""

import struct
from pathlib import Path

import numpy as np

__all__ = ["MAGIC", "load_image", "save_image", "make_phantom"]

MAGIC = b"EQPNPIMG"
_HEADER = struct.Struct("<8sIIQ")
_MAX_SIDE = 1 << 20


def save_image(path, x: np.ndarray) -> None:
    """Write an image; ``.pgm`` paths quantize to 8 bits, others are lossless."""
    path = Path(path)
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if x.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {x.shape}")
    if path.suffix.lower() == ".pgm":
        quant = np.clip(np.rint(np.clip(x, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
        with open(path, "wb") as f:
            f.write(f"P5\n{x.shape[1]} {x.shape[0]}\n255\n".encode())
            f.write(quant.tobytes())
        return
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, x.shape[0], x.shape[1], 0))
        f.write(x.astype("<f8").tobytes())


def load_image(path) -> np.ndarray:
    """Read an image in either supported format."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"P5":
        return _parse_pgm(raw, path)
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated file")
    magic, h, w, _ = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if h == 0 or w == 0 or h > _MAX_SIDE or w > _MAX_SIDE:
        raise ValueError(f"{path}: implausible dimensions {h}x{w}")
    expected = _HEADER.size + 8 * h * w
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return data.reshape(h, w).astype(np.float64)


def _parse_pgm(raw: bytes, path) -> np.ndarray:
    # Minimal P5 reader: whitespace-separated header tokens, '#' comments.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    data = np.frombuffer(raw, dtype=np.uint8, offset=pos)
    if data.size != h * w:
        raise ValueError(f"{path}: expected {h * w} pixels, found {data.size}")
    return data.reshape(h, w).astype(np.float64) / 255.0


# Axis-aligned ellipses for the piecewise-constant phantom: fractions of the
# half-extent (cy, cx, ry, rx) and an additive intensity.
_PHANTOM_ELLIPSES = (
    (0.00, 0.00, 0.86, 0.68, 0.80),
    (0.00, 0.02, 0.72, 0.54, -0.30),
    (-0.22, 0.22, 0.24, 0.12, 0.25),
    (-0.22, -0.22, 0.24, 0.15, 0.25),
    (0.36, 0.00, 0.16, 0.22, 0.35),
)


def make_phantom(name: str, height: int, width: int) -> np.ndarray:
    """Deterministic synthetic test image with values in ``[0, 1]``.

    Names: ``constant`` (all 0.5), ``impulse`` (1 at the center pixel),
    ``checkerboard`` (2x2 blocks), ``shepp_like`` (piecewise-constant
    ellipses listed in ``_PHANTOM_ELLIPSES``).
    """
    if height < 8 or width < 8:
        raise ValueError("phantoms require at least 8x8 pixels")
    if name == "constant":
        return np.full((height, width), 0.5)
    if name == "impulse":
        out = np.zeros((height, width))
        out[height // 2, width // 2] = 1.0
        return out
    if name == "checkerboard":
        i, j = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        return (((i // 2) + (j // 2)) % 2 == 0).astype(np.float64)
    if name == "shepp_like":
        yy = np.linspace(-1.0, 1.0, height)[:, None]
        xx = np.linspace(-1.0, 1.0, width)[None, :]
        out = np.zeros((height, width))
        for cy, cx, ry, rx, value in _PHANTOM_ELLIPSES:
            inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
            out[inside] += value
        return np.clip(out, 0.0, 1.0)
    raise ValueError(f"unknown phantom name: {name!r}")
