"""Finite groups of unitary image transformations.

A group element acts on an image as *rotation, then horizontal flip, then
circular shift* (in that order).  Every element is a permutation of pixels,
hence a unitary map.  Elements are kept in this canonical normal form so that
composition and inversion are exact integer computations.

Conventions (``H x W`` image ``x``):

* ``rot90`` (one quarter turn, counterclockwise): ``out[i, j] = x[j, W-1-i]``
* ``flip_horizontal``: ``out[i, j] = x[i, W-1-j]``
* ``shift (dy, dx)``: ``out[i, j] = x[(i-dy) % H, (j-dx) % W]``

Rotations by an odd number of quarter turns require square images.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GroupElement",
    "Group",
    "IDENTITY",
    "apply",
    "inverse",
    "compose",
    "canonicalize",
    "built_in_group",
    "sample",
    "matrix_of",
]

_MATRIX_SIZE_CAP = 4096


@dataclass(frozen=True)
class GroupElement:
    """Rotation / flip / shift triple in canonical application order."""

    rot: int = 0          # quarter turns, counterclockwise, in {0, 1, 2, 3}
    flip: bool = False    # horizontal flip, applied after the rotation
    dy: int = 0           # shift applied last
    dx: int = 0

    def __post_init__(self):
        if self.rot not in (0, 1, 2, 3):
            raise ValueError(f"rot must be in 0..3, got {self.rot}")


IDENTITY = GroupElement()


@dataclass(frozen=True)
class Group:
    """A named finite collection of elements containing the identity."""

    name: str
    elements: tuple

    def __len__(self) -> int:
        return len(self.elements)


def _offset_action(rot: int, flip: bool, dy: int, dx: int) -> tuple:
    # Conjugating a shift past the rot/flip part of an element:
    # F^a R^k S_(dy,dx) = S_phi(dy,dx) F^a R^k with phi = f^a o r^k,
    # r(dy, dx) = (-dx, dy)  and  f(dy, dx) = (dy, -dx).
    for _ in range(rot % 4):
        dy, dx = -dx, dy
    if flip:
        dx = -dx
    return dy, dx


def apply(g: GroupElement, x: np.ndarray) -> np.ndarray:
    """Apply the pixel permutation of ``g`` to an image."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {x.shape}")
    if g.rot % 2 == 1 and x.shape[0] != x.shape[1]:
        raise ValueError(
            f"odd quarter-turn rotation requires a square image, got {x.shape}"
        )
    out = np.rot90(x, g.rot) if g.rot else x
    if g.flip:
        out = out[:, ::-1]
    if g.dy or g.dx:
        out = np.roll(out, (g.dy, g.dx), axis=(0, 1))
    return np.ascontiguousarray(out)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Composition ``g o h``: ``apply(compose(g, h), x) == apply(g, apply(h, x))``."""
    if h.flip:
        rot = (h.rot - g.rot) % 4
        flip = not g.flip
    else:
        rot = (g.rot + h.rot) % 4
        flip = g.flip
    sy, sx = _offset_action(g.rot, g.flip, h.dy, h.dx)
    return GroupElement(rot, flip, g.dy + sy, g.dx + sx)


def inverse(g: GroupElement) -> GroupElement:
    """The inverse element: ``apply(inverse(g), apply(g, x)) == x``."""
    if g.flip:
        rot, flip = g.rot, True
    else:
        rot, flip = (-g.rot) % 4, False
    dy, dx = _offset_action(rot, flip, -g.dy, -g.dx)
    return GroupElement(rot, flip, dy, dx)


def canonicalize(g: GroupElement, height: int, width: int) -> GroupElement:
    """Reduce the shift part modulo the grid dimensions."""
    return GroupElement(g.rot, g.flip, g.dy % height, g.dx % width)


def _flip_elements() -> list:
    # Klein four-group {identity, horizontal, vertical, both}; the vertical
    # flip is rot180 followed by a horizontal flip.
    return [
        GroupElement(),
        GroupElement(flip=True),
        GroupElement(rot=2, flip=True),
        GroupElement(rot=2),
    ]


def built_in_group(name: str, height: int | None = None, width: int | None = None) -> Group:
    """Construct one of the built-in groups.

    Names: ``trivial``, ``flips`` (|G| = 4), ``c4`` (4 rotations), ``d4``
    (8 rotations and reflections), ``shifts`` (all ``H*W`` circular shifts),
    ``d4_shifts`` (product, ``8*H*W`` elements).  The shift-carrying groups
    require explicit grid dimensions; ``d4_shifts`` requires a square grid.
    """
    if name == "trivial":
        return Group("trivial", (IDENTITY,))
    if name == "flips":
        return Group("flips", tuple(_flip_elements()))
    if name == "c4":
        return Group("c4", tuple(GroupElement(rot=r) for r in range(4)))
    if name == "d4":
        return Group(
            "d4", tuple(GroupElement(rot=r, flip=f) for f in (False, True) for r in range(4))
        )
    if name in ("shifts", "d4_shifts"):
        if height is None or width is None:
            raise ValueError(f"group '{name}' requires grid dimensions")
        shifts = [
            GroupElement(dy=dy, dx=dx) for dy in range(height) for dx in range(width)
        ]
        if name == "shifts":
            return Group(f"shifts({height},{width})", tuple(shifts))
        if height != width:
            raise ValueError("d4_shifts requires a square grid")
        d4 = built_in_group("d4").elements
        elems = [canonicalize(compose(s, r), height, width) for s in shifts for r in d4]
        return Group(f"d4_shifts({height},{width})", tuple(elems))
    raise ValueError(f"unknown group name: {name!r}")


def sample(group: Group, rng) -> GroupElement:
    """Draw one element uniformly; always consumes exactly one draw."""
    return group.elements[int(rng.integers(len(group.elements)))]


def matrix_of(g: GroupElement, height: int, width: int) -> np.ndarray:
    """Explicit permutation matrix ``P`` with ``P @ x.ravel() == apply(g, x).ravel()``."""
    n = height * width
    if n > _MATRIX_SIZE_CAP:
        raise ValueError(f"grid size {n} exceeds matrix cap {_MATRIX_SIZE_CAP}")
    idx = apply(g, np.arange(n).reshape(height, width))
    P = np.zeros((n, n))
    P[np.arange(n), idx.ravel()] = 1.0
    return P
