"""Image, block geometry and permutation primitives.

Images are ``numpy.ndarray`` objects of shape ``(Y, X, 3)`` and dtype
``uint8`` (row-major, channel-interleaved).  Permutations are 1-D int64
arrays where ``p[i]`` is the destination index of source ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QUADRANTS = ("UL", "UR", "LL", "LR")


class GeometryError(ValueError):
    """Image or block dimensions incompatible with the requested operation."""


def as_image(img) -> np.ndarray:
    """Validate and return ``img`` as a ``(Y, X, 3)`` uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise GeometryError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise GeometryError("image must be at least 1x1")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


@dataclass(frozen=True)
class BlockGeometry:
    width: int
    height: int
    block_size: int

    def __post_init__(self):
        M = self.block_size
        if M < 2 or M % 2:
            raise GeometryError(f"block size must be even and >= 2, got {M}")
        if self.width < M or self.height < M:
            raise GeometryError(
                f"image {self.width}x{self.height} smaller than block size {M}"
            )

    @classmethod
    def of(cls, img: np.ndarray, block_size: int) -> "BlockGeometry":
        img = np.asarray(img)
        return cls(width=img.shape[1], height=img.shape[0], block_size=block_size)

    @property
    def cols(self) -> int:
        return self.width // self.block_size

    @property
    def rows(self) -> int:
        return self.height // self.block_size

    @property
    def n_blocks(self) -> int:
        return self.cols * self.rows

    @property
    def n_subblocks(self) -> int:
        return 4 * self.n_blocks

    @property
    def half(self) -> int:
        return self.block_size // 2

    @property
    def exact(self) -> bool:
        """True when the block grid covers the whole image."""
        M = self.block_size
        return self.width % M == 0 and self.height % M == 0

    def require_exact(self) -> None:
        if not self.exact:
            raise GeometryError(
                f"image {self.width}x{self.height} is not a multiple of "
                f"block size {self.block_size}; resize first"
            )


@dataclass(frozen=True, order=True)
class SubBlockIndex:
    block: int
    quadrant: str

    def __post_init__(self):
        if self.quadrant not in QUADRANTS:
            raise ValueError(f"quadrant must be one of {QUADRANTS}")


# -- permutations -----------------------------------------------------------


def make_permutation(seed: int, length: int) -> np.ndarray:
    """Seeded uniform random bijection on ``range(length)``.

    The generator is PCG64 seeded with the 64-bit key; the shuffle is
    numpy's Fisher-Yates with unbiased bounded integers.
    """
    if length < 1:
        raise ValueError("permutation length must be >= 1")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.permutation(length).astype(np.int64)


def identity_permutation(length: int) -> np.ndarray:
    if length < 1:
        raise ValueError("permutation length must be >= 1")
    return np.arange(length, dtype=np.int64)


def is_permutation(p) -> bool:
    p = np.asarray(p)
    if p.ndim != 1 or p.size == 0 or not np.issubdtype(p.dtype, np.integer):
        return False
    return bool(np.array_equal(np.sort(p), np.arange(p.size)))


def check_permutation(p) -> np.ndarray:
    p = np.asarray(p)
    if not is_permutation(p):
        raise ValueError("not a bijection on 0..L-1")
    return p.astype(np.int64, copy=False)


def invert_permutation(p) -> np.ndarray:
    p = check_permutation(p)
    q = np.empty_like(p)
    q[p] = np.arange(p.size, dtype=np.int64)
    return q


def compose(p, q) -> np.ndarray:
    """Permutation that applies ``q`` first, then ``p``."""
    p = check_permutation(p)
    q = check_permutation(q)
    if p.size != q.size:
        raise ValueError("length mismatch")
    return p[q]


def apply_permutation(items: np.ndarray, p, axis: int = 0) -> np.ndarray:
    """Move element ``i`` along ``axis`` to position ``p[i]``."""
    p = check_permutation(p)
    # out[p[i]] = items[i]  <=>  out = items[inverse(p)]
    return np.take(items, invert_permutation(p), axis=axis)


# -- blocks -----------------------------------------------------------------


def split_blocks(img, geom: BlockGeometry) -> np.ndarray:
    """Cut the image into ``(n, M, M, 3)`` blocks in raster order.

    Pixels beyond the last full block row/column are dropped.
    """
    img = as_image(img)
    if img.shape[1] < geom.block_size or img.shape[0] < geom.block_size:
        raise GeometryError("image smaller than block size")
    M, r, c = geom.block_size, geom.rows, geom.cols
    grid = img[: r * M, : c * M].reshape(r, M, c, M, 3)
    return np.ascontiguousarray(grid.transpose(0, 2, 1, 3, 4).reshape(r * c, M, M, 3))


def merge_blocks(blocks, geom: BlockGeometry) -> np.ndarray:
    blocks = np.asarray(blocks)
    M, r, c = geom.block_size, geom.rows, geom.cols
    if blocks.shape != (r * c, M, M, 3):
        raise GeometryError(
            f"expected {r * c} blocks of {M}x{M}x3, got array of shape {blocks.shape}"
        )
    img = blocks.reshape(r, c, M, M, 3).transpose(0, 2, 1, 3, 4).reshape(r * M, c * M, 3)
    return np.ascontiguousarray(img)


def split_subblocks(block) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    block = np.asarray(block)
    M = block.shape[0]
    if block.ndim < 2 or block.shape[1] != M:
        raise GeometryError("block must be square")
    if M < 2 or M % 2:
        raise GeometryError(f"block side must be even, got {M}")
    h = M // 2
    return block[:h, :h], block[:h, h:], block[h:, :h], block[h:, h:]


def join_subblocks(ul, ur, ll, lr) -> np.ndarray:
    return np.concatenate(
        [np.concatenate([ul, ur], axis=1), np.concatenate([ll, lr], axis=1)], axis=0
    )


def subblock_pixels(img, block_size: int) -> np.ndarray:
    """All sub-blocks of an exactly tiled image as ``(n, 4, h*h, 3)``.

    Quadrant axis is ordered UL, UR, LL, LR; the pixel axis is row-major
    within the sub-block.
    """
    img = as_image(img)
    geom = BlockGeometry.of(img, block_size)
    geom.require_exact()
    h, r, c = geom.half, geom.rows, geom.cols
    # (r, 2, h, c, 2, h, 3): block row, quadrant row, y, block col, quadrant col, x
    a = img.reshape(r, 2, h, c, 2, h, 3).transpose(0, 3, 1, 4, 2, 5, 6)
    return np.ascontiguousarray(a.reshape(r * c, 4, h * h, 3))


def from_subblock_pixels(sub: np.ndarray, geom: BlockGeometry) -> np.ndarray:
    h, r, c = geom.half, geom.rows, geom.cols
    a = np.asarray(sub).reshape(r, c, 2, 2, h, h, 3).transpose(0, 2, 4, 1, 3, 5, 6)
    return np.ascontiguousarray(a.reshape(r * 2 * h, c * 2 * h, 3))
