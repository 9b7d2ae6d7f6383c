"""Block-wise perceptual encryption: block scrambling plus a shared
sub-block pixel shuffle.

A key of ``None`` stands for the identity permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .pixels import (
    BlockGeometry,
    apply_permutation,
    as_image,
    from_subblock_pixels,
    identity_permutation,
    invert_permutation,
    make_permutation,
    merge_blocks,
    split_blocks,
    subblock_pixels,
)

DEFAULT_BLOCK_SIZE = 16


@dataclass(frozen=True)
class KeyPair:
    k1: Optional[int] = None  # block permutation
    k2: Optional[int] = None  # pixel shuffle within sub-blocks


@dataclass(frozen=True)
class CipherParams:
    block_size: int = DEFAULT_BLOCK_SIZE
    keys: KeyPair = KeyPair()

    def __post_init__(self):
        if self.block_size < 2 or self.block_size % 2:
            raise ValueError("block size must be even and >= 2")


def block_permutation(key: Optional[int], n_blocks: int) -> np.ndarray:
    if key is None:
        return identity_permutation(n_blocks)
    return make_permutation(key, n_blocks)


def pixel_permutation(key: Optional[int], block_size: int) -> np.ndarray:
    h = block_size // 2
    if key is None:
        return identity_permutation(h * h)
    return make_permutation(key, h * h)


def _geometry(img, block_size: int) -> BlockGeometry:
    geom = BlockGeometry.of(img, block_size)
    geom.require_exact()
    return geom


def permute_blocks(img, block_size: int, perm) -> np.ndarray:
    """Move block ``i`` (raster order) to block position ``perm[i]``."""
    img = as_image(img)
    geom = _geometry(img, block_size)
    return merge_blocks(apply_permutation(split_blocks(img, geom), perm), geom)


def shuffle_subblocks(img, block_size: int, perm) -> np.ndarray:
    """Move pixel ``k`` of every sub-block to row-major position ``perm[k]``."""
    img = as_image(img)
    geom = _geometry(img, block_size)
    sub = subblock_pixels(img, block_size)
    return from_subblock_pixels(apply_permutation(sub, perm, axis=2), geom)


def encrypt_with(img, block_size: int, block_perm, pixel_perm) -> np.ndarray:
    return shuffle_subblocks(permute_blocks(img, block_size, block_perm), block_size, pixel_perm)


def decrypt_with(img, block_size: int, block_perm, pixel_perm) -> np.ndarray:
    unshuffled = shuffle_subblocks(img, block_size, invert_permutation(pixel_perm))
    return permute_blocks(unshuffled, block_size, invert_permutation(block_perm))


def encrypt(img, params: CipherParams) -> np.ndarray:
    img = as_image(img)
    geom = _geometry(img, params.block_size)
    p1 = block_permutation(params.keys.k1, geom.n_blocks)
    p2 = pixel_permutation(params.keys.k2, params.block_size)
    return encrypt_with(img, params.block_size, p1, p2)


def decrypt(img, params: CipherParams) -> np.ndarray:
    img = as_image(img)
    geom = _geometry(img, params.block_size)
    p1 = block_permutation(params.keys.k1, geom.n_blocks)
    p2 = pixel_permutation(params.keys.k2, params.block_size)
    return decrypt_with(img, params.block_size, p1, p2)


def scramble_blocks_only(img, block_size: int, k1: Optional[int]) -> np.ndarray:
    img = as_image(img)
    geom = _geometry(img, block_size)
    return permute_blocks(img, block_size, block_permutation(k1, geom.n_blocks))
