"""Block-wise perceptual image encryption and a jigsaw-solver attack on it."""

from .cipher import CipherParams, KeyPair, decrypt, encrypt, scramble_blocks_only
from .jigsaw import GAParams, assemble, build_compatibility, cut_pieces, ga_solve
from .metrics import direct_assembly_accuracy, placement_accuracy, ssim
from .pixels import (
    BlockGeometry,
    GeometryError,
    invert_permutation,
    make_permutation,
    merge_blocks,
    split_blocks,
    split_subblocks,
)
from .unshuffle import recover_placement, restore_subblocks

__version__ = "0.1.0"
