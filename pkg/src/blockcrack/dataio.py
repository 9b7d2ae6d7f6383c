"""Dataset ingestion, image files and resizing."""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from .pixels import as_image

CIFAR_SIDE = 32
CIFAR_RECORD = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE


class FormatError(ValueError):
    pass


# -- CIFAR-10 ---------------------------------------------------------------


def decode_cifar10(data: bytes) -> tuple[list[np.ndarray], list[int]]:
    if len(data) % CIFAR_RECORD:
        whole = len(data) // CIFAR_RECORD * CIFAR_RECORD
        raise FormatError(
            f"truncated CIFAR-10 data: record at byte offset {whole} has "
            f"{len(data) - whole} of {CIFAR_RECORD} bytes"
        )
    recs = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = [int(v) for v in recs[:, 0]]
    planes = recs[:, 1:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE)
    images = [np.ascontiguousarray(p.transpose(1, 2, 0)) for p in planes]
    return images, labels


def read_cifar10(path, limit: int | None = None) -> tuple[list[np.ndarray], list[int]]:
    """Read a CIFAR-10 binary batch (label byte + R, G, B 32x32 planes)."""
    size = os.path.getsize(path)
    if size % CIFAR_RECORD:
        whole = size // CIFAR_RECORD * CIFAR_RECORD
        raise FormatError(
            f"{path}: length {size} is not a multiple of {CIFAR_RECORD}; "
            f"truncated record at byte offset {whole}"
        )
    with open(path, "rb") as fh:
        data = fh.read() if limit is None else fh.read(limit * CIFAR_RECORD)
    return decode_cifar10(data)


def encode_cifar10(images, labels) -> bytes:
    out = bytearray()
    for img, label in zip(images, labels):
        img = as_image(img)
        if img.shape != (CIFAR_SIDE, CIFAR_SIDE, 3):
            raise ValueError("CIFAR-10 records hold 32x32 images")
        out.append(int(label))
        out += img.transpose(2, 0, 1).tobytes()
    return bytes(out)


# -- PPM --------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def decode_ppm(data: bytes) -> np.ndarray:
    if data[:2] != b"P6":
        magic = data[:2].decode("latin-1", "replace")
        raise FormatError(f"unsupported format {magic!r}; only binary P6 PPM is read")
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if not m or not m.group(1).isdigit():
            raise FormatError("malformed PPM header")
        fields.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = fields
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("malformed PPM header")
    pos += 1
    if maxval != 255:
        raise FormatError(f"maxval {maxval} unsupported; need 255")
    if width < 1 or height < 1:
        raise FormatError("PPM dimensions must be positive")
    need = width * height * 3
    body = data[pos:pos + need]
    if len(body) < need:
        raise FormatError(f"short PPM body: {len(body)} of {need} bytes")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_ppm(img) -> bytes:
    img = as_image(img)
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def read_image(path) -> np.ndarray:
    """Read a P6 PPM; other extensions go through Pillow as RGB."""
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() in (".ppm", ".pnm") or data[:1] == b"P":
        return decode_ppm(data)
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).copy()


def write_image(path, img) -> None:
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pnm", ""):
        path.write_bytes(encode_ppm(img))
        return
    from PIL import Image

    Image.fromarray(as_image(img), "RGB").save(path)


# -- resize -----------------------------------------------------------------


def _linear_weights(n_in: int, n_out: int):
    # half-pixel centres: src = (dst + 0.5) * n_in / n_out - 0.5, clamped
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize(img, width: int, height: int, mode: str = "bilinear") -> np.ndarray:
    img = as_image(img)
    if width < 1 or height < 1:
        raise ValueError("target size must be at least 1x1")
    H, W, _ = img.shape
    if mode == "nearest":
        ys = np.minimum((np.arange(height) * H) // height, H - 1)
        xs = np.minimum((np.arange(width) * W) // width, W - 1)
        return np.ascontiguousarray(img[ys][:, xs])
    if mode != "bilinear":
        raise ValueError(f"unknown resize mode {mode!r}")
    a = img.astype(np.float64)
    lo, hi, fr = _linear_weights(W, width)
    a = a[:, lo] * (1 - fr)[None, :, None] + a[:, hi] * fr[None, :, None]
    lo, hi, fr = _linear_weights(H, height)
    a = a[lo] * (1 - fr)[:, None, None] + a[hi] * fr[:, None, None]
    # non-negative, so floor(x + 0.5) rounds half away from zero
    return np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)
