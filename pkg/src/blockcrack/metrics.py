"""SSIM and permutation-level accuracy diagnostics, plus the evaluation report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .pixels import as_image


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 255.0
    luma: tuple = (0.299, 0.587, 0.114)

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2

    def kernel(self) -> np.ndarray:
        x = np.arange(self.window, dtype=np.float64) - (self.window - 1) / 2
        g = np.exp(-(x**2) / (2 * self.sigma**2))
        return g / g.sum()


def luma(img, coeffs=(0.299, 0.587, 0.114)) -> np.ndarray:
    img = as_image(img).astype(np.float64)
    r, g, b = coeffs
    return r * img[..., 0] + g * img[..., 1] + b * img[..., 2]


def _filter_valid(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable weighted sum over every full window (stride 1)."""
    w = k.size
    a = sliding_window_view(a, w, axis=1) @ k
    return sliding_window_view(a, w, axis=0) @ k


def ssim_map(a, b, params: SsimParams = SsimParams()) -> np.ndarray:
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if min(a.shape[:2]) < params.window:
        raise ValueError(f"images must be at least {params.window}x{params.window}")
    x, y = luma(a, params.luma), luma(b, params.luma)
    k = params.kernel()
    mx, my = _filter_valid(x, k), _filter_valid(y, k)
    sxx = _filter_valid(x * x, k) - mx * mx
    syy = _filter_valid(y * y, k) - my * my
    sxy = _filter_valid(x * y, k) - mx * my
    c1, c2 = params.c1, params.c2
    # every expression is symmetric in (x, y) so ssim(a, b) == ssim(b, a) bitwise
    return ((2 * (mx * my) + c1) * (2 * sxy + c2)) / (
        (mx * mx + my * my + c1) * (sxx + syy + c2)
    )


def ssim(a, b, params: SsimParams = SsimParams()) -> float:
    """Single-scale SSIM on the luma plane, mean over all full windows."""
    return float(np.mean(ssim_map(a, b, params)))


def placement_accuracy(recovered, truth) -> float:
    recovered, truth = np.asarray(recovered), np.asarray(truth)
    if recovered.shape != truth.shape:
        raise ValueError("length mismatch")
    return float(np.count_nonzero(recovered == truth)) / truth.size


def direct_assembly_accuracy(assembly, truth) -> float:
    """Fraction of board cells holding their ground-truth piece."""
    assembly, truth = np.asarray(assembly), np.asarray(truth)
    if assembly.shape != truth.shape:
        raise ValueError("board mismatch")
    return float(np.count_nonzero(assembly == truth)) / truth.size


# -- reports ----------------------------------------------------------------

_FIELDS = ("id", "attack", "ssim", "placement_accuracy", "assembly_accuracy", "error")


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return repr(v)
    return str(v).replace("\t", " ").replace("\n", " ")


@dataclass
class ImageResult:
    id: int
    attack: str
    ssim: float | None = None
    placement_accuracy: float | None = None
    assembly_accuracy: float | None = None
    error: str | None = None


@dataclass
class EvalReport:
    results: list[ImageResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def attacks(self) -> list[str]:
        seen = []
        for r in self.results:
            if r.attack not in seen:
                seen.append(r.attack)
        return seen

    def values(self, attack: str) -> list[float]:
        return [r.ssim for r in self.results if r.attack == attack and r.ssim is not None]

    def mean_ssim(self, attack: str) -> float:
        vals = self.values(attack)
        return math.fsum(vals) / len(vals) if vals else float("nan")

    def to_text(self) -> str:
        lines = [f"# {k}={_fmt(v)}" for k, v in self.metadata.items()]
        lines.append("\t".join(_FIELDS))
        for r in self.results:
            lines.append("\t".join(_fmt(getattr(r, f)) for f in _FIELDS))
        for attack in self.attacks():
            vals = self.values(attack)
            failed = sum(1 for r in self.results if r.attack == attack and r.error)
            lines.append(
                f"summary\t{attack}\tmean_ssim={_fmt(self.mean_ssim(attack))}"
                f"\tcount={len(vals)}\tfailed={failed}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        rep = cls()
        for line in text.splitlines():
            if line.startswith("# "):
                k, _, v = line[2:].partition("=")
                rep.metadata[k] = v
            elif line.startswith("summary\t") or line.startswith("id\t") or not line:
                continue
            else:
                parts = line.split("\t")
                vals = dict(zip(_FIELDS, parts))

                def num(s):
                    return None if s in ("-", "") else float(s)

                rep.results.append(ImageResult(
                    id=int(vals["id"]), attack=vals["attack"], ssim=num(vals["ssim"]),
                    placement_accuracy=num(vals["placement_accuracy"]),
                    assembly_accuracy=num(vals["assembly_accuracy"]),
                    error=None if vals["error"] == "-" else vals["error"],
                ))
        return rep
