"""Batch evaluation of the conventional and proposed attacks."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import jigsaw
from .cipher import block_permutation, encrypt_with, pixel_permutation
from .dataio import read_cifar10, resize, write_image
from .metrics import EvalReport, ImageResult, direct_assembly_accuracy, placement_accuracy, ssim
from .pixels import BlockGeometry, compose
from .unshuffle import recover_placement, restore_subblocks

log = logging.getLogger(__name__)

MODES = ("conventional", "proposed", "both", "none")
IDENTITY = "identity"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = ""
    count: int = 30
    block_size: int = 16
    key1: Optional[str] = None  # int seed, "identity", or None for per-image keys
    key2: Optional[str] = None
    mode: str = "both"
    population: int = 1000
    generations: int = 100
    elites: int = 4
    mutation_rate: float = 0.05
    seed: int = 0
    out_dir: Optional[str] = None
    report: Optional[str] = None
    resize_mode: str = "bilinear"
    size: int = 224
    workers: int = 1
    color_space: str = "lab"

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.block_size < 2 or self.block_size % 2:
            raise ValueError("block size must be even and >= 2")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def ga_params(self, index: int) -> jigsaw.GAParams:
        return jigsaw.GAParams(
            population=self.population, generations=self.generations,
            elites=self.elites, mutation_rate=self.mutation_rate,
            seed=self.seed ^ index,
        )

    @property
    def attacks(self) -> tuple[str, ...]:
        if self.mode == "both":
            return ("conventional", "proposed")
        return (self.mode,)


def parse_key(text) -> Optional[int]:
    """``"identity"`` -> None (identity permutation); otherwise an int seed."""
    if text is None or str(text).lower() in (IDENTITY, "none"):
        return None
    return int(str(text), 0)


def image_keys(config: ExperimentConfig, index: int) -> tuple[Optional[int], Optional[int]]:
    out = []
    for slot, given in ((1, config.key1), (2, config.key2)):
        if given is not None:
            out.append(parse_key(given))
        else:
            ss = np.random.SeedSequence([config.seed, index, slot])
            out.append(int(ss.generate_state(1, np.uint64)[0]))
    return out[0], out[1]


def _save(config: ExperimentConfig, index: int, tag: str, img) -> None:
    if config.out_dir:
        write_image(Path(config.out_dir) / f"{index:05d}_{tag}.ppm", img)


def evaluate_image(config: ExperimentConfig, index: int, image: np.ndarray) -> list[ImageResult]:
    """Full pipeline for one dataset image; failures are recorded, not raised."""
    M = config.block_size
    try:
        x = resize(image, config.size, config.size, config.resize_mode)
        geom = BlockGeometry.of(x, M)
        geom.require_exact()
        k1, k2 = image_keys(config, index)
        p1 = block_permutation(k1, geom.n_blocks)
        p2 = pixel_permutation(k2, M)
        enc = encrypt_with(x, M, p1, p2)
    except Exception as exc:  # noqa: BLE001 - batch isolation
        return [ImageResult(index, a, error=f"{type(exc).__name__}: {exc}") for a in config.attacks]
    _save(config, index, "original", x)
    _save(config, index, "encrypted", enc)

    results = []
    for attack in config.attacks:
        try:
            if attack == "none":
                results.append(ImageResult(index, attack, ssim=ssim(x, enc)))
                continue
            place_acc = None
            source = enc
            if attack == "proposed":
                placement = recover_placement(enc, M)
                source = restore_subblocks(enc, placement, M)
                recovered = compose(placement.permutation(), p2)
                place_acc = placement_accuracy(recovered, np.arange(p2.size))
                _save(config, index, "subblocks", source)
            restored, res = jigsaw.solve_image(
                source, M, config.ga_params(index), config.color_space)
            _save(config, index, attack, restored)
            results.append(ImageResult(
                index, attack, ssim=ssim(x, restored), placement_accuracy=place_acc,
                assembly_accuracy=direct_assembly_accuracy(res.assembly, p1),
            ))
        except Exception as exc:  # noqa: BLE001 - batch isolation
            log.warning("image %d (%s) failed: %s", index, attack, exc)
            results.append(ImageResult(index, attack, error=f"{type(exc).__name__}: {exc}"))
    return results


def _metadata(config: ExperimentConfig, n_images: int) -> dict:
    meta = {k: v for k, v in asdict(config).items() if k not in ("out_dir", "report", "workers")}
    meta["dataset"] = os.path.basename(config.dataset) if config.dataset else ""
    meta["key1"] = config.key1 if config.key1 is not None else "per-image"
    meta["key2"] = config.key2 if config.key2 is not None else "per-image"
    meta["images"] = n_images
    meta["alignment"] = "none"
    meta["ssim"] = "luma-bt601 gaussian11 sigma1.5 valid-windows"
    return meta


def _run_one(args):
    config, index, image = args
    return evaluate_image(config, index, image)


def run_experiment(config: ExperimentConfig, images=None) -> EvalReport:
    """Evaluate the first ``config.count`` images of the dataset.

    ``images`` overrides the dataset file with in-memory images.
    """
    if images is None:
        images, _ = read_cifar10(config.dataset, limit=config.count)
    images = list(images)[: config.count]
    if config.out_dir:
        Path(config.out_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(config, i, img) for i, img in enumerate(images)]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_image = list(pool.map(_run_one, jobs))
    else:
        per_image = [_run_one(j) for j in jobs]
    report = EvalReport(metadata=_metadata(config, len(images)))
    for rs in per_image:
        report.results.extend(rs)
    if config.report:
        Path(config.report).write_text(report.to_text())
    return report


# -- config files -----------------------------------------------------------


def _convert(name: str, text: str):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    t = str(types[name])
    if "int" in t and "Optional" not in t:
        return int(text, 0)
    if "float" in t:
        return float(text)
    return text


def load_config(path, base: ExperimentConfig = ExperimentConfig()) -> ExperimentConfig:
    """Flat ``key = value`` file; keys are the CLI flag names."""
    known = {f.name for f in fields(ExperimentConfig)}
    updates = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        if not sep or key not in known:
            raise ValueError(f"{path}:{n}: cannot parse {line!r}")
        updates[key] = _convert(key, val.strip())
    return replace(base, **updates)
