import os
from pathlib import Path

import numpy as np
import pytest

from blockcrack.dataio import read_cifar10, resize

DATA = Path(__file__).parent / "data"
FIXTURE_BATCH = DATA / "cifar10_test_head20.bin"


def cifar_batch_path() -> Path:
    """Full CIFAR-10 test batch if provided, else the bundled 20-image head."""
    env = os.environ.get("BLOCKCRACK_CIFAR10")
    return Path(env) if env else FIXTURE_BATCH


@pytest.fixture(scope="session")
def cifar_images():
    images, _ = read_cifar10(FIXTURE_BATCH)
    return images


@pytest.fixture(scope="session")
def cifar224(cifar_images):
    return [resize(im, 224, 224) for im in cifar_images]


def gradient_image(width, height, seed=0, sinus=False):
    """Smooth synthetic RGB image.

    Red ramps along x, green along y, blue weakly along both; ``sinus``
    adds separable low-frequency waves.  Keeping the cross-axis coupling
    weak keeps the true 4-neighbour the cheapest one.
    """
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    x -= width / 2
    y -= height / 2
    scale = 120.0 / max(width, height)
    s = rng.uniform(0.8, 1.6, 4) * scale
    chans = [128 + s[0] * x, 128 + s[1] * y, 128 + 0.4 * (s[2] * x + s[3] * y)]
    if sinus:
        f = rng.uniform(0.5, 1.5, 6) * 2 * np.pi / max(width, height)
        ph = rng.uniform(0, 2 * np.pi, 6)
        for c in range(3):
            chans[c] = chans[c] + 15 * (np.sin(f[2 * c] * x + ph[2 * c])
                                        + np.sin(f[2 * c + 1] * y + ph[2 * c + 1]))
    return np.clip(np.rint(np.stack(chans, axis=-1)), 0, 255).astype(np.uint8)


def textured_image(width, height, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (height, width, 3), dtype=np.uint8)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
