"""Rebuild tests/data/cifar10_test_head20.bin.

The foolbox wheel (MIT) ships the first 20 CIFAR-10 test images as
lossless PNGs named ``cifar10_<index>_<label>.png``; this packs them into
the standard CIFAR-10 binary record layout.

    pip download foolbox==3.3.4 --no-deps -d /tmp/fb
    python scripts/make_cifar_fixture.py /tmp/fb/foolbox-3.3.4-py3-none-any.whl
"""

import io
import re
import sys
import zipfile
from pathlib import Path

import numpy as np
from PIL import Image

from blockcrack.dataio import encode_cifar10

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "cifar10_test_head20.bin"


def main(wheel: str) -> None:
    entries = []
    with zipfile.ZipFile(wheel) as z:
        for name in z.namelist():
            m = re.search(r"/cifar10_(\d+)_(\d)\.png$", name)
            if m:
                img = np.asarray(Image.open(io.BytesIO(z.read(name))).convert("RGB"))
                entries.append((int(m.group(1)), int(m.group(2)), img))
    entries.sort()
    OUT.write_bytes(encode_cifar10([e[2] for e in entries], [e[1] for e in entries]))
    print(f"wrote {len(entries)} records to {OUT}")


if __name__ == "__main__":
    main(sys.argv[1])
