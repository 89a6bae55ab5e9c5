#!/usr/bin/env python3
"""Build a 28x28 handwritten-digit IDX image corpus from scikit-learn's
bundled digits set.

The original MNIST archives need a network fetch, which offline machines
cannot do. This script upsamples the 1797 bundled 8x8 digit images to
28x28 and expands them with deterministic integer shifts into a corpus
with the same IDX layout, file names, and value range, so every consumer
of the real files works unchanged. The source images are split into
train/test pools before augmentation, so the two files never share a
source digit. No randomness is involved; repeated runs are identical.
"""

import argparse
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

# Fixed augmentation schedule: each full pass over the source pool applies
# the next (dy, dx) shift. (0, 0) comes first so the unshifted images are
# always included.
SHIFTS = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (2, 1), (-1, 2), (1, -2), (-2, -1), (2, -2)]


def bilinear_upscale(img: np.ndarray, size: int = 28) -> np.ndarray:
    """Upsample a square image to size x size with bilinear interpolation."""
    src = img.astype(np.float64)
    n = src.shape[0]
    pos = np.linspace(0.0, n - 1.0, size)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, n - 1)
    frac = pos - i0
    rows = src[i0, :] * (1.0 - frac)[:, None] + src[i1, :] * frac[:, None]
    return rows[:, i0] * (1.0 - frac)[None, :] + rows[:, i1] * frac[None, :]


def shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate by whole pixels, filling the vacated border with zeros."""
    out = np.zeros_like(img)
    h, w = img.shape
    out[max(dy, 0) : h + min(dy, 0), max(dx, 0) : w + min(dx, 0)] = img[
        max(-dy, 0) : h + min(-dy, 0), max(-dx, 0) : w + min(-dx, 0)
    ]
    return out


def expand(images: np.ndarray, count: int) -> np.ndarray:
    out = []
    rounds = 0
    while len(out) < count:
        if rounds >= len(SHIFTS):
            raise SystemExit(f"cannot expand {len(images)} images to {count}")
        dy, dx = SHIFTS[rounds]
        for img in images:
            if len(out) >= count:
                break
            out.append(shift(img, dy, dx) if (dy or dx) else img)
        rounds += 1
    return np.stack(out)


def write_idx(path: Path, images_u8: np.ndarray) -> None:
    n, h, w = images_u8.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, h, w))
        f.write(images_u8.tobytes())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/digits", help="output directory")
    ap.add_argument("--train-count", type=int, default=10000)
    ap.add_argument("--test-count", type=int, default=2000)
    ap.add_argument("--train-sources", type=int, default=1500,
                    help="source images reserved for the training file (rest go to test)")
    args = ap.parse_args()

    images = load_digits().images / 16.0  # native range is 0..16
    if not 0 < args.train_sources < len(images):
        raise SystemExit(f"--train-sources must be in 1..{len(images) - 1}")
    upscaled = np.stack([bilinear_upscale(im) for im in images])
    train = expand(upscaled[: args.train_sources], args.train_count)
    test = expand(upscaled[args.train_sources :], args.test_count)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, arr in (("train-images-idx3-ubyte", train), ("t10k-images-idx3-ubyte", test)):
        u8 = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
        write_idx(out / name, u8)
        print(f"wrote {out / name}: {u8.shape[0]} images {u8.shape[1]}x{u8.shape[2]}")


if __name__ == "__main__":
    main()
