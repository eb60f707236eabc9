"""Writes the sklearn 8x8 digits as IDX files (u8 pixels, fixed permutation)."""
import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_idx(path, magic, dims, payload):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    images = np.minimum(255, digits.images * 16).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    order = np.random.RandomState(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]

    n, h, w = images.shape
    write_idx(out / "digits-images.idx", 0x00000803, (n, h, w), images)
    write_idx(out / "digits-labels.idx", 0x00000801, (n,), labels)
    print(f"wrote {n} digits to {out}")


if __name__ == "__main__":
    main()
