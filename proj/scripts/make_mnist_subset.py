#!/usr/bin/env python3
"""Write the 5000-image MNIST subset shipped with mlxtend as IDX files.

Usage: pip download mlxtend --no-deps -d /tmp/mlx
       python3 -m zipfile -e /tmp/mlx/mlxtend-*.whl /tmp/mlx
       python3 scripts/make_mnist_subset.py /tmp/mlx/mlxtend/data/data/mnist_5k.csv.gz data/mnist5k
"""
import gzip
import struct
import sys
from pathlib import Path


def main(src: str, out_dir: str) -> None:
    rows = []
    with gzip.open(src, "rt") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(float(v)) for v in line.split(",")])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = len(rows)
    with open(out / "images-idx3-ubyte", "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for r in rows:
            fh.write(bytes(r[:784]))
    with open(out / "labels-idx1-ubyte", "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, n))
        fh.write(bytes(r[784] for r in rows))
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
