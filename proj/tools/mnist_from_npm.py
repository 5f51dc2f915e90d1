#!/usr/bin/env python3
"""Convert the digits bundled in the npm `mnist` package to gzipped IDX files.

Usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 tools/mnist_from_npm.py package/src/digits data/mnist10k
"""
import argparse
import gzip
import json
import random
import struct
from pathlib import Path

SIDE = 28


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits", type=Path, help="directory holding 0.json .. 9.json")
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    samples = []
    for label in range(10):
        flat = json.loads((args.digits / f"{label}.json").read_text())["data"]
        assert len(flat) % (SIDE * SIDE) == 0
        for i in range(0, len(flat), SIDE * SIDE):
            pixels = bytes(min(255, round(v * 255)) for v in flat[i:i + SIDE * SIDE])
            samples.append((pixels, label))
    random.Random(args.seed).shuffle(samples)

    args.out.mkdir(parents=True, exist_ok=True)
    n = len(samples)
    with gzip.GzipFile(args.out / "images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, SIDE, SIDE))
        for pixels, _ in samples:
            f.write(pixels)
    with gzip.GzipFile(args.out / "labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(label for _, label in samples))
    print(f"{n} samples -> {args.out}")


if __name__ == "__main__":
    main()
