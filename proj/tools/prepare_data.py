#!/usr/bin/env python3
"""Build the digit datasets under data/ from two openly redistributed packages.

  mnist5k   5000 MNIST digits (28x28, n=784) from the mlxtend wheel
            (mlxtend/data/data/mnist_5k.csv.gz)
  digits16  5000 class-stratified MNIST digits from the npm `mnist` package,
            cropped to their 20x20 ink box and area-resampled to 16x16
            (n=256), the USPS image format

Usage:
  pip download --no-deps -d /tmp/pkgs mlxtend
  (cd /tmp/pkgs && npm pack mnist && tar xzf mnist-*.tgz)
  python3 tools/prepare_data.py /tmp/pkgs data
"""
import glob
import gzip
import io
import json
import os
import struct
import sys
import zipfile

import numpy as np


def write_idx(prefix, images, labels, rows, cols):
    with open(prefix + "-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), rows, cols))
        f.write(images.astype(np.uint8).tobytes())
    with open(prefix + "-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def mnist5k(pkgdir):
    wheel = sorted(glob.glob(os.path.join(pkgdir, "mlxtend-*.whl")))[-1]
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",")
    return table[:, :-1], table[:, -1].astype(int)


def resample16(img28):
    # The MNIST digit mass sits in the central 20x20 box; USPS digits fill
    # their 16x16 frame, so crop first and then area-average.
    crop = img28.reshape(28, 28)[4:24, 4:24]
    out = np.zeros((16, 16))
    edges = np.linspace(0, 20, 17)
    for r in range(16):
        for c in range(16):
            r0, r1, c0, c1 = edges[r], edges[r + 1], edges[c], edges[c + 1]
            acc = 0.0
            for i in range(int(r0), int(np.ceil(r1))):
                wr = min(r1, i + 1) - max(r0, i)
                for j in range(int(c0), int(np.ceil(c1))):
                    wc = min(c1, j + 1) - max(c0, j)
                    acc += wr * wc * crop[i, j]
            out[r, c] = acc / ((r1 - r0) * (c1 - c0))
    return out.reshape(-1)


def digits16(pkgdir, per_class=500):
    images, labels = [], []
    for digit in range(10):
        path = os.path.join(pkgdir, "package", "src", "digits", f"{digit}.json")
        flat = np.asarray(json.load(open(path))["data"], dtype=float)
        samples = flat.reshape(-1, 784)[:per_class]
        images.extend(resample16(s) for s in samples)
        labels.extend([digit] * len(samples))
    images = np.rint(np.clip(np.asarray(images), 0.0, 1.0) * 255.0)
    order = np.random.default_rng(20240101).permutation(len(labels))
    return images[order], np.asarray(labels)[order]


def main():
    pkgdir, outdir = sys.argv[1], sys.argv[2]
    os.makedirs(outdir, exist_ok=True)
    x, y = mnist5k(pkgdir)
    write_idx(os.path.join(outdir, "mnist5k"), x, y, 28, 28)
    x, y = digits16(pkgdir)
    write_idx(os.path.join(outdir, "digits16"), x, y, 16, 16)


if __name__ == "__main__":
    main()
