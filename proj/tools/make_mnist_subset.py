#!/usr/bin/env python3
"""Build a 10k-sample MNIST subset in IDX format from the `mnist` npm package.

The npm package (https://www.npmjs.com/package/mnist, MIT) ships 10,000 MNIST
digits as per-class JSON arrays of pixel/255 values rounded to three decimals.
Rounding error (<= 5e-4) times 255 stays below 0.5, so the original bytes are
recovered exactly. The samples are shuffled with a fixed seed and split
8000/2000 into train/t10k files.

usage: npm pack mnist && tar xzf mnist-1.1.0.tgz
       python3 tools/make_mnist_subset.py package/src/digits data/mnist
"""
import gzip
import json
import os
import struct
import sys

import numpy as np


def write_gz(path, payload):
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as gz:
            gz.write(payload)


def idx_images(images):
    n = images.shape[0]
    return struct.pack(">IIII", 0x00000803, n, 28, 28) + images.astype(np.uint8).tobytes()


def idx_labels(labels):
    return struct.pack(">II", 0x00000801, labels.shape[0]) + labels.astype(np.uint8).tobytes()


def main(src, dst, n_train=8000):
    images, labels = [], []
    for digit in range(10):
        with open(os.path.join(src, f"{digit}.json")) as f:
            data = np.asarray(json.load(f)["data"], dtype=np.float64).reshape(-1, 784)
        images.append(np.rint(data * 255.0))
        labels.append(np.full(data.shape[0], digit))
    images = np.vstack(images)
    labels = np.concatenate(labels)
    assert images.min() >= 0 and images.max() <= 255
    order = np.random.default_rng(0).permutation(images.shape[0])
    images, labels = images[order], labels[order]
    os.makedirs(dst, exist_ok=True)
    write_gz(os.path.join(dst, "train-images-idx3-ubyte.gz"), idx_images(images[:n_train]))
    write_gz(os.path.join(dst, "train-labels-idx1-ubyte.gz"), idx_labels(labels[:n_train]))
    write_gz(os.path.join(dst, "t10k-images-idx3-ubyte.gz"), idx_images(images[n_train:]))
    write_gz(os.path.join(dst, "t10k-labels-idx1-ubyte.gz"), idx_labels(labels[n_train:]))
    print(f"wrote {n_train} train / {images.shape[0] - n_train} test samples to {dst}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
