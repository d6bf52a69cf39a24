#!/usr/bin/env python3
# Copyright 2026 The nnl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# 	http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert downsampled ImageNet 32x32 pickle batches into the RAWI format.

    python3 tools/imagenet32_to_raw.py train_data_batch_1 ... -o imagenet32_train.rawi

Each input batch is a pickled dict with 'data' (N x 3072 uint8, planar RGB)
and 'labels' (1-based class ids). Labels are written zero-based.
"""

import argparse
import pickle
import struct

import numpy as np


def load_batch(path):
    with open(path, "rb") as f:
        batch = pickle.load(f, encoding="latin1")
    data = np.asarray(batch["data"], dtype=np.uint8).reshape(-1, 3072)
    labels = np.asarray(batch["labels"], dtype=np.int64) - 1
    if labels.min() < 0:
        raise ValueError(f"{path}: labels must be 1-based")
    return data, labels


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("batches", nargs="+")
    parser.add_argument("-o", "--out", required=True)
    parser.add_argument("--classes", type=int, default=1000)
    args = parser.parse_args()

    parts = [load_batch(p) for p in args.batches]
    data = np.concatenate([d for d, _ in parts])
    labels = np.concatenate([l for _, l in parts])
    if labels.max() >= args.classes:
        raise SystemExit(f"label {labels.max()} exceeds --classes {args.classes}")

    label_bytes = 2 if args.classes > 256 else 1
    dtype = np.dtype("<u2") if label_bytes == 2 else np.dtype("u1")
    records = np.empty((len(data), label_bytes + 3072), dtype=np.uint8)
    records[:, :label_bytes] = labels.astype(dtype).view(np.uint8).reshape(-1, label_bytes)
    records[:, label_bytes:] = data
    with open(args.out, "wb") as f:
        f.write(b"RAWI")
        f.write(struct.pack("<IIB", len(data), args.classes, label_bytes))
        f.write(records.tobytes())
    print(f"wrote {args.out} ({len(data)} images)")


if __name__ == "__main__":
    main()
