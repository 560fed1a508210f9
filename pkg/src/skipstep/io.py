"""Batch serialization: the CSV container used for samples and datasets.

One row per sample, header x0..x{dim-1}, float cells written with repr so
a fixed batch always produces identical bytes.
"""

from __future__ import annotations

import csv

import numpy as np


def write_batch_csv(path, batch: np.ndarray) -> None:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ValueError(f"expected a (n, dim) batch, got shape {batch.shape}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(batch.shape[1])])
        for row in batch:
            writer.writerow([repr(float(v)) for v in row])


def read_batch_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return np.array([[float(cell) for cell in row] for row in rows[1:]], dtype=np.float64)
