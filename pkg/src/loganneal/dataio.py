"""Synthetic datasets, deterministic batching, and the CIFAR-10 binary layout.

Everything here is seeded through NumPy's PCG64 generator, so identical
seeds reproduce identical datasets, splits, and batch orders bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from loganneal.micronet import Batch

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes
CIFAR_PIXEL_BYTES = 3072
CIFAR_MAX_LABEL = 9


class CifarFormatError(ValueError):
    """Malformed CIFAR-10 binary data; ``offset`` is the failing byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = "dataset"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError("features must be a non-empty (N, d) matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must be one integer per row")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError(f"labels must lie in [0, {self.n_classes})")

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class BlobSpec:
    classes: int = 2
    per_class: int = 500
    dim: int = 2
    center_separation: float = 4.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2 or self.per_class < 1 or self.dim < 1:
            raise ValueError("need classes >= 2, per_class >= 1, dim >= 1")
        if self.center_separation <= 0.0 or self.noise_sigma <= 0.0:
            raise ValueError("separation and sigma must be positive")


def blob_centers(spec: BlobSpec) -> np.ndarray:
    """Deterministic class centers: centered simplex vertices embedded into
    the feature space (radial shells once classes outnumber simplex
    directions) and scaled so the closest pair sits exactly
    ``center_separation`` apart."""
    k, d = spec.classes, spec.dim
    m = min(k, d + 1)  # a regular simplex in R^d has at most d+1 vertices
    verts = (np.eye(m) - 1.0 / m)[:, :d]
    if verts.shape[1] < d:
        verts = np.hstack([verts, np.zeros((m, d - verts.shape[1]))])
    centers = np.array([verts[i % m] * (1 + i // m) for i in range(k)])
    dists = [
        np.linalg.norm(centers[i] - centers[j])
        for i in range(k)
        for j in range(i + 1, k)
    ]
    return centers * (spec.center_separation / min(dists))


def gen_blobs(spec: BlobSpec) -> Dataset:
    """Gaussian blobs around simplex-spread centers, deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    centers = blob_centers(spec)
    feats = np.vstack(
        [
            centers[k] + spec.noise_sigma * rng.standard_normal((spec.per_class, spec.dim))
            for k in range(spec.classes)
        ]
    )
    labels = np.repeat(np.arange(spec.classes), spec.per_class)
    return Dataset(feats, labels, n_classes=spec.classes, name="blobs")


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded permutation split; |test| = round(N * fraction)."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(data)
    n_test = int(round(n * test_fraction))
    if n_test == 0 or n_test == n:
        raise ValueError(
            f"split of {n} rows at fraction {test_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    mk = lambda idx, tag: Dataset(
        data.features[idx], data.labels[idx], data.n_classes, f"{data.name}-{tag}"
    )
    return mk(train_idx, "train"), mk(test_idx, "test")


def normalize(data: Dataset) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Per-feature standardization to mean 0, std 1 (population std).
    Near-constant features (std < 1e-12) are centered only."""
    if len(data) < 2:
        raise ValueError("need at least two rows to normalize")
    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    scale = np.where(std < 1e-12, 1.0, std)
    feats = (data.features - mean) / scale
    return Dataset(feats, data.labels, data.n_classes, data.name), mean, std


def batch_iter(data: Dataset, batch_size: int, epoch_seed: int) -> Iterator[Batch]:
    """Seeded shuffle of the full dataset into batches; the last batch may be
    short. Every row appears exactly once per epoch."""
    if not (1 <= batch_size <= len(data)):
        raise ValueError(f"batch_size must lie in [1, {len(data)}]")
    perm = np.random.default_rng(epoch_seed).permutation(len(data))
    for start in range(0, len(data), batch_size):
        idx = perm[start : start + batch_size]
        yield Batch(inputs=data.features[idx], labels=data.labels[idx])


# -- CIFAR-10 binary format ----------------------------------------------------


@dataclass(frozen=True)
class Cifar10Record:
    """One record of the binary distribution: a label byte followed by 3072
    pixel bytes (R, G, B planes, each 32x32 row-major)."""

    label: int
    pixels: bytes

    def __post_init__(self):
        if not (0 <= self.label <= CIFAR_MAX_LABEL):
            raise ValueError(f"label must lie in [0, {CIFAR_MAX_LABEL}]")
        if len(self.pixels) != CIFAR_PIXEL_BYTES:
            raise ValueError(f"pixels must be exactly {CIFAR_PIXEL_BYTES} bytes")


def parse_cifar10(raw: bytes) -> list[Cifar10Record]:
    if len(raw) % CIFAR_RECORD_BYTES != 0:
        offset = len(raw) - (len(raw) % CIFAR_RECORD_BYTES)
        raise CifarFormatError(
            f"truncated file: {len(raw)} bytes is not a multiple of "
            f"{CIFAR_RECORD_BYTES}",
            offset,
        )
    records = []
    for off in range(0, len(raw), CIFAR_RECORD_BYTES):
        label = raw[off]
        if label > CIFAR_MAX_LABEL:
            raise CifarFormatError(f"corrupt label byte {label}", off)
        records.append(Cifar10Record(label, raw[off + 1 : off + CIFAR_RECORD_BYTES]))
    return records


def serialize_cifar10(records: list[Cifar10Record]) -> bytes:
    return b"".join(bytes([r.label]) + r.pixels for r in records)


def cifar_to_dataset(records: list[Cifar10Record]) -> Dataset:
    """Flatten records into a Dataset with pixels scaled to [0, 1]."""
    if not records:
        raise ValueError("no records to convert")
    feats = np.frombuffer(
        b"".join(r.pixels for r in records), dtype=np.uint8
    ).reshape(len(records), CIFAR_PIXEL_BYTES)
    labels = np.array([r.label for r in records], dtype=np.int64)
    return Dataset(feats / 255.0, labels, n_classes=10, name="cifar10")


def write_dataset_csv(out: TextIO, data: Dataset) -> None:
    """CSV export: header ``label,f0,f1,...``, one row per sample."""
    cols = ",".join(f"f{i}" for i in range(data.features.shape[1]))
    out.write(f"label,{cols}\n")
    for label, row in zip(data.labels, data.features):
        values = ",".join(f"{v:.10g}" for v in row)
        out.write(f"{label},{values}\n")
