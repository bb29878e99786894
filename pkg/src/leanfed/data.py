"""Datasets and Dirichlet label-skew partitioning across clients.

A small lower concentration ``gamma`` gives each client a skewed label mix;
``gamma = 1e3`` is used as the near-iid setting.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .rng import derive_rng


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    split_tag: str = "train"

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ConfigError("features must be a 2-D matrix")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ConfigError(f"dataset must have n >= 1 and d >= 1, got {self.features.shape}")
        if self.num_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.num_classes}")
        if self.labels.shape != (n,):
            raise ConfigError("labels must be a vector with one entry per row")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ConfigError("label out of range [0, num_classes)")
        if not np.all(np.isfinite(self.features)):
            raise ConfigError("features contain non-finite values")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PartitionConfig:
    num_clients: int
    gamma: float
    min_shard_size: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.num_clients < 1:
            raise ConfigError(f"num_clients must be >= 1, got {self.num_clients}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.min_shard_size < 1:
            raise ConfigError(f"min_shard_size must be >= 1, got {self.min_shard_size}")


@dataclass(frozen=True)
class ClientShard:
    client_id: int
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def generate_synthetic(
    num_classes: int = 10,
    dim: int = 32,
    n_train: int = 10000,
    n_test: int = 2000,
    class_separation: float = 2.5,
    seed: int = 0,
) -> tuple[Dataset, Dataset]:
    """Gaussian class blobs with unit isotropic noise.

    Class means sit at ``class_separation`` times a set of unit directions
    (orthonormal when ``num_classes <= dim``). Labels are balanced to within
    one sample per class in each split.
    """
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    if dim < 2:
        raise ConfigError(f"dim must be >= 2, got {dim}")
    if n_train < 1 or n_test < 1:
        raise ConfigError("n_train and n_test must be positive")
    if not class_separation > 0:
        raise ConfigError(f"class_separation must be > 0, got {class_separation}")

    rng = derive_rng(seed, "synthetic")
    raw = rng.standard_normal((dim, num_classes))
    if num_classes <= dim:
        q, _ = np.linalg.qr(raw)
        directions = q[:, :num_classes].T
    else:
        directions = (raw / np.linalg.norm(raw, axis=0)).T
    means = class_separation * directions

    def draw(n, tag):
        labels = np.arange(n, dtype=np.int64) % num_classes
        labels = labels[rng.permutation(n)]
        features = means[labels] + rng.standard_normal((n, dim))
        return Dataset(features, labels, num_classes, tag)

    return draw(n_train, "train"), draw(n_test, "test")


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_csv(path, split_tag: str = "train") -> Dataset:
    """Read rows of ``f_1,...,f_d,label``; a non-numeric first row is a header.

    Labels are remapped to ``0..C-1`` in sorted order of the original values.
    """
    path = Path(path)
    rows: list[tuple[int, list[str]]] = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            rows.append((lineno, [cell.strip() for cell in row]))
    if rows and not all(_is_number(cell) for cell in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path}: no data rows")

    width = len(rows[0][1])
    if width < 2:
        raise ParseError(f"{path}: line {rows[0][0]}: need at least one feature and a label")
    features = np.empty((len(rows), width - 1))
    raw_labels = []
    for i, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
        try:
            features[i] = [float(cell) for cell in row[:-1]]
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-numeric feature") from None
        if not np.all(np.isfinite(features[i])):
            raise ParseError(f"{path}: line {lineno}: non-finite feature")
        raw_labels.append(row[-1])

    if all(_is_number(lab) for lab in raw_labels):
        keyed = [float(lab) for lab in raw_labels]
    else:
        keyed = raw_labels
    classes = sorted(set(keyed))
    if len(classes) < 2:
        raise ParseError(f"{path}: need at least 2 distinct labels, got {len(classes)}")
    lookup = {c: i for i, c in enumerate(classes)}
    labels = np.array([lookup[k] for k in keyed], dtype=np.int64)
    return Dataset(features, labels, len(classes), split_tag)


def largest_remainder(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` with each within 1 of ``p * total``.

    Leftover units go to the largest fractional parts; ties go to the lower index.
    """
    quotas = np.asarray(proportions, dtype=float) * total
    counts = np.floor(quotas).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def partition_dirichlet(train: Dataset, config: PartitionConfig) -> list[ClientShard]:
    n, num_clients = train.n, config.num_clients
    if num_clients * config.min_shard_size > n:
        raise ConfigError(
            f"cannot give {num_clients} clients at least {config.min_shard_size} samples from {n}"
        )
    rng = derive_rng(config.seed, "partition")
    buckets: list[list[int]] = [[] for _ in range(num_clients)]
    for c in range(train.num_classes):
        members = np.flatnonzero(train.labels == c)
        if len(members) == 0:
            continue
        p = rng.dirichlet(np.full(num_clients, config.gamma))
        members = members[rng.permutation(len(members))]
        counts = largest_remainder(p, len(members))
        start = 0
        for client, count in enumerate(counts):
            buckets[client].extend(members[start:start + count].tolist())
            start += count

    # top up undersized shards with random samples from the largest one
    sizes = [len(b) for b in buckets]
    while min(sizes) < config.min_shard_size:
        needy = int(np.argmin(sizes))
        donor = int(np.argmax(sizes))
        pick = int(rng.integers(len(buckets[donor])))
        buckets[needy].append(buckets[donor].pop(pick))
        sizes[needy] += 1
        sizes[donor] -= 1

    return [
        ClientShard(client, np.array(sorted(b), dtype=np.int64))
        for client, b in enumerate(buckets)
    ]


def label_histogram(shard: ClientShard, train: Dataset) -> np.ndarray:
    if len(shard) == 0:
        raise ValueError(f"shard {shard.client_id} is empty")
    counts = np.bincount(train.labels[shard.indices], minlength=train.num_classes)
    return counts / counts.sum()


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def mean_tv_to_global(shards: list[ClientShard], train: Dataset) -> float:
    """Average total-variation distance of client label mixes to the global one."""
    global_hist = np.bincount(train.labels, minlength=train.num_classes) / train.n
    return math.fsum(tv_distance(label_histogram(s, train), global_hist) for s in shards) / len(shards)
