"""Dataset sources and vertical partitioning across clients."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import partition_sizes
from .errors import MalformedRow, NonNumericFeature


@dataclass(frozen=True)
class SyntheticParams:
    n_samples: int = 1000
    n_features: int = 20
    n_classes: int = 2
    margin: float = 0.5
    noise: float = 0.0
    balanced: bool = True


@dataclass(frozen=True)
class DatasetSpec:
    source: str = "synthetic"  # "synthetic" or "csv"
    synthetic: SyntheticParams = SyntheticParams()
    csv_path: str | None = None
    label_column: str | None = None
    task: str = "classification"
    train_fraction: float = 0.7


@dataclass
class PartitionedDataset:
    train_blocks: list[np.ndarray]
    test_blocks: list[np.ndarray]
    y_train: np.ndarray
    y_test: np.ndarray
    blocks: list[tuple[int, int]]
    n_classes: int  # 0 for regression

    @property
    def n_clients(self) -> int:
        return len(self.blocks)

    @property
    def feature_sizes(self) -> list[int]:
        return [b - a for a, b in self.blocks]


def partition_features(d: int, n_clients: int) -> list[tuple[int, int]]:
    """Contiguous, order-preserving ``[start, stop)`` blocks covering all ``d`` features."""
    if not 1 <= n_clients <= d:
        raise ValueError(f"cannot split {d} features over {n_clients} clients")
    out, start = [], 0
    for size in partition_sizes(d, n_clients):
        out.append((start, start + size))
        start += size
    return out


def fit_minmax(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return X.min(axis=0), X.max(axis=0)


def apply_minmax(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Map to [-1, 1] with train-split statistics; constant features map to 0."""
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = 2.0 * (X - lo) / safe - 1.0
    out[:, span <= 0] = 0.0
    return np.clip(out, -1.0, 1.0)


def generate_synthetic(params: SyntheticParams, seed) -> tuple[np.ndarray, np.ndarray]:
    """Points in [-1, 1]^d labelled by the argmax of random linear scores.

    Points whose best score does not beat the runner-up by ``margin`` are
    rejected (for two classes that is a slab of half-width ``margin/2``
    around a random hyperplane). A fraction ``noise`` of labels is flipped.
    """
    rng = np.random.default_rng(seed)
    d, C = params.n_features, params.n_classes
    directions = rng.normal(size=(d, C))
    directions /= np.linalg.norm(directions, axis=0, keepdims=True)
    if C == 2:
        directions[:, 1] = -directions[:, 0]
    quota = None
    if params.balanced:
        base, rem = divmod(params.n_samples, C)
        quota = np.array([base + (1 if c < rem else 0) for c in range(C)])
    xs, ys = [], []
    counts = np.zeros(C, dtype=int)
    while len(ys) < params.n_samples:
        cand = rng.uniform(-1.0, 1.0, size=(4 * params.n_samples, d))
        scores = cand @ directions
        top2 = np.sort(scores, axis=1)[:, -2:]
        keep = (top2[:, 1] - top2[:, 0]) >= params.margin
        for x, label in zip(cand[keep], scores[keep].argmax(axis=1)):
            if quota is not None and counts[label] >= quota[label]:
                continue
            xs.append(x)
            ys.append(label)
            counts[label] += 1
            if len(ys) == params.n_samples:
                break
    X, y = np.array(xs), np.array(ys, dtype=np.int64)
    if params.noise > 0:
        flip = rng.random(len(y)) < params.noise
        y[flip] = (y[flip] + rng.integers(1, C, size=flip.sum())) % C
    order = rng.permutation(len(y))
    return X[order], y[order]


def read_csv(path: str | Path, label_column: str) -> tuple[np.ndarray, list[str], list[str]]:
    """Numeric feature matrix, raw label strings, and feature names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow("file is empty", 0) from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise MalformedRow(f"label column {label_column!r} not in header", 0)
        li = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != li]
        rows, labels = [], []
        for rowno, row in enumerate(reader, 1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(f"expected {len(header)} fields, got {len(row)}", rowno)
            feats = []
            for i, cell in enumerate(row):
                if i == li:
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise NonNumericFeature(f"column {header[i]!r}: {cell!r} is not numeric", rowno) from None
            rows.append(feats)
            labels.append(row[li].strip())
    if not rows:
        raise MalformedRow("no data rows", 0)
    return np.array(rows, dtype=np.float64), labels, names


def encode_labels(labels: list[str], task: str) -> tuple[np.ndarray, int]:
    if task == "regression":
        try:
            return np.array([float(v) for v in labels]), 0
        except ValueError as exc:
            raise MalformedRow(f"regression label is not numeric: {exc}") from None
    classes = sorted(set(labels), key=lambda v: (_numeric_key(v), v))
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[v] for v in labels], dtype=np.int64), len(classes)


def _numeric_key(v: str) -> float:
    try:
        return float(v)
    except ValueError:
        return float("inf")


def split_and_partition(
    X: np.ndarray,
    y: np.ndarray,
    n_clients: int,
    train_fraction: float,
    seed,
    n_classes: int,
) -> PartitionedDataset:
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    n_train = int(round(train_fraction * len(y)))
    n_train = min(max(n_train, 1), len(y) - 1)
    tr, te = order[:n_train], order[n_train:]
    lo, hi = fit_minmax(X[tr])
    Xtr, Xte = apply_minmax(X[tr], lo, hi), apply_minmax(X[te], lo, hi)
    blocks = partition_features(X.shape[1], n_clients)
    return PartitionedDataset(
        [Xtr[:, a:b] for a, b in blocks],
        [Xte[:, a:b] for a, b in blocks],
        y[tr],
        y[te],
        blocks,
        n_classes,
    )


def ingest_csv(spec: DatasetSpec, n_clients: int, seed) -> PartitionedDataset:
    X, raw, _ = read_csv(spec.csv_path, spec.label_column)
    y, n_classes = encode_labels(raw, spec.task)
    return split_and_partition(X, y, n_clients, spec.train_fraction, seed, n_classes)


def build_dataset(spec: DatasetSpec, n_clients: int, seed: int) -> PartitionedDataset:
    """Load or generate the data and split it deterministically from ``seed``."""
    gen_seed = np.random.SeedSequence([seed, 0])
    split_seed = np.random.SeedSequence([seed, 1])
    if spec.source == "csv":
        return ingest_csv(spec, n_clients, split_seed)
    X, y = generate_synthetic(spec.synthetic, gen_seed)
    return split_and_partition(X, y, n_clients, spec.train_fraction, split_seed, spec.synthetic.n_classes)
