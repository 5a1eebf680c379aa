"""Client-side polynomial networks, in the reals and on field shares.

A client of degree ``D`` computes ``H = sum_i X^i @ W^i`` where ``X^i`` is the
entrywise i-th power of its (bias-augmented) features.  Powers are stored as a
``(D, rows, width)`` stack and layers as ``(D, width, h)`` so one batched
matmul followed by a sum over the first axis gives the embedding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import MissingShare, NonFiniteInput, ShapeMismatch
from .field import PrimeField

DataShareSet = dict[int, np.ndarray]
"""Source client id -> that source's data share held here, shape (D, M/K, width)."""

ModelShareSet = dict[int, np.ndarray]
"""Source client id -> that source's model share held here, shape (D, width, h)."""


@dataclass
class PreprocessedData:
    powers: np.ndarray  # (D, rows, width)

    @property
    def degree(self) -> int:
        return self.powers.shape[0]

    @property
    def width(self) -> int:
        return self.powers.shape[2]

    def rows(self, index) -> "PreprocessedData":
        return PreprocessedData(self.powers[:, index, :])


@dataclass
class PolyNetModel:
    layers: np.ndarray  # (D, width, h), float64

    def __post_init__(self):
        self.layers = np.asarray(self.layers, dtype=np.float64)
        if self.layers.ndim != 3:
            raise ShapeMismatch("layers must be stacked as (degree, width, h)")

    @property
    def degree(self) -> int:
        return self.layers.shape[0]

    @property
    def width(self) -> int:
        return self.layers.shape[1]

    @property
    def h(self) -> int:
        return self.layers.shape[2]

    @classmethod
    def init(cls, width: int, degree: int, h: int, rng: np.random.Generator) -> "PolyNetModel":
        bound = 1.0 / np.sqrt(width * degree)
        return cls(rng.uniform(-bound, bound, size=(degree, width, h)))

    @classmethod
    def zeros(cls, width: int, degree: int, h: int) -> "PolyNetModel":
        return cls(np.zeros((degree, width, h)))

    def copy(self) -> "PolyNetModel":
        return PolyNetModel(self.layers.copy())


def augment(X: np.ndarray) -> np.ndarray:
    """Append the constant-1 bias column."""
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def preprocess_powers(X: np.ndarray, D: int, bias: bool = True) -> PreprocessedData:
    """Entrywise powers 1..D of ``X``; the bias column is added before exponentiation."""
    if D < 1:
        raise ValueError("degree must be at least 1")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch("features must be a 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("features contain NaN or infinity")
    if bias:
        X = augment(X)
    return PreprocessedData(np.stack([X**i for i in range(1, D + 1)]))


def _check(data: PreprocessedData, model: PolyNetModel) -> None:
    if data.degree != model.degree or data.width != model.width:
        raise ShapeMismatch(
            f"data (D={data.degree}, width={data.width}) does not match "
            f"model (D={model.degree}, width={model.width})"
        )


def pn_forward(data: PreprocessedData, model: PolyNetModel) -> np.ndarray:
    _check(data, model)
    return np.einsum("ibd,idh->bh", data.powers, model.layers)


def pn_backward(data: PreprocessedData, grad_H: np.ndarray) -> np.ndarray:
    """Gradients ``(X^i)^T @ grad_H`` for every layer, stacked as (D, width, h)."""
    grad_H = np.asarray(grad_H, dtype=np.float64)
    if grad_H.ndim != 2 or grad_H.shape[0] != data.powers.shape[1]:
        raise ShapeMismatch(f"grad_H shape {grad_H.shape} vs {data.powers.shape[1]} rows")
    return np.einsum("ibd,bh->idh", data.powers, grad_H)


def field_forward(X_bar: np.ndarray, W_bar: np.ndarray, field: PrimeField) -> np.ndarray:
    """``sum_i X_bar^i @ W_bar^i`` over F_p for stacked field arrays."""
    if X_bar.shape[0] != W_bar.shape[0] or X_bar.shape[2] != W_bar.shape[1]:
        raise ShapeMismatch(f"share shapes {X_bar.shape} and {W_bar.shape} do not chain")
    return field.matmul(X_bar, W_bar).sum(axis=0) % field.p


def homomorphic_eval(
    data_shares: Mapping[int, np.ndarray],
    model_shares: Mapping[int, np.ndarray],
    batch_rows: Sequence[int],
    field: PrimeField,
    sources: Sequence[int] | None = None,
) -> np.ndarray:
    """Coded embedding ``sum_n sum_i X~^i_n[batch] @ W~^i_n`` at one holder.

    ``sources`` lists the clients whose shares must be present (defaults to
    every source seen in either share set).
    """
    if sources is None:
        sources = sorted(set(data_shares) | set(model_shares))
    rows = np.asarray(batch_rows, dtype=np.intp)
    acc = None
    for n in sources:
        if n not in data_shares:
            raise MissingShare(f"no data share from client {n}")
        if n not in model_shares:
            raise MissingShare(f"no model share from client {n}")
        X = data_shares[n]
        if rows.size and (rows.min() < 0 or rows.max() >= X.shape[1]):
            raise IndexError(f"batch rows outside the {X.shape[1]} coded rows")
        term = field_forward(X[:, rows, :], model_shares[n], field)
        acc = term if acc is None else acc + term
    if acc is None:
        raise MissingShare("no shares to evaluate")
    return acc % field.p
