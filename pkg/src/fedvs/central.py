"""Server-side head: dense ReLU layers followed by a linear output layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LabelMismatch, ShapeMismatch

TASKS = ("classification", "regression")


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class CentralModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    task: str = "classification"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")

    @classmethod
    def init(
        cls,
        in_dim: int,
        hidden: tuple[int, ...],
        out_dim: int,
        rng: np.random.Generator,
        task: str = "classification",
    ) -> "CentralModel":
        dims = (in_dim, *hidden, out_dim)
        weights, biases = [], []
        for a, b in zip(dims[:-1], dims[1:]):
            # He-uniform for the ReLU stack.
            bound = np.sqrt(6.0 / a)
            weights.append(rng.uniform(-bound, bound, size=(a, b)))
            biases.append(np.zeros(b))
        return cls(weights, biases, task)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "CentralModel":
        return CentralModel([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.task)

    def forward(self, H: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        if H.ndim != 2 or H.shape[1] != self.in_dim:
            raise ShapeMismatch(f"embedding shape {H.shape} vs input width {self.in_dim}")
        acts = [H]
        a = H
        last = len(self.weights) - 1
        for j, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = z if j == last else np.maximum(z, 0.0)
            acts.append(a)
        return a, acts

    def predict(self, H: np.ndarray) -> np.ndarray:
        out, _ = self.forward(H)
        return out.argmax(axis=1) if self.task == "classification" else out

    def _targets(self, y: np.ndarray, rows: int) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[0] != rows:
            raise LabelMismatch(f"{y.shape[0]} labels for {rows} embedding rows")
        if self.task == "classification":
            if y.ndim != 1 or y.min(initial=0) < 0 or y.max(initial=0) >= self.out_dim:
                raise LabelMismatch(f"class labels must be integers in [0, {self.out_dim})")
            return y.astype(np.intp)
        y = y.reshape(rows, -1).astype(np.float64)
        if y.shape[1] != self.out_dim:
            raise LabelMismatch(f"targets have {y.shape[1]} columns, model outputs {self.out_dim}")
        return y

    def loss_and_grads(self, H: np.ndarray, y: np.ndarray, mask: np.ndarray | None = None):
        """Mean loss over unmasked rows, gradient w.r.t. ``H``, and parameter gradients.

        Classification uses softmax cross-entropy; regression uses the squared
        error summed over outputs.
        """
        out, acts = self.forward(H)
        rows = H.shape[0]
        y = self._targets(y, rows)
        w = np.ones(rows) if mask is None else np.asarray(mask, dtype=np.float64)
        count = w.sum()
        if count == 0:
            raise LabelMismatch("every row is masked out")
        if self.task == "classification":
            prob = _softmax(out)
            picked = np.clip(prob[np.arange(rows), y], 1e-300, None)
            loss = float(-(w * np.log(picked)).sum() / count)
            g = prob
            g[np.arange(rows), y] -= 1.0
        else:
            diff = out - y
            loss = float((w * (diff**2).sum(axis=1)).sum() / count)
            g = 2.0 * diff
        g = g * (w / count)[:, None]

        gW, gb = [None] * len(self.weights), [None] * len(self.weights)
        for j in range(len(self.weights) - 1, -1, -1):
            gW[j] = acts[j].T @ g
            gb[j] = g.sum(axis=0)
            g = g @ self.weights[j].T
            if j > 0:
                g = g * (acts[j] > 0)
        return loss, g, (gW, gb)

    def apply(self, grads, lr: float) -> None:
        gW, gb = grads
        for W, b, dW, db in zip(self.weights, self.biases, gW, gb):
            W -= lr * dW
            b -= lr * db

    def loss(self, H: np.ndarray, y: np.ndarray, mask: np.ndarray | None = None) -> float:
        return self.loss_and_grads(H, y, mask)[0]
