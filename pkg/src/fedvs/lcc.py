"""Lagrange coded computing: threshold sharing of data segments and models.

A secret is placed at the ``betas`` together with ``T`` uniform masks; the
unique interpolant of degree ``K+T-1`` is then evaluated at every holder's
``alpha``.  Products of two such polynomials have degree ``2(K+T-1)`` and
can be decoded from any ``2(K+T-1)+1`` evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientResponders, ShapeMismatch
from .field import EvalPoints, PrimeField, lagrange_matrix, lagrange_coeffs, combine


@dataclass(frozen=True)
class LccConfig:
    K: int
    T: int
    N: int
    field: PrimeField
    points: EvalPoints | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("partition parameter K must be at least 1")
        if self.T < 0:
            raise ValueError("privacy parameter T must be non-negative")
        if self.N < self.recovery_threshold:
            raise ValueError(
                f"N={self.N} < 2(K+T-1)+1 = {self.recovery_threshold}: "
                "no responder set could ever decode"
            )
        if self.points is None:
            object.__setattr__(self, "points", EvalPoints.default(self.K + self.T, self.N, self.field))
        if len(self.points.betas) != self.K + self.T or len(self.points.alphas) != self.N:
            raise ValueError("evaluation point counts must be K+T betas and N alphas")
        self.points.check(self.field)

    @property
    def recovery_threshold(self) -> int:
        return 2 * (self.K + self.T - 1) + 1

    @property
    def straggler_tolerance(self) -> int:
        return self.N - self.recovery_threshold

    @property
    def alphas(self) -> tuple[int, ...]:
        return self.points.alphas

    @property
    def betas(self) -> tuple[int, ...]:
        return self.points.betas

    def encoding_matrix(self, targets: Sequence[int] | None = None) -> np.ndarray:
        """Lagrange weights mapping the K+T beta values to ``targets`` (default: alphas)."""
        return lagrange_matrix(self.betas, self.alphas if targets is None else targets, self.field)


def split_segments(X: np.ndarray, K: int, axis: int = 0) -> list[np.ndarray]:
    """Partition ``X`` into ``K`` equal contiguous blocks along ``axis``."""
    if X.shape[axis] % K:
        raise ShapeMismatch(f"{X.shape[axis]} rows do not split into {K} segments")
    return np.split(X, K, axis=axis)


def lagrange_encode(
    values: Sequence[np.ndarray],
    cfg: LccConfig,
    targets: Sequence[int] | None = None,
) -> list[np.ndarray]:
    """Evaluate at ``targets`` the interpolant taking ``values[k]`` at ``betas[k]``."""
    if len(values) != cfg.K + cfg.T:
        raise ShapeMismatch(f"expected {cfg.K + cfg.T} values, got {len(values)}")
    shape = np.shape(values[0])
    if any(np.shape(v) != shape for v in values):
        raise ShapeMismatch("all encoded values must share a shape")
    A = cfg.encoding_matrix(targets)
    return [combine(row, values, cfg.field) for row in A]


def _masked(secrets: list[np.ndarray], cfg: LccConfig, rng: np.random.Generator) -> list[np.ndarray]:
    shape = np.shape(secrets[0])
    masks = [cfg.field.random(rng, shape) for _ in range(cfg.T)]
    return secrets + masks


def encode_data(
    segments: Sequence[np.ndarray], cfg: LccConfig, rng: np.random.Generator
) -> list[np.ndarray]:
    """Share K data segments; returns one share per holder, in alpha order."""
    segments = [np.asarray(s, dtype=object) for s in segments]
    if len(segments) != cfg.K:
        raise ShapeMismatch(f"expected {cfg.K} segments, got {len(segments)}")
    shape = segments[0].shape
    if any(s.shape != shape for s in segments):
        raise ShapeMismatch("data segments must be identically shaped")
    return lagrange_encode(_masked(segments, cfg, rng), cfg)


def encode_model(W_bar: np.ndarray, cfg: LccConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Share a quantized model, replicated at all K data points."""
    W_bar = np.asarray(W_bar, dtype=object)
    return lagrange_encode(_masked([W_bar] * cfg.K, cfg, rng), cfg)


def decode_sum(
    responder_alphas: Sequence[int],
    responses: Sequence[np.ndarray],
    cfg: LccConfig,
) -> list[np.ndarray]:
    """Recover the K segment values of the composite polynomial at the betas.

    Only the first ``recovery_threshold`` responders (in the given order) are
    used, so any threshold-sized subset yields identical output.
    """
    R = cfg.recovery_threshold
    if len(responder_alphas) != len(responses):
        raise ShapeMismatch(f"{len(responder_alphas)} alphas but {len(responses)} responses")
    if len(responses) < R:
        raise InsufficientResponders(f"{len(responses)} responders, need {R}")
    xs = list(responder_alphas[:R])
    ys = [np.asarray(r, dtype=object) for r in responses[:R]]
    if any(y.shape != ys[0].shape for y in ys):
        raise ShapeMismatch("responses must share a shape")
    out = []
    for beta in cfg.betas[: cfg.K]:
        out.append(combine(lagrange_coeffs(xs, beta, cfg.field), ys, cfg.field))
    return out
