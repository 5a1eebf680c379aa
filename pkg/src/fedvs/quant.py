"""Fixed-point bridges between the reals and F_p.

Data is rounded to nearest (half up) at scale ``2**l_x``; model weights are
stochastically rounded at scale ``2**l_w``.  Signed integers are embedded by
the shift ``z -> z mod p`` and recovered by splitting F_p at ``(p-1)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable

import numpy as np

from .errors import NonFiniteInput, OverflowBoundViolation, OverflowRange
from .field import PrimeField


@dataclass(frozen=True)
class QuantConfig:
    l_x: int = 16
    l_w: int = 16
    field: PrimeField = dc_field(default_factory=PrimeField)
    n_clients: int = 1
    # Declared magnitude ranges used by the static overflow bound.
    x_max: float = 1.0
    w_max: float = 1024.0

    def __post_init__(self):
        if self.l_x < 0 or self.l_w < 0:
            raise ValueError("scaling exponents must be non-negative")
        if self.n_clients < 1:
            raise ValueError("n_clients must be positive")
        if self.x_max < 0 or self.w_max < 0:
            raise ValueError("declared ranges must be non-negative")

    @property
    def scale(self) -> int:
        return 1 << (self.l_x + self.l_w)

    def sum_bound(self, dims: Iterable[tuple[int, int]]) -> int:
        """Largest possible |decoded entry| for clients with (input width, degree) ``dims``.

        Each product term is ``|Round(2^l_x x^i)| * |Round_stoc(2^l_w w)|``,
        bounded by ``ceil(2^l_x x_max^i) * ceil(2^l_w w_max)``.
        """
        wq = int(np.ceil((1 << self.l_w) * self.w_max))
        total = 0
        for width, degree in dims:
            for i in range(1, degree + 1):
                xq = int(np.ceil((1 << self.l_x) * self.x_max**i))
                total += width * xq * wq
        return total

    def check_overflow(self, dims: Iterable[tuple[int, int]]) -> int:
        dims = list(dims)
        bound = self.sum_bound(dims)
        if bound >= self.field.half:
            raise OverflowBoundViolation(
                f"embedding sums may reach {bound}, not below (p-1)/2 = {self.field.half}; "
                "lower l_x/l_w or w_max, or use a larger prime"
            )
        return bound


def _finite(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("input contains NaN or infinity")
    return arr


def round_nearest(x):
    """Round to nearest with halves going up: ``floor(x) + [x - floor(x) >= 0.5]``."""
    arr = _finite(x)
    lo = np.floor(arr)
    out = (lo + (arr - lo >= 0.5)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def round_stochastic(x, rng: np.random.Generator):
    """Unbiased rounding: up with probability equal to the fractional part."""
    arr = _finite(x)
    lo = np.floor(arr)
    frac = arr - lo
    up = rng.random(arr.shape) < frac
    out = (lo + up).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def shift_to_field(z, field: PrimeField):
    """Embed signed integers in F_p.

    The accepted window is ``-(p-1)/2 <= z < (p-1)/2``, exactly the range that
    :func:`lift_signed` maps back without ambiguity.
    """
    half = field.half
    if np.ndim(z) == 0:
        z = int(z)
        if not -half <= z < half:
            raise OverflowRange(f"{z} outside [-{half}, {half}) for p={field.p}")
        return z % field.p
    arr = np.asarray(z)
    if arr.dtype != object:
        arr = arr.astype(np.int64)
    if arr.size and (arr.min() < -half or arr.max() >= half):
        raise OverflowRange(f"values outside [-{half}, {half}) for p={field.p}")
    return arr.astype(object) % field.p


def lift_signed(x, field: PrimeField):
    """Inverse of :func:`shift_to_field`: residues at or above (p-1)/2 become negative."""
    if np.ndim(x) == 0:
        x = int(x)
        return x - field.p if x >= field.half else x
    arr = np.asarray(x, dtype=object)
    return np.where(arr >= field.half, arr - field.p, arr)


def quantize_data(X_hat, cfg: QuantConfig) -> np.ndarray:
    return shift_to_field(round_nearest(np.ldexp(_finite(X_hat), cfg.l_x)), cfg.field)


def quantize_model(W, cfg: QuantConfig, rng: np.random.Generator) -> np.ndarray:
    return shift_to_field(round_stochastic(np.ldexp(_finite(W), cfg.l_w), rng), cfg.field)


def dequantize_embedding(H_bar, cfg: QuantConfig) -> np.ndarray:
    """Map a decoded embedding sum back to the real-valued average embedding."""
    signed = np.asarray(lift_signed(H_bar, cfg.field), dtype=object)
    return np.ldexp(signed.astype(np.float64), -(cfg.l_x + cfg.l_w)) / cfg.n_clients


def fixed_point(x, bits: int) -> np.ndarray:
    """Real value of the deterministic fixed-point image ``2^-bits Round(2^bits x)``."""
    return np.ldexp(np.asarray(round_nearest(np.ldexp(_finite(x), bits)), dtype=np.float64), -bits)
