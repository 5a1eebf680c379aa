"""Prime-field arithmetic and Lagrange interpolation over F_p.

Scalars are plain Python ints kept canonical in ``[0, p)``.  Matrices are
numpy arrays of ``dtype=object`` holding Python ints, so products of two
61-bit residues never overflow; :meth:`PrimeField.matmul` drops to int64
when the modulus is small enough for that to be exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DuplicatePoints, ShapeMismatch, ZeroInverse

MERSENNE_61 = (1 << 61) - 1

# Deterministic Miller-Rabin witnesses for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_INT64_MAX = (1 << 63) - 1


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeField:
    """The field F_p for a prime ``p < 2**63``."""

    __slots__ = ("p",)

    def __init__(self, p: int = MERSENNE_61):
        p = int(p)
        if p >= 1 << 63:
            raise ValueError(f"modulus {p} does not fit below 2**63")
        if not is_prime(p):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p

    def __repr__(self) -> str:
        return f"PrimeField({self.p})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(self.p)

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.p, self)

    @property
    def bits(self) -> int:
        return self.p.bit_length()

    @property
    def half(self) -> int:
        """``(p - 1) // 2``, the boundary between the positive and negative windows."""
        return (self.p - 1) // 2

    # Scalar and elementwise operations. Inputs may be ints or object arrays.

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a = int(a) % self.p
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return pow(a, self.p - 2, self.p)

    def div(self, a: int, b: int) -> int:
        return self.mul(int(a), self.inv(b))

    # Matrices

    def array(self, values) -> np.ndarray:
        """Canonical object array of residues from any integer array-like."""
        arr = np.asarray(values)
        if arr.dtype != object:
            if arr.dtype.kind not in "iub":
                raise TypeError(f"expected integer data, got {arr.dtype}")
            arr = arr.astype(object)
        return arr % self.p

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.int64).astype(object)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Uniform residues; numpy's bounded integer sampler rejects rather than folds."""
        return rng.integers(0, self.p, size=shape, dtype=np.int64).astype(object)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        inner = a.shape[-1]
        if (self.p - 1) ** 2 * max(inner, 1) <= _INT64_MAX:
            out = (a.astype(np.int64) @ b.astype(np.int64)) % self.p
            return out.astype(object)
        return (a @ b) % self.p


@dataclass(frozen=True)
class FieldElement:
    """A single residue bound to its field, with operator support."""

    value: int
    field: PrimeField

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("operands belong to different fields")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldElement(self.field.add(self.value, self._coerce(other)), self.field)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.field.sub(self.value, self._coerce(other)), self.field)

    def __rsub__(self, other):
        return FieldElement(self.field.sub(self._coerce(other), self.value), self.field)

    def __mul__(self, other):
        return FieldElement(self.field.mul(self.value, self._coerce(other)), self.field)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FieldElement(self.field.div(self.value, self._coerce(other)), self.field)

    def __neg__(self):
        return FieldElement(self.field.neg(self.value), self.field)

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field.inv(self.value), self.field)

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.value == other.value and self.field == other.field
        if isinstance(other, int):
            return self.value == other % self.field.p
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.value, self.field.p))

    def __int__(self) -> int:
        return self.value

    __index__ = __int__

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.p})"


@dataclass(frozen=True)
class EvalPoints:
    """Public interpolation points: ``betas`` carry secrets/masks, ``alphas`` index holders."""

    betas: tuple[int, ...]
    alphas: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(int(b) for b in self.betas))
        object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))
        if len(set(self.betas)) != len(self.betas):
            raise DuplicatePoints("beta points must be pairwise distinct")
        if len(set(self.alphas)) != len(self.alphas):
            raise DuplicatePoints("alpha points must be pairwise distinct")
        if set(self.betas) & set(self.alphas):
            raise DuplicatePoints("beta and alpha point sets must be disjoint")

    @classmethod
    def default(cls, n_betas: int, n_alphas: int, field: PrimeField) -> "EvalPoints":
        """``beta_k = k`` for k = 1..n_betas, ``alpha_n = n_betas + n``."""
        if n_betas + n_alphas >= field.p:
            raise ValueError(
                f"{n_betas + n_alphas} evaluation points do not fit in F_{field.p}"
            )
        betas = tuple(range(1, n_betas + 1))
        alphas = tuple(range(n_betas + 1, n_betas + n_alphas + 1))
        return cls(betas, alphas)

    def check(self, field: PrimeField) -> None:
        pts = [x % field.p for x in self.betas + self.alphas]
        if len(set(pts)) != len(pts):
            raise DuplicatePoints(f"evaluation points collide modulo {field.p}")


def lagrange_coeffs(points: Sequence[int], x: int, field: PrimeField) -> list[int]:
    """Weights ``c_k`` with ``f(x) = sum_k c_k f(points[k])`` for deg f < len(points)."""
    p = field.p
    pts = [int(v) % p for v in points]
    if not pts:
        raise ValueError("need at least one interpolation point")
    if len(set(pts)) != len(pts):
        raise DuplicatePoints("interpolation points must be pairwise distinct")
    x = int(x) % p
    if x in pts:
        return [1 if v == x else 0 for v in pts]
    coeffs = []
    for k, pk in enumerate(pts):
        num, den = 1, 1
        for ell, pl in enumerate(pts):
            if ell != k:
                num = num * (x - pl) % p
                den = den * (pk - pl) % p
        coeffs.append(num * pow(den, p - 2, p) % p)
    return coeffs


def lagrange_matrix(points: Sequence[int], targets: Sequence[int], field: PrimeField) -> np.ndarray:
    """Row ``j`` holds :func:`lagrange_coeffs` for ``targets[j]``."""
    rows = [lagrange_coeffs(points, t, field) for t in targets]
    return np.array(rows, dtype=object).reshape(len(targets), len(points))


def combine(coeffs: Sequence[int], values: Sequence[np.ndarray], field: PrimeField) -> np.ndarray:
    """``sum_k coeffs[k] * values[k]`` over F_p, entrywise."""
    acc = None
    for c, v in zip(coeffs, values):
        if c == 0:
            continue
        term = int(c) * v
        acc = term if acc is None else acc + term
    if acc is None:
        return field.zeros(np.shape(values[0]))
    return acc % field.p


def interpolate_eval(
    sample_xs: Sequence[int],
    sample_ys: Sequence[np.ndarray],
    target_x: int,
    field: PrimeField,
) -> np.ndarray:
    """Evaluate at ``target_x`` the entrywise interpolant through ``(sample_xs, sample_ys)``."""
    if len(sample_xs) != len(sample_ys):
        raise ShapeMismatch(f"{len(sample_xs)} points but {len(sample_ys)} samples")
    ys = [np.asarray(y, dtype=object) for y in sample_ys]
    shape = ys[0].shape
    if any(y.shape != shape for y in ys):
        raise ShapeMismatch("all samples must share a shape")
    coeffs = lagrange_coeffs(sample_xs, target_x, field)
    return combine(coeffs, ys, field)


def poly_eval(coeffs: Sequence[int], x: int, field: PrimeField) -> int:
    """Horner evaluation; ``coeffs`` are lowest degree first."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % field.p
    return acc
