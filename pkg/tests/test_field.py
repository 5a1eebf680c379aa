import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedvs.errors import DuplicatePoints, ShapeMismatch, ZeroInverse
from fedvs.field import (
    MERSENNE_61,
    EvalPoints,
    PrimeField,
    interpolate_eval,
    is_prime,
    lagrange_coeffs,
    poly_eval,
)


def brute_inverse(a, p):
    return next(x for x in range(1, p) if a * x % p == 1)


class TestConstruction:
    def test_rejects_composite(self):
        with pytest.raises(ValueError):
            PrimeField(15)

    def test_rejects_too_wide(self):
        with pytest.raises(ValueError):
            PrimeField((1 << 63) + 29)

    def test_small_fields_are_first_class(self):
        assert PrimeField(17).p == 17
        assert PrimeField(251).bits == 8

    def test_default_is_mersenne_61(self):
        assert PrimeField().p == MERSENNE_61 == 2**61 - 1

    def test_primality_matches_trial_division(self):
        def slow(n):
            return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))

        assert [n for n in range(2000) if is_prime(n)] == [n for n in range(2000) if slow(n)]
        assert is_prime(MERSENNE_61)
        assert not is_prime(MERSENNE_61 + 2) or slow(MERSENNE_61 + 2)
        # Carmichael numbers
        assert not any(is_prime(n) for n in (561, 1105, 1729, 2465, 2821, 6601))


class TestScalarOps:
    def test_examples(self, f17):
        assert f17.add(9, 12) == 4
        assert f17.mul(5, 0) == 0
        assert f17.neg(1) == 16
        assert f17.sub(3, 5) == 15

    def test_inverse_examples(self, f17):
        assert f17.inv(2) == 9 == brute_inverse(2, 17)
        assert f17.inv(1) == 1
        assert f17.inv(16) == 16 == brute_inverse(16, 17)

    def test_inverse_exhaustive(self, f17):
        for a in range(1, 17):
            assert f17.inv(a) == brute_inverse(a, 17)

    def test_zero_inverse(self, f17, big):
        with pytest.raises(ZeroInverse):
            f17.inv(0)
        with pytest.raises(ZeroDivisionError):
            big.inv(MERSENNE_61)

    def test_mersenne_wraparound(self, big):
        p = big.p
        assert big.add(p - 1, 2) == 1
        assert big.mul(p - 1, p - 1) == 1
        assert big.neg(0) == 0

    def test_field_element_operators(self, f17):
        a, b = f17(9), f17(12)
        assert a + b == 4
        assert (a * b).value == 108 % 17
        assert -f17(1) == 16
        assert f17(2).inverse() == 9
        assert f17(3) / f17(2) == 3 * 9 % 17
        assert 1 - f17(2) == 16

    @settings(max_examples=200)
    @given(st.integers(0, MERSENNE_61 - 1), st.integers(0, MERSENNE_61 - 1))
    def test_closure_and_axioms(self, a, b):
        F = PrimeField()
        for r in (F.add(a, b), F.sub(a, b), F.mul(a, b), F.neg(a)):
            assert 0 <= r < F.p
        assert F.add(a, F.neg(a)) == 0
        assert F.mul(a, b) == (a * b) % F.p
        if a:
            assert F.mul(a, F.inv(a)) == 1


class TestMatrices:
    def test_matmul_matches_python_ints(self, big, rng):
        A = big.random(rng, (4, 5))
        B = big.random(rng, (5, 3))
        C = big.matmul(A, B)
        for i in range(4):
            for j in range(3):
                assert C[i, j] == sum(int(A[i, k]) * int(B[k, j]) for k in range(5)) % big.p

    def test_small_field_fast_path_agrees(self, f17, rng):
        A = f17.random(rng, (2, 6, 7))
        B = f17.random(rng, (2, 7, 3))
        assert np.array_equal(f17.matmul(A, B), (A @ B) % 17)

    def test_random_is_canonical(self, big, rng):
        Z = big.random(rng, (100,))
        assert all(0 <= int(z) < big.p for z in Z)

    def test_array_canonicalizes_negatives(self, f17):
        assert list(f17.array([-1, 17, 18])) == [16, 0, 1]


class TestEvalPoints:
    def test_default_layout(self, big):
        pts = EvalPoints.default(3, 4, big)
        assert pts.betas == (1, 2, 3)
        assert pts.alphas == (4, 5, 6, 7)

    def test_disjointness_enforced(self):
        with pytest.raises(DuplicatePoints):
            EvalPoints((1, 2), (2, 3))

    def test_distinctness_enforced(self):
        with pytest.raises(DuplicatePoints):
            EvalPoints((1, 1), (3,))
        with pytest.raises(DuplicatePoints):
            EvalPoints((1,), (3, 3))

    def test_too_many_points(self, f17):
        with pytest.raises(ValueError):
            EvalPoints.default(8, 9, f17)


class TestLagrange:
    def test_single_point_is_constant(self, f17):
        assert lagrange_coeffs([5], 11, f17) == [1]

    def test_hand_example(self, f17):
        # (3-2)/(1-2) = -1 and (3-1)/(2-1) = 2
        assert lagrange_coeffs([1, 2], 3, f17) == [16, 2]

    def test_one_hot_at_samples(self, f17):
        pts = [2, 5, 7, 11]
        for k, x in enumerate(pts):
            assert lagrange_coeffs(pts, x, f17) == [int(i == k) for i in range(4)]

    def test_coefficients_sum_to_one(self, f17):
        pts = [1, 4, 6, 9, 13]
        for x in range(17):
            assert sum(lagrange_coeffs(pts, x, f17)) % 17 == 1

    def test_duplicates(self, f17):
        with pytest.raises(DuplicatePoints):
            lagrange_coeffs([1, 18], 3, f17)


class TestInterpolate:
    def test_constant_matrix(self, f17):
        M = np.array([[3, 4], [5, 6]], dtype=object)
        for t in range(17):
            assert np.array_equal(interpolate_eval([1, 2, 3], [M, M, M], t, f17), M)

    def test_line(self, f17):
        ys = [np.array([(2 * x + 3) % 17], dtype=object) for x in (1, 2)]
        assert interpolate_eval([1, 2], ys, 5, f17)[0] == 13

    def test_shape_mismatch(self, f17):
        with pytest.raises(ShapeMismatch):
            interpolate_eval([1, 2], [np.zeros(2, dtype=object), np.zeros(3, dtype=object)], 0, f17)
        with pytest.raises(ShapeMismatch):
            interpolate_eval([1, 2, 3], [np.zeros(2, dtype=object)] * 2, 0, f17)

    def test_exhaustive_small_field(self, f17, rng):
        # Every degree-3 polynomial sample: interpolation from any 4 points
        # reproduces Horner evaluation at every field element.
        for _ in range(20):
            coeffs = [int(c) for c in rng.integers(0, 17, size=4)]
            xs = [int(x) for x in rng.choice(17, size=4, replace=False)]
            ys = [np.array(poly_eval(coeffs, x, f17), dtype=object) for x in xs]
            for t in range(17):
                assert int(interpolate_eval(xs, ys, t, f17)) == poly_eval(coeffs, t, f17)

    def test_round_trip_degree_four_large_field(self, big, rng):
        for _ in range(25):
            coeffs = [int(c) for c in big.random(rng, (5,))]
            xs = [int(x) for x in big.random(rng, (6,))]
            if len(set(xs)) < 6:
                continue
            ys = [np.array([poly_eval(coeffs, x, big)], dtype=object) for x in xs[:5]]
            assert int(interpolate_eval(xs[:5], ys, xs[5], big)[0]) == poly_eval(coeffs, xs[5], big)
