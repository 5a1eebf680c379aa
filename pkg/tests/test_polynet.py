import numpy as np
import pytest

from fd import numeric_grad, rel_err
from fedvs.errors import MissingShare, NonFiniteInput, ShapeMismatch
from fedvs.field import interpolate_eval
from fedvs.lcc import LccConfig, decode_sum, encode_data, encode_model, split_segments
from fedvs.polynet import (
    PolyNetModel,
    PreprocessedData,
    field_forward,
    homomorphic_eval,
    pn_backward,
    pn_forward,
    preprocess_powers,
)
from fedvs.quant import QuantConfig, dequantize_embedding, quantize_data, quantize_model


class TestPreprocess:
    def test_degree_one_is_augmented_matrix(self):
        P = preprocess_powers(np.array([[0.5, -1.0]]), 1).powers
        assert P.shape == (1, 1, 3)
        assert list(P[0, 0]) == [0.5, -1.0, 1.0]

    def test_cubes(self):
        P = preprocess_powers(np.array([[2.0]]), 3).powers
        assert P[:, 0, 0].tolist() == [2.0, 4.0, 8.0]
        assert P[:, 0, 1].tolist() == [1.0, 1.0, 1.0]

    def test_zero_input_keeps_bias(self):
        P = preprocess_powers(np.zeros((4, 3)), 2).powers
        assert np.all(P[:, :, :3] == 0) and np.all(P[:, :, 3] == 1)

    def test_rejects_bad_input(self):
        with pytest.raises(NonFiniteInput):
            preprocess_powers(np.array([[np.nan]]), 1)
        with pytest.raises(ValueError):
            preprocess_powers(np.zeros((2, 2)), 0)


class TestForward:
    def test_plain_matmul_without_bias(self):
        data = preprocess_powers(np.array([[1.0, 2.0]]), 1, bias=False)
        assert pn_forward(data, PolyNetModel(np.array([[[1.0], [0.0]]]))).tolist() == [[1.0]]

    def test_degree_two_by_hand(self):
        data = preprocess_powers(np.array([[2.0]]), 2, bias=False)
        model = PolyNetModel(np.array([[[1.0]], [[3.0]]]))
        assert pn_forward(data, model).tolist() == [[14.0]]

    def test_zero_model(self, rng):
        data = preprocess_powers(rng.uniform(-1, 1, (5, 3)), 2)
        assert np.all(pn_forward(data, PolyNetModel.zeros(4, 2, 6)) == 0)

    def test_matches_loop(self, rng):
        X = rng.uniform(-1, 1, (6, 3))
        model = PolyNetModel.init(4, 3, 5, rng)
        data = preprocess_powers(X, 3)
        Xa = np.hstack([X, np.ones((6, 1))])
        ref = sum(Xa**i @ model.layers[i - 1] for i in range(1, 4))
        assert np.allclose(pn_forward(data, model), ref, rtol=1e-13, atol=1e-13)

    def test_shape_mismatch(self, rng):
        data = preprocess_powers(rng.uniform(-1, 1, (2, 3)), 2)
        with pytest.raises(ShapeMismatch):
            pn_forward(data, PolyNetModel.zeros(4, 1, 2))


class TestBackward:
    def test_zero_gradient(self, rng):
        data = preprocess_powers(rng.uniform(-1, 1, (3, 2)), 2)
        assert np.all(pn_backward(data, np.zeros((3, 4))) == 0)

    def test_hand_example(self):
        data = preprocess_powers(np.array([[1.0], [2.0]]), 1, bias=False)
        assert pn_backward(data, np.array([[1.0], [1.0]])).tolist() == [[[3.0]]]

    def test_finite_differences(self, rng):
        data = preprocess_powers(rng.uniform(-1, 1, (4, 3)), 2)
        model = PolyNetModel.init(4, 2, 3, rng)

        def loss():
            return 0.5 * np.sum(pn_forward(data, model) ** 2)

        analytic = pn_backward(data, pn_forward(data, model))
        assert rel_err(analytic, numeric_grad(loss, model.layers)) < 1e-5


def _shares(rng, big, K=2, T=1, N=7, D=2, rows=4, width=3, h=2):
    cfg = LccConfig(K, T, N, big)
    qc = QuantConfig(l_x=10, l_w=10, field=big, n_clients=N)
    clients = []
    for _ in range(N):
        X = preprocess_powers(rng.uniform(-1, 1, (rows, width - 1)), D).powers
        W = rng.uniform(-1, 1, (D, width, h))
        clients.append((quantize_data(X, qc), quantize_model(W, qc, rng), X, W))
    data = [dict() for _ in range(N)]
    model = [dict() for _ in range(N)]
    for n, (Xb, Wb, _, _) in enumerate(clients):
        for holder, s in enumerate(encode_data(split_segments(Xb, K, axis=1), cfg, rng)):
            data[holder][n] = s
        for holder, s in enumerate(encode_model(Wb, cfg, rng)):
            model[holder][n] = s
    return cfg, qc, clients, data, model


class TestHomomorphic:
    def test_degenerate_coding_is_plaintext(self, big, rng):
        cfg = LccConfig(1, 0, 1, big)
        Xb = big.random(rng, (2, 5, 3))
        Wb = big.random(rng, (2, 3, 4))
        ds = encode_data([Xb], cfg, rng)[0]
        ms = encode_model(Wb, cfg, rng)[0]
        assert np.array_equal(ds, Xb) and np.array_equal(ms, Wb)
        out = homomorphic_eval({0: ds}, {0: ms}, range(5), big)
        assert np.array_equal(out, field_forward(Xb, Wb, big))

    def test_decode_equals_plaintext_quantized_sum(self, big, rng):
        cfg, qc, clients, data, model = _shares(rng, big)
        batch = [0, 1]
        coded = [homomorphic_eval(data[h], model[h], batch, big) for h in range(7)]
        responders = [6, 1, 3, 0, 4]
        segs = decode_sum([cfg.alphas[i] for i in responders], [coded[i] for i in responders], cfg)
        for k in range(2):
            truth = sum(field_forward(Xb[:, 2 * k + np.array(batch), :], Wb, big) for Xb, Wb, _, _ in clients) % big.p
            assert np.array_equal(segs[k], truth)

    def test_value_at_beta_is_segment_sum(self, big, rng):
        # The composite polynomial, interpolated from all holders, equals the
        # plaintext segment sum at each data point.
        cfg, _, clients, data, model = _shares(rng, big)
        coded = [homomorphic_eval(data[h], model[h], [1], big) for h in range(7)]
        for k in range(2):
            at_beta = interpolate_eval(list(cfg.alphas), coded, cfg.betas[k], big)
            truth = sum(field_forward(Xb[:, [2 * k + 1], :], Wb, big) for Xb, Wb, _, _ in clients) % big.p
            assert np.array_equal(at_beta, truth)

    def test_composite_degree(self, big, rng):
        # Degree 2(K+T-1) = 4: any 5 evaluations predict the remaining two.
        cfg, _, _, data, model = _shares(rng, big)
        coded = [homomorphic_eval(data[h], model[h], [0, 1], big) for h in range(7)]
        xs = list(cfg.alphas[:5])
        for j in (5, 6):
            assert np.array_equal(interpolate_eval(xs, coded[:5], cfg.alphas[j], big), coded[j])
        # ...while 4 evaluations do not.
        assert not np.array_equal(interpolate_eval(xs[:4], coded[:4], cfg.alphas[6], big), coded[6])

    def test_dequantized_close_to_real(self, big, rng):
        cfg, qc, clients, data, model = _shares(rng, big)
        coded = [homomorphic_eval(data[h], model[h], [0], big) for h in range(7)]
        segs = decode_sum(list(cfg.alphas), coded, cfg)
        approx = dequantize_embedding(segs[0], qc)
        exact = sum(pn_forward(PreprocessedData(X[:, [0], :]), PolyNetModel(W)) for _, _, X, W in clients) / 7
        # Per product: |x dw| + |w dx| + |dx dw| with |dx| <= 2^-11, |dw| <= 2^-10.
        assert np.max(np.abs(approx - exact)) < 2 * 3 * 2 * (2.0**-10 + 2.0**-11 + 2.0**-21)

    def test_missing_share(self, big, rng):
        _, _, _, data, model = _shares(rng, big)
        d = dict(data[0])
        del d[3]
        with pytest.raises(MissingShare):
            homomorphic_eval(d, model[0], [0], big, sources=range(7))

    def test_batch_out_of_range(self, big, rng):
        _, _, _, data, model = _shares(rng, big)
        with pytest.raises(IndexError):
            homomorphic_eval(data[0], model[0], [2], big)
