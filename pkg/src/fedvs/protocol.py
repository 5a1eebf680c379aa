"""Training rounds: coded FedVS aggregation and the plaintext baselines.

Row layout: each client's (padded) training rows are cut into ``K``
contiguous segments of ``M/K`` rows.  A coded batch ``B`` indexes rows inside
a segment, and the decoded embedding stacks segment 1's batch rows, then
segment 2's, and so on, so it covers the ``K|B|`` training rows returned by
:func:`stacked_rows`.  Labels are kept in that same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .central import CentralModel
from .errors import EmptyResponderSet, InsufficientResponders, OverflowBoundViolation, ShapeMismatch
from .lcc import LccConfig, decode_sum, encode_data, encode_model, split_segments
from .polynet import (
    DataShareSet,
    ModelShareSet,
    PolyNetModel,
    PreprocessedData,
    homomorphic_eval,
    pn_backward,
    pn_forward,
    preprocess_powers,
)
from .quant import (
    QuantConfig,
    dequantize_embedding,
    fixed_point,
    quantize_data,
    quantize_model,
    round_nearest,
    round_stochastic,
)
from .sim import (
    FIELD_BYTES,
    REAL_BYTES,
    Deadline,
    Simulator,
    Threshold,
    WaitAll,
    account_bytes,
    round_time,
)

STRATEGIES = ("fedvs", "wait", "ignore", "wait_dp")


@dataclass
class ClientState:
    cid: int
    data: PreprocessedData  # plaintext powers of the padded, bias-augmented features
    model: PolyNetModel
    quant_rng: np.random.Generator
    mask_rng: np.random.Generator
    lr: float = 2.0
    data_shares: DataShareSet = field(default_factory=dict)
    model_shares: ModelShareSet = field(default_factory=dict)

    @property
    def share_shape(self) -> tuple[int, int, int]:
        return self.model.layers.shape


@dataclass
class ServerState:
    central: CentralModel
    labels: np.ndarray  # padded, segment-stacked order
    valid: np.ndarray  # False on padding rows
    lcc: LccConfig
    quant: QuantConfig
    lr: float = 0.1
    strategy: str = "fedvs"
    deadline_factor: float = 2.0
    dp_epsilon: float = 10.0
    dp_clip: float = 1.0
    dp_rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @property
    def segment_rows(self) -> int:
        return self.labels.shape[0] // self.lcc.K


@dataclass
class RoundMetrics:
    round: int
    strategy: str
    train_loss: float
    round_time_s: float
    sim_time_s: float
    responders: tuple[int, ...]
    dropped: tuple[int, ...]
    bytes_up: int
    bytes_share: int
    decode_status: str = "ok"
    arrivals: tuple[float, ...] = ()
    test_acc: float | None = None

    def to_record(self) -> dict:
        return {
            "type": "round",
            "round": self.round,
            "strategy": self.strategy,
            "sim_time_s": self.sim_time_s,
            "round_time_s": self.round_time_s,
            "train_loss": self.train_loss,
            "test_acc": self.test_acc,
            "responders": len(self.responders),
            "responder_ids": list(self.responders),
            "dropped": list(self.dropped),
            "bytes_up": self.bytes_up,
            "bytes_share": self.bytes_share,
            "decode": self.decode_status,
        }


def pad_rows(X: np.ndarray, K: int) -> tuple[np.ndarray, int]:
    """Zero-pad rows up to a multiple of ``K``; returns the padded array and real row count."""
    M = X.shape[0]
    pad = (-M) % K
    if pad:
        X = np.concatenate([X, np.zeros((pad,) + X.shape[1:], dtype=X.dtype)])
    return X, M


def stacked_rows(batch: Sequence[int], segment_rows: int, K: int) -> np.ndarray:
    """Training-row indices covered by a coded batch, in decoded order."""
    b = np.asarray(batch, dtype=np.intp)
    return np.concatenate([k * segment_rows + b for k in range(K)])


def data_preparation(clients: Sequence[ClientState], lcc: LccConfig, quant: QuantConfig) -> list[int]:
    """Quantize and share every client's data; returns data-share bytes each client sends."""
    if len(clients) != lcc.N:
        raise ShapeMismatch(f"{len(clients)} clients for N={lcc.N}")
    sent = []
    for src in clients:
        X_bar = quantize_data(src.data.powers, quant)
        segments = split_segments(X_bar, lcc.K, axis=1)
        shares = encode_data(segments, lcc, src.mask_rng)
        for holder, share in zip(clients, shares):
            holder.data_shares[src.cid] = share
        sent.append(account_bytes([shares[0].shape] * (lcc.N - 1), FIELD_BYTES))
    return sent


def check_weight_range(clients: Iterable[ClientState], quant: QuantConfig) -> None:
    for c in clients:
        peak = float(np.abs(c.model.layers).max(initial=0.0))
        if peak > quant.w_max:
            raise OverflowBoundViolation(
                f"client {c.cid} weight magnitude {peak:.4g} exceeds declared w_max={quant.w_max}"
            )


def central_forward_backward(
    server: ServerState, H_avg: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Loss and embedding gradient; the central model is updated in place."""
    loss, grad_H, grads = server.central.loss_and_grads(H_avg, labels, mask)
    server.central.apply(grads, server.lr)
    return loss, grad_H


def _client_update(client: ClientState, rows: np.ndarray, grad_H: np.ndarray) -> None:
    grads = pn_backward(client.data.rows(rows), grad_H)
    client.model.layers -= client.lr * grads


def _upload_arrivals(sim: Simulator, start: float, n_bytes: int, unavailable=()) -> list[float]:
    delays = sim.embedding_delays()
    transfer = sim.network.transfer_time(n_bytes)
    return [math.inf if n in unavailable else start + d + transfer for n, d in enumerate(delays)]


def share_models(clients: Sequence[ClientState], lcc: LccConfig, quant: QuantConfig) -> list[np.ndarray]:
    """Quantize and distribute every client's model shares; returns the quantized models."""
    quantized = []
    for src in clients:
        W_bar = quantize_model(src.model.layers, quant, src.quant_rng)
        for holder, share in zip(clients, encode_model(W_bar, lcc, src.mask_rng)):
            holder.model_shares[src.cid] = share
        quantized.append(W_bar)
    return quantized


def coded_embeddings(
    clients: Sequence[ClientState], batch: Sequence[int], field
) -> list[np.ndarray]:
    """Every holder's homomorphic evaluation on the current shares, by client id."""
    sources = [c.cid for c in clients]
    return [homomorphic_eval(c.data_shares, c.model_shares, batch, field, sources) for c in clients]


def decode_average(
    responders: Sequence[int], coded: Sequence[np.ndarray], lcc: LccConfig, quant: QuantConfig
) -> np.ndarray:
    """Decode the ``K|B|``-row embedding sum from ``responders`` and dequantize to the average."""
    segments = decode_sum([lcc.alphas[n] for n in responders], [coded[n] for n in responders], lcc)
    return dequantize_embedding(np.vstack(segments), quant)


def run_fedvs_round(
    clients: Sequence[ClientState],
    server: ServerState,
    batch: Sequence[int],
    sim: Simulator,
    round_index: int = 0,
    unavailable: Iterable[int] = (),
) -> RoundMetrics:
    """One coded round. Clients in ``unavailable`` never deliver their upload."""
    lcc, quant = server.lcc, server.quant
    N, K = lcc.N, lcc.K
    unavailable = frozenset(unavailable)
    check_weight_range(clients, quant)

    share_models(clients, lcc, quant)
    coded = coded_embeddings(clients, batch, quant.field)

    # Every holder needs all N model shares before evaluating, so sharing is a barrier.
    share_bytes = [account_bytes([c.share_shape] * (N - 1), FIELD_BYTES) for c in clients]
    share_delays = sim.share_delays(len(batch))
    barrier = max(d + sim.network.transfer_time(b) for d, b in zip(share_delays, share_bytes))
    upload = account_bytes([coded[0].shape], FIELD_BYTES)
    arrivals = _upload_arrivals(sim, barrier, upload, unavailable)
    responders, elapsed = round_time(arrivals, Threshold(lcc.recovery_threshold))
    if len(responders) < lcc.recovery_threshold:
        raise InsufficientResponders(
            f"only {len(responders)} of {N} clients responded, need {lcc.recovery_threshold}"
        )

    H_avg = decode_average(responders, coded, lcc, quant)
    rows = stacked_rows(batch, server.segment_rows, K)
    loss, grad_H = central_forward_backward(server, H_avg, server.labels[rows], server.valid[rows])
    for c in clients:
        _client_update(c, rows, grad_H / N)

    now = sim.clock.advance(elapsed)
    return RoundMetrics(
        round=round_index,
        strategy="fedvs",
        train_loss=loss,
        round_time_s=elapsed,
        sim_time_s=now,
        responders=tuple(responders),
        dropped=tuple(n for n in range(N) if n not in responders),
        bytes_up=upload,
        bytes_share=sum(share_bytes),
        arrivals=tuple(arrivals),
    )


def run_baseline_round(
    strategy: str,
    clients: Sequence[ClientState],
    server: ServerState,
    batch: Sequence[int],
    sim: Simulator,
    round_index: int = 0,
    deadline: float | None = None,
) -> RoundMetrics:
    """Plaintext embedding round under ``wait``, ``ignore`` or ``wait_dp``.

    The same ``K|B|`` rows as a coded round are processed, so learning
    progress per round is comparable across strategies.
    """
    if strategy not in ("wait", "ignore", "wait_dp"):
        raise ValueError(f"unknown baseline strategy {strategy!r}")
    K = server.lcc.K
    N = len(clients)
    rows = stacked_rows(batch, server.segment_rows, K)
    embeddings = [pn_forward(c.data.rows(rows), c.model) for c in clients]
    upload = account_bytes([embeddings[0].shape], REAL_BYTES)
    arrivals = _upload_arrivals(sim, 0.0, upload)

    if strategy == "ignore":
        if deadline is None:
            fast = [arrivals[n] for n in range(N) if not sim.delays.is_straggler(n)] or arrivals
            deadline = server.deadline_factor * float(np.median(fast))
        policy = Deadline(deadline)
    else:
        policy = WaitAll()
    responders, elapsed = round_time(arrivals, policy)
    if not responders:
        raise EmptyResponderSet(f"no client arrived before the {deadline:.4g}s deadline")

    grad_masks = {}
    if strategy == "wait_dp":
        c = server.dp_clip
        scale = c / server.dp_epsilon
        for n in responders:
            grad_masks[n] = np.abs(embeddings[n]) <= c
            noise = server.dp_rng.laplace(0.0, scale, size=embeddings[n].shape) if scale > 0 else 0.0
            embeddings[n] = np.clip(embeddings[n], -c, c) + noise

    H_avg = sum(embeddings[n] for n in responders) / len(responders)
    loss, grad_H = central_forward_backward(server, H_avg, server.labels[rows], server.valid[rows])
    g = grad_H / len(responders)
    for n in responders:
        _client_update(clients[n], rows, g * grad_masks[n] if n in grad_masks else g)

    now = sim.clock.advance(elapsed)
    return RoundMetrics(
        round=round_index,
        strategy=strategy,
        train_loss=loss,
        round_time_s=elapsed,
        sim_time_s=now,
        responders=tuple(responders),
        dropped=tuple(n for n in range(N) if n not in responders),
        bytes_up=upload,
        bytes_share=0,
        decode_status="plaintext",
        arrivals=tuple(arrivals),
    )


def quantized_reference_embedding(
    clients: Sequence[ClientState], rows: np.ndarray, quant: QuantConfig
) -> np.ndarray:
    """Uncoded average embedding on fixed-point data and stochastically rounded models.

    Consumes each client's ``quant_rng`` exactly as :func:`share_models` does,
    so a state copy taken before a coded round reproduces its quantized models.
    """
    H = 0.0
    for c in clients:
        Xq = np.ldexp(round_nearest(np.ldexp(c.data.powers[:, rows, :], quant.l_x)).astype(np.float64), -quant.l_x)
        Wq = np.ldexp(round_stochastic(np.ldexp(c.model.layers, quant.l_w), c.quant_rng).astype(np.float64), -quant.l_w)
        H = H + np.einsum("ibd,idh->bh", Xq, Wq)
    return H / len(clients)


def run_reference_round(
    clients: Sequence[ClientState], server: ServerState, batch: Sequence[int]
) -> float:
    """No-coding split-VFL round on quantized models; returns the batch loss."""
    rows = stacked_rows(batch, server.segment_rows, server.lcc.K)
    H_avg = quantized_reference_embedding(clients, rows, server.quant)
    loss, grad_H = central_forward_backward(server, H_avg, server.labels[rows], server.valid[rows])
    for c in clients:
        _client_update(c, rows, grad_H / len(clients))
    return loss


def plaintext_embedding(clients: Sequence[ClientState], powers: Sequence[np.ndarray]) -> np.ndarray:
    """Average embedding of real models over the given per-client power stacks."""
    return sum(
        pn_forward(PreprocessedData(p), c.model) for c, p in zip(clients, powers)
    ) / len(clients)


def quantized_powers(X: np.ndarray, degree: int, l_x: int) -> np.ndarray:
    """Evaluation-path features: powers of the augmented matrix at fixed-point resolution."""
    return fixed_point(preprocess_powers(X, degree).powers, l_x)
