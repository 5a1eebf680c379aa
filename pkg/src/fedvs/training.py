"""Experiment assembly and the outer training loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .central import CentralModel
from .config import ExperimentConfig, check_overflow
from .data import DatasetSpec, PartitionedDataset, SyntheticParams, build_dataset
from .field import PrimeField
from .lcc import LccConfig
from .polynet import PolyNetModel, preprocess_powers
from .protocol import (
    ClientState,
    RoundMetrics,
    ServerState,
    data_preparation,
    pad_rows,
    plaintext_embedding,
    quantized_powers,
    run_baseline_round,
    run_fedvs_round,
)
from .quant import QuantConfig
from .sim import DelayModel, NetworkModel, Simulator

# Stream tags under the experiment seed; data uses tags 0 and 1.
_CENTRAL, _CLIENT_INIT, _QUANT, _MASK, _SIM, _BATCH, _DP = range(2, 9)


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


def dataset_spec(cfg: ExperimentConfig) -> DatasetSpec:
    return DatasetSpec(
        source=cfg.dataset,
        synthetic=SyntheticParams(
            n_samples=cfg.synthetic_samples,
            n_features=cfg.synthetic_features,
            n_classes=cfg.synthetic_classes,
            margin=cfg.synthetic_margin,
            noise=cfg.synthetic_noise,
        ),
        csv_path=cfg.csv_path,
        label_column=cfg.label_column,
        task=cfg.task,
        train_fraction=cfg.train_fraction,
    )


@dataclass
class Summary:
    rounds: int
    strategy: str
    sim_time_s: float
    initial_train_loss: float
    final_train_loss: float
    initial_test_acc: float | None
    final_test_acc: float | None
    data_share_bytes: list[int]

    def to_record(self) -> dict:
        return {
            "type": "summary",
            "rounds": self.rounds,
            "strategy": self.strategy,
            "sim_time_s": self.sim_time_s,
            "initial_train_loss": self.initial_train_loss,
            "final_train_loss": self.final_train_loss,
            "initial_test_acc": self.initial_test_acc,
            "final_test_acc": self.final_test_acc,
            "data_share_bytes": self.data_share_bytes,
        }


class Experiment:
    """All parties of one run, built deterministically from the config."""

    def __init__(self, cfg: ExperimentConfig, dataset: PartitionedDataset | None = None):
        self.cfg = cfg
        self.dataset = dataset if dataset is not None else build_dataset(dataset_spec(cfg), cfg.n_clients, cfg.seed)
        ds = self.dataset
        if ds.n_clients != cfg.n_clients:
            raise ValueError(f"dataset has {ds.n_clients} blocks for {cfg.n_clients} clients")
        check_overflow(cfg, ds.feature_sizes)

        field = PrimeField(cfg.prime)
        self.lcc = LccConfig(cfg.K, cfg.T, cfg.n_clients, field)
        self.quant = QuantConfig(cfg.l_x, cfg.l_w, field, cfg.n_clients, 1.0, cfg.w_max)
        degrees = cfg.degrees()

        self.clients = []
        for n, (X, D) in enumerate(zip(ds.train_blocks, degrees)):
            Xp, M = pad_rows(X, cfg.K)
            data = preprocess_powers(Xp, D)
            model = PolyNetModel.init(data.width, D, cfg.h, _rng(cfg.seed, _CLIENT_INIT, n))
            self.clients.append(
                ClientState(n, data, model, _rng(cfg.seed, _QUANT, n), _rng(cfg.seed, _MASK, n), cfg.lr_client)
            )
        self.n_train = M = ds.y_train.shape[0]

        n_out = ds.n_classes if cfg.task == "classification" else 1
        labels, _ = pad_rows(ds.y_train.reshape(M, -1) if cfg.task == "regression" else ds.y_train, cfg.K)
        valid = np.zeros(labels.shape[0], dtype=bool)
        valid[:M] = True
        self.server = ServerState(
            central=CentralModel.init(cfg.h, cfg.central_hidden, n_out, _rng(cfg.seed, _CENTRAL), cfg.task),
            labels=labels,
            valid=valid,
            lcc=self.lcc,
            quant=self.quant,
            lr=cfg.lr_server,
            strategy=cfg.strategy,
            deadline_factor=cfg.ignore_deadline_factor,
            dp_epsilon=cfg.dp_epsilon,
            dp_clip=cfg.dp_clip,
            dp_rng=_rng(cfg.seed, _DP),
        )
        delays = DelayModel(
            cfg.n_clients, cfg.straggler_fraction, cfg.base_delay, cfg.straggler_base, cfg.straggler_slope
        )
        self.sim = Simulator.from_seed(delays, NetworkModel(cfg.bandwidth_mbps * 1e6), [cfg.seed, _SIM])
        self.batch_rng = _rng(cfg.seed, _BATCH)

        self.train_powers = [quantized_powers(X, D, cfg.l_x) for X, D in zip(ds.train_blocks, degrees)]
        self.test_powers = [quantized_powers(X, D, cfg.l_x) for X, D in zip(ds.test_blocks, degrees)]
        self.data_share_bytes: list[int] = []
        self.prepared = False

    @property
    def segment_rows(self) -> int:
        return self.server.segment_rows

    def prepare(self) -> None:
        if self.cfg.strategy == "fedvs" and not self.prepared:
            self.data_share_bytes = data_preparation(self.clients, self.lcc, self.quant)
        self.prepared = True

    def batches(self) -> Iterator[np.ndarray]:
        """Coded batches drawn without replacement, reshuffled every epoch."""
        size = min(self.cfg.batch_size, self.segment_rows)
        while True:
            order = self.batch_rng.permutation(self.segment_rows)
            for start in range(0, self.segment_rows, size):
                yield np.sort(order[start : start + size])

    def train_loss(self) -> float:
        H = plaintext_embedding(self.clients, self.train_powers)
        y = self.dataset.y_train
        if self.cfg.task == "regression":
            y = y.reshape(-1, 1)
        return self.server.central.loss(H, y)

    def test_accuracy(self) -> float | None:
        if self.cfg.task != "classification" or self.dataset.y_test.size == 0:
            return None
        H = plaintext_embedding(self.clients, self.test_powers)
        return float(np.mean(self.server.central.predict(H) == self.dataset.y_test))

    def step(self, batch: np.ndarray, round_index: int) -> RoundMetrics:
        if self.cfg.strategy == "fedvs":
            return run_fedvs_round(self.clients, self.server, batch, self.sim, round_index)
        return run_baseline_round(self.cfg.strategy, self.clients, self.server, batch, self.sim, round_index)

    def run(self) -> Iterator[RoundMetrics | Summary]:
        """Yield one :class:`RoundMetrics` per round, then a :class:`Summary`."""
        self.prepare()
        cfg = self.cfg
        initial_loss, initial_acc = self.train_loss(), self.test_accuracy()
        batches = self.batches()
        for r in range(1, cfg.rounds + 1):
            m = self.step(next(batches), r)
            if cfg.eval_every and (r % cfg.eval_every == 0 or r == cfg.rounds):
                m.test_acc = self.test_accuracy()
            yield m
        yield Summary(
            rounds=cfg.rounds,
            strategy=cfg.strategy,
            sim_time_s=self.sim.clock.now,
            initial_train_loss=initial_loss,
            final_train_loss=self.train_loss(),
            initial_test_acc=initial_acc,
            final_test_acc=self.test_accuracy(),
            data_share_bytes=self.data_share_bytes,
        )


def train(cfg: ExperimentConfig, dataset: PartitionedDataset | None = None) -> Iterator[RoundMetrics | Summary]:
    return Experiment(cfg, dataset).run()


def time_to_accuracy(metrics: list[RoundMetrics], target: float) -> float | None:
    """Simulated time of the first evaluated round reaching ``target`` test accuracy."""
    for m in metrics:
        if m.test_acc is not None and m.test_acc >= target:
            return m.sim_time_s
    return None
