"""Simulated client latencies, network transfers and round timing.

Nothing here sleeps or reads a wall clock; every duration is drawn from a
seeded generator so runs are reproducible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

FIELD_BYTES = 8
REAL_BYTES = 8


class Phase(enum.Enum):
    MODEL_SHARE = "model_share"
    EMBEDDING_UPLOAD = "embedding_upload"


@dataclass(frozen=True)
class DelayModel:
    """Exponential per-client delays. The last ``ceil(fraction * N)`` ids straggle."""

    n_clients: int
    straggler_fraction: float = 0.5
    base_mean: float = 0.2
    straggler_base: float = 1.0
    straggler_slope: float = 2.0
    # Model-sharing compute is 1/|B| of the embedding work per round.
    share_scale: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.straggler_fraction <= 1.0:
            raise ValueError("straggler_fraction must lie in [0, 1]")
        if min(self.base_mean, self.straggler_base, self.straggler_slope) < 0:
            raise ValueError("delay means must be non-negative")

    @property
    def n_stragglers(self) -> int:
        return math.ceil(self.straggler_fraction * self.n_clients)

    def straggler_index(self, client: int) -> int:
        """1-based incremental index among stragglers, 0 for non-stragglers."""
        first = self.n_clients - self.n_stragglers
        return client - first + 1 if client >= first else 0

    def is_straggler(self, client: int) -> bool:
        return self.straggler_index(client) > 0

    def embedding_mean(self, client: int) -> float:
        i = self.straggler_index(client)
        if i == 0:
            return self.base_mean
        return self.straggler_base + self.straggler_slope * i / self.n_clients

    def mean(self, client: int, phase: Phase, batch_size: int = 1) -> float:
        m = self.embedding_mean(client)
        if phase is Phase.MODEL_SHARE:
            return m * (self.share_scale if self.share_scale is not None else 1.0 / batch_size)
        return m


def sample_delay(
    model: DelayModel,
    client: int,
    phase: Phase,
    rng: np.random.Generator,
    batch_size: int = 1,
) -> float:
    mean = model.mean(client, phase, batch_size)
    # Always consume one draw so streams stay aligned whatever the means are.
    u = rng.standard_exponential()
    return float(mean * u)


@dataclass(frozen=True)
class NetworkModel:
    bandwidth_bps: float = 300e6

    def __post_init__(self):
        if self.bandwidth_bps <= 0:
            raise ValueError("bandwidth must be positive")

    def transfer_time(self, n_bytes: int) -> float:
        return 8.0 * n_bytes / self.bandwidth_bps


@dataclass
class SimClock:
    now: float = 0.0

    def advance(self, dt: float) -> float:
        if dt < 0 or math.isnan(dt):
            raise ValueError(f"clock cannot move by {dt}")
        self.now += dt
        return self.now


@dataclass(frozen=True)
class WaitAll:
    pass


@dataclass(frozen=True)
class Threshold:
    count: int


@dataclass(frozen=True)
class Deadline:
    seconds: float


Policy = WaitAll | Threshold | Deadline


def arrival_order(arrivals: Sequence[float]) -> list[int]:
    """Client ids by arrival time, ties broken by id; clients that never arrive are dropped."""
    ids = [n for n, t in enumerate(arrivals) if math.isfinite(t)]
    return sorted(ids, key=lambda n: (arrivals[n], n))


def round_time(arrivals: Sequence[float], policy: Policy) -> tuple[list[int], float]:
    """Accepted responders (in arrival order) and the time the last one arrived.

    A threshold policy that cannot be met returns every finite arrival and the
    caller decides whether that is fatal.
    """
    order = arrival_order(arrivals)
    if isinstance(policy, WaitAll):
        accepted = order
    elif isinstance(policy, Threshold):
        accepted = order[: policy.count]
    elif isinstance(policy, Deadline):
        accepted = [n for n in order if arrivals[n] <= policy.seconds]
    else:
        raise TypeError(f"unknown policy {policy!r}")
    elapsed = float(arrivals[accepted[-1]]) if accepted else 0.0
    return accepted, elapsed


def account_bytes(shapes: Iterable[Sequence[int]], width: int = FIELD_BYTES) -> int:
    """Exact payload size of arrays with the given shapes at ``width`` bytes per entry."""
    return sum(int(np.prod(s, dtype=np.int64)) * width for s in shapes)


@dataclass
class Simulator:
    """Per-run delay sampler and clock with separate streams per phase."""

    delays: DelayModel
    network: NetworkModel = field(default_factory=NetworkModel)
    embed_rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    share_rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(1))
    clock: SimClock = field(default_factory=SimClock)

    @classmethod
    def from_seed(cls, delays: DelayModel, network: NetworkModel, seed) -> "Simulator":
        embed, share = np.random.SeedSequence(seed).spawn(2)
        return cls(delays, network, np.random.default_rng(embed), np.random.default_rng(share))

    def embedding_delays(self) -> list[float]:
        return [
            sample_delay(self.delays, n, Phase.EMBEDDING_UPLOAD, self.embed_rng)
            for n in range(self.delays.n_clients)
        ]

    def share_delays(self, batch_size: int) -> list[float]:
        return [
            sample_delay(self.delays, n, Phase.MODEL_SHARE, self.share_rng, batch_size)
            for n in range(self.delays.n_clients)
        ]
