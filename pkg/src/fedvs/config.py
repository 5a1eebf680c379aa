"""Experiment configuration: a flat ``key = value`` file plus overrides.

Lines starting with ``#`` and blank lines are ignored.  Every key is listed
in :data:`SCHEMA` with its type and default; unknown keys are an error.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import OverflowBoundViolation, ParseError, ValidationError
from .field import MERSENNE_61, PrimeField, is_prime
from .quant import QuantConfig

STRATEGIES = ("fedvs", "wait", "ignore", "wait_dp")


def _int_tuple(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(part) for part in text.split(","))


def _opt_str(text: str) -> str | None:
    return text.strip() or None


@dataclass(frozen=True)
class ExperimentConfig:
    # protocol
    n_clients: int = 10
    K: int = 2
    T: int = 1
    l_x: int = 16
    l_w: int = 16
    prime: int = MERSENNE_61
    degree: tuple[int, ...] = (1,)
    h: int = 8
    central_hidden: tuple[int, ...] = (16, 16)
    lr_server: float = 0.1
    lr_client: float = 2.0
    batch_size: int = 16
    rounds: int = 200
    seed: int = 0
    strategy: str = "fedvs"
    w_max: float = 1024.0
    task: str = "classification"
    # delays and network
    straggler_fraction: float = 0.5
    base_delay: float = 0.2
    straggler_base: float = 1.0
    straggler_slope: float = 2.0
    bandwidth_mbps: float = 300.0
    ignore_deadline_factor: float = 2.0
    dp_epsilon: float = 10.0
    dp_clip: float = 1.0
    # data
    dataset: str = "synthetic"
    csv_path: str | None = None
    label_column: str | None = None
    train_fraction: float = 0.7
    synthetic_samples: int = 1000
    synthetic_features: int = 20
    synthetic_classes: int = 2
    synthetic_margin: float = 0.5
    synthetic_noise: float = 0.0
    eval_every: int = 1

    @property
    def recovery_threshold(self) -> int:
        return 2 * (self.K + self.T - 1) + 1

    def degrees(self) -> tuple[int, ...]:
        if len(self.degree) == 1:
            return self.degree * self.n_clients
        return self.degree

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return validate(dataclasses.replace(self, **changes))


_PARSERS: dict[str, Callable[[str], Any]] = {}
for _f in dataclasses.fields(ExperimentConfig):
    _t = str(_f.type)
    if _t.startswith("tuple"):
        _PARSERS[_f.name] = _int_tuple
    elif _t == "int":
        _PARSERS[_f.name] = lambda s: int(s.strip(), 0)
    elif _t == "float":
        _PARSERS[_f.name] = float
    elif _t == "str | None":
        _PARSERS[_f.name] = _opt_str
    else:
        _PARSERS[_f.name] = str.strip

SCHEMA: dict[str, Any] = {f.name: f.default for f in dataclasses.fields(ExperimentConfig)}


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check every cross-field rule; raises :class:`ValidationError` naming the rule."""
    def rule(ok: bool, text: str):
        if not ok:
            raise ValidationError(text)

    rule(cfg.K >= 1, f"K must be >= 1 (got {cfg.K})")
    rule(cfg.T >= 0, f"T must be >= 0 (got {cfg.T})")
    rule(cfg.n_clients >= 1, "n_clients must be >= 1")
    rule(
        cfg.n_clients >= cfg.recovery_threshold,
        f"N < 2(K+T-1)+1: threshold {cfg.recovery_threshold} > N={cfg.n_clients}",
    )
    rule(cfg.prime < 1 << 63 and is_prime(cfg.prime), f"prime {cfg.prime} must be a prime below 2^63")
    rule(cfg.K + cfg.T + cfg.n_clients < cfg.prime, "K+T+N evaluation points do not fit in the field")
    rule(cfg.l_x >= 0 and cfg.l_w >= 0, "l_x and l_w must be >= 0")
    rule(len(cfg.degree) in (1, cfg.n_clients), "degree needs one value or one per client")
    rule(all(d >= 1 for d in cfg.degree), "degrees must be >= 1")
    rule(cfg.h >= 1, "h must be >= 1")
    rule(all(w >= 1 for w in cfg.central_hidden), "central_hidden widths must be >= 1")
    rule(cfg.batch_size >= 1, "batch_size must be >= 1")
    rule(cfg.rounds >= 0, "rounds must be >= 0")
    rule(cfg.seed >= 0, "seed must be a non-negative integer")
    rule(cfg.strategy in STRATEGIES, f"strategy must be one of {', '.join(STRATEGIES)}")
    rule(cfg.task in ("classification", "regression"), "task must be classification or regression")
    rule(cfg.lr_server > 0 and cfg.lr_client > 0, "learning rates must be positive")
    rule(0.0 <= cfg.straggler_fraction <= 1.0, "straggler_fraction must lie in [0, 1]")
    rule(min(cfg.base_delay, cfg.straggler_base, cfg.straggler_slope) >= 0, "delay means must be >= 0")
    rule(cfg.bandwidth_mbps > 0, "bandwidth_mbps must be positive")
    rule(cfg.ignore_deadline_factor > 0, "ignore_deadline_factor must be positive")
    rule(cfg.dp_epsilon > 0 and cfg.dp_clip > 0, "dp_epsilon and dp_clip must be positive")
    rule(cfg.w_max > 0, "w_max must be positive")
    rule(0.0 < cfg.train_fraction < 1.0, "train_fraction must lie in (0, 1)")
    rule(cfg.eval_every >= 0, "eval_every must be >= 0")
    rule(cfg.dataset in ("synthetic", "csv"), "dataset must be synthetic or csv")
    if cfg.dataset == "csv":
        rule(cfg.csv_path is not None, "dataset=csv requires csv_path")
        rule(cfg.label_column is not None, "dataset=csv requires label_column")
    else:
        rule(cfg.synthetic_features >= cfg.n_clients, "synthetic_features must be >= n_clients")
        rule(cfg.synthetic_samples >= 2, "synthetic_samples must be >= 2")
        rule(cfg.synthetic_classes >= 2, "synthetic_classes must be >= 2")
        rule(cfg.task == "classification", "synthetic data is classification only")
        check_overflow(cfg, partition_sizes(cfg.synthetic_features, cfg.n_clients))
    return cfg


def partition_sizes(d: int, n: int) -> list[int]:
    """Contiguous block sizes for ``d`` features over ``n`` clients, remainder to the left."""
    base, rem = divmod(d, n)
    return [base + (1 if i < rem else 0) for i in range(n)]


def check_overflow(cfg: ExperimentConfig, feature_sizes: list[int]) -> None:
    qc = QuantConfig(cfg.l_x, cfg.l_w, PrimeField(cfg.prime), cfg.n_clients, 1.0, cfg.w_max)
    try:
        qc.check_overflow(zip((s + 1 for s in feature_sizes), cfg.degrees()))
    except OverflowBoundViolation as exc:
        raise ValidationError(f"overflow bound: {exc}") from exc


def parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(f"line {lineno}: empty key")
        if key in pairs:
            raise ParseError(f"line {lineno}: duplicate key", key)
        pairs[key] = value
    return pairs


def from_mapping(values: Mapping[str, Any]) -> ExperimentConfig:
    """Build a validated config; string values are parsed per the schema."""
    kwargs = {}
    for key, value in values.items():
        if key not in _PARSERS:
            raise ParseError("unknown key", key)
        if isinstance(value, str):
            try:
                value = _PARSERS[key](value)
            except ValueError as exc:
                raise ParseError(f"bad value {value!r} ({exc})", key) from exc
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return validate(ExperimentConfig(**kwargs))


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_pairs(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return from_mapping(values)
