"""Run configuration: every tunable knob with its default and range.

Config files are plain ``key = value`` lines with ``#`` comments.
Unknown keys and out-of-range values are rejected by name, so a typo
fails loudly instead of silently training with a default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import DataError


@dataclass
class RunConfig:
    seed: int = 0
    # embeddings
    embed_dim: int = 300
    ngram_min: int = 3
    ngram_max: int = 6
    ngram_buckets: int = 1 << 18
    embed_seed: int = 0
    # network
    lstm_units: int = 100
    filters: int = 200
    kernel_sizes: tuple[int, ...] = (3, 4, 5)
    dense_units: int = 100
    leaky_slope: float = 0.3
    dropout: float = 0.5
    max_len: int = 100
    # optimizer
    lr: float = 0.002
    beta1: float = 0.99
    beta2: float = 0.999
    eps: float = 1e-8
    schedule_decay: float = 0.004
    # training
    pretrain_epochs: int = 10
    pretrain_batch: int = 128
    finetune_epochs: int = 50
    finetune_batch: int = 32
    # data
    tail: int = 808
    min_mentions: int = 2
    min_user_freq: int = 5
    # topics and clusters
    k_topics: int = 20
    k_users: int = 50
    lda_alpha: float = 0.0  # 0 means 10/k
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    infer_iterations: int = 50
    # baseline
    baseline_l2: float = 1e-4
    baseline_epochs: int = 50
    baseline_lr: float = 0.01

    def alpha_for(self, k: int) -> float:
        return self.lda_alpha if self.lda_alpha > 0 else 10.0 / k


_POSITIVE_INT = (
    "embed_dim", "ngram_min", "ngram_max", "ngram_buckets", "lstm_units",
    "filters", "dense_units", "max_len", "pretrain_epochs", "pretrain_batch",
    "finetune_epochs", "finetune_batch", "tail", "min_mentions", "k_topics",
    "k_users", "lda_iterations", "infer_iterations", "baseline_epochs",
)
_NON_NEGATIVE_INT = ("seed", "embed_seed", "min_user_freq")
_POSITIVE_FLOAT = ("lr", "eps", "schedule_decay", "lda_beta", "baseline_lr")
_NON_NEGATIVE_FLOAT = ("leaky_slope", "lda_alpha", "baseline_l2")
_UNIT_FLOAT = ("dropout", "beta1", "beta2")


def _validate(cfg: RunConfig) -> RunConfig:
    for name in _POSITIVE_INT:
        if getattr(cfg, name) < 1:
            raise DataError(f"config {name} must be a positive integer")
    for name in _NON_NEGATIVE_INT:
        if getattr(cfg, name) < 0:
            raise DataError(f"config {name} must be >= 0")
    for name in _POSITIVE_FLOAT:
        if getattr(cfg, name) <= 0:
            raise DataError(f"config {name} must be > 0")
    for name in _NON_NEGATIVE_FLOAT:
        if getattr(cfg, name) < 0:
            raise DataError(f"config {name} must be >= 0")
    for name in _UNIT_FLOAT:
        if not 0.0 <= getattr(cfg, name) < 1.0:
            raise DataError(f"config {name} must be in [0, 1)")
    if cfg.ngram_min > cfg.ngram_max:
        raise DataError("config ngram_min must not exceed ngram_max")
    ks = cfg.kernel_sizes
    if not ks or list(ks) != sorted(set(ks)) or min(ks) < 1:
        raise DataError("config kernel_sizes must be distinct ascending positive ints")
    if cfg.k_topics < 2 or cfg.k_users < 2:
        raise DataError("config k_topics and k_users must be at least 2")
    return cfg


def _parse_value(name: str, kind: type, raw: str):
    raw = raw.strip()
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise DataError(f"config {name}: {raw!r} is not an integer") from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise DataError(f"config {name}: {raw!r} is not a number") from None
    # kernel_sizes: comma-separated ints
    try:
        return tuple(int(p) for p in raw.split(",") if p.strip())
    except ValueError:
        raise DataError(f"config {name}: {raw!r} is not a comma-separated int list") from None


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file values, then explicit overrides; validated."""
    cfg = RunConfig()
    types = {f.name: (int if f.type == "int" else float if f.type == "float" else tuple)
             for f in fields(RunConfig)}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise DataError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = line.split("=", 1)
                key = key.strip()
                if key not in types:
                    raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
                setattr(cfg, key, _parse_value(key, types[key], raw))
    for key, value in (overrides or {}).items():
        if key not in types:
            raise DataError(f"unknown config key {key!r}")
        if value is not None:
            setattr(cfg, key, value)
    return _validate(cfg)
