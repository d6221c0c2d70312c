"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .exceptions import ConfigError


def _opt(default, help):
    return field(default=default, metadata={"help": help})


@dataclass
class ExperimentConfig:
    # files
    kb: str = _opt("", "serialized knowledge base (.ntkb)")
    vectors: str = _opt("", "word-vector text file")
    test_set: str = _opt("", "test-set TSV(s), comma separated")
    output: str = _opt("", "output file or directory")
    checkpoint: str = _opt("", "model checkpoint(s), comma separated")
    predictions: str = _opt("", "prediction TSV(s), comma separated (one per run)")
    baseline_predictions: str = _opt("", "prediction TSV whose entities are the only eligible ones")
    exclude: str = _opt("", "test-set TSV(s) whose entities the sampler must skip")
    # ingestion / features
    closure: bool = _opt(False, "expand asserted types with their ancestors")
    dim: int = _opt(300, "word-vector dimensionality")
    normalize_c: bool = _opt(False, "L1-normalize input C")
    use_cache: bool = _opt(True, "reuse the on-disk feature cache")
    # model
    architecture: str = _opt("neutype1", "neutype1 or neutype2")
    inputs: str = _opt("a", "active inputs, e.g. a, a+b, a+b+c")
    hidden_size: int = _opt(512, "nodes per hidden layer")
    dropout: str = _opt("", "position:p pairs, e.g. before_M1:0.2")
    # training
    optimizer: str = _opt("sgd", "sgd, sgd_momentum or adam")
    learning_rate: float = _opt(0.1, "step size")
    momentum: float = _opt(0.9, "momentum for sgd_momentum")
    adam_beta1: float = _opt(0.9, "Adam first-moment decay")
    adam_beta2: float = _opt(0.999, "Adam second-moment decay")
    adam_epsilon: float = _opt(1e-8, "Adam denominator epsilon")
    batch_size: int = _opt(64, "mini-batch size")
    max_epochs: int = _opt(50, "epoch limit")
    patience: int = _opt(5, "epochs without validation improvement before stopping")
    validation_fraction: float = _opt(0.1, "share of training data held out for early stopping")
    runs: int = _opt(5, "independent training sessions")
    seed: int = _opt(0, "base seed")
    seeds: str = _opt("", "explicit comma-separated seeds (default seed, seed+1, ...)")
    # prediction
    top_k: int = _opt(1, "ranked types written per entity")
    # sampling
    m: int = _opt(10, "minimum test entities per top-level branch")
    total: int = _opt(1000, "test-set size")
    reserve_for_training: bool = _opt(True, "keep one entity of small branches for training")
    require_description: bool = _opt(True, "only sample entities with a description")
    # evaluation
    mode: str = _opt("strict", "strict, linear or exponential")
    gain_base: float = _opt(2.0, "base of the exponential gain")
    pairing: str = _opt("entity", "t-test pairing unit: entity or run")
    baseline: str = _opt("SDType", "system other systems are tested against in report")
    # BM25
    k1: float = _opt(1.2, "BM25 k1")
    b: float = _opt(0.75, "BM25 b")
    # synthetic data
    n_entities: int = _opt(2000, "entities in a synthetic KB")
    link_regime: str = _opt("dense", "synthetic link regime: dense or sparse")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def defaults_text(cls) -> str:
        lines = []
        for f in fields(cls):
            lines.append(f"  {f.name} = {_format(f.default)}    # {f.metadata['help']}")
        return "\n".join(lines)

    def update(self, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(self)}
        changes = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            changes[key] = _coerce(key, raw, type(getattr(self, key)))
        return dataclasses.replace(self, **changes)

    def seed_list(self) -> list[int]:
        if self.seeds:
            seeds = [int(s) for s in split_list(self.seeds)]
            if len(seeds) != self.runs:
                raise ConfigError(f"{len(seeds)} seeds given for runs={self.runs}")
            return seeds
        return [self.seed + i for i in range(self.runs)]

    def dropout_spec(self) -> tuple[tuple[str, float], ...]:
        out = []
        for item in split_list(self.dropout):
            pos, _, p = item.partition(":")
            try:
                out.append((pos.strip(), float(p)))
            except ValueError:
                raise ConfigError(f"bad dropout entry {item!r}; use position:p") from None
        return tuple(out)


def split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(key, raw, kind):
    if not isinstance(raw, str):
        return kind(raw)
    text = raw.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {raw!r} as "
                          f"{kind.__name__}") from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip()
        if key not in ExperimentConfig.keys():
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values
