"""Run configuration files.

One ``key = value`` pair per line; ``#`` starts a comment; blank lines are
ignored.  Relative paths are resolved against the directory of the file.
Keys not listed in :data:`KEYS` are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .dataset import ALIGNMENTS, RhythmSpec
from .model import PRESETS, ModelConfig
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    corpus_path: Path | None = None
    header: bool = False
    run_dir: Path | None = None
    min_len: int = 3
    rhythm_norm: float = 0.2
    rhythm_clip: int = 800
    rhythm_alignment: str = "next"
    preset: str = "lightsans-cfg"
    fusion: str = "bf"
    num_layers: int = 2
    num_heads: int = 2
    hidden_dim: int | None = None
    inner_dim: int | None = None
    dropout: float = 0.5
    attention_dropout: float = 0.5
    max_len: int = 50
    mlp_linear_only: bool = False
    freeze_zero_rhythm: bool = False
    epochs: int = 100
    patience: int = 10
    batch_size: int = 256
    lr: float = 0.001
    seed: int = 0
    eval_batch_size: int = 512
    source: Path | None = field(default=None, repr=False)

    @property
    def rhythm(self) -> RhythmSpec:
        return RhythmSpec(self.rhythm_norm, self.rhythm_clip)

    def model_config(self, vocab_size: int) -> ModelConfig:
        dims = dict(PRESETS[self.preset])
        if self.hidden_dim is not None:
            dims["hidden_dim"] = self.hidden_dim
        if self.inner_dim is not None:
            dims["inner_dim"] = self.inner_dim
        return ModelConfig(
            vocab_size=vocab_size, bucket_count=self.rhythm.bucket_count, num_layers=self.num_layers,
            num_heads=self.num_heads, dropout=self.dropout, attention_dropout=self.attention_dropout,
            max_len=self.max_len, fusion_kind=self.fusion, mlp_linear_only=self.mlp_linear_only,
            freeze_zero_rhythm=self.freeze_zero_rhythm, **dims,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, patience=self.patience, batch_size=self.batch_size, lr=self.lr,
                           seed=self.seed, rhythm=self.rhythm, alignment=self.rhythm_alignment,
                           eval_batch_size=self.eval_batch_size)


_PATH_KEYS = {"corpus_path", "run_dir"}
KEYS = {f.name: f for f in fields(RunConfig) if f.name != "source"}


def _convert(key: str, text: str):
    if key in _PATH_KEYS:
        return Path(text)
    if key in ("hidden_dim", "inner_dim"):
        return int(text)
    kind = KEYS[key].type
    if kind == "bool":
        return _bool(text)
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} (line {lineno}): {exc}") from None
    cfg = RunConfig(**values)
    if base_dir is not None:
        for key in _PATH_KEYS:
            p = getattr(cfg, key)
            if p is not None and not p.is_absolute():
                setattr(cfg, key, base_dir / p)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.preset!r}; expected one of {sorted(PRESETS)}")
    if cfg.fusion not in ("none", "bf", "mf", "gf"):
        raise ConfigError(f"unknown fusion {cfg.fusion!r}")
    if cfg.rhythm_alignment not in ALIGNMENTS:
        raise ConfigError(f"unknown rhythm_alignment {cfg.rhythm_alignment!r}")
    if cfg.rhythm_norm <= 0 or cfg.rhythm_clip < 1:
        raise ConfigError("rhythm_norm must be > 0 and rhythm_clip >= 1")
    if cfg.patience > cfg.epochs:
        raise ConfigError(f"patience {cfg.patience} exceeds epochs {cfg.epochs}")
    if cfg.batch_size < 1 or cfg.eval_batch_size < 1:
        raise ConfigError("batch sizes must be >= 1")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    cfg = parse_config(path.read_text(encoding="utf-8"), path.parent)
    cfg.source = path
    return cfg
