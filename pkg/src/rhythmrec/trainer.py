"""Autoregressive next-item training with validation-driven early stopping."""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from . import evaluator
from .dataset import RhythmSpec, SplitSpec, UserSequence, aligned_buckets, pad_truncate, trim_padding
from .model import ModelConfig, SeqRecModel
from .numerics import Adam, checkpoint, cross_entropy, make_rng

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    patience: int = 10
    batch_size: int = 256
    lr: float = 0.001
    seed: int = 0
    rhythm: RhythmSpec = RhythmSpec()
    alignment: str = "next"
    eval_batch_size: int = 512

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience > self.epochs:
            raise ValueError(f"patience {self.patience} exceeds epochs {self.epochs}")


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    valid_metric: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    seconds: float = 0.0
    best_digest: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class Batch:
    items: np.ndarray
    buckets: np.ndarray
    targets: np.ndarray
    mask: np.ndarray


def training_rows(sequences: Sequence[UserSequence], rhythm: RhythmSpec, alignment: str, max_len: int):
    """Shifted (input, target) rows for every sequence with at least two items."""
    rows = []
    for seq in sequences:
        if len(seq) < 2:
            continue
        buckets = aligned_buckets(seq.times, rhythm, alignment)
        items, bk, mask = pad_truncate(seq.items[:-1], buckets, max_len)
        targets, _, _ = pad_truncate(seq.items[1:], buckets, max_len)
        rows.append((items, bk, targets, mask))
    return rows


def make_batches(split: SplitSpec, batch_size: int, rng: np.random.Generator, rhythm: RhythmSpec = RhythmSpec(),
                 alignment: str = "next", max_len: int = 50, rows=None) -> Iterator[Batch]:
    """One epoch of shuffled batches; input is s[:-1] and targets are s[1:]."""
    if rows is None:
        rows = training_rows(split.train, rhythm, alignment, max_len)
    order = rng.permutation(len(rows))
    for start in range(0, len(rows), batch_size):
        chunk = [rows[i] for i in order[start:start + batch_size]]
        items, buckets, targets, mask = (np.stack(col) for col in zip(*chunk))
        mask, items, buckets, targets = trim_padding(mask, items, buckets, targets)
        yield Batch(items, buckets, targets, mask)


def batch_loss(model: SeqRecModel, batch: Batch, training: bool, rng):
    logits = model.forward(batch.items, batch.buckets, batch.mask, training=training, rng=rng)
    v = logits.shape[-1]
    return cross_entropy(logits.reshape(-1, v), batch.targets.reshape(-1), batch.mask.reshape(-1))


def validation_ndcg10(model: SeqRecModel, split: SplitSpec, cfg: TrainConfig) -> float:
    scorer = evaluator.model_scorer(model, cfg.rhythm, cfg.alignment)
    report = evaluator.evaluate(scorer, split, "valid", batch_size=cfg.eval_batch_size, cutoffs=(10,))
    return report.ndcg[10]


def train(split: SplitSpec, model_cfg: ModelConfig, cfg: TrainConfig, run_dir: str | Path | None = None,
          validate: Callable[[SeqRecModel, int], float] | None = None,
          progress=sys.stderr) -> tuple[SeqRecModel, TrainReport]:
    """Train with Adam, keep the parameters of the best validation epoch.

    ``validate(model, epoch)`` defaults to NDCG@10 on the validation targets.
    Improvement means strictly greater than the best value so far; training
    stops once ``patience`` consecutive epochs fail to improve.
    """
    rows = training_rows(split.train, cfg.rhythm, cfg.alignment, model_cfg.max_len)
    if not rows:
        raise ValueError("training split has no sequence with at least two interactions")
    if validate is None:
        validate = lambda m, _epoch: validation_ndcg10(m, split, cfg)  # noqa: E731

    model = SeqRecModel.create(model_cfg, cfg.seed)
    opt = Adam(model.trainable(), lr=cfg.lr)
    shuffle_rng = make_rng(cfg.seed, "shuffle")
    dropout_rng = make_rng(cfg.seed, "dropout")
    report = TrainReport()
    best_metric = -math.inf
    best_arrays = model.arrays()
    stale = 0
    started = time.perf_counter()
    ckpt_path = Path(run_dir) / "checkpoint.bin" if run_dir is not None else None

    for epoch in range(1, cfg.epochs + 1):
        total, count = 0.0, 0
        for batch in make_batches(split, cfg.batch_size, shuffle_rng, rows=rows):
            opt.zero_grad()
            loss = batch_loss(model, batch, True, dropout_rng)
            loss.backward()
            if "item_emb" in opt.params:
                opt.params["item_emb"].grad[0] = 0.0
            opt.step()
            n = int(batch.mask.sum())
            total += loss.item() * n
            count += n
        epoch_loss = total / count
        metric = float(validate(model, epoch))
        report.epoch_losses.append(epoch_loss)
        report.valid_metric.append(metric)
        if progress is not None:
            print(f"epoch={epoch} loss={epoch_loss:.6f} valid_ndcg10={metric:.6f}", file=progress, flush=True)
        if metric > best_metric:
            best_metric = metric
            report.best_epoch = epoch
            best_arrays = model.arrays()
            report.best_digest = checkpoint.digest(best_arrays)
            if ckpt_path is not None:
                checkpoint.save(ckpt_path, best_arrays)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                report.stopped_early = True
                break

    report.seconds = time.perf_counter() - started
    best = SeqRecModel.from_arrays(model_cfg, best_arrays)
    if run_dir is not None:
        (Path(run_dir) / "train_report.json").write_text(report.to_json() + "\n")
    return best, report
