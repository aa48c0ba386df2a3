"""Full-item-set leave-one-out ranking metrics and the popularity baseline."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import HeldOut, RhythmSpec, SplitSpec, held_out_inputs, trim_padding

CUTOFFS = (10, 15, 20)

# A scorer maps a batch of held-out examples to a (batch, vocab_size) score matrix.
Scorer = Callable[[Sequence[HeldOut]], np.ndarray]


def rank_of_target(scores, target: int) -> int:
    """1-based rank of ``target`` among items 1..V-1 (index 0 is padding).

    Items scoring strictly higher rank ahead, and so do equal-scoring items
    with a smaller index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if target == 0:
        raise ValueError("target is the padding index")
    if not 1 <= target < scores.shape[-1]:
        raise IndexError(f"target {target} outside [1, {scores.shape[-1] - 1}]")
    cand = scores[1:]
    s = scores[target]
    ahead = np.count_nonzero(cand > s) + np.count_nonzero(cand[: target - 1] == s)
    return int(ahead) + 1


def ranks_of_targets(scores: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Row-wise :func:`rank_of_target` for a (B, V) score matrix."""
    targets = np.asarray(targets, dtype=np.int64)
    if (targets < 1).any() or (targets >= scores.shape[1]).any():
        raise IndexError("targets must lie in [1, vocab_size)")
    cand = scores[:, 1:]
    s = scores[np.arange(len(targets)), targets][:, None]
    before = np.arange(1, scores.shape[1])[None, :] < targets[:, None]
    return 1 + np.count_nonzero(cand > s, axis=1) + np.count_nonzero((cand == s) & before, axis=1)


def hit_at_k(rank: int, k: int) -> int:
    return int(rank <= k)


def ndcg_at_k(rank: int, k: int) -> float:
    return 1.0 / math.log2(rank + 1) if rank <= k else 0.0


@dataclass
class MetricsReport:
    ndcg: dict[int, float]
    hit: dict[int, float]
    num_users_evaluated: int
    model_tag: str = ""
    ranks: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "ndcg": {str(k): self.ndcg[k] for k in sorted(self.ndcg)},
            "hit": {str(k): self.hit[k] for k in sorted(self.hit)},
            "num_users": self.num_users_evaluated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def metrics_from_ranks(ranks, model_tag: str = "", cutoffs=CUTOFFS) -> MetricsReport:
    """Average HIT@K / NDCG@K over users, summing in the given user order."""
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.size == 0:
        raise ValueError("no users to evaluate")
    hit, ndcg = {}, {}
    for k in cutoffs:
        hit[k] = math.fsum(hit_at_k(int(r), k) for r in ranks) / ranks.size
        ndcg[k] = math.fsum(ndcg_at_k(int(r), k) for r in ranks) / ranks.size
    return MetricsReport(ndcg, hit, int(ranks.size), model_tag, ranks)


def evaluate(scorer: Scorer, split: SplitSpec, which: str = "test", model_tag: str = "",
             batch_size: int = 512, cutoffs=CUTOFFS) -> MetricsReport:
    examples = split.held_out(which)
    if not examples:
        raise ValueError(f"no eligible users in the {which} split")
    ranks = []
    for start in range(0, len(examples), batch_size):
        batch = examples[start:start + batch_size]
        scores = np.asarray(scorer(batch), dtype=np.float64)
        ranks.append(ranks_of_targets(scores, np.array([ex.target for ex in batch])))
    return metrics_from_ranks(np.concatenate(ranks), model_tag, cutoffs)


def pop_scorer(split: SplitSpec, vocab_size: int) -> Scorer:
    """Score every item by its interaction count in the training split."""
    counts = np.zeros(vocab_size, dtype=np.float64)
    for seq in split.train:
        np.add.at(counts, np.asarray(seq.items, dtype=np.int64), 1.0)
    counts[0] = -np.inf

    def score(batch: Sequence[HeldOut]) -> np.ndarray:
        return np.broadcast_to(counts, (len(batch), vocab_size)).copy()

    return score


def model_scorer(model, rhythm: RhythmSpec, alignment: str = "next") -> Scorer:
    """Eval-mode last-position logits of a :class:`~rhythmrec.model.SeqRecModel`."""

    def score(batch: Sequence[HeldOut]) -> np.ndarray:
        items, buckets, mask = held_out_inputs(batch, rhythm, alignment, model.cfg.max_len)
        mask, items, buckets = trim_padding(mask, items, buckets)
        return model.score_last(items, buckets, mask)

    return score
