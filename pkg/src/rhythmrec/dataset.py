"""Interaction log ingestion, per-user sequences, rhythm tracks and splits."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

SECONDS_PER_DAY = 86400.0


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Interaction:
    user_id: str
    item_id: str
    timestamp: int

    def __post_init__(self):
        if not self.user_id or not self.item_id:
            raise ValueError("user_id and item_id must be non-empty")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


def parse_interactions(source: Iterable[str], header: bool = False) -> list[Interaction]:
    """Parse ``user_id,item_id,timestamp`` lines; blank lines are skipped."""
    out = []
    for lineno, raw in enumerate(source, start=1):
        if header and lineno == 1:
            continue
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise ParseError(lineno, f"expected 3 comma-separated fields, got {len(fields)}")
        user, item, ts = fields
        try:
            stamp = int(ts)
        except ValueError:
            raise ParseError(lineno, f"timestamp {ts!r} is not an integer") from None
        try:
            out.append(Interaction(user, item, stamp))
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    return out


@dataclass(frozen=True)
class UserSequence:
    user_id: str
    items: tuple[int, ...]
    times: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Corpus:
    """Chronological per-user sequences over a dense item vocabulary.

    Item index 0 is the padding symbol; real items are numbered from 1 in the
    order they first appear in the input.
    """

    item_ids: tuple[str, ...]
    sequences: tuple[UserSequence, ...]
    item_index: dict[str, int] = field(repr=False, compare=False, hash=False, default_factory=dict)

    @property
    def num_users(self) -> int:
        return len(self.sequences)

    @property
    def num_items(self) -> int:
        return len(self.item_ids)

    @property
    def vocab_size(self) -> int:
        """Number of item slots including padding."""
        return len(self.item_ids) + 1

    def item_id(self, index: int) -> str:
        if not 1 <= index <= len(self.item_ids):
            raise IndexError(f"item index {index} outside [1, {len(self.item_ids)}]")
        return self.item_ids[index - 1]


def build_corpus(interactions: Sequence[Interaction]) -> Corpus:
    item_index: dict[str, int] = {}
    per_user: dict[str, list[tuple[int, int]]] = {}
    for it in interactions:
        idx = item_index.get(it.item_id)
        if idx is None:
            idx = item_index[it.item_id] = len(item_index) + 1
        per_user.setdefault(it.user_id, []).append((it.timestamp, idx))
    sequences = []
    for user, events in per_user.items():
        events.sort(key=lambda e: e[0])  # stable: ties keep input order
        sequences.append(UserSequence(user, tuple(e[1] for e in events), tuple(e[0] for e in events)))
    return Corpus(tuple(item_index), tuple(sequences), item_index)


# ---------------------------------------------------------------------------
# rhythm


def compute_rhythm(timestamps: Sequence[int]) -> list[float]:
    """Gaps between consecutive timestamps in days; the first gap is 0."""
    if len(timestamps) == 0:
        raise ValueError("compute_rhythm needs at least one timestamp")
    out = [0.0]
    for prev, cur in zip(timestamps, timestamps[1:]):
        if cur < prev:
            raise ValueError(f"timestamps must be non-decreasing ({prev} followed by {cur})")
        out.append((cur - prev) / SECONDS_PER_DAY)
    return out


def bucketize_rhythm(deltas: Sequence[float], norm_factor: float = 0.2, clip_max: int = 800) -> list[int]:
    """min(round(delta * norm_factor), clip_max), rounding halves upward."""
    if norm_factor <= 0:
        raise ValueError("norm_factor must be positive")
    if clip_max < 1:
        raise ValueError("clip_max must be >= 1")
    return [min(int(math.floor(d * norm_factor + 0.5)), clip_max) for d in deltas]


@dataclass(frozen=True)
class RhythmTrack:
    deltas: tuple[float, ...]
    buckets: tuple[int, ...]


@dataclass(frozen=True)
class RhythmSpec:
    norm_factor: float = 0.2
    clip_max: int = 800

    @property
    def bucket_count(self) -> int:
        return self.clip_max + 1

    def track(self, timestamps: Sequence[int]) -> RhythmTrack:
        deltas = compute_rhythm(timestamps)
        return RhythmTrack(tuple(deltas), tuple(bucketize_rhythm(deltas, self.norm_factor, self.clip_max)))

    def buckets(self, timestamps: Sequence[int]) -> list[int]:
        return bucketize_rhythm(compute_rhythm(timestamps), self.norm_factor, self.clip_max)


# ---------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class HeldOut:
    """A held-out target with the history that precedes it."""

    user_id: str
    prefix_items: tuple[int, ...]
    prefix_times: tuple[int, ...]
    target: int
    target_time: int


@dataclass(frozen=True)
class SplitSpec:
    train: tuple[UserSequence, ...]
    valid: tuple[HeldOut, ...]
    test: tuple[HeldOut, ...]

    def held_out(self, which: str) -> tuple[HeldOut, ...]:
        if which == "valid":
            return self.valid
        if which == "test":
            return self.test
        raise ValueError(f"unknown split {which!r}; expected 'valid' or 'test'")


def leave_one_out_split(corpus: Corpus, min_len: int = 3) -> SplitSpec:
    train, valid, test = [], [], []
    for seq in corpus.sequences:
        n = len(seq)
        if n < min_len:
            train.append(seq)
            continue
        items, times = seq.items, seq.times
        train.append(UserSequence(seq.user_id, items[: n - 2], times[: n - 2]))
        valid.append(HeldOut(seq.user_id, items[: n - 2], times[: n - 2], items[n - 2], times[n - 2]))
        test.append(HeldOut(seq.user_id, items[: n - 1], times[: n - 1], items[n - 1], times[n - 1]))
    return SplitSpec(tuple(train), tuple(valid), tuple(test))


def pad_truncate(items: Sequence[int], buckets: Sequence[int], max_len: int = 50):
    """Keep the most recent ``max_len`` entries and left-pad with zeros.

    Returns ``(items, buckets, mask)`` as numpy arrays of length ``max_len``.
    """
    if len(items) != len(buckets):
        raise ValueError(f"items ({len(items)}) and buckets ({len(buckets)}) differ in length")
    items = list(items)[-max_len:]
    buckets = list(buckets)[-max_len:]
    pad = max_len - len(items)
    out_items = np.zeros(max_len, dtype=np.int64)
    out_buckets = np.zeros(max_len, dtype=np.int64)
    mask = np.zeros(max_len, dtype=bool)
    out_items[pad:] = items
    out_buckets[pad:] = buckets
    mask[pad:] = True
    return out_items, out_buckets, mask


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class StatsReport:
    unique_users: int
    unique_items: int
    avg_interactions_per_user: float
    avg_interactions_per_item: float
    max_interactions_by_user: int
    max_interactions_on_item: int
    total_interactions: int
    same_day_consecutive_pct: float

    def to_dict(self) -> dict:
        return asdict(self)


def dataset_stats(corpus: Corpus) -> StatsReport:
    total = sum(len(s) for s in corpus.sequences)
    item_counts = Counter(i for s in corpus.sequences for i in s.items)
    pairs = same_day = 0
    for s in corpus.sequences:
        for gap in compute_rhythm(s.times)[1:] if len(s) else ():
            pairs += 1
            same_day += gap < 1.0
    users, items = corpus.num_users, len(item_counts)
    return StatsReport(
        unique_users=users,
        unique_items=items,
        avg_interactions_per_user=total / users if users else 0.0,
        avg_interactions_per_item=total / items if items else 0.0,
        max_interactions_by_user=max((len(s) for s in corpus.sequences), default=0),
        max_interactions_on_item=max(item_counts.values(), default=0),
        total_interactions=total,
        same_day_consecutive_pct=100.0 * same_day / pairs if pairs else 0.0,
    )


# ---------------------------------------------------------------------------
# model inputs

ALIGNMENTS = ("next", "current")


def aligned_buckets(times: Sequence[int], rhythm: RhythmSpec, alignment: str = "next") -> list[int]:
    """Rhythm buckets for the inputs of a sequence whose last timestamp is the prediction time.

    ``times`` covers the input interactions plus the interaction being
    predicted, so the result has ``len(times) - 1`` entries.  With ``next``
    alignment input position j carries the gap between interaction j and the
    one predicted there (the elapsed time at the moment of recommendation);
    with ``current`` it carries the gap that ended at interaction j.
    """
    if alignment not in ALIGNMENTS:
        raise ValueError(f"unknown rhythm alignment {alignment!r}; expected one of {ALIGNMENTS}")
    track = rhythm.buckets(times)
    return track[1:] if alignment == "next" else track[:-1]


def held_out_inputs(examples: Sequence[HeldOut], rhythm: RhythmSpec, alignment: str, max_len: int):
    """Stack padded (items, buckets, mask) arrays for a batch of held-out targets."""
    n = len(examples)
    items = np.zeros((n, max_len), dtype=np.int64)
    buckets = np.zeros((n, max_len), dtype=np.int64)
    mask = np.zeros((n, max_len), dtype=bool)
    for row, ex in enumerate(examples):
        b = aligned_buckets(ex.prefix_times + (ex.target_time,), rhythm, alignment)
        items[row], buckets[row], mask[row] = pad_truncate(ex.prefix_items, b, max_len)
    return items, buckets, mask


def trim_padding(mask: np.ndarray, *arrays: np.ndarray):
    """Drop leading columns that are padding in every row of a left-padded batch."""
    real = np.flatnonzero(mask.any(axis=0))
    start = int(real[0]) if real.size else mask.shape[1] - 1
    return (mask[:, start:],) + tuple(a[:, start:] for a in arrays)
