"""Synthetic interaction logs whose next item depends on the elapsed time.

Each transition draws a gap class (short with probability ``1 - p_long``,
long otherwise), a whole number of days from that class, and then the next
item by the class rule ``next = current + step`` (wrapping inside
``[1, num_items]``).  With probability ``noise_prob`` the rule is ignored and
the next item is uniform.  A model that sees the gap can follow the rule; one
that does not is stuck guessing the more frequent class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .numerics import make_rng

BASE_EPOCH = 1_600_000_000
USER_OFFSET_SECONDS = 60
DAY = 86400


@dataclass(frozen=True)
class SynthConfig:
    num_users: int = 3000
    num_items: int = 200
    min_len: int = 10
    max_len: int = 30
    gap_threshold_days: float = 7.0
    short_step: int = 1
    long_step: int = 2
    p_long: float = 0.5
    short_mean_days: float = 1.0
    long_extra_mean_days: float = 14.0
    noise_prob: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.gap_threshold_days <= 0:
            raise ValueError("gap_threshold_days must be positive")
        if not 0.0 <= self.noise_prob < 1.0:
            raise ValueError("noise_prob must lie in [0, 1)")
        if not 0.0 <= self.p_long <= 1.0:
            raise ValueError("p_long must lie in [0, 1]")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError("need 1 <= min_len <= max_len")
        if self.num_items < 1 or self.num_users < 0:
            raise ValueError("num_items must be >= 1 and num_users >= 0")
        if self.short_step % self.num_items == self.long_step % self.num_items:
            raise ValueError("short and long rules must lead to different items")


def step_item(item: int, step: int, num_items: int) -> int:
    return (item - 1 + step) % num_items + 1


def is_long(gap_days: float, cfg: SynthConfig) -> bool:
    return gap_days >= cfg.gap_threshold_days


def rule_next(item: int, gap_days: float, cfg: SynthConfig) -> int:
    """The item the generating rule picks after ``item`` when ``gap_days`` elapsed."""
    step = cfg.long_step if is_long(gap_days, cfg) else cfg.short_step
    return step_item(item, step, cfg.num_items)


def apply_rules(start_item: int, gaps_days: Sequence[float], cfg: SynthConfig) -> list[int]:
    """Noiseless item path; ``gaps_days[0]`` is the (ignored) gap before the first item."""
    items = [start_item]
    for gap in gaps_days[1:]:
        items.append(rule_next(items[-1], gap, cfg))
    return items


def _geometric_days(rng: np.random.Generator, mean: float) -> int:
    if mean <= 0:
        return 0
    return int(rng.geometric(1.0 / (1.0 + mean))) - 1


def _draw_gap(rng: np.random.Generator, cfg: SynthConfig) -> int:
    threshold = int(np.ceil(cfg.gap_threshold_days))
    if rng.random() < cfg.p_long:
        return threshold + _geometric_days(rng, cfg.long_extra_mean_days)
    while True:
        gap = _geometric_days(rng, cfg.short_mean_days)
        if gap < cfg.gap_threshold_days:
            return gap


@dataclass(frozen=True)
class SynthUser:
    user_id: str
    items: tuple[int, ...]
    times: tuple[int, ...]
    gaps_days: tuple[int, ...]


def generate_users(cfg: SynthConfig) -> Iterator[SynthUser]:
    for u in range(cfg.num_users):
        rng = make_rng(cfg.seed, "synth-user", str(u))
        length = int(rng.integers(cfg.min_len, cfg.max_len + 1))
        item = int(rng.integers(1, cfg.num_items + 1))
        t = BASE_EPOCH + u * USER_OFFSET_SECONDS
        items, times, gaps = [item], [t], [0]
        for _ in range(length - 1):
            gap = _draw_gap(rng, cfg)
            nxt = rule_next(item, gap, cfg)
            if rng.random() < cfg.noise_prob:
                nxt = int(rng.integers(1, cfg.num_items + 1))
            t += gap * DAY
            item = nxt
            items.append(item)
            times.append(t)
            gaps.append(gap)
        yield SynthUser(f"user{u}", tuple(items), tuple(times), tuple(gaps))


def item_name(index: int) -> str:
    return f"app{index}"


def generate_lines(cfg: SynthConfig) -> Iterator[str]:
    for user in generate_users(cfg):
        for item, t in zip(user.items, user.times):
            yield f"{user.user_id},{item_name(item)},{t}\n"


def generate(cfg: SynthConfig) -> str:
    """The whole log in ``user_id,item_id,timestamp`` format."""
    return "".join(generate_lines(cfg))


def gap_blind_cap(cfg: SynthConfig) -> float:
    """Top-1 accuracy ceiling of any predictor that ignores the gap."""
    return max(cfg.p_long, 1.0 - cfg.p_long) * (1.0 - cfg.noise_prob) + cfg.noise_prob / cfg.num_items
