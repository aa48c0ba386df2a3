import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rhythmrec.dataset import (
    Interaction,
    ParseError,
    RhythmSpec,
    aligned_buckets,
    bucketize_rhythm,
    build_corpus,
    compute_rhythm,
    dataset_stats,
    leave_one_out_split,
    pad_truncate,
    parse_interactions,
    trim_padding,
)

DAY = 86400


def corpus_of(*rows):
    return build_corpus([Interaction(u, i, t) for u, i, t in rows])


# -- parsing -------------------------------------------------------------------


def test_parse_single_line():
    assert parse_interactions(["u1,appA,1600000000"]) == [Interaction("u1", "appA", 1600000000)]


def test_parse_wrong_field_count_reports_line():
    with pytest.raises(ParseError) as info:
        parse_interactions(["u1,appA"])
    assert info.value.lineno == 1


def test_parse_non_integer_timestamp_reports_line():
    with pytest.raises(ParseError) as info:
        parse_interactions(["u1,a,1", "u1,b,yesterday"])
    assert info.value.lineno == 2


def test_parse_skips_blank_lines():
    src = io.StringIO("u1,a,1\n\nu2,b,2\n")
    assert len(parse_interactions(src)) == 2


def test_parse_empty_input():
    assert parse_interactions([]) == []


def test_parse_header_flag():
    assert len(parse_interactions(["user,item,ts", "u,a,3"], header=True)) == 1


def test_parse_rejects_negative_timestamp_and_empty_ids():
    with pytest.raises(ParseError):
        parse_interactions(["u,a,-1"])
    with pytest.raises(ParseError):
        parse_interactions([",a,1"])


# -- corpus ----------------------------------------------------------------------


def test_build_corpus_sorts_by_time():
    c = corpus_of(("u1", "A", 30), ("u1", "B", 10))
    assert [c.item_id(i) for i in c.sequences[0].items] == ["B", "A"]


def test_build_corpus_shares_vocabulary():
    c = corpus_of(("u1", "A", 1), ("u2", "A", 2))
    assert c.num_items == 1
    assert c.sequences[0].items == (1,) and c.sequences[1].items == (1,)


def test_build_corpus_ties_keep_input_order():
    c = corpus_of(("u1", "A", 5), ("u1", "B", 5))
    assert [c.item_id(i) for i in c.sequences[0].items] == ["A", "B"]


def test_build_corpus_empty():
    c = build_corpus([])
    assert c.num_users == 0 and c.num_items == 0 and c.vocab_size == 1


@given(st.lists(st.tuples(st.sampled_from("uvw"), st.sampled_from("ABCDE"), st.integers(0, 50)), max_size=40))
def test_corpus_invariants(rows):
    c = corpus_of(*rows)
    assert len({s.user_id for s in c.sequences}) == c.num_users
    for s in c.sequences:
        assert list(s.times) == sorted(s.times)
        assert all(1 <= i <= c.num_items for i in s.items)


# -- rhythm ----------------------------------------------------------------------


def test_compute_rhythm_single():
    assert compute_rhythm([1000]) == [0.0]


def test_compute_rhythm_days():
    assert compute_rhythm([0, DAY, 4 * DAY]) == [0.0, 1.0, 3.0]


def test_compute_rhythm_simultaneous():
    assert compute_rhythm([5, 5, 5]) == [0.0, 0.0, 0.0]


def test_compute_rhythm_rejects_decreasing():
    with pytest.raises(ValueError):
        compute_rhythm([10, 5])


def test_bucketize_examples():
    assert bucketize_rhythm([0.0], 0.2, 800) == [0]
    assert bucketize_rhythm([10.0], 0.2, 800) == [2]
    assert bucketize_rhythm([1e6], 1.0, 800) == [800]


def test_bucketize_rounds_halves_up():
    assert bucketize_rhythm([2.5, 7.5, 12.5], 0.2, 800) == [1, 2, 3]


@given(st.lists(st.floats(0, 1e7, allow_nan=False), min_size=1, max_size=30),
       st.floats(0.01, 5.0), st.integers(1, 1000))
def test_bucketize_monotone_and_saturating(deltas, norm, clip):
    ordered = sorted(deltas)
    b = bucketize_rhythm(ordered, norm, clip)
    assert b == sorted(b)
    assert all(0 <= x <= clip for x in b)


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=30))
def test_rhythm_length_and_first_element(raw):
    times = np.cumsum(raw).tolist()
    out = compute_rhythm(times)
    assert len(out) == len(times) and out[0] == 0.0 and min(out) >= 0.0


def test_aligned_buckets_next_vs_current():
    spec = RhythmSpec(1.0, 800)
    times = [0, 2 * DAY, 2 * DAY, 9 * DAY]  # gaps 0, 2, 0, 7
    assert aligned_buckets(times, spec, "next") == [2, 0, 7]
    assert aligned_buckets(times, spec, "current") == [0, 2, 0]


# -- split -----------------------------------------------------------------------


def test_leave_one_out_example():
    c = corpus_of(*[("u", x, t) for t, x in enumerate("ABCD")])
    split = leave_one_out_split(c)
    name = lambda xs: [c.item_id(i) for i in xs]  # noqa: E731
    assert name(split.train[0].items) == ["A", "B"]
    assert name(split.valid[0].prefix_items) == ["A", "B"] and c.item_id(split.valid[0].target) == "C"
    assert name(split.test[0].prefix_items) == ["A", "B", "C"] and c.item_id(split.test[0].target) == "D"


def test_short_user_is_train_only():
    split = leave_one_out_split(corpus_of(("u", "A", 1), ("u", "B", 2)), min_len=3)
    assert len(split.train) == 1 and len(split.train[0]) == 2
    assert split.valid == () and split.test == ()


def test_empty_split():
    split = leave_one_out_split(build_corpus([]))
    assert split.train == split.valid == split.test == ()


@given(st.lists(st.tuples(st.sampled_from("uvwxyz"), st.sampled_from("ABCDEFG"), st.integers(0, 99)), max_size=60))
def test_split_round_trip(rows):
    c = corpus_of(*rows)
    split = leave_one_out_split(c)
    by_user = {s.user_id: s for s in c.sequences}
    train = {s.user_id: s for s in split.train}
    for v, t in zip(split.valid, split.test):
        seq = by_user[t.user_id]
        assert train[t.user_id].items + (v.target, t.target) == seq.items
        assert t.prefix_items == seq.items[:-1] and v.prefix_items == seq.items[:-2]


# -- padding -----------------------------------------------------------------------


def test_pad_left():
    items, buckets, mask = pad_truncate([4, 5, 6], [1, 2, 3], max_len=5)
    assert items.tolist() == [0, 0, 4, 5, 6]
    assert buckets.tolist() == [0, 0, 1, 2, 3]
    assert mask.tolist() == [False, False, True, True, True]


def test_pad_truncates_to_most_recent():
    items, _, mask = pad_truncate(list(range(1, 61)), [0] * 60, max_len=50)
    assert items.tolist() == list(range(11, 61)) and mask.all()


def test_pad_exact_length_unchanged():
    items, buckets, mask = pad_truncate([1, 2, 3], [7, 8, 9], max_len=3)
    assert items.tolist() == [1, 2, 3] and buckets.tolist() == [7, 8, 9] and mask.all()


def test_pad_length_mismatch():
    with pytest.raises(ValueError):
        pad_truncate([1, 2], [0], 5)


@given(st.lists(st.integers(1, 100), max_size=80), st.integers(1, 60))
def test_pad_preserves_order(items, max_len):
    out, _, mask = pad_truncate(items, [0] * len(items), max_len)
    assert out[mask].tolist() == items[-max_len:] if items else not mask.any()


def test_trim_padding_drops_all_pad_columns():
    mask = np.array([[False, False, True], [False, True, True]])
    items = np.array([[0, 0, 3], [0, 2, 5]])
    m, it = trim_padding(mask, items)
    assert it.tolist() == [[0, 3], [2, 5]] and m.shape == (2, 2)


# -- stats ---------------------------------------------------------------------------


def test_stats_hand_count():
    c = corpus_of(("u1", "A", 1), ("u1", "B", 2), ("u2", "A", 3))
    s = dataset_stats(c)
    assert (s.unique_users, s.unique_items, s.total_interactions) == (2, 2, 3)
    assert s.avg_interactions_per_user == 1.5 and s.avg_interactions_per_item == 1.5
    assert s.max_interactions_by_user == 2 and s.max_interactions_on_item == 2


def test_stats_same_day_percentage():
    # consecutive gaps 0, 0.5 d, 2 d -> two of three pairs are under one day
    c = corpus_of(("u", "A", 0), ("u", "B", 0), ("u", "C", DAY // 2), ("u", "D", DAY // 2 + 2 * DAY))
    assert dataset_stats(c).same_day_consecutive_pct == pytest.approx(200 / 3)


def test_stats_empty_corpus_is_all_zero():
    s = dataset_stats(build_corpus([]))
    assert all(v == 0 for v in s.to_dict().values())


@given(st.lists(st.tuples(st.sampled_from("uvwxyz"), st.sampled_from("ABC"), st.integers(0, 10**6)), max_size=40),
       st.randoms())
def test_stats_total_invariant_under_reordering(rows, rnd):
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    a, b = dataset_stats(corpus_of(*rows)), dataset_stats(corpus_of(*shuffled))
    assert a.total_interactions == b.total_interactions == len(rows)
    assert 0.0 <= a.same_day_consecutive_pct <= 100.0
