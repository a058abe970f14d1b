import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anoneval.errors import DegenerateInput, EmptyClass, EmptyReference, OutOfDomain
from anoneval.metrics import (
    ErrorCounts,
    Label,
    ScoredTrial,
    TradeoffInputs,
    TranscriptPair,
    align_counts,
    compute_eer,
    compute_putr,
    compute_wer,
    eer_from_scores,
    pearson,
    putr,
    tokenize,
)

from oracles import brute_force_eer, edit_distance, pearson_textbook


def _trials(tar, non):
    return [ScoredTrial("e", f"t{i}", Label.TARGET, s) for i, s in enumerate(tar)] + [
        ScoredTrial("e", f"n{i}", Label.NONTARGET, s) for i, s in enumerate(non)
    ]


# --- EER -------------------------------------------------------------------


@pytest.mark.parametrize(
    "tar, non, expected",
    [
        ([0.9, 0.8, 0.7], [0.6, 0.5, 0.4], 0.0),
        ([0.8, 0.6], [0.7, 0.5], 0.25),
        ([0.5, 0.6, 0.7], [0.5, 0.6, 0.7], 0.5),
    ],
)
def test_eer_examples(tar, non, expected):
    assert compute_eer(_trials(tar, non)).eer == pytest.approx(expected, abs=1e-12)


def test_eer_example_matches_oracle():
    assert brute_force_eer([0.8, 0.6], [0.7, 0.5]) == pytest.approx(0.25)


def test_eer_fully_inverted_scores():
    # targets always lower: the hull still crosses at 0.5
    assert eer_from_scores([0.1, 0.2], [0.8, 0.9]).eer == pytest.approx(0.5)


def test_eer_requires_both_classes():
    with pytest.raises(EmptyClass):
        eer_from_scores([0.1, 0.2], [])
    with pytest.raises(EmptyClass):
        compute_eer(_trials([], [0.3]))


def test_sweep_monotone_and_bounded():
    rng = np.random.default_rng(0)
    res = eer_from_scores(rng.normal(1, 1, 40), rng.normal(0, 1, 60))
    far = np.array([p.far for p in res.sweep])
    frr = np.array([p.frr for p in res.sweep])
    thr = np.array([p.threshold for p in res.sweep])
    assert np.all(np.diff(thr) > 0)
    assert np.all(np.diff(far) <= 0) and np.all(np.diff(frr) >= 0)
    assert far[0] == 1.0 and frr[0] == 0.0 and far[-1] == 0.0 and frr[-1] == 1.0
    assert 0.0 <= res.eer <= 0.5


score_lists = st.lists(st.integers(-20, 20).map(lambda v: v / 4), min_size=1, max_size=25)


@given(score_lists, score_lists)
def test_eer_matches_brute_force(tar, non):
    assert eer_from_scores(tar, non).eer == pytest.approx(brute_force_eer(tar, non), abs=1e-9)


@given(score_lists, score_lists)
def test_eer_label_swap_symmetry(tar, non):
    a = eer_from_scores(tar, non).eer
    b = eer_from_scores([-s for s in non], [-s for s in tar]).eer
    assert a == pytest.approx(b, abs=1e-12)


@given(score_lists, score_lists)
def test_eer_invariant_to_monotone_transform(tar, non):
    f = lambda s: math.exp(s) * 3 + 7  # noqa: E731
    a = eer_from_scores(tar, non).eer
    b = eer_from_scores([f(s) for s in tar], [f(s) for s in non]).eer
    assert a == pytest.approx(b, abs=1e-12)


# --- WER -------------------------------------------------------------------


def _pair(ref, hyp):
    return TranscriptPair("u", tokenize(ref), tokenize(hyp))


def test_wer_examples():
    assert compute_wer([_pair("the cat sat", "the cat sat")]).wer == 0.0
    res = compute_wer([_pair("a b c", "a x c d")])
    assert res.wer == pytest.approx(2 / 3)
    assert res.counts == [ErrorCounts(sub=1, ins=1, dele=0, ntok=3)]
    res = compute_wer([_pair("a b", "")])
    assert res.wer == 1.0 and res.counts[0].dele == 2


def test_wer_pools_counts_across_pairs():
    res = compute_wer([_pair("a b c d", "a b c d"), _pair("x y", "")])
    # pooled 2 / 6, not the per-utterance mean 0.5
    assert res.wer == pytest.approx(2 / 6)
    assert res.total == ErrorCounts(0, 0, 2, 6)


def test_wer_can_exceed_one():
    assert compute_wer([_pair("a", "b c d")]).wer == 3.0


def test_wer_empty_reference():
    with pytest.raises(EmptyReference):
        compute_wer([_pair("", "a")])
    with pytest.raises(EmptyReference):
        compute_wer([])


def test_tie_break_prefers_substitution_then_deletion():
    # "a b" -> "b a": distance 2; substitution path (2 sub) preferred over del+ins
    assert align_counts(["A", "B"], ["B", "A"]) == ErrorCounts(2, 0, 0, 2)
    # "a b" -> "c": sub+del, never ins
    assert align_counts(["A", "B"], ["C"]) == ErrorCounts(1, 0, 1, 2)


def test_tokenize():
    assert tokenize("  Hello,  world ") == ("HELLO,", "WORLD")
    assert tokenize("Hello, world! it's", strip_punct=True) == ("HELLO", "WORLD", "IT'S")


tokens = st.lists(st.sampled_from("abcd"), max_size=8)


@given(tokens, tokens)
def test_alignment_counts_equal_edit_distance(ref, hyp):
    c = align_counts(ref, hyp)
    assert c.errors == edit_distance(ref, hyp)
    assert c.sub <= min(len(ref), len(hyp))
    assert len(ref) - c.dele + c.ins == len(hyp)


@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8))
def test_wer_self_and_empty(ref):
    assert compute_wer([TranscriptPair("u", tuple(ref), tuple(ref))]).wer == 0.0
    assert compute_wer([TranscriptPair("u", tuple(ref), ())]).wer == 1.0


# --- PU_tr -----------------------------------------------------------------


def test_putr_reference_aggregates():
    # baseline system, dev aggregates, as fractions
    assert putr(0.0527, 0.0618, 0.0163, 0.1064, 0.5) == pytest.approx(-0.1146, abs=1e-4)


def test_putr_direct_formula():
    w0, w1, e0, e1, lam = 0.0527, 0.0618, 0.0163, 0.1064, 0.5
    direct = lam * math.log(1 + w1 / w0) / math.log(1 + 1 / w0) - (1 - lam) * math.log(
        1 + e1 / e0
    ) / math.log(1 + 1 / e0)
    assert putr(w0, w1, e0, e1, lam) == pytest.approx(direct, abs=1e-14)


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.25, 0.5, 0.7, 0.9, 1.0])
def test_putr_full_degradation_identity(lam):
    assert putr(0.3, 1.0, 0.07, 1.0, lam) == 2 * lam - 1


def test_putr_lower_bound():
    assert putr(0.2, 0.4, 1.0, 1.0, 0.0) == -1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(wer0=0.0, wer1=0.1, eer0=0.1, eer1=0.1, lam=0.5),
        dict(wer0=0.1, wer1=1.2, eer0=0.1, eer1=0.1, lam=0.5),
        dict(wer0=0.1, wer1=0.1, eer0=-0.1, eer1=0.1, lam=0.5),
        dict(wer0=0.1, wer1=0.1, eer0=0.1, eer1=0.1, lam=1.5),
    ],
)
def test_putr_out_of_domain(kwargs):
    with pytest.raises(OutOfDomain):
        TradeoffInputs(**kwargs)


rate = st.floats(min_value=1e-6, max_value=1.0)
lam_st = st.floats(min_value=0.0, max_value=1.0)


@given(rate, rate, rate, rate, lam_st)
def test_putr_bounds(w0, w1, e0, e1, lam):
    v = compute_putr(TradeoffInputs(w0, w1, e0, e1, lam))
    assert -1.0 <= v <= 1.0
    assert putr(w0, w1, e0, e1, 1.0) >= 0.0
    assert putr(w0, w1, e0, e1, 0.0) <= 0.0


@given(rate, rate, rate, rate)
def test_putr_affine_and_monotone_in_lambda(w0, w1, e0, e1):
    a, b, c = (putr(w0, w1, e0, e1, lam) for lam in (0.0, 0.5, 1.0))
    assert b == pytest.approx((a + c) / 2, abs=1e-12)
    assert a <= b <= c


# --- Pearson ---------------------------------------------------------------


def test_pearson_examples():
    assert pearson([1, 2, 3], [1, 2, 3]) == 1.0
    assert pearson([1, 2, 3], [-1, -2, -3]) == -1.0
    # Sxy = 3, Sxx = 2, Syy = 42/9
    assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(9 / math.sqrt(84), abs=1e-14)


@pytest.mark.parametrize("x, y", [([1], [1]), ([1, 1, 1], [1, 2, 3]), ([1, 2], [3, 3]), ([1, 2], [1, 2, 3])])
def test_pearson_degenerate(x, y):
    with pytest.raises(DegenerateInput):
        pearson(x, y)


def test_pearson_constant_float_sequence():
    # mean of repeated 0.1 is not exactly 0.1; must still be flagged constant
    with pytest.raises(DegenerateInput):
        pearson([0.1] * 7, range(7))


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@given(
    st.lists(st.integers(-4000, 4000).map(lambda v: v / 4), min_size=2, max_size=30, unique=True),
    st.floats(min_value=0.01, max_value=100),
    finite,
)
def test_pearson_affine(x, a, b):
    y = [a * v + b for v in x]
    assert pearson(x, y) == pytest.approx(1.0, abs=1e-12)
    assert pearson(x, [-v for v in y]) == pytest.approx(-1.0, abs=1e-12)


@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=3, max_size=20))
def test_pearson_matches_textbook(pairs):
    x = [float(p[0]) for p in pairs]
    y = [float(p[1]) for p in pairs]
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    assert pearson(x, y) == pytest.approx(pearson_textbook(x, y), abs=1e-12)
