"""Acceptance suite: one test per criterion, each with its wall-clock budget.

Every test appends a PASS/FAIL line to the terminal summary.
"""

import functools
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import conftest
from anoneval.attack import (
    IDENTITY,
    AnonymizationPolicy,
    Assignment,
    Strategy,
    run_attack,
    standard_fixture,
)
from anoneval.corpus import (
    parse_embeddings,
    parse_scores,
    parse_trials,
    write_embeddings,
    write_scores,
    write_trials,
)
from anoneval.errors import UndefinedCorrelation
from anoneval.metrics import Label, ScoredTrial, Trial, align_counts, eer_from_scores, putr
from anoneval.pitch import AudioBuffer, F0Contour, extract_f0, pitch_correlation
from anoneval.report import (
    aggregate_mean,
    aggregate_weighted,
    build_report,
    putr_sweep,
    read_rows_csv,
    read_sweep_csv,
    render_markdown,
    render_report,
)
from anoneval.selection import (
    Gender,
    SelectionParams,
    build_pool,
    pseudo_members,
    pseudo_xvector,
    select_random,
    select_random_gender_preserving,
)

from test_report import fixture_report

from oracles import brute_force_eer, brute_n_closest, edit_distance, pearson_textbook, sine

DATA = Path(__file__).parents[1] / "data" / "reference_results.csv"
GOLDEN = Path(__file__).parent / "golden" / "report.md"
SYSTEMS = ("Orig", "B1a", "VR", "VGP", "BV", "VB")
ANONYMIZERS = SYSTEMS[1:]
FS = 16000


def criterion(number, title, budget):
    """Time the test, enforce ``budget`` seconds, and record the outcome."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
            except BaseException as exc:
                elapsed = time.perf_counter() - start
                conftest.ACCEPTANCE_LINES.append(
                    f"[FAIL] AC{number:<2} {title} ({elapsed:.2f}s): {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}"
                )
                raise
            conftest.ACCEPTANCE_LINES.append(f"[PASS] AC{number:<2} {title} ({elapsed:.2f}s < {budget}s)")

        return run

    return wrap


@pytest.fixture(scope="module")
def reference_rows():
    return read_rows_csv(DATA)


def _rows(rows, metric, system, split):
    return [r for r in rows if (r.metric, r.system, r.split) == (metric, system, split)]


# ---------------------------------------------------------------------------


@criterion(1, "weighted EER averages match the reference table", 1.0)
def test_ac1_weighted_aggregation(reference_rows):
    expected = {
        "dev": {"Orig": 1.63, "B1a": 10.64, "VB": 47.8},
        "test": {"Orig": 1.29, "B1a": 12.2, "VB": 43.0},
    }
    for split, values in expected.items():
        for system, value in values.items():
            group = _rows(reference_rows, "eer", system, split)
            assert [r.weight for r in group] == [0.25, 0.25, 0.2, 0.2, 0.05, 0.05]
            got = aggregate_weighted((r.value, r.weight) for r in group)
            # the bound is judged in exact decimal arithmetic; float noise is checked separately
            exact = sum(Fraction(repr(r.value)) * Fraction(repr(r.weight)) for r in group) / sum(
                Fraction(repr(r.weight)) for r in group
            )
            assert abs(got - float(exact)) <= 1e-9
            assert abs(exact - Fraction(repr(value))) <= Fraction("0.05"), (split, system, got, value)


@criterion(2, "unweighted WER averages match the reference table", 1.0)
def test_ac2_unweighted_wer(reference_rows):
    expected = {
        "dev": (5.27, 6.18, 9.4, 9.0, 10.5, 12.95),
        "test": (5.1, 6.12, 8.75, 6.82, 6.92, 12.7),
    }
    for split, values in expected.items():
        for system, value in zip(SYSTEMS, values):
            group = _rows(reference_rows, "wer", system, split)
            assert len(group) == 2
            got = aggregate_mean(r.value for r in group)
            assert abs(got - value) <= 0.05, (split, system, got, value)


@criterion(3, "trade-off metric properties and lambda sweep ordering", 10.0)
def test_ac3_putr(reference_rows):
    rng = np.random.default_rng(3)
    n = 100_000
    w0, w1, e0, e1 = rng.uniform(1e-6, 1.0, size=(4, n))
    lam = rng.uniform(0.0, 1.0, size=n)
    for i in range(n):
        v = putr(w0[i], w1[i], e0[i], e1[i], lam[i])
        assert -1.0 <= v <= 1.0, (w0[i], w1[i], e0[i], e1[i], lam[i], v)

    for i in range(0, n, 100):
        a, b, c = (putr(w0[i], w1[i], e0[i], e1[i], x) for x in (0.2, 0.5, 0.8))
        assert abs(b - (a + c) / 2) <= 1e-9

    for lam_ in np.linspace(0, 1, 101):
        assert putr(0.3, 1.0, 0.07, 1.0, lam_) == 2 * lam_ - 1
        assert putr(0.3, 0.6, 1.0, 1.0, 0.0) == -1.0

    report = build_report(reference_rows, timestamp="fixed")
    for split in ("dev", "test"):
        table = report.sweep_table(split)
        assert set(table) == set(SYSTEMS)
        for system in SYSTEMS:
            values = [table[system][x] for x in (0.1, 0.3, 0.5, 0.7, 0.9)]
            assert all(b >= a for a, b in zip(values, values[1:])), (split, system, values)
        best_high = min(ANONYMIZERS, key=lambda s: table[s][0.9])
        best_low = min(ANONYMIZERS, key=lambda s: table[s][0.1])
        assert best_high == "B1a", (split, best_high)
        assert best_low in {"VR", "VGP", "BV", "VB"}, (split, best_low)

    # the sweep helper agrees with the report
    w_b, e_b = report.aggregate("wer", "Orig", "dev") / 100, report.aggregate("eer", "Orig", "dev") / 100
    sys_rates = [(s, report.aggregate("wer", s, "dev") / 100, report.aggregate("eer", s, "dev") / 100) for s in SYSTEMS]
    assert putr_sweep(sys_rates, (w_b, e_b), split="dev") == [p for p in report.sweep if p.split == "dev"]


@criterion(4, "EER matches a brute-force threshold sweep on 1000 sets", 30.0)
def test_ac4_eer_oracle():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        n_tar = int(rng.integers(1, 26))
        n_non = int(rng.integers(1, 26))
        if rng.random() < 0.5:
            tar = rng.normal(1.0, 1.0, n_tar)
            non = rng.normal(0.0, 1.0, n_non)
        else:  # heavy ties
            tar = rng.integers(0, 6, n_tar).astype(float)
            non = rng.integers(0, 5, n_non).astype(float)
        eer = eer_from_scores(tar, non).eer
        assert abs(eer - brute_force_eer(tar, non)) <= 1e-6
        warped = eer_from_scores(np.tanh(tar / 3) * 5 + 2, np.tanh(non / 3) * 5 + 2).eer
        assert abs(warped - eer) <= 1e-6


@criterion(5, "WER alignment matches a recursive edit-distance oracle", 30.0)
def test_ac5_wer_oracle():
    rng = np.random.default_rng(5)
    vocab = np.array(list("abcde"))
    for _ in range(1000):
        ref = list(rng.choice(vocab, int(rng.integers(0, 9))))
        hyp = list(rng.choice(vocab, int(rng.integers(0, 9))))
        counts = align_counts(ref, hyp)
        assert counts.errors == edit_distance(ref, hyp)
        assert counts.ntok == len(ref)
        assert len(ref) - counts.dele + counts.ins == len(hyp)


@criterion(6, "pitch tracker recovers tones, silence and a chirp", 30.0)
def test_ac6_pitch_tracker():
    for freq in (100, 150, 220, 330):
        c = extract_f0(AudioBuffer(sine(freq), FS))
        v = c.voiced
        assert len(v) > 0
        assert np.mean(np.abs(v / freq - 1) <= 0.01) >= 0.95, freq
    assert extract_f0(AudioBuffer(np.zeros(FS), FS)).voiced_mask.sum() == 0
    t = np.arange(2 * FS) / FS
    chirp = 0.5 * np.sin(2 * np.pi * (100 * t + 25 * t**2))
    v = extract_f0(AudioBuffer(chirp, FS)).voiced
    assert len(v) > 0
    assert np.all(np.diff(v) >= -2.0)
    assert np.all(v <= np.maximum.accumulate(v) + 2.0)


@criterion(7, "pitch correlation identity, shift, symmetry and alignment", 30.0)
def test_ac7_pitch_correlation():
    rng = np.random.default_rng(7)
    t = np.arange(FS) / FS
    glide = 0.5 * np.sin(2 * np.pi * (120 * t + 40 * t**2))
    c = extract_f0(AudioBuffer(glide, FS))
    assert pitch_correlation(c, c) == 1.0
    checked = 0
    for _ in range(500):
        n, m = int(rng.integers(2, 40)), int(rng.integers(2, 40))
        a = np.where(rng.random(n) < 0.2, np.nan, rng.uniform(80, 400, n))
        b = np.where(rng.random(m) < 0.2, np.nan, rng.uniform(80, 400, m))
        ca, cb = F0Contour(0.01, a), F0Contour(0.01, b)
        try:
            r = pitch_correlation(ca, cb)
        except UndefinedCorrelation:
            with pytest.raises(UndefinedCorrelation):
                pitch_correlation(cb, ca)
            continue
        checked += 1
        assert pitch_correlation(ca, ca) == 1.0
        assert abs(pitch_correlation(cb, ca) - r) <= 1e-12
        assert abs(pitch_correlation(ca, F0Contour(0.01, b + 37.0)) - r) <= 1e-9
        va, vb = ca.voiced, cb.voiced
        if len(va) == len(vb):
            assert abs(r - pearson_textbook(list(va), list(vb))) <= 1e-9
        else:
            short, long_ = (va, vb) if len(va) < len(vb) else (vb, va)
            pos = np.linspace(0, len(long_) - 1, len(short))
            resampled = np.interp(pos, np.arange(len(long_)), long_)
            expected = pearson_textbook(list(short), list(resampled))
            assert abs(r - expected) <= 1e-9
    assert checked > 300


@criterion(8, "attack simulation ordering over 5 seeds", 120.0)
def test_ac8_attack_simulation():
    policies = {
        "identity": IDENTITY,
        "pseudo": AnonymizationPolicy(Strategy.PSEUDO_XVECTOR, Assignment.PER_SPEAKER, 0.0, SelectionParams(200, 20)),
        "random": AnonymizationPolicy(Strategy.RANDOM, Assignment.PER_UTTERANCE, 0.0),
    }
    for seed in range(5):
        population, pool = standard_fixture(seed)
        assert len(population) == 20 and population[0].utterances.shape == (10, 32)
        eer = {}
        for name, policy in policies.items():
            res = run_attack(population, pool, policy, policy, num_trials=10_000, seed=seed)
            labels = [t.label for t in res.trials]
            assert labels.count(Label.TARGET) == labels.count(Label.NONTARGET) == 5000
            eer[name] = 100 * res.eer_value
        assert eer["identity"] < 5, (seed, eer)
        assert 45 <= eer["random"] <= 55, (seed, eer)
        assert eer["pseudo"] - eer["identity"] > 5, (seed, eer)
        assert eer["random"] - eer["pseudo"] > 5, (seed, eer)


@criterion(9, "selection membership, gender preservation and determinism", 30.0)
def test_ac9_selection():
    rng = np.random.default_rng(9)
    for trial in range(300):
        n_pool = int(rng.integers(1, 21))
        dim = int(rng.integers(2, 7))
        pool = build_pool((f"s{i:02d}", "F", rng.standard_normal(dim)) for i in range(n_pool))
        n = int(rng.integers(1, n_pool + 1))
        m = int(rng.integers(1, n + 1))
        src = rng.standard_normal(dim)
        params = SelectionParams(n, m, seed=trial)
        members = pseudo_members(pool, src, params)
        assert set(members.tolist()) <= brute_n_closest(pool.matrix, src, n)
        a = pseudo_xvector(pool, src, params)
        assert a.tobytes() == pseudo_xvector(pool, src, params).tobytes()

    mixed = build_pool(
        (f"p{i:03d}", "F" if i % 3 else "M", rng.standard_normal(8)) for i in range(60)
    )
    for seed in range(10_000):
        g = Gender.F if seed % 2 else Gender.M
        assert select_random_gender_preserving(mixed, "p001", g, seed).gender is g
    for seed in range(100):
        assert select_random(mixed, "p000", seed) == select_random(mixed, "p000", seed)


@criterion(10, "file round-trips and golden report", 5.0)
def test_ac10_round_trips(tmp_path, reference_rows):
    rng = np.random.default_rng(10)
    trials = [
        Trial(f"spk{i % 7}", f"utt{i:04d}", Label.TARGET if i % 3 else Label.NONTARGET) for i in range(200)
    ]
    scored = [ScoredTrial(t.enroll_id, t.test_id, t.label, float(rng.standard_normal() * 1e3)) for t in trials]
    write_trials(tmp_path / "trials", trials)
    write_scores(tmp_path / "scores", scored)
    back = parse_trials(tmp_path / "trials")
    assert back == trials
    assert parse_scores(tmp_path / "scores", back) == scored

    emb = [(f"s{i}", [Gender.F, Gender.M, Gender.UNKNOWN][i % 3], rng.standard_normal(16)) for i in range(50)]
    write_embeddings(tmp_path / "emb", emb)
    for (s0, g0, v0), (s1, g1, v1) in zip(emb, parse_embeddings(tmp_path / "emb"), strict=True):
        assert (s0, g0) == (s1, g1) and v0.tobytes() == v1.tobytes()

    report = build_report(reference_rows, timestamp="2000-01-01T00:00:00+00:00")
    paths = render_report(report, tmp_path / "out", formats=["csv"])
    assert read_rows_csv(paths["csv"]) == report.rows
    assert read_sweep_csv(paths["sweep_csv"]) == report.sweep

    golden = GOLDEN.read_text(encoding="utf-8")
    assert render_markdown(fixture_report()) == golden
    assert render_markdown(fixture_report()) == render_markdown(fixture_report())
    assert not math.isnan(report.aggregate("eer", "Orig", "dev"))
