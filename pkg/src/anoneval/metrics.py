"""Scalar evaluation metrics: EER, WER, privacy-utility trade-off, Pearson."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInput, EmptyClass, EmptyReference, OutOfDomain


class Label(str, enum.Enum):
    TARGET = "target"
    NONTARGET = "nontarget"


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    label: Label

    @property
    def key(self) -> tuple[str, str]:
        return (self.enroll_id, self.test_id)


@dataclass(frozen=True)
class ScoredTrial:
    enroll_id: str
    test_id: str
    label: Label
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise OutOfDomain(f"non-finite score for trial {self.enroll_id} {self.test_id}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.enroll_id, self.test_id)


@dataclass(frozen=True)
class ErrorRatePoint:
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class EERResult:
    eer: float
    sweep: list[ErrorRatePoint]
    num_target: int
    num_nontarget: int


# ---------------------------------------------------------------------------
# EER


def error_rate_sweep(tar: np.ndarray, non: np.ndarray) -> list[ErrorRatePoint]:
    """FAR/FRR at every distinct score, accepting when ``score >= threshold``.

    The sweep starts at the lowest score (everything accepted, FAR = 1, FRR = 0)
    and ends at ``+inf`` (everything rejected, FAR = 0, FRR = 1).
    """
    scores = np.concatenate([tar, non])
    is_tar = np.concatenate([np.ones(len(tar), bool), np.zeros(len(non), bool)])
    order = np.argsort(scores, kind="mergesort")
    scores, is_tar = scores[order], is_tar[order]

    # counts strictly below each distinct score
    uniq, first = np.unique(scores, return_index=True)
    tar_below = np.concatenate([[0], np.cumsum(is_tar)])[first]
    non_below = np.concatenate([[0], np.cumsum(~is_tar)])[first]

    n_tar, n_non = len(tar), len(non)
    frr = np.append(tar_below / n_tar, 1.0)
    far = np.append(1.0 - non_below / n_non, 0.0)
    thresholds = np.append(uniq, np.inf)
    return [ErrorRatePoint(float(t), float(a), float(r)) for t, a, r in zip(thresholds, far, frr)]


def _lower_hull(points: np.ndarray) -> np.ndarray:
    # points sorted by (far, frr); monotone chain keeping the lower-left boundary
    hull: list[np.ndarray] = []
    for p in points:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.array(hull)


def eer_from_sweep(far: np.ndarray, frr: np.ndarray) -> float:
    """EER where the convex hull of the (FAR, FRR) operating points meets FAR = FRR.

    Between two hull vertices the crossing is found by linear interpolation and
    reported as ``(far + frr) / 2``.
    """
    pts = np.unique(np.column_stack([far, frr]), axis=0)
    hull = _lower_hull(pts)
    # hull runs from far=0 to far=1, so frr - far changes sign exactly once
    diff = hull[:, 1] - hull[:, 0]
    idx = np.flatnonzero(diff <= 0)
    i = int(idx[0])
    if diff[i] == 0 or i == 0:
        return float((hull[i, 0] + hull[i, 1]) / 2)
    p, q = hull[i - 1], hull[i]
    t = diff[i - 1] / (diff[i - 1] - diff[i])
    cross = p + t * (q - p)
    return float((cross[0] + cross[1]) / 2)


def eer_from_scores(tar: Sequence[float], non: Sequence[float]) -> EERResult:
    tar = np.asarray(tar, dtype=np.float64)
    non = np.asarray(non, dtype=np.float64)
    if tar.size == 0 or non.size == 0:
        raise EmptyClass(f"need both classes, got {tar.size} target / {non.size} nontarget trials")
    sweep = error_rate_sweep(tar, non)
    far = np.array([p.far for p in sweep])
    frr = np.array([p.frr for p in sweep])
    return EERResult(eer_from_sweep(far, frr), sweep, int(tar.size), int(non.size))


def compute_eer(trials: Iterable[ScoredTrial]) -> EERResult:
    """Equal error rate of a list of scored trials, as a fraction in [0, 0.5]."""
    tar, non = [], []
    for t in trials:
        (tar if t.label is Label.TARGET else non).append(t.score)
    return eer_from_scores(tar, non)


# ---------------------------------------------------------------------------
# WER


@dataclass(frozen=True)
class TranscriptPair:
    utt_id: str
    reference: tuple[str, ...]
    hypothesis: tuple[str, ...]


@dataclass(frozen=True)
class ErrorCounts:
    sub: int
    ins: int
    dele: int
    ntok: int

    @property
    def errors(self) -> int:
        return self.sub + self.ins + self.dele


@dataclass(frozen=True)
class WERResult:
    wer: float
    counts: list[ErrorCounts]

    @property
    def total(self) -> ErrorCounts:
        return ErrorCounts(
            sum(c.sub for c in self.counts),
            sum(c.ins for c in self.counts),
            sum(c.dele for c in self.counts),
            sum(c.ntok for c in self.counts),
        )


_PUNCT = re.compile(r"[^\w\s']|_")


def tokenize(text: str, strip_punct: bool = False) -> tuple[str, ...]:
    """Whitespace tokenization, upper-cased; optionally drop punctuation."""
    text = text.upper()
    if strip_punct:
        text = _PUNCT.sub(" ", text)
    return tuple(text.split())


def align_counts(ref: Sequence[str], hyp: Sequence[str]) -> ErrorCounts:
    """Minimum edit distance alignment with unit costs.

    Ties in the backtrace prefer substitution (or match), then deletion, then
    insertion.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    d[0] = list(range(m + 1))
    for i in range(1, n + 1):
        ri, row, prev = ref[i - 1], d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (ri != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)

    sub = ins = dele = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            sub += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            dele += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return ErrorCounts(int(sub), ins, dele, n)


def compute_wer(pairs: Iterable[TranscriptPair]) -> WERResult:
    """Corpus WER: errors pooled over all pairs divided by pooled reference length."""
    counts = []
    for p in pairs:
        if len(p.reference) == 0:
            raise EmptyReference(f"empty reference for utterance {p.utt_id!r}")
        counts.append(align_counts(p.reference, p.hypothesis))
    if not counts:
        raise EmptyReference("no transcript pairs to score")
    errors = sum(c.errors for c in counts)
    ntok = sum(c.ntok for c in counts)
    return WERResult(errors / ntok, counts)


# ---------------------------------------------------------------------------
# privacy-to-utility trade-off


@dataclass(frozen=True)
class TradeoffInputs:
    """Original (``*0``) and anonymized (``*1``) error rates as fractions in (0, 1]."""

    wer0: float
    wer1: float
    eer0: float
    eer1: float
    lam: float = 0.5

    def __post_init__(self):
        for name in ("wer0", "wer1", "eer0", "eer1"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise OutOfDomain(f"{name}={v!r} must lie in (0, 1]")
        if not (0.0 <= self.lam <= 1.0):
            raise OutOfDomain(f"lambda={self.lam!r} must lie in [0, 1]")


def degradation_term(rate0: float, rate1: float) -> float:
    """log(1 + r1/r0) / log(1 + 1/r0), in (0, 1] for rates in (0, 1]."""
    return math.log1p(rate1 / rate0) / math.log1p(1.0 / rate0)


def compute_putr(inputs: TradeoffInputs) -> float:
    """Privacy-to-utility trade-off; lower is better, range [-1, 1].

    Written as ``lam * (U + P) - P``, which is the same affine function of
    ``lam`` as ``lam * U - (1 - lam) * P`` but hits the boundary identities
    exactly in floating point.
    """
    u = degradation_term(inputs.wer0, inputs.wer1)
    p = degradation_term(inputs.eer0, inputs.eer1)
    value = inputs.lam * (u + p) - p
    return min(1.0, max(-1.0, value))  # rounding guard only


def putr(wer0: float, wer1: float, eer0: float, eer1: float, lam: float) -> float:
    return compute_putr(TradeoffInputs(wer0, wer1, eer0, eer1, lam))


# ---------------------------------------------------------------------------


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput(f"sequences must be 1-D and equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DegenerateInput("need at least two points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInput("zero variance")
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy))))
    return min(1.0, max(-1.0, r))
