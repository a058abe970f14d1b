"""Readers and writers for trial, score, transcript, embedding, weight and WAV files.

Text formats are whitespace-separated, one record per line. Readers accept
runs of whitespace between fields; writers emit single spaces (tabs for the
embedding file). Blank lines are skipped. Every malformed line raises a
:class:`~anoneval.errors.MalformedLine` carrying the line number.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DuplicateScore,
    DuplicateUttId,
    InputError,
    MalformedLine,
    MissingScore,
    OrphanHypothesis,
    OrphanScore,
    SilentAudio,
    UnknownLabel,
    UnsupportedFormat,
)
from .metrics import Label, ScoredTrial, TranscriptPair, Trial, tokenize
from .pitch import AudioBuffer
from .selection import Gender

PathLike = str | Path


def _lines(path: PathLike) -> Iterator[tuple[int, list[str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8 ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if fields:
            yield lineno, fields


# ---------------------------------------------------------------------------
# trials and scores


def parse_trials(path: PathLike) -> list[Trial]:
    """Kaldi trial list: ``enroll_id test_id target|nontarget``."""
    trials = []
    for lineno, fields in _lines(path):
        if len(fields) != 3:
            raise MalformedLine(path, lineno, f"expected 3 fields, got {len(fields)}")
        enroll, test, label = fields
        try:
            lab = Label(label.lower())
        except ValueError:
            raise UnknownLabel(path, lineno, f"unknown label {label!r}") from None
        trials.append(Trial(enroll, test, lab))
    return trials


def write_trials(path: PathLike, trials: Iterable[Trial | ScoredTrial]) -> None:
    Path(path).write_text(
        "".join(f"{t.enroll_id} {t.test_id} {t.label.value}\n" for t in trials), encoding="utf-8"
    )


def read_score_lines(path: PathLike) -> list[tuple[int, str, str, float]]:
    out = []
    for lineno, fields in _lines(path):
        if len(fields) != 3:
            raise MalformedLine(path, lineno, f"expected 3 fields, got {len(fields)}")
        try:
            score = float(fields[2])
        except ValueError:
            raise MalformedLine(path, lineno, f"score {fields[2]!r} is not a number") from None
        if not math.isfinite(score):
            raise MalformedLine(path, lineno, f"score {fields[2]!r} is not finite")
        out.append((lineno, fields[0], fields[1], score))
    return out


def parse_scores(path: PathLike, trials: Sequence[Trial]) -> list[ScoredTrial]:
    """Join a ``enroll_id test_id score`` file onto ``trials``, in trial order."""
    scores: dict[tuple[str, str], float] = {}
    wanted = {t.key for t in trials}
    for lineno, enroll, test, score in read_score_lines(path):
        key = (enroll, test)
        if key in scores:
            raise DuplicateScore(path, lineno, f"duplicate score for {enroll} {test}")
        if key not in wanted:
            raise OrphanScore(path, lineno, f"score for unknown trial {enroll} {test}")
        scores[key] = score
    missing = [t.key for t in trials if t.key not in scores]
    if missing:
        e, u = missing[0]
        raise MissingScore(f"{path}: {len(missing)} trial(s) without score, first: {e} {u}")
    return [ScoredTrial(t.enroll_id, t.test_id, t.label, scores[t.key]) for t in trials]


def write_scores(path: PathLike, trials: Iterable[ScoredTrial]) -> None:
    Path(path).write_text(
        "".join(f"{t.enroll_id} {t.test_id} {t.score!r}\n" for t in trials), encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# transcripts


@dataclass(frozen=True)
class TranscriptSet:
    pairs: list[TranscriptPair]
    missing_hypotheses: list[str]


def _read_transcripts(path: PathLike, strip_punct: bool) -> dict[str, tuple[int, tuple[str, ...]]]:
    out: dict[str, tuple[int, tuple[str, ...]]] = {}
    for lineno, fields in _lines(path):
        utt = fields[0]
        if utt in out:
            raise DuplicateUttId(path, lineno, f"utterance id {utt!r} already seen at line {out[utt][0]}")
        out[utt] = (lineno, tokenize(" ".join(fields[1:]), strip_punct))
    return out


def parse_transcripts(ref_path: PathLike, hyp_path: PathLike, strip_punct: bool = False) -> TranscriptSet:
    """Pair ``utt_id token ...`` lines by id; absent hypotheses become empty."""
    refs = _read_transcripts(ref_path, strip_punct)
    hyps = _read_transcripts(hyp_path, strip_punct)
    for utt, (lineno, _) in hyps.items():
        if utt not in refs:
            raise OrphanHypothesis(hyp_path, lineno, f"hypothesis for unknown utterance {utt!r}")
    pairs, missing = [], []
    for utt, (_, ref) in refs.items():
        if utt in hyps:
            hyp = hyps[utt][1]
        else:
            hyp = ()
            missing.append(utt)
        pairs.append(TranscriptPair(utt, ref, hyp))
    return TranscriptSet(pairs, missing)


def write_transcripts(path: PathLike, transcripts: Iterable[tuple[str, Sequence[str]]]) -> None:
    Path(path).write_text(
        "".join(" ".join([utt, *tokens]) + "\n" for utt, tokens in transcripts), encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# embeddings


def parse_embeddings(path: PathLike) -> list[tuple[str, Gender, np.ndarray]]:
    """``speaker_id<TAB>gender<TAB>v1 v2 ... vd`` per utterance."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    out = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedLine(path, lineno, f"expected 3 tab-separated fields, got {len(parts)}")
        spk, gender, values = parts[0].strip(), parts[1], parts[2]
        if not spk:
            raise MalformedLine(path, lineno, "empty speaker id")
        try:
            g = Gender.parse(gender)
        except InputError:
            raise MalformedLine(path, lineno, f"unknown gender {gender!r}") from None
        try:
            vec = np.array([float(v) for v in values.split()], dtype=np.float64)
        except ValueError:
            raise MalformedLine(path, lineno, "vector contains a non-numeric value") from None
        if vec.size == 0 or not np.all(np.isfinite(vec)):
            raise MalformedLine(path, lineno, "vector is empty or non-finite")
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise MalformedLine(path, lineno, f"dimension {vec.size}, expected {dim}")
        out.append((spk, g, vec))
    return out


def write_embeddings(path: PathLike, rows: Iterable[tuple[str, Gender | str, Sequence[float]]]) -> None:
    lines = []
    for spk, gender, vec in rows:
        g = gender.value if isinstance(gender, Gender) else Gender.parse(gender).value
        lines.append(f"{spk}\t{g}\t{' '.join(repr(float(v)) for v in vec)}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


# ---------------------------------------------------------------------------
# subset weights


@dataclass(frozen=True)
class SubsetSpec:
    name: str
    gender: str  # "F", "M" or "All"
    weight: float


_SUBSET_GENDERS = {"F": "F", "M": "M", "ALL": "All"}


def parse_weights(path: PathLike) -> list[SubsetSpec]:
    """``name gender weight`` lines; weights must sum to 1."""
    specs = []
    for lineno, fields in _lines(path):
        if fields[0].startswith("#"):
            continue
        if len(fields) != 3:
            raise MalformedLine(path, lineno, f"expected 3 fields, got {len(fields)}")
        name, gender, weight = fields
        if gender.upper() not in _SUBSET_GENDERS:
            raise MalformedLine(path, lineno, f"gender must be F, M or All, got {gender!r}")
        try:
            w = float(weight)
        except ValueError:
            raise MalformedLine(path, lineno, f"weight {weight!r} is not a number") from None
        if not 0.0 <= w <= 1.0:
            raise MalformedLine(path, lineno, f"weight {w} outside [0, 1]")
        specs.append(SubsetSpec(name, _SUBSET_GENDERS[gender.upper()], w))
    total = sum(s.weight for s in specs)
    if specs and abs(total - 1.0) > 1e-9:
        raise InputError(f"{path}: weights sum to {total!r}, expected 1")
    return specs


def write_weights(path: PathLike, specs: Iterable[SubsetSpec]) -> None:
    Path(path).write_text(
        "".join(f"{s.name} {s.gender} {s.weight!r}\n" for s in specs), encoding="utf-8"
    )


def default_weights() -> list[SubsetSpec]:
    """Per-subset weights of the standard LibriSpeech/VCTK evaluation split."""
    with resources.as_file(resources.files("anoneval") / "data" / "weights.txt") as p:
        return parse_weights(p)


# ---------------------------------------------------------------------------
# audio


@dataclass(frozen=True)
class WavAudio:
    audio: AudioBuffer
    path: str
    channels: int

    @property
    def samples(self) -> np.ndarray:
        return self.audio.samples

    @property
    def sample_rate(self) -> int:
        return self.audio.sample_rate


def read_wav(path: PathLike, expected_rate: int | None = None) -> WavAudio:
    """Read 16-bit PCM WAV, mixing multichannel audio down to mono."""
    try:
        with wave.open(str(path), "rb") as w:
            if w.getsampwidth() != 2:
                raise UnsupportedFormat(f"{path}: {8 * w.getsampwidth()}-bit audio, only 16-bit PCM supported")
            channels, rate = w.getnchannels(), w.getframerate()
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    except (OSError, EOFError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if expected_rate is not None and rate != expected_rate:
        raise UnsupportedFormat(f"{path}: sample rate {rate}, expected {expected_rate}; resample upstream")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    data = data.reshape(-1, channels).mean(axis=1)
    return WavAudio(AudioBuffer(data, rate), str(path), channels)


def write_wav(path: PathLike, audio: AudioBuffer) -> None:
    pcm = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(audio.sample_rate)
        w.writeframes(pcm.tobytes())


def rms(samples: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(samples))))


def rms_normalize(audio: AudioBuffer, target_db: float = -27.0) -> AudioBuffer:
    """Scale so that the RMS level equals ``target_db`` dBFS."""
    level = rms(audio.samples)
    if level == 0.0:
        raise SilentAudio("cannot RMS-normalize silent audio")
    gain = 10.0 ** (target_db / 20.0) / level
    return AudioBuffer(audio.samples * gain, audio.sample_rate)
