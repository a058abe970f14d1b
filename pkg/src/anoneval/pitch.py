"""Autocorrelation F0 tracking and the pitch-correlation metric.

The tracker follows the windowed, window-normalized autocorrelation method:
each frame is mean-removed, Hann-windowed, its autocorrelation is divided by
the autocorrelation of the window itself, and lag candidates are the local
maxima inside ``[1/ceiling, 1/floor]``. Candidates are ranked by strength
minus an octave cost that favours short lags. Unlike the full method there is
no Viterbi path search across frames; each frame keeps its own best candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateInput, InvalidConfig, NoValidPairs, TooShort, UndefinedCorrelation
from .metrics import pearson


@dataclass(frozen=True)
class AudioBuffer:
    """Mono float samples at a fixed rate.

    Samples are nominally in [-1, 1] (16-bit PCM scaled by 1/32768); only
    finiteness is enforced so that gain experiments can exceed full scale.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidConfig("audio must be mono (1-D)")
        if not np.all(np.isfinite(samples)):
            raise InvalidConfig("audio contains non-finite samples")
        if int(self.sample_rate) < 8000:
            raise InvalidConfig(f"sample rate {self.sample_rate} below 8000 Hz")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class PitchConfig:
    pitch_floor: float = 75.0
    pitch_ceiling: float = 600.0
    frame_hop: float = 0.01
    voicing_threshold: float = 0.45
    silence_threshold: float = 0.03
    octave_cost: float = 0.01
    periods_per_window: float = 3.0

    def validate(self, sample_rate: int) -> None:
        if not 0 < self.pitch_floor < self.pitch_ceiling <= sample_rate / 4:
            raise InvalidConfig(
                f"need 0 < floor < ceiling <= rate/4, got {self.pitch_floor}, "
                f"{self.pitch_ceiling}, rate {sample_rate}"
            )
        if self.frame_hop <= 0:
            raise InvalidConfig("frame_hop must be positive")
        for name in ("voicing_threshold", "silence_threshold"):
            if not 0 < getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must lie in (0, 1)")
        if self.octave_cost < 0:
            raise InvalidConfig("octave_cost must be non-negative")

    @property
    def window_duration(self) -> float:
        return self.periods_per_window / self.pitch_floor


@dataclass(frozen=True)
class F0Contour:
    """Framewise F0 in Hz; unvoiced frames hold NaN."""

    frame_hop: float
    values: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if self.frame_hop <= 0:
            raise InvalidConfig("frame_hop must be positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @classmethod
    def from_values(cls, values: Sequence[float | None], frame_hop: float = 0.01) -> "F0Contour":
        return cls(frame_hop, np.array([np.nan if v is None else v for v in values], dtype=np.float64))

    @property
    def voiced_mask(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def voiced(self) -> np.ndarray:
        return self.values[self.voiced_mask]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.frame_hop * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def extract_f0(audio: AudioBuffer, config: PitchConfig = PitchConfig()) -> F0Contour:
    fs = audio.sample_rate
    config.validate(fs)
    x = audio.samples
    win_len = int(round(config.window_duration * fs))
    hop = max(1, int(round(config.frame_hop * fs)))
    if len(x) < win_len:
        raise TooShort(f"{len(x)} samples is shorter than one {win_len}-sample analysis window")

    frames = sliding_window_view(x, win_len)[::hop]
    frames = frames - frames.mean(axis=1, keepdims=True)
    local_peak = np.abs(frames).max(axis=1)
    global_peak = np.abs(x - x.mean()).max()

    window = np.hanning(win_len)
    nfft = _next_pow2(2 * win_len)
    min_lag = fs / config.pitch_ceiling
    max_lag = fs / config.pitch_floor
    n_lags = int(math.ceil(max_lag)) + 2

    r_win = np.fft.irfft(np.abs(np.fft.rfft(window, nfft)) ** 2, nfft)[:n_lags]
    spec = np.fft.rfft(frames * window, nfft, axis=1)
    r_sig = np.fft.irfft(np.abs(spec) ** 2, nfft, axis=1)[:, :n_lags]
    energy = r_sig[:, :1]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (r_sig / energy) / (r_win / r_win[0])
    r[~np.isfinite(r)] = 0.0

    # local maxima of r at integer lags inside the admissible lag range
    lags = np.arange(1, n_lags - 1)
    left, mid, right = r[:, :-2], r[:, 1:-1], r[:, 2:]
    in_range = (lags >= math.floor(min_lag)) & (lags <= math.ceil(max_lag))
    is_peak = (mid > left) & (mid >= right) & in_range

    # parabolic refinement of lag and height
    curv = left - 2 * mid + right
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(curv < 0, 0.5 * (left - right) / curv, 0.0)
    delta = np.clip(delta, -0.5, 0.5)
    peak_lag = np.clip(lags + delta, min_lag, max_lag)
    peak_val = mid - 0.25 * (left - right) * delta

    strength = peak_val - config.octave_cost * np.log2(config.pitch_floor * peak_lag / fs)
    strength = np.where(is_peak, strength, -np.inf)
    best = np.argmax(strength, axis=1)
    rows = np.arange(len(frames))
    has_peak = np.isfinite(strength[rows, best])

    voiced = (
        has_peak
        & (peak_val[rows, best] >= config.voicing_threshold)
        & (local_peak >= config.silence_threshold * global_peak)
        & (global_peak > 0)
        & (energy[:, 0] > 0)
    )
    f0 = np.where(voiced, fs / peak_lag[rows, best], np.nan)
    return F0Contour(hop / fs, f0, start_time=0.5 * win_len / fs)


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linearly resample the longer sequence onto the length of the shorter."""
    if len(a) == len(b):
        return a, b
    short, long_ = (a, b) if len(a) < len(b) else (b, a)
    pos = np.linspace(0.0, len(long_) - 1, len(short))
    resampled = np.interp(pos, np.arange(len(long_)), long_)
    return (short, resampled) if len(a) < len(b) else (resampled, short)


def pitch_correlation(original: F0Contour, anonymized: F0Contour) -> float:
    """Pearson correlation of the voiced F0 values of two contours.

    Raises :class:`UndefinedCorrelation` when either contour has fewer than two
    voiced frames or an aligned sequence is constant.
    """
    a, b = original.voiced, anonymized.voiced
    if len(a) < 2 or len(b) < 2:
        raise UndefinedCorrelation(f"need >= 2 voiced frames, got {len(a)} and {len(b)}")
    a, b = _align(a, b)
    try:
        return pearson(a, b)
    except DegenerateInput as exc:
        raise UndefinedCorrelation(str(exc)) from exc


@dataclass(frozen=True)
class CorpusPitchResult:
    mean: float
    per_pair: list[float | None]

    @property
    def num_defined(self) -> int:
        return sum(v is not None for v in self.per_pair)

    @property
    def num_undefined(self) -> int:
        return len(self.per_pair) - self.num_defined


def corpus_contour_correlation(pairs: Iterable[tuple[F0Contour, F0Contour]]) -> CorpusPitchResult:
    per_pair: list[float | None] = []
    for orig, anon in pairs:
        try:
            per_pair.append(pitch_correlation(orig, anon))
        except UndefinedCorrelation:
            per_pair.append(None)
    defined = [v for v in per_pair if v is not None]
    if not defined:
        raise NoValidPairs(f"all {len(per_pair)} pairs have undefined pitch correlation")
    return CorpusPitchResult(float(np.mean(defined)), per_pair)


def corpus_pitch_correlation(
    pairs: Iterable[tuple[AudioBuffer, AudioBuffer]], config: PitchConfig = PitchConfig()
) -> CorpusPitchResult:
    """Mean per-utterance pitch correlation over aligned (original, anonymized) audio."""
    return corpus_contour_correlation(
        (extract_f0(orig, config), extract_f0(anon, config)) for orig, anon in pairs
    )
