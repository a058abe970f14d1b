"""Speaker pools and target-speaker selection strategies."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyInput,
    InputError,
    InvalidConfig,
    NoEligibleTarget,
    ParamsExceedPool,
)


class Gender(str, enum.Enum):
    F = "F"
    M = "M"
    UNKNOWN = "U"

    @classmethod
    def parse(cls, text: str) -> "Gender":
        t = text.strip().upper()
        if t in ("F", "FEMALE"):
            return cls.F
        if t in ("M", "MALE"):
            return cls.M
        if t in ("U", "UNKNOWN", "?"):
            return cls.UNKNOWN
        raise InputError(f"unknown gender {text!r}")


class Direction(str, enum.Enum):
    CLOSEST = "closest"
    FARTHEST = "farthest"


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateInput("cannot normalize a zero or non-finite vector")
    return v / norm


@dataclass(frozen=True)
class SpeakerEmbedding:
    speaker_id: str
    gender: Gender
    vector: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SpeakerPool:
    entries: tuple[SpeakerEmbedding, ...]

    def __post_init__(self):
        if not self.entries:
            raise EmptyInput("speaker pool is empty")
        ids = [e.speaker_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate speaker ids in pool")
        dims = {e.vector.shape for e in self.entries}
        if len(dims) != 1:
            raise DimensionMismatch(f"inconsistent embedding shapes {sorted(dims)}")
        object.__setattr__(self, "_matrix", np.stack([e.vector for e in self.entries]))

    @property
    def dim(self) -> int:
        return self.entries[0].vector.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def ids(self) -> list[str]:
        return [e.speaker_id for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> SpeakerEmbedding:
        return self.entries[i]


def build_pool(utterances: Iterable[tuple[str, Gender | str, Sequence[float]]]) -> SpeakerPool:
    """One entry per speaker: mean of its utterance embeddings, L2-normalized.

    Speakers keep the order of their first appearance.
    """
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    genders: dict[str, Gender] = {}
    dim = None
    for spk, gender, vec in utterances:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.ndim != 1:
            raise DimensionMismatch(f"embedding for {spk!r} is not a vector")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionMismatch(f"speaker {spk!r}: dimension {vec.shape[0]}, expected {dim}")
        if not np.all(np.isfinite(vec)):
            raise InputError(f"non-finite embedding for {spk!r}")
        gender = gender if isinstance(gender, Gender) else Gender.parse(gender)
        if spk in sums:
            if genders[spk] is not gender:
                raise InputError(f"speaker {spk!r} has conflicting genders")
            sums[spk] = sums[spk] + vec
            counts[spk] += 1
        else:
            sums[spk], counts[spk], genders[spk] = vec.copy(), 1, gender
    if not sums:
        raise EmptyInput("no utterance embeddings given")
    return SpeakerPool(
        tuple(
            SpeakerEmbedding(spk, genders[spk], l2_normalize(sums[spk] / counts[spk]))
            for spk in sums
        )
    )


def _pick(candidates: list[SpeakerEmbedding], seed) -> SpeakerEmbedding:
    rng = np.random.default_rng(seed)
    return candidates[int(rng.integers(len(candidates)))]


def select_random(pool: SpeakerPool, source_id: str, seed=None) -> SpeakerEmbedding:
    """Uniform choice among pool speakers other than ``source_id``."""
    eligible = [e for e in pool.entries if e.speaker_id != source_id]
    if not eligible:
        raise NoEligibleTarget(f"no pool speaker other than {source_id!r}")
    return _pick(eligible, seed)


def select_random_gender_preserving(
    pool: SpeakerPool, source_id: str, source_gender: Gender | str, seed=None
) -> SpeakerEmbedding:
    """Uniform choice among same-gender pool speakers other than ``source_id``."""
    if not isinstance(source_gender, Gender):
        source_gender = Gender.parse(source_gender)
    eligible = [
        e for e in pool.entries if e.speaker_id != source_id and e.gender is source_gender
    ]
    if not eligible:
        raise NoEligibleTarget(
            f"no pool speaker of gender {source_gender.value} other than {source_id!r}"
        )
    return _pick(eligible, seed)


@dataclass(frozen=True)
class SelectionParams:
    n_closest: int = 200
    m_sampled: int = 20
    direction: Direction = Direction.CLOSEST
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.m_sampled <= self.n_closest:
            raise InvalidConfig(f"need 1 <= m ({self.m_sampled}) <= n ({self.n_closest})")
        object.__setattr__(self, "direction", Direction(self.direction))


def rank_by_cosine(pool: SpeakerPool, source_vector: np.ndarray, direction=Direction.CLOSEST) -> np.ndarray:
    """Pool indices ordered by cosine distance to the source; ties by speaker id."""
    src = l2_normalize(source_vector)
    if src.shape[0] != pool.dim:
        raise DimensionMismatch(f"source dimension {src.shape[0]}, pool dimension {pool.dim}")
    dist = 1.0 - pool.matrix @ src
    key = dist if Direction(direction) is Direction.CLOSEST else -dist
    # lexsort: last key is primary
    id_rank = np.argsort(np.array(pool.ids), kind="stable")
    tiebreak = np.empty(len(pool), dtype=np.int64)
    tiebreak[id_rank] = np.arange(len(pool))
    return np.lexsort((tiebreak, key))


def pseudo_members(pool: SpeakerPool, source_vector: np.ndarray, params: SelectionParams) -> np.ndarray:
    """Indices of the ``m`` speakers sampled from the ``n`` nearest (or farthest)."""
    if params.n_closest > len(pool):
        raise ParamsExceedPool(f"n={params.n_closest} exceeds pool size {len(pool)}")
    ranked = rank_by_cosine(pool, source_vector, params.direction)[: params.n_closest]
    rng = np.random.default_rng(params.seed)
    return ranked[rng.choice(params.n_closest, size=params.m_sampled, replace=False)]


def pseudo_xvector(pool: SpeakerPool, source_vector: np.ndarray, params: SelectionParams = SelectionParams()) -> np.ndarray:
    """Average ``m`` embeddings randomly drawn from the ``n`` nearest pool speakers.

    The average is L2-normalized so it can be scored like any other embedding.
    """
    members = pseudo_members(pool, source_vector, params)
    return l2_normalize(pool.matrix[members].mean(axis=0))
