"""Semi-informed attacker simulation over synthetic speaker embeddings.

Speakers are Gaussian clusters on the unit sphere. Anonymization replaces an
utterance embedding by a pool target chosen with one of the selection
strategies, optionally keeping a fraction ``leakage`` of the original vector
to model imperfect disentanglement. The attacker anonymizes enrollment data
itself (same system, its own target draws), averages the enrollment vectors
into a speaker model and scores anonymized test utterances by cosine
similarity.
"""

from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidConfig
from .metrics import EERResult, Label, ScoredTrial, compute_eer
from .selection import (
    Gender,
    SelectionParams,
    SpeakerPool,
    build_pool,
    l2_normalize,
    pseudo_xvector,
    select_random,
    select_random_gender_preserving,
)


@dataclass(frozen=True)
class PopulationConfig:
    num_speakers: int = 20
    utts_per_speaker: int = 10
    dim: int = 32
    between_spread: float = 1.0
    within_spread: float = 0.1
    seed: int = 0
    prefix: str = "spk"

    def __post_init__(self):
        if self.num_speakers < 2:
            raise InvalidConfig("need at least 2 speakers")
        if self.utts_per_speaker < 2:
            raise InvalidConfig("need at least 2 utterances per speaker")
        if self.dim < 1:
            raise InvalidConfig("dim must be positive")
        if self.between_spread < 0 or self.within_spread < 0:
            raise InvalidConfig("spreads must be non-negative")
        if self.between_spread == 0 and self.within_spread == 0:
            raise InvalidConfig("both spreads are zero; every vector would be the zero vector")


class SimSpeaker(NamedTuple):
    speaker_id: str
    gender: Gender
    utterances: np.ndarray  # (utts, dim), unit rows


def generate_population(config: PopulationConfig) -> list[SimSpeaker]:
    rng = np.random.default_rng(config.seed)
    centers = rng.standard_normal((config.num_speakers, config.dim)) * config.between_spread
    speakers = []
    for i, center in enumerate(centers):
        noise = rng.standard_normal((config.utts_per_speaker, config.dim)) * config.within_spread
        utts = center + noise
        norms = np.linalg.norm(utts, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise InvalidConfig("generated a zero vector; increase a spread")
        gender = Gender.F if i % 2 == 0 else Gender.M
        speakers.append(SimSpeaker(f"{config.prefix}{i:04d}", gender, utts / norms))
    return speakers


def population_pool(speakers: Sequence[SimSpeaker]) -> SpeakerPool:
    return build_pool(
        (s.speaker_id, s.gender, u) for s in speakers for u in s.utterances
    )


POOL_SEED_OFFSET = 10_000


def standard_fixture(
    seed: int = 0,
    population: PopulationConfig = PopulationConfig(),
    pool_size: int = 400,
    pool_utts: int = 4,
) -> tuple[list[SimSpeaker], SpeakerPool]:
    """Evaluation population plus a disjoint target pool drawn from the same model."""
    pop_cfg = replace(population, seed=seed)
    pool_cfg = replace(
        pop_cfg, num_speakers=pool_size, utts_per_speaker=pool_utts, seed=seed + POOL_SEED_OFFSET, prefix="pool"
    )
    return generate_population(pop_cfg), population_pool(generate_population(pool_cfg))


class Strategy(str, enum.Enum):
    IDENTITY = "identity"
    RANDOM = "random"
    GENDER_PRESERVING = "gender-preserving"
    PSEUDO_XVECTOR = "pseudo-xvector"


class Assignment(str, enum.Enum):
    PER_UTTERANCE = "per-utterance"
    PER_SPEAKER = "per-speaker"


@dataclass(frozen=True)
class AnonymizationPolicy:
    strategy: Strategy = Strategy.RANDOM
    assignment: Assignment = Assignment.PER_UTTERANCE
    leakage: float = 0.0
    selection: SelectionParams = field(default_factory=SelectionParams)

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "assignment", Assignment(self.assignment))
        if not 0.0 <= self.leakage <= 1.0:
            raise InvalidConfig(f"leakage {self.leakage} outside [0, 1]")


IDENTITY = AnonymizationPolicy(Strategy.IDENTITY, Assignment.PER_SPEAKER, 1.0)


@dataclass(frozen=True)
class SourceMeta:
    speaker_id: str
    gender: Gender
    utt_index: int = 0
    speaker_vector: np.ndarray | None = field(default=None, repr=False)
    rendition: int = 0


def _stable_int(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def derive_seed(seed: int, *parts: int | str) -> int:
    """Deterministic 32-bit child seed from a base seed and a key path."""
    entropy = [int(seed)] + [p if isinstance(p, int) else _stable_int(p) for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def anonymize_utterance(
    utt_vector: np.ndarray,
    source: SourceMeta,
    pool: SpeakerPool,
    policy: AnonymizationPolicy,
    seed: int = 0,
) -> np.ndarray:
    """Return ``normalize(leakage * utt + (1 - leakage) * target)``.

    With per-speaker assignment the target depends only on (seed, speaker);
    per-utterance assignment draws a fresh target for every utterance
    rendition.
    """
    utt_vector = np.asarray(utt_vector, dtype=np.float64)
    if policy.strategy is Strategy.IDENTITY or policy.leakage == 1.0:
        return l2_normalize(utt_vector)

    if policy.assignment is Assignment.PER_SPEAKER:
        sel_seed = derive_seed(seed, source.speaker_id)
    else:
        sel_seed = derive_seed(seed, source.speaker_id, source.utt_index, source.rendition)

    if policy.strategy is Strategy.RANDOM:
        target = select_random(pool, source.speaker_id, sel_seed).vector
    elif policy.strategy is Strategy.GENDER_PRESERVING:
        target = select_random_gender_preserving(pool, source.speaker_id, source.gender, sel_seed).vector
    else:
        use_speaker = policy.assignment is Assignment.PER_SPEAKER and source.speaker_vector is not None
        ref = source.speaker_vector if use_speaker else utt_vector
        target = pseudo_xvector(pool, ref, replace(policy.selection, seed=sel_seed))

    alpha = policy.leakage
    return l2_normalize(alpha * l2_normalize(utt_vector) + (1.0 - alpha) * target)


@dataclass
class AttackResult:
    trials: list[ScoredTrial]
    eer: EERResult

    @property
    def eer_value(self) -> float:
        return self.eer.eer


def run_attack(
    population: Sequence[SimSpeaker],
    pool: SpeakerPool,
    enroll_policy: AnonymizationPolicy,
    trial_policy: AnonymizationPolicy,
    num_trials: int = 10_000,
    seed: int = 0,
    enroll_fraction: float = 0.5,
) -> AttackResult:
    """Score balanced target/nontarget trials against anonymized enrollment models.

    Each speaker's utterances are split into an enrollment part and a test
    part. Enrollment and test sides use independent target draws. Every trial
    presents its own anonymized rendition of the test utterance, so with
    per-utterance assignment a recording reused across trials gets a new
    target each time.
    """
    if len(population) < 2:
        raise InvalidConfig("need at least 2 speakers")
    if num_trials < 100 or num_trials % 2:
        raise InvalidConfig("num_trials must be even and >= 100")
    n_utts = population[0].utterances.shape[0]
    n_enroll = max(1, min(n_utts - 1, int(round(n_utts * enroll_fraction))))

    enroll_seed = derive_seed(seed, "enroll")
    test_seed = derive_seed(seed, "test")
    speaker_vectors = [l2_normalize(s.utterances.mean(axis=0)) for s in population]

    models = []
    for spk, spk_vec in zip(population, speaker_vectors):
        anon = [
            anonymize_utterance(
                u, SourceMeta(spk.speaker_id, spk.gender, j, spk_vec), pool, enroll_policy, enroll_seed
            )
            for j, u in enumerate(spk.utterances[:n_enroll])
        ]
        models.append(l2_normalize(np.mean(anon, axis=0)))

    rng = np.random.default_rng(derive_seed(seed, "trials"))
    n_spk = len(population)
    half = num_trials // 2
    test_spk = rng.integers(n_spk, size=num_trials)
    enroll_spk = test_spk.copy()
    # nontarget enrollment speaker: uniform over the other speakers
    offset = rng.integers(1, n_spk, size=num_trials - half)
    enroll_spk[half:] = (test_spk[half:] + offset) % n_spk
    test_utt = rng.integers(n_enroll, n_utts, size=num_trials)

    trials = []
    for k in range(num_trials):
        s, e, j = int(test_spk[k]), int(enroll_spk[k]), int(test_utt[k])
        spk = population[s]
        vec = anonymize_utterance(
            spk.utterances[j],
            SourceMeta(spk.speaker_id, spk.gender, j, speaker_vectors[s], rendition=k),
            pool,
            trial_policy,
            test_seed,
        )
        label = Label.TARGET if k < half else Label.NONTARGET
        test_id = f"{spk.speaker_id}-u{j:03d}-r{k:06d}"
        trials.append(
            ScoredTrial(population[e].speaker_id, test_id, label, float(models[e] @ vec))
        )
    return AttackResult(trials, compute_eer(trials))
