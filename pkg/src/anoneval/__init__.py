"""Evaluation toolkit for speaker anonymization.

Privacy (EER), utility (WER), their trade-off, intonation preservation
(F0 correlation), target-speaker selection and a semi-informed attacker
simulation over synthetic embeddings.
"""

from .metrics import (
    Label,
    ScoredTrial,
    TradeoffInputs,
    TranscriptPair,
    Trial,
    compute_eer,
    compute_putr,
    compute_wer,
    eer_from_scores,
    pearson,
    putr,
)
from .pitch import AudioBuffer, F0Contour, PitchConfig, extract_f0, pitch_correlation
from .selection import (
    Gender,
    SelectionParams,
    SpeakerPool,
    build_pool,
    pseudo_xvector,
    select_random,
    select_random_gender_preserving,
)

__version__ = "0.1.0"
