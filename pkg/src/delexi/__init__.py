"""Delexicalization toolkit for claim/evidence fact-verification data."""

__version__ = "0.1.0"

from delexi.annotation import (
    AnnotatedSentence,
    ClaimEvidencePair,
    EntityKey,
    FeverLabel,
    FncLabel,
    TaggedToken,
    entity_spans,
    identity_key,
)
from delexi.masking import MaskStrategy, MaskTag, MaskedPair, mask_pair

__all__ = [
    "AnnotatedSentence",
    "ClaimEvidencePair",
    "EntityKey",
    "FeverLabel",
    "FncLabel",
    "MaskStrategy",
    "MaskTag",
    "MaskedPair",
    "TaggedToken",
    "entity_spans",
    "identity_key",
    "mask_pair",
]
