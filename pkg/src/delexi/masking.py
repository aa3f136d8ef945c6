"""Masking strategies: NE deletion, basic NER, overlap-aware NER and NER+supersense.

Overlap-aware tags carry a side letter and a per-(category, side) index. The
claim is scanned first, then each evidence sentence; the first sighting of an
entity allocates ``c<k>`` if it happened in the claim and ``e<k>`` otherwise,
and every later sighting reuses that tag. Tag maps never outlive a pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Optional

from delexi.annotation import (
    AnnotatedSentence,
    ClaimEvidencePair,
    EntityKey,
    Label,
    Span,
    TaggedToken,
    entity_spans,
    identity_key,
    normalize_text,
)
from delexi.tags import CLAIM, EVIDENCE, MaskTag, root_word_of

NOUN_POS = frozenset({"NN", "NNS", "NNP", "NNPS"})
VERB_POS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})
ADJ_POS = frozenset({"JJ", "JJR", "JJS"})
ADV_POS = frozenset({"RB", "RBR", "RBS"})
# Proper nouns are included: NE masking runs first, so a proper noun only
# reaches the supersense stage when the NE tagger missed it.
CONTENT_POS = NOUN_POS | VERB_POS | ADJ_POS | ADV_POS


class Strategy(str, enum.Enum):
    LEXICALIZED = "lexicalized"
    NE_DELETION = "ne_deletion"
    BASIC_NER = "basic_ner"
    OA_NER = "oa_ner"
    OA_NER_SS = "oa_ner_ss"


# command-line spellings
STRATEGY_NAMES = {
    "lexicalized": Strategy.LEXICALIZED,
    "delete": Strategy.NE_DELETION,
    "ner": Strategy.BASIC_NER,
    "oaner": Strategy.OA_NER,
    "oaner-ss": Strategy.OA_NER_SS,
}


class SpanMode(str, enum.Enum):
    SPAN = "span"
    TOKEN = "token"


@dataclass(frozen=True)
class MaskStrategy:
    kind: Strategy = Strategy.OA_NER
    content_pos_classes: FrozenSet[str] = CONTENT_POS
    ss_span_mode: SpanMode = SpanMode.SPAN

    def __post_init__(self):
        object.__setattr__(self, "kind", Strategy(self.kind))
        object.__setattr__(self, "ss_span_mode", SpanMode(self.ss_span_mode))
        object.__setattr__(self, "content_pos_classes", frozenset(self.content_pos_classes))


@dataclass
class TagIdentityMap:
    assignments: dict[EntityKey, MaskTag] = field(default_factory=dict)
    counters: dict[tuple[str, str], int] = field(default_factory=dict)

    def tag_for(self, key: EntityKey, side: str) -> MaskTag:
        tag = self.assignments.get(key)
        if tag is None:
            slot = (key.category, side)
            index = self.counters.get(slot, 1)
            self.counters[slot] = index + 1
            tag = MaskTag(key.category, side, index)
            self.assignments[key] = tag
        return tag


@dataclass(frozen=True)
class MaskedPair:
    id: str
    claim_tokens: list[str]
    evidence_tokens: list[list[str]]
    label: Optional[Label] = None
    tag_inventory: FrozenSet[str] = frozenset()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "claim": " ".join(self.claim_tokens),
            "evidence": [" ".join(toks) for toks in self.evidence_tokens],
            "label": self.label.value if self.label is not None else None,
            "tags": sorted(self.tag_inventory),
        }


@dataclass(frozen=True)
class _Unit:
    """A run of tokens that renders as one tag."""

    start: int
    end: int
    key: EntityKey


# -- per-sentence strategies -------------------------------------------------


def ne_delete(sentence: AnnotatedSentence) -> list[str]:
    covered = _covered(entity_spans(sentence, "ner"))
    return [t.surface for i, t in enumerate(sentence) if i not in covered]


def basic_ner_mask(sentence: AnnotatedSentence) -> list[str]:
    """Collapse every NE span to its category name (aliases expanded)."""
    units = [
        _Unit(s.start, s.end, EntityKey(s.category, "")) for s in entity_spans(sentence, "ner")
    ]
    return _render(sentence, units, lambda u: root_word_of(u.key.category))


# -- overlap-aware strategies --------------------------------------------------


def ss_identity_key(tokens: Iterable[TaggedToken], category: str) -> EntityKey:
    """Supersense identity: lemma when annotated, else normalized surface."""
    words = [t.lemma.lower() if t.lemma else t.surface for t in tokens]
    return EntityKey(category, normalize_text(" ".join(words)))


def _ner_units(sentence: AnnotatedSentence, per_token: bool = False) -> list[_Unit]:
    units = []
    for span in entity_spans(sentence, "ner"):
        if per_token:
            units.extend(
                _Unit(i, i + 1, identity_key([sentence[i]], span.category)) for i in span.indices()
            )
        else:
            units.append(
                _Unit(span.start, span.end, identity_key(sentence.tokens[span.start : span.end], span.category))
            )
    return units


def _ss_units(
    sentence: AnnotatedSentence, strategy: MaskStrategy, blocked: set[int]
) -> list[_Unit]:
    content = strategy.content_pos_classes
    units = []
    for span in entity_spans(sentence, "ss"):
        if strategy.ss_span_mode is SpanMode.TOKEN:
            for i in span.indices():
                if i not in blocked and sentence[i].pos in content:
                    units.append(_Unit(i, i + 1, ss_identity_key([sentence[i]], span.category)))
            continue
        # NE tokens take precedence; whatever survives splits into contiguous runs
        for start, end in _runs(i for i in span.indices() if i not in blocked):
            run = sentence.tokens[start:end]
            if any(t.pos in content for t in run):
                units.append(_Unit(start, end, ss_identity_key(run, span.category)))
    return units


def _runs(indices: Iterable[int]) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    for i in indices:
        if runs and runs[-1][1] == i:
            runs[-1] = (runs[-1][0], i + 1)
        else:
            runs.append((i, i + 1))
    return runs


def _sentence_units(
    sentence: AnnotatedSentence, layer: str, strategy: Optional[MaskStrategy]
) -> list[_Unit]:
    if layer == "ner":
        return _ner_units(sentence)
    if layer != "ss_over_pos":
        raise ValueError(f"unknown tag-map layer {layer!r}")
    strategy = strategy or MaskStrategy(Strategy.OA_NER_SS)
    per_token = strategy.ss_span_mode is SpanMode.TOKEN
    ner = _ner_units(sentence, per_token=per_token)
    blocked = {i for u in ner for i in range(u.start, u.end)}
    units = ner + _ss_units(sentence, strategy, blocked)
    units.sort(key=lambda u: u.start)
    return units


def _scan(
    pair: ClaimEvidencePair, layer: str, strategy: Optional[MaskStrategy]
) -> tuple[TagIdentityMap, list[list[_Unit]]]:
    tag_map = TagIdentityMap()
    per_sentence = []
    for side, sentence in pair.sentences():
        units = _sentence_units(sentence, layer, strategy)
        for unit in units:
            tag_map.tag_for(unit.key, side)
        per_sentence.append(units)
    return tag_map, per_sentence


def build_tag_map(
    pair: ClaimEvidencePair, layer: str = "ner", strategy: Optional[MaskStrategy] = None
) -> TagIdentityMap:
    """Overlap-aware tag assignments for one pair.

    ``layer="ner"`` covers NE spans only. ``layer="ss_over_pos"`` is the map
    used by the NER+supersense strategy: NE units and content-word supersense
    units interleaved by position, sharing the per-(category, side) counters.
    """
    return _scan(pair, layer, strategy)[0]


def _overlap_mask(pair: ClaimEvidencePair, layer: str, strategy: Optional[MaskStrategy]) -> MaskedPair:
    tag_map, units = _scan(pair, layer, strategy)

    def render(u: _Unit) -> str:
        return tag_map.assignments[u.key].render()

    sentences = [s for _, s in pair.sentences()]
    rendered = [_render(s, u, render) for s, u in zip(sentences, units)]
    inventory = frozenset(render(u) for us in units for u in us)
    return MaskedPair(pair.id, rendered[0], rendered[1:], pair.label, inventory)


def oa_ner_mask(pair: ClaimEvidencePair) -> MaskedPair:
    return _overlap_mask(pair, "ner", None)


def oa_ner_ss_mask(pair: ClaimEvidencePair, strategy: Optional[MaskStrategy] = None) -> MaskedPair:
    return _overlap_mask(pair, "ss_over_pos", strategy or MaskStrategy(Strategy.OA_NER_SS))


def mask_pair(pair: ClaimEvidencePair, strategy: MaskStrategy) -> MaskedPair:
    kind = strategy.kind
    if kind is Strategy.OA_NER:
        return oa_ner_mask(pair)
    if kind is Strategy.OA_NER_SS:
        return oa_ner_ss_mask(pair, strategy)
    if kind is Strategy.LEXICALIZED:
        fn = lambda s: s.surfaces  # noqa: E731
    elif kind is Strategy.NE_DELETION:
        fn = ne_delete
    else:
        fn = basic_ner_mask
    claim = fn(pair.claim)
    evidence = [fn(s) for s in pair.evidence]
    inventory = frozenset()
    if kind is Strategy.BASIC_NER:
        inventory = frozenset(
            root_word_of(span.category)
            for _, s in pair.sentences()
            for span in entity_spans(s, "ner")
        )
    return MaskedPair(pair.id, claim, evidence, pair.label, inventory)


def _covered(spans: Iterable[Span]) -> set[int]:
    return {i for s in spans for i in s.indices()}


def _render(sentence: AnnotatedSentence, units: list[_Unit], render) -> list[str]:
    out = []
    i = 0
    starts = {u.start: u for u in units}
    while i < len(sentence):
        unit = starts.get(i)
        if unit is None:
            out.append(sentence[i].surface)
            i += 1
        else:
            out.append(render(unit))
            i = unit.end
    return out
