"""Attention-divergence error analysis between an in-domain and an out-of-domain model.

An instance is analysed only when the out-of-domain model got it wrong and the
in-domain model got it right. For those, the words in the out-of-domain
model's top-k cumulative attention that are absent from the in-domain top-k
are collected, bucketed by coarse POS, and checked against NE spans.

Evidence positions index the concatenation of all evidence sentences of the
instance, in order.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, NamedTuple, Optional

from delexi.annotation import ClaimEvidencePair, TaggedToken, entity_spans, iter_jsonl
from delexi.errors import ConfigError, FormatError

UNKNOWN = "UNKNOWN"
BUCKETS = ("noun", "verb", "adjective", "adverb", "other")
_PREFIX_BUCKETS = (("NN", "noun"), ("VB", "verb"), ("JJ", "adjective"), ("RB", "adverb"))


@dataclass(frozen=True)
class AttentionRecord:
    instance_id: str
    model_id: str
    token_weights: tuple[tuple[int, str, float], ...]
    predicted_label: str
    gold_label: str

    def __post_init__(self):
        for pos, surface, weight in self.token_weights:
            if pos < 0:
                raise ValueError(f"{self.instance_id}: negative evidence position {pos}")
            if not math.isfinite(weight) or weight < 0:
                raise ValueError(f"{self.instance_id}: bad attention weight {weight!r} for {surface!r}")

    @property
    def correct(self) -> bool:
        return self.predicted_label == self.gold_label

    @classmethod
    def from_json(cls, obj: dict) -> "AttentionRecord":
        weights = tuple((int(p), str(s), float(w)) for p, s, w in obj["weights"])
        return cls(
            instance_id=str(obj["instance_id"]),
            model_id=str(obj["model_id"]),
            token_weights=weights,
            predicted_label=str(obj["predicted"]),
            gold_label=str(obj["gold"]),
        )


def read_attention(stream: IO[str], source: Optional[str] = None) -> list[AttentionRecord]:
    records = []
    for lineno, obj in iter_jsonl(stream, source):
        try:
            records.append(AttentionRecord.from_json(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad attention record: {exc}", line=lineno, source=source) from None
    return records


def default_bucket(pos: str) -> str:
    if pos == UNKNOWN:
        return UNKNOWN
    for prefix, bucket in _PREFIX_BUCKETS:
        if pos.startswith(prefix):
            return bucket
    return "other"


@dataclass(frozen=True)
class AuditConfig:
    in_domain_model: str = "in_domain"
    out_of_domain_model: str = "out_of_domain"
    k: int = 3
    # fine POS -> coarse bucket; tags not listed fall back to prefix rules
    pos_bucketing: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")

    def bucket(self, pos: str) -> str:
        return self.pos_bucketing.get(pos) or default_bucket(pos)


class DivergentWord(NamedTuple):
    word: str
    pos: str
    # flattened evidence position of the occurrence the POS was read from
    position: Optional[int] = None


def cumulative_attention(record: AttentionRecord) -> dict[str, float]:
    totals: dict[str, float] = {}
    for _, surface, weight in record.token_weights:
        word = surface.lower()
        totals[word] = totals.get(word, 0.0) + weight
    return totals


def top_k_words(word_weights: Mapping[str, float], k: int) -> list[str]:
    if k < 1:
        raise ConfigError("k must be at least 1")
    ranked = sorted(word_weights.items(), key=lambda kv: (-kv[1], kv[0]))
    return [w for w, _ in ranked[:k]]


def is_selected(ood: AttentionRecord, in_domain: AttentionRecord) -> bool:
    return not ood.correct and in_domain.correct


def flat_evidence(pair: ClaimEvidencePair) -> list[TaggedToken]:
    return [t for sent in pair.evidence for t in sent]


def ne_positions(pair: ClaimEvidencePair) -> set[int]:
    covered, offset = set(), 0
    for sent in pair.evidence:
        for span in entity_spans(sent, "ner"):
            covered.update(offset + i for i in span.indices())
        offset += len(sent)
    return covered


def _first_occurrence(word, record, tokens):
    """Sidecar position of the first evidence occurrence of ``word``."""
    positions = sorted(p for p, s, _ in record.token_weights if s.lower() == word)
    for p in positions:
        if p < len(tokens) and tokens[p].surface.lower() == word:
            return p
    for p, tok in enumerate(tokens):
        if tok.surface.lower() == word:
            return p
    return None


def divergent_words(
    ood: AttentionRecord,
    in_domain: AttentionRecord,
    config: AuditConfig,
    annotation: Optional[ClaimEvidencePair] = None,
) -> Optional[frozenset[DivergentWord]]:
    """Words ranked top-k by the out-of-domain model but not by the in-domain one.

    Returns ``None`` for instances outside the selection (out-of-domain wrong,
    in-domain right). Words with no sidecar occurrence get POS ``UNKNOWN``.
    """
    if not is_selected(ood, in_domain):
        return None
    ood_top = top_k_words(cumulative_attention(ood), config.k)
    id_top = set(top_k_words(cumulative_attention(in_domain), config.k))
    tokens = flat_evidence(annotation) if annotation is not None else []
    out = set()
    for word in ood_top:
        if word in id_top:
            continue
        p = _first_occurrence(word, ood, tokens)
        pos = tokens[p].pos if p is not None and tokens[p].pos else UNKNOWN
        out.add(DivergentWord(word, pos, p))
    return frozenset(out)


def pos_histogram(
    divergent_sets: Iterable[Iterable[DivergentWord]], config: AuditConfig = AuditConfig()
) -> dict[str, int]:
    counts: dict[str, int] = defaultdict(int)
    for words in divergent_sets:
        for w in words:
            counts[config.bucket(w.pos)] += 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def ne_noun_fraction(
    divergent: Mapping[str, Iterable[DivergentWord]],
    annotations: Mapping[str, ClaimEvidencePair],
    config: AuditConfig = AuditConfig(),
) -> float:
    """Share of noun-bucket divergent words whose occurrence lies in an NE span.

    Zero when there are no noun-bucket words.
    """
    nouns = inside = 0
    for instance_id, words in divergent.items():
        pair = annotations.get(instance_id)
        covered = ne_positions(pair) if pair is not None else set()
        for w in words:
            if config.bucket(w.pos) != "noun":
                continue
            nouns += 1
            if w.position is not None and w.position in covered:
                inside += 1
    return inside / nouns if nouns else 0.0


@dataclass
class AuditReport:
    selected: list[str]
    divergent: dict[str, frozenset[DivergentWord]]
    histogram: dict[str, int]
    ne_noun_fraction: float
    incomplete: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pos_histogram": self.histogram,
            "ne_noun_fraction": self.ne_noun_fraction,
            "selected_instances": self.selected,
            "divergent_words": {
                iid: [[w.word, w.pos] for w in sorted(words)]
                for iid, words in self.divergent.items()
            },
            "incomplete_instances": self.incomplete,
        }

    def write_csv(self, stream: IO[str]) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["bucket", "count"])
        for bucket, count in self.histogram.items():
            writer.writerow([bucket, count])


def audit(
    records: Iterable[AttentionRecord],
    annotations: Mapping[str, ClaimEvidencePair],
    config: AuditConfig = AuditConfig(),
) -> AuditReport:
    by_instance: dict[str, dict[str, AttentionRecord]] = {}
    for rec in records:
        by_instance.setdefault(rec.instance_id, {})[rec.model_id] = rec
    selected, divergent, incomplete = [], {}, []
    for instance_id in sorted(by_instance):
        models = by_instance[instance_id]
        ood = models.get(config.out_of_domain_model)
        ind = models.get(config.in_domain_model)
        if ood is None or ind is None:
            incomplete.append(instance_id)
            continue
        words = divergent_words(ood, ind, config, annotations.get(instance_id))
        if words is None:
            continue
        selected.append(instance_id)
        divergent[instance_id] = words
    return AuditReport(
        selected=selected,
        divergent=divergent,
        histogram=pos_histogram(divergent.values(), config),
        ne_noun_fraction=ne_noun_fraction(divergent, annotations, config),
        incomplete=incomplete,
    )


def dump_report(report: AuditReport, stream: IO[str]) -> None:
    json.dump(report.to_json(), stream, indent=2, ensure_ascii=False)
    stream.write("\n")
