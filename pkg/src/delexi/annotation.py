"""Annotated-text data model and entity identity.

Every masking strategy reads the same substrate: a sentence of tokens, each
carrying a POS tag plus BIO-encoded named-entity (``ner``) and supersense
(``ss``) labels. Labels are stored in the ``B-category`` / ``I-category`` / ``O``
form with lowercase alphanumeric categories.

The canonical interchange format ("tagged JSONL") holds one pair per line::

    {"id": "...", "claim": SENT, "evidence": [SENT, ...], "label": "...",
     "nei_retrieval": "nearest_page"}

where ``SENT`` is ``{"tokens": [...], "pos": [...], "ner": [...], "ss": [...],
"lemma": [...]}`` with all arrays of equal length (``lemma`` optional).
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional, Union

from delexi.errors import AnnotationError, FormatError, LabelError

OUTSIDE = "O"
_CATEGORY_RE = re.compile(r"^[a-z0-9]+$")
# WordNet lexicographer prefixes emitted by supersense taggers ("noun.artifact").
_SS_PREFIX_RE = re.compile(r"^(noun|verb|adj|adv)\.", re.IGNORECASE)


class FeverLabel(str, enum.Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    NEI = "NOT ENOUGH INFO"


class FncLabel(str, enum.Enum):
    AGREE = "agree"
    DISAGREE = "disagree"
    DISCUSS = "discuss"
    UNRELATED = "unrelated"


class NeiProvenance(str, enum.Enum):
    NEAREST_PAGE = "nearest_page"
    RANDOM = "random"


Label = Union[FeverLabel, FncLabel]


def parse_label(value: str) -> Label:
    """Parse a label string from either label space."""
    for space in (FeverLabel, FncLabel):
        try:
            return space(value)
        except ValueError:
            pass
    raise LabelError(f"unknown label {value!r}")


def label_space(label: Label) -> type:
    return type(label)


def split_bio(label: str) -> tuple[str, Optional[str]]:
    """Split ``B-date`` into ``("B", "date")``; ``O`` gives ``("O", None)``."""
    if label == OUTSIDE:
        return OUTSIDE, None
    prefix, sep, category = label.partition("-")
    if not sep or prefix not in ("B", "I") or not category:
        raise ValueError(f"not a BIO label: {label!r}")
    return prefix, category


def normalize_label(label: str) -> str:
    """Bring tagger output into canonical form.

    Lowercases the category and strips WordNet lexicographer prefixes, so
    ``B-ORGANIZATION`` becomes ``B-organization`` and ``I-verb.motion`` becomes
    ``I-motion``. Bare CoreNLP-style IO labels are not accepted here.
    """
    label = label.strip()
    if label in ("", OUTSIDE, "o", "0"):
        return OUTSIDE
    prefix, sep, category = label.partition("-")
    if not sep:
        raise ValueError(f"not a BIO label: {label!r}")
    category = _SS_PREFIX_RE.sub("", category).lower()
    return f"{prefix.upper()}-{category}"


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    pos: str = ""
    ner: str = OUTSIDE
    ss: str = OUTSIDE
    lemma: Optional[str] = None

    def __post_init__(self):
        if not self.surface:
            raise AnnotationError("empty token surface")
        for layer in ("ner", "ss"):
            value = getattr(self, layer)
            try:
                _, category = split_bio(value)
            except ValueError as exc:
                raise AnnotationError(f"{layer}: {exc}") from None
            if category is not None and not _CATEGORY_RE.match(category):
                raise AnnotationError(
                    f"{layer} category {category!r} is not lowercase alphanumeric"
                )

    def label(self, layer: str) -> str:
        return self.ner if layer == "ner" else self.ss


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[TaggedToken, ...] = ()

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def text(self) -> str:
        return " ".join(self.surfaces)

    @classmethod
    def plain(cls, text: str) -> "AnnotatedSentence":
        """Whitespace-tokenized sentence with no annotations."""
        return cls(tuple(TaggedToken(w) for w in text.split()))

    def validate(self) -> "AnnotatedSentence":
        for layer in ("ner", "ss"):
            entity_spans(self, layer)
        return self


@dataclass(frozen=True)
class ClaimEvidencePair:
    id: str
    claim: AnnotatedSentence
    evidence: tuple[AnnotatedSentence, ...]
    label: Optional[Label] = None
    nei_provenance: Optional[NeiProvenance] = None

    def __post_init__(self):
        if not isinstance(self.evidence, tuple):
            object.__setattr__(self, "evidence", tuple(self.evidence))
        if self.label is not None and not self.evidence:
            raise AnnotationError(f"labeled pair {self.id!r} has no evidence")
        if self.nei_provenance is not None and self.label is not FeverLabel.NEI:
            raise LabelError(
                f"pair {self.id!r}: NEI provenance given for label {self.label!r}"
            )

    def sentences(self) -> Iterator[tuple[str, AnnotatedSentence]]:
        """Yield ``(side, sentence)`` in scan order: claim first, then evidence."""
        yield "c", self.claim
        for sent in self.evidence:
            yield "e", sent


@dataclass(frozen=True)
class EntityKey:
    category: str
    normalized_text: str


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    category: str

    def __len__(self):
        return self.end - self.start

    def indices(self) -> range:
        return range(self.start, self.end)


def entity_spans(sentence: AnnotatedSentence, layer: str) -> list[Span]:
    """Decode the maximal ``B-I...`` runs of one annotation layer."""
    if layer not in ("ner", "ss"):
        raise ValueError(f"unknown layer {layer!r}")
    spans: list[Span] = []
    start = None
    current = None
    for i, token in enumerate(sentence.tokens):
        prefix, category = split_bio(token.label(layer))
        if prefix == "I":
            if current != category:
                raise AnnotationError(
                    f"{layer} label {token.label(layer)!r} does not continue a "
                    f"{category} span",
                    sentence=_preview(sentence),
                    token_index=i,
                )
            continue
        if current is not None:
            spans.append(Span(start, i, current))
        start, current = (i, category) if prefix == "B" else (None, None)
    if current is not None:
        spans.append(Span(start, len(sentence.tokens), current))
    return spans


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def identity_key(span_tokens: Iterable[TaggedToken], category: str) -> EntityKey:
    tokens = list(span_tokens)
    if not tokens:
        raise ValueError("identity_key needs a non-empty span")
    return EntityKey(category, normalize_text(" ".join(t.surface for t in tokens)))


def _preview(sentence: AnnotatedSentence, width: int = 60) -> str:
    text = sentence.text
    return text if len(text) <= width else text[: width - 3] + "..."


# -- tagged JSONL -----------------------------------------------------------


def sentence_from_json(obj: dict) -> AnnotatedSentence:
    try:
        tokens = obj["tokens"]
    except (KeyError, TypeError):
        raise AnnotationError("sentence object lacks 'tokens'") from None
    n = len(tokens)
    layers = {}
    for key in ("pos", "ner", "ss", "lemma"):
        values = obj.get(key)
        if values is None:
            continue
        if len(values) != n:
            raise AnnotationError(
                f"{key!r} has {len(values)} entries for {n} tokens",
                sentence=" ".join(tokens)[:60],
            )
        layers[key] = values
    out = []
    for i, surface in enumerate(tokens):
        try:
            out.append(
                TaggedToken(
                    surface=surface,
                    pos=layers["pos"][i] if "pos" in layers else "",
                    ner=normalize_label(layers["ner"][i]) if "ner" in layers else OUTSIDE,
                    ss=normalize_label(layers["ss"][i]) if "ss" in layers else OUTSIDE,
                    lemma=layers["lemma"][i] if "lemma" in layers else None,
                )
            )
        except (AnnotationError, ValueError) as exc:
            raise AnnotationError(str(exc), sentence=" ".join(tokens)[:60], token_index=i)
    return AnnotatedSentence(tuple(out)).validate()


def sentence_to_json(sentence: AnnotatedSentence) -> dict:
    obj = {
        "tokens": [t.surface for t in sentence],
        "pos": [t.pos for t in sentence],
        "ner": [t.ner for t in sentence],
        "ss": [t.ss for t in sentence],
    }
    if any(t.lemma is not None for t in sentence):
        obj["lemma"] = [t.lemma if t.lemma is not None else t.surface for t in sentence]
    return obj


def _sentence(value) -> AnnotatedSentence:
    if isinstance(value, str):
        return AnnotatedSentence.plain(value)
    return sentence_from_json(value)


def pair_from_json(obj: dict) -> ClaimEvidencePair:
    try:
        pair_id = str(obj["id"])
        claim = obj["claim"]
        evidence = obj["evidence"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"record lacks field {exc}") from None
    label = parse_label(obj["label"]) if obj.get("label") is not None else None
    prov = obj.get("nei_retrieval")
    return ClaimEvidencePair(
        id=pair_id,
        claim=_sentence(claim),
        evidence=tuple(_sentence(s) for s in evidence),
        label=label,
        nei_provenance=NeiProvenance(prov) if prov is not None else None,
    )


def pair_to_json(pair: ClaimEvidencePair) -> dict:
    obj = {
        "id": pair.id,
        "claim": sentence_to_json(pair.claim),
        "evidence": [sentence_to_json(s) for s in pair.evidence],
    }
    if pair.label is not None:
        obj["label"] = pair.label.value
    if pair.nei_provenance is not None:
        obj["nei_retrieval"] = pair.nei_provenance.value
    return obj


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def iter_jsonl(stream: IO[str], source: Optional[str] = None) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)`` for each non-blank line (1-based)."""
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON: {exc.msg}", line=lineno, source=source) from None


def read_tagged(stream: IO[str], source: Optional[str] = None) -> Iterator[ClaimEvidencePair]:
    for lineno, obj in iter_jsonl(stream, source):
        try:
            yield pair_from_json(obj)
        except (AnnotationError, LabelError, FormatError, ValueError) as exc:
            raise FormatError(str(exc), line=lineno, source=source) from exc


def write_tagged(pairs: Iterable[ClaimEvidencePair], stream: IO[str]) -> int:
    n = 0
    for pair in pairs:
        stream.write(dumps(pair_to_json(pair)) + "\n")
        n += 1
    return n
