"""Dataset readers, sidecar joins, seeded train/dev splitting and label counts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import IO, Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

from delexi.annotation import (
    AnnotatedSentence,
    ClaimEvidencePair,
    FeverLabel,
    FncLabel,
    NeiProvenance,
    iter_jsonl,
)
from delexi.errors import ConfigError, FormatError, LabelError, MissingBodyError

T = TypeVar("T")


def _flatten_evidence(value, lineno, source):
    if isinstance(value, str):
        return [value]
    if isinstance(value, list):
        # raw FEVER annotation tuple: [annotation_id, evidence_id, page, line]
        if len(value) == 4 and not isinstance(value[0], (str, list)):
            raise FormatError(
                "evidence holds page/line references, not sentences; "
                "run retrieval before ingestion",
                line=lineno,
                source=source,
            )
        out = []
        for item in value:
            out.extend(_flatten_evidence(item, lineno, source))
        return out
    raise FormatError(f"unsupported evidence element {value!r}", line=lineno, source=source)


def read_fever(stream: IO[str], source: Optional[str] = None) -> list[ClaimEvidencePair]:
    """Read FEVER-style JSONL with retrieved evidence sentences.

    Each record needs ``id``, ``claim``, ``label`` and ``evidence``; evidence may
    be a list of sentences or a list of evidence sets (lists of sentences), and
    is flattened in order. An optional ``nei_retrieval`` field records how NEI
    evidence was sampled.
    """
    pairs = []
    for lineno, obj in iter_jsonl(stream, source):
        try:
            pair_id, claim, label, evidence = (obj[k] for k in ("id", "claim", "label", "evidence"))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"record lacks field {exc}", line=lineno, source=source) from None
        try:
            fever_label = FeverLabel(label)
        except ValueError:
            raise LabelError(f"line {lineno}: unknown FEVER label {label!r}") from None
        prov = obj.get("nei_retrieval")
        if prov is not None:
            try:
                prov = NeiProvenance(prov)
            except ValueError:
                raise FormatError(
                    f"unknown nei_retrieval {prov!r}", line=lineno, source=source
                ) from None
            if fever_label is not FeverLabel.NEI:
                prov = None
        sentences = _flatten_evidence(evidence, lineno, source)
        if not sentences:
            raise FormatError(f"record {pair_id!r} has no evidence", line=lineno, source=source)
        pairs.append(
            ClaimEvidencePair(
                id=str(pair_id),
                claim=AnnotatedSentence.plain(claim),
                evidence=tuple(AnnotatedSentence.plain(s) for s in sentences),
                label=fever_label,
                nei_provenance=prov,
            )
        )
    return pairs


def read_fnc(
    stances: IO[str], bodies: IO[str], id_prefix: str = "fnc"
) -> list[ClaimEvidencePair]:
    """Join FNC stance rows to article bodies.

    Pair ids are ``{id_prefix}-{row}`` with 0-based stance row numbers. Without a
    sidecar the whole body is a single evidence sentence.
    """
    body_reader = csv.DictReader(bodies)
    _require_columns(body_reader, ("Body ID", "articleBody"), "bodies")
    body_text = {row["Body ID"].strip(): row["articleBody"] for row in body_reader}

    stance_reader = csv.DictReader(stances)
    _require_columns(stance_reader, ("Headline", "Body ID", "Stance"), "stances")
    rows = list(stance_reader)
    missing = {row["Body ID"].strip() for row in rows} - body_text.keys()
    if missing:
        raise MissingBodyError(missing)

    pairs = []
    for i, row in enumerate(rows):
        stance = row["Stance"].strip()
        try:
            label = FncLabel(stance.lower())
        except ValueError:
            raise LabelError(f"stance row {i}: unknown FNC stance {stance!r}") from None
        body = AnnotatedSentence.plain(body_text[row["Body ID"].strip()])
        if not len(body):
            raise FormatError(f"stance row {i}: body {row['Body ID']!r} is empty")
        pairs.append(
            ClaimEvidencePair(
                id=f"{id_prefix}-{i}",
                claim=AnnotatedSentence.plain(row["Headline"]),
                evidence=(body,),
                label=label,
            )
        )
    return pairs


def _require_columns(reader: csv.DictReader, columns: Sequence[str], what: str):
    header = reader.fieldnames or []
    absent = [c for c in columns if c not in header]
    if absent:
        raise FormatError(f"{what} CSV lacks columns {absent}; header is {header}")


def attach_annotations(
    pairs: Iterable[ClaimEvidencePair], tagged: Iterable[ClaimEvidencePair]
) -> list[ClaimEvidencePair]:
    """Replace plain claim/evidence text with sidecar annotations, joined by id.

    The sidecar's sentence boundaries replace the reader's, which is how FNC
    bodies get split into evidence sentences. Labels and provenance are kept
    from the dataset side.
    """
    by_id = {p.id: p for p in tagged}
    out, missing = [], []
    for pair in pairs:
        ann = by_id.get(pair.id)
        if ann is None:
            missing.append(pair.id)
            continue
        out.append(replace(pair, claim=ann.claim, evidence=ann.evidence))
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise FormatError(f"{len(missing)} records have no sidecar annotation: {shown}")
    return out


@dataclass(frozen=True)
class SplitConfig:
    dev_fraction: Optional[float] = None
    train_count: Optional[int] = None
    dev_count: Optional[int] = None
    seed: int = 0
    stratify: bool = False

    def __post_init__(self):
        explicit = self.train_count is not None or self.dev_count is not None
        if explicit == (self.dev_fraction is not None):
            raise ConfigError("give either dev_fraction or explicit train/dev counts")
        if explicit and (self.train_count is None or self.dev_count is None):
            raise ConfigError("explicit split needs both train_count and dev_count")
        if self.dev_fraction is not None and not 0 < self.dev_fraction < 1:
            raise ConfigError(f"dev_fraction must lie in (0, 1), got {self.dev_fraction}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def dev_size(self, total: int) -> int:
        if self.dev_fraction is None:
            if self.train_count + self.dev_count != total:
                raise ConfigError(
                    f"explicit counts {self.train_count}+{self.dev_count} do not sum "
                    f"to {total} records"
                )
            return self.dev_count
        return round_half_up(total * self.dev_fraction)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_train_dev(
    items: Sequence[T],
    config: SplitConfig,
    stratify_key: Optional[Callable[[T], object]] = None,
) -> tuple[list[T], list[T]]:
    """Seeded train/dev partition; both halves keep input order.

    Dev membership is the prefix of a seeded permutation of record indices.
    With ``config.stratify`` the dev quota is apportioned across strata by
    largest remainder and each stratum is permuted separately.
    """
    n = len(items)
    n_dev = config.dev_size(n)
    rng = np.random.default_rng(config.seed)
    if config.stratify:
        if stratify_key is None:
            stratify_key = lambda item: item.label  # noqa: E731
        dev_idx = _stratified_dev(items, n_dev, rng, stratify_key)
    else:
        dev_idx = set(rng.permutation(n)[:n_dev].tolist())
    train = [x for i, x in enumerate(items) if i not in dev_idx]
    dev = [x for i, x in enumerate(items) if i in dev_idx]
    return train, dev


def _stratified_dev(items, n_dev, rng, key) -> set[int]:
    strata: dict[object, list[int]] = {}
    for i, item in enumerate(items):
        strata.setdefault(key(item), []).append(i)
    n = len(items)
    order = sorted(strata, key=lambda k: str(k))
    exact = {k: n_dev * len(strata[k]) / n for k in order} if n else {}
    quota = {k: int(math.floor(v)) for k, v in exact.items()}
    leftover = n_dev - sum(quota.values())
    by_remainder = sorted(order, key=lambda k: (-(exact[k] - quota[k]), str(k)))
    for k in by_remainder[:leftover]:
        quota[k] += 1
    dev: set[int] = set()
    for k in order:
        members = strata[k]
        perm = rng.permutation(len(members))[: quota[k]]
        dev.update(members[j] for j in perm.tolist())
    return dev


@dataclass
class DatasetStats:
    counts: dict[str, int] = field(default_factory=dict)
    total: int = 0

    def as_dict(self) -> dict:
        return {"counts": dict(self.counts), "total": self.total}


def label_stats(pairs: Iterable[ClaimEvidencePair]) -> DatasetStats:
    space = None
    tally: dict = {}
    total = 0
    for pair in pairs:
        if pair.label is None:
            raise LabelError(f"pair {pair.id!r} is unlabeled")
        if space is None:
            space = type(pair.label)
        elif type(pair.label) is not space:
            raise LabelError(
                f"mixed label spaces: {space.__name__} and {type(pair.label).__name__}"
            )
        tally[pair.label] = tally.get(pair.label, 0) + 1
        total += 1
    counts = {} if space is None else {lab.value: tally.get(lab, 0) for lab in space}
    return DatasetStats(counts=counts, total=total)
