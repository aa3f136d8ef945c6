"""GloVe text I/O and pseudo-pretrained vectors for mask tags.

Each tag vector is its root word's vector plus independent Gaussian noise per
dimension. The noise stream is keyed by ``(seed, tag)`` through a
counter-based generator, so a tag's vector never depends on which other tags
were synthesized alongside it.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional

import numpy as np

from delexi.errors import ConfigError, FormatError, MissingRootError
from delexi.tags import root_word_of

log = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("embedding dim must be positive")
        for token, vec in self.entries.items():
            self._check(token, vec)

    def _check(self, token, vec):
        if vec.shape != (self.dim,):
            raise ValueError(f"vector for {token!r} has shape {vec.shape}, expected ({self.dim},)")

    def __len__(self):
        return len(self.entries)

    def __contains__(self, token):
        return token in self.entries

    def __getitem__(self, token) -> np.ndarray:
        return self.entries[token]

    def add(self, token: str, vec) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        self._check(token, vec)
        self.entries[token] = vec


@dataclass(frozen=True)
class NoiseConfig:
    mean: float = 0.0
    variance: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigError(f"variance must be non-negative, got {self.variance}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


def read_glove(stream: IO[str], source: Optional[str] = None) -> EmbeddingTable:
    """Parse GloVe text format; a word2vec ``count dim`` header line fixes the dim."""
    dim = None
    entries: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(stream, start=1):
        parts = line.rstrip("\n").rstrip(" ").split(" ")
        if len(parts) < 2:
            if not line.strip():
                continue
            raise FormatError("line has no vector components", line=lineno, source=source)
        if dim is None:
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            dim = len(parts) - 1
        if len(parts) - 1 < dim:
            raise FormatError(
                f"expected {dim} components, got {len(parts) - 1}", line=lineno, source=source
            )
        # tokens may themselves contain spaces; the vector is always the tail
        token = " ".join(parts[: len(parts) - dim])
        try:
            vec = np.array([float(x) for x in parts[len(parts) - dim :]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(str(exc), line=lineno, source=source) from None
        if token in entries:
            raise FormatError(f"duplicate token {token!r}", line=lineno, source=source)
        entries[token] = vec
    if dim is None:
        raise FormatError("embedding file is empty", source=source)
    return EmbeddingTable(dim, entries)


def format_vector(vec: Iterable[float]) -> str:
    return " ".join(f"{x:.6f}" for x in vec)


def write_glove(table: EmbeddingTable, stream: IO[str]) -> None:
    for token, vec in table.entries.items():
        stream.write(f"{token} {format_vector(vec)}\n")


def noise_generator(seed: int, tag: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}\x00{tag}".encode("utf-8")).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest[:16], "little")))


def tag_noise(tag: str, dim: int, config: NoiseConfig) -> np.ndarray:
    rng = noise_generator(config.seed, tag)
    return rng.normal(config.mean, math.sqrt(config.variance), size=dim)


def synth_embeddings(
    tags: Iterable[str],
    base: EmbeddingTable,
    config: NoiseConfig = NoiseConfig(),
    skip_missing: bool = False,
    aliases: Optional[Mapping[str, str]] = None,
) -> EmbeddingTable:
    """Vectors for ``tags`` close to their root words, in sorted tag order."""
    unique = sorted(set(tags))
    roots = {tag: root_word_of(tag, aliases) for tag in unique}
    missing = {root for root in roots.values() if root not in base}
    if missing:
        if not skip_missing:
            raise MissingRootError(missing)
        log.warning("skipping tags whose root words are missing: %s", ", ".join(sorted(missing)))
    out = EmbeddingTable(base.dim)
    for tag in unique:
        root = roots[tag]
        if root in missing:
            continue
        out.add(tag, base[root] + tag_noise(tag, base.dim, config))
    return out
