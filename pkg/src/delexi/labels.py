"""Cross-domain relabeling between the FEVER and FNC label spaces."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import AbstractSet, Sequence

import numpy as np

from delexi.annotation import ClaimEvidencePair, FeverLabel, FncLabel, NeiProvenance
from delexi.errors import ConfigError, LabelError
from delexi.ingestion import round_half_up

DEFAULT_DISCUSS_FRACTION = 0.1686

_FEVER_TO_FNC = {FeverLabel.SUPPORTS: FncLabel.AGREE, FeverLabel.REFUTES: FncLabel.DISAGREE}
_FNC_TO_FEVER = {
    FncLabel.AGREE: FeverLabel.SUPPORTS,
    FncLabel.DISAGREE: FeverLabel.REFUTES,
    FncLabel.DISCUSS: FeverLabel.NEI,
    FncLabel.UNRELATED: FeverLabel.NEI,
}


class MappingMode(str, enum.Enum):
    PROVENANCE = "provenance"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class MappingConfig:
    discuss_fraction: float = DEFAULT_DISCUSS_FRACTION
    seed: int = 0
    mode: MappingMode = MappingMode.PROVENANCE

    def __post_init__(self):
        if not 0.0 <= self.discuss_fraction <= 1.0:
            raise ConfigError(f"discuss_fraction must lie in [0, 1], got {self.discuss_fraction}")
        object.__setattr__(self, "mode", MappingMode(self.mode))


def fever_to_fnc(
    pair: ClaimEvidencePair, config: MappingConfig, discuss: bool = False
) -> ClaimEvidencePair:
    """Relabel one FEVER pair into the FNC space.

    In sampled mode the caller decides the NEI subtype through ``discuss``
    (see :func:`select_discuss`); in provenance mode it follows
    ``pair.nei_provenance`` and ``discuss`` is ignored.
    """
    if not isinstance(pair.label, FeverLabel):
        raise LabelError(f"pair {pair.id!r} is not in the FEVER label space: {pair.label!r}")
    if pair.label is not FeverLabel.NEI:
        return replace(pair, label=_FEVER_TO_FNC[pair.label], nei_provenance=None)
    if config.mode is MappingMode.PROVENANCE:
        if pair.nei_provenance is None:
            raise LabelError(f"pair {pair.id!r}: NEI record has no retrieval provenance")
        discuss = pair.nei_provenance is NeiProvenance.NEAREST_PAGE
    label = FncLabel.DISCUSS if discuss else FncLabel.UNRELATED
    return replace(pair, label=label, nei_provenance=None)


def select_discuss(pairs: Sequence[ClaimEvidencePair], config: MappingConfig) -> set[int]:
    """Indices of the NEI pairs that become ``discuss`` in sampled mode.

    Takes the first ``round(fraction * n_nei)`` NEI records of a seeded
    permutation, so the realized count is exact rather than in expectation.
    """
    nei = [i for i, p in enumerate(pairs) if p.label is FeverLabel.NEI]
    k = round_half_up(config.discuss_fraction * len(nei))
    perm = np.random.default_rng(config.seed).permutation(len(nei))
    return {nei[j] for j in perm[:k].tolist()}


def map_fever_to_fnc(
    pairs: Sequence[ClaimEvidencePair], config: MappingConfig
) -> list[ClaimEvidencePair]:
    chosen: AbstractSet[int] = (
        select_discuss(pairs, config) if config.mode is MappingMode.SAMPLED else frozenset()
    )
    return [fever_to_fnc(p, config, discuss=i in chosen) for i, p in enumerate(pairs)]


def fnc_to_fever(pair: ClaimEvidencePair) -> ClaimEvidencePair:
    if not isinstance(pair.label, FncLabel):
        raise LabelError(f"pair {pair.id!r} is not in the FNC label space: {pair.label!r}")
    return replace(pair, label=_FNC_TO_FEVER[pair.label])


def map_fnc_to_fever(pairs: Sequence[ClaimEvidencePair]) -> list[ClaimEvidencePair]:
    return [fnc_to_fever(p) for p in pairs]
