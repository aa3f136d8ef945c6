"""Rendered mask-tag vocabulary: ``category-{c|e}index`` and bare categories."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Optional

from delexi.errors import DelexiError

_TAG_RE = re.compile(r"^([a-z0-9]+)-([ce])([1-9][0-9]*)$")
_BARE_RE = re.compile(r"^[a-z0-9]+$")

CLAIM = "c"
EVIDENCE = "e"


class TagSyntaxError(DelexiError):
    pass


@dataclass(frozen=True, order=True)
class MaskTag:
    category: str
    side: str
    index: int

    def __post_init__(self):
        if self.side not in (CLAIM, EVIDENCE):
            raise ValueError(f"side must be 'c' or 'e', got {self.side!r}")
        if self.index < 1:
            raise ValueError("tag index starts at 1")

    def render(self) -> str:
        return f"{self.category}-{self.side}{self.index}"

    __str__ = render

    @classmethod
    def parse(cls, text: str) -> "MaskTag":
        m = _TAG_RE.match(text)
        if not m:
            raise TagSyntaxError(f"not a mask tag: {text!r}")
        return cls(m.group(1), m.group(2), int(m.group(3)))


@lru_cache(maxsize=None)
def default_aliases() -> Mapping[str, str]:
    with resources.files("delexi").joinpath("data/category_aliases.json").open(encoding="utf-8") as fh:
        return dict(json.load(fh))


def load_aliases(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return dict(json.load(fh))


def tag_category(tag: str) -> str:
    """Category component of a rendered tag or bare category."""
    if _BARE_RE.match(tag):
        return tag
    m = _TAG_RE.match(tag)
    if not m:
        raise TagSyntaxError(f"unparseable tag {tag!r}")
    return m.group(1)


def root_word_of(tag: str, aliases: Optional[Mapping[str, str]] = None) -> str:
    """Word whose embedding seeds a tag, e.g. ``misc-c1`` -> ``miscellaneous``."""
    category = tag_category(tag)
    table = default_aliases() if aliases is None else aliases
    return table.get(category, category)
