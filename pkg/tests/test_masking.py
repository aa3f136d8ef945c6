import json
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import DATA, naive_oa_ner, naive_spans, random_pair

from delexi.annotation import AnnotatedSentence, ClaimEvidencePair, EntityKey, TaggedToken
from delexi.masking import (
    STRATEGY_NAMES,
    MaskStrategy,
    Strategy,
    basic_ner_mask,
    build_tag_map,
    mask_pair,
    ne_delete,
    oa_ner_mask,
    oa_ner_ss_mask,
)
from delexi.tags import MaskTag, TagSyntaxError

GOLDEN = json.loads((DATA / "sq_a380_golden.json").read_text(encoding="utf-8"))


def tok(word, ner="O", pos="NN", ss="O", lemma=None):
    return TaggedToken(word, pos=pos, ner=ner, ss=ss, lemma=lemma)


def people(*words):
    """Sentence where capitalised words are single-token persons."""
    return AnnotatedSentence(
        tuple(tok(w, "B-person" if w[0].isupper() else "O") for w in words)
    )


# -- golden rendering of the Singapore Airlines pair --------------------------


@pytest.mark.parametrize("entry", GOLDEN, ids=lambda e: f"{e['record']}:{e['strategy']}:{e['ss_span_mode']}")
def test_golden(entry, sq_pairs):
    strategy = MaskStrategy(STRATEGY_NAMES[entry["strategy"]], ss_span_mode=entry["ss_span_mode"])
    out = mask_pair(sq_pairs[entry["record"]], strategy).to_json()
    assert out["claim"] == entry["expected"]["claim"]
    assert out["evidence"] == entry["expected"]["evidence"]


@pytest.mark.parametrize("entry", [e for e in GOLDEN if e["reference"]], ids=lambda e: e["strategy"])
def test_golden_differs_from_reference_only_where_documented(entry):
    ref, exp = entry["reference"], entry["expected"]
    diffs = set()
    for side, r, x in [("claim", ref["claim"], exp["claim"])] + [
        ("evidence", a, b) for a, b in zip(ref["evidence"], exp["evidence"])
    ]:
        r, x = r.split(), x.split()
        assert len(r) == len(x)
        diffs.update((side, i, r[i], x[i]) for i in range(len(r)) if r[i] != x[i])
    documented = {(d["side"], d["index"], d["reference"], d["expected"]) for d in entry["deviations"]}
    assert diffs == documented


def test_lexicalized_identity(sq_pair):
    m = mask_pair(sq_pair, MaskStrategy(Strategy.LEXICALIZED))
    assert m.claim_tokens == sq_pair.claim.surfaces
    assert m.tag_inventory == frozenset()
    assert m.id == sq_pair.id and m.label is sq_pair.label


def test_basic_ner_claim(sq_pair):
    m = mask_pair(sq_pair, MaskStrategy(Strategy.BASIC_NER))
    assert " ".join(m.claim_tokens) == "With organization , the miscellaneous entered commercial service ."


def test_tag_map_on_golden_pair(sq_pair):
    tm = build_tag_map(sq_pair, "ner")
    got = {k.normalized_text: v.render() for k, v in tm.assignments.items()}
    assert got == {
        "singapore airlines": "organization-c1",
        "airbus a380": "misc-c1",
        "first": "ordinal-e1",
        "27 april 2005": "date-e1",
        "25 october 2007": "date-e2",
    }


def test_supersense_verb_shared_across_sides(sq_pairs):
    m = oa_ner_ss_mask(sq_pairs["sq-a380-ss"])
    assert "motion-c1" in m.claim_tokens and "motion-c1" in m.evidence_tokens[0]
    assert "commercial" in m.claim_tokens


# -- individual operations ------------------------------------------------------


def test_ne_delete_no_entities():
    s = people("the", "cat", "sat")
    assert ne_delete(s) == ["the", "cat", "sat"]


def test_ne_delete_everything():
    s = AnnotatedSentence((tok("Ada", "B-person"), tok("Lovelace", "I-person")))
    assert ne_delete(s) == []


def test_basic_ner_single_date():
    s = AnnotatedSentence((tok("on", pos="IN"), tok("27", "B-date"), tok("April", "I-date"), tok("2005", "I-date")))
    assert basic_ner_mask(s) == ["on", "date"]


def test_basic_ner_adjacent_spans():
    s = AnnotatedSentence((tok("Ada", "B-person"), tok("London", "B-location")))
    assert basic_ner_mask(s) == ["person", "location"]


def test_basic_ner_no_entities():
    s = people("plain", "words")
    assert basic_ner_mask(s) == ["plain", "words"]


def test_build_tag_map_scan_order():
    p = ClaimEvidencePair("x", people("A", "met", "B"), (people("B", "met", "C"),))
    tm = build_tag_map(p, "ner")
    assert tm.assignments == {
        EntityKey("person", "a"): MaskTag("person", "c", 1),
        EntityKey("person", "b"): MaskTag("person", "c", 2),
        EntityKey("person", "c"): MaskTag("person", "e", 1),
    }
    m = oa_ner_mask(p)
    assert m.claim_tokens == ["person-c1", "met", "person-c2"]
    assert m.evidence_tokens == [["person-c2", "met", "person-e1"]]


def test_build_tag_map_empty():
    empty = AnnotatedSentence(())
    assert build_tag_map(ClaimEvidencePair("x", empty, (empty,)), "ner").assignments == {}


def test_oa_ner_two_orgs_in_claim():
    claim = AnnotatedSentence((tok("Acme", "B-organization"), tok("and"), tok("Initech", "B-organization")))
    m = oa_ner_mask(ClaimEvidencePair("x", claim, (people("nothing"),)))
    assert m.claim_tokens == ["organization-c1", "and", "organization-c2"]


def test_oa_ner_without_entities_is_lexicalized():
    p = ClaimEvidencePair("x", people("no", "names"), (people("here", "either"),))
    assert oa_ner_mask(p).claim_tokens == ["no", "names"]
    assert oa_ner_mask(p).evidence_tokens == [["here", "either"]]


def test_oa_ner_ss_function_words_unchanged():
    s = AnnotatedSentence((tok("of", pos="IN"), tok("the", pos="DT"), tok(",", pos=",")))
    p = ClaimEvidencePair("x", s, (s,))
    assert oa_ner_ss_mask(p).claim_tokens == ["of", "the", ","]


def test_oa_ner_ss_lemma_identity():
    claim = AnnotatedSentence((tok("entered", pos="VBD", ss="B-motion", lemma="enter"),))
    ev = AnnotatedSentence((tok("enters", pos="VBZ", ss="B-motion", lemma="enter"),))
    m = oa_ner_ss_mask(ClaimEvidencePair("x", claim, (ev,)))
    assert m.claim_tokens == ["motion-c1"] and m.evidence_tokens == [["motion-c1"]]


def test_oa_ner_ss_surface_identity_without_lemma():
    claim = AnnotatedSentence((tok("Plane", ss="B-artifact"),))
    ev = AnnotatedSentence((tok("plane", ss="B-artifact"), tok("planes", pos="NNS", ss="B-artifact")))
    m = oa_ner_ss_mask(ClaimEvidencePair("x", claim, (ev,)))
    assert m.evidence_tokens == [["artifact-c1", "artifact-e1"]]


def test_oa_ner_ss_non_content_pos_kept():
    s = AnnotatedSentence((tok("up", pos="RP", ss="B-motion"), tok("ran", pos="VBD", ss="B-motion", lemma="run")))
    m = oa_ner_ss_mask(ClaimEvidencePair("x", s, (s,)))
    assert m.claim_tokens == ["up", "motion-c1"]


def test_oa_ner_ss_custom_content_classes():
    s = AnnotatedSentence((tok("ran", pos="VBD", ss="B-motion"), tok("plane", pos="NN", ss="B-artifact")))
    strategy = MaskStrategy(Strategy.OA_NER_SS, content_pos_classes={"NN"})
    m = mask_pair(ClaimEvidencePair("x", s, (s,)), strategy)
    assert m.claim_tokens == ["ran", "artifact-c1"]


def test_ne_wins_over_overlapping_supersense():
    s = AnnotatedSentence(
        (
            tok("Air", "B-organization", pos="NNP", ss="B-group"),
            tok("France", "I-organization", pos="NNP", ss="I-group"),
            tok("jet", "O", pos="NN", ss="I-group"),
        )
    )
    m = oa_ner_ss_mask(ClaimEvidencePair("x", s, (s,)))
    # the supersense span keeps only its non-NE tail
    assert m.claim_tokens == ["organization-c1", "group-c1"]


def test_token_mode_one_tag_per_token():
    s = AnnotatedSentence((tok("take", pos="VB", ss="B-motion"), tok("off", pos="RP", ss="I-motion")))
    p = ClaimEvidencePair("x", s, (s,))
    assert oa_ner_ss_mask(p, MaskStrategy(Strategy.OA_NER_SS, ss_span_mode="span")).claim_tokens == ["motion-c1"]
    # "off" is not a content word, so token mode leaves it
    assert oa_ner_ss_mask(p, MaskStrategy(Strategy.OA_NER_SS, ss_span_mode="token")).claim_tokens == ["motion-c1", "off"]


def test_mask_tag_grammar():
    assert MaskTag("date", "e", 2).render() == "date-e2"
    assert MaskTag.parse("organization-c1") == MaskTag("organization", "c", 1)
    for bad in ("date-x1", "date-c0", "Date-c1", "date"):
        with pytest.raises(TagSyntaxError):
            MaskTag.parse(bad)
    with pytest.raises(ValueError):
        MaskTag("date", "c", 0)


def test_masked_pair_json(sq_pair):
    out = mask_pair(sq_pair, MaskStrategy(Strategy.OA_NER)).to_json()
    assert out["tags"] == ["date-e1", "date-e2", "misc-c1", "ordinal-e1", "organization-c1"]
    assert out["label"] == "SUPPORTS"


# -- properties over random pairs -------------------------------------------------

seeds = st.integers(0, 2**31)
TAG_RE = re.compile(r"^([a-z0-9]+)-([ce])(\d+)$")
LEAK_FREE = [Strategy.NE_DELETION, Strategy.BASIC_NER, Strategy.OA_NER]


def ne_surfaces(pair):
    words = set()
    for _, sent in pair.sentences():
        for start, end, _ in naive_spans([t.ner for t in sent]):
            words.update(t.surface for t in sent.tokens[start:end])
    return words


def all_tokens(m):
    return m.claim_tokens + [t for sent in m.evidence_tokens for t in sent]


@settings(max_examples=100)
@given(seeds, st.sampled_from(LEAK_FREE))
def test_no_leakage(seed, kind):
    pair = random_pair(random.Random(seed))
    m = mask_pair(pair, MaskStrategy(kind))
    assert not set(all_tokens(m)) & ne_surfaces(pair)


@settings(max_examples=100)
@given(seeds)
def test_oa_ner_matches_brute_force(seed):
    pair = random_pair(random.Random(seed))
    claim, evidence, _, _ = naive_oa_ner(pair)
    m = oa_ner_mask(pair)
    assert m.claim_tokens == claim
    assert m.evidence_tokens == evidence


@settings(max_examples=100)
@given(seeds, st.sampled_from(["span", "token"]))
def test_overlap_indices_dense(seed, mode):
    pair = random_pair(random.Random(seed), with_ss=True)
    m = mask_pair(pair, MaskStrategy(Strategy.OA_NER_SS, ss_span_mode=mode))
    used = {}
    for t in m.tag_inventory:
        cat, side, idx = TAG_RE.match(t).groups()
        used.setdefault((cat, side), set()).add(int(idx))
    for indices in used.values():
        assert indices == set(range(1, len(indices) + 1))
    assert m.tag_inventory == {t for t in all_tokens(m) if TAG_RE.match(t)}


@settings(max_examples=100)
@given(seeds)
def test_overlap_soundness(seed):
    pair = random_pair(random.Random(seed))
    m = oa_ner_mask(pair)
    tag_map = build_tag_map(pair, "ner")
    claim_keys = set()
    ev_keys = set()
    for sent, bucket in [(pair.claim, claim_keys)] + [(s, ev_keys) for s in pair.evidence]:
        for start, end, cat in naive_spans([t.ner for t in sent]):
            text = " ".join(" ".join(t.surface for t in sent.tokens[start:end]).lower().split())
            bucket.add(EntityKey(cat, text))
    ev_out = {t for sent in m.evidence_tokens for t in sent}
    for key, tag in tag_map.assignments.items():
        if tag.side == "c":
            assert (tag.render() in ev_out) == (key in ev_keys)
        else:
            assert key in ev_keys and key not in claim_keys


@settings(max_examples=100)
@given(seeds, st.sampled_from(list(Strategy)))
def test_order_preservation(seed, kind):
    pair = random_pair(random.Random(seed), with_ss=True)
    m = mask_pair(pair, MaskStrategy(kind))
    for sent, out in zip([pair.claim, *pair.evidence], [m.claim_tokens, *m.evidence_tokens]):
        masked = set(m.tag_inventory)
        survivors = [t for t in out if t not in masked]
        # survivors form a subsequence of the input surfaces
        it = iter(sent.surfaces)
        assert all(any(w == s for s in it) for w in survivors)


@settings(max_examples=50)
@given(seeds)
def test_lexicalized_property(seed):
    pair = random_pair(random.Random(seed), with_ss=True)
    m = mask_pair(pair, MaskStrategy(Strategy.LEXICALIZED))
    assert m.claim_tokens == pair.claim.surfaces
    assert m.evidence_tokens == [s.surfaces for s in pair.evidence]
