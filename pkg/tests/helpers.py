"""Synthetic pair generators and brute-force oracles shared by the tests.

The oracles deliberately avoid the package's span decoder and tag map: they
decode BIO with a plain loop and assign tags by quadratic comparison.
"""

import random
from pathlib import Path

from delexi.annotation import AnnotatedSentence, ClaimEvidencePair, FeverLabel, TaggedToken

DATA = Path(__file__).parent / "data"

NE_CATEGORIES = ["person", "location", "organization", "date", "misc"]
SS_CATEGORIES = ["motion", "artifact", "act", "cognition", "stative"]
PLAIN_WORDS = ["with", "the", "a", "of", "and", "met", "saw", "near", "on", ",", "."]
CONTENT_WORDS = [("ran", "VBD"), ("plane", "NN"), ("quickly", "RB"), ("blue", "JJ"), ("visit", "NN")]


def _ne_word(rng):
    # capitalised nonsense words never collide with plain words or tag names
    consonants, vowels = "bdfgklmnprstvz", "aeiou"
    return "".join(rng.choice(consonants) + rng.choice(vowels) for _ in range(3)).capitalize() + "x"


def random_entity_pool(rng, size):
    pool = []
    for _ in range(size):
        n = rng.randint(1, 3)
        pool.append((rng.choice(NE_CATEGORIES), [_ne_word(rng) for _ in range(n)]))
    return pool


def random_sentence(rng, pool, length, with_ss=False):
    tokens = []
    while len(tokens) < length:
        r = rng.random()
        if r < 0.3 and pool:
            category, words = rng.choice(pool)
            case = rng.choice([str, str.lower, str.upper])
            for j, w in enumerate(words):
                tokens.append(
                    TaggedToken(case(w), pos="NNP", ner=("B-" if j == 0 else "I-") + category)
                )
        elif r < 0.5 and with_ss:
            word, pos = rng.choice(CONTENT_WORDS)
            tokens.append(TaggedToken(word, pos=pos, ss="B-" + rng.choice(SS_CATEGORIES), lemma=word))
        else:
            tokens.append(TaggedToken(rng.choice(PLAIN_WORDS), pos="DT"))
    return AnnotatedSentence(tuple(tokens))


def random_pair(rng, pair_id="p", with_ss=False):
    pool = random_entity_pool(rng, rng.randint(0, 5))
    claim = random_sentence(rng, pool, rng.randint(1, 10), with_ss)
    evidence = tuple(
        random_sentence(rng, pool, rng.randint(1, 15), with_ss) for _ in range(rng.randint(1, 3))
    )
    return ClaimEvidencePair(pair_id, claim, evidence, FeverLabel.SUPPORTS)


def random_pairs(seed, n, with_ss=False):
    rng = random.Random(seed)
    return [random_pair(rng, f"p{i}", with_ss) for i in range(n)]


# -- oracles -----------------------------------------------------------------


def naive_spans(labels):
    """[(start, end, category)] from a BIO label list, by plain scanning."""
    spans = []
    for i, lab in enumerate(labels):
        if lab.startswith("B-"):
            spans.append([i, i + 1, lab[2:]])
        elif lab.startswith("I-"):
            spans[-1][1] = i + 1
    return [tuple(s) for s in spans]


def naive_oa_ner(pair):
    """Brute-force OA-NER rendering: returns (claim_tokens, [evidence_tokens])."""
    sentences = [("c", pair.claim)] + [("e", s) for s in pair.evidence]
    mentions = []  # (sentence_idx, start, end, side, category, text)
    for si, (side, sent) in enumerate(sentences):
        for start, end, cat in naive_spans([t.ner for t in sent.tokens]):
            text = " ".join(" ".join(t.surface for t in sent.tokens[start:end]).lower().split())
            mentions.append((si, start, end, side, cat, text))
    tags = []
    for i, m in enumerate(mentions):
        earlier = [j for j in range(i) if mentions[j][4:] == m[4:]]
        if earlier:
            tags.append(tags[earlier[0]])
            continue
        firsts = [
            j
            for j in range(i)
            if mentions[j][4] == m[4]
            and mentions[j][3] == m[3]
            and not any(mentions[q][4:] == mentions[j][4:] for q in range(j))
        ]
        tags.append(f"{m[4]}-{m[3]}{len(firsts) + 1}")
    rendered = []
    for si, (_, sent) in enumerate(sentences):
        out, i = [], 0
        while i < len(sent.tokens):
            hit = [k for k, m in enumerate(mentions) if m[0] == si and m[1] == i]
            if hit:
                out.append(tags[hit[0]])
                i = mentions[hit[0]][2]
            else:
                out.append(sent.tokens[i].surface)
                i += 1
        rendered.append(out)
    return rendered[0], rendered[1:], mentions, tags


def naive_audit(records, sidecar, ood_model, id_model, k=3):
    """Nested-loop reimplementation of the attention audit.

    Returns (selected ids, {id: {(word, pos)}}, bucket counts, ne noun fraction).
    """

    def totals(rec):
        words = []
        for _, s, _ in rec["weights"]:
            if s.lower() not in words:
                words.append(s.lower())
        out = {}
        for w in words:
            total = 0.0
            for _, s, x in rec["weights"]:
                if s.lower() == w:
                    total += x
            out[w] = total
        return out

    def top(tot):
        remaining = dict(tot)
        picked = []
        while remaining and len(picked) < k:
            best = None
            for w, x in remaining.items():
                if best is None or x > remaining[best] or (x == remaining[best] and w < best):
                    best = w
            picked.append(best)
            del remaining[best]
        return picked

    def bucket(pos):
        for prefix, name in (("NN", "noun"), ("VB", "verb"), ("JJ", "adjective"), ("RB", "adverb")):
            if pos[:2] == prefix:
                return name
        return "UNKNOWN" if pos == "UNKNOWN" else "other"

    ids = sorted({r["instance_id"] for r in records})
    selected, divergent, counts = [], {}, {}
    nouns = inside = 0
    for iid in ids:
        ood = [r for r in records if r["instance_id"] == iid and r["model_id"] == ood_model][0]
        ind = [r for r in records if r["instance_id"] == iid and r["model_id"] == id_model][0]
        if ood["predicted"] == ood["gold"] or ind["predicted"] != ind["gold"]:
            continue
        selected.append(iid)
        id_top = top(totals(ind))
        tokens = []
        for sent in sidecar[iid]["evidence"]:
            spans = naive_spans(sent["ner"])
            for j, w in enumerate(sent["tokens"]):
                in_ne = any(a <= j < b for a, b, _ in spans)
                tokens.append((w, sent["pos"][j], in_ne))
        found = set()
        for w in top(totals(ood)):
            if w in id_top:
                continue
            hit = [t for t in tokens if t[0].lower() == w]
            pos = hit[0][1] if hit else "UNKNOWN"
            found.add((w, pos))
            b = bucket(pos)
            counts[b] = counts.get(b, 0) + 1
            if b == "noun":
                nouns += 1
                inside += bool(hit and hit[0][2])
        divergent[iid] = found
    return selected, divergent, counts, (inside / nouns if nouns else 0.0)
