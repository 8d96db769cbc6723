import json

import numpy as np
import pytest

from pglee.corpus import EmbeddingTable, Lexicon, Sentence, tokenize

GOLDEN_TEXT = (
    "The threat posed by the Iraqi dictator justifies a war, "
    "which is sure to kill thousands of innocent children and women."
)
GOLDEN_PROMPT = "threat posed Iraqi dictator justifies war kill children women."
GOLDEN_Y = "Event war has arguments: Iraqi dictator; Event kill has arguments: children, women."

S2_TEXT = (
    "A furious Justice party member, Fehmi Husrev Kutlu, rushed toward Ozkan, "
    "bumping into him and sending his eyeglasses flying, Anatolia reported."
)


@pytest.fixture
def demo_lexicon():
    return Lexicon(
        verbs=frozenset({"war", "kill", "rushed"}),
        nouns=frozenset({"threat", "posed", "justifies", "children", "women"}),
        entity_gazetteer=frozenset({"iraqi dictator", "children", "women",
                                    "fehmi husrev kutlu", "ozkan"}),
    )


@pytest.fixture
def golden_sentence():
    return Sentence("t1", GOLDEN_TEXT, tokenize(GOLDEN_TEXT))


@pytest.fixture
def s2_sentence():
    return Sentence("s2", S2_TEXT, tokenize(S2_TEXT))


@pytest.fixture
def small_table():
    rng = np.random.default_rng(7)
    words = ["war", "kill", "children", "women", "iraqi", "dictator", "threat", "posed"]
    entries = {w: rng.standard_normal(6) for w in words}
    return EmbeddingTable(6, entries, oov_seed=11)


def write_corpus(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")


def write_embeddings(path, entries, header=False):
    dim = len(next(iter(entries.values())))
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(entries)} {dim}\n")
        for word, vec in entries.items():
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def write_lexicon(tmp_path, verbs, nouns, gazetteer):
    paths = {}
    for name, items in (("verbs", verbs), ("nouns", nouns), ("gazetteer", gazetteer)):
        p = tmp_path / f"{name}.txt"
        p.write_text("".join(x + "\n" for x in items), encoding="utf-8")
        paths[name] = str(p)
    return paths
