"""Corpus ingestion: documents, tokenization, lexicon and word embeddings."""

import hashlib
import json
import string
from dataclasses import dataclass, field

import numpy as np

_PUNCT = set(string.punctuation)


class CorpusError(ValueError):
    """Malformed corpus, lexicon or embedding input."""


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class GoldEvent:
    trigger_span: tuple[int, int]
    event_type: str
    arguments: tuple[tuple[tuple[int, int], str], ...] = ()


@dataclass
class Sentence:
    sent_id: str
    text: str
    tokens: list[Token] = field(default_factory=list)
    gold_events: list[GoldEvent] | None = None


@dataclass
class Document:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)


@dataclass(frozen=True)
class Lexicon:
    verbs: frozenset[str]
    nouns: frozenset[str]
    entity_gazetteer: frozenset[str]


class EmbeddingTable:
    """Static word vectors with deterministic unit-norm OOV fallback."""

    def __init__(self, dimension: int, entries: dict[str, np.ndarray], oov_seed: int = 0):
        self.dimension = dimension
        self.entries = entries
        self.oov_seed = oov_seed
        for word, vec in entries.items():
            if vec.shape != (dimension,):
                raise CorpusError(f"embedding for {word!r} has length {vec.shape}, expected {dimension}")

    def lookup(self, token_text: str) -> np.ndarray:
        vec = self.entries.get(token_text)
        if vec is None:
            vec = self.entries.get(token_text.lower())
        if vec is not None:
            return vec
        return self._oov_vector(token_text)

    def _oov_vector(self, token_text: str) -> np.ndarray:
        digest = hashlib.sha256(
            self.oov_seed.to_bytes(8, "little", signed=False) + token_text.lower().encode("utf-8")
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        vec = rng.standard_normal(self.dimension)
        return vec / np.linalg.norm(vec)


def tokenize(text: str) -> list[Token]:
    """Whitespace split, with leading/trailing ASCII punctuation peeled off
    into single-character tokens. Offsets are exact into ``text``."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        lo, hi = i, j
        # peel leading punctuation
        while lo < hi and text[lo] in _PUNCT and hi - lo > 1:
            tokens.append(Token(text[lo], lo, lo + 1))
            lo += 1
        # peel trailing punctuation (collect, then emit in order)
        trailing: list[Token] = []
        while hi > lo + 1 and text[hi - 1] in _PUNCT:
            trailing.append(Token(text[hi - 1], hi - 1, hi))
            hi -= 1
        tokens.append(Token(text[lo:hi], lo, hi))
        tokens.extend(reversed(trailing))
        i = j
    return tokens


def embed(token_text: str, table: EmbeddingTable) -> np.ndarray:
    """Vector for one token; OOV tokens get a seeded unit-norm vector."""
    return table.lookup(token_text)


def phrase_embedding(text: str, table: EmbeddingTable) -> np.ndarray:
    """Mean of token vectors for a (possibly multi-token) mention."""
    toks = tokenize(text)
    if not toks:
        return np.zeros(table.dimension)
    vecs = [embed(t.text, table) for t in toks]
    return np.mean(vecs, axis=0)


def _check_span(span, text: str, sent_id: str, what: str) -> tuple[int, int]:
    if not (isinstance(span, (list, tuple)) and len(span) == 2):
        raise CorpusError(f"sentence {sent_id}: {what} span {span!r} is not a pair")
    start, end = int(span[0]), int(span[1])
    if not (0 <= start < end <= len(text)):
        raise CorpusError(f"sentence {sent_id}: {what} span [{start}, {end}) outside text of length {len(text)}")
    return start, end


def load_corpus(path) -> list[Document]:
    """Read a JSON-Lines corpus; one document per line."""
    docs: list[Document] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            doc_id = obj.get("doc_id")
            if not doc_id:
                raise CorpusError(f"line {lineno}: missing doc_id")
            if doc_id in seen_ids:
                raise CorpusError(f"line {lineno}: duplicate doc_id {doc_id!r}")
            seen_ids.add(doc_id)
            sentences = []
            for sent_obj in obj.get("sentences", []):
                sent_id = sent_obj.get("sent_id", "")
                text = sent_obj.get("text", "")
                gold = None
                if "gold_events" in sent_obj:
                    gold = []
                    for ev in sent_obj["gold_events"]:
                        trig = _check_span(ev["trigger"], text, sent_id, "trigger")
                        args = tuple(
                            (_check_span(span, text, sent_id, "argument"), str(role))
                            for span, role in ev.get("args", [])
                        )
                        for (_, role) in args:
                            if not role:
                                raise CorpusError(f"sentence {sent_id}: empty argument role")
                        gold.append(GoldEvent(trig, str(ev["type"]), args))
                sentences.append(Sentence(sent_id, text, tokenize(text), gold))
            docs.append(Document(doc_id, sentences))
    return docs


def load_lexicon(verbs_path, nouns_path, gazetteer_path) -> Lexicon:
    """Three plain-text word lists, one lowercase entry per line."""

    def read(path):
        with open(path, encoding="utf-8") as fh:
            return frozenset(line.strip().lower() for line in fh if line.strip())

    return Lexicon(read(verbs_path), read(nouns_path), read(gazetteer_path))


def load_embeddings(path, oov_seed: int = 0) -> EmbeddingTable:
    """Text embeddings: ``token v1 v2 ... vd`` per line; an optional
    ``<count> <dim>`` header line is skipped."""
    entries: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header line
                except ValueError:
                    pass
            if len(parts) < 2:
                continue
            word = parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:] if x], dtype=np.float64)
            except ValueError as exc:
                raise CorpusError(f"line {lineno}: bad embedding value") from exc
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise CorpusError(f"line {lineno}: dimension {vec.shape[0]} != {dim}")
            entries[word] = vec
    if dim is None:
        raise CorpusError("embedding file contains no vectors")
    return EmbeddingTable(dim, entries, oov_seed)
