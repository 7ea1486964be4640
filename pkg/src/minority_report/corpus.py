"""Corpus ingestion: tokenization, vocabulary building, count vectors.

Documents arrive as JSONL ({"id": ..., "text": ..., "meta": {...}} per line),
are tokenized with a small rule-based suffix stripper, and become sparse
count vectors over a frequency-ranked vocabulary.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import InputError

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Vowels that block stripping a full "es" suffix ("refugees" keeps its stem
# vowel and only drops the plural "s"; "boxes" drops "es").
_ES_GUARD = "aeo"


def _strip_suffixes(token: str) -> str:
    # Plural endings first; a single rule fires per block.
    if token.endswith("ies"):
        token = token[:-3] + "y"
    elif token.endswith("sses"):
        token = token[:-2]
    elif token.endswith("es") and len(token) >= 5 and token[-3] not in _ES_GUARD:
        token = token[:-2]
    elif token.endswith("s") and not token.endswith("ss") and len(token) >= 4:
        token = token[:-1]
    # Participle endings on the result.
    if token.endswith("ing") and len(token) >= 6:
        token = token[:-3]
    elif token.endswith("ed") and len(token) >= 5:
        token = token[:-2]
    return token


def tokenize_lemmatize(text: str, stop_words: frozenset[str] | None = None) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, strip common suffixes.

    Stop words (if given) are matched against the raw lowercase token before
    suffix stripping. Tokens shorter than two characters are dropped.
    """
    out = []
    for raw in _TOKEN_RE.findall(text.lower()):
        if stop_words is not None and raw in stop_words:
            continue
        token = _strip_suffixes(raw)
        if len(token) >= 2:
            out.append(token)
    return out


@dataclass(frozen=True)
class Document:
    """One unit of analysis: an id, raw text, and optional string metadata."""

    id: str
    text: str
    meta: dict[str, str] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")


@dataclass(frozen=True)
class Vocabulary:
    """Terms ranked by descending corpus frequency, ties lexicographic."""

    terms: tuple[str, ...]
    index: dict[str, int] = field(compare=False)

    @classmethod
    def from_terms(cls, terms) -> "Vocabulary":
        terms = tuple(terms)
        if len(set(terms)) != len(terms):
            raise ValueError("vocabulary terms contain duplicates")
        return cls(terms=terms, index={t: i for i, t in enumerate(terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass(frozen=True)
class CountVector:
    """Sparse word counts for one document; length_d is the total count D."""

    doc_id: str
    counts: dict[int, int]
    length_d: int

    def __post_init__(self):
        if any(c <= 0 for c in self.counts.values()):
            raise ValueError("stored counts must be positive")
        if sum(self.counts.values()) != self.length_d:
            raise ValueError("length_d does not equal the sum of counts")

    def to_dense(self, k: int) -> np.ndarray:
        dense = np.zeros(k, dtype=np.float64)
        for pos, cnt in self.counts.items():
            if not 0 <= pos < k:
                raise ValueError(f"count position {pos} outside vocabulary of size {k}")
            dense[pos] = cnt
        return dense


def build_vocabulary(
    docs,
    max_k: int,
    stop_words: frozenset[str] | None = None,
) -> Vocabulary:
    """Top-`max_k` tokens by total corpus count; ties lexicographic ascending."""
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    totals: Counter[str] = Counter()
    for doc in docs:
        totals.update(tokenize_lemmatize(doc.text, stop_words))
    ranked = sorted(totals.items(), key=lambda item: (-item[1], item[0]))
    return Vocabulary.from_terms(term for term, _ in ranked[:max_k])


def vectorize(
    doc: Document,
    vocab: Vocabulary,
    stop_words: frozenset[str] | None = None,
) -> CountVector:
    """Count in-vocabulary tokens; out-of-vocabulary tokens are dropped."""
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    counts: dict[int, int] = {}
    total = 0
    for token in tokenize_lemmatize(doc.text, stop_words):
        pos = vocab.index.get(token)
        if pos is not None:
            counts[pos] = counts.get(pos, 0) + 1
            total += 1
    return CountVector(doc_id=doc.id, counts=counts, length_d=total)


def counts_to_matrix(vectors, k: int) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack count vectors into (V, D, doc_ids) with V of shape (N, k)."""
    vectors = list(vectors)
    v = np.zeros((len(vectors), k), dtype=np.float64)
    for i, cv in enumerate(vectors):
        for pos, cnt in cv.counts.items():
            if not 0 <= pos < k:
                raise ValueError(f"count position {pos} outside vocabulary of size {k}")
            v[i, pos] = cnt
    d = v.sum(axis=1)
    return v, d, [cv.doc_id for cv in vectors]


def read_jsonl(path) -> list[Document]:
    """Load a JSONL corpus, enforcing non-empty unique ids."""
    docs: list[Document] = []
    seen: set[str] = set()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                doc_id = obj.get("id")
                if not isinstance(doc_id, str) or not doc_id:
                    raise InputError(f"{path}:{lineno}: missing or empty 'id'")
                if doc_id in seen:
                    raise InputError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
                seen.add(doc_id)
                text = obj.get("text", "")
                if not isinstance(text, str):
                    raise InputError(f"{path}:{lineno}: 'text' must be a string")
                meta = obj.get("meta")
                if meta is not None and not isinstance(meta, dict):
                    raise InputError(f"{path}:{lineno}: 'meta' must be an object")
                docs.append(Document(id=doc_id, text=text, meta=meta))
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc
    return docs


def load_stop_words(path) -> frozenset[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return frozenset(w.strip().lower() for w in fh if w.strip())
    except OSError as exc:
        raise InputError(f"cannot read stop-word file {path}: {exc}") from exc


def save_vocabulary(vocab: Vocabulary, path) -> None:
    """Persist terms as a JSON array in rank order."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(list(vocab.terms), fh, ensure_ascii=False, indent=0)
        fh.write("\n")


def load_vocabulary(path) -> Vocabulary:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            terms = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load vocabulary {path}: {exc}") from exc
    if not isinstance(terms, list) or not all(isinstance(t, str) for t in terms):
        raise InputError(f"vocabulary {path} is not a JSON array of strings")
    return Vocabulary.from_terms(terms)


class WordCountVectorizer(BaseEstimator, TransformerMixin):
    """Count vectorizer over the suffix-stripped token stream.

    fit() ranks terms by corpus frequency and keeps the top `max_terms`;
    transform() returns a dense (n_docs, n_terms) count matrix. Inputs may be
    raw strings or Document objects.
    """

    def __init__(self, max_terms: int = 1000, stop_words: frozenset[str] | None = None):
        self.max_terms = max_terms
        self.stop_words = stop_words

    @staticmethod
    def _as_documents(raw) -> list[Document]:
        docs = []
        for i, item in enumerate(raw):
            if isinstance(item, Document):
                docs.append(item)
            else:
                docs.append(Document(id=str(i), text=str(item)))
        return docs

    def fit(self, raw_documents, y=None):
        docs = self._as_documents(raw_documents)
        self.vocabulary_ = build_vocabulary(docs, self.max_terms, self.stop_words)
        return self

    def transform(self, raw_documents) -> np.ndarray:
        from .validation import check_fitted

        check_fitted(self, "vocabulary_")
        docs = self._as_documents(raw_documents)
        vectors = [vectorize(d, self.vocabulary_, self.stop_words) for d in docs]
        v, _, _ = counts_to_matrix(vectors, len(self.vocabulary_))
        return v

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        from .validation import check_fitted

        check_fitted(self, "vocabulary_")
        return np.asarray(self.vocabulary_.terms, dtype=object)
