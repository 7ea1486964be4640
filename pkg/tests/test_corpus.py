"""Tokenization, vocabulary ranking, count vectors, and JSONL ingestion."""

import json

import numpy as np
import pytest

import reference
from minority_report.corpus import (
    CountVector,
    Document,
    Vocabulary,
    WordCountVectorizer,
    build_vocabulary,
    counts_to_matrix,
    load_stop_words,
    load_vocabulary,
    read_jsonl,
    save_vocabulary,
    tokenize_lemmatize,
    vectorize,
)
from minority_report.errors import InputError


def doc(text: str, doc_id: str = "d0") -> Document:
    return Document(id=doc_id, text=text)


# --- tokenizer ----------------------------------------------------------------


def test_tokenize_sentence_with_plurals_and_participle():
    assert tokenize_lemmatize("Refugees crossed borders.") == ["refugee", "cross", "border"]


def test_tokenize_empty_text():
    assert tokenize_lemmatize("") == []


def test_tokenize_ies_rule():
    assert tokenize_lemmatize("Policies, policies!") == ["policy", "policy"]


def test_tokenize_sses_rule():
    assert tokenize_lemmatize("classes class") == ["class", "class"]


def test_tokenize_es_rule_consonant_stem():
    assert tokenize_lemmatize("boxes taxes") == ["box", "tax"]


def test_tokenize_plural_then_participle():
    # "crossings" loses the plural s, then the participle ing.
    assert tokenize_lemmatize("crossings") == ["cross"]


def test_tokenize_participles():
    assert tokenize_lemmatize("walking wanted") == ["walk", "want"]


def test_tokenize_short_suffix_guards():
    # Too short for stripping: "es"/"s"/"ing"/"ed" rules have length floors
    # so stems keep at least three characters.
    assert tokenize_lemmatize("yes gas sing bed") == ["yes", "gas", "sing", "bed"]


def test_tokenize_drops_single_characters():
    assert tokenize_lemmatize("a b ab") == ["ab"]


def test_tokenize_lowercases_and_splits_on_punctuation():
    assert tokenize_lemmatize("Hello,world;FOO-bar") == ["hello", "world", "foo", "bar"]


def test_tokenize_keeps_numerals():
    assert tokenize_lemmatize("2024 w017") == ["2024", "w017"]


def test_tokenize_stop_words_match_raw_form():
    stop = frozenset({"crossed"})
    assert tokenize_lemmatize("Refugees crossed borders.", stop) == ["refugee", "border"]
    # Stop words are compared before suffix stripping, so the stripped form
    # does not match.
    assert tokenize_lemmatize("Refugees crossed borders.", frozenset({"cross"})) == [
        "refugee",
        "cross",
        "border",
    ]


def test_tokenize_order_insensitive_multiset():
    a = sorted(tokenize_lemmatize("boxes walked refugees"))
    b = sorted(tokenize_lemmatize("refugees boxes walked"))
    assert a == b


# --- vocabulary ---------------------------------------------------------------


def test_build_vocabulary_ranking_and_tie_rule():
    docs = [doc("aa bb bb", "d0"), doc("bb cc", "d1")]
    vocab = build_vocabulary(docs, 2)
    assert list(vocab.terms) == ["bb", "aa"]  # bb:3; tie aa vs cc broken by aa < cc


def test_build_vocabulary_fewer_terms_than_cap():
    vocab = build_vocabulary([doc("aa")], 5)
    assert list(vocab.terms) == ["aa"]


def test_build_vocabulary_empty_corpus():
    assert len(build_vocabulary([], 10)) == 0


def test_build_vocabulary_rejects_bad_cap():
    with pytest.raises(ValueError):
        build_vocabulary([doc("aa")], 0)


def test_build_vocabulary_deterministic():
    docs = [doc(f"t{i % 7:02d} t{i % 3:02d}", f"d{i}") for i in range(40)]
    v1 = build_vocabulary(docs, 5)
    v2 = build_vocabulary(docs, 5)
    assert v1.terms == v2.terms


def test_fixture_vocabulary_matches_independent_counter(fixture_corpus_path):
    docs = read_jsonl(fixture_corpus_path)
    vocab = build_vocabulary(docs, 50)
    token_lists = [d.text.lower().split() for d in docs]
    expected = reference.top_terms_by_count(token_lists, 50)
    assert list(vocab.terms) == expected
    assert len(vocab) == 50


def test_vocabulary_index_inverse():
    vocab = Vocabulary.from_terms(["bb", "aa", "cc"])
    assert all(vocab.index[t] == i for i, t in enumerate(vocab.terms))
    assert "aa" in vocab and "zz" not in vocab


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValueError):
        Vocabulary.from_terms(["aa", "aa"])


# --- vectorize -----------------------------------------------------------------


def test_vectorize_counts_and_oov_drop():
    vocab = Vocabulary.from_terms(["bb", "aa"])
    cv = vectorize(doc("bb bb aa zz"), vocab)
    assert cv.counts == {0: 2, 1: 1}
    assert cv.length_d == 3


def test_vectorize_empty_text():
    vocab = Vocabulary.from_terms(["bb"])
    cv = vectorize(doc(""), vocab)
    assert cv.counts == {}
    assert cv.length_d == 0


def test_vectorize_rejects_empty_vocabulary():
    with pytest.raises(ValueError):
        vectorize(doc("aa"), Vocabulary.from_terms([]))


def test_vectorize_order_insensitive():
    vocab = Vocabulary.from_terms(["aa", "bb", "cc"])
    cv1 = vectorize(doc("aa bb cc aa"), vocab)
    cv2 = vectorize(doc("cc aa aa bb"), vocab)
    assert cv1.counts == cv2.counts and cv1.length_d == cv2.length_d


def test_vectorize_fixture_doc_matches_counter(fixture_corpus_path):
    docs = read_jsonl(fixture_corpus_path)
    vocab = build_vocabulary(docs, 100)
    target = docs[7]
    cv = vectorize(target, vocab)
    naive = {}
    for tok in target.text.lower().split():
        if tok in vocab.index:
            naive[vocab.index[tok]] = naive.get(vocab.index[tok], 0) + 1
    assert cv.counts == naive
    assert cv.length_d == sum(naive.values())


def test_count_vector_invariants():
    with pytest.raises(ValueError):
        CountVector(doc_id="d", counts={0: 0}, length_d=0)
    with pytest.raises(ValueError):
        CountVector(doc_id="d", counts={0: 2}, length_d=3)


def test_count_vector_to_dense_bounds():
    cv = CountVector(doc_id="d", counts={1: 2}, length_d=2)
    dense = cv.to_dense(3)
    assert dense.tolist() == [0.0, 2.0, 0.0]
    with pytest.raises(ValueError):
        cv.to_dense(1)


def test_counts_to_matrix_shapes():
    vocab = Vocabulary.from_terms(["aa", "bb"])
    vecs = [vectorize(doc("aa bb bb", "x"), vocab), vectorize(doc("", "y"), vocab)]
    v, d, ids = counts_to_matrix(vecs, 2)
    assert v.shape == (2, 2)
    assert v[0].tolist() == [1.0, 2.0]
    assert d.tolist() == [3.0, 0.0]
    assert ids == ["x", "y"]


# --- JSONL ingestion -------------------------------------------------------------


def test_read_jsonl_roundtrip(tmp_path):
    path = tmp_path / "c.jsonl"
    rows = [
        {"id": "a", "text": "aa bb", "meta": {"src": "unit"}},
        {"id": "b", "text": ""},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    docs = read_jsonl(path)
    assert [d.id for d in docs] == ["a", "b"]
    assert docs[0].meta == {"src": "unit"}
    assert docs[1].meta is None


def test_read_jsonl_skips_blank_lines(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n\n{"id": "b", "text": "y"}\n', encoding="utf-8")
    assert len(read_jsonl(path)) == 2


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        '{"text": "missing id"}',
        '{"id": "", "text": "empty id"}',
        '{"id": "a", "text": 5}',
        '{"id": "a", "text": "x", "meta": []}',
    ],
)
def test_read_jsonl_rejects_bad_rows(tmp_path, line):
    path = tmp_path / "c.jsonl"
    path.write_text(line + "\n", encoding="utf-8")
    with pytest.raises(InputError):
        read_jsonl(path)


def test_read_jsonl_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n', encoding="utf-8")
    with pytest.raises(InputError, match="duplicate"):
        read_jsonl(path)


def test_read_jsonl_missing_file():
    with pytest.raises(InputError):
        read_jsonl("/nonexistent/corpus.jsonl")


def test_fixture_corpus_loads(fixture_corpus_path):
    docs = read_jsonl(fixture_corpus_path)
    assert len(docs) == 200
    assert len({d.id for d in docs}) == 200


# --- persistence -----------------------------------------------------------------


def test_vocabulary_save_load_roundtrip(tmp_path):
    vocab = Vocabulary.from_terms(["bb", "aa", "cc"])
    path = tmp_path / "vocab.json"
    save_vocabulary(vocab, path)
    assert load_vocabulary(path).terms == vocab.terms


def test_load_vocabulary_rejects_non_list(tmp_path):
    path = tmp_path / "vocab.json"
    path.write_text('{"not": "a list"}', encoding="utf-8")
    with pytest.raises(InputError):
        load_vocabulary(path)


def test_load_stop_words(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("The\nand\n\n  of \n", encoding="utf-8")
    assert load_stop_words(path) == frozenset({"the", "and", "of"})


# --- estimator wrapper -------------------------------------------------------------


def test_word_count_vectorizer_fit_transform():
    texts = ["aa bb bb", "bb cc", "aa aa"]
    vec = WordCountVectorizer(max_terms=2)
    x = vec.fit_transform(texts)
    assert list(vec.get_feature_names_out()) == ["aa", "bb"]  # aa:3, bb:3 tie
    assert x.shape == (3, 2)
    assert x[0].tolist() == [1.0, 2.0]


def test_word_count_vectorizer_requires_fit():
    with pytest.raises(RuntimeError):
        WordCountVectorizer().transform(["aa"])


def test_word_count_vectorizer_accepts_documents():
    docs = [Document(id="d1", text="aa bb")]
    vec = WordCountVectorizer(max_terms=5).fit(docs)
    assert vec.transform(docs).tolist() == [[1.0, 1.0]]
