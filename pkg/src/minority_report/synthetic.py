"""Synthetic two-topic corpora with planted outliers.

Used for the bundled demo fixture and for recovery experiments: inlier
documents draw words from one of two overlapping-length topic distributions,
outliers draw from a disjoint sub-vocabulary. Word forms (w000, w001, ...)
are chosen so the tokenizer leaves them untouched.

Run `python -m minority_report.synthetic --out corpus.jsonl` to write a
fixture file.
"""

from __future__ import annotations

import argparse
import json

import numpy as np

from .corpus import Document


def _topic_distribution(word_ids: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Zipf-ish weights with a random permutation so the two topics differ in
    # which words dominate.
    ranks = rng.permutation(len(word_ids)) + 1.0
    weights = 1.0 / ranks
    return weights / weights.sum()


def two_topic_documents(
    n_inliers: int,
    n_outliers: int,
    vocab_size: int = 100,
    outlier_vocab_size: int = 20,
    doc_length: tuple[int, int] = (40, 60),
    seed: int = 0,
) -> list[Document]:
    """Inliers from two topics over the first words, outliers from the rest.

    Metadata records ground truth: meta["outlier"] is "1"/"0" and
    meta["topic"] names the generating distribution.
    """
    if outlier_vocab_size >= vocab_size:
        raise ValueError("outlier vocabulary must be smaller than the full vocabulary")
    rng = np.random.default_rng(seed)
    words = np.array([f"w{i:03d}" for i in range(vocab_size)])
    inlier_ids = np.arange(vocab_size - outlier_vocab_size)
    outlier_ids = np.arange(vocab_size - outlier_vocab_size, vocab_size)

    half = len(inlier_ids) // 2
    topic_a = np.zeros(vocab_size)
    topic_a[inlier_ids[:half]] = _topic_distribution(inlier_ids[:half], rng)
    topic_b = np.zeros(vocab_size)
    topic_b[inlier_ids[half:]] = _topic_distribution(inlier_ids[half:], rng)
    topic_out = np.zeros(vocab_size)
    topic_out[outlier_ids] = _topic_distribution(outlier_ids, rng)

    docs: list[Document] = []
    lo, hi = doc_length
    for i in range(n_inliers + n_outliers):
        outlier = i >= n_inliers
        if outlier:
            dist, topic = topic_out, "outlier"
        elif rng.random() < 0.5:
            dist, topic = topic_a, "a"
        else:
            dist, topic = topic_b, "b"
        length = int(rng.integers(lo, hi + 1))
        counts = rng.multinomial(length, dist)
        tokens: list[str] = []
        for word, count in zip(words, counts):
            tokens.extend([word] * int(count))
        docs.append(
            Document(
                id=f"doc{i:05d}",
                text=" ".join(tokens),
                meta={"outlier": "1" if outlier else "0", "topic": topic},
            )
        )
    return docs


def outlier_truth(docs) -> np.ndarray:
    """Ground-truth outlier indicator aligned with the document list."""
    return np.array([1 if d.meta and d.meta.get("outlier") == "1" else 0 for d in docs])


def write_jsonl(docs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "text": doc.text, "meta": doc.meta or {}}))
            fh.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="write a synthetic two-topic corpus")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--inliers", type=int, default=190)
    parser.add_argument("--outliers", type=int, default=10)
    parser.add_argument("--vocab-size", type=int, default=100)
    parser.add_argument("--outlier-vocab-size", type=int, default=20)
    parser.add_argument("--min-length", type=int, default=40)
    parser.add_argument("--max-length", type=int, default=60)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    docs = two_topic_documents(
        args.inliers,
        args.outliers,
        vocab_size=args.vocab_size,
        outlier_vocab_size=args.outlier_vocab_size,
        doc_length=(args.min_length, args.max_length),
        seed=args.seed,
    )
    write_jsonl(docs, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
