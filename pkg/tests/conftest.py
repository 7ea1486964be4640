"""Shared fixtures: the bundled corpus and small pre-trained models."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from minority_report.dbm import DbmModel, RbmParams
from minority_report.rsm import RsmParams

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_corpus_path() -> Path:
    return FIXTURES / "fixture_corpus.jsonl"


def random_rsm_params(k: int, h: int, seed: int, scale: float = 0.5) -> RsmParams:
    rng = np.random.default_rng(seed)
    return RsmParams(
        w=rng.normal(0.0, scale, size=(k, h)),
        a=rng.normal(0.0, scale, size=k),
        b=rng.normal(0.0, scale, size=h),
    )


def random_dbm(k: int, h1: int, h2: int, seed: int, scale: float = 0.5) -> DbmModel:
    rng = np.random.default_rng(seed)
    layer1 = RsmParams(
        w=rng.normal(0.0, scale, size=(k, h1)),
        a=rng.normal(0.0, scale, size=k),
        b=rng.normal(0.0, scale, size=h1),
    )
    layer2 = RbmParams(
        w=rng.normal(0.0, scale, size=(h1, h2)),
        a=rng.normal(0.0, scale, size=h1),
        b=rng.normal(0.0, scale, size=h2),
    )
    return DbmModel(vocab=_tiny_vocab(k), layer1=layer1, layer2=layer2, training_log=[])


def _tiny_vocab(k: int):
    from minority_report.corpus import Vocabulary

    return Vocabulary.from_terms([f"term{i:04d}" for i in range(k)])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def planted_outlier_scores(
    n_inliers: int,
    n_outliers: int,
    vocab_size: int,
    outlier_vocab_size: int,
    seed: int,
    h1: int,
    h2: int,
    epochs: int,
    fine_tune_epochs: int,
    learning_rate: float = 0.05,
    batch_size: int = 32,
) -> tuple[np.ndarray, np.ndarray]:
    """Train on a two-topic corpus with planted outliers; return (eps, truth).

    truth[i] is 1 for planted outliers. The model trains on the full corpus,
    outliers included, exactly as the scoring pipeline would.
    """
    from minority_report.corpus import build_vocabulary, counts_to_matrix, vectorize
    from minority_report.dbm import DocumentDBM
    from minority_report.synthetic import outlier_truth, two_topic_documents

    docs = two_topic_documents(
        n_inliers,
        n_outliers,
        vocab_size=vocab_size,
        outlier_vocab_size=outlier_vocab_size,
        seed=seed,
    )
    vocab = build_vocabulary(docs, vocab_size)
    vectors = [vectorize(d, vocab) for d in docs]
    v, _, _ = counts_to_matrix(vectors, len(vocab))
    est = DocumentDBM(
        n_hidden1=h1,
        n_hidden2=h2,
        epochs=epochs,
        fine_tune_epochs=fine_tune_epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        seed=seed,
    )
    eps = est.fit(v).reconstruction_errors(v)
    return eps, outlier_truth(docs)


def roc_auc(scores: np.ndarray, truth: np.ndarray) -> float:
    """Probability a random outlier outscores a random inlier (tie = 1/2)."""
    pos = scores[truth == 1]
    neg = scores[truth == 0]
    wins = 0.0
    for p in pos:
        wins += float(np.sum(p > neg)) + 0.5 * float(np.sum(p == neg))
    return wins / (len(pos) * len(neg))
