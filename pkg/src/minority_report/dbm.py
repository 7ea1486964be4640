"""Two-layer document model: replicated-softmax first layer, binary second.

Encoding and decoding are deterministic sigmoid maps with tied weights:
decode runs the transposed weights with each layer's visible-side bias.
A document's anomaly score is the L1 distance between its count vector and
the sigmoid reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import CountVector, Vocabulary, counts_to_matrix
from .errors import NumericError
from .rsm import (
    RsmParams,
    TrainConfig,
    Velocity,
    hidden_probs_matrix,
    sigma,
    train_rsm,
)
from .validation import as_count_matrix, check_fitted

__all__ = [
    "sigma",
    "RbmParams",
    "DbmModel",
    "encode",
    "encode_matrix",
    "decode",
    "decode_matrix",
    "reconstruction_error",
    "reconstruction_errors_matrix",
    "pretrain",
    "fine_tune",
    "train_rbm",
    "cd_step_binary",
    "DocumentDBM",
]

_CLIP = 1e-12


@dataclass
class RbmParams:
    """Binary-binary layer: weights (H1 x H2), visible bias a, hidden bias b."""

    w: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        h1, h2 = self.w.shape
        if self.a.shape != (h1,) or self.b.shape != (h2,):
            raise ValueError(
                f"inconsistent shapes: w {self.w.shape}, a {self.a.shape}, b {self.b.shape}"
            )

    def copy(self) -> "RbmParams":
        return RbmParams(self.w.copy(), self.a.copy(), self.b.copy())

    def all_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.w))
            and np.all(np.isfinite(self.a))
            and np.all(np.isfinite(self.b))
        )


@dataclass
class DbmModel:
    """Vocabulary plus both trained layers and the per-epoch training log."""

    vocab: Vocabulary
    layer1: RsmParams
    layer2: RbmParams
    training_log: list[tuple[int, str, float]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.vocab) != self.layer1.w.shape[0]:
            raise ValueError("vocabulary size does not match layer-1 weight rows")
        if self.layer1.w.shape[1] != self.layer2.w.shape[0]:
            raise ValueError("layer-1 hidden size does not match layer-2 visible size")

    @property
    def n_visible(self) -> int:
        return self.layer1.w.shape[0]

    @property
    def n_hidden1(self) -> int:
        return self.layer1.w.shape[1]

    @property
    def n_hidden2(self) -> int:
        return self.layer2.w.shape[1]

    def copy(self) -> "DbmModel":
        return DbmModel(self.vocab, self.layer1.copy(), self.layer2.copy(), list(self.training_log))


def _placeholder_vocab(k: int) -> Vocabulary:
    return Vocabulary.from_terms(f"t{i:04d}" for i in range(k))


# --- deterministic forward-backward maps ------------------------------------


def _as_dense(v, k: int) -> np.ndarray:
    if isinstance(v, CountVector):
        return v.to_dense(k)
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (k,):
        raise ValueError(f"count vector has shape {arr.shape}, expected ({k},)")
    return arr


def encode_matrix(v: np.ndarray, d: np.ndarray, model: DbmModel) -> np.ndarray:
    h1 = sigma(v @ model.layer1.w + d[:, None] * model.layer1.b)
    return sigma(h1 @ model.layer2.w + model.layer2.b)


def encode(v, model: DbmModel) -> np.ndarray:
    """Latent embedding: sigma(W2' sigma(W1' v + D b1) + b2)."""
    dense = _as_dense(v, model.n_visible)
    return encode_matrix(dense[None, :], np.array([dense.sum()]), model)[0]


def decode_matrix(latent: np.ndarray, model: DbmModel) -> np.ndarray:
    h1p = sigma(latent @ model.layer2.w.T + model.layer2.a)
    return sigma(h1p @ model.layer1.w.T + model.layer1.a)


def decode(latent, model: DbmModel, d: int | None = None) -> np.ndarray:
    """Sigmoid reconstruction of the count vector from a latent embedding.

    `d` is accepted for symmetry with encode; the deterministic decoder does
    not depend on document length.
    """
    latent = np.asarray(latent, dtype=np.float64)
    if latent.shape != (model.n_hidden2,):
        raise ValueError(
            f"latent vector has shape {latent.shape}, expected ({model.n_hidden2},)"
        )
    return decode_matrix(latent[None, :], model)[0]


def reconstruction_error(v, v_hat, norm: str = "l1") -> float:
    """Distance between a count vector and its reconstruction (default L1)."""
    v = np.asarray(v, dtype=np.float64)
    v_hat = np.asarray(v_hat, dtype=np.float64)
    if v.shape != v_hat.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {v_hat.shape}")
    diff = np.abs(v_hat - v)
    if norm == "l1":
        return float(diff.sum())
    if norm == "l2":
        return float(math.sqrt((diff**2).sum()))
    raise ValueError(f"unknown norm {norm!r}")


def reconstruction_errors_matrix(v: np.ndarray, d: np.ndarray, model: DbmModel, norm: str = "l1") -> np.ndarray:
    v_hat = decode_matrix(encode_matrix(v, d, model), model)
    diff = np.abs(v_hat - v)
    if norm == "l1":
        return diff.sum(axis=1)
    if norm == "l2":
        return np.sqrt((diff**2).sum(axis=1))
    raise ValueError(f"unknown norm {norm!r}")


# --- binary-binary second layer ---------------------------------------------


def init_rbm_params(
    n_visible: int, n_hidden: int, weight_init_sigma: float, rng: np.random.Generator
) -> RbmParams:
    w = rng.normal(0.0, weight_init_sigma, size=(n_visible, n_hidden))
    return RbmParams(w=w, a=np.zeros(n_visible), b=np.zeros(n_hidden))


def _rbm_recon_ce(x: np.ndarray, pos_h: np.ndarray, params: RbmParams) -> float:
    x_hat = np.clip(sigma(pos_h @ params.w.T + params.a), _CLIP, 1.0 - _CLIP)
    ce = -(x * np.log(x_hat) + (1.0 - x) * np.log(1.0 - x_hat)).sum(axis=1)
    return float(ce.mean())


def cd_step_binary(
    batch: np.ndarray,
    params: RbmParams,
    cfg: TrainConfig,
    rng: np.random.Generator,
    velocity: Velocity | None = None,
) -> tuple[RbmParams, Velocity, float]:
    """CD-k for the binary layer; hidden bias is not length-scaled here.

    Hidden states are sampled binary; visible updates use probabilities.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    if x.shape[1] != params.w.shape[0]:
        raise ValueError(f"batch has {x.shape[1]} columns, expected {params.w.shape[0]}")
    if velocity is None:
        velocity = Velocity(np.zeros_like(params.w), np.zeros_like(params.a), np.zeros_like(params.b))

    pos_h = sigma(x @ params.w + params.b)
    h_sample = (rng.random(pos_h.shape) < pos_h).astype(np.float64)

    x_neg = x
    neg_h = pos_h
    for step in range(cfg.cd_k):
        x_neg = sigma(h_sample @ params.w.T + params.a)
        neg_h = sigma(x_neg @ params.w + params.b)
        if step < cfg.cd_k - 1:
            h_sample = (rng.random(neg_h.shape) < neg_h).astype(np.float64)

    n = x.shape[0]
    grad_w = (x.T @ pos_h - x_neg.T @ neg_h) / n
    grad_a = (x - x_neg).sum(axis=0) / n
    grad_b = (pos_h - neg_h).sum(axis=0) / n

    new_vel = Velocity(
        w=cfg.momentum * velocity.w + cfg.learning_rate * grad_w,
        a=cfg.momentum * velocity.a + cfg.learning_rate * grad_a,
        b=cfg.momentum * velocity.b + cfg.learning_rate * grad_b,
    )
    new_params = RbmParams(params.w + new_vel.w, params.a + new_vel.a, params.b + new_vel.b)
    return new_params, new_vel, _rbm_recon_ce(x, pos_h, params)


def train_rbm(
    x: np.ndarray,
    n_hidden: int,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
) -> tuple[RbmParams, list[tuple[int, float]]]:
    x = np.asarray(x, dtype=np.float64)
    n, k = x.shape
    if n == 0 or k == 0:
        raise ValueError("training matrix must be non-empty")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    params = init_rbm_params(k, n_hidden, cfg.weight_init_sigma, rng)
    velocity = Velocity(np.zeros_like(params.w), np.zeros_like(params.a), np.zeros_like(params.b))
    log: list[tuple[int, float]] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total_ce = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            params, velocity, ce = cd_step_binary(x[idx], params, cfg, rng, velocity)
            total_ce += ce * len(idx)
        log.append((epoch, total_ce / n))
    return params, log


# --- layerwise pretraining and autoencoder fine-tuning ----------------------


def pretrain(
    corpus,
    cfg1: TrainConfig,
    cfg2: TrainConfig,
    h1: int,
    h2: int,
    vocab: Vocabulary | None = None,
    init_visible_bias: bool = False,
) -> DbmModel:
    """Train layer 1 on counts, then layer 2 on layer-1 hidden probabilities."""
    if h1 < 1 or h2 < 1:
        raise ValueError("hidden sizes must be >= 1")
    v, d = _corpus_to_matrix(corpus, vocab)
    if v.shape[0] == 0:
        raise ValueError("corpus must be non-empty")
    if v.shape[1] == 0:
        raise ValueError("vocabulary must be non-empty")
    if vocab is None:
        vocab = _placeholder_vocab(v.shape[1])

    layer1, log1 = train_rsm(v, h1, cfg1, init_visible_bias=init_visible_bias)
    hidden1 = hidden_probs_matrix(v, d, layer1)
    layer2, log2 = train_rbm(hidden1, h2, cfg2)

    log = [(epoch, "layer1", ce) for epoch, ce in log1]
    log += [(epoch, "layer2", ce) for epoch, ce in log2]
    model = DbmModel(vocab=vocab, layer1=layer1, layer2=layer2, training_log=log)
    _require_finite(model)
    return model


def _corpus_to_matrix(corpus, vocab: Vocabulary | None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(corpus, np.ndarray):
        v = np.asarray(corpus, dtype=np.float64)
        return v, v.sum(axis=1)
    corpus = list(corpus)
    if corpus and isinstance(corpus[0], CountVector):
        if vocab is None:
            k = 1 + max((max(cv.counts, default=-1) for cv in corpus), default=-1)
        else:
            k = len(vocab)
        v, d, _ = counts_to_matrix(corpus, k)
        return v, d
    v = np.asarray(corpus, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    return v, v.sum(axis=1)


def _require_finite(model: DbmModel) -> None:
    if not (model.layer1.all_finite() and model.layer2.all_finite()):
        raise NumericError("non-finite parameter detected after training")


def autoencoder_loss(v: np.ndarray, d: np.ndarray, model: DbmModel) -> float:
    """Mean per-document cross-entropy between counts and the reconstruction."""
    v_hat = np.clip(decode_matrix(encode_matrix(v, d, model), model), _CLIP, 1.0 - _CLIP)
    ce = -(v * np.log(v_hat) + (1.0 - v) * np.log(1.0 - v_hat)).sum(axis=1)
    return float(ce.mean())


def autoencoder_gradients(
    v: np.ndarray, d: np.ndarray, model: DbmModel
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backprop through the tied-weight encode/decode maps.

    Returns gradients of the mean cross-entropy loss with respect to
    (w1, a1, b1, w2, a2, b2); tied weights collect both the encoder and
    decoder contributions.
    """
    w1, a1, b1 = model.layer1.w, model.layer1.a, model.layer1.b
    w2, a2, b2 = model.layer2.w, model.layer2.a, model.layer2.b
    n = v.shape[0]

    h1 = sigma(v @ w1 + d[:, None] * b1)
    t = sigma(h1 @ w2 + b2)
    h1p = sigma(t @ w2.T + a2)
    v_hat = sigma(h1p @ w1.T + a1)

    d4 = (v_hat - v) / n
    g_a1 = d4.sum(axis=0)
    g_w1 = d4.T @ h1p
    d3 = (d4 @ w1) * h1p * (1.0 - h1p)
    g_a2 = d3.sum(axis=0)
    g_w2 = d3.T @ t
    d2 = (d3 @ w2) * t * (1.0 - t)
    g_b2 = d2.sum(axis=0)
    g_w2 += h1.T @ d2
    d1 = (d2 @ w2.T) * h1 * (1.0 - h1)
    g_b1 = (d[:, None] * d1).sum(axis=0)
    g_w1 += v.T @ d1
    return g_w1, g_a1, g_b1, g_w2, g_a2, g_b2


def mean_holdout_epsilon(v: np.ndarray, d: np.ndarray, model: DbmModel) -> float:
    return float(reconstruction_errors_matrix(v, d, model).mean())


def fine_tune(
    model: DbmModel,
    train,
    holdout,
    cfg: TrainConfig,
    patience: int = 5,
) -> DbmModel:
    """Gradient descent on the deterministic reconstruction cross-entropy,
    returning the parameters with the best holdout mean epsilon."""
    v_tr, d_tr = _corpus_to_matrix(train, model.vocab)
    v_ho, d_ho = _corpus_to_matrix(holdout, model.vocab)
    if v_tr.shape[0] == 0 or v_ho.shape[0] == 0:
        raise ValueError("train and holdout must be non-empty")
    if v_tr.shape[1] != model.n_visible or v_ho.shape[1] != model.n_visible:
        raise ValueError("count matrix width does not match the model vocabulary")
    if patience < 1:
        raise ValueError("patience must be >= 1")

    current = model.copy()
    best = model.copy()
    best_eps = mean_holdout_epsilon(v_ho, d_ho, best)
    log = list(model.training_log)

    rng = np.random.default_rng(cfg.seed)
    vel = [
        np.zeros_like(current.layer1.w),
        np.zeros_like(current.layer1.a),
        np.zeros_like(current.layer1.b),
        np.zeros_like(current.layer2.w),
        np.zeros_like(current.layer2.a),
        np.zeros_like(current.layer2.b),
    ]
    stale = 0
    n = v_tr.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = autoencoder_gradients(v_tr[idx], d_tr[idx], current)
            params = [
                current.layer1.w,
                current.layer1.a,
                current.layer1.b,
                current.layer2.w,
                current.layer2.a,
                current.layer2.b,
            ]
            for i, (p, g) in enumerate(zip(params, grads)):
                vel[i] = cfg.momentum * vel[i] - cfg.learning_rate * g
                p += vel[i]
        hold_eps = mean_holdout_epsilon(v_ho, d_ho, current)
        log.append((epoch, "fine_tune", hold_eps))
        if hold_eps < best_eps:
            best = current.copy()
            best_eps = hold_eps
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break

    result = DbmModel(
        vocab=model.vocab, layer1=best.layer1, layer2=best.layer2, training_log=log
    )
    _require_finite(result)
    return result


# --- sklearn-style wrapper ---------------------------------------------------


class DocumentDBM(BaseEstimator, TransformerMixin):
    """Fit the two-layer document model on a count matrix.

    fit() runs layerwise pretraining followed by autoencoder fine-tuning with
    an internal holdout split; transform() returns latent embeddings and
    reconstruction_errors() the per-document anomaly scores. Both layers share
    one set of contrastive-divergence hyperparameters here; use the module
    functions directly for per-layer control.
    """

    def __init__(
        self,
        n_hidden1: int = 128,
        n_hidden2: int = 64,
        cd_k: int = 1,
        learning_rate: float = 0.05,
        epochs: int = 30,
        batch_size: int = 64,
        momentum: float = 0.5,
        weight_init_sigma: float = 0.01,
        fine_tune_epochs: int = 50,
        fine_tune_learning_rate: float = 0.05,
        holdout_fraction: float = 0.1,
        patience: int = 5,
        seed: int = 0,
    ):
        self.n_hidden1 = n_hidden1
        self.n_hidden2 = n_hidden2
        self.cd_k = cd_k
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.weight_init_sigma = weight_init_sigma
        self.fine_tune_epochs = fine_tune_epochs
        self.fine_tune_learning_rate = fine_tune_learning_rate
        self.holdout_fraction = holdout_fraction
        self.patience = patience
        self.seed = seed

    def _cd_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            cd_k=self.cd_k,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            weight_init_sigma=self.weight_init_sigma,
            momentum=self.momentum,
            seed=seed,
        )

    def fit(self, X, y=None):
        v = as_count_matrix(X)
        if not 0.0 < self.holdout_fraction <= 0.5:
            raise ValueError("holdout_fraction must lie in (0, 0.5]")
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(self.seed).spawn(4)]
        cfg1 = self._cd_config(seeds[0])
        cfg2 = self._cd_config(seeds[1])

        if self.fine_tune_epochs > 0 and v.shape[0] >= 2:
            rng = np.random.default_rng(seeds[2])
            order = rng.permutation(v.shape[0])
            n_hold = int(math.ceil(self.holdout_fraction * v.shape[0]))
            hold_idx = order[len(order) - n_hold :]
            train_idx = order[: len(order) - n_hold]
            model = pretrain(v[train_idx], cfg1, cfg2, self.n_hidden1, self.n_hidden2)
            ft_cfg = TrainConfig(
                cd_k=1,
                learning_rate=self.fine_tune_learning_rate,
                batch_size=self.batch_size,
                epochs=self.fine_tune_epochs,
                weight_init_sigma=self.weight_init_sigma,
                momentum=self.momentum,
                seed=seeds[3],
            )
            model = fine_tune(model, v[train_idx], v[hold_idx], ft_cfg, patience=self.patience)
        else:
            model = pretrain(v, cfg1, cfg2, self.n_hidden1, self.n_hidden2)
        self.model_ = model
        return self

    def transform(self, X) -> np.ndarray:
        check_fitted(self, "model_")
        v = as_count_matrix(X)
        return encode_matrix(v, v.sum(axis=1), self.model_)

    def reconstruct(self, X) -> np.ndarray:
        check_fitted(self, "model_")
        v = as_count_matrix(X)
        return decode_matrix(encode_matrix(v, v.sum(axis=1), self.model_), self.model_)

    def reconstruction_errors(self, X, norm: str = "l1") -> np.ndarray:
        check_fitted(self, "model_")
        v = as_count_matrix(X)
        return reconstruction_errors_matrix(v, v.sum(axis=1), self.model_, norm=norm)
