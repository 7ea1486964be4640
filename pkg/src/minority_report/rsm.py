"""Replicated-softmax RBM over word-count vectors.

The visible layer is a softmax over the vocabulary replicated D times
(D = document word count), so the hidden bias contribution scales with D.
Training uses contrastive divergence; tiny instances can be checked against
full enumeration of hidden states and count-vector compositions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .corpus import CountVector


def sigma(x):
    """Logistic activation written in its tanh form, (1 + tanh(x/2)) / 2."""
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


@dataclass
class RsmParams:
    """Weights (vocab x hidden), visible bias a, hidden bias b."""

    w: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        k, h = self.w.shape
        if self.a.shape != (k,) or self.b.shape != (h,):
            raise ValueError(
                f"inconsistent shapes: w {self.w.shape}, a {self.a.shape}, b {self.b.shape}"
            )

    @property
    def n_visible(self) -> int:
        return self.w.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.w.shape[1]

    def copy(self) -> "RsmParams":
        return RsmParams(self.w.copy(), self.a.copy(), self.b.copy())

    def all_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.w))
            and np.all(np.isfinite(self.a))
            and np.all(np.isfinite(self.b))
        )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one contrastive-divergence training run."""

    cd_k: int = 1
    learning_rate: float = 0.05
    batch_size: int = 64
    epochs: int = 30
    weight_init_sigma: float = 0.01
    momentum: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.cd_k < 1:
            raise ValueError("cd_k must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.weight_init_sigma > 0:
            raise ValueError("weight_init_sigma must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class Velocity:
    """Momentum state carried across cd_step calls."""

    w: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros_like(cls, params: RsmParams) -> "Velocity":
        return cls(np.zeros_like(params.w), np.zeros_like(params.a), np.zeros_like(params.b))


def init_params(
    n_visible: int,
    n_hidden: int,
    weight_init_sigma: float,
    rng: np.random.Generator,
    visible_bias_counts: np.ndarray | None = None,
) -> RsmParams:
    """Gaussian weights, zero biases; optionally a = log smoothed word frequency."""
    w = rng.normal(0.0, weight_init_sigma, size=(n_visible, n_hidden))
    a = np.zeros(n_visible)
    if visible_bias_counts is not None:
        counts = np.asarray(visible_bias_counts, dtype=np.float64)
        if counts.shape != (n_visible,):
            raise ValueError("visible_bias_counts must have one entry per vocabulary term")
        smoothed = counts + 1.0
        a = np.log(smoothed / smoothed.sum())
    return RsmParams(w=w, a=a, b=np.zeros(n_hidden))


def _as_dense(v, k: int) -> np.ndarray:
    if isinstance(v, CountVector):
        return v.to_dense(k)
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (k,):
        raise ValueError(f"count vector has shape {arr.shape}, expected ({k},)")
    return arr


def energy(v, h, params: RsmParams) -> float:
    """E(v, h) = -h'W'v - a'v - D b'h with D = sum of counts."""
    dense = _as_dense(v, params.n_visible)
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (params.n_hidden,):
        raise ValueError(f"hidden vector has shape {h.shape}, expected ({params.n_hidden},)")
    d = dense.sum()
    return float(-(dense @ params.w @ h) - params.a @ dense - d * (params.b @ h))


def hidden_probs(v, params: RsmParams) -> np.ndarray:
    """p(h_j = 1 | v) = sigma(sum_k w_kj v_k + D b_j)."""
    dense = _as_dense(v, params.n_visible)
    return sigma(dense @ params.w + dense.sum() * params.b)


def hidden_probs_matrix(v: np.ndarray, d: np.ndarray, params: RsmParams) -> np.ndarray:
    return sigma(v @ params.w + d[:, None] * params.b)


def visible_word_dist(h, params: RsmParams) -> np.ndarray:
    """Softmax over words given hidden state, computed with max subtraction."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (params.n_hidden,):
        raise ValueError(f"hidden vector has shape {h.shape}, expected ({params.n_hidden},)")
    logits = params.a + params.w @ h
    logits -= logits.max()
    expl = np.exp(logits)
    return expl / expl.sum()


def _visible_dist_matrix(h: np.ndarray, params: RsmParams) -> np.ndarray:
    logits = params.a[None, :] + h @ params.w.T
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    return expl / expl.sum(axis=1, keepdims=True)


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def sample_visible(dist, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a count vector of total d from a word distribution."""
    dist = np.asarray(dist, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be non-negative")
    if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError("dist is not a probability distribution")
    if d == 0:
        return np.zeros_like(dist)
    return rng.multinomial(int(d), dist / dist.sum()).astype(np.float64)


def _sample_visible_rows(dists: np.ndarray, d: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = np.empty_like(dists)
    for i in range(dists.shape[0]):
        out[i] = sample_visible(dists[i], int(d[i]), rng)
    return out


def reconstruction_cross_entropy(v: np.ndarray, d: np.ndarray, params: RsmParams) -> float:
    """Mean over documents of -sum_k v_k log p_hat_k with p_hat the one-step
    mean-field reconstruction softmax(a + W p(h|v))."""
    pos_h = hidden_probs_matrix(v, d, params)
    log_p = _log_softmax_rows(params.a[None, :] + pos_h @ params.w.T)
    return float(-(v * log_p).sum(axis=1).mean())


def cd_step(
    batch,
    params: RsmParams,
    cfg: TrainConfig,
    rng: np.random.Generator,
    velocity: Velocity | None = None,
) -> tuple[RsmParams, Velocity, float]:
    """One CD-k update over a batch; returns (params, velocity, recon CE).

    Randomness is consumed in a fixed order so runs are replayable: one
    uniform block of shape (B, H) for the initial hidden sample, then per
    chain step one multinomial draw per document (row order) followed by a
    uniform (B, H) block when another hidden sample is needed.
    """
    v, d = _batch_to_matrix(batch, params.n_visible)
    if v.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    if velocity is None:
        velocity = Velocity.zeros_like(params)

    pos_h = hidden_probs_matrix(v, d, params)
    h_sample = (rng.random(pos_h.shape) < pos_h).astype(np.float64)

    v_neg = v
    neg_h = pos_h
    for step in range(cfg.cd_k):
        dists = _visible_dist_matrix(h_sample, params)
        v_neg = _sample_visible_rows(dists, d, rng)
        neg_h = hidden_probs_matrix(v_neg, d, params)
        if step < cfg.cd_k - 1:
            h_sample = (rng.random(neg_h.shape) < neg_h).astype(np.float64)

    n = v.shape[0]
    grad_w = (v.T @ pos_h - v_neg.T @ neg_h) / n
    grad_a = (v - v_neg).sum(axis=0) / n
    grad_b = (d[:, None] * (pos_h - neg_h)).sum(axis=0) / n

    new_vel = Velocity(
        w=cfg.momentum * velocity.w + cfg.learning_rate * grad_w,
        a=cfg.momentum * velocity.a + cfg.learning_rate * grad_a,
        b=cfg.momentum * velocity.b + cfg.learning_rate * grad_b,
    )
    new_params = RsmParams(params.w + new_vel.w, params.a + new_vel.a, params.b + new_vel.b)

    log_p = _log_softmax_rows(params.a[None, :] + pos_h @ params.w.T)
    recon_ce = float(-(v * log_p).sum(axis=1).mean())
    return new_params, new_vel, recon_ce


def _batch_to_matrix(batch, k: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, np.ndarray):
        v = np.asarray(batch, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.shape[1] != k:
            raise ValueError(f"batch has {v.shape[1]} columns, expected {k}")
        return v, v.sum(axis=1)
    rows = [_as_dense(item, k) for item in batch]
    if not rows:
        return np.zeros((0, k)), np.zeros(0)
    v = np.stack(rows)
    return v, v.sum(axis=1)


def train_rsm(
    v: np.ndarray,
    n_hidden: int,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    init_visible_bias: bool = False,
) -> tuple[RsmParams, list[tuple[int, float]]]:
    """Contrastive-divergence training loop; returns params and per-epoch CE."""
    v = np.asarray(v, dtype=np.float64)
    n, k = v.shape
    if n == 0 or k == 0:
        raise ValueError("training matrix must be non-empty")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    counts = v.sum(axis=0) if init_visible_bias else None
    params = init_params(k, n_hidden, cfg.weight_init_sigma, rng, counts)
    velocity = Velocity.zeros_like(params)
    log: list[tuple[int, float]] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total_ce = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            params, velocity, ce = cd_step(v[idx], params, cfg, rng, velocity)
            total_ce += ce * len(idx)
        log.append((epoch, total_ce / n))
    return params, log


# --- exact-enumeration oracle (small instances only) -----------------------

_FEASIBILITY_LIMIT = 10**7


def compositions(d: int, k: int):
    """Yield every count vector of k non-negative integers summing to d."""
    if k == 1:
        yield (d,)
        return
    for first in range(d + 1):
        for rest in compositions(d - first, k - 1):
            yield (first,) + rest


def _check_feasible(d: int, k: int, h: int) -> None:
    states = (2**h) * math.comb(d + k - 1, k - 1)
    if states > _FEASIBILITY_LIMIT:
        raise ValueError(
            f"exact enumeration infeasible: 2^{h} * C({d + k - 1},{k - 1}) = {states} "
            f"exceeds {_FEASIBILITY_LIMIT}"
        )


def _log_multinomial_coef(counts: np.ndarray) -> float:
    d = counts.sum()
    return math.lgamma(d + 1) - sum(math.lgamma(c + 1) for c in counts)


def _log_sum_exp(values) -> float:
    arr = np.asarray(list(values), dtype=np.float64)
    m = arr.max()
    return float(m + np.log(np.exp(arr - m).sum()))


def _log_free(dense: np.ndarray, params: RsmParams, hidden_states) -> float:
    """log sum over hidden states of exp(-E(v, h)), by explicit enumeration."""
    return _log_sum_exp(-energy(dense, np.asarray(h, dtype=np.float64), params) for h in hidden_states)


def exact_log_likelihood(v, params: RsmParams) -> float:
    """log p(v) against the exact partition function for count vectors of the
    same total D, including multinomial coefficients on both sides."""
    dense = _as_dense(v, params.n_visible)
    d = int(round(dense.sum()))
    k, h = params.n_visible, params.n_hidden
    _check_feasible(d, k, h)
    hidden_states = list(itertools.product((0.0, 1.0), repeat=h))
    log_num = _log_multinomial_coef(dense) + _log_free(dense, params, hidden_states)
    log_terms = []
    for comp in compositions(d, k):
        comp_arr = np.asarray(comp, dtype=np.float64)
        log_terms.append(_log_multinomial_coef(comp_arr) + _log_free(comp_arr, params, hidden_states))
    return log_num - _log_sum_exp(log_terms)


def exact_mean_log_likelihood(v: np.ndarray, params: RsmParams) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(np.mean([exact_log_likelihood(row, params) for row in v]))


def exact_gradient(v: np.ndarray, params: RsmParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of sum_i log p(v_i): data expectation minus the exact model
    expectation obtained by enumerating all count vectors with matching D."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    k, h = params.n_visible, params.n_hidden
    gw = np.zeros_like(params.w)
    ga = np.zeros_like(params.a)
    gb = np.zeros_like(params.b)
    model_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for row in v:
        d = int(round(row.sum()))
        p_h = hidden_probs(row, params)
        gw += np.outer(row, p_h)
        ga += row
        gb += d * p_h
        if d not in model_cache:
            model_cache[d] = _model_expectations(d, params)
        ew, ea, eb = model_cache[d]
        gw -= ew
        ga -= ea
        gb -= eb
    return gw, ga, gb


def _model_expectations(d: int, params: RsmParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k, h = params.n_visible, params.n_hidden
    _check_feasible(d, k, h)
    hidden_states = list(itertools.product((0.0, 1.0), repeat=h))
    comps = [np.asarray(c, dtype=np.float64) for c in compositions(d, k)]
    log_weights = np.array(
        [_log_multinomial_coef(c) + _log_free(c, params, hidden_states) for c in comps]
    )
    log_z = _log_sum_exp(log_weights)
    probs = np.exp(log_weights - log_z)
    ew = np.zeros_like(params.w)
    ea = np.zeros_like(params.a)
    eb = np.zeros_like(params.b)
    for c, p in zip(comps, probs):
        p_h = hidden_probs(c, params)
        ew += p * np.outer(c, p_h)
        ea += p * c
        eb += p * d * p_h
    return ew, ea, eb
