"""Exact t-SNE for projecting latent document embeddings to 2-D.

O(N^2) affinities and gradients throughout: corpora in the tens of
thousands stay tractable and every quantity can be checked against finite
differences. Bandwidths are calibrated per point by bisection on the
conditional distribution's perplexity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import InputError
from .validation import as_float_matrix

_EXAGGERATION = 12.0
_EXAGGERATION_ITERS = 250
_MOMENTUM_EARLY = 0.5
_MOMENTUM_LATE = 0.8
_INIT_SCALE = 1e-4


@dataclass
class Embedding2D:
    """2-D coordinates plus the KL trace of the optimization run."""

    coords: np.ndarray
    kl_trace: list[tuple[int, float]]
    perplexity: float
    seed: int | None


def _sq_dists(points: np.ndarray) -> np.ndarray:
    sq = (points**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _conditional_row(d2_row: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Probabilities and achieved perplexity for one point at bandwidth beta."""
    logits = -beta * d2_row
    logits -= logits.max()
    p = np.exp(logits)
    total = p.sum()
    p /= total
    # Shannon entropy in nats; perplexity is exp(H).
    nonzero = p > 0
    entropy = float(-(p[nonzero] * np.log(p[nonzero])).sum())
    return p, float(np.exp(entropy))


def conditional_affinities(
    points,
    perplexity: float,
    tol: float = 1e-4,
    max_steps: int = 200,
) -> np.ndarray:
    """Row-conditional affinity matrix (diagonal zero, rows sum to 1).

    Each row's Gaussian bandwidth is found by bisection so the row's
    perplexity (exp of its Shannon entropy) hits the target within tol.
    Raises InputError naming the first point whose conditional cannot reach
    the target (e.g. heavy duplication makes the entropy constant).
    """
    pts = as_float_matrix(np.asarray(points, dtype=np.float64), "points")
    n = pts.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    if not 1.0 < perplexity < n:
        raise ValueError(f"perplexity must lie in (1, {n})")

    d2 = _sq_dists(pts)
    cond = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        row = d2[i][mask[i]]
        p = _calibrate_row(row, perplexity, tol, max_steps, i)
        cond[i][mask[i]] = p
    return cond


def calibrate_affinities(
    points,
    perplexity: float,
    tol: float = 1e-4,
    max_steps: int = 200,
) -> np.ndarray:
    """Symmetrized affinity matrix P = (cond + cond.T) / 2N; sums to 1."""
    cond = conditional_affinities(points, perplexity, tol, max_steps)
    n = cond.shape[0]
    return (cond + cond.T) / (2.0 * n)


def _calibrate_row(
    d2_row: np.ndarray, target: float, tol: float, max_steps: int, index: int
) -> np.ndarray:
    beta = 1.0
    lo, hi = 0.0, np.inf
    p, perp = _conditional_row(d2_row, beta)
    steps = 0
    while abs(perp - target) > tol:
        steps += 1
        if steps > max_steps:
            raise InputError(
                f"perplexity calibration failed for point {index}: "
                f"achieved {perp:.6f}, target {target:.6f}"
            )
        if perp > target:  # too flat: raise beta
            lo = beta
            beta = beta * 2.0 if not np.isfinite(hi) else 0.5 * (lo + hi)
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else 0.5 * (lo + hi)
        p, perp = _conditional_row(d2_row, beta)
    return p


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    """KL(P || Q) for the Student-t low-dimensional kernel at coordinates y."""
    q, _ = _q_matrix(y)
    mask = p > 0
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


def _q_matrix(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    num = 1.0 / (1.0 + _sq_dists(y))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    return q, num


def tsne_gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact gradient of KL(P || Q) with respect to the 2-D coordinates."""
    q, num = _q_matrix(y)
    pq_num = (p - q) * num
    return 4.0 * (pq_num.sum(axis=1)[:, None] * y - pq_num @ y)


def tsne(
    points,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int | None = 0,
    learning_rate: float = 200.0,
    init: np.ndarray | None = None,
) -> Embedding2D:
    """Gradient descent on KL(P || Q); returns the best-KL iterate.

    Early exaggeration multiplies P by 12 for the first 250 iterations and
    momentum switches from 0.5 to 0.8 at the same point. The KL trace is
    always measured against the unexaggerated P; the returned coordinates are
    those of the lowest recorded KL, and the trace's last entry is the KL
    those coordinates realize, so the final KL never exceeds the initial one.
    """
    pts = as_float_matrix(np.asarray(points, dtype=np.float64), "points")
    n = pts.shape[0]
    if iters < 1:
        raise ValueError("iters must be >= 1")
    p = calibrate_affinities(pts, perplexity)

    if init is not None:
        y = np.array(init, dtype=np.float64, copy=True)
        if y.shape != (n, 2):
            raise ValueError(f"init must have shape ({n}, 2)")
    else:
        rng = np.random.default_rng(seed)
        y = rng.normal(0.0, _INIT_SCALE, size=(n, 2))

    velocity = np.zeros_like(y)
    trace: list[tuple[int, float]] = []
    best_kl = np.inf
    best_y = y.copy()

    for t in range(iters):
        q, num = _q_matrix(y)
        mask = p > 0
        kl = float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())
        trace.append((t, kl))
        if kl < best_kl:
            best_kl = kl
            best_y = y.copy()

        p_eff = p * _EXAGGERATION if t < _EXAGGERATION_ITERS else p
        q_grad = (p_eff - q) * num
        grad = 4.0 * (q_grad.sum(axis=1)[:, None] * y - q_grad @ y)
        momentum = _MOMENTUM_EARLY if t < _EXAGGERATION_ITERS else _MOMENTUM_LATE
        velocity = momentum * velocity - learning_rate * grad
        y = y + velocity

    final_kl = kl_divergence(p, y)
    if final_kl < best_kl:
        best_kl = final_kl
        best_y = y.copy()
    trace.append((iters, best_kl))
    return Embedding2D(coords=best_y, kl_trace=trace, perplexity=perplexity, seed=seed)


class ExactTSNE(BaseEstimator):
    """Estimator wrapper storing embedding_ and kl_trace_ after fitting."""

    def __init__(
        self,
        perplexity: float = 30.0,
        iters: int = 1000,
        learning_rate: float = 200.0,
        seed: int | None = 0,
    ):
        self.perplexity = perplexity
        self.iters = iters
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y=None):
        result = tsne(
            X,
            perplexity=self.perplexity,
            iters=self.iters,
            seed=self.seed,
            learning_rate=self.learning_rate,
        )
        self.embedding_ = result.coords
        self.kl_trace_ = result.kl_trace
        return self

    def fit_transform(self, X, y=None) -> np.ndarray:
        self.fit(X)
        return self.embedding_
