"""Independent reference implementations used as test oracles.

Everything here is deliberately naive — scalar loops, factorials, explicit
enumeration — and avoids calling the package's numerical code, so agreement
between the two is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# --- scalar sigmoid / network maps -------------------------------------------


def logistic(x: float) -> float:
    """1 / (1 + e^-x) with the usual overflow-safe split."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def hidden_probs_loops(v, d, w, b) -> list[float]:
    """Layer-1 hidden activation: sigma(sum_k w[k][j] v_k + d * b_j)."""
    k_dim, h_dim = len(w), len(w[0])
    out = []
    for j in range(h_dim):
        z = d * b[j]
        for k in range(k_dim):
            z += w[k][j] * v[k]
        out.append(logistic(z))
    return out


def binary_layer_loops(x, w, b) -> list[float]:
    """sigma(W^T x + b) for a binary-binary layer (no length scaling)."""
    n_in, n_out = len(w), len(w[0])
    out = []
    for j in range(n_out):
        z = b[j]
        for i in range(n_in):
            z += w[i][j] * x[i]
        out.append(logistic(z))
    return out


def encode_loops(v, d, model) -> list[float]:
    h1 = hidden_probs_loops(v, d, model.layer1.w, model.layer1.b)
    return binary_layer_loops(h1, model.layer2.w, model.layer2.b)


def decode_loops(latent, model) -> list[float]:
    w2, a2 = model.layer2.w, model.layer2.a
    h1 = []
    for i in range(len(w2)):
        z = a2[i]
        for j in range(len(latent)):
            z += w2[i][j] * latent[j]
        h1.append(logistic(z))
    w1, a1 = model.layer1.w, model.layer1.a
    v_hat = []
    for k in range(len(w1)):
        z = a1[k]
        for j in range(len(h1)):
            z += w1[k][j] * h1[j]
        v_hat.append(logistic(z))
    return v_hat


def l1_loops(v, v_hat) -> float:
    return sum(abs(a - b) for a, b in zip(v, v_hat))


def energy_loops(v, h, w, a, b) -> float:
    """-h^T W^T v - a^T v - D b^T h with D = sum(v), all by loops."""
    total = 0.0
    for k in range(len(v)):
        for j in range(len(h)):
            total -= w[k][j] * v[k] * h[j]
    for k in range(len(v)):
        total -= a[k] * v[k]
    d = sum(v)
    for j in range(len(h)):
        total -= d * b[j] * h[j]
    return total


def softmax_loops(logits) -> list[float]:
    m = max(logits)
    exps = [math.exp(z - m) for z in logits]
    s = sum(exps)
    return [e / s for e in exps]


def visible_dist_loops(h, w, a) -> list[float]:
    logits = []
    for k in range(len(w)):
        z = a[k]
        for j in range(len(h)):
            z += w[k][j] * h[j]
        logits.append(z)
    return softmax_loops(logits)


# --- exact likelihood by independent enumeration ------------------------------


def count_vectors(d: int, k: int):
    """All count vectors of k non-negative ints summing to d, via multisets
    of word slots (independent of any recursive composition generator)."""
    for combo in itertools.combinations_with_replacement(range(k), d):
        counts = [0] * k
        for idx in combo:
            counts[idx] += 1
        yield tuple(counts)


def multinomial_coefficient(counts) -> int:
    total = math.factorial(sum(counts))
    for c in counts:
        total //= math.factorial(c)
    return total


def exact_log_likelihood_reference(v, w, a, b) -> float:
    """log p(v) by direct summation of multinomial-weighted Boltzmann factors."""
    v = [int(round(x)) for x in v]
    d = sum(v)
    k = len(v)
    h_dim = len(b)
    hidden_states = list(itertools.product((0.0, 1.0), repeat=h_dim))

    def weight(counts) -> float:
        return multinomial_coefficient(counts) * sum(
            math.exp(-energy_loops(counts, hs, w, a, b)) for hs in hidden_states
        )

    numerator = weight(v)
    z = sum(weight(c) for c in count_vectors(d, k))
    return math.log(numerator) - math.log(z)


# --- finite differences --------------------------------------------------------


def central_difference(loss, array: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Elementwise central finite differences of a scalar function."""
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = loss()
        flat[i] = orig - step
        lo = loss()
        flat[i] = orig
        grad_flat[i] = (hi - lo) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(1e-8, |a| + |n|) over all entries."""
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    numeric = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


# --- DBSCAN brute-force reference ----------------------------------------------


def brute_dbscan_parts(points, eps: float, min_pts: int):
    """Core components, border adjacency, and noise by brute force.

    Returns (components, border_adjacency, noise) where components is a list
    of frozensets of core indices (connected components of the core graph),
    border_adjacency maps each non-core, non-noise index to the set of
    component ids whose cores reach it, and noise is the set of indices with
    no core within eps.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    within = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            dist = math.sqrt(sum((pts[i, t] - pts[j, t]) ** 2 for t in range(pts.shape[1])))
            within[i][j] = dist <= eps
    core = [i for i in range(n) if sum(within[i]) >= min_pts]
    core_set = set(core)

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for i in core:
        for j in core:
            if i < j and within[i][j]:
                union(i, j)

    roots: dict[int, set[int]] = {}
    for i in core:
        roots.setdefault(find(i), set()).add(i)
    components = [frozenset(s) for s in roots.values()]
    comp_of_core = {i: c_id for c_id, comp in enumerate(components) for i in comp}

    border_adjacency: dict[int, set[int]] = {}
    noise = set()
    for i in range(n):
        if i in core_set:
            continue
        adjacent = {comp_of_core[j] for j in core if within[i][j]}
        if adjacent:
            border_adjacency[i] = adjacent
        else:
            noise.add(i)
    return components, border_adjacency, noise


def check_dbscan_equivalence(labels, points, eps: float, min_pts: int) -> str | None:
    """None if labels match the core-graph reference modulo renaming, with
    border points allowed any adjacent component; else a description."""
    labels = np.asarray(labels)
    components, border_adjacency, noise = brute_dbscan_parts(points, eps, min_pts)

    comp_label: dict[int, int] = {}
    used_labels: dict[int, int] = {}
    for c_id, comp in enumerate(components):
        got = {int(labels[i]) for i in comp}
        if len(got) != 1:
            return f"core component {c_id} received multiple labels {sorted(got)}"
        label = got.pop()
        if label < 0:
            return f"core component {c_id} labeled noise"
        if label in used_labels:
            return f"label {label} assigned to components {used_labels[label]} and {c_id}"
        used_labels[label] = c_id
        comp_label[c_id] = label

    for i, adjacent in border_adjacency.items():
        allowed = {comp_label[c] for c in adjacent}
        if int(labels[i]) not in allowed:
            return f"border point {i} labeled {labels[i]}, allowed {sorted(allowed)}"

    for i in noise:
        if int(labels[i]) != -1:
            return f"noise point {i} labeled {labels[i]}"
    return None


# --- t-SNE oracles --------------------------------------------------------------


def perplexity_of_row(p_row) -> float:
    """2^H with H the Shannon entropy in bits, skipping zero entries."""
    h_bits = 0.0
    for p in p_row:
        if p > 0:
            h_bits -= p * math.log2(p)
    return 2.0**h_bits


def kl_loops(p, y) -> float:
    """KL(P || Q) recomputed by loops from coordinates y."""
    n = len(y)
    num = [[0.0] * n for _ in range(n)]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d2 = sum((y[i][t] - y[j][t]) ** 2 for t in range(len(y[i])))
            num[i][j] = 1.0 / (1.0 + d2)
            total += num[i][j]
    kl = 0.0
    for i in range(n):
        for j in range(n):
            if i == j or p[i][j] <= 0:
                continue
            q = num[i][j] / total
            kl += p[i][j] * (math.log(p[i][j]) - math.log(q))
    return kl


# --- corpus oracle ---------------------------------------------------------------


def top_terms_by_count(token_lists, max_k: int) -> list[str]:
    """Most frequent terms, ties broken alphabetically, using dict counting."""
    counts: dict[str, int] = {}
    for tokens in token_lists:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [term for term, _ in ranked[:max_k]]
