"""End-to-end pipeline: ingest through artifact emission.

Stage order: ingest -> vectorize -> pretrain -> fine_tune -> encode ->
dbscan -> tsne -> score -> select -> emit. Each stage failure is wrapped in
a PipelineError carrying the stage name; artifacts are written atomically
(built in memory, written to "<name>.partial", renamed on success), so a
crashed run leaves either finished files or files marked ".partial".

Artifacts (all in the output directory):
    vocab.json           ordered term list
    model.ckpt.json      checkpoint (weights, biases, config snapshot, log)
    embeddings.csv       doc_id plus latent coordinates
    clusters.csv         doc_id, cluster (-1 = noise)
    cluster_terms.json   cluster -> top terms by summed count
    tsne.csv             doc_id, x, y, cluster, flagged
    scatter.svg          2-D scatter, cluster hues, noise gray, flags orange
    anomaly_report.csv   doc_id, epsilon, epsilon_normalized, rank, flagged
    anomaly_report.json  same entries plus threshold and policy
    run_manifest.json    config, seed, versions, wall time, holdout ids
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .anomaly import (
    POLICY_MEAN_K_SIGMA,
    POLICY_PERCENTILE,
    Score,
    report_csv_rows,
    score_corpus,
    select_minority,
)
from .cluster import auto_eps, cluster_top_terms, dbscan
from .corpus import (
    Vocabulary,
    build_vocabulary,
    counts_to_matrix,
    load_stop_words,
    read_jsonl,
    vectorize,
)
from .dbm import DbmModel, RbmParams, encode_matrix, fine_tune, pretrain
from .errors import CheckpointError, InputError, NumericError, PipelineError
from .rsm import RsmParams, TrainConfig
from .tsne import tsne

CHECKPOINT_FORMAT_VERSION = 1

#: Stage names in execution order, used for error reporting and the manifest.
STAGES = (
    "ingest",
    "vectorize",
    "pretrain",
    "fine_tune",
    "encode",
    "dbscan",
    "tsne",
    "score",
    "select",
    "emit",
)


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class FineTuneConfig:
    """Autoencoder fine-tuning hyperparameters."""

    epochs: int = 50
    learning_rate: float = 0.05
    batch_size: int = 64
    momentum: float = 0.5
    patience: int = 5

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("fine_tune.epochs must be >= 0")
        if not self.learning_rate >= 0:
            raise ValueError("fine_tune.learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("fine_tune.batch_size must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("fine_tune.momentum must lie in [0, 1)")
        if self.patience < 1:
            raise ValueError("fine_tune.patience must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; serializable to/from a JSON dict."""

    corpus: str
    output_dir: str
    stop_words: str | None = None
    max_terms: int = 1000
    h1: int = 128
    h2: int = 64
    layer1: TrainConfig = field(default_factory=TrainConfig)
    layer2: TrainConfig = field(default_factory=TrainConfig)
    fine_tune: FineTuneConfig = field(default_factory=FineTuneConfig)
    holdout_fraction: float = 0.1
    anomaly_policy: str = POLICY_PERCENTILE
    anomaly_param: float = 99.0
    error_norm: str = "l1"
    eps: float | str = "auto"
    min_pts: int = 4
    top_terms: int = 10
    perplexity: float = 30.0
    tsne_iters: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.h1 < 1 or self.h2 < 1:
            raise ValueError("hidden layer sizes must be >= 1")
        if not 0.0 < self.holdout_fraction <= 0.5:
            raise ValueError("holdout_fraction must lie in (0, 0.5]")
        if self.anomaly_policy not in (POLICY_PERCENTILE, POLICY_MEAN_K_SIGMA):
            raise ValueError(f"unknown anomaly policy {self.anomaly_policy!r}")
        if self.anomaly_policy == POLICY_PERCENTILE and not 0.0 < self.anomaly_param < 100.0:
            raise ValueError("percentile must lie in (0, 100)")
        if self.anomaly_policy == POLICY_MEAN_K_SIGMA and self.anomaly_param < 0:
            raise ValueError("k must be >= 0 for the mean_plus_k_sigma policy")
        if self.error_norm not in ("l1", "l2"):
            raise ValueError("error_norm must be 'l1' or 'l2'")
        if self.eps != "auto":
            if not isinstance(self.eps, (int, float)) or not float(self.eps) > 0:
                raise ValueError("eps must be 'auto' or a positive number")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if self.top_terms < 1:
            raise ValueError("top_terms must be >= 1")
        if not self.perplexity > 1:
            raise ValueError("perplexity must be > 1")
        if self.tsne_iters < 1:
            raise ValueError("tsne_iters must be >= 1")

    def to_dict(self) -> dict:
        def train_dict(cfg: TrainConfig) -> dict:
            return {
                "cd_k": cfg.cd_k,
                "learning_rate": cfg.learning_rate,
                "batch_size": cfg.batch_size,
                "epochs": cfg.epochs,
                "weight_init_sigma": cfg.weight_init_sigma,
                "momentum": cfg.momentum,
            }

        return {
            "corpus": self.corpus,
            "output_dir": self.output_dir,
            "stop_words": self.stop_words,
            "max_terms": self.max_terms,
            "h1": self.h1,
            "h2": self.h2,
            "layer1": train_dict(self.layer1),
            "layer2": train_dict(self.layer2),
            "fine_tune": {
                "epochs": self.fine_tune.epochs,
                "learning_rate": self.fine_tune.learning_rate,
                "batch_size": self.fine_tune.batch_size,
                "momentum": self.fine_tune.momentum,
                "patience": self.fine_tune.patience,
            },
            "holdout_fraction": self.holdout_fraction,
            "anomaly": {"policy": self.anomaly_policy, "param": self.anomaly_param, "norm": self.error_norm},
            "dbscan": {"eps": self.eps, "min_pts": self.min_pts, "top_terms": self.top_terms},
            "tsne": {"perplexity": self.perplexity, "iters": self.tsne_iters},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        """Build a config from the JSON layout written by to_dict.

        Unknown keys raise InputError so typos do not silently fall back to
        defaults.
        """
        if not isinstance(raw, dict):
            raise InputError("config must be a JSON object")
        allowed = {
            "corpus",
            "output_dir",
            "stop_words",
            "max_terms",
            "h1",
            "h2",
            "layer1",
            "layer2",
            "fine_tune",
            "holdout_fraction",
            "anomaly",
            "dbscan",
            "tsne",
            "seed",
        }
        unknown = set(raw) - allowed
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        if "corpus" not in raw or "output_dir" not in raw:
            raise InputError("config requires 'corpus' and 'output_dir'")

        def sub(key: str, allowed_keys: set[str]) -> dict:
            block = raw.get(key, {})
            if not isinstance(block, dict):
                raise InputError(f"config section {key!r} must be an object")
            extra = set(block) - allowed_keys
            if extra:
                raise InputError(f"unknown keys in config section {key!r}: {sorted(extra)}")
            return block

        train_keys = {"cd_k", "learning_rate", "batch_size", "epochs", "weight_init_sigma", "momentum"}
        ft_keys = {"epochs", "learning_rate", "batch_size", "momentum", "patience"}
        anomaly = sub("anomaly", {"policy", "param", "norm"})
        dbscan_block = sub("dbscan", {"eps", "min_pts", "top_terms"})
        tsne_block = sub("tsne", {"perplexity", "iters"})
        try:
            return cls(
                corpus=str(raw["corpus"]),
                output_dir=str(raw["output_dir"]),
                stop_words=None if raw.get("stop_words") is None else str(raw["stop_words"]),
                max_terms=int(raw.get("max_terms", 1000)),
                h1=int(raw.get("h1", 128)),
                h2=int(raw.get("h2", 64)),
                layer1=TrainConfig(**sub("layer1", train_keys)),
                layer2=TrainConfig(**sub("layer2", train_keys)),
                fine_tune=FineTuneConfig(**sub("fine_tune", ft_keys)),
                holdout_fraction=float(raw.get("holdout_fraction", 0.1)),
                anomaly_policy=str(anomaly.get("policy", POLICY_PERCENTILE)),
                anomaly_param=float(anomaly.get("param", 99.0)),
                error_norm=str(anomaly.get("norm", "l1")),
                eps=dbscan_block.get("eps", "auto") if dbscan_block.get("eps", "auto") == "auto" else float(dbscan_block["eps"]),
                min_pts=int(dbscan_block.get("min_pts", 4)),
                top_terms=int(dbscan_block.get("top_terms", 10)),
                perplexity=float(tsne_block.get("perplexity", 30.0)),
                tsne_iters=int(tsne_block.get("iters", 1000)),
                seed=int(raw.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise InputError(f"invalid config value: {exc}") from exc

    def override(self, **kwargs) -> "PipelineConfig":
        """Return a copy with the given non-None fields replaced."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self


def load_config(path) -> PipelineConfig:
    """Read a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
    return PipelineConfig.from_dict(raw)


# --- atomic artifact writing -------------------------------------------------


def write_text_atomic(path, text: str) -> None:
    """Write to "<path>.partial" then rename, so readers never see a torn file."""
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    with open(partial, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(partial, path)


def csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --- checkpoint --------------------------------------------------------------


def checkpoint_dict(model: DbmModel, config: dict | None = None) -> dict:
    """Checkpoint payload; floats survive the JSON round trip bit-exactly."""
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "vocab": list(model.vocab.terms),
        "layer1": {
            "w": model.layer1.w.tolist(),
            "a": model.layer1.a.tolist(),
            "b": model.layer1.b.tolist(),
        },
        "layer2": {
            "w": model.layer2.w.tolist(),
            "a": model.layer2.a.tolist(),
            "b": model.layer2.b.tolist(),
        },
        "config": config or {},
        "training_log": [[epoch, stage, value] for epoch, stage, value in model.training_log],
    }


def save_checkpoint(model: DbmModel, path, config: dict | None = None) -> None:
    write_text_atomic(path, json_text(checkpoint_dict(model, config)))


def load_checkpoint(path) -> DbmModel:
    """Load a checkpoint; any defect raises CheckpointError, never a partial model."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise CheckpointError(f"checkpoint {path} is not a JSON object")
    version = raw.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format_version {version!r}; "
            f"this build reads version {CHECKPOINT_FORMAT_VERSION}"
        )
    for key in ("vocab", "layer1", "layer2"):
        if key not in raw:
            raise CheckpointError(f"checkpoint {path} is missing {key!r}")
    try:
        vocab = Vocabulary.from_terms(raw["vocab"])
        layer1 = RsmParams(
            w=np.asarray(raw["layer1"]["w"], dtype=np.float64),
            a=np.asarray(raw["layer1"]["a"], dtype=np.float64),
            b=np.asarray(raw["layer1"]["b"], dtype=np.float64),
        )
        layer2 = RbmParams(
            w=np.asarray(raw["layer2"]["w"], dtype=np.float64),
            a=np.asarray(raw["layer2"]["a"], dtype=np.float64),
            b=np.asarray(raw["layer2"]["b"], dtype=np.float64),
        )
        log = [
            (int(epoch), str(stage), float(value))
            for epoch, stage, value in raw.get("training_log", [])
        ]
        model = DbmModel(vocab=vocab, layer1=layer1, layer2=layer2, training_log=log)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {path} is malformed: {exc}") from exc
    if not (model.layer1.all_finite() and model.layer2.all_finite()):
        raise CheckpointError(f"checkpoint {path} contains non-finite parameters")
    return model


# --- SVG scatter -------------------------------------------------------------

_CLUSTER_COLORS = (
    "#1f77b4",  # blue
    "#2ca02c",  # green
    "#d62728",  # red
    "#9467bd",  # purple
    "#8c564b",  # brown
    "#e377c2",  # pink
    "#bcbd22",  # olive
    "#17becf",  # cyan
)
_NOISE_COLOR = "#999999"
_FLAG_COLOR = "#ff7f0e"


def scatter_svg(coords: np.ndarray, labels: np.ndarray, flagged: np.ndarray) -> str:
    """Static SVG scatter: one hue per cluster, gray noise, orange-stroked flags."""
    coords = np.asarray(coords, dtype=np.float64)
    labels = np.asarray(labels)
    flagged = np.asarray(flagged, dtype=bool)
    width, height, margin = 640.0, 480.0, 40.0
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
    ]
    if coords.size:
        x, y = coords[:, 0], coords[:, 1]
        span_x = max(float(x.max() - x.min()), 1e-12)
        span_y = max(float(y.max() - y.min()), 1e-12)
        sx = (width - 2 * margin) / span_x
        sy = (height - 2 * margin) / span_y
        px = margin + (x - x.min()) * sx
        # SVG y grows downward; flip so larger y plots higher.
        py = height - margin - (y - y.min()) * sy
        for i in range(coords.shape[0]):
            label = int(labels[i])
            fill = _NOISE_COLOR if label < 0 else _CLUSTER_COLORS[label % len(_CLUSTER_COLORS)]
            stroke = f' stroke="{_FLAG_COLOR}" stroke-width="2"' if flagged[i] else ""
            radius = 5 if flagged[i] else 3
            lines.append(
                f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="{radius}" '
                f'fill="{fill}" fill-opacity="0.8"{stroke}/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --- pipeline ----------------------------------------------------------------


@contextlib.contextmanager
def _stage(name: str):
    """Wrap unexpected stage failures with the stage name for the CLI."""
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def holdout_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle; the last ceil(fraction*n) indices form the holdout."""
    if n < 2:
        raise InputError("need at least 2 documents to split off a holdout set")
    n_hold = math.ceil(fraction * n)
    if n_hold >= n:
        raise InputError("holdout fraction leaves no training documents")
    order = np.random.default_rng(seed).permutation(n)
    return order[: n - n_hold], order[n - n_hold :]


def derive_seeds(seed: int) -> tuple[int, int, int, int, int]:
    """Per-stage seeds (split, layer1, layer2, fine-tune, t-SNE) from one seed.

    Subcommands use the same derivation, so rerunning a stage standalone with
    the global seed reproduces the pipeline's stream for that stage.
    """
    children = np.random.SeedSequence(seed).spawn(5)
    return tuple(int(c.generate_state(1)[0]) for c in children)


def run_pipeline(config: PipelineConfig, progress=None, stop_after: str | None = None) -> dict:
    """Run every stage and return the manifest dict (also written to disk).

    `progress` is an optional callable taking a stage name, used by the CLI
    to log stage starts. `stop_after` ends the run early after the named
    stage ("vectorize" for ingest-only, "fine_tune" for train-only); partial
    runs return a reduced summary and write no manifest.
    """
    t_start = time.perf_counter()
    out_dir = Path(config.output_dir)

    def note(stage: str) -> None:
        if progress is not None:
            progress(stage)

    with _stage("setup"):
        out_dir.mkdir(parents=True, exist_ok=True)

    seed_split, seed_l1, seed_l2, seed_ft, seed_tsne = derive_seeds(config.seed)

    note("ingest")
    with _stage("ingest"):
        docs = read_jsonl(config.corpus)
        if not docs:
            raise InputError(f"corpus {config.corpus} contains no documents")
        stop_words = load_stop_words(config.stop_words) if config.stop_words else None

    note("vectorize")
    with _stage("vectorize"):
        vocab = build_vocabulary(docs, config.max_terms, stop_words)
        if len(vocab) == 0:
            raise InputError("no terms survived tokenization; vocabulary is empty")
        vectors = [vectorize(doc, vocab, stop_words) for doc in docs]
        write_text_atomic(out_dir / "vocab.json", json_text(list(vocab.terms)))
    if stop_after == "vectorize":
        return {"n_documents": len(docs), "vocab_size": len(vocab)}

    note("pretrain")
    with _stage("pretrain"):
        train_idx, hold_idx = holdout_split(len(vectors), config.holdout_fraction, seed_split)
        train_vecs = [vectors[i] for i in train_idx]
        hold_vecs = [vectors[i] for i in hold_idx]
        cfg1 = replace(config.layer1, seed=seed_l1)
        cfg2 = replace(config.layer2, seed=seed_l2)
        model = pretrain(
            train_vecs, cfg1, cfg2, config.h1, config.h2, vocab=vocab, init_visible_bias=True
        )

    note("fine_tune")
    with _stage("fine_tune"):
        ft = config.fine_tune
        ft_cfg = TrainConfig(
            learning_rate=ft.learning_rate,
            batch_size=ft.batch_size,
            epochs=ft.epochs,
            momentum=ft.momentum,
            seed=seed_ft,
        )
        model = fine_tune(model, train_vecs, hold_vecs, ft_cfg, patience=ft.patience)
        save_checkpoint(model, out_dir / "model.ckpt.json", config.to_dict())
    if stop_after == "fine_tune":
        return {
            "n_documents": len(docs),
            "vocab_size": len(vocab),
            "holdout_doc_ids": [vectors[i].doc_id for i in hold_idx],
        }

    note("encode")
    with _stage("encode"):
        v, d, doc_ids = counts_to_matrix(vectors, len(vocab))
        latent = encode_matrix(v, d, model)
        if not np.all(np.isfinite(latent)):
            raise NumericError("latent embedding contains non-finite values")
        header = ["doc_id"] + [f"z{j}" for j in range(latent.shape[1])]
        rows = [header] + [
            [doc_ids[i]] + [repr(float(zj)) for zj in latent[i]] for i in range(latent.shape[0])
        ]
        write_text_atomic(out_dir / "embeddings.csv", csv_text(rows))

    note("dbscan")
    with _stage("dbscan"):
        eps = auto_eps(latent, config.min_pts) if config.eps == "auto" else float(config.eps)
        clusters = dbscan(latent, eps, config.min_pts)
        rows = [["doc_id", "cluster"]] + [
            [doc_ids[i], int(clusters.labels[i])] for i in range(len(doc_ids))
        ]
        write_text_atomic(out_dir / "clusters.csv", csv_text(rows))
        terms = cluster_top_terms(clusters, vectors, vocab, config.top_terms)
        write_text_atomic(
            out_dir / "cluster_terms.json",
            json_text({str(label): terms[label] for label in sorted(terms)}),
        )

    note("tsne")
    with _stage("tsne"):
        embedding = tsne(
            latent, perplexity=config.perplexity, iters=config.tsne_iters, seed=seed_tsne
        )

    note("score")
    with _stage("score"):
        scores = score_corpus(model, vectors, norm=config.error_norm)

    note("select")
    with _stage("select"):
        report = select_minority(scores, config.anomaly_policy, config.anomaly_param)

    note("emit")
    with _stage("emit"):
        flagged_ids = set(report.flagged_ids)
        flagged = np.array([doc_id in flagged_ids for doc_id in doc_ids])
        rows = [["doc_id", "x", "y", "cluster", "flagged"]]
        for i, doc_id in enumerate(doc_ids):
            rows.append(
                [
                    doc_id,
                    repr(float(embedding.coords[i, 0])),
                    repr(float(embedding.coords[i, 1])),
                    int(clusters.labels[i]),
                    str(bool(flagged[i])).lower(),
                ]
            )
        write_text_atomic(out_dir / "tsne.csv", csv_text(rows))
        write_text_atomic(
            out_dir / "scatter.svg", scatter_svg(embedding.coords, clusters.labels, flagged)
        )
        write_text_atomic(out_dir / "anomaly_report.csv", csv_text(report_csv_rows(report)))
        write_text_atomic(out_dir / "anomaly_report.json", json_text(report.to_dict()))

        manifest = {
            "config": config.to_dict(),
            "seed": config.seed,
            "versions": {
                "package": __version__,
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "checkpoint_format": CHECKPOINT_FORMAT_VERSION,
            },
            "wall_time_seconds": time.perf_counter() - t_start,
            "n_documents": len(docs),
            "vocab_size": len(vocab),
            "holdout_doc_ids": [vectors[i].doc_id for i in hold_idx],
            "resolved_eps": eps,
            "n_clusters": clusters.n_clusters,
            "n_flagged": len(flagged_ids),
            "final_kl": embedding.kl_trace[-1][1],
            "artifacts": [
                "vocab.json",
                "model.ckpt.json",
                "embeddings.csv",
                "clusters.csv",
                "cluster_terms.json",
                "tsne.csv",
                "scatter.svg",
                "anomaly_report.csv",
                "anomaly_report.json",
                "run_manifest.json",
            ],
        }
        write_text_atomic(out_dir / "run_manifest.json", json_text(manifest))
    return manifest


# --- standalone stage runners (work from an existing checkpoint) -------------


def _load_inputs(corpus_path, checkpoint_path, stop_words_path):
    """Shared ingest+vectorize against a checkpoint's vocabulary."""
    with _stage("ingest"):
        docs = read_jsonl(corpus_path)
        if not docs:
            raise InputError(f"corpus {corpus_path} contains no documents")
        stop_words = load_stop_words(stop_words_path) if stop_words_path else None
        model = load_checkpoint(checkpoint_path)
    with _stage("vectorize"):
        vectors = [vectorize(doc, model.vocab, stop_words) for doc in docs]
    return docs, model, vectors


def run_score(
    corpus_path,
    checkpoint_path,
    out_dir,
    policy: str = POLICY_PERCENTILE,
    param: float = 99.0,
    norm: str = "l1",
    stop_words_path=None,
    progress=None,
) -> dict:
    """Score a corpus against a saved model and write the anomaly reports."""
    out_dir = Path(out_dir)
    with _stage("setup"):
        out_dir.mkdir(parents=True, exist_ok=True)
    _, model, vectors = _load_inputs(corpus_path, checkpoint_path, stop_words_path)
    if progress is not None:
        progress("score")
    with _stage("score"):
        scores = score_corpus(model, vectors, norm=norm)
    with _stage("select"):
        report = select_minority(scores, policy, param)
    with _stage("emit"):
        write_text_atomic(out_dir / "anomaly_report.csv", csv_text(report_csv_rows(report)))
        write_text_atomic(out_dir / "anomaly_report.json", json_text(report.to_dict()))
    return {"n_documents": len(vectors), "n_flagged": len(report.flagged_ids), "threshold": report.threshold}


def run_cluster(
    corpus_path,
    checkpoint_path,
    out_dir,
    eps: float | str = "auto",
    min_pts: int = 4,
    top_terms: int = 10,
    stop_words_path=None,
    progress=None,
) -> dict:
    """Encode a corpus with a saved model, cluster it, and write the artifacts."""
    out_dir = Path(out_dir)
    with _stage("setup"):
        out_dir.mkdir(parents=True, exist_ok=True)
    _, model, vectors = _load_inputs(corpus_path, checkpoint_path, stop_words_path)
    if progress is not None:
        progress("encode")
    with _stage("encode"):
        v, d, doc_ids = counts_to_matrix(vectors, model.n_visible)
        latent = encode_matrix(v, d, model)
        header = ["doc_id"] + [f"z{j}" for j in range(latent.shape[1])]
        rows = [header] + [
            [doc_ids[i]] + [repr(float(zj)) for zj in latent[i]] for i in range(latent.shape[0])
        ]
        write_text_atomic(out_dir / "embeddings.csv", csv_text(rows))
    if progress is not None:
        progress("dbscan")
    with _stage("dbscan"):
        resolved = auto_eps(latent, min_pts) if eps == "auto" else float(eps)
        clusters = dbscan(latent, resolved, min_pts)
        rows = [["doc_id", "cluster"]] + [
            [doc_ids[i], int(clusters.labels[i])] for i in range(len(doc_ids))
        ]
        write_text_atomic(out_dir / "clusters.csv", csv_text(rows))
        terms = cluster_top_terms(clusters, vectors, model.vocab, top_terms)
        write_text_atomic(
            out_dir / "cluster_terms.json",
            json_text({str(label): terms[label] for label in sorted(terms)}),
        )
    return {"eps": resolved, "n_clusters": clusters.n_clusters}


def _read_csv_column(path: Path, key: str, value: str) -> dict[str, str]:
    """doc_id -> column map from a previously emitted artifact, {} if absent."""
    if not path.exists():
        return {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return {row[key]: row[value] for row in csv.DictReader(fh)}


def run_embed(
    corpus_path,
    checkpoint_path,
    out_dir,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
    stop_words_path=None,
    progress=None,
) -> dict:
    """Project a corpus to 2-D and write tsne.csv and scatter.svg.

    Cluster and flag columns are joined from clusters.csv and
    anomaly_report.csv in the output directory when those exist; otherwise
    points are treated as unclustered (-1) and unflagged.
    """
    out_dir = Path(out_dir)
    with _stage("setup"):
        out_dir.mkdir(parents=True, exist_ok=True)
    _, model, vectors = _load_inputs(corpus_path, checkpoint_path, stop_words_path)
    if progress is not None:
        progress("encode")
    with _stage("encode"):
        v, d, doc_ids = counts_to_matrix(vectors, model.n_visible)
        latent = encode_matrix(v, d, model)
    if progress is not None:
        progress("tsne")
    with _stage("tsne"):
        seed_tsne = derive_seeds(seed)[4]
        embedding = tsne(latent, perplexity=perplexity, iters=iters, seed=seed_tsne)
    with _stage("emit"):
        cluster_by_id = _read_csv_column(out_dir / "clusters.csv", "doc_id", "cluster")
        flag_by_id = _read_csv_column(out_dir / "anomaly_report.csv", "doc_id", "flagged")
        labels = np.array([int(cluster_by_id.get(doc_id, -1)) for doc_id in doc_ids])
        flagged = np.array([flag_by_id.get(doc_id) == "true" for doc_id in doc_ids])
        rows = [["doc_id", "x", "y", "cluster", "flagged"]]
        for i, doc_id in enumerate(doc_ids):
            rows.append(
                [
                    doc_id,
                    repr(float(embedding.coords[i, 0])),
                    repr(float(embedding.coords[i, 1])),
                    int(labels[i]),
                    str(bool(flagged[i])).lower(),
                ]
            )
        write_text_atomic(out_dir / "tsne.csv", csv_text(rows))
        write_text_atomic(out_dir / "scatter.svg", scatter_svg(embedding.coords, labels, flagged))
    return {"final_kl": embedding.kl_trace[-1][1]}


def run_report(out_dir, policy: str, param: float, progress=None) -> dict:
    """Re-threshold existing scores without re-scoring the corpus."""
    out_dir = Path(out_dir)
    csv_path = out_dir / "anomaly_report.csv"
    with _stage("select"):
        if not csv_path.exists():
            raise InputError(f"{csv_path} not found; run 'score' or 'pipeline' first")
        with open(csv_path, "r", encoding="utf-8", newline="") as fh:
            try:
                scores = [
                    Score(row["doc_id"], float(row["epsilon"]), float(row["epsilon_normalized"]))
                    for row in csv.DictReader(fh)
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"{csv_path} is not a valid anomaly report: {exc}") from exc
        report = select_minority(scores, policy, param)
    with _stage("emit"):
        write_text_atomic(out_dir / "anomaly_report.csv", csv_text(report_csv_rows(report)))
        write_text_atomic(out_dir / "anomaly_report.json", json_text(report.to_dict()))
    return {"n_flagged": len(report.flagged_ids), "threshold": report.threshold}
