"""Command-line interface.

Subcommands mirror the pipeline stages so each can be rerun from a saved
checkpoint:

    ingest    read a corpus, build the vocabulary, write vocab.json
    train     ingest + pretrain + fine-tune, write model.ckpt.json
    score     score a corpus against a checkpoint, write anomaly reports
    cluster   encode + DBSCAN, write embeddings/clusters/cluster_terms
    embed     encode + t-SNE, write tsne.csv and scatter.svg
    report    re-threshold an existing anomaly report
    pipeline  run everything end to end

Options come from a JSON --config file when given; explicit flags override
config values. Exit codes: 0 success, 2 input error, 3 numeric failure,
4 I/O error. With --threads 1 a rerun is bit-reproducible.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import replace
from pathlib import Path

from threadpoolctl import threadpool_limits

from .anomaly import POLICY_MEAN_K_SIGMA, POLICY_PERCENTILE
from .errors import InputError, NumericError, PipelineError
from .pipeline import (
    PipelineConfig,
    load_config,
    run_cluster,
    run_embed,
    run_pipeline,
    run_report,
    run_score,
)


def _progress(stage: str) -> None:
    print(f"[{stage}]", file=sys.stderr)


def _eps_value(text: str):
    if text == "auto":
        return "auto"
    value = float(text)  # argparse converts ValueError into a usage error
    return value


def _resolve_policy(args) -> tuple[str | None, float | None]:
    """Map --policy/--percentile/--k-sigma flags onto (policy, param)."""
    percentile = getattr(args, "percentile", None)
    k_sigma = getattr(args, "k_sigma", None)
    if percentile is not None and k_sigma is not None:
        raise InputError("--percentile and --k-sigma are mutually exclusive")
    policy = getattr(args, "policy", None)
    param = None
    if percentile is not None:
        policy = POLICY_PERCENTILE
        param = percentile
    elif k_sigma is not None:
        policy = POLICY_MEAN_K_SIGMA
        param = k_sigma
    return policy, param


def _build_config(args) -> PipelineConfig:
    """Config file (if any) plus flag overrides, validated as a whole."""
    try:
        if getattr(args, "config", None):
            cfg = load_config(args.config)
        else:
            corpus = getattr(args, "corpus", None)
            output = getattr(args, "output", None)
            if corpus is None or output is None:
                raise InputError(
                    "either --config or both --corpus and --output must be given"
                )
            cfg = PipelineConfig(corpus=corpus, output_dir=output)

        policy, param = _resolve_policy(args)
        cfg = cfg.override(
            corpus=getattr(args, "corpus", None),
            output_dir=getattr(args, "output", None),
            stop_words=getattr(args, "stop_words", None),
            max_terms=getattr(args, "max_terms", None),
            h1=getattr(args, "h1", None),
            h2=getattr(args, "h2", None),
            holdout_fraction=getattr(args, "holdout_fraction", None),
            anomaly_policy=policy,
            anomaly_param=param,
            error_norm=getattr(args, "norm", None),
            eps=getattr(args, "eps", None),
            min_pts=getattr(args, "min_pts", None),
            top_terms=getattr(args, "top_terms", None),
            perplexity=getattr(args, "perplexity", None),
            tsne_iters=getattr(args, "iters", None),
            seed=getattr(args, "seed", None),
        )
        epochs = getattr(args, "epochs", None)
        if epochs is not None:
            cfg = replace(
                cfg,
                layer1=replace(cfg.layer1, epochs=epochs),
                layer2=replace(cfg.layer2, epochs=epochs),
            )
        ft_epochs = getattr(args, "fine_tune_epochs", None)
        if ft_epochs is not None:
            cfg = replace(cfg, fine_tune=replace(cfg.fine_tune, epochs=ft_epochs))
        return cfg
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _checkpoint_path(args, cfg: PipelineConfig) -> str:
    explicit = getattr(args, "checkpoint", None)
    return explicit if explicit else str(Path(cfg.output_dir) / "model.ckpt.json")


# --- subcommand handlers ------------------------------------------------------


def cmd_ingest(args) -> dict:
    return run_pipeline(_build_config(args), progress=_progress, stop_after="vectorize")


def cmd_train(args) -> dict:
    return run_pipeline(_build_config(args), progress=_progress, stop_after="fine_tune")


def cmd_pipeline(args) -> dict:
    return run_pipeline(_build_config(args), progress=_progress)


def cmd_score(args) -> dict:
    cfg = _build_config(args)
    return run_score(
        cfg.corpus,
        _checkpoint_path(args, cfg),
        cfg.output_dir,
        policy=cfg.anomaly_policy,
        param=cfg.anomaly_param,
        norm=cfg.error_norm,
        stop_words_path=cfg.stop_words,
        progress=_progress,
    )


def cmd_cluster(args) -> dict:
    cfg = _build_config(args)
    return run_cluster(
        cfg.corpus,
        _checkpoint_path(args, cfg),
        cfg.output_dir,
        eps=cfg.eps,
        min_pts=cfg.min_pts,
        top_terms=cfg.top_terms,
        stop_words_path=cfg.stop_words,
        progress=_progress,
    )


def cmd_embed(args) -> dict:
    cfg = _build_config(args)
    return run_embed(
        cfg.corpus,
        _checkpoint_path(args, cfg),
        cfg.output_dir,
        perplexity=cfg.perplexity,
        iters=cfg.tsne_iters,
        seed=cfg.seed,
        stop_words_path=cfg.stop_words,
        progress=_progress,
    )


def cmd_report(args) -> dict:
    policy, param = _resolve_policy(args)
    output = getattr(args, "output", None)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        output = output or cfg.output_dir
        policy = policy or cfg.anomaly_policy
        param = param if param is not None else cfg.anomaly_param
    if output is None:
        raise InputError("either --config or --output must be given")
    policy = policy or POLICY_PERCENTILE
    param = param if param is not None else 99.0
    return run_report(output, policy, param, progress=_progress)


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minority-report",
        description="Train a document model, flag poorly reconstructed documents, "
        "and emit cluster/scatter artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--threads", type=int, help="cap math-library threads (1 = bit-reproducible)")

    io_opts = argparse.ArgumentParser(add_help=False)
    io_opts.add_argument("--corpus", help="JSONL corpus: one {id, text} object per line")
    io_opts.add_argument("--output", help="output directory for artifacts")
    io_opts.add_argument("--stop-words", help="newline-delimited stop-word file")

    vocab_opts = argparse.ArgumentParser(add_help=False)
    vocab_opts.add_argument("--max-terms", type=int, help="vocabulary size cap (default 1000)")

    train_opts = argparse.ArgumentParser(add_help=False)
    train_opts.add_argument("--h1", type=int, help="first hidden layer size (default 128)")
    train_opts.add_argument("--h2", type=int, help="latent layer size (default 64)")
    train_opts.add_argument("--epochs", type=int, help="pretraining epochs for both layers")
    train_opts.add_argument("--fine-tune-epochs", type=int, help="autoencoder fine-tuning epochs")
    train_opts.add_argument(
        "--holdout-fraction", type=float, help="held-out fraction for early stopping (default 0.1)"
    )
    train_opts.add_argument("--seed", type=int, help="global seed (default 0)")

    ckpt_opts = argparse.ArgumentParser(add_help=False)
    ckpt_opts.add_argument(
        "--checkpoint", help="model checkpoint path (default <output>/model.ckpt.json)"
    )

    anomaly_opts = argparse.ArgumentParser(add_help=False)
    anomaly_opts.add_argument(
        "--policy", choices=[POLICY_PERCENTILE, POLICY_MEAN_K_SIGMA], help="selection rule"
    )
    anomaly_opts.add_argument(
        "--percentile", type=float, help="flag documents above this score percentile (default 99)"
    )
    anomaly_opts.add_argument(
        "--k-sigma", type=float, help="flag documents above mean + k standard deviations"
    )
    anomaly_opts.add_argument("--norm", choices=["l1", "l2"], help="reconstruction distance (default l1)")

    cluster_opts = argparse.ArgumentParser(add_help=False)
    cluster_opts.add_argument(
        "--eps", type=_eps_value, help="DBSCAN radius, or 'auto' for the distance heuristic"
    )
    cluster_opts.add_argument("--min-pts", type=int, help="DBSCAN density threshold (default 4)")
    cluster_opts.add_argument("--top-terms", type=int, help="terms listed per cluster (default 10)")

    tsne_opts = argparse.ArgumentParser(add_help=False)
    tsne_opts.add_argument("--perplexity", type=float, help="t-SNE perplexity (default 30)")
    tsne_opts.add_argument("--iters", type=int, help="t-SNE iterations (default 1000)")

    p = sub.add_parser(
        "ingest", parents=[common, io_opts, vocab_opts], help="build and save the vocabulary"
    )
    p.add_argument("--seed", type=int, help="global seed (default 0)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser(
        "train",
        parents=[common, io_opts, vocab_opts, train_opts],
        help="pretrain and fine-tune the model, saving a checkpoint",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "score",
        parents=[common, io_opts, ckpt_opts, anomaly_opts],
        help="score documents against a checkpoint and write the anomaly report",
    )
    p.set_defaults(func=cmd_score)

    p = sub.add_parser(
        "cluster",
        parents=[common, io_opts, ckpt_opts, cluster_opts],
        help="embed documents and cluster them with DBSCAN",
    )
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser(
        "embed",
        parents=[common, io_opts, ckpt_opts, tsne_opts],
        help="project embeddings to 2-D and draw the scatter",
    )
    p.add_argument("--seed", type=int, help="global seed (default 0)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser(
        "report",
        parents=[common, anomaly_opts],
        help="re-threshold an existing anomaly report",
    )
    p.add_argument("--output", help="directory holding anomaly_report.csv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser(
        "pipeline",
        parents=[
            common,
            io_opts,
            vocab_opts,
            train_opts,
            anomaly_opts,
            cluster_opts,
            tsne_opts,
        ],
        help="run every stage end to end",
    )
    p.set_defaults(func=cmd_pipeline)

    return parser


def _thread_limit(threads: int | None):
    if threads is None:
        return contextlib.nullcontext()
    if threads < 1:
        raise InputError("--threads must be >= 1")
    return threadpool_limits(limits=threads)


def _exit_code(exc: BaseException) -> int | None:
    if isinstance(exc, InputError):
        return 2
    if isinstance(exc, NumericError):
        return 3
    if isinstance(exc, OSError):
        return 4
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit(getattr(args, "threads", None)):
            summary = args.func(args)
    except PipelineError as exc:
        code = _exit_code(exc.cause)
        if code is None:
            raise  # a genuine bug: keep the traceback
        print(f"error: {exc}", file=sys.stderr)
        return code
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
