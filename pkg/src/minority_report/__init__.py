"""Document anomaly detection with a two-layer Boltzmann document model.

Train a replicated-softmax first layer and a binary second layer on
bag-of-words counts, fine-tune the stack as a tied-weight autoencoder, and
surface "minority reports": documents whose reconstruction error is
anomalously high. Latent embeddings feed DBSCAN clustering and an exact
t-SNE projection for 2-D scatter plots.
"""

__version__ = "0.1.0"

from .anomaly import (
    POLICY_MEAN_K_SIGMA,
    POLICY_PERCENTILE,
    AnomalyReport,
    Score,
    score_corpus,
    select_minority,
)
from .cluster import DBSCAN, ClusterLabels, auto_eps, cluster_top_terms, dbscan
from .corpus import (
    CountVector,
    Document,
    Vocabulary,
    WordCountVectorizer,
    build_vocabulary,
    read_jsonl,
    tokenize_lemmatize,
    vectorize,
)
from .dbm import (
    DbmModel,
    DocumentDBM,
    decode,
    encode,
    fine_tune,
    pretrain,
    reconstruction_error,
)
from .errors import (
    CheckpointError,
    InputError,
    MinorityReportError,
    NumericError,
    PipelineError,
)
from .pipeline import (
    PipelineConfig,
    load_checkpoint,
    run_pipeline,
    save_checkpoint,
)
from .rsm import RsmParams, TrainConfig, sigma, train_rsm
from .tsne import Embedding2D, ExactTSNE, calibrate_affinities, tsne

__all__ = [
    "__version__",
    "AnomalyReport",
    "CheckpointError",
    "ClusterLabels",
    "CountVector",
    "DBSCAN",
    "DbmModel",
    "Document",
    "DocumentDBM",
    "Embedding2D",
    "ExactTSNE",
    "InputError",
    "MinorityReportError",
    "NumericError",
    "PipelineConfig",
    "PipelineError",
    "POLICY_MEAN_K_SIGMA",
    "POLICY_PERCENTILE",
    "RsmParams",
    "Score",
    "TrainConfig",
    "Vocabulary",
    "WordCountVectorizer",
    "auto_eps",
    "build_vocabulary",
    "calibrate_affinities",
    "cluster_top_terms",
    "dbscan",
    "decode",
    "encode",
    "fine_tune",
    "load_checkpoint",
    "pretrain",
    "read_jsonl",
    "reconstruction_error",
    "run_pipeline",
    "save_checkpoint",
    "score_corpus",
    "select_minority",
    "sigma",
    "tokenize_lemmatize",
    "train_rsm",
    "tsne",
    "vectorize",
]
