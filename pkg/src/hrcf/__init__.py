"""Hyperbolic graph collaborative filtering on the Lorentz manifold."""

from .encoder import (
    EmbeddingTable,
    EncoderOutput,
    aggregate_once,
    encode,
    init_embeddings,
    load_checkpoint,
    pairwise_shrink_metric,
    save_checkpoint,
)
from .errors import (
    ConfigError,
    ConstraintError,
    DataError,
    DegenerateEmbeddingError,
    EmptyDatasetError,
    HrcfError,
    NumericAbort,
    ParseError,
)
from .evaluate import EvalResult, evaluate, ndcg_at_k, rank_items, recall_at_k
from .graph import (
    InteractionGraph,
    InteractionRecord,
    SyntheticGraphSpec,
    generate_synthetic,
    head_tail_partition,
    load_interactions,
    split_and_index,
)
from .manifold import (
    distance_ratio_diagnostic,
    exp_origin,
    geodesic_distance,
    log_origin,
    lorentz_inner,
    origin,
)
from .objective import (
    LossReport,
    TripletBatch,
    align_root,
    compute_root,
    forward_embeddings,
    loss_and_grad,
    margin_loss,
    reg_loss,
    sample_triplets,
    score,
    total_loss,
)
from .optim import OptimizerState, RiemannianSGD, apply_weight_decay, riemannian_grad, rsgd_step
from .train import RunRecord, TrainConfig, ablate_lambdas, ablate_orders, train

__version__ = "0.1.0"
