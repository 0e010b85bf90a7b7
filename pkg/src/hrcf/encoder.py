"""Multi-order tangent-space aggregation over the bipartite graph.

Node parameters are Gaussian tangent rows at the origin (the first
hyperboloid coordinate is implicitly 0 and never stored). Encoding runs
`num_layers` rounds of row-normalized neighbor averaging, sum-pools the
per-layer states, and maps the pooled rows onto the hyperboloid.

Aggregation updates users and items simultaneously from the previous
layer's values, which is the matrix form X^{l+1} = P X^l with P the
row-normalized bipartite operator. There is no linear transform,
nonlinearity, or self-term; rows without neighbors aggregate to zero.
"""

from dataclasses import dataclass

import numpy as np

from . import manifold
from .errors import DataError
from .graph import InteractionGraph


@dataclass
class EmbeddingTable:
    """Trainable tangent parameters, one n-vector per user and item."""

    user_params: np.ndarray  # (U, n) float64
    item_params: np.ndarray  # (I, n)

    def __post_init__(self):
        self.user_params = np.asarray(self.user_params, dtype=float)
        self.item_params = np.asarray(self.item_params, dtype=float)
        if self.user_params.ndim != 2 or self.item_params.ndim != 2:
            raise ValueError("embedding tables must be 2-D")
        if self.user_params.shape[1] != self.item_params.shape[1]:
            raise ValueError("user and item dimensions differ")

    @property
    def dimension(self) -> int:
        return self.user_params.shape[1]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.user_params.copy(), self.item_params.copy())


@dataclass
class EncoderOutput:
    """Pooled tangent rows and their hyperboloid images."""

    user_tangent_sum: np.ndarray  # (U, n)
    item_tangent_sum: np.ndarray  # (I, n)
    user_hyperbolic: np.ndarray   # (U, n+1)
    item_hyperbolic: np.ndarray   # (I, n+1)

    def stacked_tangent(self) -> np.ndarray:
        return np.vstack([self.user_tangent_sum, self.item_tangent_sum])


def init_embeddings(num_users: int, num_items: int, dim: int, sigma: float, seed) -> EmbeddingTable:
    """I.i.d. Normal(0, sigma^2) tangent rows; deterministic under seed."""
    if dim < 2:
        raise ValueError(f"embedding dimension must be >= 2, got {dim}")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    return EmbeddingTable(
        user_params=sigma * rng.standard_normal((num_users, dim)),
        item_params=sigma * rng.standard_normal((num_items, dim)),
    )


def aggregate_once(graph: InteractionGraph, user_in: np.ndarray, item_in: np.ndarray):
    """One round of neighbor averaging: users from items and items from users."""
    if user_in.shape[0] != graph.num_users or item_in.shape[0] != graph.num_items:
        raise ValueError("input row counts do not match the graph")
    if user_in.shape[1] != item_in.shape[1]:
        raise ValueError("user and item dimensions differ")
    return graph.norm_user_item() @ item_in, graph.norm_item_user() @ user_in


def aggregate_transpose(graph: InteractionGraph, user_grad: np.ndarray, item_grad: np.ndarray):
    """Adjoint of aggregate_once, for backpropagation."""
    return (
        graph.norm_item_user().T @ item_grad,
        graph.norm_user_item().T @ user_grad,
    )


def tangent_sums(
    graph: InteractionGraph,
    user_params: np.ndarray,
    item_params: np.ndarray,
    num_layers: int,
    include_layer0: bool = False,
):
    """Sum-pooled tangent states after num_layers aggregation rounds.

    Pools layers 1..num_layers; the initial layer joins the pool only when
    include_layer0 is set.
    """
    if num_layers < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    u, i = user_params, item_params
    user_sum = user_params.copy() if include_layer0 else np.zeros_like(user_params)
    item_sum = item_params.copy() if include_layer0 else np.zeros_like(item_params)
    for _ in range(num_layers):
        u, i = aggregate_once(graph, u, i)
        user_sum += u
        item_sum += i
    return user_sum, item_sum


def pool_backward(
    graph: InteractionGraph,
    user_grad: np.ndarray,
    item_grad: np.ndarray,
    num_layers: int,
    include_layer0: bool = False,
):
    """Adjoint of tangent_sums: gradients w.r.t. the layer-0 parameters."""
    gu_acc = user_grad.copy() if include_layer0 else np.zeros_like(user_grad)
    gi_acc = item_grad.copy() if include_layer0 else np.zeros_like(item_grad)
    gu, gi = user_grad, item_grad
    for _ in range(num_layers):
        gu, gi = aggregate_transpose(graph, gu, gi)
        gu_acc += gu
        gi_acc += gi
    return gu_acc, gi_acc


def encode(
    graph: InteractionGraph,
    table: EmbeddingTable,
    num_layers: int,
    include_layer0: bool = False,
) -> EncoderOutput:
    """Full encoder pass; the hyperbolic rows are the raw (unaligned) images.

    The training objective re-centers the pooled rows before the exponential
    map; see hrcf.objective.forward_embeddings for that variant.
    """
    user_sum, item_sum = tangent_sums(
        graph, table.user_params, table.item_params, num_layers, include_layer0
    )
    return EncoderOutput(
        user_tangent_sum=user_sum,
        item_tangent_sum=item_sum,
        user_hyperbolic=manifold.exp_origin_spatial(user_sum),
        item_hyperbolic=manifold.exp_origin_spatial(item_sum),
    )


def pairwise_shrink_metric(graph: InteractionGraph, features: np.ndarray) -> float:
    """Edge-wise spread of node features, the quantity aggregation shrinks.

    `features` stacks all U + I node rows, users first. Returns the sum of
    squared Euclidean row differences over directed train edges (each
    undirected edge counts once per direction). One aggregate_once round
    never increases this value.
    """
    if features.shape[0] != graph.num_nodes:
        raise ValueError(
            f"feature matrix must cover all {graph.num_nodes} nodes, got {features.shape[0]}"
        )
    u = graph.train_edges[:, 0]
    i = graph.train_edges[:, 1] + graph.num_users
    diff = features[u] - features[i]
    return float(2.0 * np.sum(diff * diff))


CHECKPOINT_MAGIC = "HRCF-CKPT"
CHECKPOINT_VERSION = "v1"


def save_checkpoint(table: EmbeddingTable, path) -> None:
    """Write tangent parameters as text with full round-trip precision."""
    U, n = table.user_params.shape
    I = table.item_params.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} {U} {I} {n}\n")
        for row in table.user_params:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for row in table.item_params:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_checkpoint(path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != CHECKPOINT_MAGIC or header[1] != CHECKPOINT_VERSION:
            raise DataError(f"not a {CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} checkpoint: {path}")
        U, I, n = (int(v) for v in header[2:])
        data = np.loadtxt(fh, dtype=float, max_rows=U + I).reshape(U + I, -1)
    if data.shape != (U + I, n):
        raise DataError(f"checkpoint shape mismatch in {path}: got {data.shape}, header says {(U + I, n)}")
    return EmbeddingTable(user_params=data[:U], item_params=data[U:])
