"""Training objective: margin ranking plus the origin-aware norm penalty.

The forward pass pools tangent states (hrcf.encoder), subtracts the
embedding midpoint from every row so the population root sits at the
hyperbolic origin, maps the centered rows onto the hyperboloid, and scores
user-item pairs by negative squared geodesic distance. The combined loss is

    total = margin_loss + reg_lambda * reg_loss,

where reg_loss is the inverse square root of the mean squared centered
tangent norm; minimizing it pushes the population away from the origin.

Gradients are hand-derived closed forms (no autodiff); every path is
covered by the finite-difference oracle in the test suite.
"""

from dataclasses import dataclass

import numpy as np

from . import manifold
from .encoder import EmbeddingTable, EncoderOutput, pool_backward, tangent_sums
from .errors import DataError, DegenerateEmbeddingError
from .graph import InteractionGraph


@dataclass
class TripletBatch:
    """Parallel index arrays of (user, positive item, negative item)."""

    users: np.ndarray
    pos_items: np.ndarray
    neg_items: np.ndarray

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=np.int64)
        self.pos_items = np.asarray(self.pos_items, dtype=np.int64)
        self.neg_items = np.asarray(self.neg_items, dtype=np.int64)
        if not (len(self.users) == len(self.pos_items) == len(self.neg_items)):
            raise ValueError("triplet arrays must have equal length")

    def __len__(self) -> int:
        return len(self.users)

    def slice(self, idx) -> "TripletBatch":
        return TripletBatch(self.users[idx], self.pos_items[idx], self.neg_items[idx])


@dataclass
class LossReport:
    margin_loss: float
    reg_loss: float
    total: float
    mean_sq_norm: float


def compute_root(tangent_rows: np.ndarray) -> np.ndarray:
    """Arithmetic mean of all rows: the embedding midpoint."""
    tangent_rows = np.asarray(tangent_rows, dtype=float)
    if tangent_rows.shape[0] < 1:
        raise ValueError("need at least one row")
    return tangent_rows.mean(axis=0)


def align_root(tangent_rows: np.ndarray, root: np.ndarray) -> np.ndarray:
    """Subtract the root from every row, centering the population at the origin."""
    return tangent_rows - root


def reg_loss(aligned: np.ndarray):
    """Mean squared row norm and its inverse square root.

    Returns (mean_sq_norm, penalty). Raises DegenerateEmbeddingError when
    every row is exactly zero (collapsed initialization).
    """
    mean_sq = float(np.mean(np.sum(aligned * aligned, axis=1)))
    if mean_sq == 0.0:
        raise DegenerateEmbeddingError("all aligned embeddings are zero")
    return mean_sq, mean_sq ** -0.5


def score(user_point: np.ndarray, item_point: np.ndarray) -> np.ndarray:
    """Preference score: negative squared geodesic distance (higher is better)."""
    d = manifold.geodesic_distance(user_point, item_point)
    return -(d * d)


def margin_loss(
    batch: TripletBatch,
    user_points: np.ndarray,
    item_points: np.ndarray,
    margin: float,
) -> float:
    """Mean hinge over triplets: max(d2(u,i) - d2(u,j) + margin, 0)."""
    u = user_points[batch.users]
    d_pos = manifold.geodesic_distance(u, item_points[batch.pos_items])
    d_neg = manifold.geodesic_distance(u, item_points[batch.neg_items])
    hinge = np.maximum(d_pos * d_pos - d_neg * d_neg + margin, 0.0)
    return float(hinge.mean())


def sample_triplets(graph: InteractionGraph, rng: np.random.Generator) -> TripletBatch:
    """One uniform negative per train positive, rejecting the user's train items."""
    users = graph.train_edges[:, 0].copy()
    pos = graph.train_edges[:, 1].copy()
    if np.any(graph.user_degrees >= graph.num_items):
        full = np.flatnonzero(graph.user_degrees >= graph.num_items)
        raise DataError(f"users {full[:5].tolist()} interact with every item; no negatives exist")
    membership = graph.train_membership()
    neg = rng.integers(0, graph.num_items, size=len(users))
    bad = np.asarray(membership[users, neg]).ravel()
    while bad.any():
        idx = np.flatnonzero(bad)
        neg[idx] = rng.integers(0, graph.num_items, size=len(idx))
        bad[idx] = np.asarray(membership[users[idx], neg[idx]]).ravel()
    return TripletBatch(users, pos, neg)


def forward_embeddings(
    graph: InteractionGraph,
    table: EmbeddingTable,
    num_layers: int,
    include_layer0: bool = False,
) -> EncoderOutput:
    """Encoder pass with root alignment, as used for training and evaluation.

    The returned tangent sums are centered (their mean is the zero vector)
    and the hyperbolic rows are the exponential images of the centered sums.
    """
    user_sum, item_sum = tangent_sums(
        graph, table.user_params, table.item_params, num_layers, include_layer0
    )
    stacked = np.vstack([user_sum, item_sum])
    aligned = align_root(stacked, compute_root(stacked))
    user_aligned = aligned[: graph.num_users]
    item_aligned = aligned[graph.num_users:]
    return EncoderOutput(
        user_tangent_sum=user_aligned,
        item_tangent_sum=item_aligned,
        user_hyperbolic=manifold.exp_origin_spatial(user_aligned),
        item_hyperbolic=manifold.exp_origin_spatial(item_aligned),
    )


def total_loss(
    graph: InteractionGraph,
    table: EmbeddingTable,
    num_layers: int,
    margin: float,
    reg_lambda: float,
    batch: TripletBatch | None = None,
    include_layer0: bool = False,
    rng: np.random.Generator | None = None,
) -> LossReport:
    """Combined loss over one triplet batch (sampled from the graph if absent)."""
    if batch is None:
        batch = sample_triplets(graph, rng if rng is not None else np.random.default_rng())
    out = forward_embeddings(graph, table, num_layers, include_layer0)
    mean_sq, penalty = reg_loss(out.stacked_tangent())
    m_loss = margin_loss(batch, out.user_hyperbolic, out.item_hyperbolic, margin)
    return LossReport(
        margin_loss=m_loss,
        reg_loss=penalty,
        total=m_loss + reg_lambda * penalty,
        mean_sq_norm=mean_sq,
    )


def loss_and_grad(
    graph: InteractionGraph,
    table: EmbeddingTable,
    num_layers: int,
    margin: float,
    reg_lambda: float,
    batch: TripletBatch,
    include_layer0: bool = False,
):
    """Loss report plus analytic gradients w.r.t. the layer-0 parameters.

    Returns (report, user_grad, item_grad). The backward pass chains the
    squared-distance gradients through the exponential map, the centering
    projection, and the adjoint of the pooled aggregation.
    """
    U = graph.num_users
    user_sum, item_sum = tangent_sums(
        graph, table.user_params, table.item_params, num_layers, include_layer0
    )
    stacked = np.vstack([user_sum, item_sum])
    aligned = align_root(stacked, compute_root(stacked))
    points = manifold.exp_origin_spatial(aligned)

    mean_sq, penalty = reg_loss(aligned)

    b = len(batch)
    u_rows = batch.users
    i_rows = U + batch.pos_items
    j_rows = U + batch.neg_items
    d2_pos, g_pos_u, g_pos_i = manifold.distance_sq_with_grads(points[u_rows], points[i_rows])
    d2_neg, g_neg_u, g_neg_j = manifold.distance_sq_with_grads(points[u_rows], points[j_rows])
    hinge = d2_pos - d2_neg + margin
    active = (hinge > 0.0).astype(float)
    m_loss = float(np.maximum(hinge, 0.0).mean())

    # ambient Euclidean gradient of the mean hinge, accumulated per node row
    w = (active / b)[:, None]
    ambient = np.zeros_like(points)
    np.add.at(ambient, u_rows, w * (g_pos_u - g_neg_u))
    np.add.at(ambient, i_rows, w * g_pos_i)
    np.add.at(ambient, j_rows, -w * g_neg_j)

    grad_aligned = manifold.exp_origin_spatial_vjp(aligned, ambient)
    if reg_lambda != 0.0:
        # d/dS of reg_lambda * mean_sq^{-1/2} with mean_sq = ||S||_F^2 / N
        coef = -reg_lambda * mean_sq ** -1.5 / aligned.shape[0]
        grad_aligned = grad_aligned + coef * aligned

    # adjoint of centering, then of the pooled aggregation
    grad_sum = grad_aligned - grad_aligned.mean(axis=0)
    user_grad, item_grad = pool_backward(
        graph, grad_sum[:U], grad_sum[U:], num_layers, include_layer0
    )
    report = LossReport(
        margin_loss=m_loss,
        reg_loss=penalty,
        total=m_loss + reg_lambda * penalty,
        mean_sq_norm=mean_sq,
    )
    return report, user_grad, item_grad
