"""Self-contained invariant checks with independent reference computations.

Each check reports its worst measured deviation against a stated
tolerance; the `verify` CLI subcommand runs all of them and fails the
process when any check fails. The reference paths here (brute-force
loops, finite differences, exhaustive enumeration) are deliberately kept
independent of the vectorized implementations they validate.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import manifold, objective
from .encoder import EmbeddingTable, aggregate_once, pairwise_shrink_metric
from .graph import InteractionGraph
from .objective import TripletBatch, loss_and_grad, total_loss


@dataclass
class OracleCheck:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"{status} {self.name}: worst deviation {self.worst:.3e} (tolerance {self.tolerance:.0e})"
        if self.detail:
            out += f" [{self.detail}]"
        return out


def random_bipartite_graph(rng: np.random.Generator, max_nodes: int = 200) -> InteractionGraph:
    """A random bipartite graph with at least one edge, for property tests."""
    num_users = int(rng.integers(2, max(3, max_nodes // 2)))
    num_items = int(rng.integers(2, max(3, max_nodes - num_users)))
    density = rng.uniform(0.02, 0.4)
    mask = rng.random((num_users, num_items)) < density
    if not mask.any():
        mask[rng.integers(num_users), rng.integers(num_items)] = True
    users, items = np.nonzero(mask)
    edges = np.column_stack([users, items])
    return InteractionGraph(
        num_users=num_users, num_items=num_items,
        train_edges=edges, test_edges=np.empty((0, 2), dtype=np.int64),
    )


def toy_instance(seed: int = 7, num_users: int = 6, num_items: int = 6, dim: int = 4):
    """Small dense-ish instance for gradient checks: graph, table, batch."""
    rng = np.random.default_rng(seed)
    edges = []
    for u in range(num_users):
        items = rng.choice(num_items, size=3, replace=False)
        edges.extend((u, int(i)) for i in items)
    graph = InteractionGraph(
        num_users=num_users, num_items=num_items,
        train_edges=np.array(sorted(set(edges)), dtype=np.int64),
        test_edges=np.empty((0, 2), dtype=np.int64),
    )
    table = EmbeddingTable(
        user_params=0.3 * rng.standard_normal((num_users, dim)),
        item_params=0.3 * rng.standard_normal((num_items, dim)),
    )
    batch = objective.sample_triplets(graph, rng)
    return graph, table, batch


def finite_difference_grad(
    graph, table, batch, num_layers: int, margin: float, reg_lambda: float,
    step: float = 1e-5, include_layer0: bool = False,
):
    """Central finite differences of the total loss w.r.t. every parameter."""
    def value(user_params, item_params):
        t = EmbeddingTable(user_params, item_params)
        return total_loss(
            graph, t, num_layers, margin, reg_lambda, batch=batch,
            include_layer0=include_layer0,
        ).total

    grads = []
    for which in ("user", "item"):
        base = table.user_params if which == "user" else table.item_params
        g = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            bumped = base.copy()
            bumped[idx] = base[idx] + step
            hi = value(bumped if which == "user" else table.user_params,
                       bumped if which == "item" else table.item_params)
            bumped[idx] = base[idx] - step
            lo = value(bumped if which == "user" else table.user_params,
                       bumped if which == "item" else table.item_params)
            g[idx] = (hi - lo) / (2.0 * step)
        grads.append(g)
    return grads[0], grads[1]


def brute_force_recall(ranking, relevant, k: int) -> float:
    hits = len([i for i in ranking[:k] if i in relevant])
    return hits / len(relevant)


def brute_force_ndcg(ranking, relevant, k: int) -> float:
    dcg = 0.0
    for pos, item in enumerate(ranking[:k], start=1):
        if item in relevant:
            dcg += 1.0 / math.log2(pos + 1)
    ideal = sum(1.0 / math.log2(p + 1) for p in range(1, min(k, len(relevant)) + 1))
    return dcg / ideal


# ---------------------------------------------------------------------------
# individual checks


def check_sheet_closure(samples: int = 10_000, dims=(2, 8, 50), seed: int = 0) -> OracleCheck:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in dims:
        direction = rng.standard_normal((samples, n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radii = rng.uniform(0.0, 10.0, size=(samples, 1))
        points = manifold.exp_origin_spatial(direction * radii)
        worst = max(worst, float(manifold.sheet_deviation(points).max()))
    return OracleCheck("sheet-closure", worst <= 1e-6, worst, 1e-6,
                       f"{samples} vectors per n in {dims}")


def check_round_trip(samples: int = 10_000, dims=(2, 8, 50), seed: int = 1) -> OracleCheck:
    rng = np.random.default_rng(seed)
    worst = 0.0
    zero_coord = 0.0
    for n in dims:
        direction = rng.standard_normal((samples, n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        spatial = direction * rng.uniform(0.0, 10.0, size=(samples, 1))
        v = manifold.tangent_from_spatial(spatial)
        back = manifold.log_origin(manifold.exp_origin(v))
        zero_coord = max(zero_coord, float(np.abs(back[:, 0]).max()))
        err = np.linalg.norm(back - v, axis=1)
        scale = np.maximum(1.0, np.linalg.norm(v, axis=1))
        worst = max(worst, float((err / scale).max()))
    passed = worst <= 1e-8 and zero_coord == 0.0
    return OracleCheck("exp-log-round-trip", passed, worst, 1e-8,
                       f"first coordinate always exactly 0: {zero_coord == 0.0}")


def check_shrinking(trials: int = 100, steps: int = 5, seed: int = 2) -> OracleCheck:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        graph = random_bipartite_graph(rng)
        n = int(rng.integers(1, 8))
        user_x = rng.standard_normal((graph.num_users, n)) * rng.uniform(0.1, 4.0)
        item_x = rng.standard_normal((graph.num_items, n)) * rng.uniform(0.1, 4.0)
        before = pairwise_shrink_metric(graph, np.vstack([user_x, item_x]))
        for _ in range(steps):
            user_x, item_x = aggregate_once(graph, user_x, item_x)
            after = pairwise_shrink_metric(graph, np.vstack([user_x, item_x]))
            worst = max(worst, after - before)
            before = after
    return OracleCheck("aggregation-shrinking", worst <= 1e-9, worst, 1e-9,
                       f"{trials} graphs x {steps} rounds")


def check_norm_identity(trials: int = 100, seed: int = 3) -> OracleCheck:
    """Mean squared norm vs. the total pairwise spread, on centered rows.

    For centered rows the exact identity is

        N^2 * mean_sq_norm = 1/2 * sum_{i,j} ||x_i - x_j||^2,

    so the regularizer target and the all-pairs distance sum are
    proportional; pushing one up pushes the other up.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        rows = int(rng.integers(2, 40))
        cols = int(rng.integers(1, 10))
        x = rng.standard_normal((rows, cols)) * rng.uniform(0.1, 5.0)
        x = x - x.mean(axis=0)
        mean_sq, _ = objective.reg_loss(x)
        lhs = rows * rows * mean_sq
        rhs = 0.0
        for i in range(rows):
            for j in range(rows):
                rhs += float(np.sum((x[i] - x[j]) ** 2))
        rhs *= 0.5
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return OracleCheck("pairwise-norm-identity", worst <= 1e-8, worst, 1e-8,
                       f"{trials} centered matrices")


def check_gradients(seed: int = 7) -> OracleCheck:
    graph, table, batch = toy_instance(seed=seed)
    margin, lam, layers = 0.2, 20.0, 2
    _, gu, gi = loss_and_grad(graph, table, layers, margin, lam, batch)
    fu, fi = finite_difference_grad(graph, table, batch, layers, margin, lam)
    analytic = np.concatenate([gu.ravel(), gi.ravel()])
    numeric = np.concatenate([fu.ravel(), fi.ravel()])
    rel = float(np.linalg.norm(analytic - numeric)
                / max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-300))
    return OracleCheck("finite-difference-gradient", rel <= 1e-4, rel, 1e-4,
                       "6 users, 6 items, dim 4, margin+regularizer+alignment+encoder")


def check_metric_oracle(universe: int = 5) -> OracleCheck:
    from .evaluate import ndcg_at_k, recall_at_k

    worst = 0.0
    items = list(range(universe))
    for ranking in itertools.permutations(items):
        ranked = np.array(ranking)
        for r in range(1, universe + 1):
            for relevant in itertools.combinations(items, r):
                rel = set(relevant)
                for k in range(1, universe + 1):
                    worst = max(worst, abs(recall_at_k(ranked, rel, k) - brute_force_recall(ranking, rel, k)))
                    worst = max(worst, abs(ndcg_at_k(ranked, rel, k) - brute_force_ndcg(ranking, rel, k)))
    return OracleCheck("ranking-metric-oracle", worst == 0.0, worst, 0.0,
                       f"all rankings and relevant sets of a {universe}-item universe")


def check_distance_ratio(angles=(np.pi / 4, np.pi / 2, np.pi)) -> OracleCheck:
    worst = -np.inf
    for angle in angles:
        values = [manifold.distance_ratio_diagnostic(a, angle) for a in range(1, 11)]
        steps = np.diff(values)
        worst = max(worst, float(-steps.min()))
    return OracleCheck("distance-ratio-monotonicity", worst <= 1e-12, worst, 1e-12,
                       "non-decreasing in the radius on a = 1..10")


def run_all(seed: int = 0) -> list[OracleCheck]:
    return [
        check_sheet_closure(seed=seed),
        check_round_trip(seed=seed + 1),
        check_shrinking(seed=seed + 2),
        check_norm_identity(seed=seed + 3),
        check_gradients(),
        check_metric_oracle(),
        check_distance_ratio(),
    ]
