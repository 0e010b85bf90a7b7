"""Top-K ranking evaluation: Recall@K and NDCG@K over the test split.

Items are ranked for each user by ascending geodesic distance, with the
user's train items removed from the candidate list first and ties broken
by ascending item index. Metrics are macro-averaged over users with a
non-empty test set; NDCG uses binary relevance with the log2 discount.
"""

from dataclasses import dataclass

import numpy as np

from .encoder import EncoderOutput
from .graph import InteractionGraph, head_tail_partition
from .manifold import geodesic_distance


@dataclass
class EvalResult:
    recall_at: dict[int, float]
    ndcg_at: dict[int, float]
    num_evaluated_users: int
    per_segment: dict[str, "EvalResult"] | None = None


def rank_items(user_point: np.ndarray, item_points: np.ndarray, mask) -> np.ndarray:
    """All item indices ordered by preference, with masked items removed."""
    dist = geodesic_distance(user_point, item_points)
    keep = np.ones(len(item_points), dtype=bool)
    mask = np.asarray(mask, dtype=np.int64)
    keep[mask] = False
    candidates = np.flatnonzero(keep)
    order = np.argsort(dist[candidates], kind="stable")
    return candidates[order]


def recall_at_k(ranked: np.ndarray, relevant, k: int) -> float:
    """|top-K intersect relevant| / |relevant|; relevant must be non-empty."""
    relevant = set(int(i) for i in relevant)
    if not relevant:
        raise ValueError("relevant set is empty; skip the user instead")
    hits = sum(1 for i in ranked[:k] if int(i) in relevant)
    return hits / len(relevant)


def ndcg_at_k(ranked: np.ndarray, relevant, k: int) -> float:
    """Binary-relevance NDCG with 1-based positions and log2 discount."""
    relevant = set(int(i) for i in relevant)
    if not relevant:
        raise ValueError("relevant set is empty; skip the user instead")
    dcg = sum(
        1.0 / np.log2(p + 1)
        for p, item in enumerate(ranked[:k], start=1)
        if int(item) in relevant
    )
    idcg = sum(1.0 / np.log2(p + 1) for p in range(1, min(k, len(relevant)) + 1))
    return dcg / idcg


def _masked_distance_order(graph: InteractionGraph, output: EncoderOutput, user: int) -> np.ndarray:
    return rank_items(
        output.user_hyperbolic[user], output.item_hyperbolic, graph.user_adj[user]
    )


def evaluate(
    graph: InteractionGraph,
    output: EncoderOutput,
    ks: tuple[int, ...] = (10, 20),
    head_fraction: float | None = None,
) -> EvalResult:
    """Macro-averaged Recall@K / NDCG@K, optionally split by head/tail items.

    Users with an empty test set are excluded from the averages; for the
    head (resp. tail) segment, the relevant set is intersected with the head
    (resp. tail) items and users left empty are skipped per segment.
    """
    ks = tuple(int(k) for k in ks)
    test_lists = graph.test_items_by_user()
    segments: dict[str, np.ndarray] | None = None
    if head_fraction is not None:
        head, tail = head_tail_partition(graph, head_fraction)
        segments = {"head": head, "tail": tail}

    sums = {k: [0.0, 0.0] for k in ks}
    count = 0
    seg_sums = {name: {k: [0.0, 0.0] for k in ks} for name in (segments or {})}
    seg_counts = {name: 0 for name in (segments or {})}

    for user in range(graph.num_users):
        relevant = test_lists[user]
        if len(relevant) == 0:
            continue
        ranked = _masked_distance_order(graph, output, user)
        count += 1
        for k in ks:
            sums[k][0] += recall_at_k(ranked, relevant, k)
            sums[k][1] += ndcg_at_k(ranked, relevant, k)
        if segments is None:
            continue
        for name, seg_items in segments.items():
            seg_relevant = np.intersect1d(relevant, seg_items)
            if len(seg_relevant) == 0:
                continue
            seg_counts[name] += 1
            for k in ks:
                seg_sums[name][k][0] += recall_at_k(ranked, seg_relevant, k)
                seg_sums[name][k][1] += ndcg_at_k(ranked, seg_relevant, k)

    def _result(totals, n) -> EvalResult:
        recall = {k: (totals[k][0] / n if n else 0.0) for k in ks}
        ndcg = {k: (totals[k][1] / n if n else 0.0) for k in ks}
        return EvalResult(recall_at=recall, ndcg_at=ndcg, num_evaluated_users=n)

    result = _result(sums, count)
    if segments is not None:
        result.per_segment = {name: _result(seg_sums[name], seg_counts[name]) for name in segments}
    return result


def format_metrics_line(epoch: int, result: EvalResult) -> str:
    """One structured text line per evaluation, e.g. ``epoch=3 R@10=0.1 ...``."""
    parts = [f"epoch={epoch}"]
    for k in sorted(result.recall_at):
        parts.append(f"R@{k}={result.recall_at[k]:.6f}")
    for k in sorted(result.ndcg_at):
        parts.append(f"N@{k}={result.ndcg_at[k]:.6f}")
    for name in sorted(result.per_segment or {}):
        seg = result.per_segment[name]
        for k in sorted(seg.recall_at):
            parts.append(f"{name}:R@{k}={seg.recall_at[k]:.6f}")
        for k in sorted(seg.ndcg_at):
            parts.append(f"{name}:N@{k}={seg.ndcg_at[k]:.6f}")
    return " ".join(parts)
