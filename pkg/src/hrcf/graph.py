"""User-item interaction ingestion, splitting, and the bipartite adjacency.

The interaction file format is UTF-8 text, one record per line,
tab-separated: ``user_id<TAB>item_id<TAB>rating[<TAB>timestamp]``.
Lines starting with ``#`` are ignored.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, EmptyDatasetError, ParseError


@dataclass(frozen=True)
class InteractionRecord:
    user_id: str
    item_id: str
    rating: float
    timestamp: int | None = None


@dataclass(eq=False)
class InteractionGraph:
    """Indexed bipartite interaction graph with a train/test edge split.

    Adjacency lists and degrees are built from train edges only. The object
    is immutable after construction and safe to share across readers; the
    sparse operators are built lazily and cached.
    """

    num_users: int
    num_items: int
    train_edges: np.ndarray  # (E_train, 2) int64 rows of (user, item)
    test_edges: np.ndarray   # (E_test, 2)
    user_ids: list[str] = field(default_factory=list)
    item_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.train_edges = np.asarray(self.train_edges, dtype=np.int64).reshape(-1, 2)
        self.test_edges = np.asarray(self.test_edges, dtype=np.int64).reshape(-1, 2)
        self.user_adj = _adjacency_lists(self.train_edges[:, 0], self.train_edges[:, 1], self.num_users)
        self.item_adj = _adjacency_lists(self.train_edges[:, 1], self.train_edges[:, 0], self.num_items)
        self.user_degrees = np.array([len(a) for a in self.user_adj], dtype=np.int64)
        self.item_degrees = np.array([len(a) for a in self.item_adj], dtype=np.int64)
        self._norm_user_item = None
        self._norm_item_user = None
        self._train_membership = None

    @property
    def num_nodes(self) -> int:
        return self.num_users + self.num_items

    def norm_user_item(self) -> sp.csr_matrix:
        """Row-normalized U x I operator: (A @ X)[u] = mean of X over N_u."""
        if self._norm_user_item is None:
            self._norm_user_item = _row_normalized(
                self.train_edges[:, 0], self.train_edges[:, 1],
                self.num_users, self.num_items, self.user_degrees,
            )
        return self._norm_user_item

    def norm_item_user(self) -> sp.csr_matrix:
        """Row-normalized I x U operator: (A @ X)[i] = mean of X over N_i."""
        if self._norm_item_user is None:
            self._norm_item_user = _row_normalized(
                self.train_edges[:, 1], self.train_edges[:, 0],
                self.num_items, self.num_users, self.item_degrees,
            )
        return self._norm_item_user

    def train_membership(self) -> sp.csr_matrix:
        """Boolean U x I matrix of train edges, for negative-sample rejection."""
        if self._train_membership is None:
            u = self.train_edges[:, 0]
            i = self.train_edges[:, 1]
            self._train_membership = sp.csr_matrix(
                (np.ones(len(u), dtype=bool), (u, i)),
                shape=(self.num_users, self.num_items),
            )
        return self._train_membership

    def test_items_by_user(self) -> list[np.ndarray]:
        return _adjacency_lists(self.test_edges[:, 0], self.test_edges[:, 1], self.num_users)


def _adjacency_lists(src: np.ndarray, dst: np.ndarray, num_src: int) -> list[np.ndarray]:
    order = np.lexsort((dst, src))
    src_sorted = src[order]
    dst_sorted = dst[order]
    bounds = np.searchsorted(src_sorted, np.arange(num_src + 1))
    return [dst_sorted[bounds[k]:bounds[k + 1]] for k in range(num_src)]


def _row_normalized(rows, cols, num_rows, num_cols, degrees) -> sp.csr_matrix:
    weights = np.where(degrees[rows] > 0, 1.0 / np.maximum(degrees[rows], 1), 0.0)
    mat = sp.csr_matrix((weights, (rows, cols)), shape=(num_rows, num_cols))
    mat.sum_duplicates()
    return mat


def load_interactions(path, rating_threshold: float) -> list[InteractionRecord]:
    """Read, binarize, and deduplicate an interaction file.

    Keeps records with rating >= rating_threshold, deduplicating
    (user, item) pairs by first occurrence.
    """
    kept: list[InteractionRecord] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4):
                raise ParseError(line_number, f"expected 3 or 4 tab-separated fields, got {len(parts)}")
            user_id, item_id = parts[0], parts[1]
            if not user_id or not item_id:
                raise ParseError(line_number, "empty user or item id")
            try:
                rating = float(parts[2])
            except ValueError:
                raise ParseError(line_number, f"bad rating {parts[2]!r}") from None
            if not math.isfinite(rating):
                raise ParseError(line_number, f"non-finite rating {parts[2]!r}")
            timestamp = None
            if len(parts) == 4:
                try:
                    timestamp = int(parts[3])
                except ValueError:
                    raise ParseError(line_number, f"bad timestamp {parts[3]!r}") from None
            if rating < rating_threshold:
                continue
            key = (user_id, item_id)
            if key in seen:
                continue
            seen.add(key)
            kept.append(InteractionRecord(user_id, item_id, rating, timestamp))
    if not kept:
        raise EmptyDatasetError(f"no interactions at or above threshold {rating_threshold} in {path}")
    return kept


def split_and_index(records: list[InteractionRecord], train_fraction: float, seed: int) -> InteractionGraph:
    """Index ids densely and split each user's interactions into train/test.

    The split is per user: a user with k >= 2 interactions contributes
    clamp(floor(train_fraction * k), 1, k - 1) train edges and the rest to
    test; users with a single interaction go entirely to train. Identical
    seeds produce identical splits.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not records:
        raise EmptyDatasetError("no interaction records to split")
    user_ids = sorted({r.user_id for r in records})
    item_ids = sorted({r.item_id for r in records})
    u_index = {u: k for k, u in enumerate(user_ids)}
    i_index = {i: k for k, i in enumerate(item_ids)}
    per_user: list[list[int]] = [[] for _ in user_ids]
    for r in records:
        per_user[u_index[r.user_id]].append(i_index[r.item_id])

    rng = np.random.default_rng(seed)
    train, test = [], []
    for u, items in enumerate(per_user):
        items = np.asarray(items, dtype=np.int64)
        k = len(items)
        if k < 2:
            train.extend((u, i) for i in items)
            continue
        perm = rng.permutation(k)
        n_train = min(max(int(math.floor(train_fraction * k)), 1), k - 1)
        for i in items[perm[:n_train]]:
            train.append((u, i))
        for i in items[perm[n_train:]]:
            test.append((u, i))
    return InteractionGraph(
        num_users=len(user_ids),
        num_items=len(item_ids),
        train_edges=np.array(train, dtype=np.int64).reshape(-1, 2),
        test_edges=np.array(test, dtype=np.int64).reshape(-1, 2),
        user_ids=user_ids,
        item_ids=item_ids,
    )


@dataclass(frozen=True)
class SyntheticGraphSpec:
    """Parameters for the power-law interaction generator."""

    num_users: int
    num_items: int
    power_law_exponent: float = 2.0
    mean_degree: float = 10.0
    seed: int = 0

    def validate(self) -> None:
        if self.num_users < 1 or self.num_items < 1:
            raise ConfigError("num_users and num_items must be >= 1")
        if not self.power_law_exponent > 1.0:
            raise ConfigError("power_law_exponent must be > 1")
        if not self.mean_degree > 0:
            raise ConfigError("mean_degree must be > 0")
        if self.mean_degree > self.num_items:
            raise ConfigError(
                f"mean_degree {self.mean_degree} exceeds num_items {self.num_items}"
            )


def generate_synthetic(spec: SyntheticGraphSpec) -> list[InteractionRecord]:
    """Sample a power-law bipartite interaction set.

    Item popularity weights are i.i.d. Pareto with tail index
    (exponent - 1), so the sorted-popularity rank curve has log-log slope
    about -1/(exponent - 1). Each user draws a Poisson(mean_degree) number
    of distinct items (at least one) proportional to popularity.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    tail = spec.power_law_exponent - 1.0
    weights = (1.0 - rng.random(spec.num_items)) ** (-1.0 / tail)
    log_w = np.log(weights)

    width_u = len(str(spec.num_users - 1))
    width_i = len(str(spec.num_items - 1))
    records = []
    for u in range(spec.num_users):
        k = min(max(int(rng.poisson(spec.mean_degree)), 1), spec.num_items)
        # Gumbel top-k gives a weighted sample without replacement
        keys = log_w + rng.gumbel(size=spec.num_items)
        items = np.argpartition(keys, -k)[-k:]
        for i in np.sort(items):
            records.append(InteractionRecord(f"u{u:0{width_u}d}", f"i{i:0{width_i}d}", 5.0))
    return records


def head_tail_partition(graph: InteractionGraph, head_fraction: float):
    """Split item indices into (head, tail) by descending train degree.

    The first ceil(head_fraction * I) items are head; ties go to the lower
    item index. Returns two sorted index arrays.
    """
    if not 0.0 < head_fraction < 1.0:
        raise ConfigError(f"head_fraction must be in (0, 1), got {head_fraction}")
    order = np.lexsort((np.arange(graph.num_items), -graph.item_degrees))
    n_head = math.ceil(head_fraction * graph.num_items)
    head = np.sort(order[:n_head])
    tail = np.sort(order[n_head:])
    return head, tail


def export_graph(graph: InteractionGraph, path) -> None:
    """Write the split edge lists in the debug text format.

    Header line ``U I E_train E_test``, then one ``u i`` pair per line,
    train section first.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{graph.num_users} {graph.num_items} "
                 f"{len(graph.train_edges)} {len(graph.test_edges)}\n")
        for u, i in graph.train_edges:
            fh.write(f"{u} {i}\n")
        for u, i in graph.test_edges:
            fh.write(f"{u} {i}\n")


def load_graph_export(path) -> InteractionGraph:
    """Read a file produced by export_graph."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise DataError(f"bad graph export header in {path}")
        num_users, num_items, n_train, n_test = (int(v) for v in header)
        edges = np.loadtxt(fh, dtype=np.int64, max_rows=n_train + n_test).reshape(-1, 2)
    if len(edges) != n_train + n_test:
        raise DataError(f"expected {n_train + n_test} edges, found {len(edges)}")
    return InteractionGraph(
        num_users=num_users,
        num_items=num_items,
        train_edges=edges[:n_train],
        test_edges=edges[n_train:],
    )
