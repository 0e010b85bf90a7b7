import numpy as np
import pytest

from hrcf.errors import ConfigError, EmptyDatasetError, ParseError
from hrcf.graph import (
    InteractionGraph,
    SyntheticGraphSpec,
    export_graph,
    generate_synthetic,
    head_tail_partition,
    load_graph_export,
    load_interactions,
    split_and_index,
)


def write_interactions(tmp_path, lines, name="data.tsv"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestLoadInteractions:
    def test_threshold_filters(self, tmp_path):
        path = write_interactions(tmp_path, [
            "u1\ti1\t5",
            "u1\ti2\t4",
            "u2\ti1\t3",
            "u2\ti2\t2",
        ])
        records = load_interactions(path, 4.0)
        assert len(records) == 2
        assert {(r.user_id, r.item_id) for r in records} == {("u1", "i1"), ("u1", "i2")}

    def test_very_low_threshold_keeps_everything(self, tmp_path):
        path = write_interactions(tmp_path, ["u1\ti1\t5", "u2\ti2\t1"])
        assert len(load_interactions(path, float("-inf"))) == 2

    def test_duplicates_keep_first(self, tmp_path):
        path = write_interactions(tmp_path, [
            "u1\ti1\t5\t100",
            "u1\ti1\t4\t200",
            "u1\ti2\t5",
        ])
        records = load_interactions(path, 4.0)
        assert len(records) == 2
        first = [r for r in records if r.item_id == "i1"][0]
        assert first.rating == 5.0 and first.timestamp == 100

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = write_interactions(tmp_path, ["# header", "", "u1\ti1\t5"])
        assert len(load_interactions(path, 4.0)) == 1

    def test_malformed_line_reports_number(self, tmp_path):
        path = write_interactions(tmp_path, ["u1\ti1\t5", "u2\ti2"])
        with pytest.raises(ParseError, match="line 2"):
            load_interactions(path, 4.0)

    def test_bad_rating_reports_number(self, tmp_path):
        path = write_interactions(tmp_path, ["u1\ti1\tbad"])
        with pytest.raises(ParseError, match="line 1"):
            load_interactions(path, 4.0)

    def test_empty_result_raises(self, tmp_path):
        path = write_interactions(tmp_path, ["u1\ti1\t1"])
        with pytest.raises(EmptyDatasetError):
            load_interactions(path, 4.0)


def make_records(pairs):
    from hrcf.graph import InteractionRecord

    return [InteractionRecord(u, i, 5.0) for u, i in pairs]


class TestSplitAndIndex:
    def test_ten_interactions_split_eight_two(self):
        records = make_records([("u", f"i{k}") for k in range(10)])
        graph = split_and_index(records, 0.8, seed=0)
        assert len(graph.train_edges) == 8
        assert len(graph.test_edges) == 2

    def test_single_interaction_goes_to_train(self):
        records = make_records([("u", "i0")])
        graph = split_and_index(records, 0.8, seed=0)
        assert len(graph.train_edges) == 1
        assert len(graph.test_edges) == 0

    def test_two_interactions_keep_one_test(self):
        records = make_records([("u", "i0"), ("u", "i1")])
        graph = split_and_index(records, 0.9, seed=0)
        assert len(graph.train_edges) == 1
        assert len(graph.test_edges) == 1

    def test_same_seed_identical(self):
        records = make_records([(f"u{k % 7}", f"i{j}") for k in range(7) for j in range(k + 2)])
        a = split_and_index(records, 0.8, seed=123)
        b = split_and_index(records, 0.8, seed=123)
        np.testing.assert_array_equal(a.train_edges, b.train_edges)
        np.testing.assert_array_equal(a.test_edges, b.test_edges)

    def test_different_seed_differs(self):
        records = make_records([("u", f"i{j}") for j in range(12)])
        a = split_and_index(records, 0.5, seed=1)
        b = split_and_index(records, 0.5, seed=2)
        assert not np.array_equal(a.train_edges, b.train_edges)

    def test_split_reassembles_records(self):
        records = make_records([(f"u{k}", f"i{j}") for k in range(5) for j in range(2 + k)])
        graph = split_and_index(records, 0.8, seed=5)
        rebuilt = set(map(tuple, graph.train_edges)) | set(map(tuple, graph.test_edges))
        expected = {
            (graph.user_ids.index(r.user_id), graph.item_ids.index(r.item_id)) for r in records
        }
        assert rebuilt == expected
        assert set(map(tuple, graph.train_edges)).isdisjoint(set(map(tuple, graph.test_edges)))

    def test_invalid_fraction(self):
        with pytest.raises(ConfigError):
            split_and_index(make_records([("u", "i")]), 1.0, seed=0)

    def test_empty_records(self):
        with pytest.raises(EmptyDatasetError):
            split_and_index([], 0.8, seed=0)


class TestGraphInvariants:
    def make_graph(self):
        records = make_records([(f"u{k}", f"i{j}") for k in range(6) for j in range(2 + (k * 3) % 5)])
        return split_and_index(records, 0.8, seed=9)

    def test_adjacency_transpose_consistency(self):
        graph = self.make_graph()
        assert sum(len(a) for a in graph.user_adj) == len(graph.train_edges)
        assert sum(len(a) for a in graph.item_adj) == len(graph.train_edges)
        pairs_from_users = {(u, i) for u in range(graph.num_users) for i in graph.user_adj[u]}
        pairs_from_items = {(u, i) for i in range(graph.num_items) for u in graph.item_adj[i]}
        assert pairs_from_users == pairs_from_items

    def test_degrees_match_adjacency(self):
        graph = self.make_graph()
        np.testing.assert_array_equal(graph.user_degrees, [len(a) for a in graph.user_adj])
        np.testing.assert_array_equal(graph.item_degrees, [len(a) for a in graph.item_adj])

    def test_operators_are_row_normalized(self):
        graph = self.make_graph()
        row_sums = np.asarray(graph.norm_user_item().sum(axis=1)).ravel()
        expected = (graph.user_degrees > 0).astype(float)
        np.testing.assert_allclose(row_sums, expected, atol=1e-12)

    def test_export_round_trip(self, tmp_path):
        graph = self.make_graph()
        path = tmp_path / "graph.txt"
        export_graph(graph, path)
        back = load_graph_export(path)
        np.testing.assert_array_equal(back.train_edges, graph.train_edges)
        np.testing.assert_array_equal(back.test_edges, graph.test_edges)
        header = path.read_text().splitlines()[0].split()
        assert [int(v) for v in header] == [
            graph.num_users, graph.num_items, len(graph.train_edges), len(graph.test_edges),
        ]


class TestGenerateSynthetic:
    def test_deterministic_under_seed(self):
        spec = SyntheticGraphSpec(100, 80, 2.0, 5.0, seed=7)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        assert [(r.user_id, r.item_id) for r in a] == [(r.user_id, r.item_id) for r in b]

    def test_mean_degree_close_to_requested(self):
        spec = SyntheticGraphSpec(2000, 500, 2.0, 5.0, seed=3)
        records = generate_synthetic(spec)
        assert 4.0 <= len(records) / 2000 <= 6.0

    def test_degree_rank_slope_matches_exponent(self):
        # log-log slope of the sorted item-degree curve should be near
        # -1/(exponent - 1) for a Pareto popularity profile
        exponent = 2.0
        spec = SyntheticGraphSpec(5000, 10_000, exponent, 10.0, seed=1)
        records = generate_synthetic(spec)
        counts = {}
        for r in records:
            counts[r.item_id] = counts.get(r.item_id, 0) + 1
        degrees = np.sort(np.array(list(counts.values())))[::-1]
        top = degrees[: max(len(degrees) // 20, 50)]
        ranks = np.arange(1, len(top) + 1)
        slope = np.polyfit(np.log(ranks), np.log(top), 1)[0]
        assert slope == pytest.approx(-1.0 / (exponent - 1.0), abs=0.3)

    def test_infeasible_spec_rejected(self):
        with pytest.raises(ConfigError):
            generate_synthetic(SyntheticGraphSpec(10, 4, 2.0, mean_degree=5.0, seed=0))
        with pytest.raises(ConfigError):
            generate_synthetic(SyntheticGraphSpec(0, 4, 2.0, 1.0, seed=0))
        with pytest.raises(ConfigError):
            generate_synthetic(SyntheticGraphSpec(10, 10, 1.0, 1.0, seed=0))


class TestHeadTailPartition:
    def graph_with_degrees(self, degrees):
        edges = []
        user = 0
        for item, degree in enumerate(degrees):
            for _ in range(degree):
                edges.append((user % (sum(degrees) // 2 + 1), item))
                user += 1
        # re-index users densely
        users = sorted({u for u, _ in edges})
        remap = {u: k for k, u in enumerate(users)}
        edges = [(remap[u], i) for u, i in edges]
        return InteractionGraph(
            num_users=len(users), num_items=len(degrees),
            train_edges=np.array(edges), test_edges=np.empty((0, 2), dtype=np.int64),
        )

    def test_fraction_rounds_up(self):
        graph = self.graph_with_degrees([1] * 10)
        head, tail = head_tail_partition(graph, 0.2)
        assert len(head) == 2 and len(tail) == 8

    def test_ties_break_by_low_index(self):
        graph = self.graph_with_degrees([2, 2, 2, 2])
        head, tail = head_tail_partition(graph, 0.5)
        np.testing.assert_array_equal(head, [0, 1])

    def test_highest_degrees_in_head(self):
        graph = self.graph_with_degrees([5, 4, 3, 2])
        head, tail = head_tail_partition(graph, 0.5)
        np.testing.assert_array_equal(head, [0, 1])
        np.testing.assert_array_equal(tail, [2, 3])

    def test_partition_covers_items(self):
        graph = self.graph_with_degrees([3, 1, 4, 1, 5])
        head, tail = head_tail_partition(graph, 0.4)
        assert sorted(np.concatenate([head, tail])) == list(range(5))
        assert set(head).isdisjoint(tail)

    def test_invalid_fraction(self):
        graph = self.graph_with_degrees([1, 1])
        with pytest.raises(ConfigError):
            head_tail_partition(graph, 0.0)
