import numpy as np
import pytest

from hrcf.graph import InteractionGraph


@pytest.fixture
def complete_2x2_graph():
    """Complete bipartite 2 users x 2 items, all edges in train."""
    return InteractionGraph(
        num_users=2,
        num_items=2,
        train_edges=np.array([[0, 0], [0, 1], [1, 0], [1, 1]]),
        test_edges=np.empty((0, 2), dtype=np.int64),
    )


@pytest.fixture
def small_graph():
    """6 users x 5 items with uneven degrees and a test split."""
    train = np.array([
        [0, 0], [0, 1], [0, 2],
        [1, 1], [1, 3],
        [2, 0], [2, 4],
        [3, 2], [3, 3],
        [4, 0], [4, 1], [4, 4],
        [5, 3],
    ])
    test = np.array([[0, 3], [1, 0], [2, 2], [4, 2]])
    return InteractionGraph(num_users=6, num_items=5, train_edges=train, test_edges=test)
