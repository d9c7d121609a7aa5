import itertools

import numpy as np
import pytest

from rydsim.errors import ValidationError
from rydsim.mps import adjacency_bandwidth, reorder_qubits


def chain_matrix(n, strong=1.0, weak=1e-4):
    u = np.full((n, n), weak)
    np.fill_diagonal(u, 0.0)
    for i in range(n - 1):
        u[i, i + 1] = u[i + 1, i] = strong
    return u


def grid_matrix(rows, cols, spacing=1.0, c=1.0):
    pos = [(r * spacing, col * spacing) for r in range(rows) for col in range(cols)]
    n = len(pos)
    u = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d2 = (pos[i][0] - pos[j][0]) ** 2 + (pos[i][1] - pos[j][1]) ** 2
            u[i, j] = u[j, i] = c / d2**3
    return u


class TestReorderQubits:
    def test_chain_keeps_bandwidth_one(self):
        u = chain_matrix(8)
        order = reorder_qubits(u, threshold=0.5)
        assert sorted(order) == list(range(8))
        assert adjacency_bandwidth(u, 0.5, order) == 1

    def test_2x2_grid_reaches_optimal_bandwidth(self):
        # threshold set between the diagonal (U/8) and edge couplings so the
        # graph is the square's edge set
        u = grid_matrix(2, 2)
        threshold = 0.5 * u.max()
        order = reorder_qubits(u, threshold)
        width = adjacency_bandwidth(u, threshold, order)
        best = min(
            adjacency_bandwidth(u, threshold, perm)
            for perm in itertools.permutations(range(4))
        )
        assert best == 2  # no ordering of the square does better
        assert width == 2

    def test_deterministic(self):
        u = np.ones((5, 5)) - np.eye(5)
        a = reorder_qubits(u, 0.5)
        b = reorder_qubits(u, 0.5)
        assert a == b
        assert sorted(a) == list(range(5))

    def test_fully_connected_tie_breaking(self):
        # equal degrees everywhere: BFS from qubit 0, neighbors by index,
        # then the whole ordering is reversed
        u = np.ones((4, 4)) - np.eye(4)
        assert reorder_qubits(u, 0.5) == (3, 2, 1, 0)

    def test_disconnected_components_stay_contiguous(self):
        u = np.zeros((6, 6))
        for i, j in [(0, 2), (2, 4)]:  # even chain
            u[i, j] = u[j, i] = 1.0
        for i, j in [(1, 3), (3, 5)]:  # odd chain
            u[i, j] = u[j, i] = 1.0
        order = reorder_qubits(u, 0.5)
        assert sorted(order) == list(range(6))
        pos = {q: s for s, q in enumerate(order)}
        even = sorted(pos[q] for q in (0, 2, 4))
        odd = sorted(pos[q] for q in (1, 3, 5))
        assert even[-1] - even[0] == 2  # contiguous block
        assert odd[-1] - odd[0] == 2
        assert adjacency_bandwidth(u, 0.5, order) == 1

    def test_isolated_vertices_included(self):
        u = np.zeros((4, 4))
        u[0, 1] = u[1, 0] = 1.0
        order = reorder_qubits(u, 0.5)
        assert sorted(order) == list(range(4))

    def test_threshold_validation(self):
        with pytest.raises(ValidationError):
            reorder_qubits(np.zeros((3, 3)), 0.0)

    def test_3x3_grid_improves_on_row_major(self):
        u = grid_matrix(3, 3)
        threshold = u.max() / 100.0
        order = reorder_qubits(u, threshold)
        row_major = tuple(range(9))
        assert adjacency_bandwidth(u, threshold, order) <= adjacency_bandwidth(
            u, threshold, row_major
        )
