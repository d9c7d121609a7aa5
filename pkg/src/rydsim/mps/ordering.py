"""Chain orderings for the MPS backend.

Strongly interacting qubits should sit close together on the chain; the
reverse Cuthill-McKee ordering of the thresholded interaction graph reduces
its bandwidth. The permutation is applied internally only: observables and
outputs always use original qubit labels.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

__all__ = ["reorder_qubits", "adjacency_bandwidth", "DEFAULT_THRESHOLD_FRACTION"]

# default adjacency cutoff: couplings two orders of magnitude below the
# strongest one are ignored
DEFAULT_THRESHOLD_FRACTION = 1e-2


def reorder_qubits(interaction: np.ndarray, threshold: float) -> tuple[int, ...]:
    """Reverse Cuthill-McKee ordering of the graph with edges U_ij >= threshold.

    Returns `order` with order[chain_position] = original qubit label. Ties
    are broken deterministically by lower original index; disconnected
    components are traversed in order of their smallest-index member and
    concatenated before the final reversal.
    """
    if threshold <= 0.0:
        raise ValidationError(f"threshold must be > 0, got {threshold}")
    n = interaction.shape[0]
    if interaction.shape != (n, n):
        raise ValidationError("interaction matrix must be square")
    adjacency = [
        [j for j in range(n) if j != i and interaction[i, j] >= threshold]
        for i in range(n)
    ]
    degree = [len(a) for a in adjacency]
    visited = [False] * n
    order: list[int] = []
    for seed in range(n):
        if visited[seed]:
            continue
        # collect the component, then start from its minimum-degree member
        component = [seed]
        seen = {seed}
        head = 0
        while head < len(component):
            for j in adjacency[component[head]]:
                if j not in seen:
                    seen.add(j)
                    component.append(j)
            head += 1
        start = min(component, key=lambda v: (degree[v], v))
        visited[start] = True
        queue = [start]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            order.append(v)
            for j in sorted(adjacency[v], key=lambda u: (degree[u], u)):
                if not visited[j]:
                    visited[j] = True
                    queue.append(j)
    order.reverse()
    return tuple(order)


def adjacency_bandwidth(
    interaction: np.ndarray, threshold: float, order
) -> int:
    """Max chain distance between qubits joined by an above-threshold edge."""
    position = {q: s for s, q in enumerate(order)}
    n = interaction.shape[0]
    width = 0
    for i in range(n):
        for j in range(i + 1, n):
            if interaction[i, j] >= threshold:
                width = max(width, abs(position[i] - position[j]))
    return width
