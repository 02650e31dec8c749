"""Distances and summaries on persistence diagrams.

The p-Wasserstein distance minimises the sum of p-th powers of sup-norm
ground distances over bijections between the two diagrams, each augmented
with the diagonal projections of the other's points (a point (b, d) reaches
the diagonal at sup-norm cost |b - d| / 2). The reduction to a square
assignment problem pads each side with the other's diagonal slots;
diagonal-to-diagonal cells cost nothing. The assignment is solved exactly,
never approximately: gradients route through the argmin matching.

The bottleneck distance is the min-max variant, computed by binary search
over the candidate costs with bipartite feasibility checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimMismatch, InvalidParameter
from .persistence import PersistenceDiagram


@dataclass(frozen=True)
class Matching:
    """An augmented bijection between two diagrams.

    ``pairs_direct`` holds (index in D, index in D2) couples;
    ``to_diagonal_left``/``to_diagonal_right`` list points of D/D2 matched to
    their diagonal projections. ``total_cost`` is the sum of p-th powers of
    the assignment's ground costs (the distance is total_cost**(1/p)).
    """

    pairs_direct: tuple[tuple[int, int], ...]
    to_diagonal_left: tuple[int, ...]
    to_diagonal_right: tuple[int, ...]
    total_cost: float


def matching_to_dict(m: Matching) -> dict:
    return {
        "pairs_direct": [list(p) for p in m.pairs_direct],
        "to_diagonal_left": list(m.to_diagonal_left),
        "to_diagonal_right": list(m.to_diagonal_right),
        "total_cost": m.total_cost,
    }


def _check_dims(d1: PersistenceDiagram, d2: PersistenceDiagram) -> None:
    if d1.dim != d2.dim:
        raise DimMismatch(f"diagram dimensions differ: {d1.dim} vs {d2.dim}")


def _linf_matrix(d1: PersistenceDiagram, d2: PersistenceDiagram) -> np.ndarray:
    return np.maximum(
        np.abs(d1.births[:, None] - d2.births[None, :]),
        np.abs(d1.deaths[:, None] - d2.deaths[None, :]),
    )


def _diag_costs(dg: PersistenceDiagram) -> np.ndarray:
    return np.abs(dg.births - dg.deaths) / 2.0


def wasserstein(d1: PersistenceDiagram, d2: PersistenceDiagram, p: float = 2.0):
    """p-Wasserstein distance and the optimal matching that achieves it."""
    _check_dims(d1, d2)
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    n, m = len(d1), len(d2)
    if n == 0 and m == 0:
        return 0.0, Matching((), (), (), 0.0)

    cost = np.zeros((n + m, n + m))
    cost[:n, :m] = _linf_matrix(d1, d2) ** p
    cost[:n, m:] = (_diag_costs(d1) ** p)[:, None]
    cost[n:, :m] = (_diag_costs(d2) ** p)[None, :]

    rows, cols = linear_sum_assignment(cost)
    # exact summation: the total is then independent of assignment order and
    # of zero-cost entries, making diagonal padding exactly invisible
    total = float(math.fsum(cost[rows, cols].tolist()))

    direct, diag_left, diag_right = [], [], []
    for r, c in zip(rows.tolist(), cols.tolist()):
        if r < n and c < m:
            direct.append((r, c))
        elif r < n:
            diag_left.append(r)
        elif c < m:
            diag_right.append(c)
    matching = Matching(tuple(direct), tuple(diag_left), tuple(diag_right), total)
    return float(total ** (1.0 / p)), matching


def total_persistence(dg: PersistenceDiagram, p: float = 2.0) -> float:
    """Sum of p-th powers of the persistences of all points (no outer root)."""
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    pers = np.abs(dg.births - dg.deaths)
    return float((pers**p).sum())


def _max_matching_saturates(adjacency: np.ndarray) -> bool:
    """True when every row of the bipartite adjacency can be matched."""
    k, m = adjacency.shape
    if k == 0:
        return True
    if k > m:
        return False
    neighbours = [np.flatnonzero(adjacency[i]) for i in range(k)]
    if any(nb.size == 0 for nb in neighbours):
        return False
    match_l = np.full(k, -1, dtype=np.int64)
    match_r = np.full(m, -1, dtype=np.int64)

    # greedy seed
    for i in range(k):
        for r in neighbours[i]:
            if match_r[r] < 0:
                match_r[r] = i
                match_l[i] = r
                break

    for s in range(k):
        if match_l[s] >= 0:
            continue
        visited = np.zeros(m, dtype=bool)
        prev = {}
        stack = [(s, iter(neighbours[s]))]
        augmented = False
        while stack:
            left, it = stack[-1]
            advanced = False
            for r in it:
                r = int(r)
                if visited[r]:
                    continue
                visited[r] = True
                prev[r] = left
                if match_r[r] < 0:
                    cur = r
                    while True:
                        l2 = prev[cur]
                        old = match_l[l2]
                        match_r[cur] = l2
                        match_l[l2] = cur
                        if old < 0:
                            break
                        cur = int(old)
                    augmented = True
                    break
                stack.append((int(match_r[r]), iter(neighbours[int(match_r[r])])))
                advanced = True
                break
            if augmented:
                break
            if not advanced:
                stack.pop()
        if not augmented:
            return False
    return True


def bottleneck(d1: PersistenceDiagram, d2: PersistenceDiagram) -> float:
    """Bottleneck distance: min over augmented bijections of the max cost.

    Binary search over the sorted candidate costs (all pairwise sup-norm
    distances plus all diagonal costs); feasibility at a candidate c asks
    for a matching covering every point whose diagonal cost exceeds c, on
    each side, along edges of cost <= c.
    """
    _check_dims(d1, d2)
    n, m = len(d1), len(d2)
    if n == 0 and m == 0:
        return 0.0
    linf = _linf_matrix(d1, d2)
    diag1 = _diag_costs(d1)
    diag2 = _diag_costs(d2)
    candidates = np.unique(np.concatenate([[0.0], linf.ravel(), diag1, diag2]))

    def feasible(c: float) -> bool:
        adj = linf <= c
        need_l = diag1 > c
        need_r = diag2 > c
        # a matching covering both required sets exists iff one covering each
        # side exists (Mendelsohn-Dulmage)
        return _max_matching_saturates(adj[need_l, :]) and _max_matching_saturates(
            adj[:, need_r].T
        )

    lo, hi = 0, candidates.size - 1
    if feasible(float(candidates[lo])):
        return float(candidates[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(float(candidates[mid])):
            hi = mid
        else:
            lo = mid
    return float(candidates[hi])
