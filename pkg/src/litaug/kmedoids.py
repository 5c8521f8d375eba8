"""PAM-style k-medoids: greedy BUILD initialization plus best-swap descent.

All tie-breaking is by lowest index, so a given input always yields the same
clustering. The swap phase is a local search; it never increases cost but is
not guaranteed to reach the global optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError

_COST_EPS = 1e-12


@dataclass(frozen=True)
class Clustering:
    k: int
    medoid_indices: tuple[int, ...]
    assignment: tuple[int, ...]  # point index -> cluster id (position in medoid_indices)
    total_cost: float
    cost_trace: tuple[float, ...]  # cost after BUILD, then after each accepted swap
    n_points: int

    def recompute_cost(self, distances: np.ndarray) -> float:
        return float(
            sum(distances[i, self.medoid_indices[c]] for i, c in enumerate(self.assignment))
        )


def pairwise_distances(points: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValidationError(f"points must be a 2-D array, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValidationError("points contain non-finite values")
    if metric not in {"euclidean", "cosine"}:
        raise ValidationError(f"unsupported metric: {metric!r}")
    dmat = cdist(points, points, metric=metric)
    # cdist cosine can go slightly negative on identical rows
    return np.maximum(dmat, 0.0)


def k_medoids(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_swaps: int = 200,
    metric: str = "euclidean",
) -> Clustering:
    """Cluster row vectors around k member medoids.

    BUILD greedily adds the medoid that most reduces total point-to-nearest-
    medoid distance; SWAP then applies the single best medoid/non-medoid
    exchange until none reduces the cost or ``max_swaps`` is reached. ``seed``
    is accepted for interface stability; the procedure itself is
    deterministic, with cost ties resolved toward lower indices.
    """
    del seed
    points = np.asarray(points, dtype=float)
    n = points.shape[0] if points.ndim == 2 else 0
    if points.ndim != 2 or n == 0:
        raise ValidationError("k_medoids needs a non-empty 2-D point array")
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    dmat = pairwise_distances(points, metric=metric)

    # BUILD
    medoids: list[int] = [int(np.argmin(dmat.sum(axis=1)))]
    d_near = dmat[medoids[0]].copy()
    while len(medoids) < k:
        in_set = np.zeros(n, dtype=bool)
        in_set[medoids] = True
        candidate_costs = np.minimum(d_near[:, None], dmat[:, ~in_set]).sum(axis=0)
        candidates = np.flatnonzero(~in_set)
        chosen = int(candidates[int(np.argmin(candidate_costs))])
        medoids.append(chosen)
        d_near = np.minimum(d_near, dmat[chosen])
    cost = float(d_near.sum())
    trace = [cost]

    # SWAP
    for _ in range(max_swaps):
        med_arr = np.asarray(medoids)
        dist_to_medoids = dmat[med_arr]  # (k, n)
        order = np.argsort(dist_to_medoids, axis=0, kind="stable")
        nearest_pos = order[0]
        d1 = dist_to_medoids[nearest_pos, np.arange(n)]
        d2 = dist_to_medoids[order[1], np.arange(n)] if k > 1 else np.full(n, np.inf)
        best_delta = 0.0
        best_swap: tuple[int, int] | None = None
        med_set = set(medoids)
        non_medoids = [o for o in range(n) if o not in med_set]
        for m_pos in range(k):
            base = np.where(nearest_pos == m_pos, d2, d1)
            for o in non_medoids:
                delta = float(np.minimum(base, dmat[o]).sum()) - cost
                if delta < best_delta - _COST_EPS:
                    best_delta = delta
                    best_swap = (m_pos, o)
        if best_swap is None:
            break
        medoids[best_swap[0]] = best_swap[1]
        cost += best_delta
        trace.append(cost)

    # Canonical presentation: medoids ascending; nearest-medoid assignment
    # with distance ties resolved toward the lower medoid index.
    medoids = sorted(medoids)
    dist_to_medoids = dmat[np.asarray(medoids)]
    assignment = tuple(int(c) for c in np.argmin(dist_to_medoids, axis=0))
    total = float(dist_to_medoids[list(assignment), np.arange(n)].sum())
    trace[-1] = total  # recomputed exactly from the final assignment
    return Clustering(
        k=k,
        medoid_indices=tuple(int(m) for m in medoids),
        assignment=assignment,
        total_cost=total,
        cost_trace=tuple(trace),
        n_points=n,
    )
