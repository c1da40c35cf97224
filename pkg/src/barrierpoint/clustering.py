"""k-means with k-means++ seeding and BIC-driven choice of k."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import KTooLarge

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray  # R x d
    weights: np.ndarray  # per-point instruction weight

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("points must be a non-empty R x d array")
        if self.weights.shape != (self.points.shape[0],):
            raise ValueError("one weight per point required")


@dataclass(frozen=True)
class ClusteringResult:
    k: int
    assignment: np.ndarray
    centroids: np.ndarray
    sse: float
    bic_score: float
    seed: int
    iterations_used: int
    sse_history: tuple[float, ...] = ()
    bic_curve: dict = field(default_factory=dict)  # k -> BIC, filled by select_k

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)


def _as_points(points) -> np.ndarray:
    if isinstance(points, PointSet):
        points = points.points
    return np.asarray(points, dtype=np.float64)


def distinct_count(points) -> int:
    return np.unique(_as_points(points), axis=0).shape[0]


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # |p|^2 - 2 p.c + |c|^2, clipped since cancellation can dip just below zero
    d2 = np.einsum("nd,nd->n", points, points)[:, None] - 2.0 * (points @ centroids.T)
    d2 += np.einsum("kd,kd->k", centroids, centroids)[None, :]
    return np.maximum(d2, 0.0)


def _plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(points, points[chosen]).min(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        # k <= distinct points keeps total > 0 here
        nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(points, points[nxt : nxt + 1])[:, 0])
    return points[chosen].copy()


def _means(points: np.ndarray, assignment: np.ndarray, k: int) -> np.ndarray:
    onehot = np.zeros((k, points.shape[0]))
    onehot[assignment, np.arange(points.shape[0])] = 1.0
    return (onehot @ points) / onehot.sum(axis=1)[:, None]


def _repair_empty(assignment: np.ndarray, d2: np.ndarray, k: int) -> np.ndarray:
    assignment = assignment.copy()
    counts = np.bincount(assignment, minlength=k)
    for j in np.flatnonzero(counts == 0):
        own = d2[np.arange(len(assignment)), assignment]
        own = np.where(counts[assignment] > 1, own, -1.0)
        far = int(np.argmax(own))
        counts[assignment[far]] -= 1
        assignment[far] = j
        counts[j] = 1
    return assignment


def _sse(points, assignment, centroids) -> float:
    diff = points - centroids[assignment]
    return float(np.einsum("nd,nd->", diff, diff))


def _lloyd(points, k, rng, max_iter):
    centroids = _plus_plus(points, k, rng)
    assignment = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(points, centroids)
        new = _repair_empty(np.argmin(d2, axis=1), d2, k)
        if assignment is not None and np.array_equal(new, assignment):
            break
        assignment = new
        centroids = _means(points, assignment, k)
        history.append(_sse(points, assignment, centroids))
    return assignment, centroids, history, it


def kmeans(points, k: int, seed: int = 0, restarts: int = 5, max_iter: int = 100) -> ClusteringResult:
    """Best-SSE clustering over ``restarts`` seeded k-means++/Lloyd runs."""
    pts = _as_points(points)
    distinct = distinct_count(pts)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > distinct:
        raise KTooLarge(k, distinct)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        assignment, centroids, history, iters = _lloyd(pts, k, rng, max_iter)
        sse = _sse(pts, assignment, centroids)
        if best is None or sse < best[3]:
            best = (assignment, centroids, history, sse, iters)
    assignment, centroids, history, sse, iters = best
    result = ClusteringResult(k, assignment, centroids, sse, 0.0, seed, iters, tuple(history))
    return _with_bic(result, bic_score(pts, result))


def _with_bic(result: ClusteringResult, bic: float, curve=None) -> ClusteringResult:
    return ClusteringResult(
        result.k,
        result.assignment,
        result.centroids,
        result.sse,
        bic,
        result.seed,
        result.iterations_used,
        result.sse_history,
        dict(curve) if curve is not None else result.bic_curve,
    )


def bic_score(points, result: ClusteringResult) -> float:
    """X-means style BIC of a spherical-Gaussian mixture fit; larger is better.

    The pooled variance estimate is floored at 1e-12, covering both R == k and
    exact zero-SSE fits.
    """
    pts = _as_points(points)
    R, d = pts.shape
    k = result.k
    sizes = np.bincount(result.assignment, minlength=k)
    sizes = sizes[sizes > 0]
    variance = result.sse / (d * (R - k)) if R > k else 0.0
    variance = max(variance, VARIANCE_FLOOR)
    log_lik = float(np.sum(sizes * np.log(sizes / R)))
    log_lik -= (R * d / 2.0) * math.log(2.0 * math.pi * variance)
    log_lik -= d * (R - k) / 2.0
    n_params = k * (d + 1)
    return log_lik - (n_params / 2.0) * math.log(R)


def candidate_ks(points, max_k: int) -> range:
    pts = _as_points(points)
    R = pts.shape[0]
    top = min(max_k, distinct_count(pts))
    if R > 1:
        top = min(top, R - 1)  # R == k leaves no residual degrees of freedom
    return range(1, max(top, 1) + 1)


def select_k(
    points,
    max_k: int = 20,
    bic_threshold: float = 0.9,
    seed: int = 0,
    restarts: int = 5,
    max_iter: int = 100,
) -> ClusteringResult:
    """Smallest k whose BIC reaches ``bic_threshold`` of the observed BIC range."""
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    pts = _as_points(points)
    results = {k: kmeans(pts, k, seed, restarts, max_iter) for k in candidate_ks(pts, max_k)}
    curve = {k: r.bic_score for k, r in results.items()}
    lo, hi = min(curve.values()), max(curve.values())
    cutoff = lo + bic_threshold * (hi - lo)
    chosen = min(k for k, b in curve.items() if b >= cutoff)
    return _with_bic(results[chosen], curve[chosen], curve)
