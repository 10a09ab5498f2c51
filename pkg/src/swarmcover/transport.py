"""Exact Wasserstein distance between weighted planar point sets."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDistribution, NonFiniteCoordinates, TooLarge

# POT probes every array backend it can import; only numpy is needed here.
for _backend in ("PYTORCH", "JAX", "CUPY", "TENSORFLOW"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")

import ot  # noqa: E402

MAX_ORACLE_SIZE = 8


@dataclass(frozen=True, eq=False)
class WeightedPoints:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(pts) != len(w):
            raise ValueError(f"{len(pts)} points but {len(w)} weights")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "WeightedPoints":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts, np.ones(len(pts)))

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """Points with positive weight and their unit-mass weights."""
        if len(self.points) == 0:
            raise EmptyDistribution("no points")
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.weights))):
            raise NonFiniteCoordinates("points and weights must be finite")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        keep = self.weights > 0
        if not np.any(keep):
            raise EmptyDistribution("total weight is zero")
        w = self.weights[keep]
        return self.points[keep], w / w.sum()


def _cost_matrix(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1))
    return d if order == 1 else d**order


def wasserstein(a: WeightedPoints, b: WeightedPoints, order: int = 2) -> float:
    """W_order between the normalized distributions, by network simplex."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    pa, wa = a.normalized()
    pb, wb = b.normalized()
    M = _cost_matrix(pa, pb, order)
    # rescale so both marginals sum to the same float
    wb = wb * (wa.sum() / wb.sum())
    cost = ot.emd2(wa, wb, M, numItermax=max(100_000, 50 * M.size))
    return float(max(cost, 0.0)) ** (1.0 / order)


def matching_oracle(a: WeightedPoints, b: WeightedPoints, order: int = 2) -> float:
    """Brute-force optimum over all permutation matchings (uniform, equal-size sets)."""
    n = len(a.points)
    if n != len(b.points):
        raise ValueError("oracle needs equal cardinalities")
    if n == 0:
        raise EmptyDistribution("no points")
    if n > MAX_ORACLE_SIZE:
        raise TooLarge(f"{n} points; oracle enumerates at most {MAX_ORACLE_SIZE}")
    if not (np.allclose(a.weights, a.weights[0]) and np.allclose(b.weights, b.weights[0])):
        raise ValueError("oracle needs uniform weights")
    M = _cost_matrix(a.points, b.points, order)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        c = sum(M[i, j] for i, j in enumerate(perm))
        best = min(best, c)
    return (best / n) ** (1.0 / order)
