"""Minimum-distance projection onto a planar polygon by active-set enumeration.

Solves ``min ||u - target||^2  s.t.  A u >= b`` for ``u`` in R^2. With two
unknowns the optimum has at most two independent active constraints, so
enumerating the unconstrained point, every single-constraint projection
and every pairwise vertex and keeping the closest feasible candidate is
exact.
"""

from __future__ import annotations

import numpy as np

FEAS_RTOL = 1e-10


def box_rows(u_max) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``A u >= b`` encoding ``|u_i| <= u_max_i`` (infinite bounds skipped)."""
    u_max = np.asarray(u_max, dtype=float)
    rows, rhs = [], []
    for i, bound in enumerate(u_max):
        if np.isfinite(bound):
            e = np.zeros(len(u_max))
            e[i] = 1.0
            rows += [e, -e]
            rhs += [-bound, -bound]
    return np.array(rows).reshape(-1, len(u_max)), np.array(rhs)


def _feasible(A: np.ndarray, b: np.ndarray, U: np.ndarray) -> np.ndarray:
    slack = U @ A.T - b
    scale = 1.0 + np.abs(b) + np.linalg.norm(A, axis=1) * np.linalg.norm(U, axis=1, keepdims=True)
    return np.all(slack >= -FEAS_RTOL * scale, axis=1)


def project(target, A, b) -> np.ndarray | None:
    """Closest point to ``target`` in ``{u : A u >= b}``; ``None`` if empty."""
    target = np.asarray(target, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).ravel()
    norms2 = (A * A).sum(axis=1)
    live = norms2 > 1e-300
    if np.any(~live & (b > 0)):
        return None  # 0 >= positive
    A, b, norms2 = A[live], b[live], norms2[live]
    if len(A) == 0 or _feasible(A, b, target[None])[0]:
        return target.copy()

    cands = [target + ((b - A @ target) / norms2)[:, None] * A]
    i, j = np.triu_indices(len(A), k=1)
    if len(i):
        a1, a2 = A[i], A[j]
        det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
        ok = np.abs(det) > 1e-14 * np.sqrt(norms2[i] * norms2[j])
        a1, a2, d = a1[ok], a2[ok], det[ok]
        b1, b2 = b[i][ok], b[j][ok]
        verts = np.stack([(b1 * a2[:, 1] - b2 * a1[:, 1]) / d, (a1[:, 0] * b2 - a2[:, 0] * b1) / d], axis=1)
        cands.append(verts)
    U = np.concatenate(cands)
    feas = _feasible(A, b, U)
    if not np.any(feas):
        return None
    U = U[feas]
    dist = ((U - target) ** 2).sum(axis=1)
    return U[int(np.argmin(dist))]
