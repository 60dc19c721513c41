"""Linearised cable constraints for a taut set and the rank-based closure test.

Subtracting the pivot cable's length equation from every other cable's removes
the quadratic terms, leaving one linear row ``a_j . x = b_j`` per cable in the
unknowns ``x = (x_o, y_o, x_vo, y_vo)``.  Taut cables contribute equalities,
slack cables strict inequalities ``a_l . x > b_l``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .scene import Scene, TautSet

RANK_EPS = 1e-9


class PivotNotTautError(ValueError):
    pass


def cable_rows(scene: Scene, pivot: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``(a_j, b_j)`` of every cable relative to the 1-based ``pivot``.

    The pivot's own row is identically zero.
    """
    V, R = scene.sheet_vertices, scene.robots
    p = pivot - 1
    a = np.column_stack(
        [R[:, 0] - R[p, 0], R[:, 1] - R[p, 1], V[p, 0] - V[:, 0], V[p, 1] - V[:, 1]]
    )
    vv = np.sum(V * V, axis=1)
    rr = np.sum(R * R, axis=1)
    # same operation order as batch_form_closure so both paths agree bitwise
    b = 0.5 * (vv[p] - vv - rr[p] + rr)
    return a, b


def reduce_rows(aug: np.ndarray, eps: float = RANK_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Batched Gaussian elimination on augmented systems ``[A | b]``.

    Parameters
    ----------
    aug : ndarray, shape (M, m, 5)
        ``M`` independent systems of ``m`` rows over four unknowns.
    eps : float
        A candidate pivot is zero when ``|pivot| <= eps * max(1, |row|)`` with
        ``|row|`` the norm of the original coefficient row.

    Returns
    -------
    pivot_rows : ndarray of int, shape (M, 4)
        Original row index chosen as pivot for each column, ``-1`` where the
        column has no pivot.  The non-negative entries, in order, give a
        maximal independent row subset.
    consistent : ndarray of bool, shape (M,)
        False when a row without a pivot keeps a right-hand side above
        ``eps * max(1, |augmented row|)``; i.e. ``rank(A) < rank([A b])``.
    """
    work = np.array(aug, dtype=float, copy=True)
    M, m, _ = work.shape
    pivot_rows = np.full((M, 4), -1, dtype=np.intp)
    if m == 0:
        return pivot_rows, np.ones(M, dtype=bool)
    coef_scale = np.maximum(1.0, np.linalg.norm(work[:, :, :4], axis=2))
    aug_scale = np.maximum(1.0, np.linalg.norm(work, axis=2))
    used = np.zeros((M, m), dtype=bool)
    batch = np.arange(M)
    for col in range(4):
        score = np.abs(work[:, :, col]) / coef_scale
        score[used] = -1.0
        r = np.argmax(score, axis=1)
        ok = score[batch, r] > eps
        if not ok.any():
            continue
        bi, ri = batch[ok], r[ok]
        pivot_rows[bi, col] = ri
        used[bi, ri] = True
        prow = work[bi, ri, :]  # (Mo, 5)
        factors = work[bi, :, col] / prow[:, col:col + 1]  # (Mo, m)
        factors[used[bi]] = 0.0
        work[bi] -= factors[:, :, None] * prow[:, None, :]
    resid = np.abs(work[:, :, 4]) / aug_scale
    resid[used] = 0.0
    consistent = np.all(resid <= eps, axis=1)
    return pivot_rows, consistent


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Linearised constraints of one taut set.

    ``a1 x = b1`` collects the non-pivot taut cables, ``a2 x > b2`` the slack
    cables.  After :func:`extract_independent_rows`, ``a11``/``b11`` hold a
    maximal independent subset of the taut rows (``k1`` of them) and
    ``row_map`` gives their cable labels.
    """

    taut: TautSet
    pivot: int
    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    taut_rows: tuple[int, ...]
    slack_rows: tuple[int, ...]
    a11: Optional[np.ndarray] = None
    b11: Optional[np.ndarray] = None
    row_map: Optional[tuple[int, ...]] = None

    @property
    def k(self) -> int:
        return self.taut.k

    @property
    def k1(self) -> Optional[int]:
        return None if self.a11 is None else len(self.a11)

    @property
    def augmented(self) -> np.ndarray:
        return np.column_stack([self.a1, self.b1])

    def redundant_cables(self) -> tuple[int, ...]:
        """Taut cables whose equations are implied by the others."""
        if self.row_map is None:
            raise ValueError("independent rows not extracted yet")
        return tuple(c for c in self.taut_rows if c not in self.row_map)


def build_linear_system(scene: Scene, taut: TautSet, pivot: int | None = None) -> LinearSystem:
    """Assemble ``A1, b1, A2, b2`` for ``taut`` with the given pivot cable."""
    if taut.indices[-1] > scene.n:
        raise IndexError(f"taut set {taut} refers to cables beyond n = {scene.n}")
    if pivot is None:
        pivot = taut.indices[0]
    if pivot not in taut:
        raise PivotNotTautError(f"pivot {pivot} is not in taut set {taut}")
    a, b = cable_rows(scene, pivot)
    taut_rows = tuple(i for i in taut.indices if i != pivot)
    slack_rows = taut.slack(scene.n)
    ti = [i - 1 for i in taut_rows]
    si = [i - 1 for i in slack_rows]
    return LinearSystem(
        taut=taut,
        pivot=pivot,
        a1=a[ti].reshape(-1, 4),
        b1=b[ti],
        a2=a[si].reshape(-1, 4),
        b2=b[si],
        taut_rows=taut_rows,
        slack_rows=slack_rows,
    )


def form_closure_check(system: LinearSystem, eps: float = RANK_EPS) -> bool:
    """``rank(A1) == rank([A1 b1])`` under the elimination tolerance."""
    _, consistent = reduce_rows(system.augmented[None], eps)
    return bool(consistent[0])


def extract_independent_rows(system: LinearSystem, eps: float = RANK_EPS) -> LinearSystem:
    """Fill ``a11``, ``b11`` and ``row_map`` from a maximal independent row subset.

    Rows keep their original order in ``a1``.
    """
    pivots, _ = reduce_rows(system.augmented[None], eps)
    keep = sorted(int(r) for r in pivots[0] if r >= 0)
    return replace(
        system,
        a11=system.a1[keep],
        b11=system.b1[keep],
        row_map=tuple(system.taut_rows[r] for r in keep),
    )


def batch_augmented(scene: Scene, combos: np.ndarray) -> np.ndarray:
    """``[A1 | b1]`` for many equal-size taut sets, pivot = first column of ``combos``.

    ``combos`` holds sorted 0-based cable indices, shape ``(M, k)``; the
    result has shape ``(M, k - 1, 5)``.
    """
    combos = np.asarray(combos, dtype=np.intp)
    M, k = combos.shape
    V, R = scene.sheet_vertices, scene.robots
    vv = np.sum(V * V, axis=1)
    rr = np.sum(R * R, axis=1)
    p = combos[:, :1]
    j = combos[:, 1:]
    aug = np.empty((M, k - 1, 5))
    aug[:, :, 0] = R[j, 0] - R[p, 0]
    aug[:, :, 1] = R[j, 1] - R[p, 1]
    aug[:, :, 2] = V[p, 0] - V[j, 0]
    aug[:, :, 3] = V[p, 1] - V[j, 1]
    aug[:, :, 4] = 0.5 * (vv[p] - vv[j] - rr[p] + rr[j])
    return aug


def batch_form_closure(scene: Scene, combos: np.ndarray, eps: float = RANK_EPS) -> np.ndarray:
    """Closure verdicts for many taut sets of equal size, as in :func:`form_closure_check`."""
    _, consistent = reduce_rows(batch_augmented(scene, combos), eps)
    return consistent
