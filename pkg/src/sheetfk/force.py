"""Force balance of the point mass under the taut cables.

Gravity can be balanced by non-negative cable tensions exactly when the
object's planar position lies inside the convex hull of the taut robots; the
hull test gates acceptance, the explicit tension solve is a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .scene import Configuration, Scene, TautSet
from .tolerances import DEFAULT_TOLERANCES, Tolerances


class NoNonnegativeSolutionError(RuntimeError):
    pass


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Counterclockwise hull vertices (Andrew's monotone chain), collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)  # sorted by x then y
    if len(pts) <= 2:
        return pts

    def half(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def hull_clearance(point: np.ndarray, hull: np.ndarray) -> float:
    """Signed distance from ``point`` to the nearest hull edge line (positive inside).

    Degenerate hulls (fewer than three vertices) give ``-inf``.
    """
    if len(hull) < 3:
        return -np.inf
    e = np.roll(hull, -1, axis=0) - hull
    d = np.asarray(point, dtype=float) - hull
    cross = (e[:, 0] * d[:, 1] - e[:, 1] * d[:, 0]) / np.linalg.norm(e, axis=1)
    return float(cross.min())


def force_closure_check(scene: Scene, taut: TautSet, config: Configuration,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """``r_o`` strictly inside the hull of the taut robots (boundary fails)."""
    hull = convex_hull(scene.robots[list(taut.zero_based)])
    return hull_clearance(config.r_o, hull) > tol.hull


def cable_directions(scene: Scene, taut: TautSet, config: Configuration) -> np.ndarray:
    """Unit vectors from the object to each taut holding point, shape ``(3, k)``."""
    d = scene.holding_points[list(taut.zero_based)] - config.p_o
    return (d / np.linalg.norm(d, axis=1, keepdims=True)).T


@dataclass(frozen=True)
class TensionDiagnostic:
    tensions: np.ndarray
    residual: float
    unique: bool


def _min_norm_nonnegative(T: np.ndarray, w: np.ndarray, iters: int = 100) -> np.ndarray | None:
    """Minimum-norm ``F >= 0`` with ``T F = w`` via semismooth Newton on the dual.

    The optimum is ``F = max(0, T' mu)`` where ``mu`` minimises the convex
    ``1/2 |max(0, T' mu)|^2 - w' mu``.
    """
    mu = np.linalg.lstsq(T.T, np.ones(T.shape[1]), rcond=None)[0]
    mu *= max(np.linalg.norm(w), 1.0)

    def phi(m):
        s = np.maximum(T.T @ m, 0.0)
        return 0.5 * s @ s - w @ m

    for _ in range(iters):
        s = T.T @ mu
        F = np.maximum(s, 0.0)
        g = T @ F - w
        if np.linalg.norm(g) <= 1e-13 * max(1.0, np.linalg.norm(w)):
            return F
        act = s > 0
        Hm = T[:, act] @ T[:, act].T + 1e-14 * np.eye(len(w))
        step = -np.linalg.lstsq(Hm, g, rcond=None)[0]
        t, f0 = 1.0, phi(mu)
        while t > 1e-12 and phi(mu + t * step) > f0 + 1e-4 * t * (g @ step):
            t *= 0.5
        mu = mu + t * step
    F = np.maximum(T.T @ mu, 0.0)
    return F if np.linalg.norm(T @ F - w) <= 1e-9 * max(1.0, np.linalg.norm(w)) else None


def solve_tensions(scene: Scene, taut: TautSet, config: Configuration) -> TensionDiagnostic:
    """Non-negative cable tensions (N) balancing the object's weight.

    For ``k > 3`` the tensions are not unique; the minimum-norm solution is
    returned and ``unique`` is False.
    """
    T = cable_directions(scene, taut, config)
    weight = scene.object_mass * scene.gravity
    w = np.array([0.0, 0.0, weight])
    if taut.k == 3 and abs(np.linalg.det(T)) > 1e-12:
        F = np.linalg.solve(T, w)
        unique = True
        if F.min() < -1e-9:
            raise NoNonnegativeSolutionError(f"taut set {taut}: tensions {F} not all non-negative")
        F = np.maximum(F, 0.0)
    else:
        unique = np.linalg.matrix_rank(T) == taut.k
        F = _min_norm_nonnegative(T, w)
        if F is None:
            # fall back to any non-negative solution
            F, _ = nnls(T, w)
    residual = float(np.linalg.norm(T @ F - w))
    if residual > 1e-8 * weight:
        raise NoNonnegativeSolutionError(
            f"taut set {taut}: no non-negative tensions balance the weight (residual {residual:.3g} N)"
        )
    return TensionDiagnostic(F, residual, bool(unique))
