"""Brute-force search for resting configurations, independent of the engine.

At a planar configuration ``(r_o, v_o)`` cable ``i`` allows the object no
lower than ``z_r - sqrt(l_i^2 - d_i^2)``, with ``l_i = |v_i - v_o|`` its
length and ``d_i = |r_i - r_o|`` its planar span.  The object rests at the
highest of these bounds, so

    z_min(v_o, r_o) = z_r - sqrt(min_i (l_i^2 - d_i^2)),

and equilibria are local minima of ``z_min`` over the four planar unknowns.
The search scans a coarse grid, descends from every grid minimum with a
pattern search, then polishes with SLSQP on the smooth epigraph form
``min t  s.t.  l_i^2 - d_i^2 >= (z_r - t)^2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import minimize

from .cqp import Infeasible
from .engine import Solution
from .scene import Scene

ACTIVE_EPS = 1e-9
MERGE_TOL = 1e-4
MIN_STEP = 1e-6
LEVEL_EPS = 1e-9

CABLE_TOO_SHORT = Infeasible("CableTooShort")
OUTSIDE_SHEET = Infeasible("ContactOutsideSheet")

STRICT_LOCAL_MIN = "StrictLocalMin"
SADDLE = "Saddle"
DEGENERATE = "Degenerate"

# all non-zero directions with entries in {-1, 0, 1}, order (x_o, y_o, x_vo, y_vo)
_PATTERN = np.array([d for d in itertools.product((-1, 0, 1), repeat=4) if any(d)], dtype=float)


@dataclass(frozen=True)
class Equilibrium:
    """A local minimum of the height envelope.

    ``active_set`` lists the 1-based cables within the activity tolerance of
    the binding one; ``ground_contact`` flags minima at or below the floor.
    """

    r_o: np.ndarray
    v_o: np.ndarray
    z_min: float
    active_set: tuple[int, ...]
    ground_contact: bool = False

    @property
    def p_o(self) -> np.ndarray:
        return np.array([self.r_o[0], self.r_o[1], self.z_min])

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.r_o, self.v_o])


def _edge_normals(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """Counterclockwise sheet vertices and unnormalised inward edge normals."""
    P = scene.sheet_ccw()
    e = np.roll(P, -1, axis=0) - P
    return P, np.column_stack([-e[:, 1], e[:, 0]])


def _inside_sheet(scene: Scene, v_o: np.ndarray, eps: float = 0.0) -> np.ndarray:
    """Vectorised polygon membership for points of shape ``(..., 2)``."""
    P, nrm = _edge_normals(scene)
    scale = np.linalg.norm(nrm, axis=1)
    d = v_o[..., None, :] - P
    dist = np.sum(d * nrm, axis=-1) / scale
    return np.all(dist >= -eps, axis=-1)


def clearance_values(scene: Scene, x: np.ndarray) -> np.ndarray:
    """``l_i^2 - d_i^2`` for configurations ``x`` of shape ``(..., 4)``; result ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    l2 = np.sum((scene.sheet_vertices - x[..., None, 2:]) ** 2, axis=-1)
    d2 = np.sum((scene.robots - x[..., None, :2]) ** 2, axis=-1)
    return l2 - d2


def envelope_values(scene: Scene, x: np.ndarray) -> np.ndarray:
    """Height envelope for configurations ``x`` of shape ``(..., 4)``; ``inf`` where infeasible."""
    x = np.asarray(x, dtype=float)
    q = np.min(clearance_values(scene, x), axis=-1)
    ok = (q >= 0) & _inside_sheet(scene, x[..., 2:])
    z = np.full(q.shape, np.inf)
    z[ok] = scene.z_r - np.sqrt(q[ok])
    return z


def envelope_at(scene: Scene, v_o, r_o, active_eps: float = ACTIVE_EPS
                ) -> tuple[float, tuple[int, ...]] | Infeasible:
    """Lowest feasible object height at ``(v_o, r_o)`` and the cables holding it there."""
    x = np.concatenate([np.asarray(r_o, dtype=float), np.asarray(v_o, dtype=float)])
    if not _inside_sheet(scene, x[2:]):
        return OUTSIDE_SHEET
    q = clearance_values(scene, x)
    if q.min() < 0:
        return CABLE_TOO_SHORT
    heights = scene.z_r - np.sqrt(q)
    z = float(heights.max())
    active = tuple(int(i) + 1 for i in np.nonzero(heights >= z - active_eps)[0])
    return z, active


def _grid_axes(scene: Scene, points_per_axis: int | None, resolution: float | None) -> list[np.ndarray]:
    lo = np.concatenate([scene.robots.min(axis=0), scene.sheet_vertices.min(axis=0)])
    hi = np.concatenate([scene.robots.max(axis=0), scene.sheet_vertices.max(axis=0)])
    axes = []
    for a, b in zip(lo, hi):
        if resolution is not None:
            count = max(3, int(math.ceil((b - a) / resolution)) + 1)
        else:
            count = points_per_axis
        axes.append(np.linspace(a, b, count))
    return axes


def _grid_envelope(scene: Scene, axes: list[np.ndarray]) -> np.ndarray:
    """Envelope on the tensor grid ``axes`` (x_o, y_o, x_vo, y_vo), built cable by cable."""
    xo, yo, xv, yv = axes
    qmin = None
    for (vx, vy), (rx, ry) in zip(scene.sheet_vertices, scene.robots):
        d2 = (xo[:, None] - rx) ** 2 + (yo[None, :] - ry) ** 2
        l2 = (xv[:, None] - vx) ** 2 + (yv[None, :] - vy) ** 2
        q = l2[None, None, :, :] - d2[:, :, None, None]
        qmin = q if qmin is None else np.minimum(qmin, q)
    vgrid = np.stack(np.meshgrid(xv, yv, indexing="ij"), axis=-1)
    inside = _inside_sheet(scene, vgrid)
    ok = (qmin >= 0) & inside[None, None, :, :]
    z = np.full(qmin.shape, np.inf)
    z[ok] = scene.z_r - np.sqrt(qmin[ok])
    return z


def _pattern_search(scene: Scene, x0: np.ndarray, step: np.ndarray, min_step: float = MIN_STEP,
                    max_iter: int = 20000) -> tuple[np.ndarray, float]:
    x = np.array(x0, dtype=float)
    z = float(envelope_values(scene, x))
    step = np.array(step, dtype=float)
    for _ in range(max_iter):
        if step.max() < min_step:
            break
        trial = x + _PATTERN * step
        zt = envelope_values(scene, trial)
        best = int(np.argmin(zt))
        if zt[best] < z:
            x, z = trial[best], float(zt[best])
        else:
            step *= 0.5
    return x, z


def _polish(scene: Scene, x0: np.ndarray) -> tuple[np.ndarray, float]:
    """SLSQP on ``min t`` with ``l_i^2 - d_i^2 >= (z_r - t)^2``, ``t <= z_r``, ``v_o`` in the sheet."""
    z0 = float(envelope_values(scene, x0))
    if not np.isfinite(z0):
        return x0, z0
    V, R, zr = scene.sheet_vertices, scene.robots, scene.z_r
    P, nrm = _edge_normals(scene)

    def cons(y):
        x, t = y[:4], y[4]
        q = clearance_values(scene, x)
        poly = np.sum((x[2:] - P) * nrm, axis=1)
        return np.concatenate([q - (zr - t) ** 2, [zr - t], poly])

    def cons_jac(y):
        x, t = y[:4], y[4]
        n = scene.n
        J = np.zeros((n + 1 + len(P), 5))
        J[:n, 0:2] = 2 * (R - x[:2])
        J[:n, 2:4] = -2 * (V - x[2:])
        J[:n, 4] = 2 * (zr - t)
        J[n, 4] = -1.0
        J[n + 1:, 2:4] = nrm
        return J

    res = minimize(
        lambda y: y[4],
        np.concatenate([x0, [z0]]),
        jac=lambda y: np.array([0.0, 0.0, 0.0, 0.0, 1.0]),
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 200},
    )
    x1 = res.x[:4]
    z1 = float(envelope_values(scene, x1))
    if np.isfinite(z1) and z1 <= z0:
        return x1, z1
    return x0, z0


def _merge(found: list[tuple[np.ndarray, float]], tol: float) -> list[tuple[np.ndarray, float]]:
    out: list[tuple[np.ndarray, float]] = []
    for x, z in sorted(found, key=lambda t: t[1]):
        if all(np.max(np.abs(x - y)) > tol for y, _ in out):
            out.append((x, z))
    return out


def find_equilibria(scene: Scene, coarse_resolution: float | None = None, *,
                    points_per_axis: int = 25, merge_tol: float = MERGE_TOL,
                    active_eps: float = 1e-6) -> list[Equilibrium]:
    """Local minima of the height envelope, lowest first.

    Parameters
    ----------
    scene : Scene
    coarse_resolution : float, optional
        Grid spacing in metres; overrides ``points_per_axis``.
    points_per_axis : int
        Grid points per planar unknown when no resolution is given.  The
        grid spans the robots' bounding box for ``r_o`` and the sheet's for
        ``v_o``.
    merge_tol : float
        Minima closer than this (max-norm over the four unknowns) are merged.
    active_eps : float
        Height band for reporting the cables that hold each minimum.
    """
    if coarse_resolution is not None and not coarse_resolution > 0:
        raise ValueError("coarse_resolution must be positive")
    if points_per_axis < 3:
        raise ValueError("need at least 3 grid points per axis")
    axes = _grid_axes(scene, points_per_axis, coarse_resolution)
    z = _grid_envelope(scene, axes)
    if not np.isfinite(z).any():
        return []
    # grid minima over the full 3x3x3x3 neighbourhood
    seeds = np.isfinite(z) & (z <= minimum_filter(z, size=3, mode="constant", cval=np.inf))
    spacing = np.array([a[1] - a[0] for a in axes])
    found = []
    for idx in np.argwhere(seeds):
        x0 = np.array([axes[d][i] for d, i in enumerate(idx)])
        x, zx = _pattern_search(scene, x0, spacing)
        x, zx = _polish(scene, x)
        x, zx = _pattern_search(scene, x, np.full(4, 1e-4))
        found.append((x, zx))
    out = []
    for x, zx in _merge(found, merge_tol):
        _, active = envelope_at(scene, x[2:], x[:2], active_eps)
        out.append(Equilibrium(x[:2].copy(), x[2:].copy(), zx, active, ground_contact=zx <= 0))
    return out


def _probe_directions(count: int = 400, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = np.vstack([_PATTERN, rng.standard_normal((count, 4))])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _shell_minimum(scene: Scene, center: np.ndarray, radius: float, start: np.ndarray) -> float:
    """Lowest envelope value on the sphere ``|x - center| = radius``, locally from ``start``."""
    zr = scene.z_r
    P, nrm = _edge_normals(scene)
    V, R = scene.sheet_vertices, scene.robots
    n = scene.n

    def ineq(y):
        x, t = y[:4], y[4]
        return np.concatenate([clearance_values(scene, x) - (zr - t) ** 2, [zr - t],
                               np.sum((x[2:] - P) * nrm, axis=1)])

    def ineq_jac(y):
        x, t = y[:4], y[4]
        J = np.zeros((n + 1 + len(P), 5))
        J[:n, 0:2] = 2 * (R - x[:2])
        J[:n, 2:4] = -2 * (V - x[2:])
        J[:n, 4] = 2 * (zr - t)
        J[n, 4] = -1.0
        J[n + 1:, 2:4] = nrm
        return J

    def on_shell(y):
        d = y[:4] - center
        return np.array([(d @ d) / radius ** 2 - 1.0])

    def on_shell_jac(y):
        return np.concatenate([2 * (y[:4] - center) / radius ** 2, [0.0]])[None, :]

    z_start = float(envelope_values(scene, start))
    res = minimize(
        lambda y: y[4],
        np.concatenate([start, [z_start]]),
        jac=lambda y: np.array([0.0, 0.0, 0.0, 0.0, 1.0]),
        constraints=[{"type": "ineq", "fun": ineq, "jac": ineq_jac},
                     {"type": "eq", "fun": on_shell, "jac": on_shell_jac}],
        method="SLSQP",
        options={"ftol": 1e-16, "maxiter": 200},
    )
    x = center + radius * (res.x[:4] - center) / np.linalg.norm(res.x[:4] - center)
    return min(z_start, float(envelope_values(scene, x)))


def classify_solution(scene: Scene, solution: Solution, probe_radius: float = 1e-4,
                      level_eps: float = LEVEL_EPS, refine: int = 8) -> str:
    """Second-order verdict on an engine solution from a probe shell around it.

    The envelope is sampled on the 4-D sphere of radius ``probe_radius``
    and the ``refine`` lowest samples are pushed further down along the
    sphere, since descent cones at multi-cable corners can be narrow.
    ``StrictLocalMin`` when the lowest feasible shell point sits more than
    ``level_eps`` above the solution, ``Saddle`` when it is lower by more than
    ``level_eps``, ``Degenerate`` otherwise (including no feasible probe).
    """
    x = np.asarray(solution.x, dtype=float)
    z0 = float(envelope_values(scene, x))
    if not np.isfinite(z0):
        z0 = solution.z_o
    probes = x + probe_radius * _probe_directions()
    zp = envelope_values(scene, probes)
    feasible = np.isfinite(zp)
    if not feasible.any():
        return DEGENERATE
    lowest = float(zp[feasible].min())
    for i in np.argsort(zp)[:refine]:
        if np.isfinite(zp[i]) and lowest >= z0 - level_eps:
            lowest = min(lowest, _shell_minimum(scene, x, probe_radius, probes[i]))
    if lowest < z0 - level_eps:
        return SADDLE
    if lowest > z0 + level_eps:
        return STRICT_LOCAL_MIN
    return DEGENERATE


def classify_all(scene: Scene, solutions, probe_radius: float = 1e-4) -> list[str]:
    return [classify_solution(scene, s, probe_radius) for s in solutions]
