"""Minimum-height stationary point of a taut set, and the feasibility filters.

The object height follows from the pivot cable,
``(z_r - z_o)^2 = |v_p - v_o|^2 - |r_p - r_o|^2``, so lowering the object
means minimising ``f(x) = -(z_r - z_o)^2 = 1/2 x'Hx + c'x + f0`` subject to
the independent taut rows ``A11 x = b11``.  The stationary point is obtained
from the closed-form inverse of the KKT matrix

    L = [[H, -A11'], [-A11, 0]],   L^-1 = [[B, -C'], [-C, D]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constraints import LinearSystem
from .scene import Scene
from .tolerances import DEFAULT_TOLERANCES, Tolerances

H_DIAG = np.array([2.0, 2.0, -2.0, -2.0])
H = np.diag(H_DIAG)
H_INV_DIAG = 1.0 / H_DIAG
SCHUR_COND_LIMIT = 1e12


class SchurSingularError(np.linalg.LinAlgError):
    """``A11 H^-1 A11'`` is numerically singular."""


@dataclass(frozen=True)
class Objective:
    """``f(x) = 1/2 x'Hx + c'x + f0`` built around one pivot cable."""

    pivot: int
    c: np.ndarray
    f0: float

    @property
    def h(self) -> np.ndarray:
        return H

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (H_DIAG * x) + self.c @ x + self.f0)


def build_objective(scene: Scene, pivot: int) -> Objective:
    """Objective for the 1-based ``pivot`` cable."""
    if not 1 <= pivot <= scene.n:
        raise IndexError(f"pivot {pivot} outside 1..{scene.n}")
    r = scene.robots[pivot - 1]
    v = scene.sheet_vertices[pivot - 1]
    c = np.array([-2 * r[0], -2 * r[1], 2 * v[0], 2 * v[1]])
    return Objective(pivot, c, float(r @ r - v @ v))


def lagrange_block_inverse(objective: Objective, a11: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Blocks ``(B, C, D)`` of the inverse KKT matrix.

    ``S = A11 H^-1 A11'``; ``D = -S^-1``, ``C = S^-1 A11 H^-1`` and
    ``B = H^-1 - H^-1 A11' C``.
    """
    a11 = np.atleast_2d(np.asarray(a11, dtype=float))
    ah = a11 * H_INV_DIAG  # A11 H^-1
    schur = ah @ a11.T
    if not np.all(np.isfinite(schur)) or np.linalg.cond(schur) > SCHUR_COND_LIMIT:
        raise SchurSingularError(f"A11 H^-1 A11' is singular (cond = {np.linalg.cond(schur):.3g})")
    schur_inv = np.linalg.inv(schur)
    C = schur_inv @ ah
    B = np.diag(H_INV_DIAG) - ah.T @ C
    D = -schur_inv
    return B, C, D


def assemble_inverse(B: np.ndarray, C: np.ndarray, D: np.ndarray) -> np.ndarray:
    return np.block([[B, -C.T], [-C, D]])


def lagrange_matrix(a11: np.ndarray) -> np.ndarray:
    a11 = np.atleast_2d(a11)
    k1 = len(a11)
    return np.block([[H, -a11.T], [-a11, np.zeros((k1, k1))]])


@dataclass(frozen=True)
class LagrangeSolve:
    x: np.ndarray
    lam: np.ndarray
    blocks: tuple[np.ndarray, np.ndarray, np.ndarray]


def solve_stationary(objective: Objective, a11: np.ndarray, b11: np.ndarray,
                     refine: int = 2) -> LagrangeSolve:
    """``x = -Bc + C'b11`` and ``lambda = Cc - D b11``.

    Forming ``A11 H^-1 A11'`` squares the conditioning of ``A11``, so the
    closed form is followed by ``refine`` steps of iterative refinement on the
    KKT residual, reusing the same blocks.
    """
    B, C, D = lagrange_block_inverse(objective, a11)
    a11 = np.atleast_2d(np.asarray(a11, dtype=float))
    b11 = np.asarray(b11, dtype=float)
    c = objective.c
    x = -B @ c + C.T @ b11
    lam = C @ c - D @ b11
    for _ in range(refine):
        # residual of H x - A11' lam = -c and -A11 x = -b11
        r1 = -c - (H_DIAG * x - a11.T @ lam)
        r2 = -b11 + a11 @ x
        x = x + B @ r1 - C.T @ r2
        lam = lam - C @ r1 + D @ r2
    return LagrangeSolve(x, lam, (B, C, D))


class Infeasible(NamedTuple):
    reason: str

    def __bool__(self) -> bool:
        return False


OBJECT_AT_HOLDING_HEIGHT = Infeasible("ObjectAtHoldingHeight")
OBJECT_ON_GROUND = Infeasible("ObjectOnGround")


def recover_height(objective: Objective, x: np.ndarray, z_r: float,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> float | Infeasible:
    """``z_o = z_r - sqrt(-f(x))``, or the reason no valid height exists."""
    fx = objective(x)
    if not fx < -tol.f:
        return OBJECT_AT_HOLDING_HEIGHT
    z_o = z_r - math.sqrt(-fx)
    if not z_o > tol.z:
        return OBJECT_ON_GROUND
    return z_o


def slack_margins(system: LinearSystem, x: np.ndarray) -> np.ndarray:
    """``A2 x - b2``: half the squared-length surplus of each slack cable."""
    return system.a2 @ np.asarray(x, dtype=float) - system.b2


def check_slack_and_bounds(system: LinearSystem, x: np.ndarray, z_o: float | Infeasible, z_r: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[bool, np.ndarray]:
    """Slack cables strictly slack and ``0 < z_o < z_r``.

    Returns the verdict and the slack margins (empty when every cable is taut).
    """
    margins = slack_margins(system, x)
    ok = bool(np.all(margins > tol.slack))
    if isinstance(z_o, Infeasible):
        return False, margins
    ok = ok and tol.z < z_o < z_r
    return ok, margins
