"""Robots-sheet-object system: problem inputs and their validation.

World frame quantities (robot positions ``r_i``, object position ``r_o``) and
sheet frame quantities (vertices ``v_i``, contact point ``v_o``) are planar and
in metres.  Cable ``i`` joins vertex ``i`` to the contact point in the sheet
frame; it is held by robot ``i`` at height ``z_r`` in the world frame.

Cable indices exposed to users are 1-based, matching the labels printed in
figures and tables.  Arrays are stored 0-based in input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

CONVEXITY_EPS = 1e-12  # m^2, on edge cross products
FEASIBILITY_EPS = 1e-9  # m, band in which r_ij == v_ij is reported as a boundary pair


@dataclass(frozen=True)
class Violation:
    """One violated scene invariant.

    ``kind`` is one of ``TooFewRobots``, ``CountMismatch``, ``NonPositiveHeight``,
    ``NonConvexSheet`` or ``InfeasiblePair``.  ``indices`` are 1-based.
    """

    kind: str
    indices: tuple[int, ...] = ()
    message: str = ""
    boundary: bool = False

    def __str__(self) -> str:
        return f"{self.kind}{list(self.indices) if self.indices else ''}: {self.message}"


class SceneValidationError(ValueError):
    """Raised with every violated invariant of a candidate scene."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        lines = "\n  ".join(str(v) for v in self.violations)
        super().__init__(f"invalid scene ({len(self.violations)} violation(s)):\n  {lines}")

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def _as_points(data: Any, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must be a sequence of (x, y) pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def polygon_orientation(points: np.ndarray) -> float:
    """Twice the signed area; positive for counterclockwise order."""
    x, y = points[:, 0], points[:, 1]
    return float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _convexity_violations(vertices: np.ndarray) -> list[Violation]:
    n = len(vertices)
    if n < 3:
        return []
    edges = np.roll(vertices, -1, axis=0) - vertices
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    sign = 1.0 if polygon_orientation(vertices) >= 0 else -1.0
    out = []
    for i in range(n):
        if sign * cross[i] <= CONVEXITY_EPS:
            corner = (i + 1) % n + 1
            what = "collinear" if abs(cross[i]) <= CONVEXITY_EPS else "reflex"
            out.append(Violation("NonConvexSheet", (corner,), f"{what} vertex {corner}"))
    if not out:
        # consistent turning can still wind more than once
        turn = np.arctan2(cross, np.sum(edges * nxt, axis=1))
        if abs(abs(turn.sum()) - 2 * math.pi) > 1e-6:
            out.append(Violation("NonConvexSheet", (), "sheet polygon is self-intersecting"))
    return out


def _pair_violations(vertices: np.ndarray, robots: np.ndarray) -> list[Violation]:
    out = []
    n = len(vertices)
    for i in range(n):
        for j in range(i + 1, n):
            dr = float(np.linalg.norm(robots[i] - robots[j]))
            dv = float(np.linalg.norm(vertices[i] - vertices[j]))
            if dr >= dv - FEASIBILITY_EPS:
                boundary = abs(dr - dv) <= FEASIBILITY_EPS
                rel = "equals" if boundary else "exceeds"
                out.append(
                    Violation(
                        "InfeasiblePair",
                        (i + 1, j + 1),
                        f"|r_{i+1} - r_{j+1}| = {dr:.9g} m {rel} |v_{i+1} - v_{j+1}| = {dv:.9g} m",
                        boundary=boundary,
                    )
                )
    return out


@dataclass(frozen=True, eq=False)
class Scene:
    """Validated problem input: formation, sheet polygon and holding height.

    Construction validates every invariant and raises
    :class:`SceneValidationError` listing all violations at once.
    """

    sheet_vertices: np.ndarray
    robots: np.ndarray
    z_r: float
    object_mass: float = 1.0
    gravity: float = 9.81
    orientation: int = field(init=False)

    def __post_init__(self) -> None:
        V = _as_points(self.sheet_vertices, "sheet_vertices").copy()
        R = _as_points(self.robots, "robots").copy()
        V.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "sheet_vertices", V)
        object.__setattr__(self, "robots", R)
        object.__setattr__(self, "z_r", float(self.z_r))
        object.__setattr__(self, "object_mass", float(self.object_mass))
        object.__setattr__(self, "gravity", float(self.gravity))

        problems: list[Violation] = []
        if len(V) != len(R):
            problems.append(
                Violation("CountMismatch", (), f"{len(V)} sheet vertices but {len(R)} robots")
            )
        if min(len(V), len(R)) < 3:
            problems.append(Violation("TooFewRobots", (), f"need at least 3 robots, got {len(R)}"))
        if not self.z_r > 0:
            problems.append(Violation("NonPositiveHeight", (), f"z_r = {self.z_r} must be > 0"))
        if not self.object_mass > 0 or not self.gravity > 0:
            problems.append(Violation("NonPositiveHeight", (), "object_mass and gravity must be > 0"))
        if len(V) >= 3:
            problems.extend(_convexity_violations(V))
        if len(V) == len(R) and len(V) >= 2:
            problems.extend(_pair_violations(V, R))
        if problems:
            raise SceneValidationError(problems)
        object.__setattr__(self, "orientation", 1 if polygon_orientation(V) > 0 else -1)

    @property
    def n(self) -> int:
        return len(self.robots)

    @property
    def holding_points(self) -> np.ndarray:
        """``p_i = (r_i, z_r)``, shape ``(n, 3)``."""
        return np.column_stack([self.robots, np.full(self.n, self.z_r)])

    def sheet_ccw(self) -> np.ndarray:
        """Sheet vertices in counterclockwise order (labels not preserved)."""
        return self.sheet_vertices if self.orientation > 0 else self.sheet_vertices[::-1]

    def contains_contact_point(self, v_o: Sequence[float], eps: float = 0.0) -> bool:
        """True when ``v_o`` lies inside the sheet polygon (boundary within ``eps`` counts)."""
        P = self.sheet_ccw()
        e = np.roll(P, -1, axis=0) - P
        d = np.asarray(v_o, dtype=float) - P
        cross = (e[:, 0] * d[:, 1] - e[:, 1] * d[:, 0]) / np.linalg.norm(e, axis=1)
        return bool(np.all(cross >= -eps))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "z_r": self.z_r,
            "sheet_vertices": self.sheet_vertices.tolist(),
            "robots": self.robots.tolist(),
            "object_mass": self.object_mass,
            "gravity": self.gravity,
        }

    def with_robot(self, index: int, position: Sequence[float]) -> "Scene":
        """Copy with robot ``index`` (1-based) moved to ``position``."""
        R = self.robots.copy()
        R[index - 1] = position
        return Scene(self.sheet_vertices, R, self.z_r, self.object_mass, self.gravity)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            np.array_equal(self.sheet_vertices, other.sheet_vertices)
            and np.array_equal(self.robots, other.robots)
            and self.z_r == other.z_r
            and self.object_mass == other.object_mass
            and self.gravity == other.gravity
        )

    __hash__ = None  # type: ignore[assignment]


def validate_scene(raw: "Scene | Mapping[str, Any]") -> Scene:
    """Build a :class:`Scene` from raw data, or return an already-validated one.

    ``raw`` needs ``sheet_vertices``, ``robots`` and ``z_r``; ``n``,
    ``object_mass`` and ``gravity`` are optional.  Per-robot heights are not
    supported.
    """
    if isinstance(raw, Scene):
        return raw
    missing = [k for k in ("sheet_vertices", "robots", "z_r") if k not in raw]
    if missing:
        raise KeyError(f"scene data is missing {missing}")
    if np.ndim(raw["z_r"]) != 0:
        raise ValueError("per-robot holding heights are not supported; z_r must be a single number")
    scene = Scene(
        raw["sheet_vertices"],
        raw["robots"],
        raw["z_r"],
        raw.get("object_mass", 1.0),
        raw.get("gravity", 9.81),
    )
    if "n" in raw and int(raw["n"]) != scene.n:
        raise SceneValidationError(
            [Violation("CountMismatch", (), f"n = {raw['n']} but {scene.n} robots given")]
        )
    return scene


@dataclass(frozen=True, order=True)
class TautSet:
    """Sorted, 1-based indices of the cables assumed taut."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"taut indices must be strictly increasing, got {idx}")
        if len(idx) < 3:
            raise ValueError(f"a taut set needs at least 3 cables, got {idx}")
        if idx[0] < 1:
            raise ValueError("taut indices are 1-based")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "TautSet":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def zero_based(self) -> tuple[int, ...]:
        return tuple(i - 1 for i in self.indices)

    def slack(self, n: int) -> tuple[int, ...]:
        """1-based indices of the remaining cables."""
        taut = set(self.indices)
        return tuple(i for i in range(1, n + 1) if i not in taut)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i: object) -> bool:
        return i in self.indices

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices)) + "}"


@dataclass(frozen=True)
class Configuration:
    """``x = (x_o, y_o, x_vo, y_vo)`` plus the object height ``z_o``."""

    x: np.ndarray
    z_o: float

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float).reshape(4)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z_o", float(self.z_o))

    @property
    def r_o(self) -> np.ndarray:
        return self.x[:2]

    @property
    def v_o(self) -> np.ndarray:
        return self.x[2:]

    @property
    def p_o(self) -> np.ndarray:
        return np.array([self.x[0], self.x[1], self.z_o])


def cable_length(scene: Scene, v_o: Sequence[float], i: int) -> float:
    """Length of virtual cable ``i`` (1-based): ``|v_i - v_o|`` in the sheet frame."""
    if not 1 <= i <= scene.n:
        raise IndexError(f"cable index {i} outside 1..{scene.n}")
    return float(np.hypot(*(scene.sheet_vertices[i - 1] - np.asarray(v_o, dtype=float))))


def cable_lengths(scene: Scene, v_o: Sequence[float]) -> np.ndarray:
    """All ``n`` virtual cable lengths for contact point ``v_o``."""
    return np.linalg.norm(scene.sheet_vertices - np.asarray(v_o, dtype=float), axis=1)
