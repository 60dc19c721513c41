"""Enumerate every taut-cable combination and keep the physical equilibria.

Each candidate set passes four filters in turn:

1. enumeration of all subsets with at least three cables,
2. consistency of the linearised taut equations (rank test),
3. a stationary point with every other cable slack and ``0 < z_o < z_r``,
4. the object's planar position strictly inside the taut robots' hull.

Survivor counts after each filter are reported in :class:`StepStats`.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .constraints import batch_augmented, build_linear_system, extract_independent_rows, reduce_rows
from .constraints import form_closure_check
from .cqp import (
    H_INV_DIAG,
    SCHUR_COND_LIMIT,
    Infeasible,
    SchurSingularError,
    build_objective,
    check_slack_and_bounds,
    recover_height,
    solve_stationary,
)
from .force import NoNonnegativeSolutionError, force_closure_check, solve_tensions
from .scene import Configuration, Scene, SceneValidationError, TautSet, validate_scene
from .tolerances import DEFAULT_TOLERANCES, Tolerances

InfeasibleFormation = SceneValidationError

COMBO_CHUNK = 1 << 16
# Slack given to the vectorised screen ahead of the exact per-set filters; it
# only decides which sets are worth the per-set work, never acceptance.
SCREEN_MARGIN = 1e-6
SCREEN_COND_LIMIT = 1e6
MAX_MASK_BITS = 62


class EmptySolutionSetError(ValueError):
    pass


class InvalidRadiiError(ValueError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for :func:`solve_fk`.

    ``pivot_index`` forces that cable (1-based) as pivot whenever it is taut,
    and routes every set through the per-set pipeline; ``None`` uses the
    smallest taut index.  ``workers > 1`` splits the enumeration across
    processes; results do not depend on it.

    ``subset_pruning`` skips the rank test of a set when one of its subsets
    one cable smaller was already inconsistent (adding equations cannot
    restore consistency).  ``screen`` runs a vectorised, deliberately loose
    version of the stationary-point filter before the exact per-set one.
    Both are speed-ups; turning them off gives the plain per-set reference.
    """

    tolerances: Tolerances = DEFAULT_TOLERANCES
    pivot_index: int | None = None
    workers: int = 1
    tensions: bool = True
    subset_pruning: bool = True
    screen: bool = True


@dataclass(frozen=True, eq=False)
class Solution:
    taut_set: TautSet
    x: np.ndarray
    z_o: float
    k1: int
    pivot: int
    energy: float
    slack_margins: np.ndarray
    lam: np.ndarray
    tensions: np.ndarray | None = None
    stability: str | None = None

    @property
    def k(self) -> int:
        return self.taut_set.k

    @property
    def r_o(self) -> np.ndarray:
        return self.x[:2]

    @property
    def v_o(self) -> np.ndarray:
        return self.x[2:]

    @property
    def p_o(self) -> np.ndarray:
        return np.array([self.x[0], self.x[1], self.z_o])

    @property
    def configuration(self) -> Configuration:
        return Configuration(self.x, self.z_o)

    def sort_key(self) -> tuple:
        return (self.taut_set.k, self.taut_set.indices)

    def taut_lengths(self, scene: Scene) -> dict[int, float]:
        """Sheet-frame lengths of the taut cables, keyed by 1-based index."""
        d = np.linalg.norm(scene.sheet_vertices - self.v_o, axis=1)
        return {i: float(d[i - 1]) for i in self.taut_set}


@dataclass
class StepStats:
    """Survivors after each filter, accepted solutions per taut count, timing."""

    n: int
    counts: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    by_k: dict[int, int] = field(default_factory=dict)
    schur_singular: int = 0
    wall_time: float = 0.0

    def __post_init__(self) -> None:
        for k in range(3, min(self.n, 5) + 1):
            self.by_k.setdefault(k, 0)

    def merge(self, other: "StepStats") -> "StepStats":
        out = StepStats(self.n, [a + b for a, b in zip(self.counts, other.counts)])
        for k in set(self.by_k) | set(other.by_k):
            out.by_k[k] = self.by_k.get(k, 0) + other.by_k.get(k, 0)
        out.schur_singular = self.schur_singular + other.schur_singular
        out.wall_time = self.wall_time + other.wall_time
        return out

    @property
    def as_tuple(self) -> tuple[int, int, int, int]:
        return tuple(self.counts)  # type: ignore[return-value]

    def table(self) -> str:
        labels = ["all taut cable combinations", "form closure feasible", "CQP feasible",
                  "force closure feasible"]
        total = self.counts[0] or 1
        lines = [f"step {i + 1}  {lab:<28} {c:>9}  ({100.0 * c / total:6.2f}%)"
                 for i, (lab, c) in enumerate(zip(labels, self.counts))]
        lines.append("accepted by k: " + ", ".join(f"k={k}: {v}" for k, v in sorted(self.by_k.items())))
        if self.schur_singular:
            lines.append(f"singular KKT systems skipped: {self.schur_singular}")
        lines.append(f"wall time: {self.wall_time:.3f} s")
        return "\n".join(lines)


def total_taut_sets(n: int) -> int:
    return sum(math.comb(n, k) for k in range(3, n + 1))


def enumerate_taut_sets(n: int) -> Iterator[TautSet]:
    """Every subset of ``1..n`` with at least three cables, by size then lexicographically."""
    import itertools

    if n < 3:
        raise ValueError("need n >= 3")
    for k in range(3, n + 1):
        for combo in itertools.combinations(range(1, n + 1), k):
            yield TautSet(combo)


def combinations_array(n: int, k: int) -> np.ndarray:
    """All ``k``-subsets of ``range(n)`` as rows, in lexicographic order."""
    rows = np.arange(n - k + 1, dtype=np.intp)[:, None]
    for depth in range(1, k):
        last = rows[:, -1]
        # next element ranges over (last, n - k + depth]
        upper = n - k + depth
        counts = upper - last
        rep = np.repeat(rows, counts, axis=0)
        starts = np.repeat(last + 1, counts)
        offsets = np.arange(len(rep)) - np.repeat(np.cumsum(counts) - counts, counts)
        rows = np.column_stack([rep, starts + offsets])
    return rows


@dataclass(frozen=True)
class Evaluation:
    """Outcome of the per-set pipeline.  ``stage`` is the last filter passed (1..4)."""

    taut_set: TautSet
    stage: int
    pivot: int
    x: np.ndarray | None = None
    z_o: float | Infeasible | None = None
    slack_margins: np.ndarray | None = None
    k1: int | None = None
    schur_singular: bool = False
    solution: Solution | None = None


def evaluate_taut_set(scene: Scene, taut: TautSet, pivot: int | None = None,
                      tol: Tolerances = DEFAULT_TOLERANCES, *, closure_known: bool = False,
                      tensions: bool = True) -> Evaluation:
    """Run filters 2-4 on one taut set."""
    system = build_linear_system(scene, taut, pivot)
    if not closure_known and not form_closure_check(system, tol.rank):
        return Evaluation(taut, 1, system.pivot)
    system = extract_independent_rows(system, tol.rank)
    objective = build_objective(scene, system.pivot)
    try:
        stat = solve_stationary(objective, system.a11, system.b11)
    except SchurSingularError:
        return Evaluation(taut, 2, system.pivot, k1=system.k1, schur_singular=True)
    x = stat.x
    z_o = recover_height(objective, x, scene.z_r, tol)
    ok, margins = check_slack_and_bounds(system, x, z_o, scene.z_r, tol)
    if not ok:
        return Evaluation(taut, 2, system.pivot, x, z_o, margins, system.k1)
    config = Configuration(x, z_o)
    if not force_closure_check(scene, taut, config, tol):
        return Evaluation(taut, 3, system.pivot, x, z_o, margins, system.k1)
    F = None
    if tensions:
        try:
            F = solve_tensions(scene, taut, config).tensions
        except NoNonnegativeSolutionError:
            F = None
    sol = Solution(
        taut_set=taut,
        x=x,
        z_o=float(z_o),
        k1=int(system.k1),
        pivot=system.pivot,
        energy=scene.object_mass * scene.gravity * float(z_o),
        slack_margins=margins,
        lam=stat.lam,
        tensions=F,
    )
    return Evaluation(taut, 4, system.pivot, x, z_o, margins, system.k1, solution=sol)


def _tally(stats: StepStats, ev: Evaluation, out: list[Solution]) -> None:
    if ev.stage >= 2:
        stats.counts[1] += 1
    if ev.schur_singular:
        stats.schur_singular += 1
    if ev.stage >= 3:
        stats.counts[2] += 1
    if ev.stage >= 4:
        stats.counts[3] += 1
        stats.by_k[ev.taut_set.k] = stats.by_k.get(ev.taut_set.k, 0) + 1
        out.append(ev.solution)


def _bitmasks(combos: np.ndarray) -> np.ndarray:
    return np.sum(np.left_shift(np.int64(1), combos.astype(np.int64)), axis=1)


def _subsets_passed(combos: np.ndarray, passed_below: np.ndarray) -> np.ndarray:
    """Rows whose every one-smaller subset is in the sorted mask array ``passed_below``."""
    ok = np.ones(len(combos), dtype=bool)
    if len(passed_below) == 0:
        return ~ok
    masks = _bitmasks(combos)
    for j in range(combos.shape[1]):
        sub = masks - np.left_shift(np.int64(1), combos[:, j].astype(np.int64))
        pos = np.minimum(np.searchsorted(passed_below, sub), len(passed_below) - 1)
        ok &= passed_below[pos] == sub
    return ok


def _screen_stationary(scene: Scene, combos: np.ndarray, aug: np.ndarray, pivot_rows: np.ndarray,
                       tol: Tolerances) -> np.ndarray:
    """Vectorised, loosened stationary-point filter for closure-feasible sets.

    Returns False only for sets that clearly fail; sets with a near-singular
    KKT system are kept so the per-set path can classify them.
    """
    M = len(combos)
    keep = np.ones(M, dtype=bool)
    if M == 0:
        return keep
    V, R = scene.sheet_vertices, scene.robots
    p = combos[:, 0]
    c = np.column_stack([-2 * R[p], 2 * V[p]])
    f0 = np.sum(R[p] ** 2, axis=1) - np.sum(V[p] ** 2, axis=1)
    # every cable's row relative to the pivot, for the slack margins
    vv = np.sum(V * V, axis=1)
    rr = np.sum(R * R, axis=1)
    a_all = np.concatenate(
        [R[None, :, :] - R[p][:, None, :], V[p][:, None, :] - V[None, :, :]], axis=2
    )
    b_all = 0.5 * (vv[p][:, None] - vv[None, :] - rr[p][:, None] + rr[None, :])
    taut = np.zeros((M, scene.n), dtype=bool)
    np.put_along_axis(taut, combos, True, axis=1)
    k1 = np.sum(pivot_rows >= 0, axis=1)
    for m in np.unique(k1):
        g = np.nonzero(k1 == m)[0]
        if m == 0:
            continue
        rows = np.sort(np.where(pivot_rows[g] >= 0, pivot_rows[g], np.iinfo(np.intp).max), axis=1)[:, :m]
        sel = np.take_along_axis(aug[g], rows[:, :, None], axis=1)
        A, b = sel[:, :, :4], sel[:, :, 4]
        ah = A * H_INV_DIAG
        schur = ah @ np.swapaxes(A, 1, 2)
        finite = np.all(np.isfinite(schur), axis=(1, 2))
        cond = np.full(len(g), np.inf)
        cond[finite] = np.linalg.cond(schur[finite])
        # poorly conditioned systems skip the screen; the per-set path refines them
        regular = cond <= min(SCHUR_COND_LIMIT, SCREEN_COND_LIMIT)
        if not regular.any():
            continue
        gr = g[regular]
        ahr = ah[regular]
        cg = c[gr]
        rhs = np.einsum("gij,gj->gi", ahr, cg) + b[regular]
        y = np.linalg.solve(schur[regular], rhs[:, :, None])[:, :, 0]
        x = -H_INV_DIAG * cg + np.einsum("gji,gj->gi", ahr, y)
        f = 0.5 * np.sum((1.0 / H_INV_DIAG) * x * x, axis=1) + np.sum(cg * x, axis=1) + f0[gr]
        z = scene.z_r - np.sqrt(np.maximum(-f, 0.0))
        margins = np.einsum("gnj,gj->gn", a_all[gr], x) - b_all[gr]
        margins[taut[gr]] = np.inf
        slop = SCREEN_MARGIN * np.maximum(1.0, np.max(np.abs(x), axis=1)) ** 2
        ok = (f < -tol.f + slop) & (z > tol.z - np.sqrt(slop))
        ok &= np.min(margins, axis=1, initial=np.inf) > tol.slack - slop
        keep[gr] = ok
    return keep


def _solve_chunk(args) -> tuple[StepStats, list[Solution], np.ndarray]:
    """Filters 1-4 on one block of equal-size combinations.

    Returns the stats, the accepted solutions and the sorted bitmasks of the
    closure-feasible sets (used to prune the next size).
    """
    scene, k, combos, options, passed_below = args
    tol = options.tolerances
    stats = StepStats(scene.n)
    out: list[Solution] = []
    stats.counts[0] += len(combos)
    if options.pivot_index is not None:
        for row in combos:
            taut = TautSet(tuple(int(i) + 1 for i in row))
            pivot = options.pivot_index if options.pivot_index in taut else None
            ev = evaluate_taut_set(scene, taut, pivot, tol, tensions=options.tensions)
            _tally(stats, ev, out)
        return stats, out, np.empty(0, dtype=np.int64)
    if passed_below is not None:
        combos = combos[_subsets_passed(combos, passed_below)]
    aug = batch_augmented(scene, combos)
    pivot_rows, consistent = reduce_rows(aug, tol.rank)
    feasible = combos[consistent]
    passed = np.sort(_bitmasks(feasible)) if scene.n <= MAX_MASK_BITS else np.empty(0, dtype=np.int64)
    if options.screen:
        worth = _screen_stationary(scene, feasible, aug[consistent], pivot_rows[consistent], tol)
    else:
        worth = np.ones(len(feasible), dtype=bool)
    stats.counts[1] += int(np.count_nonzero(~worth))
    for row in feasible[worth]:
        ev = evaluate_taut_set(scene, TautSet(tuple(int(i) + 1 for i in row)), None, tol,
                               closure_known=True, tensions=options.tensions)
        _tally(stats, ev, out)
    return stats, out, passed


def _level_chunks(scene: Scene, k: int, options: SolveOptions, passed_below) -> Iterator[tuple]:
    combos = combinations_array(scene.n, k)
    for start in range(0, len(combos), COMBO_CHUNK):
        yield scene, k, combos[start:start + COMBO_CHUNK], options, passed_below


def solve_fk(scene: Scene | dict, options: SolveOptions | None = None) -> tuple[list[Solution], StepStats]:
    """All equilibria of ``scene``, sorted by ``(k, taut indices)``, with step statistics.

    Raises :class:`InfeasibleFormation` when the raw scene fails validation.
    """
    options = options or SolveOptions()
    scene = validate_scene(scene)
    t0 = time.perf_counter()
    stats = StepStats(scene.n)
    solutions: list[Solution] = []
    prune = (options.subset_pruning and options.pivot_index is None
             and scene.n <= MAX_MASK_BITS)
    pool = ProcessPoolExecutor(max_workers=options.workers) if options.workers > 1 else None
    try:
        passed_below = None
        for k in range(3, scene.n + 1):
            if prune and passed_below is not None and len(passed_below) == 0:
                # no consistent set one cable smaller: nothing larger can be consistent
                stats.counts[0] += math.comb(scene.n, k)
                continue
            chunks = _level_chunks(scene, k, options, passed_below if prune else None)
            results = pool.map(_solve_chunk, chunks) if pool else map(_solve_chunk, chunks)
            level_passed = []
            for part_stats, part, passed in results:
                stats = stats.merge(part_stats)
                solutions.extend(part)
                level_passed.append(passed)
            passed_below = np.sort(np.concatenate(level_passed))
    finally:
        if pool:
            pool.shutdown()
    solutions.sort(key=Solution.sort_key)
    stats.wall_time = time.perf_counter() - t0
    return solutions, stats


def lowest_energy(solutions: Sequence[Solution], tie_tol: float = 1e-9) -> Solution:
    """Solution with minimal ``z_o``; near-ties go to smaller ``k`` then lexicographic set."""
    if not solutions:
        raise EmptySolutionSetError("no solutions to choose from")
    z_min = min(s.z_o for s in solutions)
    return min((s for s in solutions if s.z_o <= z_min + tie_tol), key=Solution.sort_key)


def regular_polygon_scene(n: int, r_s: float, r_f: float, z_r: float, *, offset: int = 0,
                          object_mass: float = 1.0, gravity: float = 9.81) -> Scene:
    """Concentric regular ``n``-gons: ``v_i = r_s e(2 pi (i + offset) / n)``, ``r_i = r_f e(...)``.

    ``offset=0`` starts at angle ``2 pi / n``; ``offset=-1`` puts cable 1 at angle 0.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if not 0 < r_f < r_s:
        raise InvalidRadiiError(f"need 0 < r_f < r_s, got r_f = {r_f}, r_s = {r_s}")
    ang = 2 * np.pi * (np.arange(1, n + 1) + offset) / n
    unit = np.column_stack([np.cos(ang), np.sin(ang)])
    return Scene(r_s * unit, r_f * unit, z_r, object_mass, gravity)


def cluster_solutions(solutions: Sequence[Solution], tol: float) -> list[list[Solution]]:
    """Group solutions whose ``(p_o, v_o)`` agree within ``tol`` (single linkage, canonical order)."""
    groups: list[list[Solution]] = []
    for s in solutions:
        key = np.concatenate([s.p_o, s.v_o])
        for g in groups:
            if any(np.max(np.abs(key - np.concatenate([t.p_o, t.v_o]))) <= tol for t in g):
                g.append(s)
                break
        else:
            groups.append([s])
    return groups


def with_stability(solutions: Iterable[Solution], verdicts: Iterable[str]) -> list[Solution]:
    return [replace(s, stability=v) for s, v in zip(solutions, verdicts)]
