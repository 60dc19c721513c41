"""Two-panel drawings of solutions: world frame on the left, sheet frame on the right."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_pdf import PdfPages
from matplotlib.figure import Figure

from .engine import Solution
from .scene import Scene

TAUT_COLOR = "tab:blue"
POINT_COLOR = "tab:red"


def _closed(points: np.ndarray) -> np.ndarray:
    return np.vstack([points, points[:1]])


def _label_points(ax, points: np.ndarray, color: str) -> None:
    center = points.mean(axis=0)
    for i, p in enumerate(points, start=1):
        d = p - center
        off = 0.06 * d / max(np.linalg.norm(d), 1e-12)
        ax.annotate(str(i), p + off, ha="center", va="center", fontsize=8, color=color)


def draw_solution(scene: Scene, solution: Solution | None) -> Figure:
    """One page; ``solution=None`` draws the scene alone."""
    fig = Figure(figsize=(10, 4.8))
    world, sheet = fig.subplots(1, 2)
    R, V = scene.robots, scene.sheet_vertices

    world.plot(*_closed(R).T, ls=":", color="0.6", lw=0.8)
    world.plot(*R.T, "o", color="k", ms=5)
    _label_points(world, R, "k")
    sheet.plot(*_closed(scene.sheet_ccw()).T, color="k", lw=1.2)
    sheet.plot(*V.T, "s", color="k", ms=4)
    _label_points(sheet, V, "k")

    if solution is None:
        fig.suptitle(f"{scene.n} robots, z_r = {scene.z_r:.3f} m, no equilibrium")
    else:
        idx = list(solution.taut_set.zero_based)
        for i in idx:
            world.plot([R[i, 0], solution.r_o[0]], [R[i, 1], solution.r_o[1]], color=TAUT_COLOR, lw=1.5)
            sheet.plot([V[i, 0], solution.v_o[0]], [V[i, 1], solution.v_o[1]], color=TAUT_COLOR, lw=1.5)
        world.plot(*solution.r_o, "o", color=POINT_COLOR, ms=6)
        sheet.plot(*solution.v_o, "o", color=POINT_COLOR, ms=6)
        p = solution.p_o
        title = f"taut {solution.taut_set}   p_o = ({p[0]:.4f}, {p[1]:.4f}, {p[2]:.4f}) m"
        if solution.stability:
            title += f"   [{solution.stability}]"
        fig.suptitle(title)

    world.set_title("world frame")
    sheet.set_title("sheet frame")
    for ax in (world, sheet):
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.grid(True, lw=0.3)
    fig.tight_layout()
    return fig


def emit_figure(scene: Scene, solutions: Sequence[Solution], path: str | Path) -> list[Path]:
    """Write one page per solution (or one scene-only page) and return the files written.

    ``.pdf`` gives a single multi-page file; ``.svg`` gives one file per page,
    suffixed ``-1``, ``-2``, ... when there is more than one.  Output carries
    no timestamps, so equal input gives equal bytes.
    """
    path = Path(path)
    pages = [draw_solution(scene, s) for s in solutions] or [draw_solution(scene, None)]
    suffix = path.suffix.lower()
    if suffix == ".pdf":
        with PdfPages(path, metadata={"CreationDate": None, "ModDate": None}) as pdf:
            for fig in pages:
                pdf.savefig(fig)
        return [path]
    if suffix == ".svg":
        written = []
        for i, fig in enumerate(pages, start=1):
            target = path if len(pages) == 1 else path.with_name(f"{path.stem}-{i}{path.suffix}")
            with rc_context({"svg.hashsalt": "sheetfk"}):
                fig.savefig(target, format="svg", metadata={"Date": None})
            written.append(target)
        return written
    raise ValueError(f"unsupported figure format {path.suffix!r}; use .pdf or .svg")
