"""Random feasible scenes for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .scene import Scene, SceneValidationError


def random_scene(rng: np.random.Generator, n: int, *, sheet_radius: float = 0.9,
                 z_r: float | None = None, max_tries: int = 1000) -> Scene:
    """A valid scene with ``n`` robots.

    The sheet is a convex polygon with vertices at sorted random angles on a
    slightly jittered circle.  Robots sit on a shrunk, perturbed copy of the
    sheet so every pair is closer in the plane than on the sheet.  The holding
    height defaults to the sheet radius, which keeps every resting height
    above the floor.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    for _ in range(max_tries):
        gaps = rng.uniform(0.5, 1.5, n)
        ang = np.cumsum(gaps) / gaps.sum() * 2 * np.pi + rng.uniform(0, 2 * np.pi)
        rad = sheet_radius * rng.uniform(0.85, 1.0, n)
        V = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        shrink = rng.uniform(0.35, 0.65)
        R = shrink * V + rng.normal(scale=0.03 * sheet_radius, size=(n, 2))
        try:
            return Scene(V, R, sheet_radius if z_r is None else z_r)
        except SceneValidationError:
            continue
    raise RuntimeError(f"no feasible random scene with n = {n} after {max_tries} tries")
