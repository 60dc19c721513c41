"""Shared test utilities: fixture loading and an exact rational rank oracle."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from sheetfk.fileio import parse_scene_file

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.json"


def load_fixture(name: str):
    return parse_scene_file(fixture_path(name))


def exact_rank(rows: list[list[Fraction]]) -> int:
    """Rank by fraction-exact Gaussian elimination."""
    m = [list(r) for r in rows]
    rank = 0
    ncol = len(m[0]) if m else 0
    for col in range(ncol):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def exact_consistent(vertices, robots, taut0: list[int]) -> bool:
    """Exact closure verdict for integer (or rational) coordinates; ``taut0`` is 0-based."""
    V = [[Fraction(c) for c in p] for p in vertices]
    R = [[Fraction(c) for c in p] for p in robots]
    p = taut0[0]
    aug = []
    for j in taut0[1:]:
        b = (V[p][0] ** 2 + V[p][1] ** 2 - V[j][0] ** 2 - V[j][1] ** 2
             - R[p][0] ** 2 - R[p][1] ** 2 + R[j][0] ** 2 + R[j][1] ** 2) / 2
        aug.append([R[j][0] - R[p][0], R[j][1] - R[p][1], V[p][0] - V[j][0], V[p][1] - V[j][1], b])
    return exact_rank([r[:4] for r in aug]) == exact_rank(aug)
