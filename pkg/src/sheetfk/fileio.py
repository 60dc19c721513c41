"""Scene files and result serialisation.

Scene files are JSON objects::

    {"version": 1, "units": "cm", "n": 3, "z_r": 100,
     "sheet_vertices": [[x, y], ...], "robots": [[x, y], ...],
     "object_mass": 1.0, "gravity": 9.81}

Lengths are converted to metres on load; mass and gravity are SI.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .engine import Solution, StepStats
from .scene import Scene, validate_scene

SCHEMA_VERSION = 1
# divide by these to get metres; division keeps e.g. 45 cm -> 0.45 m correctly rounded
UNIT_DIVISORS = {"m": 1.0, "cm": 100.0, "mm": 1000.0}
SIG_DIGITS = 9
CSV_HEADER = ("taut_set", "k1", "v_o_x_m", "v_o_y_m", "p_o_x_m", "p_o_y_m", "p_o_z_m",
              "energy_J", "stability", "margins")


class ParseError(ValueError):
    """Malformed scene file; ``where`` names the offending field or line."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


def _points(data: Mapping[str, Any], key: str, divisor: float) -> np.ndarray:
    try:
        arr = np.asarray(data[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"not a list of numeric pairs ({exc})", key) from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParseError(f"expected a list of [x, y] pairs, got shape {arr.shape}", key)
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite coordinate", key)
    return arr / divisor


def _number(data: Mapping[str, Any], key: str) -> float:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", key)
    if not math.isfinite(value):
        raise ParseError("non-finite value", key)
    return float(value)


def scene_from_dict(data: Mapping[str, Any]) -> Scene:
    """Unit-convert and validate a decoded scene document."""
    if not isinstance(data, Mapping):
        raise ParseError("top level must be a JSON object")
    for key in ("version", "units", "n", "z_r", "sheet_vertices", "robots"):
        if key not in data:
            raise ParseError("required field is missing", key)
    if data["version"] != SCHEMA_VERSION:
        raise ParseError(f"unsupported version {data['version']!r}, expected {SCHEMA_VERSION}", "version")
    units = data["units"]
    if units not in UNIT_DIVISORS:
        raise ParseError(f"unknown units {units!r}; use one of {sorted(UNIT_DIVISORS)}", "units")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ParseError(f"expected an integer, got {n!r}", "n")
    divisor = UNIT_DIVISORS[units]
    raw = {
        "n": n,
        "z_r": _number(data, "z_r") / divisor,
        "sheet_vertices": _points(data, "sheet_vertices", divisor),
        "robots": _points(data, "robots", divisor),
    }
    for key in ("object_mass", "gravity"):
        if key in data:
            raw[key] = _number(data, key)
    unknown = set(data) - {"version", "units", "n", "z_r", "sheet_vertices", "robots",
                           "object_mass", "gravity", "comment"}
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)}")
    return validate_scene(raw)


def parse_scene_file(path: str | Path) -> Scene:
    """Read, unit-convert and validate a scene file.

    Raises
    ------
    ParseError
        Unreadable file, invalid JSON or a malformed field.
    SceneValidationError
        Well-formed file describing an invalid scene.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(exc), str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return scene_from_dict(data)


def sig(value: float, digits: int = SIG_DIGITS) -> float:
    """Round to ``digits`` significant digits; negative zero becomes zero."""
    out = float(f"{float(value):.{digits}g}")
    return out + 0.0


def _sig_list(values) -> list[float]:
    return [sig(v) for v in np.ravel(values)]


def scene_to_dict(scene: Scene, units: str = "m") -> dict:
    divisor = UNIT_DIVISORS[units]
    return {
        "version": SCHEMA_VERSION,
        "units": units,
        "n": scene.n,
        "z_r": sig(scene.z_r * divisor),
        "sheet_vertices": [_sig_list(p * divisor) for p in scene.sheet_vertices],
        "robots": [_sig_list(p * divisor) for p in scene.robots],
        "object_mass": sig(scene.object_mass),
        "gravity": sig(scene.gravity),
    }


def dump_scene_file(scene: Scene, path: str | Path, units: str = "m") -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene, units), indent=2) + "\n", encoding="utf-8")


def solution_record(solution: Solution, scene: Scene) -> dict:
    slack = solution.taut_set.slack(scene.n)
    return {
        "taut_set": list(solution.taut_set.indices),
        "v_o_m": _sig_list(solution.v_o),
        "p_o_m": _sig_list(solution.p_o),
        "energy_J": sig(solution.energy),
        "k1": solution.k1,
        "stability": solution.stability,
        "margins": {str(i): sig(m) for i, m in zip(slack, solution.slack_margins)},
    }


def stats_record(stats: StepStats, include_timing: bool = False) -> dict:
    rec = {
        "n": stats.n,
        "counts": list(stats.counts),
        "by_k": {str(k): v for k, v in sorted(stats.by_k.items())},
        "schur_singular": stats.schur_singular,
    }
    if include_timing:
        rec["wall_time_s"] = round(stats.wall_time, 6)
    return rec


def results_document(scene: Scene, solutions: Sequence[Solution], stats: StepStats,
                     include_timing: bool = False, extra: Mapping[str, Any] | None = None) -> dict:
    doc = {
        "solutions": [solution_record(s, scene) for s in solutions],
        "stats": stats_record(stats, include_timing),
    }
    if extra:
        doc.update(extra)
    return doc


def results_to_json(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def results_to_csv(doc: Mapping[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in doc["solutions"]:
        w.writerow([
            " ".join(map(str, rec["taut_set"])),
            rec["k1"],
            *map(repr, rec["v_o_m"]),
            *map(repr, rec["p_o_m"]),
            repr(rec["energy_J"]),
            rec["stability"] or "",
            " ".join(f"{k}:{v!r}" for k, v in rec["margins"].items()),
        ])
    return buf.getvalue()


def parse_results_csv(text: str) -> list[dict]:
    """Inverse of :func:`results_to_csv` for the solution rows."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ParseError("unexpected CSV header")
    out = []
    for r in rows[1:]:
        out.append({
            "taut_set": [int(t) for t in r[0].split()],
            "v_o_m": [float(r[2]), float(r[3])],
            "p_o_m": [float(r[4]), float(r[5]), float(r[6])],
            "energy_J": float(r[7]),
            "k1": int(r[1]),
            "stability": r[8] or None,
            "margins": {k: float(v) for k, v in (item.split(":") for item in r[9].split())},
        })
    return out


def emit_results(doc: Mapping[str, Any], fmt: str = "json", out: str | Path | None = None) -> str:
    """Render ``doc`` as ``json`` or ``csv``; write it to ``out`` when given."""
    if fmt == "json":
        text = results_to_json(doc)
    elif fmt == "csv":
        text = results_to_csv(doc)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text
