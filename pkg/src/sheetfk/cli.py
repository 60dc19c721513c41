"""Command-line front end.

Exit codes: 0 at least one solution, 3 valid scene without solutions,
1 unreadable input or bad arguments, 2 invalid scene.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .engine import SolveOptions, cluster_solutions, lowest_energy, solve_fk, with_stability
from .fileio import ParseError, emit_results, parse_scene_file, results_document, sig
from .scene import SceneValidationError
from .tolerances import Tolerances

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_EMPTY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # bad arguments share the input-error code
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sheetfk", description="Equilibria of an object carried on a sheet held by N robots.")
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write results here instead of stdout")
    p.add_argument("--stats", action="store_true", help="print the filter statistics to stderr")
    p.add_argument("--lowest-energy", action="store_true", help="report only the lowest solution")
    p.add_argument("--oracle", action="store_true",
                   help="classify solutions and list brute-force equilibria")
    p.add_argument("--grid-res", type=int, default=25, metavar="N",
                   help="oracle grid points per axis (default 25)")
    p.add_argument("--cluster", type=float, metavar="TOL",
                   help="group solutions whose positions agree within TOL metres")
    p.add_argument("--figure", metavar="PATH", help="draw solutions to a .pdf or .svg file")
    p.add_argument("--pivot-index", type=int, metavar="I", help="use cable I as pivot whenever it is taut")
    p.add_argument("--tolerances", metavar="K=V,...", help="override rank, f, z, slack, hull thresholds")
    p.add_argument("--workers", type=int, default=1, help="processes for the enumeration")
    p.add_argument("--timing", action="store_true", help="include wall time in the stats record")
    return p


def _oracle_record(eq) -> dict:
    return {
        "r_o_m": [sig(v) for v in eq.r_o],
        "v_o_m": [sig(v) for v in eq.v_o],
        "z_min_m": sig(eq.z_min),
        "active_set": list(eq.active_set),
        "ground_contact": bool(eq.ground_contact),
    }


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = Tolerances.parse(args.tolerances)
        scene = parse_scene_file(args.scene)
    except (ParseError, ValueError) as exc:
        if isinstance(exc, SceneValidationError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.pivot_index is not None and not 1 <= args.pivot_index <= scene.n:
        print(f"error: --pivot-index must be in 1..{scene.n}", file=sys.stderr)
        return EXIT_PARSE
    if args.workers < 1 or args.grid_res < 3:
        print("error: --workers must be >= 1 and --grid-res >= 3", file=sys.stderr)
        return EXIT_PARSE
    if args.figure and Path(args.figure).suffix.lower() not in (".pdf", ".svg"):
        print("error: --figure must end in .pdf or .svg", file=sys.stderr)
        return EXIT_PARSE

    options = SolveOptions(tolerances=tol, pivot_index=args.pivot_index, workers=args.workers)
    solutions, stats = solve_fk(scene, options)
    extra: dict = {}
    if args.oracle:
        from .oracle import classify_all, find_equilibria

        solutions = with_stability(solutions, classify_all(scene, solutions))
        extra["oracle"] = [_oracle_record(e) for e in find_equilibria(scene, points_per_axis=args.grid_res)]
    if args.lowest_energy and solutions:
        solutions = [lowest_energy(solutions)]
    if args.cluster is not None:
        extra["clusters"] = [[list(s.taut_set.indices) for s in g]
                             for g in cluster_solutions(solutions, args.cluster)]

    doc = results_document(scene, solutions, stats, include_timing=args.timing, extra=extra)
    try:
        text = emit_results(doc, args.format, args.out)
        if args.out is None:
            sys.stdout.write(text)
        if args.figure:
            from .figures import emit_figure

            emit_figure(scene, solutions, args.figure)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.stats:
        print(stats.table(), file=sys.stderr)
    return EXIT_OK if solutions else EXIT_EMPTY


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
