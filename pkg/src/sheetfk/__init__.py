"""Forward kinematics of an object carried on a deformable sheet by N robots."""

from .constraints import LinearSystem, build_linear_system, extract_independent_rows, form_closure_check
from .cqp import Objective, build_objective, lagrange_block_inverse, recover_height, solve_stationary
from .engine import Solution, SolveOptions, StepStats, lowest_energy, regular_polygon_scene, solve_fk
from .fileio import ParseError, parse_scene_file
from .generators import random_scene
from .oracle import Equilibrium, classify_solution, find_equilibria
from .scene import Configuration, Scene, SceneValidationError, TautSet, cable_length, validate_scene
from .tolerances import Tolerances

__all__ = [
    "Configuration",
    "Equilibrium",
    "LinearSystem",
    "Objective",
    "ParseError",
    "Scene",
    "SceneValidationError",
    "Solution",
    "SolveOptions",
    "StepStats",
    "TautSet",
    "Tolerances",
    "build_linear_system",
    "build_objective",
    "cable_length",
    "classify_solution",
    "extract_independent_rows",
    "find_equilibria",
    "form_closure_check",
    "lagrange_block_inverse",
    "lowest_energy",
    "parse_scene_file",
    "random_scene",
    "recover_height",
    "regular_polygon_scene",
    "solve_fk",
    "solve_stationary",
    "validate_scene",
]

__version__ = "0.1.0"
