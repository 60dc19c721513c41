import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import load_fixture
from sheetfk.constraints import build_linear_system, extract_independent_rows, form_closure_check
from sheetfk.cqp import (
    H,
    OBJECT_AT_HOLDING_HEIGHT,
    OBJECT_ON_GROUND,
    Objective,
    SchurSingularError,
    assemble_inverse,
    build_objective,
    check_slack_and_bounds,
    lagrange_block_inverse,
    lagrange_matrix,
    recover_height,
    solve_stationary,
)
from sheetfk.engine import regular_polygon_scene
from sheetfk.generators import random_scene
from sheetfk.scene import Scene, TautSet


def _octagon():
    return regular_polygon_scene(8, 0.9, 0.5, 1.0, offset=-1)


def test_objective_matches_pivot_cable_geometry():
    scene = load_fixture("example1")
    obj = build_objective(scene, 2)
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(20, 4)):
        r, v = scene.robots[1], scene.sheet_vertices[1]
        expect = np.sum((r - x[:2]) ** 2) - np.sum((v - x[2:]) ** 2)
        assert obj(x) == pytest.approx(expect, abs=1e-12)
    np.testing.assert_array_equal(obj.h, H)


def test_octagon_objective_constants():
    obj = build_objective(_octagon(), 1)
    np.testing.assert_allclose(obj.c, [-1.0, 0.0, 1.8, 0.0], atol=1e-15)
    assert obj.f0 == pytest.approx(-0.56, abs=1e-15)
    assert obj(np.zeros(4)) == pytest.approx(-0.56)


def test_origin_pivot_gives_plain_quadratic():
    scene = Scene([(0, 0), (1, 0), (0, 1)], [(0, 0), (0.5, 0), (0, 0.5)], 1.0)
    obj = build_objective(scene, 1)
    assert np.all(obj.c == 0) and obj.f0 == 0
    assert obj(np.array([1.0, 2.0, 3.0, 4.0])) == 1 + 4 - 9 - 16


def test_decoupled_rows_block_inverse():
    B, C, D = lagrange_block_inverse(Objective(1, np.zeros(4), 0.0), np.eye(4)[:2])
    np.testing.assert_allclose(D, -np.diag([2.0, 2.0]))


def test_zero_data_gives_zero_solution():
    sol = solve_stationary(Objective(1, np.zeros(4), 0.0), np.eye(4)[:3], np.zeros(3))
    assert np.all(sol.x == 0) and np.all(sol.lam == 0)


def test_singular_schur_is_reported():
    a11 = np.array([[1.0, 0, 0, 0], [2.0, 0, 0, 0]])
    with pytest.raises(SchurSingularError):
        lagrange_block_inverse(Objective(1, np.zeros(4), 0.0), a11)


def test_height_recovery():
    obj = build_objective(_octagon(), 1)
    assert recover_height(obj, np.zeros(4), 1.0) == pytest.approx(1 - math.sqrt(0.56))
    assert recover_height(obj, np.zeros(4), 0.3) is OBJECT_ON_GROUND
    flat = Objective(1, np.zeros(4), 0.0)
    assert recover_height(flat, np.zeros(4), 1.0) is OBJECT_AT_HOLDING_HEIGHT
    assert not OBJECT_ON_GROUND


def test_octagon_two_row_sets_land_at_centre():
    scene = _octagon()
    for taut in (TautSet((1, 3, 5)), TautSet((2, 4, 6, 8)), TautSet(tuple(range(1, 9)))):
        system = extract_independent_rows(build_linear_system(scene, taut))
        assert system.k1 == 2
        sol = solve_stationary(build_objective(scene, system.pivot), system.a11, system.b11)
        np.testing.assert_allclose(sol.x, 0, atol=1e-12)


def test_octagon_subset_fails_slack_filter():
    scene = _octagon()
    system = extract_independent_rows(build_linear_system(scene, TautSet((1, 3, 5))))
    obj = build_objective(scene, system.pivot)
    x = solve_stationary(obj, system.a11, system.b11).x
    ok, margins = check_slack_and_bounds(system, x, recover_height(obj, x, 1.0), 1.0)
    assert not ok
    np.testing.assert_allclose(margins, 0, atol=1e-12)
    full = extract_independent_rows(build_linear_system(scene, TautSet(tuple(range(1, 9)))))
    ok, margins = check_slack_and_bounds(full, np.zeros(4), 0.25, 1.0)
    assert ok and margins.size == 0


def test_three_cable_octagon_solution():
    scene = load_fixture("example2")
    system = extract_independent_rows(build_linear_system(scene, TautSet((4, 5, 8))))
    obj = build_objective(scene, system.pivot)
    x = solve_stationary(obj, system.a11, system.b11).x
    np.testing.assert_allclose(x * 1000, [-8.6, -30.5, -12.8, -13.0], atol=0.05)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_block_inverse_is_the_inverse(k1, seed):
    a11 = np.random.default_rng(seed).uniform(-1, 1, (k1, 4))
    L = lagrange_matrix(a11)
    if np.linalg.cond(L) > 1e3:
        return
    inv = assemble_inverse(*lagrange_block_inverse(Objective(1, np.zeros(4), 0.0), a11))
    assert np.max(np.abs(L @ inv - np.eye(4 + k1))) <= 1e-10
    assert np.max(np.abs(inv - np.linalg.inv(L))) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_stationary_point_invariants(seed):
    scene = random_scene(np.random.default_rng(seed), 6)
    for k in (3, 4, 5):
        for combo in itertools.combinations(range(1, 7), k):
            system = build_linear_system(scene, TautSet(combo))
            if not form_closure_check(system):
                continue
            system = extract_independent_rows(system)
            obj = build_objective(scene, system.pivot)
            try:
                sol = solve_stationary(obj, system.a11, system.b11)
            except SchurSingularError:
                continue
            scale = max(1.0, float(np.linalg.norm(np.concatenate([obj.c, system.b11]))))
            L = lagrange_matrix(system.a11)
            resid = L @ np.concatenate([sol.x, sol.lam]) - np.concatenate([-obj.c, -system.b11])
            assert np.max(np.abs(resid)) <= 1e-9 * scale
            assert np.max(np.abs(system.a11 @ sol.x - system.b11)) <= 1e-9
            assert np.max(np.abs(system.a1 @ sol.x - system.b1)) <= 1e-8
            assert np.max(np.abs(H @ sol.x + obj.c - system.a11.T @ sol.lam)) <= 1e-9 * scale


def test_same_row_space_same_solution():
    # all k1 = 2 subsets of the symmetric octagon share one row space
    scene = _octagon()
    xs = []
    for combo in itertools.combinations(range(1, 9), 4):
        system = extract_independent_rows(build_linear_system(scene, TautSet(combo)))
        xs.append(solve_stationary(build_objective(scene, system.pivot), system.a11, system.b11).x)
    assert np.max(np.abs(np.array(xs) - xs[0])) <= 1e-9
