import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retake_move import kernels

impls = kernels.backends()
needs_both = pytest.mark.skipif("cython" not in impls, reason="compiled kernels not built")
py = impls["python"]

coord = st.floats(-50, 250, allow_nan=False)
WALLS = np.array([[0.0, 0.0, 100.0, 20.0], [40.0, 60.0, 60.0, 200.0], [150.0, 50.0, 160.0, 60.0]])


def test_segment_blocked_examples():
    assert py.segment_blocked(50.0, -10.0, 50.0, 30.0, WALLS)
    assert not py.segment_blocked(0.0, 40.0, 100.0, 40.0, WALLS)
    # Touching a corner counts as blocked (closed rectangles).
    assert py.segment_blocked(100.0, 20.0, 120.0, 40.0, WALLS)


def test_visibility_is_symmetric_with_true_diagonal():
    xy = np.array([[10.0, 40.0], [90.0, 40.0], [50.0, 210.0], [10.0, 100.0], [90.0, 100.0]])
    v = py.visibility_matrix(xy, WALLS)
    assert (v == v.T).all() and (np.diag(v) == 1).all()
    assert v[0, 1] == 1 and v[3, 4] == 0


def test_ray_wall_distance_example():
    assert py.ray_wall_distance(80.0, 100.0, 0.0, -1.0, WALLS, 500.0) == pytest.approx(80.0)
    assert py.ray_wall_distance(0.0, 40.0, 1.0, 0.0, WALLS, 30.0) == 30.0


def test_sweep_move_stops_at_wall_and_slides():
    x, y, hx, hy = py.sweep_move(20.0, 30.0, 0.0, -20.0, WALLS, np.zeros(3, bool), -1e9, -1e9, 1e9, 1e9)
    assert y == pytest.approx(20.0) and hy and not hx
    x, y, hx, hy = py.sweep_move(20.0, 30.0, 5.0, -20.0, WALLS, np.zeros(3, bool), -1e9, -1e9, 1e9, 1e9)
    assert x == pytest.approx(25.0) and hy


def test_transport_matches_linear_program():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = np.random.default_rng(4)
    a = rng.random(7)
    b = rng.random(5)
    a /= a.sum()
    b /= b.sum()
    cost = rng.random((7, 5)) * 10
    flow = py.transport(a, b, cost)
    np.testing.assert_allclose(flow.sum(1), a, atol=1e-12)
    np.testing.assert_allclose(flow.sum(0), b, atol=1e-12)
    assert (flow >= 0).all()
    A = np.zeros((12, 35))
    for i in range(7):
        A[i, i * 5 : i * 5 + 5] = 1
    for j in range(5):
        A[7 + j, j::5] = 1
    ref = linprog(cost.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs").fun
    assert (flow * cost).sum() == pytest.approx(ref, abs=1e-10)


@needs_both
@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, coord)
def test_backends_agree_on_segments(ax, ay, bx, by):
    c = impls["cython"]
    assert bool(c.segment_blocked(ax, ay, bx, by, WALLS)) == bool(py.segment_blocked(ax, ay, bx, by, WALLS))
    d = np.hypot(bx - ax, by - ay)
    if d > 1e-6:
        ux, uy = (bx - ax) / d, (by - ay) / d
        assert c.ray_wall_distance(ax, ay, ux, uy, WALLS, 400.0) == py.ray_wall_distance(ax, ay, ux, uy, WALLS, 400.0)
        assert c.ray_aabb(ax, ay, ux, uy, 40.0, 60.0, 60.0, 200.0, 400.0) == py.ray_aabb(ax, ay, ux, uy, 40.0, 60.0, 60.0, 200.0, 400.0)


@needs_both
@settings(max_examples=100, deadline=None)
@given(coord, coord, st.floats(-30, 30), st.floats(-30, 30))
def test_backends_agree_on_sweeps(x, y, dx, dy):
    passable = np.array([False, True, False])
    args = (x, y, dx, dy, WALLS, passable, -40.0, -40.0, 240.0, 240.0)
    assert tuple(impls["cython"].sweep_move(*args)) == tuple(py.sweep_move(*args))


@needs_both
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_backends_agree_on_matrices_and_transport(seed):
    rng = np.random.default_rng(seed)
    c = impls["cython"]
    xy = rng.uniform(-50, 250, (8, 2))
    pts = rng.uniform(-50, 250, (20, 2))
    np.testing.assert_array_equal(c.visibility_matrix(xy, WALLS), py.visibility_matrix(xy, WALLS))
    np.testing.assert_array_equal(c.points_visible(xy, pts, WALLS), py.points_visible(xy, pts, WALLS))
    a = rng.random(6)
    b = rng.random(9)
    a /= a.sum()
    b /= b.sum()
    cost = rng.random((6, 9))
    fc, fp = c.transport(a, b, cost), py.transport(a, b, cost)
    assert abs((fc * cost).sum() - (fp * cost).sum()) <= 1e-12
