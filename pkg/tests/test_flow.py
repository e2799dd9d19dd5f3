import math

import numpy as np

from geometry import flow
from geometry.flow import flow_curve, rk4_step, trace_limits, trace_limits_parallel
from geometry.scene import geodesic_distance, normalize

R = math.sqrt(0.5)


def test_rk4_step_stays_on_the_sphere(quadratic_scene):
    x = normalize(np.array([[0.3, 0.5, 0.8], [-0.1, 0.9, 0.2]]))
    y = rk4_step(quadratic_scene.descent, x, 0.05)
    assert np.allclose(np.linalg.norm(y, axis=1), 1.0)


def test_trace_limits(quadratic_scene):
    points = normalize(np.array([[0.9, 0.1, 0.1], [-0.9, 0.1, -0.1]]))
    # minima are ordered p0+, p0-; maxima p2+, p2-
    assert list(trace_limits(quadratic_scene, points, 1)) == [0, 1]
    assert list(trace_limits(quadratic_scene, points, -1)) == [0, 1]


def test_saddle_points_are_separatrix(quadratic_scene):
    assert list(trace_limits(quadratic_scene, np.array([[0.0, 1.0, 0.0]]), 1)) == [flow.SEPARATRIX]


def test_chunking_does_not_change_the_result(quadratic_scene, rng, monkeypatch):
    monkeypatch.setattr(flow, "CHUNK_SIZE", 50)
    points = normalize(rng.standard_normal((200, 3)))
    serial = trace_limits_parallel(quadratic_scene, points, 1, threads=1)
    threaded = trace_limits_parallel(quadratic_scene, points, 1, threads=3)
    assert np.array_equal(serial, threaded)


def test_unstable_branch_runs_along_the_equator(quadratic_scene):
    curve = flow_curve(quadratic_scene, "p1+", 1)
    assert curve.key == ("p1+", "p0+")
    assert curve.manifold == "unstable"
    assert np.all(curve.points[:, 2] == 0.0)
    assert np.array_equal(curve.points[0], [0.0, 1.0, 0.0])
    assert np.array_equal(curve.points[-1], [1.0, 0.0, 0.0])


def test_stable_branch_is_oriented_descending(quadratic_scene):
    curve = flow_curve(quadratic_scene, "p1+", -1, manifold="stable")
    assert curve.key == ("p2-", "p1+")
    assert np.all(curve.points[:, 0] == 0.0)
    assert np.array_equal(curve.points[0], [0.0, 0.0, -1.0])
    assert np.array_equal(curve.points[-1], [0.0, 1.0, 0.0])


def test_every_branch_is_found(quadratic_curves):
    saddles = ("p1+", "p1-")
    expected = {(s, q) for s in saddles for q in ("p0+", "p0-")}
    expected |= {(r, s) for r in ("p2+", "p2-") for s in saddles}
    assert set(quadratic_curves) == expected


def test_shear_bump_deflects_the_equator_flow_line(quadratic_scene):
    center = (R, R, 0.0)
    scene = quadratic_scene.perturbed(center, 0.5, 0.2)
    curve = flow_curve(scene, "p1+", 1)
    assert curve.target == "p0+"
    inside = geodesic_distance(curve.points, center) < 0.5
    first = int(np.argmax(inside))
    assert np.all(np.abs(curve.points[:first, 2]) < 1e-12)
    assert curve.points[:, 2].max() > 1e-3
