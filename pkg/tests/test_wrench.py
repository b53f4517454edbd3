import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from softgrasp.wrench import (
    CenterOfMass,
    EstimationError,
    GravityEstimate,
    RequiredWrench,
    WrenchFeedback,
    estimate_com,
    gravity_line,
    measure_gravity,
    required_wrench_from_feedback,
    required_wrench_from_gravity,
    rotation_about,
    synthesize_feedback,
)

R_A = np.array([-0.03, 0.0, 0.0])
R_B = np.array([0.03, 0.0, 0.0])
Z = np.zeros(3)

vec = arrays(float, 3, elements=st.floats(-5, 5, allow_nan=False))
small = arrays(float, 3, elements=st.floats(-0.05, 0.05, allow_nan=False))


def rand_rotation(rng):
    axis = rng.normal(size=3)
    return rotation_about(axis, rng.uniform(0, 2 * np.pi))


def feedback_for(G, com, pose, grip=4.0, rng=None, fn=0.0, mn=0.0):
    W = required_wrench_from_gravity(G, pose @ np.asarray(com), pose)
    return synthesize_feedback(W, grip, R_A, R_B, rng=rng, force_noise=fn, moment_noise=mn)


# -- feedback ----------------------------------------------------------------

def test_zero_feedback_zero_wrench():
    w = required_wrench_from_feedback(WrenchFeedback(Z, Z, Z, Z, R_A, R_B))
    assert w.is_zero()


def test_feedback_example_matches_symbolic_oracle():
    F_A, F_B = np.array([-2.0, 0.0, 0.5]), np.array([2.0, 0.0, 0.5])
    w = required_wrench_from_feedback(WrenchFeedback(F_A, Z, F_B, Z, R_A, R_B))
    F, M = oracles.required_wrench_sympy(F_A, Z, F_B, Z, R_A, R_B)
    np.testing.assert_allclose(w.F_req, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(w.F_req, F, atol=1e-15)
    np.testing.assert_allclose(w.M_req, M, atol=1e-15)


def test_opposed_normals_cancel():
    w = required_wrench_from_feedback(WrenchFeedback([3, 0, 0], Z, [-3, 0, 0], Z, R_A, R_B))
    assert np.allclose(w.vector, 0.0, atol=1e-15)


@given(vec, small, vec, small, small, small)
def test_feedback_matches_symbolic_oracle(F_A, M_A, F_B, M_B, r_A, r_B):
    if np.array_equal(r_A, r_B):
        r_B = r_B + 0.01
    w = required_wrench_from_feedback(WrenchFeedback(F_A, M_A, F_B, M_B, r_A, r_B))
    F, M = oracles.required_wrench_sympy(F_A, M_A, F_B, M_B, r_A, r_B)
    np.testing.assert_allclose(w.F_req, F, atol=1e-12)
    np.testing.assert_allclose(w.M_req, M, atol=1e-12)


def test_feedback_validation():
    with pytest.raises(ValueError):
        WrenchFeedback(Z, Z, Z, Z, R_A, R_A)
    with pytest.raises(ValueError):
        WrenchFeedback([np.nan, 0, 0], Z, Z, Z, R_A, R_B)
    with pytest.raises(ValueError):
        WrenchFeedback([1, 0], Z, Z, Z, R_A, R_B)


def test_feedback_dict_roundtrip():
    fb = WrenchFeedback([1, 2, 3], [0.1, 0, 0], [-1, 0, 0], Z, R_A, R_B)
    again = WrenchFeedback.from_dict(fb.to_dict())
    for k in ("F_A", "M_A", "F_B", "M_B", "r_A", "r_B"):
        assert np.array_equal(getattr(fb, k), getattr(again, k))


# -- prediction ----------------------------------------------------------------

def test_grasp_at_com():
    w = required_wrench_from_gravity([0, 0, -2.0], [0, 0, 0])
    np.testing.assert_array_equal(w.F_req, [0, 0, 2.0])
    np.testing.assert_array_equal(w.M_req, [0, 0, 0])


def test_offset_com_moment():
    G, l = np.array([0, 0, -1.0]), np.array([0, 0.02, 0])
    w = required_wrench_from_gravity(G, l)
    np.testing.assert_allclose(w.M_req, -np.cross(l, G), atol=1e-17)
    np.testing.assert_allclose(w.M_req, [0.02, 0, 0], atol=1e-17)


def test_half_turn_about_gravity_negates_horizontal_moment():
    G, l = np.array([0, 0, -1.5]), np.array([0.01, 0.02, -0.004])
    R = rotation_about([0, 0, 1], np.pi)
    a = required_wrench_from_gravity(G, l)
    c = required_wrench_from_gravity(G, l, R)
    np.testing.assert_allclose(c.M_req[:2], -a.M_req[:2], atol=1e-15)
    np.testing.assert_allclose(c.F_req, a.F_req, atol=1e-15)


def test_pose_must_be_rotation():
    with pytest.raises(ValueError):
        required_wrench_from_gravity([0, 0, -1], Z, np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        required_wrench_from_gravity([0, 0, -1], Z, 1.01 * np.eye(3))


def test_accepts_center_of_mass_object():
    a = required_wrench_from_gravity([0, 0, -1], CenterOfMass(np.array([0, 0.01, 0])))
    b = required_wrench_from_gravity([0, 0, -1], [0, 0.01, 0])
    assert np.array_equal(a.vector, b.vector)


@pytest.mark.parametrize("seed", range(10))
def test_feedback_and_prediction_agree(seed):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=3) * 3
    l = rng.uniform(-0.05, 0.05, 3)
    R = rand_rotation(rng)
    pred = required_wrench_from_gravity(G, l, R)
    fb = synthesize_feedback(pred, rng.uniform(0, 10), rng.uniform(-0.05, 0.05, 3),
                             rng.uniform(-0.05, 0.05, 3), squeeze_dir=rng.normal(size=3))
    np.testing.assert_allclose(required_wrench_from_feedback(fb).vector, pred.vector, atol=1e-10)


# -- gravity -----------------------------------------------------------------

def test_measure_gravity_example():
    fb = WrenchFeedback([-3, 0, 0.6], Z, [3, 0, 0.6], Z, R_A, R_B)
    np.testing.assert_allclose(measure_gravity(fb), [0, 0, -1.2], atol=1e-15)


def test_measure_gravity_zero():
    assert np.array_equal(measure_gravity(WrenchFeedback(Z, Z, Z, Z, R_A, R_B)), Z)


@given(vec, vec)
def test_measure_gravity_identity(F_A, F_B):
    fb = WrenchFeedback(F_A, Z, F_B, Z, R_A, R_B)
    assert np.array_equal(measure_gravity(fb) + (F_A + F_B), Z)


def test_line_through_origin_when_no_moment():
    est = gravity_line(feedback_for([0, 0, -2.0], [0, 0, 0.03], np.eye(3)))
    np.testing.assert_allclose(est.line_point, 0.0, atol=1e-15)
    np.testing.assert_allclose(est.line_dir, [0, 0, -1])


def test_line_contains_com():
    l_star = np.array([0.01, 0.02, 0.005])
    est = gravity_line(feedback_for([0, 0, -2.0], l_star, np.eye(3)))
    assert est.distance_to(l_star) < 1e-12
    assert abs(est.line_point @ est.G) < 1e-14


def test_line_invariant_under_scaling():
    fb = feedback_for([0.3, -0.2, -2.0], [0.01, 0.02, 0.005], np.eye(3))
    a, b = gravity_line(fb), gravity_line(fb.scaled(2.0))
    np.testing.assert_allclose(a.line_point, b.line_point, atol=1e-15)
    np.testing.assert_allclose(a.line_dir, b.line_dir, atol=1e-15)


@given(arrays(float, 3, elements=st.floats(-0.05, 0.05)), st.floats(0.1, 5.0), st.floats(0.01, 100.0),
       st.integers(0, 2**32 - 1))
def test_line_contains_com_and_scale_free(l, g, scale, seed):
    rng = np.random.default_rng(seed)
    R = rand_rotation(rng)
    G = g * np.array([0, 0, -1.0])
    fb = feedback_for(G, l, R)
    a = gravity_line(fb)
    assert a.distance_to(R.T @ (R @ l)) < 1e-10
    b = gravity_line(fb.scaled(scale))
    np.testing.assert_allclose(a.line_point, b.line_point, atol=1e-12)
    np.testing.assert_allclose(a.line_dir, b.line_dir, atol=1e-12)


def test_line_requires_gravity():
    with pytest.raises(EstimationError):
        gravity_line(WrenchFeedback([1, 0, 0], Z, [-1, 0, 0], Z, R_A, R_B))


def test_line_rejects_moment_parallel_to_gravity():
    fb = WrenchFeedback([0, 0, 1], [0, 0, 0.01], [0, 0, 1], Z, [0, 0, 0.0], [0, 0, 0.001])
    with pytest.raises(EstimationError):
        gravity_line(fb)


# -- center of mass ----------------------------------------------------------

def _line(point, direction, G=1.0):
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    p = np.asarray(point, float)
    p0 = p - (p @ d) * d
    return GravityEstimate(G * d, p0, d)


def test_perpendicular_lines_intersect():
    com = estimate_com([_line([0.1, 0.2, 0.3], [1, 0, 0]), _line([0.1, 0.2, 0.3], [0, 1, 0])])
    np.testing.assert_allclose(com.l, [0.1, 0.2, 0.3], atol=1e-15)
    assert com.residual == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n", range(2, 7))
def test_n_concurrent_lines(n, rng):
    p = rng.uniform(-0.05, 0.05, 3)
    lines = [_line(p, rng.normal(size=3)) for _ in range(n)]
    com = estimate_com(lines)
    np.testing.assert_allclose(com.l, p, atol=1e-12)
    assert com.residual < 1e-12


def test_skew_lines_report_residual():
    com = estimate_com([_line([0, 0, 0], [1, 0, 0]), _line([0, 0, 0.02], [0, 1, 0])])
    np.testing.assert_allclose(com.l, [0, 0, 0.01], atol=1e-15)
    assert com.residual == pytest.approx(0.01)


def test_near_parallel_lines_rejected():
    with pytest.raises(EstimationError) as err:
        estimate_com([_line(Z, [0, 0, 1]), _line([0.01, 0, 0], [0, 0.03, 1])])
    assert err.value.condition > 1e3


def test_single_line_rejected():
    with pytest.raises(EstimationError):
        estimate_com([_line(Z, [0, 0, 1])])


@pytest.mark.parametrize("seed", range(20))
def test_two_pose_recovery(seed):
    rng = np.random.default_rng(seed)
    l_star = rng.uniform(-0.05, 0.05, 3)
    G = np.array([0, 0, -rng.uniform(0.5, 5)])
    lines = [gravity_line(feedback_for(G, l_star, R))
             for R in (np.eye(3), rotation_about([1, 0, 0], np.pi / 2))]
    com = estimate_com(lines)
    assert np.linalg.norm(com.l - l_star) < 1e-9


def test_noisy_recovery_is_reported(rng):
    errs = []
    for _ in range(200):
        l_star = rng.uniform(-0.05, 0.05, 3)
        lines = [gravity_line(feedback_for([0, 0, -3.0], l_star, R, rng=rng, fn=0.1, mn=1e-3))
                 for R in (np.eye(3), rotation_about([1, 0, 0], np.pi / 2))]
        errs.append(np.linalg.norm(estimate_com(lines).l - l_star))
    print(f"noisy two-pose COM error over 200 trials: median {np.median(errs) * 1e3:.2f} mm")
    assert np.all(np.isfinite(errs))


def test_required_wrench_vector_roundtrip():
    w = RequiredWrench([1, 2, 3], [4, 5, 6])
    assert np.array_equal(RequiredWrench.from_vector(w.vector).vector, w.vector)
    assert RequiredWrench.zero().is_zero()
