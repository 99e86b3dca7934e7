import json

import numpy as np
import pytest

from elastoshape.errors import DegenerateCurve, OddNodeCount, SelfIntersectionRisk
from elastoshape.geometry import (Curve, PerturbationField, PerturbedCurve, geometry_expansion,
                                  h_on_grid, perturbed_grid, resample, sample_grid)


def test_circle_geometry():
    g = sample_grid(Curve.circle(2.0), 64)
    assert np.allclose(g.curvature, 0.5)
    assert np.isclose(g.length, 4 * np.pi)
    assert np.allclose(g.normal, g.points / 2.0)
    # tangent rotated by -pi/2 is the outward normal
    assert np.allclose(g.normal, np.stack([g.tangent[:, 1], -g.tangent[:, 0]], axis=1))


def test_kite_area_and_length_converge():
    c = Curve.kite()
    assert np.isclose(c.signed_area(), 1.5 * np.pi)
    l128 = sample_grid(c, 128).length
    l256 = sample_grid(c, 256).length
    assert abs(l128 - l256) < 1e-12


def test_clockwise_curve_rejected():
    with pytest.raises(DegenerateCurve):
        Curve([[0, 0], [1, 0]], [[0, 0], [0, -1]])


def test_odd_node_count_rejected():
    with pytest.raises(OddNodeCount):
        sample_grid(Curve.kite(), 63)


def test_spectral_derivative_of_a_mode():
    g = sample_grid(Curve.circle(), 32)
    assert np.allclose(g.d_dt(np.sin(3 * g.t)), 3 * np.cos(3 * g.t), atol=1e-12)
    # arclength equals parameter on the unit circle
    assert np.allclose(g.d_ds(np.cos(g.t)), -np.sin(g.t), atol=1e-12)


def test_curvature_matches_second_derivative_identity():
    # X_ss = -curvature * n with the outward normal; spectral d/ds converges fast
    err = []
    for n in (128, 256):
        g = sample_grid(Curve.kite(), n)
        xss = g.d_ds(g.d_ds(g.points))
        err.append(np.abs(xss + g.curvature[:, None] * g.normal).max())
    assert err[1] < 1e-7 and err[1] < 1e-3 * err[0]


def test_rigid_motions_and_winding():
    g = sample_grid(Curve.kite(), 128)
    theta = g.rigid_motions()
    assert theta.shape == (3, 128, 2)
    assert np.allclose(theta[2], np.stack([g.points[:, 1], -g.points[:, 0]], axis=1))
    wn = g.winding_number([[0.0, 0.0], [5.0, 0.0]])
    assert list(wn != 0) == [True, False]


def test_circle_offset_is_concentric():
    g = sample_grid(Curve.circle(), 64)
    ge = perturbed_grid(g, PerturbationField.constant(1.0), 0.1)
    assert np.allclose(np.linalg.norm(ge.points, axis=1), 1.1)
    assert np.allclose(ge.curvature, 1 / 1.1)


def test_zero_eps_returns_same_grid():
    g = sample_grid(Curve.kite(), 64)
    assert perturbed_grid(g, PerturbationField.mode(2), 0.0) is g


def test_fold_guard():
    g = sample_grid(Curve.circle(), 64)
    with pytest.raises(SelfIntersectionRisk):
        perturbed_grid(g, PerturbationField.constant(-1.0), 0.95)


def test_perturbed_curve_moves_along_normal():
    c = Curve.kite()
    h = PerturbationField.mode(2)
    pc = PerturbedCurve(c, h, 0.05)
    g = sample_grid(c, 64)
    assert np.allclose(pc.derivatives(g.t, 0)[0], g.points + 0.05 * h(g.t)[:, None] * g.normal)


def test_length_element_expansion():
    # the first-order length change of the offset curve is curvature * h
    g = sample_grid(Curve.kite(), 256)
    h = PerturbationField.mode(2)
    h0, _ = h_on_grid(g, h)
    rem = []
    for eps in (0.02, 0.01, 0.005):
        ge = perturbed_grid(g, h, eps)
        rem.append(np.abs(ge.speed / g.speed - 1 - eps * g.curvature * h0).max())
    assert rem[0] / rem[1] > 3.5 and rem[1] / rem[2] > 3.5


def test_geometry_expansion_fields():
    g = sample_grid(Curve.circle(), 64)
    exp = geometry_expansion(g, PerturbationField.constant(1.0))
    # sigma_1 = curvature * h on the unit circle
    assert np.allclose(exp.sigma1, 1.0)
    assert np.allclose(exp.n1, 0.0)


def test_json_round_trip(tmp_path):
    c = Curve.ellipse(1.5, 1.0)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(c.to_json()))
    assert np.allclose(Curve.from_json(path).cos_coeffs, c.cos_coeffs)
    h = PerturbationField.mode(3, 0.5, "sin")
    assert np.allclose(PerturbationField.from_json(h.to_json()).h_sin, h.h_sin)
    assert PerturbationField().is_zero


def test_resample_keeps_curve():
    g = sample_grid(Curve.kite(), 64)
    assert resample(g, 128).n_nodes == 128
