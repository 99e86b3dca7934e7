import time

import numpy as np
import pytest

from elastoshape.errors import AsymmetricStrain
from elastoshape.kernels import LamePair
from elastoshape.tensors import (IsoTensor4, build_C, build_closed_form, build_K, build_M, build_M_LY, build_S,
                                 check_S_equals_M, exterior_bilinear, symmetric_basis)

N0 = np.array([1.0, 0.0])
T0 = np.array([0.0, 1.0])


def random_pairs(n, seed=0):
    """Random Lame pairs satisfying (lam0 - lam1)(mu0 - mu1) >= 0."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        mu0, mu1 = rng.uniform(0.2, 5.0, 2)
        lam0, lam1 = rng.uniform(-0.1, 5.0, 2)
        if (lam0 - lam1) * (mu0 - mu1) >= 0:
            out.append((LamePair(lam0, mu0), LamePair(lam1, mu1)))
    return out


def test_C_is_hooke():
    p = LamePair(2.0, 0.5)
    e = np.array([[1.0, 0.3], [0.3, -2.0]])
    assert np.allclose(build_C(p).apply(e, N0), p.lam * np.trace(e) * np.eye(2) + 2 * p.mu * e)


def test_asymmetric_strain_rejected():
    with pytest.raises(AsymmetricStrain):
        build_C(LamePair(1.0, 1.0)).apply(np.array([[0.0, 1.0], [0.0, 0.0]]), N0)


def test_M_coefficients_on_known_pair():
    m = build_M(LamePair(1.0, 1.0), LamePair(3.0, 3.0))
    assert m.identity == pytest.approx(6.0)
    coef = m.coefficients()
    assert coef[("I", "I")] == pytest.approx(3.0)
    assert coef[("I", "tt")] == pytest.approx(-16 / 3)


def test_matched_interface_tensors():
    p = LamePair(1.5, 0.7)
    e = np.array([[0.2, -0.4], [-0.4, 1.0]])
    assert np.allclose(build_M(p, p).apply(e, N0), build_C(p).apply(e, N0))
    assert np.allclose(build_K(p, p).apply(e, N0), 0.0)
    assert np.allclose(build_S(p, p).apply(e, N0), 0.0)


def test_tangential_stress_continuity_on_uniform_strain():
    # M(l, k) maps the strain on side k to the tangential stress on side l:
    # for a laminate the tangential traction (C_l E_l) tau must match
    p0, p1 = LamePair(1.0, 1.0), LamePair(3.0, 2.0)
    e1 = np.array([[0.4, 0.1], [0.1, -0.3]])
    n, t = N0, T0
    # normal-derivative jump from K gives the side-0 strain
    g1 = e1.copy()
    jump = build_K(p0, p1).apply(e1, n) @ n
    g0 = g1 + np.outer(jump, n)
    e0 = 0.5 * (g0 + g0.T)
    # traction continuity and tangential strain continuity
    assert np.allclose(build_C(p0).apply(e0, n) @ n, build_C(p1).apply(e1, n) @ n)
    assert np.isclose(t @ e0 @ t, t @ e1 @ t)
    assert np.allclose(build_C(p0).apply(e0, n) @ t, build_M(p0, p1).apply(e1, n) @ t)


def test_exterior_forms_agree_with_direct_route():
    rng = np.random.default_rng(1)
    for p0, p1 in random_pairs(20, seed=5):
        ang = rng.uniform(0, 2 * np.pi)
        n = np.array([np.cos(ang), np.sin(ang)])
        t = np.array([-n[1], n[0]])
        for u in symmetric_basis():
            for v in symmetric_basis():
                direct = exterior_bilinear(p0, p1, u, v, n, t)
                assert abs(build_S(p0, p1).bilinear(u, v, n, t) - direct) < 1e-12 * max(1, abs(direct))


def test_S_equals_M_on_random_pairs():
    start = time.perf_counter()
    worst = max(check_S_equals_M(p0, p1) for p0, p1 in random_pairs(100))
    assert worst <= 1e-12
    assert time.perf_counter() - start < 1.0


def test_closed_form_agrees():
    for p0, p1 in random_pairs(50, seed=2):
        s, c = build_S(p0, p1), build_closed_form(p0, p1)
        for u in symmetric_basis():
            for v in symmetric_basis():
                assert abs(s.bilinear(u, v, N0, T0) - c.bilinear(u, v, N0, T0)) < 1e-12


def test_closed_form_on_known_pair():
    c = build_closed_form(LamePair(1.0, 1.0), LamePair(3.0, 2.0))
    # 2 mu0 (mu1 - mu0) / mu1 = 1
    assert c.identity == pytest.approx(1.0)
    assert c.coefficients()[("I", "I")] == pytest.approx((1 * 2 + 2 * 1) / 7)


def test_tensor_algebra():
    a = IsoTensor4(1.0, ((2.0, "I", "tt"),))
    b = 3.0 * a - a
    assert b.identity == pytest.approx(2.0)
    assert b.coefficients()[("I", "tt")] == pytest.approx(4.0)
    with pytest.raises(ValueError):
        IsoTensor4(0.0, ((1.0, "I", "xx"),))
