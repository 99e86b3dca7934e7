import numpy as np
import pytest

from conftest import EPSILONS, slope, smooth_density
from elastoshape.errors import SideMismatch, TooCloseToBoundary
from elastoshape.geometry import Curve, PerturbationField, perturbed_grid, sample_grid
from elastoshape.kernels import LamePair
from elastoshape.potentials import (LayerPotentials, assemble_k1, assemble_s1, dsharp_conormal_jump_check,
                                    eval_off_boundary, expansion_remainders,
                                    min_safe_distance, w21_norm)

PAIR = LamePair(1.0, 1.0)


def test_single_layer_of_constant_at_circle_center():
    # S[c](0) = R (A log R - B / 2) c on the circle of radius R
    c = np.array([0.7, -1.2])
    for radius in (1.0, 1.1):
        g = sample_grid(Curve.circle(radius), 64)
        val = eval_off_boundary(g, np.tile(c, (64, 1)), PAIR, [[0.0, 0.0]])[0]
        expected = radius * (PAIR.A * np.log(radius) - PAIR.B / 2) * c
        assert np.allclose(val, expected, atol=1e-13)


def test_offset_circle_matches_analytic_center_value():
    # h = 1 moves the unit circle to radius 1 + eps
    g = sample_grid(Curve.circle(), 64)
    ge = perturbed_grid(g, PerturbationField.constant(1.0), 0.1)
    c = np.array([1.0, 0.5])
    val = eval_off_boundary(ge, np.tile(c, (64, 1)), PAIR, [[0.0, 0.0]])[0]
    assert np.allclose(val, 1.1 * (PAIR.A * np.log(1.1) - PAIR.B / 2) * c, atol=1e-13)


def test_refinement_on_smooth_curves():
    def coarse_gap(curve, n_coarse):
        ref = sample_grid(curve, 256)
        g = sample_grid(curve, n_coarse)
        fine = LayerPotentials(ref, PAIR).single.apply(smooth_density(ref))[:: 256 // n_coarse]
        return np.abs(LayerPotentials(g, PAIR).single.apply(smooth_density(g)) - fine).max()

    assert coarse_gap(Curve.ellipse(1.5, 1.0), 64) <= 1e-10
    kite = [coarse_gap(Curve.kite(), n) for n in (64, 128)]
    assert kite[1] < 1e-9 and kite[1] < 1e-2 * kite[0]


def test_gamma_part_is_symmetric_under_weights():
    g = sample_grid(Curve.kite(), 64)
    mat = LayerPotentials(g, PAIR).single.matrix.reshape(64, 2, 64, 2)
    sym = mat / g.weights[None, None, :, None]
    assert np.abs(sym - sym.transpose(2, 3, 0, 1)).max() < 1e-12


def test_kstar_is_dilation_invariant():
    a = LayerPotentials(sample_grid(Curve.kite(), 64), PAIR).kstar.matrix
    big = Curve(2 * Curve.kite().cos_coeffs, 2 * Curve.kite().sin_coeffs)
    b = LayerPotentials(sample_grid(big, 64), PAIR).kstar.matrix
    assert np.abs(a - b).max() < 1e-12


def test_kstar_spectral_radius_stays_bounded():
    for curve in (Curve.circle(), Curve.kite()):
        radii = [np.abs(np.linalg.eigvals(LayerPotentials(sample_grid(curve, n), PAIR).kstar.matrix)).max()
                 for n in (64, 128)]
        assert max(radii) < 0.5 + 1e-6


def test_interior_traction_has_no_rigid_moments(kite256):
    # the interior traction of a Lame field integrates to zero against rigid motions
    lp = LayerPotentials(kite256, PAIR)
    trac = lp.conormal_single("minus").apply(smooth_density(kite256))
    moments = np.einsum("mnk,nk,n->m", kite256.rigid_motions(), trac, kite256.weights)
    assert np.abs(moments).max() < 1e-10


def test_jump_relations_are_exact(kite256):
    lp = LayerPotentials(kite256, PAIR)
    f = smooth_density(kite256)
    n = kite256.normal
    nn = n[:, :, None] * n[:, None, :]
    fn = np.einsum("nij,nj->ni", nn, f)
    conormal = lp.conormal_single("plus").apply(f) - lp.conormal_single("minus").apply(f)
    assert np.abs(conormal - f).max() <= 1e-10
    dsharp = lp.dsharp_trace("plus").apply(f) - lp.dsharp_trace("minus").apply(f)
    assert np.abs(dsharp - (-f / PAIR.mu + 2 * PAIR.B * fn)).max() <= 1e-10
    normal = lp.normal_derivative_single("plus").apply(f) - lp.normal_derivative_single("minus").apply(f)
    assert np.abs(normal - (f / PAIR.mu - 2 * PAIR.B * fn)).max() <= 1e-10


def test_traces_match_off_boundary_limits():
    g = sample_grid(Curve.ellipse(1.5, 1.0), 128)
    lp = LayerPotentials(g, PAIR)
    f = smooth_density(g)
    idx = np.arange(0, 128, 16)
    for side, sign in (("plus", 1.0), ("minus", -1.0)):
        trace = lp.grad_single_trace(f, side)[idx]
        pts = lambda d: g.points[idx] + sign * d * g.normal[idx]  # noqa: E731
        errs = []
        for d0 in (0.01, 0.005):
            # quadratic extrapolation from offsets d0, 2 d0, 3 d0
            near = [eval_off_boundary(g, f, PAIR, pts(k * d0), "grad_single", upsample_factor=64, check=False)
                    for k in (1, 2, 3)]
            errs.append(np.abs(3 * near[0] - 3 * near[1] + near[2] - trace).max())
        assert errs[1] < 1e-4 and errs[0] / errs[1] > 6


def test_distance_guard():
    g = sample_grid(Curve.kite(), 64)
    with pytest.raises(TooCloseToBoundary):
        eval_off_boundary(g, smooth_density(g), PAIR, g.points[:1] + 0.5 * min_safe_distance(g) * g.normal[:1])


def test_single_layer_solves_lame_off_boundary():
    g = sample_grid(Curve.kite(), 128)
    f = smooth_density(g)
    x0 = np.array([[3.0, 0.5]])
    step = 2.5e-3
    u = lambda z: eval_off_boundary(g, f, PAIR, z)  # noqa: E731
    lap = sum(u(x0 + step * e) + u(x0 - step * e) for e in np.eye(2)) - 4 * u(x0)
    h = step
    dxy = (u(x0 + h * np.array([1, 1])) - u(x0 + h * np.array([1, -1]))
           - u(x0 + h * np.array([-1, 1])) + u(x0 + h * np.array([-1, -1]))) / (4 * h * h)
    dxx = (u(x0 + h * np.array([1, 0])) - 2 * u(x0) + u(x0 - h * np.array([1, 0]))) / h**2
    dyy = (u(x0 + h * np.array([0, 1])) - 2 * u(x0) + u(x0 - h * np.array([0, 1]))) / h**2
    graddiv = np.array([dxx[0, 0] + dxy[0, 1], dxy[0, 0] + dyy[0, 1]])
    res = PAIR.mu * lap[0] / h**2 + (PAIR.lam + PAIR.mu) * graddiv
    assert np.abs(res).max() < 1e-6


def test_dsharp_potential_solves_lame_off_boundary():
    g = sample_grid(Curve.kite(), 128)
    f = smooth_density(g)
    x0 = np.array([[0.1, 0.2]])
    h = 1e-2
    u = lambda z: eval_off_boundary(g, f, PAIR, z, "dsharp")  # noqa: E731
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    dxx = (u(x0 + h * e1) - 2 * u(x0) + u(x0 - h * e1)) / h**2
    dyy = (u(x0 + h * e2) - 2 * u(x0) + u(x0 - h * e2)) / h**2
    dxy = (u(x0 + h * (e1 + e2)) - u(x0 + h * (e1 - e2)) - u(x0 - h * (e1 - e2)) + u(x0 - h * (e1 + e2))) / (4 * h * h)
    graddiv = np.array([dxx[0, 0] + dxy[0, 1], dxy[0, 0] + dyy[0, 1]])
    res = PAIR.mu * (dxx + dyy)[0] + (PAIR.lam + PAIR.mu) * graddiv
    assert np.abs(res).max() < 1e-4


def test_far_field_decay_of_balanced_density():
    g = sample_grid(Curve.kite(), 128)
    f = smooth_density(g)
    f = f - g.integrate(f) / g.length
    radii = np.array([10.0, 20.0, 40.0])
    amp = [np.abs(eval_off_boundary(g, f, PAIR, [[r, 0.3 * r]])).max() for r in radii]
    assert np.polyfit(np.log(radii), np.log(amp), 1)[0] < -0.9


@pytest.mark.parametrize("density", ["translation", "normal"])
def test_dsharp_traction_jump_on_circle(density):
    g = sample_grid(Curve.circle(), 256)
    phi = g.rigid_motions()[0] if density == "translation" else g.normal
    assert dsharp_conormal_jump_check(g, PAIR, phi) <= 1e-8


def test_dsharp_traction_jump_on_kite():
    for n in (64, 256):
        g = sample_grid(Curve.kite(), n)
        assert dsharp_conormal_jump_check(g, PAIR, smooth_density(g)) <= 1e-8


def test_zero_perturbation_gives_zero_operators():
    g = sample_grid(Curve.kite(), 32)
    zero = PerturbationField()
    assert np.abs(assemble_s1(g, zero, PAIR).matrix).max() == 0.0
    assert np.abs(assemble_k1(g, zero, PAIR).matrix).max() == 0.0


def test_first_order_operators_are_side_independent(kite256, h2):
    lp = LayerPotentials(kite256, PAIR)
    f = smooth_density(kite256)
    assert np.abs(lp.k1_apply(f, h2, "plus") - lp.k1_apply(f, h2, "minus")).max() <= 1e-8
    assert np.abs(lp.s1_apply(f, h2, "plus") - lp.s1_apply(f, h2, "minus")).max() <= 1e-8


def test_side_check_raises_on_sign_error(monkeypatch):
    g = sample_grid(Curve.kite(), 32)
    lp = LayerPotentials(g, PAIR)
    real = lp.k1_apply
    monkeypatch.setattr(lp, "k1_apply", lambda f, h, side: real(f, h, side) * (1.0 if side == "plus" else -1.0))
    with pytest.raises(SideMismatch):
        lp.assemble_k1(PerturbationField.mode(2), "plus", check_sides=True)


def test_operator_expansions_are_second_order(kite256, h2):
    f = smooth_density(kite256)
    rem = [expansion_remainders(kite256, PAIR, h2, f, e) for e in EPSILONS]
    assert slope(EPSILONS, [r["kstar"] for r in rem]) >= 1.9
    assert slope(EPSILONS, [r["single"] for r in rem]) >= 1.9


def test_w21_norm_of_a_mode():
    g = sample_grid(Curve.circle(), 64)
    v = np.stack([np.cos(2 * g.t), 0 * g.t], axis=1)
    # ||cos 2t|| = sqrt(pi), ||2 sin 2t|| = 2 sqrt(pi)
    assert np.isclose(w21_norm(g, v), 3 * np.sqrt(np.pi))
