import numpy as np
import pytest

from elastoshape.errors import InvalidParameters, OriginEvaluation
from elastoshape.kernels import (LamePair, div_gamma, grad_gamma, kelvin_gamma, kernel_dsharp,
                                 kernel_dsharp_conormal, kernel_K, kernel_KT, kernel_P, kernel_Q)

PAIR = LamePair(2.0, 1.3)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture
def samples():
    # points on the annulus 1/2 <= |x| <= 3, where differencing is well conditioned
    rng = np.random.default_rng(7)
    ang = rng.uniform(0, 2 * np.pi, 100)
    x = rng.uniform(0.5, 3.0, 100)[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return x, _unit(rng.normal(size=(100, 2))), _unit(rng.normal(size=(100, 2)))


def _fd_gradient(f, x, step=1e-5):
    cols = [(f(x + step * e) - f(x - step * e)) / (2 * step) for e in np.eye(2)]
    return np.stack(cols, axis=-1)


def test_lame_pair_constants():
    p = LamePair(1.0, 1.0)
    assert np.isclose(p.A, 0.5 * (1 + 1 / 3))
    assert np.isclose(p.B, 0.5 * (1 - 1 / 3))
    with pytest.raises(InvalidParameters):
        LamePair(1.0, 0.0)
    with pytest.raises(InvalidParameters):
        LamePair(-2.0, 1.0)


def test_gamma_is_symmetric_and_even(samples):
    x, _, _ = samples
    g = kelvin_gamma(x, PAIR)
    assert np.allclose(g, np.swapaxes(g, -1, -2))
    assert np.allclose(g, kelvin_gamma(-x, PAIR))


def test_origin_rejected():
    with pytest.raises(OriginEvaluation):
        kelvin_gamma(np.zeros(2), PAIR)


def test_grad_gamma_matches_central_differences(samples):
    x, _, _ = samples
    exact = grad_gamma(x, PAIR)
    fd = _fd_gradient(lambda z: kelvin_gamma(z, PAIR), x)
    assert np.abs(exact - fd).max() < 1e-8


def test_gamma_solves_lame_away_from_origin(samples):
    x, _, _ = samples
    x = x + 3 * _unit(x)
    step = 1e-3
    lap = sum(kelvin_gamma(x + step * e, PAIR) + kelvin_gamma(x - step * e, PAIR) for e in np.eye(2))
    lap = (lap - 4 * kelvin_gamma(x, PAIR)) / step**2
    # grad div by differencing the closed-form divergence
    gd = _fd_gradient(lambda z: div_gamma(z, PAIR), x, step)   # [p, j, k] = d_k div_j
    res = PAIR.mu * lap + (PAIR.lam + PAIR.mu) * np.swapaxes(gd, -1, -2)
    assert np.abs(res).max() < 1e-5


def test_P_Q_combination_is_adjoint_kernel(samples):
    x, n, _ = samples
    combo = PAIR.lam * kernel_P(x, n, PAIR) + PAIR.mu * kernel_Q(x, n, PAIR)
    assert np.abs(combo - kernel_KT(x, n, PAIR)).max() < 1e-13


def test_K_and_KT_are_dual(samples):
    # the gradient route for K against the closed form for K^T
    x, n, _ = samples
    assert np.abs(np.swapaxes(kernel_K(-x, n, PAIR), -1, -2) - kernel_KT(x, n, PAIR)).max() < 1e-13


def test_KT_is_traction_of_gamma_columns(samples):
    x, n, _ = samples
    grad = _fd_gradient(lambda z: kelvin_gamma(z, PAIR), x)     # [p, i, j, k]
    trac = np.stack([PAIR.traction(grad[:, :, j, :], n) for j in range(2)], axis=-1)
    assert np.abs(trac - kernel_KT(x, n, PAIR)).max() < 1e-8


def test_dsharp_is_normal_derivative_in_source(samples):
    x, _, ny = samples
    expected = -np.einsum("pijk,pk->pij", grad_gamma(x, PAIR), ny)
    assert np.abs(kernel_dsharp(x, ny, PAIR) - expected).max() < 1e-13


def test_dsharp_conormal_matches_fd_traction(samples):
    x, n, ny = samples
    grad = _fd_gradient(lambda z: kernel_dsharp(z, ny, PAIR), x)
    trac = np.stack([PAIR.traction(grad[:, :, j, :], n) for j in range(2)], axis=-1)
    assert np.abs(trac - kernel_dsharp_conormal(x, n, ny, PAIR)).max() < 1e-6
