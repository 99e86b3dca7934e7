"""Pointwise kernels of two-dimensional isotropic elastostatics.

Every function is vectorised over leading axes: ``x`` has shape (..., 2) and
stands for the difference ``x - y`` between target and source; unit normals
broadcast against it.  Matrices come back with shape (..., 2, 2) and the
third-order gradient with shape (..., 2, 2, 2), indexed ``[i, j, k] =
d_k Gamma_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidParameters, OriginEvaluation

Array = NDArray[np.float64]

EYE = np.eye(2)


@dataclass(frozen=True)
class LamePair:
    """Lame constants (lambda, mu) of one isotropic phase."""

    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not (self.mu > 0 and self.lam + self.mu > 0):
            raise InvalidParameters(f"need mu > 0 and lambda + mu > 0, got ({self.lam}, {self.mu})")

    @property
    def A(self) -> float:
        return 0.5 * (1.0 / self.mu + 1.0 / (2 * self.mu + self.lam))

    @property
    def B(self) -> float:
        return 0.5 * (1.0 / self.mu - 1.0 / (2 * self.mu + self.lam))

    def stress(self, grad: ArrayLike) -> Array:
        """lambda tr(E) I + 2 mu E for the symmetric part E of ``grad`` (..., 2, 2)."""
        g = np.asarray(grad, dtype=float)
        sym = 0.5 * (g + np.swapaxes(g, -1, -2))
        tr = np.trace(g, axis1=-2, axis2=-1)[..., None, None]
        return self.lam * tr * EYE + 2 * self.mu * sym

    def traction(self, grad: ArrayLike, normal: ArrayLike) -> Array:
        """Conormal derivative lambda (div u) n + mu (grad u + grad u^T) n."""
        return np.einsum("...ij,...j->...i", self.stress(grad), normal)


def _check(x: Array) -> Array:
    x = np.asarray(x, dtype=float)
    if np.any(np.sum(x * x, axis=-1) < 1e-28):
        raise OriginEvaluation("kernel evaluated at coincident points")
    return x


def _outer(a: Array, b: Array) -> Array:
    return a[..., :, None] * b[..., None, :]


def _dot(a: Array, b: Array) -> Array:
    return np.sum(a * b, axis=-1)


def kelvin_gamma(x: ArrayLike, pair: LamePair) -> Array:
    """Gamma(x) = (A/2pi) log|x| I - (B/2pi) x (x) x / |x|^2."""
    x = _check(x)
    r2 = _dot(x, x)[..., None, None]
    return pair.A / (2 * np.pi) * 0.5 * np.log(r2) * EYE - pair.B / (2 * np.pi) * _outer(x, x) / r2


def grad_gamma(x: ArrayLike, pair: LamePair) -> Array:
    """Third-order gradient ``[i, j, k] = d_k Gamma_ij``."""
    x = _check(x)
    r2 = _dot(x, x)[..., None, None, None]
    i_x = EYE[:, :, None] * x[..., None, None, :]          # delta_ij x_k
    ix_t = EYE[:, None, :] * x[..., None, :, None]         # delta_ik x_j
    x_i = x[..., :, None, None] * EYE[None, :, :]          # x_i delta_jk
    xxx = x[..., :, None, None] * x[..., None, :, None] * x[..., None, None, :]
    return (pair.A / (2 * np.pi) * i_x / r2 + pair.B / np.pi * xxx / r2**2
            - pair.B / (2 * np.pi) * (ix_t + x_i) / r2)


def div_gamma(x: ArrayLike, pair: LamePair) -> Array:
    """Divergence of Gamma (its columns), ((A-B)/2pi) x / |x|^2."""
    x = _check(x)
    return (pair.A - pair.B) / (2 * np.pi) * x / _dot(x, x)[..., None]


def kernel_K(x: ArrayLike, n_y: ArrayLike, pair: LamePair) -> Array:
    """Double-layer kernel K(x - y) with the normal taken at the source point y.

    Row j is the traction at y of the j-th column field of Gamma(x - .), so
    ``kernel_K(y - x, n_x).T == kernel_KT(x - y, n_x)``.
    """
    g = grad_gamma(x, pair)
    n_y = np.asarray(n_y, dtype=float)
    div = np.einsum("...kjk->...j", g)                      # d_k Gamma_kj
    gn = np.einsum("...ijk,...k->...ij", g, n_y)            # d_n Gamma_ij
    gt = np.einsum("...kji,...k->...ij", g, n_y)            # sum_k d_i Gamma_kj n_k
    # d/dy = -d/dx on Gamma(x - y)
    traction = -(pair.lam * _outer(n_y, div) + pair.mu * (gn + gt))
    return np.swapaxes(traction, -1, -2)


def kernel_KT(x: ArrayLike, n_x: ArrayLike, pair: LamePair) -> Array:
    """Kernel of the adjoint double layer (traction at x of the single layer)."""
    x = _check(x)
    n_x = np.asarray(n_x, dtype=float)
    A, B = pair.A, pair.B
    r2 = _dot(x, x)[..., None, None]
    xn = _dot(x, n_x)[..., None, None]
    c = (A - B) / (A + B) / (2 * np.pi)
    return (c * xn / r2 * EYE + c * (_outer(x, n_x) - _outer(n_x, x)) / r2
            + 2 / np.pi * B / (A + B) * xn * _outer(x, x) / r2**2)


def kernel_dsharp(x: ArrayLike, n_y: ArrayLike, pair: LamePair) -> Array:
    """dGamma(x - y)/dn(y) written as the sum of its three closed-form pieces."""
    x = _check(x)
    n_y = np.asarray(n_y, dtype=float)
    A, B = pair.A, pair.B
    r2 = _dot(x, x)[..., None, None]
    xn = _dot(x, n_y)[..., None, None]
    scalar = -A / (2 * np.pi) * xn / r2 * EYE
    dyadic = -B / np.pi * xn * _outer(x, x) / r2**2
    sym = B / (2 * np.pi) * (_outer(x, n_y) + _outer(n_y, x)) / r2
    return scalar + dyadic + sym


def kernel_P(x: ArrayLike, n_x: ArrayLike, pair: LamePair) -> Array:
    """Integrand of (div S) n: ((A-B)/2pi) n(x) (x) x / |x|^2."""
    x = _check(x)
    r2 = _dot(x, x)[..., None, None]
    return (pair.A - pair.B) / (2 * np.pi) * _outer(np.asarray(n_x, float), x) / r2


def kernel_Q(x: ArrayLike, n_x: ArrayLike, pair: LamePair) -> Array:
    """Integrand of (grad S + grad S^T) n."""
    x = _check(x)
    n = np.asarray(n_x, dtype=float)
    A, B = pair.A, pair.B
    r2 = _dot(x, x)[..., None, None]
    xn = _dot(x, n)[..., None, None]
    return ((A - B) / (2 * np.pi) * (xn / r2 * EYE + _outer(x, n) / r2)
            - B / np.pi * _outer(n, x) / r2 + 2 * B / np.pi * xn * _outer(x, x) / r2**2)


def kernel_dsharp_conormal(x: ArrayLike, n_x: ArrayLike, n_y: ArrayLike, pair: LamePair) -> Array:
    """Closed-form integrand of the traction at x of the D-sharp potential.

    Hypersingular (degree -2); only used pointwise off the diagonal.
    """
    x = _check(x)
    nx = np.asarray(n_x, dtype=float)
    ny = np.asarray(n_y, dtype=float)
    A, B = pair.A, pair.B
    r2 = _dot(x, x)[..., None, None]
    a = _dot(x, nx)[..., None, None]
    b = _dot(x, ny)[..., None, None]
    nn = _dot(nx, ny)[..., None, None]
    c = (A - B) / (A + B) / (2 * np.pi)
    first = c * (2 * a * b / r2**2 - nn / r2) * EYE
    second = c * (2 * b / r2**2 * (_outer(x, nx) - _outer(nx, x)) - (_outer(ny, nx) - _outer(nx, ny)) / r2)
    third = 2 * B / (A + B) / np.pi * (4 * a * b / r2**3 * _outer(x, x) - nn / r2**2 * _outer(x, x)
                                        - a / r2**2 * (_outer(x, ny) + _outer(ny, x)))
    return first + second + third


def kernel_graddiv_nn(x: ArrayLike, n_x: ArrayLike, pair: LamePair) -> Array:
    """Integrand of <grad div S, n> n."""
    x = _check(x)
    n = np.asarray(n_x, dtype=float)
    r2 = _dot(x, x)[..., None, None]
    a = _dot(x, n)[..., None, None]
    return (pair.A - pair.B) / (2 * np.pi) * (_outer(n, n) / r2 - 2 * a / r2**2 * _outer(n, x))


def kernel_L(x: ArrayLike, n_x: ArrayLike, pair: LamePair) -> Array:
    """Integrand of d_n(grad S + grad S^T) n."""
    x = _check(x)
    n = np.asarray(n_x, dtype=float)
    A, B = pair.A, pair.B
    r2 = _dot(x, x)[..., None, None]
    a = _dot(x, n)[..., None, None]
    nn = _outer(n, n)
    return ((A - B) / (2 * np.pi) * ((EYE + nn) / r2 - 2 * a**2 / r2**2 * EYE - 2 * a / r2**2 * _outer(x, n))
            - B / np.pi * (nn / r2 - 2 * a / r2**2 * _outer(n, x))
            + 2 * B / np.pi * (a / r2**2 * (_outer(x, n) + _outer(n, x)) - 4 * a**2 / r2**3 * _outer(x, x)
                               + _outer(x, x) / r2**2))
