"""Closed Fourier curves, their normal perturbations, and boundary grids.

Conventions used throughout the package:

* curves are traversed anticlockwise and the unit normal is the tangent
  rotated by -pi/2, ``n = (tau_y, -tau_x)``, which points outward;
* ``curvature`` is the usual signed curvature, positive on convex curves
  (1/R on a circle of radius R).  With these conventions the second
  arclength derivative of the curve is ``-curvature * n``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateCurve, OddNodeCount, SelfIntersectionRisk

Array = NDArray[np.float64]

# smallest admissible first-order length stretch 1 + eps * curvature * h
STRETCH_FLOOR = 0.1


def rotate_cw(v: Array) -> Array:
    """Rotate 2-vectors (last axis) by -pi/2."""
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def _trig_derivative(k: Array, t: Array, order: int) -> tuple[Array, Array]:
    """Return d^order/dt^order of cos(k t) and sin(k t) on the outer grid k x t."""
    phase = np.outer(t, k) + order * np.pi / 2
    scale = k.astype(float) ** order
    return scale * np.cos(phase), scale * np.sin(phase)


class Parametrization(Protocol):
    """Anything that can report a 2pi-periodic planar curve and its t-derivatives."""

    def derivatives(self, t: ArrayLike, order: int = 2) -> list[Array]: ...


@dataclass(frozen=True)
class Curve:
    """Planar closed curve ``X(t) = sum_k cos(k t) c_k + sin(k t) s_k``.

    Row ``k`` of ``cos_coeffs``/``sin_coeffs`` is the 2-vector of mode ``k``
    (row 0 is the constant term; its sine row is ignored).
    """

    cos_coeffs: Array
    sin_coeffs: Array

    def __post_init__(self) -> None:
        c = np.atleast_2d(np.asarray(self.cos_coeffs, dtype=float))
        s = np.atleast_2d(np.asarray(self.sin_coeffs, dtype=float))
        if c.shape[-1] != 2 or s.shape[-1] != 2:
            raise ValueError("Fourier coefficients must be lists of 2-vectors")
        m = max(len(c), len(s))
        c = np.vstack([c, np.zeros((m - len(c), 2))])
        s = np.vstack([s, np.zeros((m - len(s), 2))])
        object.__setattr__(self, "cos_coeffs", c)
        object.__setattr__(self, "sin_coeffs", s)
        if self.signed_area() <= 0:
            raise DegenerateCurve("curve must be traversed anticlockwise (positive area)")

    @classmethod
    def circle(cls, radius: float = 1.0, center: tuple[float, float] = (0.0, 0.0)) -> Curve:
        return cls([center, [radius, 0.0]], [[0.0, 0.0], [0.0, radius]])

    @classmethod
    def ellipse(cls, a: float, b: float) -> Curve:
        return cls([[0.0, 0.0], [a, 0.0]], [[0.0, 0.0], [0.0, b]])

    @classmethod
    def kite(cls) -> Curve:
        """(cos t + 0.65 cos 2t - 0.65, 1.5 sin t)."""
        return cls([[-0.65, 0.0], [1.0, 0.0], [0.65, 0.0]],
                   [[0.0, 0.0], [0.0, 1.5], [0.0, 0.0]])

    @classmethod
    def from_json(cls, data: dict | str | Path) -> Curve:
        if not isinstance(data, dict):
            data = json.loads(Path(data).read_text())
        return cls(data["cos"], data.get("sin", [[0.0, 0.0]]))

    def to_json(self) -> dict:
        return {"cos": self.cos_coeffs.tolist(), "sin": self.sin_coeffs.tolist()}

    def derivatives(self, t: ArrayLike, order: int = 2) -> list[Array]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(len(self.cos_coeffs))
        out = []
        for m in range(order + 1):
            dc, ds = _trig_derivative(k, t, m)
            out.append(dc @ self.cos_coeffs + ds @ self.sin_coeffs)
        return out

    def __call__(self, t: ArrayLike) -> Array:
        return self.derivatives(t, 0)[0]

    def signed_area(self) -> float:
        # Green's formula, exact for trigonometric polynomials on enough nodes
        t = 2 * np.pi * np.arange(4 * len(self.cos_coeffs) + 8) / (4 * len(self.cos_coeffs) + 8)
        x, dx = self.derivatives(t, 1)
        return 0.5 * np.mean(x[:, 0] * dx[:, 1] - x[:, 1] * dx[:, 0]) * 2 * np.pi


@dataclass(frozen=True)
class PerturbationField:
    """Scalar profile ``h(t) = sum_k h_cos[k] cos(k t) + h_sin[k] sin(k t)``.

    ``h`` lives in the curve parameter ``t``; arclength derivatives carry the
    ``1/|X'|`` factor and are provided by the boundary grid.
    """

    h_cos: Array = field(default_factory=lambda: np.zeros(1))
    h_sin: Array = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.h_cos, dtype=float))
        s = np.atleast_1d(np.asarray(self.h_sin, dtype=float))
        m = max(len(c), len(s))
        object.__setattr__(self, "h_cos", np.pad(c, (0, m - len(c))))
        object.__setattr__(self, "h_sin", np.pad(s, (0, m - len(s))))

    @classmethod
    def mode(cls, k: int, amplitude: float = 1.0, kind: str = "cos") -> PerturbationField:
        coeffs = np.zeros(k + 1)
        coeffs[k] = amplitude
        return cls(h_cos=coeffs) if kind == "cos" else cls(h_sin=coeffs)

    @classmethod
    def constant(cls, value: float) -> PerturbationField:
        return cls(h_cos=[value])

    @classmethod
    def from_json(cls, data: dict | str | Path) -> PerturbationField:
        if not isinstance(data, dict):
            data = json.loads(Path(data).read_text())
        return cls(data.get("h_cos", [0.0]), data.get("h_sin", [0.0]))

    def to_json(self) -> dict:
        return {"h_cos": self.h_cos.tolist(), "h_sin": self.h_sin.tolist()}

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.h_cos) or np.any(self.h_sin))

    def derivatives(self, t: ArrayLike, order: int = 2) -> list[Array]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(len(self.h_cos))
        out = []
        for m in range(order + 1):
            dc, ds = _trig_derivative(k, t, m)
            out.append(dc @ self.h_cos + ds @ self.h_sin)
        return out

    def __call__(self, t: ArrayLike) -> Array:
        return self.derivatives(t, 0)[0]


def _unit_normal_derivatives(d1: Array, d2: Array, d3: Array) -> list[Array]:
    """n, n', n'' (in t) for n = R_{-pi/2} X'/|X'| given X', X'', X'''."""
    s = np.linalg.norm(d1, axis=-1)[:, None]
    s1 = np.sum(d1 * d2, axis=-1)[:, None] / s
    s2 = (np.sum(d2 * d2, axis=-1)[:, None] + np.sum(d1 * d3, axis=-1)[:, None] - s1**2) / s
    u = d1 / s
    u1 = d2 / s - d1 * s1 / s**2
    u2 = d3 / s - 2 * d2 * s1 / s**2 - d1 * s2 / s**2 + 2 * d1 * s1**2 / s**3
    return [rotate_cw(u), rotate_cw(u1), rotate_cw(u2)]


@dataclass(frozen=True)
class PerturbedCurve:
    """The curve ``X(t) + eps h(t) n(t)`` with exact t-derivatives up to order 2."""

    base: Parametrization
    h: PerturbationField
    eps: float

    def derivatives(self, t: ArrayLike, order: int = 2) -> list[Array]:
        if order > 2:
            raise ValueError("perturbed curves provide derivatives up to order 2")
        x = self.base.derivatives(t, 4)
        n = _unit_normal_derivatives(x[1], x[2], x[3])
        h = [v[:, None] for v in self.h.derivatives(t, 2)]
        out = [
            x[0] + self.eps * h[0] * n[0],
            x[1] + self.eps * (h[1] * n[0] + h[0] * n[1]),
            x[2] + self.eps * (h[2] * n[0] + 2 * h[1] * n[1] + h[0] * n[2]),
        ]
        return out[: order + 1]


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Uniform-in-t Nystrom nodes on a closed curve with their geometry.

    Arrays have one row per node: ``points``, ``tangent`` and ``normal`` are
    (N, 2); ``speed``, ``curvature`` and ``weights`` are (N,).
    """

    curve: Parametrization
    t: Array
    points: Array
    tangent: Array
    normal: Array
    speed: Array
    curvature: Array
    weights: Array

    @property
    def n_nodes(self) -> int:
        return len(self.t)

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def diameter(self) -> float:
        d = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))

    @cached_property
    def wavenumbers(self) -> Array:
        n = self.n_nodes
        k = np.fft.fftfreq(n, 1.0 / n)
        k[n // 2] = 0.0  # drop the unpaired Nyquist mode when differentiating
        return k

    def d_dt(self, samples: ArrayLike) -> Array:
        """Spectral t-derivative along the node axis (axis 0)."""
        f = np.asarray(samples, dtype=float)
        shape = (-1,) + (1,) * (f.ndim - 1)
        return np.real(np.fft.ifft(1j * self.wavenumbers.reshape(shape) * np.fft.fft(f, axis=0), axis=0))

    def d_ds(self, samples: ArrayLike) -> Array:
        """Arclength derivative d/dtau = (1/|X'|) d/dt along axis 0."""
        f = self.d_dt(samples)
        return f / self.speed.reshape((-1,) + (1,) * (f.ndim - 1))

    def integrate(self, samples: ArrayLike) -> Array:
        """Trapezoid rule over the curve (axis 0)."""
        f = np.asarray(samples, dtype=float)
        return np.tensordot(self.weights, f, axes=(0, 0))

    def rigid_motions(self) -> Array:
        """theta_1 = (1,0), theta_2 = (0,1), theta_3 = (x2, -x1) stacked as (3, N, 2)."""
        th = np.zeros((3, self.n_nodes, 2))
        th[0, :, 0] = 1.0
        th[1, :, 1] = 1.0
        th[2] = rotate_cw(self.points)
        return th

    def winding_number(self, points: ArrayLike) -> Array:
        """Winding number of the polygon through the nodes around each point."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        z = (self.points[:, 0] + 1j * self.points[:, 1])[None, :] - (p[:, 0] + 1j * p[:, 1])[:, None]
        dtheta = np.angle(np.roll(z, -1, axis=1) / z)
        return np.rint(dtheta.sum(axis=1) / (2 * np.pi))

    def distance_to(self, points: ArrayLike) -> Array:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d = p[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.min(np.sum(d * d, axis=-1), axis=1))


def sample_grid(curve: Parametrization, n_nodes: int) -> BoundaryGrid:
    """Place ``n_nodes`` uniform parameter nodes on ``curve``."""
    if n_nodes % 2 or n_nodes < 16:
        raise OddNodeCount(f"node count must be even and >= 16, got {n_nodes}")
    t = 2 * np.pi * np.arange(n_nodes) / n_nodes
    x, d1, d2 = curve.derivatives(t, 2)
    speed = np.linalg.norm(d1, axis=1)
    if speed.min() < 1e-10:
        raise DegenerateCurve(f"|X'| = {speed.min():.3e} at some node")
    tangent = d1 / speed[:, None]
    normal = rotate_cw(tangent)
    curvature = -np.sum(d2 * normal, axis=1) / speed**2
    weights = speed * 2 * np.pi / n_nodes
    return BoundaryGrid(curve, t, x, tangent, normal, speed, curvature, weights)


def resample(grid: BoundaryGrid, n_nodes: int) -> BoundaryGrid:
    """Same curve, different node count."""
    return sample_grid(grid.curve, n_nodes)


def perturbed_grid(grid: BoundaryGrid, h: PerturbationField, eps: float) -> BoundaryGrid:
    """Grid on ``x + eps h n`` sharing the parameter nodes of ``grid``."""
    if eps == 0.0:
        return grid
    # the length element scales by 1 + eps * curvature * h to first order;
    # a factor near zero means the offset curve is about to fold
    stretch = 1.0 + eps * grid.curvature * h(grid.t)
    if stretch.min() < STRETCH_FLOOR:
        raise SelfIntersectionRisk(f"local stretch {stretch.min():.3f} < {STRETCH_FLOOR} for eps = {eps}")
    return sample_grid(PerturbedCurve(grid.curve, h, eps), grid.n_nodes)


def h_on_grid(grid: BoundaryGrid, h: PerturbationField) -> tuple[Array, Array]:
    """Values of ``h`` and of its arclength derivative at the nodes."""
    h0, h1 = h.derivatives(grid.t, 1)
    return h0, h1 / grid.speed


@dataclass(frozen=True)
class GeometryExpansion:
    """First-order expansions ``n(x~) = n0 + eps n1`` and ``dsigma_eps = (s0 + eps s1) dsigma``."""

    n0: Array
    n1: Array
    sigma0: Array
    sigma1: Array


def geometry_expansion(grid: BoundaryGrid, h: PerturbationField) -> GeometryExpansion:
    h0, dh = h_on_grid(grid, h)
    return GeometryExpansion(
        n0=grid.normal.copy(),
        n1=-dh[:, None] * grid.tangent,
        sigma0=np.ones(grid.n_nodes),
        # outward push lengthens a convex curve: with positive curvature the
        # length element grows like 1 + eps * curvature * h
        sigma1=grid.curvature * h0,
    )


def tangential_derivative(grid: BoundaryGrid, samples: ArrayLike) -> Array:
    return grid.d_ds(samples)
