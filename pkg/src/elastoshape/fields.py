"""Displacement fields, boundary traces and residual checks for solved problems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CurveDoesNotEncloseInclusion
from .geometry import BoundaryGrid, Curve, PerturbationField, h_on_grid, sample_grid
from .kernels import LamePair
from .polynomial import PolynomialField
from .potentials import LayerPotentials, eval_off_boundary, min_safe_distance
from .solver import DensityPair, TransmissionProblem, solve_base, solve_first_order, solve_perturbed
from .tensors import build_C, build_K, build_M

Array = NDArray[np.float64]


@dataclass(frozen=True)
class FieldEvaluation:
    points: Array
    values: Array
    interior: Array
    gradient: Array | None = None


@dataclass(frozen=True)
class BoundaryTrace:
    """One-sided boundary data of a field at the grid nodes."""

    side: str
    values: Array       # (N, 2)
    gradient: Array     # (N, 2, 2), [i, k] = d_k u_i
    strain: Array       # (N, 2, 2), symmetric part of the gradient
    conormal: Array     # (N, 2), from the +-1/2 I + K* trace


def classify(grid: BoundaryGrid, points: ArrayLike) -> Array:
    """True for points enclosed by the curve."""
    return grid.winding_number(points) != 0


def _guarded_factor(grid: BoundaryGrid, points: Array) -> int:
    """Smallest power-of-two upsampling that satisfies the distance guard."""
    dist = grid.distance_to(points).min() if len(points) else np.inf
    factor = 1
    while min_safe_distance(grid) / factor > dist and factor < 64:
        factor *= 2
    return factor


def _layer(grid: BoundaryGrid, density: Array, pair: LamePair, points: Array, which: str) -> Array:
    if len(points) == 0:
        return np.zeros((0, 2) if which != "grad_single" else (0, 2, 2))
    return eval_off_boundary(grid, density, pair, points, which, _guarded_factor(grid, points))


def eval_u(problem: TransmissionProblem, densities: DensityPair, points: ArrayLike,
           gradient: bool = False) -> FieldEvaluation:
    """u = H + S[phi] outside the inclusion and S~[psi] inside."""
    z = np.atleast_2d(np.asarray(points, dtype=float))
    grid = densities.grid
    inside = classify(grid, z)
    vals = np.zeros((len(z), 2))
    if np.any(~inside):
        vals[~inside] = problem.H(z[~inside]) + _layer(grid, densities.phi, problem.background, z[~inside], "single")
    if np.any(inside):
        vals[inside] = _layer(grid, densities.psi, problem.inclusion, z[inside], "single")
    grad = None
    if gradient:
        grad = np.zeros((len(z), 2, 2))
        if np.any(~inside):
            grad[~inside] = problem.H.gradient(z[~inside]) + _layer(grid, densities.phi, problem.background,
                                                                    z[~inside], "grad_single")
        if np.any(inside):
            grad[inside] = _layer(grid, densities.psi, problem.inclusion, z[inside], "grad_single")
    return FieldEvaluation(z, vals, inside, grad)


def u1_densities(problem: TransmissionProblem, h: PerturbationField, base: DensityPair,
                 first: DensityPair) -> tuple[Array, Array, Array, Array]:
    """Single-layer and D-sharp densities of the corrector on each side."""
    g = problem.grid
    h0, _ = h_on_grid(g, h)
    kh = (-g.curvature * h0)[:, None]
    outer_single = first.phi - kh * base.phi
    inner_single = first.psi - kh * base.psi
    return outer_single, h0[:, None] * base.phi, inner_single, h0[:, None] * base.psi


def eval_u1(problem: TransmissionProblem, h: PerturbationField, base: DensityPair, first: DensityPair,
            points: ArrayLike) -> FieldEvaluation:
    """Corrector S[phi1] - S[kh phi] + D#[h phi] outside and the tilde analogue inside."""
    z = np.atleast_2d(np.asarray(points, dtype=float))
    g = problem.grid
    inside = classify(g, z)
    out_s, out_d, in_s, in_d = u1_densities(problem, h, base, first)
    vals = np.zeros((len(z), 2))
    for mask, single, dsharp, pair in ((~inside, out_s, out_d, problem.background),
                                       (inside, in_s, in_d, problem.inclusion)):
        if np.any(mask):
            vals[mask] = _layer(g, single, pair, z[mask], "single") + _layer(g, dsharp, pair, z[mask], "dsharp")
    return FieldEvaluation(z, vals, inside)


def boundary_traces(problem: TransmissionProblem, densities: DensityPair, side: str) -> BoundaryTrace:
    """Exterior ("plus") traces of H + S[phi] or interior ("minus") traces of S~[psi]."""
    g = densities.grid
    lp = problem.outer if problem.grid is g else LayerPotentials(g, problem.background)
    if side in ("plus", "+"):
        values = problem.H(g.points) + lp.single.apply(densities.phi)
        grad = problem.H.gradient(g.points) + lp.grad_single_trace(densities.phi, "plus")
        conormal = problem.H.conormal(g.points, g.normal, problem.background) + lp.conormal_single("plus").apply(densities.phi)
    else:
        ip = problem.inner if problem.grid is g else LayerPotentials(g, problem.inclusion)
        values = ip.single.apply(densities.psi)
        grad = ip.grad_single_trace(densities.psi, "minus")
        conormal = ip.conormal_single("minus").apply(densities.psi)
    strain = 0.5 * (grad + np.swapaxes(grad, 1, 2))
    return BoundaryTrace(side, values, grad, strain, conormal)


def interface_residuals(problem: TransmissionProblem, densities: DensityPair) -> dict[str, float]:
    """Sup-norm residuals of the interface identities on solved traces."""
    g = densities.grid
    ext = boundary_traces(problem, densities, "plus")
    inn = boundary_traces(problem, densities, "minus")
    p0, p1 = problem.background, problem.inclusion
    n, t = g.normal, g.tangent
    mv = lambda m, v: np.einsum("nij,nj->ni", m, v)  # noqa: E731
    c0, c1 = build_C(p0), build_C(p1)
    id1 = mv(c0.apply(ext.strain, n, t), t) - mv(build_M(p0, p1).apply(inn.strain, n, t), t)
    id2 = mv(c1.apply(inn.strain, n, t), t) - mv(build_M(p1, p0).apply(ext.strain, n, t), t)
    jump = mv(ext.gradient, n) - mv(inn.gradient, n)
    id3a = jump - mv(build_K(p0, p1).apply(inn.strain, n, t), n)
    id3b = jump + mv(build_K(p1, p0).apply(ext.strain, n, t), n)
    return {
        "identity1": float(np.abs(id1).max()),
        "identity2": float(np.abs(id2).max()),
        "identity3_interior": float(np.abs(id3a).max()),
        "identity3_exterior": float(np.abs(id3b).max()),
        "displacement": float(np.abs(ext.values - inn.values).max()),
        "traction": float(np.abs(ext.conormal - inn.conormal).max()),
    }


def interior_first_order_integrand(problem: TransmissionProblem, u_in: BoundaryTrace, v_in: BoundaryTrace) -> tuple[Array, Array]:
    """Node values of ((C1 - M01) Eu tau . Ev tau) and ((K01 Eu) n . (C1 Ev) n)."""
    g = problem.grid
    n, t = g.normal, g.tangent
    p0, p1 = problem.background, problem.inclusion
    tan = build_C(p1) - build_M(p0, p1)
    a = np.einsum("nij,nj,nik,nk->n", tan.apply(u_in.strain, n, t), t, v_in.strain, t)
    b = np.einsum("nij,nj,nik,nk->n", build_K(p0, p1).apply(u_in.strain, n, t), n,
                  build_C(p1).apply(v_in.strain, n, t), n)
    return a, b


def _polynomial_solution(problem: TransmissionProblem, field: PolynomialField) -> tuple[TransmissionProblem, DensityPair]:
    other = problem.with_field(field)
    return other, solve_base(other)


def traction_displacement_gap(problem: TransmissionProblem, h: PerturbationField, eps: float, s_curve: Curve,
                              F: PolynomialField, n_s: int = 256,
                              base: DensityPair | None = None) -> tuple[float, float]:
    """Measured reciprocity gap on ``s_curve`` and the first-order boundary integral predicting it."""
    g = problem.grid
    s_grid = sample_grid(s_curve, n_s)
    if np.any(~classify(s_grid, g.points)) or s_grid.distance_to(g.points).min() < min_safe_distance(g):
        raise CurveDoesNotEncloseInclusion("observation curve must enclose the inclusion with clearance")
    PolynomialField(F.terms, pair=problem.background)
    base = solve_base(problem) if base is None else base
    pert = solve_perturbed(problem, h, eps)
    z = s_grid.points
    du = eval_u(problem, pert, z, gradient=True)
    u0 = eval_u(problem, base, z, gradient=True)
    p0 = problem.background
    dvals = du.values - u0.values
    dtrac = p0.traction(du.gradient - u0.gradient, s_grid.normal)
    lhs = float(s_grid.integrate(np.sum(dvals * F.conormal(z, s_grid.normal, p0), axis=1)
                                 - np.sum(dtrac * F(z), axis=1)))
    other, v_dens = _polynomial_solution(problem, F)
    u_in = boundary_traces(problem, base, "minus")
    v_in = boundary_traces(other, v_dens, "minus")
    a, b = interior_first_order_integrand(problem, u_in, v_in)
    h0, _ = h_on_grid(g, h)
    rhs = float(g.integrate(h0 * (-a - b)))
    return lhs, rhs


def local_lame_residual(problem: TransmissionProblem, densities: DensityPair, side: str,
                        step: float = 0.01) -> float:
    """Sup residual of the boundary form of the Lame operator applied to a single-layer field.

    Normal derivatives of the gradient come from one-sided third-order
    differences at offsets ``step``, ``2 step`` and ``3 step``; tangential
    terms are spectral.
    """
    g = densities.grid
    exterior = side in ("plus", "+")
    s = 1.0 if exterior else -1.0
    pair = problem.background if exterior else problem.inclusion
    dens = densities.phi if exterior else densities.psi
    lp = LayerPotentials(g, pair)
    grads = [lp.grad_single_trace(dens, side)]
    for k in (1, 2, 3):
        grads.append(_layer(g, dens, pair, g.points + k * s * step * g.normal, "grad_single"))
    # derivative along the outward normal of grad W
    gn = s * (-11 * grads[0] + 18 * grads[1] - 9 * grads[2] + 2 * grads[3]) / (6 * step)
    grad0 = grads[0]
    n, t = g.normal, g.tangent
    lam, mu = pair.lam, pair.mu
    normal_part = (mu * np.einsum("nij,nj->ni", gn, n) + lam * np.einsum("nii->n", gn)[:, None] * n
                   + mu * np.einsum("nji,nj->ni", gn, n))
    kappa = -g.curvature[:, None]
    tangential = -kappa * pair.traction(grad0, n) + g.d_ds(pair.traction(grad0, t))
    return float(np.abs(normal_part + tangential).max())


def displacement_remainders(problem: TransmissionProblem, h: PerturbationField, epsilons: list[float],
                            points: ArrayLike) -> list[float]:
    """max |u_eps - u - eps u1| over ``points`` for each eps."""
    base = solve_base(problem)
    first = solve_first_order(problem, h, base)
    z = np.atleast_2d(np.asarray(points, dtype=float))
    u0 = eval_u(problem, base, z).values
    u1 = eval_u1(problem, h, base, first, z).values
    out = []
    for eps in epsilons:
        ue = eval_u(problem, solve_perturbed(problem, h, eps), z).values
        out.append(float(np.abs(ue - u0 - eps * u1).max()))
    return out


def ring(radius: float, n_points: int = 12) -> Array:
    t = 2 * np.pi * np.arange(n_points) / n_points
    return radius * np.stack([np.cos(t), np.sin(t)], axis=1)


def far_field_decay(problem: TransmissionProblem, densities: DensityPair,
                    radii: tuple[float, ...] = (10.0, 20.0, 40.0), n_points: int = 16) -> float:
    """Fitted exponent p in max |u - H| ~ r^p on concentric rings."""
    amp = []
    for r in radii:
        z = ring(r, n_points)
        amp.append(np.abs(eval_u(problem, densities, z).values - problem.H(z)).max())
    return float(np.polyfit(np.log(radii), np.log(amp), 1)[0])
