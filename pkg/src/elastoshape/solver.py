"""Transmission problem: base, perturbed-interface and first-order density systems.

Unknowns are (psi, phi): psi generates the interior field through the
inclusion single layer, phi the exterior perturbation through the background
single layer.  The block operator

    [ S~            -S        ] [psi]   [ data          ]
    [ -1/2 I + K~*  -(1/2 I + K*) ] [phi] = [ conormal data ]

is assembled densely and factorised once per grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .errors import InvalidParameters, SingularSystem
from .geometry import BoundaryGrid, PerturbationField, h_on_grid, perturbed_grid
from .kernels import LamePair
from .polynomial import PolynomialField
from .potentials import LayerPotentials

Array = NDArray[np.float64]

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class DensityPair:
    """Interior density ``psi`` and exterior density ``phi``, both (N, 2)."""

    psi: Array
    phi: Array
    grid: BoundaryGrid
    residual: float = 0.0


def rigid_moments(grid: BoundaryGrid, density: Array) -> Array:
    """Integrals of ``density . theta_m`` over the curve, m = 1, 2, 3."""
    return np.einsum("mnk,nk,n->m", grid.rigid_motions(), density, grid.weights)


class TransmissionProblem:
    """Inclusion with Lame pair ``inclusion`` inside a ``background`` medium, driven by ``H``."""

    def __init__(self, grid: BoundaryGrid, background: LamePair, inclusion: LamePair,
                 H: PolynomialField, check_lame: bool = True) -> None:
        if (background.lam - inclusion.lam) * (background.mu - inclusion.mu) < 0:
            raise InvalidParameters("need (lambda0 - lambda1)(mu0 - mu1) >= 0")
        if check_lame:
            PolynomialField(H.terms, pair=background)
        self.grid = grid
        self.background = background
        self.inclusion = inclusion
        self.H = H

    @property
    def matched(self) -> bool:
        return self.background == self.inclusion

    @cached_property
    def outer(self) -> LayerPotentials:
        return LayerPotentials(self.grid, self.background)

    @cached_property
    def inner(self) -> LayerPotentials:
        return LayerPotentials(self.grid, self.inclusion)

    def on_grid(self, grid: BoundaryGrid) -> TransmissionProblem:
        return TransmissionProblem(grid, self.background, self.inclusion, self.H, check_lame=False)

    def with_field(self, field: PolynomialField, check_lame: bool = True) -> TransmissionProblem:
        """Same inclusion and grid driven by another field; shares the factorised operator."""
        other = TransmissionProblem(self.grid, self.background, self.inclusion, field, check_lame=check_lame)
        for key in ("outer", "inner", "block_matrix", "factorization"):
            if key in self.__dict__:
                other.__dict__[key] = self.__dict__[key]
        return other

    @cached_property
    def block_matrix(self) -> Array:
        eye = np.eye(2 * self.grid.n_nodes)
        return np.block([
            [self.inner.single.matrix, -self.outer.single.matrix],
            [self.inner.kstar.matrix - 0.5 * eye, -(self.outer.kstar.matrix + 0.5 * eye)],
        ])

    @cached_property
    def factorization(self) -> tuple[Array, Array]:
        mat = self.block_matrix
        lu, piv = lu_factor(mat)
        rcond, info = dgecon(lu, np.abs(mat).sum(axis=0).max(), norm="1")
        if info != 0 or rcond * COND_LIMIT < 1.0:
            raise SingularSystem(f"condition estimate {1 / max(rcond, 1e-300):.3e} exceeds {COND_LIMIT:.0e}")
        return lu, piv

    def solve_data(self, dirichlet: Array, neumann: Array) -> DensityPair:
        """Solve the block system for right-hand sides given as (N, 2) arrays."""
        n = self.grid.n_nodes
        rhs = np.concatenate([np.reshape(dirichlet, 2 * n), np.reshape(neumann, 2 * n)])
        sol = lu_solve(self.factorization, rhs)
        res = np.linalg.norm(self.block_matrix @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
        return DensityPair(sol[: 2 * n].reshape(n, 2), sol[2 * n:].reshape(n, 2), self.grid, float(res))

    def data(self, field: PolynomialField | None = None) -> tuple[Array, Array]:
        """Boundary values and background conormal derivative of a polynomial field."""
        field = self.H if field is None else field
        g = self.grid
        return field(g.points), field.conormal(g.points, g.normal, self.background)


def solve_base(problem: TransmissionProblem) -> DensityPair:
    return problem.solve_data(*problem.data())


def solve_perturbed(problem: TransmissionProblem, h: PerturbationField, eps: float) -> DensityPair:
    """Densities on the interface x + eps h n (returned on the perturbed grid)."""
    return solve_base(problem.on_grid(perturbed_grid(problem.grid, h, eps)))


def first_order_rhs(problem: TransmissionProblem, h: PerturbationField, base: DensityPair) -> tuple[Array, Array]:
    g, H = problem.grid, problem.H
    h0, _ = h_on_grid(g, h)
    kh = -g.curvature * h0
    grad_h = H.gradient(g.points)
    top = (h0[:, None] * H.normal_derivative(g.points, g.normal)
           - problem.inner.s1_apply(base.psi, h, "minus") + problem.outer.s1_apply(base.phi, h, "plus"))
    stress_tau = problem.background.traction(grad_h, g.tangent)
    bottom = (kh[:, None] * problem.background.traction(grad_h, g.normal)
              - g.d_ds(h0[:, None] * stress_tau)
              - problem.inner.k1_apply(base.psi, h, "minus") + problem.outer.k1_apply(base.phi, h, "plus"))
    return top, bottom


def solve_first_order(problem: TransmissionProblem, h: PerturbationField, base: DensityPair) -> DensityPair:
    """Densities (psi1, phi1) of the first-order system on the unperturbed grid."""
    return problem.solve_data(*first_order_rhs(problem, h, base))


def first_order_compatibility(problem: TransmissionProblem, h: PerturbationField, base: DensityPair,
                              first: DensityPair) -> Array:
    """Rigid-motion moments of phi1 - kh phi + d/dtau(h<phi,tau>n + c h<phi,n>tau), c = lambda0/(2mu0 + lambda0)."""
    g, p = problem.grid, problem.background
    h0, _ = h_on_grid(g, h)
    phi = base.phi
    pt = np.sum(phi * g.tangent, axis=1)
    pn = np.sum(phi * g.normal, axis=1)
    c = p.lam / (2 * p.mu + p.lam)
    inner = h0[:, None] * (pt[:, None] * g.normal + c * pn[:, None] * g.tangent)
    combo = first.phi + (g.curvature * h0)[:, None] * phi + g.d_ds(inner)
    return rigid_moments(g, combo)
