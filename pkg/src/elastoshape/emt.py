"""Elastic moment tensors of an inclusion and their first-order shape sensitivity."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .geometry import PerturbationField, h_on_grid
from .fields import boundary_traces, interior_first_order_integrand
from .polynomial import PolynomialField
from .solver import DensityPair, TransmissionProblem, solve_base, solve_perturbed
from .tensors import build_S

Index = tuple[tuple[int, int], tuple[int, int], int, int]


def multi_indices(max_order: int, min_order: int = 1) -> list[tuple[int, int]]:
    return [(a, n - a) for n in range(min_order, max_order + 1) for a in range(n, -1, -1)]


def emt_densities(problem: TransmissionProblem, alpha: tuple[int, int], j: int) -> DensityPair:
    """Densities (f, g) for the data x^alpha e_j (which need not solve the Lame system)."""
    data = PolynomialField.monomial(alpha, j)
    return solve_base(problem.with_field(data, check_lame=False))


def emt_entry(problem: TransmissionProblem, densities: DensityPair, beta: tuple[int, int], k: int) -> float:
    """m^j_{alpha beta k} = int y^beta (g_alpha^j)_k dsigma."""
    g = problem.grid
    weight = g.points[:, 0] ** beta[0] * g.points[:, 1] ** beta[1]
    return float(g.integrate(weight * densities.phi[:, k - 1]))


@dataclass
class EmtTable:
    max_order: int
    entries: dict[Index, float] = field(default_factory=dict)

    @classmethod
    def build(cls, problem: TransmissionProblem, max_order: int = 2) -> EmtTable:
        table = cls(max_order)
        idx = multi_indices(max_order)
        for alpha, j in product(idx, (1, 2)):
            dens = emt_densities(problem, alpha, j)
            for beta, k in product(idx, (1, 2)):
                table.entries[(alpha, beta, j, k)] = emt_entry(problem, dens, beta, k)
        return table

    def contract(self, H: PolynomialField, F: PolynomialField) -> float:
        """sum a_j^alpha b_k^beta m^j_{alpha beta k} over the polynomial coefficients."""
        total = 0.0
        for a, alpha, j in H.terms:
            for b, beta, k in F.terms:
                if sum(alpha) == 0 or sum(beta) == 0:
                    continue  # constants carry no moment
                total += a * b * self.entries[(alpha, beta, j, k)]
        return total

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["alpha1", "alpha2", "beta1", "beta2", "j", "k", "value"])
        for (alpha, beta, j, k), v in sorted(self.entries.items()):
            writer.writerow([*alpha, *beta, j, k, repr(v)])
        return buf.getvalue()


def emt_sum(problem: TransmissionProblem, F: PolynomialField, base: DensityPair | None = None) -> float:
    """int F . phi dsigma with phi solved for the data H of ``problem``."""
    base = solve_base(problem) if base is None else base
    g = base.grid
    return float(g.integrate(np.sum(F(g.points) * base.phi, axis=1)))


def emt_sum_perturbed(problem: TransmissionProblem, F: PolynomialField, h: PerturbationField, eps: float) -> float:
    return emt_sum(problem, F, solve_perturbed(problem, h, eps))


def _traces(problem: TransmissionProblem, F: PolynomialField, base: DensityPair | None, side: str):
    base = solve_base(problem) if base is None else base
    other = problem.with_field(F)
    return boundary_traces(problem, base, side), boundary_traces(other, solve_base(other), side)


def emt_first_order(problem: TransmissionProblem, F: PolynomialField, h: PerturbationField,
                    base: DensityPair | None = None) -> float:
    """int h (((C1 - M01) Eu tau . Ev tau) + (K01 Eu) n . (C1 Ev) n) from interior traces."""
    u_in, v_in = _traces(problem, F, base, "minus")
    a, b = interior_first_order_integrand(problem, u_in, v_in)
    h0, _ = h_on_grid(problem.grid, h)
    return float(problem.grid.integrate(h0 * (a + b)))


def emt_first_order_exterior_form(problem: TransmissionProblem, F: PolynomialField, h: PerturbationField,
                                  base: DensityPair | None = None) -> float:
    """The same quantity from exterior traces through the exterior-form tensor."""
    u_ex, v_ex = _traces(problem, F, base, "plus")
    g = problem.grid
    tensor = build_S(problem.background, problem.inclusion)
    h0, _ = h_on_grid(g, h)
    return float(g.integrate(h0 * tensor.bilinear(u_ex.strain, v_ex.strain, g.normal, g.tangent)))
