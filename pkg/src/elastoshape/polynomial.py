"""Vector polynomials H(x) = sum a x^alpha e_j with exact derivatives."""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidParameters, NotLameSolution
from .kernels import LamePair

Array = NDArray[np.float64]
Monomials = dict[tuple[int, int], float]


def _shift(poly: Monomials, axis: int) -> Monomials:
    """Exact partial derivative of a scalar polynomial along ``axis``."""
    out: Monomials = defaultdict(float)
    for (a1, a2), c in poly.items():
        power = (a1, a2)[axis]
        if power == 0:
            continue
        key = (a1 - 1, a2) if axis == 0 else (a1, a2 - 1)
        out[key] += c * power
    return dict(out)


def _add(*polys: tuple[float, Monomials]) -> Monomials:
    out: Monomials = defaultdict(float)
    for scale, poly in polys:
        for key, c in poly.items():
            out[key] += scale * c
    return dict(out)


def _evaluate(poly: Monomials, x: Array) -> Array:
    val = np.zeros(len(x))
    for (a1, a2), c in poly.items():
        val += c * x[:, 0] ** a1 * x[:, 1] ** a2
    return val


class PolynomialField:
    """H(x) = sum of ``a * x1^alpha1 * x2^alpha2 * e_j`` over the stored terms.

    ``terms`` holds triples ``(a, (alpha1, alpha2), j)`` with ``j`` in {1, 2}.
    Pass ``pair`` to insist that H solves the homogeneous Lame system of that
    pair; the check is done on the exact coefficients.
    """

    def __init__(self, terms: Iterable[tuple[float, tuple[int, int], int]],
                 pair: LamePair | None = None, tol: float = 1e-12) -> None:
        self.terms = tuple((float(a), (int(al[0]), int(al[1])), int(j)) for a, al, j in terms)
        comps: list[Monomials] = [defaultdict(float), defaultdict(float)]
        for a, alpha, j in self.terms:
            if j not in (1, 2) or min(alpha) < 0:
                raise InvalidParameters(f"bad polynomial term {(a, alpha, j)}")
            comps[j - 1][alpha] += a
        self.components = [dict(c) for c in comps]
        self._grad = [[_shift(c, k) for k in range(2)] for c in self.components]
        self._hess = [[[_shift(d, l) for l in range(2)] for d in row] for row in self._grad]
        if pair is not None:
            res = self.lame_residual(pair)
            scale = max([1.0] + [abs(a) for a, _, _ in self.terms])
            worst = max([0.0] + [abs(c) for comp in res for c in comp.values()])
            if worst > tol * scale:
                raise NotLameSolution(f"Lame operator leaves coefficient {worst:.3e}")

    # -- constructors ----------------------------------------------------------------
    @classmethod
    def linear_shear(cls) -> PolynomialField:
        """H(x) = (x1, -x2)."""
        return cls([(1.0, (1, 0), 1), (-1.0, (0, 1), 2)])

    @classmethod
    def monomial(cls, alpha: tuple[int, int], j: int, coeff: float = 1.0) -> PolynomialField:
        return cls([(coeff, alpha, j)])

    @classmethod
    def rigid_motion(cls, m: int) -> PolynomialField:
        """theta_1 = e1, theta_2 = e2, theta_3 = (x2, -x1)."""
        if m == 1:
            return cls([(1.0, (0, 0), 1)])
        if m == 2:
            return cls([(1.0, (0, 0), 2)])
        return cls([(1.0, (0, 1), 1), (-1.0, (1, 0), 2)])

    @classmethod
    def from_json(cls, data: list | str | Path, pair: LamePair | None = None) -> PolynomialField:
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        return cls([(t["a"], tuple(t["alpha"]), t["j"]) for t in data], pair=pair)

    def to_json(self) -> list[dict]:
        return [{"a": a, "alpha": list(al), "j": j} for a, al, j in self.terms]

    # -- algebra ---------------------------------------------------------------------
    def __add__(self, other: PolynomialField) -> PolynomialField:
        return PolynomialField(self.terms + other.terms)

    def __rmul__(self, scale: float) -> PolynomialField:
        return PolynomialField([(scale * a, al, j) for a, al, j in self.terms])

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for comp in self.components for c in comp.values())

    def lame_residual(self, pair: LamePair) -> list[Monomials]:
        """Coefficients of mu Laplace(H) + (lambda + mu) grad div H."""
        div_grad = [_add((1.0, self._hess[0][0][k]), (1.0, self._hess[1][1][k])) for k in range(2)]
        return [_add((pair.mu, self._hess[i][0][0]), (pair.mu, self._hess[i][1][1]),
                     (pair.lam + pair.mu, div_grad[i])) for i in range(2)]

    # -- evaluation ------------------------------------------------------------------
    def __call__(self, x: ArrayLike) -> Array:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([_evaluate(c, x) for c in self.components], axis=-1)

    def gradient(self, x: ArrayLike) -> Array:
        """``[p, i, k] = d_k H_i``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([np.stack([_evaluate(self._grad[i][k], x) for k in range(2)], -1)
                         for i in range(2)], axis=-2)

    def hessian(self, x: ArrayLike) -> Array:
        """``[p, i, k, l] = d_k d_l H_i``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([np.stack([np.stack([_evaluate(self._hess[i][k][l], x) for l in range(2)], -1)
                                   for k in range(2)], -2) for i in range(2)], axis=-3)

    def normal_derivative(self, x: ArrayLike, normal: ArrayLike) -> Array:
        return np.einsum("pik,pk->pi", self.gradient(x), np.asarray(normal, dtype=float))

    def conormal(self, x: ArrayLike, normal: ArrayLike, pair: LamePair) -> Array:
        return pair.traction(self.gradient(x), normal)
