"""Frame-dependent isotropic 4-tensors acting on symmetric 2x2 strains.

A tensor is stored as an identity coefficient ``b`` (for the map E -> E) and a
list of dyadic terms ``c (L (x) R)`` with ``L, R`` in {I, tau tau, n n}; the
dyadic term maps E to ``(R : E) L``.  So ``C = lambda I(x)I + 2 mu Id`` has
``b = 2 mu`` and one term ``(lambda, I, I)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AsymmetricStrain
from .kernels import LamePair

Array = NDArray[np.float64]

DYADS = ("I", "tt", "nn")


def _dyad(name: str, normal: Array, tangent: Array) -> Array:
    if name == "I":
        return np.broadcast_to(np.eye(2), normal.shape[:-1] + (2, 2))
    v = tangent if name == "tt" else normal
    return v[..., :, None] * v[..., None, :]


@dataclass(frozen=True)
class IsoTensor4:
    identity: float = 0.0
    terms: tuple[tuple[float, str, str], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        for _, left, right in self.terms:
            if left not in DYADS or right not in DYADS:
                raise ValueError(f"unknown dyad in {(left, right)}")

    def apply(self, strain: ArrayLike, normal: ArrayLike, tangent: ArrayLike | None = None,
              check_symmetric: bool = True) -> Array:
        """Image of ``strain`` (..., 2, 2) in the local frame (n, tau); tau defaults to n rotated by +pi/2."""
        e = np.asarray(strain, dtype=float)
        n = np.asarray(normal, dtype=float)
        t = np.stack([-n[..., 1], n[..., 0]], axis=-1) if tangent is None else np.asarray(tangent, dtype=float)
        if check_symmetric and np.abs(e - np.swapaxes(e, -1, -2)).max(initial=0.0) > 1e-12 * max(1.0, np.abs(e).max(initial=0.0)):
            raise AsymmetricStrain("strain must be symmetric")
        out = self.identity * e
        for coef, left, right in self.terms:
            weight = np.einsum("...ij,...ij->...", _dyad(right, n, t), e)
            out = out + coef * weight[..., None, None] * _dyad(left, n, t)
        return out

    def bilinear(self, u: ArrayLike, v: ArrayLike, normal: ArrayLike, tangent: ArrayLike | None = None) -> Array:
        """(T u) : v."""
        return np.einsum("...ij,...ij->...", self.apply(u, normal, tangent), np.asarray(v, dtype=float))

    def __add__(self, other: IsoTensor4) -> IsoTensor4:
        return IsoTensor4(self.identity + other.identity, self.terms + other.terms)

    def __sub__(self, other: IsoTensor4) -> IsoTensor4:
        return self + (-1.0) * other

    def __rmul__(self, scale: float) -> IsoTensor4:
        return IsoTensor4(scale * self.identity, tuple((scale * c, l, r) for c, l, r in self.terms))

    def coefficients(self) -> dict[tuple[str, str], float]:
        """Coefficients with repeated dyad pairs merged."""
        out: dict[tuple[str, str], float] = {}
        for c, l, r in self.terms:
            out[(l, r)] = out.get((l, r), 0.0) + c
        return out


def build_C(pair: LamePair) -> IsoTensor4:
    return IsoTensor4(2 * pair.mu, ((pair.lam, "I", "I"),))


def build_M(l: LamePair, k: LamePair) -> IsoTensor4:
    """Tensor mapping the strain on side k to the tangential stress on side l."""
    lam_l, mu_l, lam_k, mu_k = l.lam, l.mu, k.lam, k.mu
    return IsoTensor4(2 * mu_k, (
        (lam_l * (lam_k + 2 * mu_k) / (lam_l + 2 * mu_l), "I", "I"),
        (4 * (mu_l - mu_k) * (lam_l + mu_l) / (lam_l + 2 * mu_l), "I", "tt"),
    ))


def build_K(l: LamePair, k: LamePair) -> IsoTensor4:
    """Tensor giving the jump of the normal derivative across the interface."""
    lam_l, mu_l, lam_k, mu_k = l.lam, l.mu, k.lam, k.mu
    den = mu_l * (lam_l + 2 * mu_l)
    return IsoTensor4(2 * (mu_k / mu_l - 1), (
        ((mu_l * (lam_k - lam_l) + 2 * (mu_l - mu_k) * (lam_l + mu_l)) / den, "I", "I"),
        (2 * (mu_k - mu_l) * (lam_l + mu_l) / den, "I", "tt"),
    ))


@dataclass(frozen=True)
class ExteriorCoefficients:
    """Scalar shorthands of the exterior-trace form (eta, delta, rho, tau, varrho)."""

    eta: float
    delta: float
    rho: float
    tau: float
    varrho: float

    @classmethod
    def from_pairs(cls, p0: LamePair, p1: LamePair) -> ExteriorCoefficients:
        l0, m0, l1, m1 = p0.lam, p0.mu, p1.lam, p1.mu
        return cls(
            eta=2 * (l1 * m0 - l0 * m1) / (l1 + 2 * m1),
            delta=4 * (m1 - m0) * (l1 + m1) / (l1 + 2 * m1),
            rho=((l1 - l0) * m1 - 2 * (m1 - m0) * (l1 + m1)) / (m1 * (l1 + 2 * m1)),
            tau=2 * (1 - m0 / m1),
            varrho=2 * (m1 - m0) * (l1 + m1) / (m1 * (l1 + 2 * m1)),
        )


def build_S(p0: LamePair, p1: LamePair) -> IsoTensor4:
    """Exterior-trace first-order tensor assembled from (eta, delta, rho, tau, varrho)."""
    c = ExteriorCoefficients.from_pairs(p0, p1)
    l0, m0 = p0.lam, p0.mu
    return IsoTensor4(m0 * c.tau, (
        (l0 * (c.rho + c.tau), "I", "I"),
        (l0 * c.varrho - l0 * c.tau + 2 * m0 * c.varrho - m0 * c.tau, "I", "tt"),
        (c.eta, "tt", "I"),
        (c.delta - 2 * m0 * c.varrho, "tt", "tt"),
        (2 * m0 * c.rho + m0 * c.tau, "nn", "I"),
    ))


def build_M_LY(p0: LamePair, p1: LamePair) -> IsoTensor4:
    """Variational form of the same tensor written with the (lambda, mu, p, q, eta) shorthands."""
    l0, m0, l1, m1 = p0.lam, p0.mu, p1.lam, p1.mu
    lam = (l1 - l0 + m1 - m0) / (2 * (l1 + m1)) - (m1 - m0) / (2 * m1)
    mu = (m1 - m0) / (2 * m1)
    p = l1 * (l0 + 2 * m0) / (l1 + 2 * m1)
    q = 4 * (m1 - m0) * (l1 + m1) / (l1 + 2 * m1)
    eta = 2 * (l1 * m0 - l0 * m1) / (l1 + 2 * m1)
    return IsoTensor4(4 * mu * m0, (
        (lam * (p + l0 + 2 * m0) + 2 * mu * p - eta, "I", "I"),
        (lam * q, "I", "tt"),
        (eta, "tt", "I"),
        (2 * mu * q, "tt", "tt"),
        (2 * mu * l0 + eta - 2 * mu * p, "nn", "I"),
    ))


def build_closed_form(p0: LamePair, p1: LamePair) -> IsoTensor4:
    """Fully simplified coefficients of the common tensor."""
    l0, m0, l1, m1 = p0.lam, p0.mu, p1.lam, p1.mu
    d = l1 + 2 * m1
    r = 1 - m0 / m1
    return IsoTensor4(2 * m0 * (m1 - m0) / m1, (
        ((l0 * (l1 - l0) + 2 * l0 * (m1 - m0)) / d, "I", "I"),
        (2 * r * (m0 * l1 - m1 * l0) / d, "I", "tt"),
        (2 * (l1 * m0 - l0 * m1) / d, "tt", "I"),
        (4 * r * (m1 - m0) * (l1 + m1) / d, "tt", "tt"),
        (2 * (m0 / m1) * ((l1 - l0) * m1 - (m1 - m0) * l1) / d, "nn", "I"),
    ))


def exterior_bilinear(p0: LamePair, p1: LamePair, u: Array, v: Array, normal: Array, tangent: Array) -> Array:
    """((M10 - C0) u) tau . v tau - (K10 u) n . (C0 v) n, straight from the interface tensors."""
    a = build_M(p1, p0) - build_C(p0)
    k = build_K(p1, p0)
    c0 = build_C(p0)
    at = np.einsum("...ij,...j->...i", a.apply(u, normal, tangent), tangent)
    vt = np.einsum("...ij,...j->...i", v, tangent)
    kn = np.einsum("...ij,...j->...i", k.apply(u, normal, tangent), normal)
    cn = np.einsum("...ij,...j->...i", c0.apply(v, normal, tangent), normal)
    return np.sum(at * vt, axis=-1) - np.sum(kn * cn, axis=-1)


def symmetric_basis() -> Array:
    return np.array([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]])


def check_S_equals_M(p0: LamePair, p1: LamePair, normal: ArrayLike = (1.0, 0.0)) -> float:
    """Largest bilinear-form gap between the two tensors on a symmetric basis."""
    n = np.asarray(normal, dtype=float)
    t = np.array([-n[1], n[0]])
    s, m = build_S(p0, p1), build_M_LY(p0, p1)
    gap = 0.0
    for u, v in product(symmetric_basis(), repeat=2):
        gap = max(gap, abs(float(s.bilinear(u, v, n, t) - m.bilinear(u, v, n, t))))
    return gap
