"""Nystrom discretisation of the elastic layer potentials on smooth closed curves.

Densities are arrays of shape (N, 2) or (N, 2, B) (a batch of B densities);
operators are dense (2N, 2N) matrices acting on the interleaved layout
``density.reshape(2N)``.

Quadrature
----------
* ``log|x - y|`` is integrated with the spectral product rule for
  ``log(4 sin^2((t - s)/2))`` plus a smooth remainder whose diagonal is
  ``log|X'(t)|``.
* Every Cauchy-type piece reduces to the scalar kernel ``<x - y, tau>/|x - y|^2``.
  With tau taken at the target it equals ``(1/|X'(t)|) d/dt log|X(t) - X(s)|``;
  with tau at the source it equals ``-d/ds log|X(t) - X(s)|``.  Both are applied
  exactly as compositions of the log operator with spectral differentiation,
  so no principal-value quadrature is needed.
* The remaining kernels are bounded with smooth extensions to the diagonal:
  ``<x - y, n(x)>/|x - y|^2 -> curvature/2``, ``<x - y, n(y)>/|x - y|^2 ->
  -curvature/2`` and ``(x - y)(x)(x - y)/|x - y|^2 -> tau (x) tau``.
* One-sided second derivatives of single-layer fields are rebuilt from the
  tangential derivative of the one-sided gradient trace; the missing
  normal-normal block follows from the Lame equation at the boundary.  This
  keeps hypersingular integrals out of the first-order operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import resample

from .errors import SideMismatch, TooCloseToBoundary
from .geometry import BoundaryGrid, PerturbationField, h_on_grid, perturbed_grid, sample_grid
from .kernels import EYE, LamePair, grad_gamma, kelvin_gamma, kernel_dsharp

Array = NDArray[np.float64]

# E = e1 (x) e2 - e2 (x) e1; a (x) b - b (x) a = (a x b) E
ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])

SIDES = {"plus": 1.0, "minus": -1.0, "+": 1.0, "-": -1.0}


def _sign(side: str | float) -> float:
    return float(side) if isinstance(side, (int, float)) else SIDES[side]


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    """Dense matrix acting on interleaved densities of ``source``, sampled on ``target``."""

    matrix: Array
    source: BoundaryGrid
    target: BoundaryGrid
    side: str = "pv"

    def __call__(self, density: ArrayLike) -> Array:
        return self.apply(density)

    def apply(self, density: ArrayLike) -> Array:
        f = np.asarray(density, dtype=float)
        n = self.source.n_nodes
        out = self.matrix @ f.reshape(2 * n, -1)
        return out.reshape((self.target.n_nodes, 2) + f.shape[2:])

    def __add__(self, other: BoundaryOperator) -> BoundaryOperator:
        return BoundaryOperator(self.matrix + other.matrix, self.source, self.target, self.side)

    def __sub__(self, other: BoundaryOperator) -> BoundaryOperator:
        return BoundaryOperator(self.matrix - other.matrix, self.source, self.target, self.side)

    def __mul__(self, scalar: float) -> BoundaryOperator:
        return BoundaryOperator(scalar * self.matrix, self.source, self.target, self.side)

    __rmul__ = __mul__


def kress_log_weights(n_nodes: int) -> Array:
    """R[i, j] with sum_j R[i, j] f(t_j) = int log(4 sin^2((t_i - s)/2)) f(s) ds, exact for trig interpolants."""
    half = n_nodes // 2
    t = 2 * np.pi * np.arange(n_nodes) / n_nodes
    m = np.arange(1, half)
    row = -(2 * np.pi / half) * (np.cos(np.outer(t, m)) / m).sum(axis=1) - np.pi / half**2 * np.cos(half * t)
    idx = (np.arange(n_nodes)[:, None] - np.arange(n_nodes)[None, :]) % n_nodes
    return row[idx]


def spectral_diff_matrix(n_nodes: int) -> Array:
    """Matrix of d/dt on N uniform periodic nodes (N even)."""
    t = 2 * np.pi * np.arange(n_nodes) / n_nodes
    diff = t[:, None] - t[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 0.5 * (-1.0) ** (np.arange(n_nodes)[:, None] - np.arange(n_nodes)[None, :]) / np.tan(diff / 2)
    np.fill_diagonal(d, 0.0)
    return d


class GridKernels:
    """Pair-independent kernel tables of one grid (cached per grid object)."""

    def __init__(self, grid: BoundaryGrid) -> None:
        n = grid.n_nodes
        self.grid = grid
        d = grid.points[:, None, :] - grid.points[None, :, :]
        r2 = np.sum(d * d, axis=-1)
        np.fill_diagonal(r2, 1.0)
        diag = np.arange(n)
        t_diff = grid.t[:, None] - grid.t[None, :]
        with np.errstate(divide="ignore"):
            smooth_log = 0.5 * np.log(r2) - 0.5 * np.log(4 * np.sin(t_diff / 2) ** 2)
        smooth_log[diag, diag] = np.log(grid.speed)
        # parameter-measure log operator: (L f)(t_i) ~ int log|X(t_i) - X(s)| f(s) ds
        self.log_param = 0.5 * kress_log_weights(n) + (2 * np.pi / n) * smooth_log
        self.d_dt = spectral_diff_matrix(n)

        a = np.einsum("ijk,ik->ij", d, grid.normal) / r2
        a[diag, diag] = 0.5 * grid.curvature
        b = np.einsum("ijk,jk->ij", d, grid.normal) / r2
        b[diag, diag] = -0.5 * grid.curvature
        dd = d[..., :, None] * d[..., None, :] / r2[..., None, None]
        dd[diag, diag] = grid.tangent[:, :, None] * grid.tangent[:, None, :]
        self.normal_x = a          # <x - y, n(x)> / |x - y|^2
        self.normal_y = b          # <x - y, n(y)> / |x - y|^2
        self.dyad = dd             # (x - y)(x)(x - y) / |x - y|^2
        sp = grid.speed
        # p.v. int <x - y, tau(x)>/|x - y|^2 F(y) dsigma(y)
        self.cauchy_x = (self.d_dt @ (self.log_param * sp[None, :])) / sp[:, None]
        # p.v. int <x - y, tau(y)>/|x - y|^2 F(y) dsigma(y)
        self.cauchy_y = self.log_param @ self.d_dt
        tn = grid.tangent[:, :, None] * grid.normal[:, None, :]
        self.tn_sym = tn + np.swapaxes(tn, 1, 2)
        self.nn = grid.normal[:, :, None] * grid.normal[:, None, :]


@lru_cache(maxsize=32)
def grid_kernels(grid: BoundaryGrid) -> GridKernels:
    return GridKernels(grid)


def _iso(scalar: Array) -> Array:
    """(N, N) scalar kernel -> (N, 2, N, 2) block-diagonal-in-components array."""
    return scalar[:, None, :, None] * EYE[None, :, None, :]


def _left(mats: Array, scalar: Array) -> Array:
    """out[i, a, j, b] = mats[i, a, b] scalar[i, j]."""
    return mats[:, :, None, :] * scalar[:, None, :, None]


def _right(scalar: Array, mats: Array) -> Array:
    """out[i, a, j, b] = scalar[i, j] mats[j, a, b]."""
    return scalar[:, None, :, None] * mats.transpose(1, 0, 2)[None, :, :, :]


def _full(kern: Array) -> Array:
    """(N, N, 2, 2) kernel -> (N, 2, N, 2)."""
    return kern.transpose(0, 2, 1, 3)


def _as_operator(arr: Array, grid: BoundaryGrid, side: str = "pv") -> BoundaryOperator:
    n = grid.n_nodes
    return BoundaryOperator(np.ascontiguousarray(arr.reshape(2 * n, 2 * n)), grid, grid, side)


def _batch(f: ArrayLike) -> tuple[Array, bool]:
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        return f[:, :, None], True
    return f, False


def _unbatch(f: Array, squeeze: bool) -> Array:
    return f[..., 0] if squeeze else f


class LayerPotentials:
    """Boundary operators of one Lame pair on one grid."""

    def __init__(self, grid: BoundaryGrid, pair: LamePair) -> None:
        self.grid = grid
        self.pair = pair
        self.tables = grid_kernels(grid)
        self._single: BoundaryOperator | None = None
        self._kstar: BoundaryOperator | None = None
        self._ksharp: BoundaryOperator | None = None
        self._ksharp_adj: BoundaryOperator | None = None

    # -- principal-value operators ------------------------------------------------
    @property
    def single(self) -> BoundaryOperator:
        if self._single is None:
            g, k, p = self.grid, self.tables, self.pair
            w = g.weights[None, :]
            arr = (p.A / (2 * np.pi) * _iso(k.log_param * g.speed[None, :])
                   - p.B / (2 * np.pi) * _full(k.dyad * w[..., None, None]))
            self._single = _as_operator(arr, g)
        return self._single

    @property
    def kstar(self) -> BoundaryOperator:
        """Adjoint double layer from the closed-form kernel K^T."""
        if self._kstar is None:
            g, k, p = self.grid, self.tables, self.pair
            w = g.weights[None, :]
            c1 = (p.A - p.B) / (p.A + p.B) / (2 * np.pi)
            c2 = 2 * p.B / (p.A + p.B) / np.pi
            # antisymmetric part: (x (x) n - n (x) x)/|x|^2 = -<x, tau(x)>/|x|^2 E
            arr = (c1 * _iso(k.normal_x * w) + c2 * _full((k.normal_x * w)[..., None, None] * k.dyad)
                   - c1 * _left(np.broadcast_to(ROT, (g.n_nodes, 2, 2)), k.cauchy_x))
            self._kstar = _as_operator(arr, g)
        return self._kstar

    @property
    def ksharp(self) -> BoundaryOperator:
        """p.v. int dGamma(x - y)/dn(y) phi(y) dsigma(y)."""
        if self._ksharp is None:
            g, k, p = self.grid, self.tables, self.pair
            w = g.weights[None, :]
            bw = k.normal_y * w
            # x (x) n(y) + n(y) (x) x = <x, tau(y)>(tau n + n tau)(y) + 2 <x, n(y)> (n n)(y)
            arr = (-p.A / (2 * np.pi) * _iso(bw) - p.B / np.pi * _full(bw[..., None, None] * k.dyad)
                   + p.B / np.pi * _right(bw, k.nn) + p.B / (2 * np.pi) * _right(k.cauchy_y, k.tn_sym))
            self._ksharp = _as_operator(arr, g)
        return self._ksharp

    @property
    def ksharp_adjoint(self) -> BoundaryOperator:
        """p.v. int dGamma(x - y)/dn(x) phi(y) dsigma(y), the p.v. normal derivative of S."""
        if self._ksharp_adj is None:
            g, k, p = self.grid, self.tables, self.pair
            w = g.weights[None, :]
            aw = k.normal_x * w
            arr = (p.A / (2 * np.pi) * _iso(aw) + p.B / np.pi * _full(aw[..., None, None] * k.dyad)
                   - p.B / np.pi * _left(k.nn, aw) - p.B / (2 * np.pi) * _left(k.tn_sym, k.cauchy_x))
            self._ksharp_adj = _as_operator(arr, g)
        return self._ksharp_adj

    # -- one-sided traces ----------------------------------------------------------
    def _jump_dsharp(self) -> Array:
        """Per-node matrix J with D-sharp|+ - K-sharp = J (and -J on the minus side)."""
        return -0.5 / self.pair.mu * EYE + self.pair.B * self.tables.nn

    def conormal_single(self, side: str) -> BoundaryOperator:
        """dS/dnu on one side: +-1/2 I + K*."""
        s = _sign(side)
        return BoundaryOperator(self.kstar.matrix + 0.5 * s * np.eye(2 * self.grid.n_nodes),
                                self.grid, self.grid, str(side))

    def dsharp_trace(self, side: str) -> BoundaryOperator:
        s = _sign(side)
        jump = np.zeros((self.grid.n_nodes, 2, self.grid.n_nodes, 2))
        idx = np.arange(self.grid.n_nodes)
        jump[idx, :, idx, :] = s * self._jump_dsharp()
        return BoundaryOperator(self.ksharp.matrix + jump.reshape(self.ksharp.matrix.shape),
                                self.grid, self.grid, str(side))

    def normal_derivative_single(self, side: str) -> BoundaryOperator:
        """dS/dn (plain normal derivative) on one side: -jump + (K-sharp)*."""
        s = _sign(side)
        jump = np.zeros((self.grid.n_nodes, 2, self.grid.n_nodes, 2))
        idx = np.arange(self.grid.n_nodes)
        jump[idx, :, idx, :] = -s * self._jump_dsharp()
        return BoundaryOperator(self.ksharp_adjoint.matrix + jump.reshape(self.ksharp.matrix.shape),
                                self.grid, self.grid, str(side))

    def gradient_jump(self, f: Array) -> Array:
        """(1/2mu) f (x) n - B <n, f> n (x) n for f of shape (N, 2, B)."""
        n = self.grid.normal
        fn = np.einsum("iab,ia->ib", f, n)
        return (0.5 / self.pair.mu * f[:, :, None, :] * n[:, None, :, None]
                - self.pair.B * self.tables.nn[:, :, :, None] * fn[:, None, None, :])

    def grad_single_trace(self, density: ArrayLike, side: str) -> Array:
        """One-sided gradient of S[f] at the nodes, ``[node, i, k, batch] = d_k S_i``."""
        f, squeeze = _batch(density)
        s = _sign(side)
        tang = self.grid.d_ds(self.single.apply(f))
        norm = self.ksharp_adjoint.apply(f)
        g = self.grid
        grad = (tang[:, :, None, :] * g.tangent[:, None, :, None]
                + norm[:, :, None, :] * g.normal[:, None, :, None] + s * self.gradient_jump(f))
        return _unbatch(grad, squeeze)

    def hessian_from_gradient(self, grad: Array) -> Array:
        """Second derivatives ``[node, i, j, l, batch] = d_j d_l W_i`` of a Lame field W.

        ``grad`` is the one-sided boundary trace of grad W, shape (N, 2, 2, B).
        """
        g, p = self.grid, self.pair
        a, b = g.normal, g.tangent
        q = g.d_ds(grad)                                   # sum_l T_ijl tau_l
        t_ab = np.einsum("nijb,nj->nib", q, a)
        t_bb = np.einsum("nijb,nj->nib", q, b)
        dot = lambda v, e: np.einsum("nib,ni->nb", v, e)  # noqa: E731
        ca = -(p.mu * dot(t_bb, a) + (p.lam + p.mu) * dot(t_ab, b)) / (p.lam + 2 * p.mu)
        cb = -dot(t_bb, b) - (p.lam + p.mu) / p.mu * (dot(t_ab, a) + dot(t_bb, b))
        c = ca[:, None, :] * a[:, :, None] + cb[:, None, :] * b[:, :, None]
        aa = a[:, :, None] * a[:, None, :]
        ab = a[:, :, None] * b[:, None, :]
        bb = b[:, :, None] * b[:, None, :]
        return (np.einsum("nib,njl->nijlb", c, aa) + np.einsum("nib,njl->nijlb", t_ab, ab + ab.transpose(0, 2, 1))
                + np.einsum("nib,njl->nijlb", t_bb, bb))

    def grad_dsharp_trace(self, density: ArrayLike, side: str) -> Array:
        """One-sided gradient of D-sharp[g], using D-sharp[g] = -sum_k d_k S[n_k g]."""
        f, squeeze = _batch(density)
        out = 0.0
        for k in range(2):
            grad = self.grad_single_trace(self.grid.normal[:, k, None, None] * f, side)
            hess = self.hessian_from_gradient(grad)
            out = out - hess[:, :, k, :, :]
        return _unbatch(out, squeeze)

    def conormal_dsharp_trace(self, density: ArrayLike, side: str) -> Array:
        """One-sided traction of D-sharp[g]."""
        f, squeeze = _batch(density)
        grad = self.grad_dsharp_trace(f, side)
        return _unbatch(self.traction(grad, self.grid.normal), squeeze)

    def traction(self, grad: Array, direction: Array) -> Array:
        """lambda tr(G) d + mu (G + G^T) d for G of shape (N, 2, 2, B)."""
        tr = np.einsum("niib->nb", grad)
        sym = grad + grad.transpose(0, 2, 1, 3)
        return (self.pair.lam * tr[:, None, :] * direction[:, :, None]
                + self.pair.mu * np.einsum("nijb,nj->nib", sym, direction))

    # -- first-order shape operators ------------------------------------------------
    def s1_apply(self, density: ArrayLike, h: PerturbationField, side: str = "plus") -> Array:
        """-S[kh phi] + (h dS[phi]/dn + D-sharp[h phi]) on one side, k = -curvature."""
        f, squeeze = _batch(density)
        h0, _ = h_on_grid(self.grid, h)
        kp = -self.grid.curvature
        hf = h0[:, None, None] * f
        out = (-self.single.apply((kp * h0)[:, None, None] * f)
               + h0[:, None, None] * self.normal_derivative_single(side).apply(f)
               + self.dsharp_trace(side).apply(hf))
        return _unbatch(out, squeeze)

    def k1_apply(self, density: ArrayLike, h: PerturbationField, side: str = "plus") -> Array:
        """First-order operator of the adjoint double layer under x -> x + eps h n."""
        f, squeeze = _batch(density)
        g = self.grid
        h0, _ = h_on_grid(g, h)
        kp = (-g.curvature * h0)[:, None, None]
        cs = self.conormal_single(side)
        term1 = kp * cs.apply(f) - cs.apply(kp * f)
        grad = self.grad_single_trace(f, side)
        stress_tau = self.traction(grad, g.tangent)
        term2 = (self.conormal_dsharp_trace(h0[:, None, None] * f, side)
                 - g.d_ds(h0[:, None, None] * stress_tau))
        return _unbatch(term1 + term2, squeeze)

    def _assemble(self, fn, h: PerturbationField, side: str) -> BoundaryOperator:
        n = self.grid.n_nodes
        basis = np.eye(2 * n).reshape(n, 2, 2 * n)
        cols = fn(basis, h, side)
        return BoundaryOperator(cols.reshape(2 * n, 2 * n), self.grid, self.grid, side)

    def assemble_s1(self, h: PerturbationField, side: str = "plus") -> BoundaryOperator:
        return self._assemble(self.s1_apply, h, side)

    def assemble_k1(self, h: PerturbationField, side: str = "plus", check_sides: bool = False,
                    tol: float = 1e-6) -> BoundaryOperator:
        op = self._assemble(self.k1_apply, h, side)
        if check_sides:
            other = self._assemble(self.k1_apply, h, "minus" if _sign(side) > 0 else "plus")
            scale = max(1.0, np.abs(op.matrix).max())
            gap = np.abs(op.matrix - other.matrix).max() / scale
            if gap > tol:
                raise SideMismatch(f"plus/minus first-order operators differ by {gap:.3e}")
        return op


# -- module-level API -------------------------------------------------------------

def assemble_single(grid: BoundaryGrid, pair: LamePair) -> BoundaryOperator:
    return LayerPotentials(grid, pair).single


def assemble_kstar(grid: BoundaryGrid, pair: LamePair) -> BoundaryOperator:
    return LayerPotentials(grid, pair).kstar


def assemble_dsharp_trace(grid: BoundaryGrid, pair: LamePair, side: str) -> BoundaryOperator:
    return LayerPotentials(grid, pair).dsharp_trace(side)


def assemble_s1(grid: BoundaryGrid, h: PerturbationField, pair: LamePair, side: str = "plus") -> BoundaryOperator:
    return LayerPotentials(grid, pair).assemble_s1(h, side)


def assemble_k1(grid: BoundaryGrid, h: PerturbationField, pair: LamePair, side: str = "plus",
                check_sides: bool = False) -> BoundaryOperator:
    return LayerPotentials(grid, pair).assemble_k1(h, side, check_sides=check_sides)


def dsharp_conormal_jump_check(grid: BoundaryGrid, pair: LamePair, density: ArrayLike) -> float:
    """Sup-norm gap between the traction jump of D-sharp[phi] and its closed form."""
    lp = LayerPotentials(grid, pair)
    phi = np.asarray(density, dtype=float)
    jump = lp.conormal_dsharp_trace(phi, "plus") - lp.conormal_dsharp_trace(phi, "minus")
    n, t = grid.normal, grid.tangent
    pt = np.sum(phi * t, axis=1)[:, None]
    pn = np.sum(phi * n, axis=1)[:, None]
    rhs = grid.d_ds(pt * n + pair.lam / (2 * pair.mu + pair.lam) * pn * t)
    return float(np.abs(jump - rhs).max())


def upsample(grid: BoundaryGrid, density: ArrayLike, factor: int) -> tuple[BoundaryGrid, Array]:
    """Trigonometric interpolation of a density onto ``factor`` times as many nodes."""
    if factor == 1:
        return grid, np.asarray(density, dtype=float)
    fine = sample_grid(grid.curve, factor * grid.n_nodes)
    return fine, resample(np.asarray(density, dtype=float), fine.n_nodes, axis=0)


def min_safe_distance(grid: BoundaryGrid) -> float:
    return 5 * (2 * np.pi / grid.n_nodes) * float(grid.speed.max())


def eval_off_boundary(grid: BoundaryGrid, density: ArrayLike, pair: LamePair, points: ArrayLike,
                      which: str = "single", upsample_factor: int = 1, check: bool = True) -> Array:
    """Plain-quadrature evaluation of a layer potential away from the curve.

    ``which`` is ``single`` (values, (P, 2)), ``grad_single`` ((P, 2, 2) with
    ``[i, k] = d_k S_i``) or ``dsharp`` ((P, 2)).
    """
    grid, f = upsample(grid, density, upsample_factor)
    z = np.atleast_2d(np.asarray(points, dtype=float))
    if check:
        dist = grid.distance_to(z)
        if np.any(dist < min_safe_distance(grid)):
            raise TooCloseToBoundary(f"closest point at {dist.min():.3e} < {min_safe_distance(grid):.3e}")
    d = z[:, None, :] - grid.points[None, :, :]
    wf = grid.weights[:, None] * f
    if which == "single":
        return np.einsum("pjab,jb->pa", kelvin_gamma(d, pair), wf)
    if which == "grad_single":
        return np.einsum("pjabk,jb->pak", grad_gamma(d, pair), wf)
    if which == "dsharp":
        return np.einsum("pjab,jb->pa", kernel_dsharp(d, grid.normal[None, :, :], pair), wf)
    raise ValueError(f"unknown potential {which!r}")


def l2_norm(grid: BoundaryGrid, values: ArrayLike) -> float:
    """Quadrature L2 norm of node values (N, ...)."""
    v = np.asarray(values, dtype=float).reshape(grid.n_nodes, -1)
    return float(np.sqrt(grid.integrate(np.sum(v * v, axis=1))))


def w21_norm(grid: BoundaryGrid, values: ArrayLike) -> float:
    """L2 norm of the values plus L2 norm of their arclength derivative."""
    v = np.asarray(values, dtype=float)
    return l2_norm(grid, v) + l2_norm(grid, grid.d_ds(v))


def expansion_remainders(grid: BoundaryGrid, pair: LamePair, h: PerturbationField, density: ArrayLike,
                         eps: float) -> dict[str, float]:
    """Pulled-back K* and S on the perturbed curve minus their first-order expansions.

    The same node values serve as the density on both curves.  K* is measured
    in the discrete L2 norm, S in the discrete W^{2}_{1} norm.
    """
    f = np.asarray(density, dtype=float)
    lp = LayerPotentials(grid, pair)
    moved = LayerPotentials(perturbed_grid(grid, h, eps), pair)
    rk = moved.kstar.apply(f) - lp.kstar.apply(f) - eps * lp.k1_apply(f, h, "plus")
    rs = moved.single.apply(f) - lp.single.apply(f) - eps * lp.s1_apply(f, h, "plus")
    return {"kstar": l2_norm(grid, rk), "single": w21_norm(grid, rs)}
