"""Scalar fields on grids and their discrete calculus.

Cartesian gradients and Hessians on the annulus grid are obtained by the
chain rule through the logical map (s, theta) -> (x, y): the same second-order
stencils differentiate both the field and the map, so affine fields have
exactly zero second derivatives and the overall scheme is second order on
smooth fields.  On top of that sit the Gauss curvature operator of a graph,

    K[u] = det D2u / (1 + |Du|^2)^((n+2)/2),

the linearization L of its logarithm,

    L w = u^{ij} w_ij - (n+2)/(1+|Du|^2) u^i w_i,   (u^{ij}) = (u_ij)^{-1},

and a per-node convexity measurement (smallest Hessian eigenvalue).
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp

from .errors import ConvexityError, FieldError, GridError
from .grid import AnnulusGrid, RadialGrid, trig_interp


@dataclass
class ScalarField:
    """Nodal values of a function, tied to the grid they live on."""

    grid: AnnulusGrid | RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = self.grid.shape if isinstance(self.grid, AnnulusGrid) \
            else self.grid.nodes.shape
        if self.values.shape != shape:
            raise FieldError(
                f"value array shape {self.values.shape} does not match grid {shape}")
        if not np.all(np.isfinite(self.values)):
            raise FieldError("field contains non-finite values")
        self.values.setflags(write=False)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)


@dataclass
class GradHess:
    """Per-node Cartesian gradient and symmetric Hessian of a field."""

    grid: AnnulusGrid
    grad: np.ndarray   # (N_r+1, N_theta, 2)
    hess: np.ndarray   # (N_r+1, N_theta, 2, 2)

    def __post_init__(self):
        for arr in (self.grad, self.hess):
            arr.setflags(write=False)


# --------------------------------------------------------------------------
# logical finite-difference operators and map geometry (cached per grid)
# --------------------------------------------------------------------------

def _d1_1d(N: int, h: float) -> sp.csr_matrix:
    """Second-order first derivative on N+1 uniform nodes, one-sided at ends."""
    rows, cols, vals = [], [], []
    for i in range(1, N):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-0.5 / h, 0.5 / h]
    rows += [0, 0, 0]
    cols += [0, 1, 2]
    vals += [-1.5 / h, 2.0 / h, -0.5 / h]
    rows += [N, N, N]
    cols += [N - 2, N - 1, N]
    vals += [0.5 / h, -2.0 / h, 1.5 / h]
    return sp.csr_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))


def _d2_1d(N: int, h: float) -> sp.csr_matrix:
    """Second-order second derivative; 4-point one-sided rows at the ends."""
    h2 = h * h
    rows, cols, vals = [], [], []
    for i in range(1, N):
        rows += [i, i, i]
        cols += [i - 1, i, i + 1]
        vals += [1.0 / h2, -2.0 / h2, 1.0 / h2]
    rows += [0] * 4
    cols += [0, 1, 2, 3]
    vals += [2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2]
    rows += [N] * 4
    cols += [N - 3, N - 2, N - 1, N]
    vals += [-1.0 / h2, 4.0 / h2, -5.0 / h2, 2.0 / h2]
    return sp.csr_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))


def _d1_periodic(M: int, h: float) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j in range(M):
        rows += [j, j]
        cols += [(j - 1) % M, (j + 1) % M]
        vals += [-0.5 / h, 0.5 / h]
    return sp.csr_matrix((vals, (rows, cols)), shape=(M, M))


def _d2_periodic(M: int, h: float) -> sp.csr_matrix:
    h2 = h * h
    rows, cols, vals = [], [], []
    for j in range(M):
        rows += [j, j, j]
        cols += [(j - 1) % M, j, (j + 1) % M]
        vals += [1.0 / h2, -2.0 / h2, 1.0 / h2]
    return sp.csr_matrix((vals, (rows, cols)), shape=(M, M))


def _slicing_d1_s(vals: np.ndarray, hs: float) -> np.ndarray:
    """d/ds by differences of first differences (limits cancellation noise)."""
    d = np.diff(vals, axis=0)
    out = np.empty_like(vals)
    out[1:-1] = (d[1:] + d[:-1]) / (2.0 * hs)
    out[0] = (3.0 * d[0] - d[1]) / (2.0 * hs)
    out[-1] = (3.0 * d[-1] - d[-2]) / (2.0 * hs)
    return out


def _slicing_d2_s(vals: np.ndarray, hs: float) -> np.ndarray:
    d = np.diff(vals, axis=0)
    out = np.empty_like(vals)
    h2 = hs * hs
    out[1:-1] = (d[1:] - d[:-1]) / h2
    out[0] = (-2.0 * d[0] + 3.0 * d[1] - d[2]) / h2
    out[-1] = (d[-3] - 3.0 * d[-2] + 2.0 * d[-1]) / h2
    return out


def _slicing_d1_t(vals: np.ndarray, ht: float) -> np.ndarray:
    d = vals - np.roll(vals, 1, axis=1)     # u_j - u_{j-1}
    return (np.roll(d, -1, axis=1) + d) / (2.0 * ht)


def _slicing_d2_t(vals: np.ndarray, ht: float) -> np.ndarray:
    d = vals - np.roll(vals, 1, axis=1)
    return (np.roll(d, -1, axis=1) - d) / (ht * ht)


def logical_derivatives(grid: AnnulusGrid, vals: np.ndarray):
    """All five logical derivatives (s, t, ss, st, tt) of nodal values."""
    hs = 1.0 / grid.N_r
    ht = 2.0 * np.pi / grid.N_theta
    us = _slicing_d1_s(vals, hs)
    ut = _slicing_d1_t(vals, ht)
    uss = _slicing_d2_s(vals, hs)
    utt = _slicing_d2_t(vals, ht)
    ust = _slicing_d1_s(ut, hs)
    return us, ut, uss, ust, utt


def annulus_ops(grid: AnnulusGrid) -> SimpleNamespace:
    """Finite-difference operators and map coefficients for an annulus grid.

    Returns (and caches on the grid) the five logical derivative matrices
    Ds, Dt, Dss, Dst, Dtt acting on flattened (i, j) node vectors (used for
    Jacobian assembly; pointwise evaluation goes through the matching
    slicing kernels), the inverse Jacobian entries of the map, and the
    correction coefficients that subtract the map curvature from logical
    second derivatives.
    """
    if grid._ops is not None:
        return grid._ops
    if grid.N_r < 3 or grid.N_theta < 3:
        raise GridError("grid too coarse: need at least 3 nodes per direction")
    Nr, Nt = grid.N_r, grid.N_theta
    hs = 1.0 / Nr
    ht = 2.0 * np.pi / Nt
    Is = sp.identity(Nr + 1, format="csr")
    It = sp.identity(Nt, format="csr")
    d1s, d2s = _d1_1d(Nr, hs), _d2_1d(Nr, hs)
    d1t, d2t = _d1_periodic(Nt, ht), _d2_periodic(Nt, ht)
    Ds = sp.kron(d1s, It, format="csr")
    Dt = sp.kron(Is, d1t, format="csr")
    Dss = sp.kron(d2s, It, format="csr")
    Dtt = sp.kron(Is, d2t, format="csr")
    Dst = sp.kron(d1s, d1t, format="csr")

    xs, xt, xss, xst, xtt = logical_derivatives(grid, grid.x)
    ys, yt, yss, yst, ytt = logical_derivatives(grid, grid.y)
    xs, xt = xs.ravel(), xt.ravel()
    ys, yt = ys.ravel(), yt.ravel()
    det = xs * yt - xt * ys
    if np.any(det <= 0.0):
        raise GridError("degenerate grid map (non-positive Jacobian determinant)")
    # inverse Jacobian: ds/dx, ds/dy, dtheta/dx, dtheta/dy
    sx, sy = yt / det, -xt / det
    tx, ty = -ys / det, xs / det
    # logical second derivatives of the map components
    cx = {"ss": xss.ravel(), "st": xst.ravel(), "tt": xtt.ravel()}
    cy = {"ss": yss.ravel(), "st": yst.ravel(), "tt": ytt.ravel()}
    # M_kl(u) = D_kl u - P_kl * (Ds u) - Q_kl * (Dt u) removes the map curvature
    P = {k: cx[k] * sx + cy[k] * sy for k in cx}
    Q = {k: cx[k] * tx + cy[k] * ty for k in cx}
    ops = SimpleNamespace(Ds=Ds, Dt=Dt, Dss=Dss, Dst=Dst, Dtt=Dtt,
                          sx=sx, sy=sy, tx=tx, ty=ty, P=P, Q=Q)
    grid._ops = ops
    return ops


def _logical_derivs(u: ScalarField):
    ops = annulus_ops(u.grid)
    us, ut, uss, ust, utt = logical_derivatives(u.grid, u.values)
    return (ops, us.ravel(), ut.ravel(), uss.ravel(), ust.ravel(),
            utt.ravel())


def differentiate(u: ScalarField) -> GradHess:
    """Cartesian gradient and Hessian of an annulus field.

    Centered second-order stencils at interior nodes, second-order one-sided
    stencils on the boundary rows, periodic in theta.  Exact on affine fields;
    the Hessian is symmetric by construction of the chain rule transform.
    """
    if not isinstance(u.grid, AnnulusGrid):
        raise FieldError("differentiate requires a field on an AnnulusGrid")
    ops, us, ut, uss, ust, utt = _logical_derivs(u)
    gx = ops.sx * us + ops.tx * ut
    gy = ops.sy * us + ops.ty * ut
    Mss = uss - ops.P["ss"] * us - ops.Q["ss"] * ut
    Mst = ust - ops.P["st"] * us - ops.Q["st"] * ut
    Mtt = utt - ops.P["tt"] * us - ops.Q["tt"] * ut
    sx, sy, tx, ty = ops.sx, ops.sy, ops.tx, ops.ty
    hxx = sx * sx * Mss + 2.0 * sx * tx * Mst + tx * tx * Mtt
    hxy = sx * sy * Mss + (sx * ty + tx * sy) * Mst + tx * ty * Mtt
    hyy = sy * sy * Mss + 2.0 * sy * ty * Mst + ty * ty * Mtt
    shape = u.grid.shape
    grad = np.stack([gx.reshape(shape), gy.reshape(shape)], axis=-1)
    hess = np.empty(shape + (2, 2))
    hess[..., 0, 0] = hxx.reshape(shape)
    hess[..., 0, 1] = hxy.reshape(shape)
    hess[..., 1, 0] = hxy.reshape(shape)
    hess[..., 1, 1] = hyy.reshape(shape)
    return GradHess(u.grid, grad, hess)


def hessian_min_eig(hess: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of per-node symmetric 2x2 matrices."""
    a = hess[..., 0, 0]
    b = hess[..., 0, 1]
    c = hess[..., 1, 1]
    mean = 0.5 * (a + c)
    radius = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    return mean - radius


def convexity_min_eig(u: ScalarField) -> ScalarField:
    """Per-node smallest eigenvalue of the discrete Hessian."""
    gh = differentiate(u)
    return ScalarField(u.grid, hessian_min_eig(gh.hess))


def gauss_curvature(u: ScalarField, n: int = 2) -> ScalarField:
    """Nodal Gauss curvature det D2u / (1+|Du|^2)^((n+2)/2).

    The sign of the determinant is preserved; negative values indicate loss
    of convexity and are flagged downstream, not clamped here.
    """
    gh = differentiate(u)
    det = gh.hess[..., 0, 0] * gh.hess[..., 1, 1] - gh.hess[..., 0, 1] ** 2
    g2 = (gh.grad ** 2).sum(axis=-1)
    return ScalarField(u.grid, det / (1.0 + g2) ** ((n + 2) / 2.0))


def _first_nonconvex_node(grid: AnnulusGrid, det: np.ndarray, a: np.ndarray):
    bad = (det <= 0.0) | (a <= 0.0)
    idx = np.argwhere(bad)
    i, j = idx[0]
    return (int(i), int(j)), (float(grid.x[i, j]), float(grid.y[i, j]))


def inverse_hessian(u: ScalarField, gh: GradHess | None = None) -> np.ndarray:
    """Per-node inverse Hessian; raises ConvexityError when not positive definite."""
    if gh is None:
        gh = differentiate(u)
    a = gh.hess[..., 0, 0]
    b = gh.hess[..., 0, 1]
    c = gh.hess[..., 1, 1]
    det = a * c - b * b
    if np.any(det <= 0.0) or np.any(a <= 0.0):
        node, pos = _first_nonconvex_node(u.grid, det, a)
        raise ConvexityError("Hessian singular or indefinite", node, pos)
    inv = np.empty_like(gh.hess)
    inv[..., 0, 0] = c / det
    inv[..., 0, 1] = -b / det
    inv[..., 1, 0] = -b / det
    inv[..., 1, 1] = a / det
    return inv


def linearized_apply(u: ScalarField, w: ScalarField, n: int = 2) -> ScalarField:
    """Apply L w = u^{ij} w_ij - (n+2)/(1+|Du|^2) u^i w_i at every node."""
    if w.grid is not u.grid:
        raise FieldError("u and w must live on the same grid")
    ghu = differentiate(u)
    inv = inverse_hessian(u, ghu)
    ghw = differentiate(w)
    second = (inv * ghw.hess).sum(axis=(-2, -1))
    g2 = (ghu.grad ** 2).sum(axis=-1)
    first = (ghu.grad * ghw.grad).sum(axis=-1)
    return ScalarField(u.grid, second - (n + 2) / (1.0 + g2) * first)


# --------------------------------------------------------------------------
# prescription families
# --------------------------------------------------------------------------

FSPEC_FAMILIES = ("radial_power", "angular_modulated", "tabulated", "product_height")


@dataclass
class FSpec:
    """Prescribed curvature family f(x, z) with analytic admissibility checks.

    Families (r = |x|, theta the polar angle, z the graph height):

      radial_power       f = c * r^(-s)
      angular_modulated  f = c * r^(-s) * (1 + eps*cos(m*theta))
      product_height     f = c * r^(-s) * (1 + eps*cos(m*theta))
                             * (1 + kappa*tanh(rate*z))
      tabulated          nodal values on a reference grid; log-linear in r,
                         trigonometric in theta; independent of z

    Admissibility: f > 0 requires eps < 1 and kappa < 1; f_z >= 0 requires
    kappa >= 0 and rate >= 0; sup(f * r^(n+1)) finite requires s >= n+1
    (analytic for the closed-form families, reported as "assumed" for
    tabulated data).  Gradient-dependent prescriptions are out of scope.
    """

    family: str
    n: int = 2
    amplitude: float = 1.0
    exponent: float = 0.0
    eps: float = 0.0
    mode: int = 0
    kappa: float = 0.0
    rate: float = 0.0
    table_grid: AnnulusGrid | None = None
    table_values: np.ndarray | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> dict[str, str]:
        """Check hypotheses; returns {hypothesis: 'checked'|'assumed'}."""
        notes: dict[str, str] = {}
        if self.family not in FSPEC_FAMILIES:
            raise FieldError(f"unknown prescription family {self.family!r}")
        if self.family == "tabulated":
            if self.table_grid is None or self.table_values is None:
                raise FieldError("tabulated prescription needs table_grid and table_values")
            vals = np.asarray(self.table_values, dtype=float)
            if vals.shape != self.table_grid.shape:
                raise FieldError("table values do not match table grid")
            if np.any(vals <= 0.0):
                raise FieldError("f > 0 violated by tabulated values")
            notes["f > 0"] = "checked (on table nodes)"
            notes["f_z >= 0"] = "checked (table independent of z)"
            notes["sup(f*r^(n+1)) finite"] = "assumed (tabulated data)"
            return notes
        if self.amplitude <= 0.0:
            raise FieldError("f > 0 violated: amplitude must be positive")
        if not (0.0 <= self.eps < 1.0):
            raise FieldError("f > 0 violated: modulation eps must lie in [0, 1)")
        if not (0.0 <= self.kappa < 1.0):
            raise FieldError(
                "f_z >= 0 or f > 0 violated by height factor: need 0 <= kappa < 1")
        if self.rate < 0.0:
            raise FieldError("f_z >= 0 violated by height factor: rate must be >= 0")
        if self.exponent < self.n + 1:
            raise FieldError(
                f"sup(f*r^(n+1)) finite violated: exponent {self.exponent} < n+1 = {self.n + 1}")
        notes["f > 0"] = "checked"
        notes["f_z >= 0"] = "checked"
        notes["sup(f*r^(n+1)) finite"] = "checked"
        return notes

    @property
    def z_dependent(self) -> bool:
        return self.family == "product_height" and self.kappa > 0.0 and self.rate > 0.0

    def sup_amplitude(self) -> float:
        """sup over theta and z of f * r^exponent (closed-form families)."""
        if self.family == "tabulated":
            raise FieldError("no closed-form amplitude for tabulated prescription")
        return self.amplitude * (1.0 + self.eps) * (1.0 + self.kappa)

    def value(self, r, theta, z) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "tabulated":
            return self._table_eval(r, theta)
        out = self.amplitude * r ** (-self.exponent)
        if self.family in ("angular_modulated", "product_height") and self.eps > 0.0:
            out = out * (1.0 + self.eps * np.cos(self.mode * np.asarray(theta)))
        if self.family == "product_height":
            out = out * (1.0 + self.kappa * np.tanh(self.rate * np.asarray(z)))
        return out

    def dz(self, r, theta, z) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family != "product_height" or self.kappa == 0.0 or self.rate == 0.0:
            return np.zeros(np.broadcast(r, theta, z).shape)
        base = self.amplitude * r ** (-self.exponent)
        if self.eps > 0.0:
            base = base * (1.0 + self.eps * np.cos(self.mode * np.asarray(theta)))
        sech2 = 1.0 / np.cosh(self.rate * np.asarray(z)) ** 2
        return base * self.kappa * self.rate * sech2

    def grad_x(self, r, theta, z) -> np.ndarray:
        """Spatial gradient (holding z fixed), Cartesian components (..., 2)."""
        if self.family == "tabulated":
            raise FieldError("no analytic spatial gradient for tabulated prescription")
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        f = self.value(r, theta, z)
        df_dr = -self.exponent * f / r
        if self.family in ("angular_modulated", "product_height") and self.eps > 0.0:
            modu = 1.0 + self.eps * np.cos(self.mode * theta)
            df_dth = f * (-self.eps * self.mode * np.sin(self.mode * theta)) / modu
        else:
            df_dth = np.zeros_like(f)
        ct, st = np.cos(theta), np.sin(theta)
        fx = df_dr * ct - df_dth * st / r
        fy = df_dr * st + df_dth * ct / r
        return np.stack([fx, fy], axis=-1)

    def _table_eval(self, r, theta) -> np.ndarray:
        g = self.table_grid
        vals = np.asarray(self.table_values, dtype=float)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
        # fast path: evaluation on the table grid itself
        if r.shape == g.shape and np.array_equal(r, g.r):
            return vals.copy()
        out = np.empty(r.shape)
        flat_r = r.ravel()
        flat_t = theta.ravel()
        rho = trig_interp(g.rho_inner, flat_t)
        logR = np.log(g.R)
        s = (np.log(flat_r) - np.log(rho)) / (logR - np.log(rho))
        s = np.clip(s, 0.0, 1.0)
        pos = s * g.N_r
        i0 = np.minimum(pos.astype(int), g.N_r - 1)
        w = pos - i0
        flat = out.ravel()
        for k in range(flat_r.size):
            v0 = trig_interp(vals[i0[k]], flat_t[k])[0]
            v1 = trig_interp(vals[i0[k] + 1], flat_t[k])[0]
            flat[k] = (1.0 - w[k]) * v0 + w[k] * v1
        return flat.reshape(r.shape)
