"""Closed-form barriers and the viscosity-style gluing of two subsolutions.

The upper barrier is the shifted cone |x| + L.  The lower barrier for the
ball-shaped inner boundary is the explicit profile

    u(x) = |x| - rho1 + psi(|x|),
    phi(r) = (a-1)/2 * rho1^(a-1) * r^(-a),
    psi'(r) = -integral_r^inf phi,   psi(rho1) = 0,

whose Gauss curvature has the closed form

    K(r) = phi * r^(1-n) * (1+psi')^(n-1) * (1 + (1+psi')^2)^(-(n+2)/2)

and dominates the admissible prescription bound

    f_bound(r) = (a-1) * 2^(-3n/2-1) * rho1^(a-1) * r^(1-n-a).

The closed forms for psi and psi' are validated against numerical quadrature
of the defining double integral in the test suite (independent oracle).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GlueError, SubsolutionError
from .fields import (FSpec, ScalarField, differentiate, gauss_curvature,
                     hessian_min_eig)
from .grid import AnnulusGrid, trig_interp

DEFAULT_CONV_FLOOR = 1e-8


@dataclass
class ConeSupersolution:
    """Upper barrier |x| + L."""

    L: float

    def value(self, r):
        return np.asarray(r, dtype=float) + self.L


def supersolution_eval(x, L: float):
    """Value, gradient and Hessian of the shifted cone at points x (..., n)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("cone supersolution is singular at the origin")
    n = x.shape[-1]
    xhat = x / r[..., None]
    value = r + L
    grad = xhat
    eye = np.eye(n)
    hess = (eye - xhat[..., :, None] * xhat[..., None, :]) / r[..., None, None]
    return value, grad, hess


@dataclass
class ExplicitSubsolution:
    """Radially symmetric lower barrier for K = closed ball of radius rho1,
    zero boundary values.  Requires a > 2 so the defining integrals converge
    and the graph stays within bounded distance of the cone."""

    rho1: float
    a: float
    n: int = 2

    def __post_init__(self):
        if self.rho1 <= 0.0:
            raise SubsolutionError(f"rho1 must be positive, got {self.rho1}")
        if self.a <= 2.0:
            raise SubsolutionError(f"a > 2 required, got a = {self.a}")
        if self.n < 2:
            raise SubsolutionError(f"dimension n >= 2 required, got {self.n}")

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * (self.a - 1.0) * self.rho1 ** (self.a - 1.0) * r ** (-self.a)

    def psi_prime(self, r):
        r = np.asarray(r, dtype=float)
        return -0.5 * self.rho1 ** (self.a - 1.0) * r ** (1.0 - self.a)

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        return self.rho1 ** (self.a - 1.0) * (
            r ** (2.0 - self.a) - self.rho1 ** (2.0 - self.a)) / (2.0 * (self.a - 2.0))

    def value(self, r):
        return np.asarray(r, dtype=float) - self.rho1 + self.psi(r)

    def slope(self, r):
        """Radial derivative 1 + psi'(r) (also |Du| of the graph)."""
        return 1.0 + self.psi_prime(r)

    def curvature_radial(self, r):
        """Second radial derivative, equal to phi(r)."""
        return self.phi(r)

    def kappa(self, r):
        """Closed-form Gauss curvature of the graph at radius r."""
        r = np.asarray(r, dtype=float)
        sl = self.slope(r)
        return (self.phi(r) * r ** (1.0 - self.n) * sl ** (self.n - 1.0)
                * (1.0 + sl ** 2) ** (-(self.n + 2.0) / 2.0))

    def admissible_bound(self, r):
        """Largest prescription the barrier is guaranteed to dominate."""
        r = np.asarray(r, dtype=float)
        return ((self.a - 1.0) * 2.0 ** (-1.5 * self.n - 1.0)
                * self.rho1 ** (self.a - 1.0) * r ** (1.0 - self.n - self.a))

    def field_on(self, grid: AnnulusGrid) -> ScalarField:
        return ScalarField(grid, self.value(grid.r))

    def grad_cart(self, x, y):
        """Cartesian gradient at points (x, y) for n = 2."""
        r = np.hypot(x, y)
        sl = self.slope(r)
        return np.stack([sl * x / r, sl * y / r], axis=-1)

    def hess_cart(self, x, y):
        """Cartesian Hessian at points (x, y) for n = 2."""
        r = np.hypot(x, y)
        xh, yh = x / r, y / r
        tang = self.slope(r) / r
        rad = self.phi(r)
        h = np.empty(np.shape(r) + (2, 2))
        h[..., 0, 0] = rad * xh * xh + tang * yh * yh
        h[..., 0, 1] = (rad - tang) * xh * yh
        h[..., 1, 0] = h[..., 0, 1]
        h[..., 1, 1] = rad * yh * yh + tang * xh * xh
        return h


def subsolution_eval(r, spec: ExplicitSubsolution):
    """Value, psi, psi', phi of the explicit subsolution at radii r >= rho1."""
    r = np.asarray(r, dtype=float)
    if np.any(r < spec.rho1 * (1.0 - 1e-12)):
        raise SubsolutionError(f"radius below rho1 = {spec.rho1}")
    return spec.value(r), spec.psi(r), spec.psi_prime(r), spec.phi(r)


def subsolution_curvature(r, spec: ExplicitSubsolution):
    """Closed-form curvature of the barrier and the admissible bound at r."""
    return spec.kappa(r), spec.admissible_bound(r)


@dataclass
class TabulatedSubsolution:
    """Subsolution given by nodal values on a reference grid.

    Values at other radii/angles come from cubic interpolation in log r along
    each angle plus trigonometric interpolation in theta, so the barrier can
    supply outer Dirichlet data for any R up to its own outer radius.
    """

    source: ScalarField

    def __post_init__(self):
        from scipy.interpolate import CubicSpline
        g = self.source.grid
        if not isinstance(g, AnnulusGrid):
            raise SubsolutionError("tabulated subsolution needs an annulus field")
        self._splines = [CubicSpline(np.log(g.r[:, j]), self.source.values[:, j])
                         for j in range(g.N_theta)]

    @property
    def grid(self) -> AnnulusGrid:
        return self.source.grid

    def value_polar(self, r, theta):
        g = self.grid
        r = np.asarray(r, dtype=float)
        if np.any(r > g.R * (1.0 + 1e-12)):
            raise SubsolutionError(
                f"tabulated subsolution only covers r <= {g.R}, asked for {r.max()}")
        theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
        cols = np.stack([s(np.log(np.clip(r, g.rho_inner.min(), g.R)))
                         for s in self._splines], axis=-1)
        out = np.empty(r.shape)
        flat_out = out.ravel()
        flat_cols = cols.reshape(-1, g.N_theta)
        flat_t = theta.ravel()
        for k in range(flat_out.size):
            flat_out[k] = trig_interp(flat_cols[k], flat_t[k])[0]
        return out

    def field_on(self, grid: AnnulusGrid) -> ScalarField:
        return ScalarField(grid, self.value_polar(grid.r, grid.theta[None, :]))


@dataclass
class SubsolutionReport:
    passed: bool
    min_margin: float
    min_rel_margin: float
    min_eig: float
    tol_rel: float
    conv_floor: float
    margin: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"passed": bool(self.passed), "min_margin": float(self.min_margin),
                "min_rel_margin": float(self.min_rel_margin),
                "min_eig": float(self.min_eig), "tol_rel": float(self.tol_rel),
                "conv_floor": float(self.conv_floor)}


def relative_spacing(grid: AnnulusGrid) -> float:
    """Largest local spacing relative to the radius: the scale of relative
    finite-difference errors for prescriptions that decay in r."""
    dr_rel = (grid.radial_spacing() / grid.r).max()
    dtheta = 2.0 * np.pi / grid.N_theta
    return float(max(dr_rel, dtheta))


def verify_subsolution(u: ScalarField, f, tol_rel: float | None = None,
                       conv_floor: float = DEFAULT_CONV_FLOOR) -> SubsolutionReport:
    """Check the discrete lower-barrier inequality K[u] >= f(x, u).

    The report carries the absolute per-node margin K[u] - f; the verdict uses
    the relative margin (K - f)/f so that far-field margins, which decay like
    the prescription itself, are not swamped by an absolute tolerance.  Passes
    iff the relative margin stays above -tol_rel everywhere (default 5*h^2
    with h the largest spacing relative to the radius) and the smallest
    Hessian eigenvalue stays above conv_floor.
    """
    grid = u.grid
    if tol_rel is None:
        tol_rel = 5.0 * relative_spacing(grid) ** 2
    K = gauss_curvature(u).values
    fvals = f.value(grid.r, grid.theta[None, :], u.values)
    margin = K - fvals
    rel_margin = margin / fvals
    min_eig = hessian_min_eig(differentiate(u).hess)
    passed = bool(rel_margin.min() >= -tol_rel and min_eig.min() >= conv_floor)
    return SubsolutionReport(passed=passed, min_margin=float(margin.min()),
                             min_rel_margin=float(rel_margin.min()),
                             min_eig=float(min_eig.min()), tol_rel=float(tol_rel),
                             conv_floor=conv_floor, margin=margin)


@dataclass
class GluedSubsolution:
    """Two subsolutions on overlapping subdomains of the same annulus grid.

    u1 lives on the bounded part Omega_1 = {r < r1_out} (containing the inner
    boundary), u2 on the outer part Omega_2 = {r > r2_in}; values outside a
    field's own subdomain are ignored.  The ordering hypotheses

        u1 < u2 on the outer rim of Omega_1,   u2 < u1 on the inner rim of Omega_2,

    keep the crossing set {u1 = u2} compactly inside the overlap.
    `blend_scale` sets the mollification width (in field-value units) as a
    multiple of the local radial spacing near the crossing; the smoothed
    maximum is exact wherever |u1 - u2| exceeds that width, so it reduces to
    the plain maximum near the domain boundary by itself.
    """

    u1: ScalarField
    u2: ScalarField
    r1_out: float
    r2_in: float
    blend_scale: float = 2.0

    def __post_init__(self):
        if self.u1.grid is not self.u2.grid:
            raise GlueError("u1 and u2 must live on the same grid")
        g = self.u1.grid
        if not (self.r2_in < self.r1_out):
            raise GlueError(
                f"subdomains must overlap: r2_in = {self.r2_in} >= r1_out = {self.r1_out}")
        if self.r2_in <= g.rho_inner.max():
            raise GlueError("Omega_2 rim must lie strictly outside the inner boundary")
        if self.r1_out >= g.R:
            raise GlueError("Omega_1 rim must lie strictly inside the outer sphere")
        if self.blend_scale <= 0.0:
            raise GlueError("blend width must be positive")


def _ring_values(field: ScalarField, radius: float) -> np.ndarray:
    """Values of an annulus field on the circle r = radius (per-angle cubic
    interpolation in log r)."""
    from scipy.interpolate import CubicSpline
    g = field.grid
    lr = np.log(radius)
    out = np.empty(g.N_theta)
    for j in range(g.N_theta):
        out[j] = CubicSpline(np.log(g.r[:, j]), field.values[:, j])(lr)
    return out


def masked_max(g: GluedSubsolution) -> np.ndarray:
    """max{u1, u2} with each field restricted to its own subdomain."""
    grid = g.u1.grid
    return np.where(grid.r <= g.r2_in, g.u1.values,
                    np.where(grid.r >= g.r1_out, g.u2.values,
                             np.maximum(g.u1.values, g.u2.values)))


def _smooth_ramp(d: np.ndarray, kappa: float) -> np.ndarray:
    """C^2 mollification of max(d, 0): exact outside |d| <= kappa, inside the
    band it is (d + kappa*M(d/kappa))/2 with the even convex quartic
    M(t) = 3/8 + 3/4 t^2 - 1/8 t^4 (so M >= |t| and M'' >= 0)."""
    t = np.clip(d / kappa, -1.0, 1.0)
    m = kappa * (0.375 + 0.75 * t * t - 0.125 * t ** 4)
    return np.where(np.abs(d) >= kappa, np.maximum(d, 0.0), 0.5 * (d + m))


def glue_max(g: GluedSubsolution, conv_floor: float = DEFAULT_CONV_FLOOR) -> ScalarField:
    """Smoothed maximum of two ordered subsolutions.

    Built as u2 + h(u1 - u2) with the C^2 ramp h, so the result dominates
    max{u1, u2}, agrees with it exactly outside the band |u1 - u2| <= width
    (in particular on the domain boundary), and inherits convexity:
    D2w = (1-h') D2u2 + h' D2u1 + h'' grad d (x) grad d.  Strict convexity is
    still verified a posteriori on the discrete Hessian.
    """
    grid = g.u1.grid
    v1, v2 = g.u1.values, g.u2.values

    ring1_u1 = _ring_values(g.u1, g.r1_out)
    ring1_u2 = _ring_values(g.u2, g.r1_out)
    bad = ring1_u1 >= ring1_u2
    if np.any(bad):
        j = int(np.argmax(ring1_u1 - ring1_u2))
        raise GlueError(
            "ordering hypothesis u1 < u2 on the outer rim of Omega_1 fails: "
            f"u1({g.r1_out:.6g}, theta={grid.theta[j]:.6g}) = {ring1_u1[j]:.6g} "
            f">= u2 = {ring1_u2[j]:.6g}")
    ring2_u1 = _ring_values(g.u1, g.r2_in)
    ring2_u2 = _ring_values(g.u2, g.r2_in)
    bad = ring2_u2 >= ring2_u1
    if np.any(bad):
        j = int(np.argmax(ring2_u2 - ring2_u1))
        raise GlueError(
            "ordering hypothesis u2 < u1 on the inner rim of Omega_2 fails: "
            f"u2({g.r2_in:.6g}, theta={grid.theta[j]:.6g}) = {ring2_u2[j]:.6g} "
            f">= u1 = {ring2_u1[j]:.6g}")

    # crossing set must stay clear of the overlap rims
    overlap = (grid.r > g.r2_in) & (grid.r < g.r1_out)
    diff = v2 - v1
    crossing = overlap & (np.abs(diff) < 1e-14)
    sign_change = overlap[:-1] & overlap[1:] & (diff[:-1] * diff[1:] < 0.0)
    cross_r = np.concatenate([grid.r[:-1][sign_change], grid.r[crossing]])
    if cross_r.size == 0:
        raise GlueError("crossing set {u1 = u2} is empty inside the overlap")
    dr_loc = grid.radial_spacing()
    in_overlap = (grid.r >= g.r2_in) & (grid.r <= g.r1_out)
    clearance = 2.0 * dr_loc[in_overlap].max()
    if cross_r.min() < g.r2_in + clearance or cross_r.max() > g.r1_out - clearance:
        raise GlueError(
            "crossing set {u1 = u2} reaches the overlap rim "
            f"(radial extent [{cross_r.min():.6g}, {cross_r.max():.6g}] inside "
            f"[{g.r2_in:.6g}, {g.r1_out:.6g}] with clearance {clearance:.3g})")

    # mollification width, in field-value units; must be undercut by |u1 - u2|
    # on the overlap rims and the domain boundary so the maximum stays exact there
    kappa = g.blend_scale * float(dr_loc[in_overlap].max())
    rim_gap = min(float(np.abs(ring1_u1 - ring1_u2).min()),
                  float(np.abs(ring2_u1 - ring2_u2).min()))
    if kappa >= rim_gap:
        kappa = 0.5 * rim_gap
    if kappa <= 0.0:
        raise GlueError("cannot choose a positive blending width below the rim gap")

    hard_max = masked_max(g)
    w = np.where(overlap, v2 + _smooth_ramp(v1 - v2, kappa), hard_max)
    band_rows = np.abs(diff) < kappa
    if np.any(band_rows[0]) or np.any(band_rows[-1]):
        raise GlueError("mollification band touches the domain boundary; "
                        "decrease the blending width")
    w[0, :] = hard_max[0, :]
    w[-1, :] = hard_max[-1, :]

    out = ScalarField(grid, w)
    min_eig = hessian_min_eig(differentiate(out).hess).min()
    if min_eig < conv_floor:
        raise GlueError(
            f"glued field not strictly convex (min Hessian eigenvalue {min_eig:.3e} "
            f"< {conv_floor:.1e}); increase the blending width")
    if np.any(w < hard_max - 1e-12):
        raise GlueError("glued field fell below max{u1, u2}")
    return out
