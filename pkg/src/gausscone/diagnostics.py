"""Empirical audits of the a priori estimates on computed solutions.

Measured on the outer region of each compact solve:

  * first-derivative decay: sup |grad_nu (u - lower)| ~ 1/R and
    sup |grad_tau u| ~ 1/sqrt(R) on R/2 <= |x| <= R;
  * boundary second derivatives: |u_tt - |x|_tt| ~ 1/R^2, |u_tn| ~ 1/sqrt(R),
    |u_nn| bounded;
  * the interior test function beta/2 |Du|^2 + log(largest Hessian eigenvalue)
    attains its maximum near the boundary rows;
  * the boundary barrier pair (theta, Theta) built from the tangential shear
    operator T = d_t - (x_t/R) d_n, with the sign conditions that drive the
    mixed-derivative bound.

Exponent targets carry explicit slacks for pre-asymptotic radii; every audit
is read-only (enforced by a value checksum) and reports raw measurements next
to the pass/fail verdicts.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .barriers import ExplicitSubsolution, TabulatedSubsolution
from .errors import FieldError
from .fields import ScalarField, differentiate, hessian_min_eig, inverse_hessian
from .grid import AnnulusGrid

TRIVIAL_FLOOR = 1e-12


def _checksum(arr: np.ndarray) -> str:
    return hashlib.sha256(arr.tobytes()).hexdigest()


class _ReadOnlyGuard:
    """Asserts a field's values are unchanged when the audit finishes."""

    def __init__(self, *fields: ScalarField):
        self.fields = fields

    def __enter__(self):
        self.before = [_checksum(f.values) for f in self.fields]
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            after = [_checksum(f.values) for f in self.fields]
            if after != self.before:
                raise AssertionError("audit modified a solution field")
        return False


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    trivial: bool = False


def fit_loglog_slope(pairs, trivial_tol: float = 0.0) -> LogLogFit:
    """Least-squares slope of log(value) against log(R).

    Values that are all at or below trivial_tol short-circuit to a trivial
    pass (no fit); mixing zeros with nonzero values or repeating all radii is
    an error.
    """
    pairs = [(float(R), float(v)) for R, v in pairs]
    if len(pairs) < 3:
        raise ValueError("need at least 3 (R, value) pairs for a slope fit")
    R = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    if np.all(v <= trivial_tol):
        return LogLogFit(slope=math.nan, intercept=math.nan, trivial=True)
    if np.any(v <= 0.0):
        raise ValueError("values must be positive for a log-log fit")
    if np.ptp(R) == 0.0:
        raise ValueError("degenerate fit: all radii equal")
    slope, intercept = np.polyfit(np.log(R), np.log(v), 1)
    return LogLogFit(slope=float(slope), intercept=float(intercept))


@dataclass
class DecayAudit:
    """One decay estimate measured across the schedule."""

    estimate: str
    radii: list[float]
    sup_values: list[float]          # raw sups per R
    scaled_values: list[float]       # sups scaled by the expected rate
    target_slope: float
    slack: float
    slope: float = math.nan
    intercept: float = math.nan
    trivial: bool = False
    passed: bool = False

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "radii": self.radii,
                "sup_values": self.sup_values, "scaled_values": self.scaled_values,
                "target_slope": self.target_slope, "slack": self.slack,
                "slope": self.slope, "intercept": self.intercept,
                "trivial": self.trivial, "passed": self.passed}


def _slope_audit(estimate: str, radii, sups, scale_pow: float,
                 target: float, slack: float,
                 trivial_tol: float = TRIVIAL_FLOOR) -> DecayAudit:
    scaled = [s * R ** (-scale_pow) for R, s in zip(radii, sups)]
    audit = DecayAudit(estimate=estimate, radii=list(radii),
                       sup_values=list(sups), scaled_values=scaled,
                       target_slope=target, slack=slack)
    fit = fit_loglog_slope(list(zip(radii, sups)), trivial_tol=trivial_tol)
    audit.trivial = fit.trivial
    if fit.trivial:
        audit.passed = True
        return audit
    audit.slope = fit.slope
    audit.intercept = fit.intercept
    audit.passed = fit.slope <= target + slack
    return audit


@dataclass
class BoundaryFrame:
    """Normal/tangent frame at an outer boundary point."""

    x0: np.ndarray

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        self.R = float(np.linalg.norm(self.x0))
        self.nu = self.x0 / self.R
        self.tau = np.array([-self.nu[1], self.nu[0]])

    def distance(self, r) -> np.ndarray:
        """d = R - |x|, the distance below the outer sphere."""
        return self.R - np.asarray(r, dtype=float)


def _sub_grad(subsolution, grid: AnnulusGrid) -> np.ndarray:
    if isinstance(subsolution, ExplicitSubsolution):
        return subsolution.grad_cart(grid.x, grid.y)
    field = subsolution.field_on(grid)
    return differentiate(field).grad


def _frames(grid: AnnulusGrid):
    r = grid.r
    nu = np.stack([grid.x / r, grid.y / r], axis=-1)
    tau = np.stack([-grid.y / r, grid.x / r], axis=-1)
    return nu, tau


def c1_decay_audit(solutions, subsolution, slack_nu: float = 0.2,
                   slack_tau: float = 0.15,
                   trivial_tol: float = TRIVIAL_FLOOR):
    """First-derivative decay on the outer half-annulus R/2 <= |x| <= R.

    Returns (normal audit with target -1, tangential audit with target -1/2).
    `solutions` is a list of solved fields, one per outer radius.
    """
    radii, sup_nu, sup_tau = [], [], []
    for u in solutions:
        with _ReadOnlyGuard(u):
            g = u.grid
            R = g.R
            region = g.r >= R / 2.0
            gh = differentiate(u)
            nu, tau = _frames(g)
            dsub = _sub_grad(subsolution, g)
            dn = ((gh.grad - dsub) * nu).sum(axis=-1)
            dt = (gh.grad * tau).sum(axis=-1)
            radii.append(R)
            sup_nu.append(float(np.abs(dn[region]).max()))
            sup_tau.append(float(np.abs(dt[region]).max()))
    a_nu = _slope_audit("sup |grad_nu(u - lower)| on R/2<=|x|<=R", radii, sup_nu,
                        -1.0, -1.0, slack_nu, trivial_tol)
    a_tau = _slope_audit("sup |grad_tau u| on R/2<=|x|<=R", radii, sup_tau,
                         -0.5, -0.5, slack_tau, trivial_tol)
    return a_nu, a_tau


def c2_boundary_audit(solutions, subsolution, slack_tt: float = 0.3,
                      slack_tn: float = 0.2, bound_factor: float = 2.0,
                      row_offset: int = 1, trivial_tol: float = TRIVIAL_FLOOR):
    """Second derivatives one row inside the outer boundary.

    Returns three audits: tangential-tangential against the sphere Hessian
    (target slope -2), mixed (target -1/2), and double-normal boundedness
    (sup at the largest radius must not exceed bound_factor times the sup at
    the smallest; the underlying estimate is one-sided).
    """
    radii, sup_tt, sup_tn, sup_nn = [], [], [], []
    for u in solutions:
        with _ReadOnlyGuard(u):
            g = u.grid
            i = g.N_r - row_offset
            gh = differentiate(u)
            nu, tau = _frames(g)
            H = gh.hess[i]
            nu_i, tau_i = nu[i], tau[i]
            u_tt = np.einsum("ja,jab,jb->j", tau_i, H, tau_i)
            u_tn = np.einsum("ja,jab,jb->j", tau_i, H, nu_i)
            u_nn = np.einsum("ja,jab,jb->j", nu_i, H, nu_i)
            sphere_tt = 1.0 / g.r[i]       # tangential Hessian of |x|
            radii.append(g.R)
            sup_tt.append(float(np.abs(u_tt - sphere_tt).max()))
            sup_tn.append(float(np.abs(u_tn).max()))
            sup_nn.append(float(np.abs(u_nn).max()))
    a_tt = _slope_audit("sup |u_tt - |x|_tt| one row inside dB_R", radii, sup_tt,
                        -2.0, -2.0, slack_tt, trivial_tol)
    a_tn = _slope_audit("sup |u_tn| one row inside dB_R", radii, sup_tn,
                        -0.5, -0.5, slack_tn, trivial_tol)
    a_nn = DecayAudit(estimate="sup |u_nn| one row inside dB_R (bounded)",
                      radii=list(radii), sup_values=list(sup_nn),
                      scaled_values=list(sup_nn), target_slope=0.0,
                      slack=bound_factor)
    if max(sup_nn) <= trivial_tol:
        a_nn.trivial = True
        a_nn.passed = True
    else:
        fit = fit_loglog_slope(list(zip(radii, sup_nn)), trivial_tol=0.0) \
            if min(sup_nn) > 0.0 else None
        if fit is not None:
            a_nn.slope, a_nn.intercept = fit.slope, fit.intercept
        a_nn.passed = sup_nn[-1] <= bound_factor * sup_nn[0]
    return a_tt, a_tn, a_nn


@dataclass
class InteriorMaxReport:
    beta: float
    interior_max: float
    boundary_max: float
    gap: float
    gap_tol: float
    passed: bool
    argmax_interior: tuple[int, int]

    def to_dict(self) -> dict:
        return {"beta": self.beta, "interior_max": self.interior_max,
                "boundary_max": self.boundary_max, "gap": self.gap,
                "gap_tol": self.gap_tol, "passed": self.passed,
                "argmax_interior": list(self.argmax_interior)}


def interior_w_audit(u: ScalarField, beta: float = 1.0,
                     gap_tol: float = 0.5) -> InteriorMaxReport:
    """Interior maximum principle surrogate for the largest second derivative.

    Computes per node the maximum over directions of
    beta/2 |Du|^2 + log(xi' D2u xi), i.e. uses the largest Hessian eigenvalue,
    then compares the interior maximum with the boundary-row maximum.
    """
    with _ReadOnlyGuard(u):
        g = u.grid
        gh = differentiate(u)
        a = gh.hess[..., 0, 0]
        b = gh.hess[..., 0, 1]
        c = gh.hess[..., 1, 1]
        lam_max = 0.5 * (a + c) + np.sqrt((0.5 * (a - c)) ** 2 + b * b)
        if np.any(lam_max <= 0.0):
            raise FieldError("largest Hessian eigenvalue non-positive somewhere")
        g2 = (gh.grad ** 2).sum(axis=-1)
        w = 0.5 * beta * g2 + np.log(lam_max)
        interior = g.interior_mask()
        wi = np.where(interior, w, -np.inf)
        interior_max = float(wi.max())
        boundary_max = float(max(w[0].max(), w[-1].max()))
        idx = np.unravel_index(int(np.argmax(wi)), w.shape)
        gap = interior_max - boundary_max
        return InteriorMaxReport(beta=beta, interior_max=interior_max,
                                 boundary_max=boundary_max, gap=gap,
                                 gap_tol=gap_tol, passed=gap <= gap_tol,
                                 argmax_interior=(int(idx[0]), int(idx[1])))


@dataclass
class ThetaBarrierReport:
    R: float
    delta: float
    x0: list[float]
    A: float
    tol: float
    theta_min_boundary: float        # min of theta barrier on the rim
    Theta_min_boundary: float        # min over both sign choices
    LTheta_max_interior: float       # max over both sign choices
    Theta_at_x0: float
    theta_nu_x0: float
    T_nu_abs_x0: float
    mixed_bound_ok: bool
    T_sup_scaled: float              # sup |T(u - lower)| * sqrt(R) over the patch
    T_quad_constant: float           # fitted c in |T(u-lower)| <= c |x-x0|^2/R^2 on dB_R
    passed: bool

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, (list, tuple)) else v)
                for k, v in self.__dict__.items()}


def _theta_patch(grid: AnnulusGrid, frame: BoundaryFrame, delta: float):
    dist = np.hypot(grid.x - frame.x0[0], grid.y - frame.x0[1])
    inside = dist <= delta
    rim = np.zeros_like(inside)
    rim |= inside & (np.roll(inside, 1, axis=1) == False)   # noqa: E712
    rim |= inside & (np.roll(inside, -1, axis=1) == False)  # noqa: E712
    shift_up = np.ones_like(inside)
    shift_up[:-1] = inside[1:]
    shift_dn = np.ones_like(inside)
    shift_dn[1:] = inside[:-1]
    rim |= inside & (~shift_up | ~shift_dn)
    rim[-1] = inside[-1]   # the spherical part of the patch boundary
    interior = inside & ~rim
    return dist, inside, rim, interior


def calibrate_theta_A(u: ScalarField, subsolution, j0: int,
                      tol: float | None = None,
                      candidates=tuple(2.0 ** k for k in range(-4, 21))):
    """Smallest power of two A with Theta >= -tol on the patch rim (both signs)."""
    for A in candidates:
        rep = theta_barrier_audit(u, subsolution, j0, A, tol=tol,
                                  require_pass=False)
        if rep.Theta_min_boundary >= -rep.tol:
            return A
    return candidates[-1]


def theta_barrier_audit(u: ScalarField, subsolution, j0: int,
                        A: float | None = None, tol: float | None = None,
                        require_pass: bool = False) -> ThetaBarrierReport:
    """Boundary barrier audit at the outer-boundary node with angle index j0.

    On the patch Omega_delta = B_delta(x0) with delta = R^(3/4), evaluates

        theta = (u - lower) + d/sqrt(R) - d^2 / (2 R^(5/4)),
        Theta = theta + A |x - x0|^2 / R^2 +- T(u - lower),

    and checks: theta >= -tol on the rim, Theta >= -tol on the rim,
    L Theta <= tol inside, Theta(x0) = 0 within tol, and the mixed-derivative
    consequence  theta_nu(x0) >= |(T(u - lower))_nu|(x0) - tol  with nu the
    inward normal.  The default tolerance is 50 h^2 with h the largest radial
    spacing inside the patch.
    """
    from .fields import linearized_apply

    with _ReadOnlyGuard(u):
        g = u.grid
        R = g.R
        delta = R ** 0.75
        frame = BoundaryFrame(np.array([g.x[-1, j0], g.y[-1, j0]]))
        dist, inside, rim, interior = _theta_patch(g, frame, delta)
        if np.any(inside[0]):
            raise FieldError(
                f"barrier patch B_delta(x0) with delta = {delta:.3g} reaches the "
                "inner boundary; outer radius too small for this audit")
        if not np.any(interior):
            raise FieldError("barrier patch contains no interior nodes")
        if tol is None:
            h_loc = g.radial_spacing()[inside].max()
            tol = 50.0 * h_loc ** 2

        if isinstance(subsolution, ExplicitSubsolution):
            lower = subsolution.value(g.r)
        else:
            lower = subsolution.field_on(g).values
        v = u.values - lower
        d = R - g.r
        theta_vals = v + d / math.sqrt(R) - d * d / (2.0 * R ** 1.25)
        theta_field = ScalarField(g, theta_vals)

        # shear operator T = d_t - (x_t / R) d_n in the frame of x0
        gh_v = differentiate(ScalarField(g, v))
        x_t = (g.x - 0.0) * frame.tau[0] + g.y * frame.tau[1]
        v_t = gh_v.grad[..., 0] * frame.tau[0] + gh_v.grad[..., 1] * frame.tau[1]
        v_n = gh_v.grad[..., 0] * frame.nu[0] + gh_v.grad[..., 1] * frame.nu[1]
        Tv = v_t - x_t / R * v_n
        Tv_field = ScalarField(g, Tv)

        quad = A if A is not None else 1.0
        reports = {}
        for sign in (+1.0, -1.0):
            Theta = theta_vals + quad * dist ** 2 / R ** 2 + sign * Tv
            reports[sign] = ScalarField(g, Theta)

        L_theta = linearized_apply(u, theta_field)
        LT = {s: linearized_apply(u, reports[s]) for s in reports}

        theta_min_rim = float(theta_vals[rim].min())
        Theta_min_rim = float(min(reports[s].values[rim].min() for s in reports))
        LTheta_max = float(max(LT[s].values[interior].max() for s in LT))
        Theta_x0 = float(max(abs(reports[s].values[-1, j0]) for s in reports))

        # inward normal derivative at x0 of theta and of T(u - lower)
        nu_in = -frame.nu
        gh_theta = differentiate(theta_field)
        theta_nu = float(gh_theta.grad[-1, j0] @ nu_in)
        gh_T = differentiate(Tv_field)
        T_nu = float(abs(gh_T.grad[-1, j0] @ nu_in))
        mixed_ok = theta_nu >= T_nu - tol

        sqrtR = math.sqrt(R)
        T_sup_scaled = float(np.abs(Tv[inside]).max() * sqrtR)
        on_rim_sphere = inside[-1].copy()
        on_rim_sphere[j0] = False
        if np.any(on_rim_sphere):
            ratios = (np.abs(Tv[-1][on_rim_sphere]) * R ** 2
                      / dist[-1][on_rim_sphere] ** 2)
            T_quad_c = float(ratios.max())
        else:
            T_quad_c = math.nan

        passed = (theta_min_rim >= -tol and Theta_min_rim >= -tol
                  and LTheta_max <= tol and Theta_x0 <= tol and mixed_ok)
        rep = ThetaBarrierReport(
            R=R, delta=delta, x0=[float(frame.x0[0]), float(frame.x0[1])],
            A=float(quad), tol=float(tol), theta_min_boundary=theta_min_rim,
            Theta_min_boundary=Theta_min_rim, LTheta_max_interior=LTheta_max,
            Theta_at_x0=Theta_x0, theta_nu_x0=theta_nu, T_nu_abs_x0=T_nu,
            mixed_bound_ok=mixed_ok, T_sup_scaled=T_sup_scaled,
            T_quad_constant=T_quad_c, passed=passed)
        if require_pass and not passed:
            raise FieldError(f"barrier audit failed: {rep.to_dict()}")
        return rep
