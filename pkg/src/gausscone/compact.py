"""Damped Newton solver for the compact Dirichlet problem on B_R \\ K.

The equation is solved in logarithmic form,

    log det D2u - (n+2)/2 log(1+|Du|^2) = log f(x, u)   in the interior,
    u = dirichlet data                                   on both boundary rows,

whose exact linearization in a direction w is L w - (f_z/f) w with L the
operator from fields.linearized_apply.  Because the discrete residual is an
algebraic function of the finite-difference derivatives, the assembled sparse
Jacobian is the exact derivative of the discrete residual, which the test
suite verifies against directional finite differences.

Globalization: step damping keeps every accepted iterate strictly convex
(min Hessian eigenvalue >= conv_floor) and enforces a residual decrease; if
the line search stagnates the solver falls back to a continuation in t from
the known solution (w, K[w]) to the target prescription,

    K[u^t] = (1-t) K[w](x) + t f(x, u^t),   u^t = data on the boundary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvexityError, SolveError, SubsolutionError
from .fields import (FSpec, GradHess, ScalarField, annulus_ops, differentiate,
                     hessian_min_eig, inverse_hessian)
from .barriers import DEFAULT_CONV_FLOOR, verify_subsolution
from .grid import AnnulusGrid

logger = logging.getLogger(__name__)

DEFAULT_TOL_NEWTON = 1e-10
MAX_NEWTON = 60
MIN_ALPHA = 2.0 ** -20
N_DIM = 2  # the full PDE grid is two dimensional


@dataclass
class CompactProblem:
    """One compact Dirichlet problem: grid, prescription, boundary data, start."""

    grid: AnnulusGrid
    f: object                      # FSpec or any object with value()/dz()
    dirichlet_inner: np.ndarray    # values on the inner boundary row
    dirichlet_outer: np.ndarray    # values on the outer boundary row
    init: ScalarField
    init_is_glued: bool = False

    def __post_init__(self):
        g = self.grid
        self.dirichlet_inner = np.asarray(self.dirichlet_inner, dtype=float)
        self.dirichlet_outer = np.asarray(self.dirichlet_outer, dtype=float)
        for name, arr in (("inner", self.dirichlet_inner), ("outer", self.dirichlet_outer)):
            if arr.shape != (g.N_theta,):
                raise SolveError(f"{name} Dirichlet data must have one value per angle")
        if self.init.grid is not g:
            raise SolveError("initial field must live on the problem grid")
        if (np.abs(self.init.values[0] - self.dirichlet_inner).max() > 1e-12 or
                np.abs(self.init.values[-1] - self.dirichlet_outer).max() > 1e-12):
            raise SolveError("initial field must match the Dirichlet data")

    def f_values(self, u: np.ndarray) -> np.ndarray:
        return self.f.value(self.grid.r, self.grid.theta[None, :], u)

    def fz_values(self, u: np.ndarray) -> np.ndarray:
        return self.f.dz(self.grid.r, self.grid.theta[None, :], u)


@dataclass
class ConvergenceReport:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    damping_history: list[float] = field(default_factory=list)
    min_eig_history: list[float] = field(default_factory=list)
    homotopy_steps: list[float] = field(default_factory=list)
    status: str = "pending"
    tol_effective: float = 0.0

    def record(self, residual: float, alpha: float, min_eig: float):
        self.iterations += 1
        self.residual_history.append(float(residual))
        self.damping_history.append(float(alpha))
        self.min_eig_history.append(float(min_eig))

    def to_dict(self) -> dict:
        return {"iterations": self.iterations,
                "residual_history": self.residual_history,
                "damping_history": self.damping_history,
                "min_eig_history": self.min_eig_history,
                "homotopy_steps": self.homotopy_steps,
                "status": self.status,
                "tol_effective": self.tol_effective}


def evaluate_residual(u: ScalarField, prob: CompactProblem,
                      gh: GradHess | None = None) -> ScalarField:
    """Log-form residual at interior nodes, u - data on the boundary rows."""
    g = prob.grid
    if gh is None:
        gh = differentiate(u)
    a = gh.hess[..., 0, 0]
    c = gh.hess[..., 1, 1]
    det = a * c - gh.hess[..., 0, 1] ** 2
    interior = g.interior_mask()
    if np.any((det[interior] <= 0.0) | (a[interior] <= 0.0)):
        bad = interior & ((det <= 0.0) | (a <= 0.0))
        idx = np.argwhere(bad)[0]
        raise ConvexityError("Hessian singular or indefinite",
                             (int(idx[0]), int(idx[1])),
                             (float(g.x[idx[0], idx[1]]), float(g.y[idx[0], idx[1]])))
    fvals = prob.f_values(u.values)
    if np.any(fvals[interior] <= 0.0):
        raise SolveError("prescription f non-positive on the grid")
    res = np.empty(g.shape)
    g2 = (gh.grad ** 2).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        res_int = (np.log(np.where(det > 0.0, det, 1.0))
                   - 0.5 * (N_DIM + 2) * np.log1p(g2)
                   - np.log(fvals))
    res[:] = np.where(interior, res_int, 0.0)
    res[0, :] = u.values[0, :] - prob.dirichlet_inner
    res[-1, :] = u.values[-1, :] - prob.dirichlet_outer
    return ScalarField(g, res)


def evaluate_jacobian_action(u: ScalarField, w: ScalarField,
                             prob: CompactProblem) -> ScalarField:
    """Directional derivative of the residual: L w - (f_z/f) w inside, w on the
    boundary rows."""
    g = prob.grid
    ghu = differentiate(u)
    inv = inverse_hessian(u, ghu)
    ghw = differentiate(w)
    second = (inv * ghw.hess).sum(axis=(-2, -1))
    g2 = (ghu.grad ** 2).sum(axis=-1)
    first = (ghu.grad * ghw.grad).sum(axis=-1)
    fvals = prob.f_values(u.values)
    fz = prob.fz_values(u.values)
    out = second - (N_DIM + 2) / (1.0 + g2) * first - fz / fvals * w.values
    out[0, :] = w.values[0, :]
    out[-1, :] = w.values[-1, :]
    return ScalarField(g, out)


def _assemble_jacobian(u: ScalarField, prob: CompactProblem) -> sp.csr_matrix:
    """Exact sparse Jacobian of the discrete residual in grid ordering."""
    g = prob.grid
    ops = annulus_ops(g)
    ghu = differentiate(u)
    inv = inverse_hessian(u, ghu)
    ixx = inv[..., 0, 0].ravel()
    ixy = inv[..., 0, 1].ravel()
    iyy = inv[..., 1, 1].ravel()
    gx = ghu.grad[..., 0].ravel()
    gy = ghu.grad[..., 1].ravel()
    kap = (N_DIM + 2) / (1.0 + gx * gx + gy * gy)
    sx, sy, tx, ty = ops.sx, ops.sy, ops.tx, ops.ty
    # q_kl = xi_k^T Hinv xi_l with xi_s = (sx, sy), xi_t = (tx, ty)
    q_ss = ixx * sx * sx + 2.0 * ixy * sx * sy + iyy * sy * sy
    q_st = ixx * sx * tx + ixy * (sx * ty + sy * tx) + iyy * sy * ty
    q_tt = ixx * tx * tx + 2.0 * ixy * tx * ty + iyy * ty * ty
    a_dss = q_ss
    a_dst = 2.0 * q_st
    a_dtt = q_tt
    a_ds = (-q_ss * ops.P["ss"] - 2.0 * q_st * ops.P["st"] - q_tt * ops.P["tt"]
            - kap * (gx * sx + gy * sy))
    a_dt = (-q_ss * ops.Q["ss"] - 2.0 * q_st * ops.Q["st"] - q_tt * ops.Q["tt"]
            - kap * (gx * tx + gy * ty))
    fvals = prob.f_values(u.values).ravel()
    fz = prob.fz_values(u.values).ravel()
    a_id = -fz / fvals

    mask = g.interior_mask().ravel().astype(float)
    bdry = 1.0 - mask

    def rows(coef, D):
        return sp.diags(coef * mask) @ D

    J = (rows(a_dss, ops.Dss) + rows(a_dst, ops.Dst) + rows(a_dtt, ops.Dtt)
         + rows(a_ds, ops.Ds) + rows(a_dt, ops.Dt)
         + sp.diags(a_id * mask + bdry))

    # roundoff floor of the log-residual: the cancellation noise of the
    # finite-difference stencils propagated through the same coefficients
    hs = 1.0 / g.N_r
    ht = 2.0 * np.pi / g.N_theta
    eps_u = 4.0 * np.finfo(float).eps * float(np.abs(u.values).max())
    per_node = (np.abs(a_dss) / hs ** 2 + np.abs(a_dst) / (hs * ht)
                + np.abs(a_dtt) / ht ** 2
                + 0.5 * (np.abs(a_ds) / hs + np.abs(a_dt) / ht))
    noise_floor = eps_u * float(per_node[mask > 0.0].max())
    return J.tocsc(), noise_floor


def _min_eig(gh: GradHess) -> float:
    return float(hessian_min_eig(gh.hess).min())


def _newton_loop(u0: ScalarField, prob: CompactProblem, tol_newton: float,
                 conv_floor: float, report: ConvergenceReport) -> ScalarField:
    """Damped Newton iteration; raises SolveError('stagnation') on line-search
    failure so the caller can switch to continuation.

    The convergence test widens to the measured roundoff floor of the
    log-residual when tol_newton lies below it (the floor grows with the
    domain because the stencil cancellation noise is divided by the smallest
    Hessian eigenvalue); the effective tolerance is recorded in the report.
    """
    g = prob.grid
    u = u0
    gh = differentiate(u)
    me = _min_eig(gh)
    if me < conv_floor:
        raise ConvexityError(
            f"initial iterate not strictly convex (min eig {me:.3e} < {conv_floor:.1e})")
    res = evaluate_residual(u, prob, gh)
    rnorm = float(np.abs(res.values).max())
    report.record(rnorm, 1.0, me)
    for _ in range(MAX_NEWTON):
        J, noise_floor = _assemble_jacobian(u, prob)
        tol_eff = max(tol_newton, noise_floor)
        report.tol_effective = max(report.tol_effective, tol_eff)
        if rnorm <= tol_eff:
            report.status = "converged"
            return u
        delta = splu(J).solve(-res.values.ravel()).reshape(g.shape)
        alpha = 1.0
        accepted = False
        while alpha >= MIN_ALPHA:
            trial_vals = u.values + alpha * delta
            # keep boundary rows exact
            trial_vals[0, :] = prob.dirichlet_inner
            trial_vals[-1, :] = prob.dirichlet_outer
            trial = ScalarField(g, trial_vals)
            gh_t = differentiate(trial)
            me_t = _min_eig(gh_t)
            if me_t >= conv_floor:
                try:
                    res_t = evaluate_residual(trial, prob, gh_t)
                except (ConvexityError, SolveError):
                    alpha *= 0.5
                    continue
                rnorm_t = float(np.abs(res_t.values).max())
                if rnorm_t <= (1.0 - 0.25 * alpha) * rnorm or rnorm_t <= tol_eff:
                    u, res, rnorm, me = trial, res_t, rnorm_t, me_t
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            report.status = "stagnated"
            raise SolveError("line search stagnation", report)
        report.record(rnorm, alpha, me)
        logger.debug("newton it=%d res=%.3e alpha=%.3g mineig=%.3e",
                     report.iterations, rnorm, alpha, me)
    report.status = "max_iterations"
    raise SolveError(f"Newton did not converge in {MAX_NEWTON} iterations", report)


class _BlendedF:
    """(1-t) * f_w(x) + t * f(x, z) along the continuation path."""

    def __init__(self, f_w: np.ndarray, f, grid: AnnulusGrid, t: float):
        self.f_w = f_w
        self.f = f
        self.grid = grid
        self.t = t

    def value(self, r, theta, z):
        return (1.0 - self.t) * self.f_w + self.t * self.f.value(r, theta, z)

    def dz(self, r, theta, z):
        return self.t * self.f.dz(r, theta, z)


def _check_comparison(u: np.ndarray, floor: np.ndarray, tol_cmp: float,
                      what: str):
    gap = float((u - floor).min())
    if gap < -tol_cmp:
        raise SolveError(f"discrete comparison violated: min({what}) = {gap:.3e} "
                         f"< -tol_cmp = {-tol_cmp:.3e}")


def default_tol_cmp(grid: AnnulusGrid) -> float:
    return 1e-8 + 10.0 * grid.max_spacing() ** 2


def solve_dirichlet(prob: CompactProblem, tol_newton: float = DEFAULT_TOL_NEWTON,
                    conv_floor: float = DEFAULT_CONV_FLOOR,
                    tol_cmp: float | None = None,
                    check_subsolution: bool = True):
    """Solve the compact Dirichlet problem.

    The start must be a discrete subsolution (checked unless the problem is
    flagged as glued, whose start is the smoothed maximum instead).  On line
    search stagnation the solver automatically switches to the continuation
    fallback from (init, K[init]).  Returns (solution, ConvergenceReport).
    """
    if tol_cmp is None:
        tol_cmp = default_tol_cmp(prob.grid)
    if check_subsolution and not prob.init_is_glued:
        rep = verify_subsolution(prob.init, prob.f, conv_floor=conv_floor)
        if not rep.passed:
            raise SubsolutionError(
                "initial field is not a discrete subsolution "
                f"(min margin {rep.min_margin:.3e}, min eig {rep.min_eig:.3e}); "
                "refusing to start Newton")
    report = ConvergenceReport()
    try:
        u = _newton_loop(prob.init, prob, tol_newton, conv_floor, report)
    except SolveError as exc:
        if report.status != "stagnated":
            raise
        logger.info("Newton stagnated (%s); switching to continuation", exc)
        return homotopy_solve(prob, prob.init, tol_newton=tol_newton,
                              conv_floor=conv_floor, tol_cmp=tol_cmp)
    _check_comparison(u.values, prob.init.values, tol_cmp, "u - init")
    return u, report


def homotopy_solve(prob: CompactProblem, w: ScalarField,
                   tol_newton: float = DEFAULT_TOL_NEWTON,
                   conv_floor: float = DEFAULT_CONV_FLOOR,
                   tol_cmp: float | None = None,
                   dt_init: float = 0.25, t_min_step: float = 1e-4):
    """Continuation from the manufactured problem K[u] = K[w] to the target f.

    Requires w strictly convex and matching the Dirichlet data.  When the
    manufactured prescription K[w] is not strictly below f(x, w) a preliminary
    solve with a reduced prescription replaces w, after which the blend
    (1-t) f_w + t f increases monotonically in t and so do the iterates.
    """
    from .fields import gauss_curvature

    g = prob.grid
    if tol_cmp is None:
        tol_cmp = default_tol_cmp(g)
    if (np.abs(w.values[0] - prob.dirichlet_inner).max() > 1e-12 or
            np.abs(w.values[-1] - prob.dirichlet_outer).max() > 1e-12):
        raise SolveError("continuation start must match the Dirichlet data")
    interior = g.interior_mask()
    report = ConvergenceReport()

    f_w = gauss_curvature(w).values
    if np.any(f_w[interior] <= 0.0):
        raise ConvexityError("continuation start has non-positive curvature")
    f_at_w = prob.f_values(w.values)
    if np.any(f_w[interior] >= f_at_w[interior]):
        # preliminary solve with a reduced prescription keeps w a subsolution
        factor = 0.5 * float((f_at_w[interior] / f_w[interior]).min())
        logger.info("continuation pre-solve with reduction factor %.3g", factor)
        small = _BlendedF(factor * f_w, prob.f, g, 0.0)
        pre = CompactProblem(g, small, prob.dirichlet_inner, prob.dirichlet_outer,
                             w, init_is_glued=True)
        w = _newton_loop(w, pre, tol_newton, conv_floor, report)
        report.homotopy_steps.append(0.0)
        f_w = factor * f_w  # the prescription the replacement w solves

    floor = w.values.copy()
    u = w
    t = 0.0
    dt = dt_init
    successes = 0
    while t < 1.0:
        t_try = min(1.0, t + dt)
        blended = _BlendedF(f_w, prob.f, g, t_try)
        step_prob = CompactProblem(g, blended, prob.dirichlet_inner,
                                   prob.dirichlet_outer, u, init_is_glued=True)
        step_report = ConvergenceReport()
        try:
            u_new = _newton_loop(u, step_prob, tol_newton, conv_floor, step_report)
        except (SolveError, ConvexityError):
            dt *= 0.5
            successes = 0
            if dt < t_min_step:
                report.status = f"homotopy step underflow at t = {t:.6g}"
                raise SolveError(
                    f"continuation step size underflow below {t_min_step} "
                    f"(last good t = {t:.6g})", report)
            continue
        _check_comparison(u_new.values, u.values, tol_cmp, "u^t' - u^t")
        _check_comparison(u_new.values, floor, tol_cmp, "u^t - w")
        u = u_new
        t = t_try
        report.homotopy_steps.append(t)
        report.iterations += step_report.iterations
        report.residual_history.extend(step_report.residual_history)
        report.damping_history.extend(step_report.damping_history)
        report.min_eig_history.extend(step_report.min_eig_history)
        successes += 1
        if successes >= 2:
            dt = min(1.5 * dt, 1.0)
            successes = 0
    report.status = "converged"
    return u, report
