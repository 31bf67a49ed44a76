"""Exterior solve by compact approximation: an increasing schedule of outer
radii, monotonicity and barrier-sandwich checks at every stage, and the limit
extracted on a fixed observation window.

Outer Dirichlet data always come from the lower barrier, so consecutive
solutions increase pointwise (up to discretization error) and are squeezed
between the barrier and the shifted cone.  The window restriction of the last
stage approximates the exterior solution; the max difference of consecutive
stages on the window is the convergence surrogate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .barriers import ExplicitSubsolution
from .compact import (CompactProblem, ConvergenceReport, default_tol_cmp,
                      solve_dirichlet)
from .errors import ConfigError, SolveError
from .fields import ScalarField
from .grid import AnnulusGrid, build_annulus_grid
from .problem import ProblemSpec

logger = logging.getLogger(__name__)


@dataclass
class StageReport:
    """Checks attached to one compact solve of the schedule."""

    R: float
    grid_shape: tuple[int, int]
    solve: ConvergenceReport
    sandwich_lower_gap: float = math.nan   # min(u - lower barrier)
    sandwich_upper_gap: float = math.nan   # min(cone + L - u)
    sandwich_ok: bool = False
    monotone_gap: float = math.nan         # min(u_k+1 - u_k) on previous nodes
    monotone_ok: bool = True
    cauchy_error: float = math.nan         # window difference to previous stage

    def to_dict(self) -> dict:
        return {"R": self.R, "grid_shape": list(self.grid_shape),
                "solve": self.solve.to_dict(),
                "sandwich_lower_gap": self.sandwich_lower_gap,
                "sandwich_upper_gap": self.sandwich_upper_gap,
                "sandwich_ok": self.sandwich_ok,
                "monotone_gap": self.monotone_gap,
                "monotone_ok": self.monotone_ok,
                "cauchy_error": self.cauchy_error}


@dataclass
class WindowField:
    """Solution restricted to the observation annulus (rows of the base grid)."""

    r: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    source_R: float


@dataclass
class ExteriorRun:
    """Schedule of compact problems sharing one ProblemSpec.

    The radial node count grows like log(R) so the spacing near the inner
    boundary is R-independent; the angle count is fixed so window nodes are
    shared across stages.
    """

    problem: ProblemSpec
    schedule: list[float]
    window: float
    n_r_base: int = 96
    n_theta: int = 64
    tol_window: float = 1e-4
    tol_newton: float = 1e-8
    conv_floor: float = 1e-8
    tol_cmp: float | None = None
    stretching: str = "geometric"
    solutions: list[ScalarField] = field(default_factory=list)
    reports: list[StageReport] = field(default_factory=list)

    def __post_init__(self):
        self.schedule = [float(R) for R in self.schedule]
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ConfigError("schedule of outer radii must be strictly increasing")
        R0 = self.problem.R0
        if self.schedule[0] <= 4.0 * R0:
            raise ConfigError(
                f"base radius must exceed 4*R0 = {4.0 * R0} (inner set inside B_R0), "
                f"got {self.schedule[0]}")
        if not (0.0 < self.window <= self.schedule[0] / 2.0):
            raise ConfigError(
                f"window W must satisfy 0 < W <= R_base/2 = {self.schedule[0] / 2.0}")

    def n_r_for(self, R: float) -> int:
        rho = self.problem.rho_samples.min()
        base = self.schedule[0]
        if self.stretching == "geometric":
            scale = math.log(R / rho) / math.log(base / rho)
        else:
            scale = (R - rho) / (base - rho)
        return max(self.n_r_base, int(round(self.n_r_base * scale)))

    def build_grid(self, R: float) -> AnnulusGrid:
        rho = self.problem.rho_at(
            2.0 * np.pi * np.arange(self.n_theta) / self.n_theta)
        return build_annulus_grid(rho, R, self.n_r_for(R), self.n_theta,
                                  self.stretching)

    def build_compact(self, grid: AnnulusGrid) -> CompactProblem:
        p = self.problem
        init = ScalarField(grid, p.subsolution_value(grid.r, grid.theta[None, :]))
        inner = init.values[0].copy()
        outer = init.values[-1].copy()
        return CompactProblem(grid, p.f, inner, outer, init)


def restrict_to_radii(u: ScalarField, r_target: np.ndarray) -> np.ndarray:
    """Evaluate an annulus field at per-angle radii (cubic in log r).

    The angles of the target must match the field's grid; only the radial
    coordinate is interpolated.
    """
    g = u.grid
    if r_target.shape[1] != g.N_theta:
        raise SolveError("window not covered: angle counts differ")
    if np.any(r_target > g.r[-1] + 1e-12) or np.any(r_target < g.r[0] - 1e-12):
        raise SolveError("window not covered by the solution grid")
    out = np.empty(r_target.shape)
    for j in range(g.N_theta):
        spline = CubicSpline(np.log(g.r[:, j]), u.values[:, j])
        out[:, j] = spline(np.log(r_target[:, j]))
    return out


def window_rows(grid: AnnulusGrid, W: float) -> int:
    """Number of base-grid rows whose radius stays within the window."""
    inside = np.max(grid.r, axis=1) <= W * (1.0 + 1e-12)
    count = int(np.sum(inside))
    if count < 2:
        raise SolveError(f"window W = {W} too small for the base grid")
    return count


def window_cauchy_error(run: ExteriorRun, k: int) -> float:
    """max over window nodes of |u^{R_{k+1}} - u^{R_k}|.

    Window nodes are the base-grid rows inside the observation annulus; the
    finer-stage solution is restricted to them by radial interpolation.
    """
    if k + 1 >= len(run.solutions):
        raise SolveError(f"need solutions for stages {k} and {k + 1}")
    base_grid = run.solutions[0].grid
    if run.window > run.solutions[k].grid.R or run.window > run.solutions[k + 1].grid.R:
        raise SolveError("window not covered by both grids")
    rows = window_rows(base_grid, run.window)
    r_win = base_grid.r[:rows]
    a = restrict_to_radii(run.solutions[k], r_win)
    b = restrict_to_radii(run.solutions[k + 1], r_win)
    return float(np.abs(b - a).max())


def solve_exterior(run: ExteriorRun):
    """Run the schedule; returns (WindowField, list of StageReports).

    Stops early once the window difference of consecutive stages drops below
    tol_window.  Monotonicity violations beyond tol_cmp raise, because the
    continuous comparison statement is exact and a violation flags a solver
    or discretization defect.
    """
    p = run.problem
    run.solutions.clear()
    run.reports.clear()
    prev: ScalarField | None = None
    for R in run.schedule:
        grid = run.build_grid(R)
        prob = run.build_compact(grid)
        tol_cmp = run.tol_cmp if run.tol_cmp is not None else default_tol_cmp(grid)
        u, conv = solve_dirichlet(prob, tol_newton=run.tol_newton,
                                  conv_floor=run.conv_floor, tol_cmp=tol_cmp)
        stage = StageReport(R=R, grid_shape=grid.shape, solve=conv)

        lower = p.subsolution_value(grid.r, grid.theta[None, :])
        upper = p.cone_upper(grid.r)
        stage.sandwich_lower_gap = float((u.values - lower).min())
        stage.sandwich_upper_gap = float((upper - u.values).min())
        stage.sandwich_ok = (stage.sandwich_lower_gap >= -tol_cmp
                             and stage.sandwich_upper_gap >= -tol_cmp)
        if not stage.sandwich_ok:
            logger.warning("sandwich violated at R=%g: lower %.3e upper %.3e",
                           R, stage.sandwich_lower_gap, stage.sandwich_upper_gap)

        if prev is not None:
            fine_on_prev = restrict_to_radii(u, prev.grid.r)
            stage.monotone_gap = float((fine_on_prev - prev.values).min())
            prev_tol = run.tol_cmp if run.tol_cmp is not None \
                else default_tol_cmp(prev.grid)
            stage.monotone_ok = stage.monotone_gap >= -prev_tol
            if not stage.monotone_ok:
                raise SolveError(
                    f"monotonicity in R violated between R={prev.grid.R:g} and "
                    f"R={R:g}: min(u_fine - u_coarse) = {stage.monotone_gap:.3e} "
                    f"< -{prev_tol:.3e} (discretization or solver defect)")

        run.solutions.append(u)
        run.reports.append(stage)
        if prev is not None:
            k = len(run.solutions) - 2
            stage.cauchy_error = window_cauchy_error(run, k)
            logger.info("R=%g window Cauchy error %.3e", R, stage.cauchy_error)
            if stage.cauchy_error <= run.tol_window:
                break
        prev = u

    base_grid = run.solutions[0].grid
    rows = window_rows(base_grid, run.window)
    r_win = base_grid.r[:rows]
    last = run.solutions[-1]
    window = WindowField(r=r_win, theta=base_grid.theta,
                         values=restrict_to_radii(last, r_win),
                         source_R=last.grid.R)
    return window, run.reports


def close_to_cone_gap(run: ExteriorRun) -> tuple[float, float]:
    """(sup |u - |x|| over the window, its barrier-implied bound).

    The sandwich lower <= u <= |x| + L caps |u - |x|| by
    max(L, sup |lower - |x||) up to the comparison tolerance.
    """
    base_grid = run.solutions[0].grid
    rows = window_rows(base_grid, run.window)
    r_win = base_grid.r[:rows]
    vals = restrict_to_radii(run.solutions[-1], r_win)
    sup = float(np.abs(vals - r_win).max())
    lower = run.problem.subsolution_value(r_win, base_grid.theta[None, :])
    bound = max(run.problem.L, float(np.abs(lower - r_win).max()))
    return sup, bound
