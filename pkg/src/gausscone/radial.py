"""Radially symmetric solver for any dimension n: the independent oracle.

For u = u(r) the graph curvature reduces through det D2u = u'' (u'/r)^(n-1) to

    K = p' (p/r)^(n-1) (1 + p^2)^(-(n+2)/2),     p = u' > 0,

so K = f(r) separates:  dG(p) = f(r) r^(n-1) dr  with

    G(p) = integral_0^p q^(n-1) (1+q^2)^(-(n+2)/2) dq
         = (1/n) * (p^2 / (1+p^2))^(n/2),

which is invertible in closed form.  A convex radial graph exists iff the
cumulative curvature mass stays below G(inf) = 1/n (for n = 2 this is the
familiar total mass 1/2).  The outer boundary value is matched by bisection
on the shooting parameter p0 = p(rho1); u(R; p0) is strictly increasing in
p0 because G is strictly increasing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import RadialSolveError
from .grid import RadialGrid, build_radial_grid

MAX_BISECT = 200


def mass_integrand(p: float, n: int) -> float:
    return p ** (n - 1) * (1.0 + p * p) ** (-(n + 2) / 2.0)


def G(p, n: int):
    """Curvature mass required to raise the slope from 0 to p."""
    p = np.asarray(p, dtype=float)
    return (p * p / (1.0 + p * p)) ** (n / 2.0) / n


def G_inv(g, n: int):
    """Inverse of G on [0, 1/n)."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0.0) or np.any(g >= 1.0 / n):
        raise RadialSolveError(
            f"curvature mass out of range [0, 1/{n}) for dimension n={n}")
    t2 = (n * g) ** (2.0 / n)
    return np.sqrt(t2 / (1.0 - t2))


@dataclass
class RadialProfile:
    """Radial solution: heights u, slopes p = u' and the shooting parameter."""

    grid: RadialGrid
    u: np.ndarray
    p: np.ndarray
    p0: float

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p <= 0.0):
            raise RadialSolveError("slope p must be positive (strict convexity)")
        if np.any(np.diff(self.p) < -1e-13 * max(1.0, np.abs(self.p).max())):
            raise RadialSolveError("slope p must be nondecreasing")
        if np.any(np.diff(self.u) <= 0.0):
            raise RadialSolveError("heights u must be increasing")
        self.u.setflags(write=False)
        self.p.setflags(write=False)


def radial_curvature(profile: RadialProfile) -> np.ndarray:
    """Nodal Gauss curvature from p and its finite-difference derivative."""
    g = profile.grid
    p = profile.p
    dp = np.gradient(p, g.nodes, edge_order=2)
    return (dp * (p / g.nodes) ** (g.n - 1)
            * (1.0 + p * p) ** (-(g.n + 2) / 2.0))


def _as_radial_callable(f):
    """Accept a callable f(r) or f(r, u) or a radial FSpec; returns (f(r, u), z_dep)."""
    if hasattr(f, "value"):
        z_dep = bool(getattr(f, "z_dependent", True))
        return (lambda r, u: f.value(r, 0.0, u)), z_dep
    try:
        f(1.0)
        return (lambda r, u: f(r)), False
    except TypeError:
        return f, True


def _cumulative_mass(fr, nodes: np.ndarray, n: int, quad_tol: float) -> np.ndarray:
    """F(r_i) = integral_{rho1}^{r_i} f(t) t^(n-1) dt by adaptive quadrature."""
    F = np.zeros(nodes.size)
    for i in range(1, nodes.size):
        piece, _ = quad(lambda t: fr(t) * t ** (n - 1), nodes[i - 1], nodes[i],
                        epsabs=quad_tol, epsrel=1e-12)
        F[i] = F[i - 1] + piece
    return F


def solve_radial_bvp(f, rho1: float, R: float, u_inner: float, u_outer: float,
                     N: int, n: int = 2, stretching: str = "geometric",
                     tol_shoot: float | None = None,
                     quad_tol: float = 1e-12) -> RadialProfile:
    """Solve K[u] = f with u(rho1) = u_inner, u(R) = u_outer, u radial convex.

    f may be a callable f(r), a callable f(r, u), or a radial FSpec; height
    dependence is handled by an outer fixed-point loop (one pass when f does
    not depend on u).  Raises RadialSolveError when the curvature mass exceeds
    the headroom G(inf) - G(0) = 1/n (no convex radial graph exists) or when
    the target boundary value cannot be bracketed.
    """
    if u_outer <= u_inner:
        raise RadialSolveError(
            f"boundary values incompatible with p > 0: u_outer = {u_outer} "
            f"<= u_inner = {u_inner}")
    if tol_shoot is None:
        tol_shoot = 1e-10 * (u_outer - u_inner)
    grid = build_radial_grid(n, rho1, R, N, stretching)
    nodes = grid.nodes
    fru, z_dep = _as_radial_callable(f)
    u_prev = np.linspace(u_inner, u_outer, N + 1)
    headroom = 1.0 / n

    for _ in range(50):
        uv = u_prev

        def fr(r, uv=uv):
            return float(fru(r, np.interp(r, nodes, uv)))

        F = _cumulative_mass(fr, nodes, n, quad_tol)
        if F[-1] >= headroom:
            raise RadialSolveError(
                "radial solvability exceeded: curvature mass "
                f"{F[-1]:.6g} >= G(inf) - G(0) = {headroom:.6g}")

        def heights(p0: float):
            p = G_inv(G(p0, n) + F, n)
            u = np.empty(N + 1)
            u[0] = u_inner
            u[1:] = u_inner + np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(nodes))
            return u, p

        # largest reachable outer value: the profile with vertical slope at
        # the rim; its height integral is finite (inverse square root
        # singularity), evaluated with the substitution r = R - s^2 so the
        # integrand is bounded
        def p_at_limit(r):
            gval = headroom - (F[-1] - np.interp(r, nodes, F))
            gval = min(max(gval, 0.0), headroom * (1.0 - 1e-15))
            return float(G_inv(gval, n))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            u_max = u_inner + quad(lambda s: 2.0 * s * p_at_limit(R - s * s),
                                   0.0, np.sqrt(R - rho1), limit=200,
                                   epsabs=1e-9, epsrel=1e-9)[0]
        if u_outer >= u_max - tol_shoot:
            raise RadialSolveError(
                f"non-bracketing shooting interval: u_outer = {u_outer:.6g} "
                f"is at or above the maximal height {u_max:.6g} of a convex "
                "radial graph with this curvature mass")

        # bracket the shooting parameter
        g_max = (headroom - F[-1]) * (1.0 - 1e-13)
        p_hi = float(G_inv(g_max, n))
        p_lo = 1e-12
        u_lo, _ = heights(p_lo)
        u_hi, _ = heights(p_hi)
        if u_lo[-1] > u_outer + tol_shoot:
            raise RadialSolveError(
                "non-bracketing shooting interval: even p0 -> 0 overshoots "
                f"u(R) = {u_lo[-1]:.6g} > u_outer = {u_outer:.6g}")
        if u_hi[-1] < u_outer - tol_shoot:
            raise RadialSolveError(
                "non-bracketing shooting interval: largest admissible p0 gives "
                f"u(R) = {u_hi[-1]:.6g} < u_outer = {u_outer:.6g} "
                "(curvature mass leaves no slope headroom)")
        for _ in range(MAX_BISECT):
            p_mid = 0.5 * (p_lo + p_hi)
            u_mid, p_arr = heights(p_mid)
            err = u_mid[-1] - u_outer
            if abs(err) <= tol_shoot:
                break
            if err > 0.0:
                p_hi = p_mid
            else:
                p_lo = p_mid
        else:
            raise RadialSolveError(
                f"bisection did not reach tol_shoot = {tol_shoot:.3g} "
                f"within {MAX_BISECT} iterations")

        converged = (not z_dep or
                     np.max(np.abs(u_mid - u_prev)) <= 1e-12 * max(1.0, abs(u_outer)))
        u_prev = u_mid
        if converged:
            break
    else:
        raise RadialSolveError("height fixed-point iteration did not converge")
    return RadialProfile(grid=grid, u=u_prev, p=p_arr, p0=float(p_mid))


def profile_to_field(profile: RadialProfile, grid) -> "ScalarField":
    """Lift a radial profile onto an annulus grid (cubic in log r)."""
    from scipy.interpolate import CubicSpline
    from .fields import ScalarField
    spline = CubicSpline(np.log(profile.grid.nodes), profile.u)
    return ScalarField(grid, spline(np.log(grid.r)))


def profile_interp(profile: RadialProfile, r) -> np.ndarray:
    """Evaluate the profile heights at arbitrary radii (cubic in log r)."""
    from scipy.interpolate import CubicSpline
    spline = CubicSpline(np.log(profile.grid.nodes), profile.u)
    return spline(np.log(np.asarray(r, dtype=float)))
