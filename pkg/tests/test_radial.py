import numpy as np
import pytest
from scipy.integrate import quad

from gausscone import (RadialSolveError, build_annulus_grid, gauss_curvature,
                       profile_to_field, radial_curvature, solve_radial_bvp)
from gausscone.radial import G, G_inv, mass_integrand


class TestMassFunction:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    @pytest.mark.parametrize("p", [0.1, 0.7746, 1.0, 3.0])
    def test_closed_form_matches_quadrature(self, n, p):
        expect, _ = quad(lambda q: mass_integrand(q, n), 0.0, p,
                         epsabs=1e-14)
        assert G(p, n) == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_inverse(self, n):
        p = np.array([0.05, 0.5, 1.0, 2.0, 10.0])
        assert np.abs(G_inv(G(p, n), n) - p).max() < 1e-10

    def test_headroom_n2(self):
        # total available curvature mass for n = 2 is exactly 1/2
        assert G(1e12, 2) == pytest.approx(0.5, rel=1e-10)


class TestRadialCurvature:
    def test_cone_zero(self):
        prof = solve_radial_bvp(lambda r: 1e-12 * r ** -4, 1.0, 8.0, 0.0,
                                7.0 - 1e-9, N=128)
        K = radial_curvature(prof)
        assert np.abs(K).max() < 1e-6

    def test_paraboloid_value(self):
        # manufacture u = r^2/2 via its curvature and boundary data
        f = lambda r: (1.0 + r * r) ** -2.0
        prof = solve_radial_bvp(f, 1.0, 2.0, 0.5, 2.0, N=512)
        assert np.abs(prof.u - 0.5 * prof.grid.nodes ** 2).max() < 1e-8
        K = radial_curvature(prof)
        i = int(np.argmin(np.abs(prof.grid.nodes - 1.0)))
        assert K[i] == pytest.approx(0.25, rel=1e-4)

    def test_matches_subsolution_closed_form(self, subsolution):
        prof = solve_radial_bvp(lambda r: subsolution.kappa(r), 1.0, 16.0,
                                0.0, float(subsolution.value(16.0)), N=1024)
        K = radial_curvature(prof)
        assert K[0] == pytest.approx(0.32, rel=5e-3)


class TestSolveRadialBVP:
    def test_recovers_explicit_subsolution(self, subsolution):
        prof = solve_radial_bvp(lambda r: subsolution.kappa(r), 1.0, 16.0,
                                0.0, float(subsolution.value(16.0)), N=4096)
        err = np.abs(prof.u - subsolution.value(prof.grid.nodes)).max()
        assert err <= 1e-6

    def test_mass_exceeded(self):
        # for n = 2 any radial f with integral f r dr >= 1/2 must fail
        f = lambda r: 2.0 * r ** -4          # mass = 2 * 1/2 * (1 - R^-2) -> ~1
        with pytest.raises(RadialSolveError, match="solvability exceeded"):
            solve_radial_bvp(f, 1.0, 16.0, 0.0, 15.5, N=256)

    def test_incompatible_boundary_values(self):
        with pytest.raises(RadialSolveError, match="incompatible"):
            solve_radial_bvp(lambda r: 0.1 * r ** -4, 1.0, 8.0, 1.0, 1.0, N=128)

    def test_target_above_reach(self):
        # outer value beyond the maximal height of a convex radial graph with
        # this curvature mass (~99.8 here): non-bracketing
        with pytest.raises(RadialSolveError, match="non-bracketing"):
            solve_radial_bvp(lambda r: 0.4 * r ** -4, 1.0, 8.0, 0.0, 120.0, N=256)

    def test_steep_but_reachable(self):
        # just below the maximal height the solve still succeeds
        prof = solve_radial_bvp(lambda r: 0.4 * r ** -4, 1.0, 8.0, 0.0, 50.0,
                                N=256)
        assert prof.u[-1] == pytest.approx(50.0, abs=1e-7)

    def test_monotone_in_shooting_parameter(self, f_radial):
        from gausscone.radial import _cumulative_mass, G, G_inv
        from gausscone import build_radial_grid
        grid = build_radial_grid(2, 1.0, 16.0, 256)
        F = _cumulative_mass(lambda r: f_radial.value(r, 0.0, 0.0),
                             grid.nodes, 2, 1e-12)

        def u_outer(p0):
            p = G_inv(G(p0, 2) + F, 2)
            return np.trapezoid(p, grid.nodes)

        p0s = np.linspace(0.05, 0.9, 12)
        values = [u_outer(p) for p in p0s]
        assert np.all(np.diff(values) > 0.0)

    def test_comparison_principle(self, subsolution):
        # larger prescription, same boundary data -> smaller solution
        f1 = lambda r: 0.05 * r ** -4
        f2 = lambda r: 0.125 * r ** -4
        out = float(subsolution.value(16.0))
        u1 = solve_radial_bvp(f1, 1.0, 16.0, 0.0, out, N=512)
        u2 = solve_radial_bvp(f2, 1.0, 16.0, 0.0, out, N=512)
        # both hit the outer value only to tol_shoot, so allow that slack
        assert np.all(u1.u - u2.u >= -1e-8)

    def test_height_dependent_prescription(self):
        # f increasing in z: the fixed point converges and stays solvable
        f = lambda r, u: 0.05 * r ** -4 * (1.0 + 0.3 * np.tanh(u))
        prof = solve_radial_bvp(f, 1.0, 8.0, 0.0, 6.8, N=512)
        K = radial_curvature(prof)
        expect = f(prof.grid.nodes, prof.u)
        inner = slice(2, -2)
        assert np.abs(K[inner] - expect[inner]).max() < 5e-4


def test_lift_consistency_with_2d_curvature(subsolution, f_radial):
    # lifting a radial profile onto the annulus and applying the 2D curvature
    # operator reproduces the radial reduction within 10 h^2
    prof = solve_radial_bvp(f_radial, 1.0, 8.0, 0.0,
                            float(subsolution.value(8.0)), N=2048)
    grid = build_annulus_grid(1.0, 8.0, 128, 64)
    lifted = profile_to_field(prof, grid)
    K2d = gauss_curvature(lifted).values
    K1d = np.interp(grid.r[:, 0], prof.grid.nodes, radial_curvature(prof))
    h2 = grid.max_spacing() ** 2
    inner = slice(1, -1)
    assert np.abs(K2d[inner, 0] - K1d[inner]).max() <= 10.0 * h2
