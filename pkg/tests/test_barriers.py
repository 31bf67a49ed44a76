import numpy as np
import pytest
from scipy.integrate import quad

from gausscone import (ExplicitSubsolution, FSpec, GlueError, GluedSubsolution,
                       ScalarField, SubsolutionError, build_annulus_grid,
                       glue_max, subsolution_curvature, subsolution_eval,
                       supersolution_eval, verify_subsolution)
from gausscone.barriers import masked_max
from gausscone.fields import differentiate, hessian_min_eig

PARAM_GRID = [(n, rho1, a) for n in (2, 3, 4) for rho1 in (0.5, 1.0, 2.0)
              for a in (2.5, 3.0, 4.0)]


def psi_by_quadrature(r, rho1, a):
    """Independent oracle: the defining double integral, both levels by
    adaptive quadrature."""
    def inner(rho):
        val, _ = quad(lambda t: 0.5 * (a - 1) * rho1 ** (a - 1) * t ** (-a),
                      rho, np.inf, epsabs=1e-13, epsrel=1e-11)
        return val
    val, _ = quad(inner, rho1, r, limit=200, epsabs=1e-13, epsrel=1e-11)
    return -val


class TestSupersolution:
    def test_point_values(self):
        val, grad, hess = supersolution_eval(np.array([2.0, 0.0]), L=1.0)
        assert val == pytest.approx(3.0)
        assert np.allclose(grad, [1.0, 0.0])

    def test_cone_hessian(self):
        _, _, hess = supersolution_eval(np.array([2.0, 0.0]), L=1.0)
        assert np.allclose(hess, np.diag([0.0, 0.5]))

    def test_curvature_vanishes(self):
        # det of the cone Hessian is zero: rank n-1
        _, _, hess = supersolution_eval(np.array([1.3, 2.1]), L=0.5)
        assert abs(np.linalg.det(hess)) < 1e-15

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            supersolution_eval(np.zeros(2), L=1.0)


class TestExplicitSubsolution:
    def test_requires_a_greater_than_two(self):
        with pytest.raises(SubsolutionError, match="a > 2"):
            ExplicitSubsolution(rho1=1.0, a=2.0)

    def test_total_slope_deficit(self, subsolution):
        # -psi'(rho1) equals the full integral of the curvature profile, 1/2
        _, _, psi_p, _ = subsolution_eval(1.0, subsolution)
        assert psi_p == pytest.approx(-0.5, abs=1e-15)

    def test_value_at_two(self, subsolution):
        val, psi, _, _ = subsolution_eval(2.0, subsolution)
        assert psi == pytest.approx(-0.25, abs=1e-15)
        assert val == pytest.approx(0.75, abs=1e-15)

    def test_phi_at_one(self, subsolution):
        _, _, _, phi = subsolution_eval(1.0, subsolution)
        assert phi == pytest.approx(1.0, abs=1e-15)

    def test_radius_below_rho1(self, subsolution):
        with pytest.raises(SubsolutionError):
            subsolution_eval(0.5, subsolution)

    @pytest.mark.parametrize("n,rho1,a", PARAM_GRID)
    def test_psi_matches_quadrature(self, n, rho1, a):
        sub = ExplicitSubsolution(rho1=rho1, a=a, n=n)
        for r in np.geomspace(rho1, 50 * rho1, 7):
            expect = psi_by_quadrature(r, rho1, a)
            assert sub.psi(r) == pytest.approx(expect, rel=1e-8, abs=1e-12)
            inner, _ = quad(lambda t: sub.phi(t), r, np.inf,
                            epsabs=1e-13, epsrel=1e-11)
            assert sub.psi_prime(r) == pytest.approx(-inner, rel=1e-8)

    @pytest.mark.parametrize("n,rho1,a", PARAM_GRID)
    def test_psi_prime_range(self, n, rho1, a):
        sub = ExplicitSubsolution(rho1=rho1, a=a, n=n)
        r = np.geomspace(rho1, 1e3 * rho1, 200)
        neg_slope = -sub.psi_prime(r)
        assert np.all(neg_slope >= 0.0)
        assert np.all(neg_slope <= 0.5 + 1e-15)

    def test_curvature_spot_value(self, subsolution):
        kappa, bound = subsolution_curvature(1.0, subsolution)
        assert kappa == pytest.approx(0.32, abs=1e-15)
        assert bound == pytest.approx(0.125, abs=1e-15)
        assert kappa >= bound

    def test_curvature_tail_limit(self, subsolution):
        # K * r^(n-1+a) -> (a-1)/2 * rho1^(a-1) * 2^(-(n+2)/2) as psi' -> 0
        r = 1e8
        kappa, _ = subsolution_curvature(r, subsolution)
        expect = 1.0 * 2.0 ** -2.0
        assert kappa * r ** 4 == pytest.approx(expect, rel=1e-6)

    @pytest.mark.parametrize("n,rho1,a", PARAM_GRID)
    def test_curvature_dominates_bound(self, n, rho1, a):
        sub = ExplicitSubsolution(rho1=rho1, a=a, n=n)
        r = np.geomspace(rho1, 1e3 * rho1, 10_000)
        kappa, bound = subsolution_curvature(r, sub)
        assert np.all(kappa - bound >= -1e-12)

    def test_decay_conditions(self, subsolution):
        # r |D(u - r)| and r^2 (|D2(u - r)| + |D3 u|) stay bounded
        r = np.geomspace(1.0, 1e3, 2000)
        first = r * np.abs(subsolution.psi_prime(r))
        assert first.max() <= 0.5 + 1e-12
        # second-derivative deviation from the cone: radial part phi,
        # tangential part |psi'|/r; third derivative bounded by |phi'| terms
        second = r ** 2 * (subsolution.phi(r) + np.abs(subsolution.psi_prime(r)) / r)
        third = r ** 2 * (3.0 * subsolution.phi(r) / r * 2.0)
        assert second.max() < 10.0
        assert third.max() < 10.0


class TestVerifySubsolution:
    def test_explicit_passes_against_bound(self, subsolution, f_radial):
        g = build_annulus_grid(1.0, 16.0, 96, 32)
        rep = verify_subsolution(subsolution.field_on(g), f_radial)
        assert rep.passed
        assert rep.min_margin > 0.0

    def test_cone_fails(self, f_radial):
        g = build_annulus_grid(1.0, 16.0, 96, 32)
        cone = ScalarField(g, np.hypot(g.x, g.y))
        rep = verify_subsolution(cone, f_radial)
        assert not rep.passed

    def test_paraboloid_on_small_annulus(self):
        # K[|x|^2/2] = (1+r^2)^-2 >= 0.04 > 0.01 on [1, 2]
        g = build_annulus_grid(1.0, 2.0, 64, 32)
        u = ScalarField(g, 0.5 * (g.x ** 2 + g.y ** 2))
        f = FSpec("radial_power", n=2, amplitude=0.01, exponent=3.0)
        rep = verify_subsolution(u, f)
        assert rep.passed


def quadratic_field(grid, alpha, offset=0.0):
    return ScalarField(grid, alpha * (grid.r ** 2 - 1.0) + offset)


class TestGlueMax:
    @pytest.fixture(scope="class")
    def grid(self):
        return build_annulus_grid(1.0, 8.0, 96, 32)

    def test_degenerate_equal_fields_rejected(self, grid):
        u = quadratic_field(grid, 0.2)
        g = GluedSubsolution(u1=u, u2=u, r1_out=2.0, r2_in=1.2)
        with pytest.raises(GlueError, match="ordering"):
            glue_max(g)

    def test_spec_counterexample_rejected_with_inequality(self, grid):
        # u1 = |x|^2/2 vs u2 = |x| - 0.4 on {r<1.6} / {r>1.2}:
        # at the Omega_1 rim, u1(1.6) = 1.28 >= u2(1.6) = 1.2
        u1 = ScalarField(grid, 0.5 * grid.r ** 2)
        u2 = ScalarField(grid, grid.r - 0.4)
        g = GluedSubsolution(u1=u1, u2=u2, r1_out=1.6, r2_in=1.2)
        with pytest.raises(GlueError) as err:
            glue_max(g)
        assert "u1 < u2" in str(err.value)
        assert "1.28" in str(err.value)

    def test_valid_configuration(self, grid, subsolution):
        u1 = quadratic_field(grid, 0.2)
        u2 = ScalarField(grid, subsolution.value(grid.r) - 0.1)
        g = GluedSubsolution(u1=u1, u2=u2, r1_out=2.0, r2_in=1.2)
        w = glue_max(g)
        hard = masked_max(g)
        assert np.all(w.values >= hard - 1e-12)
        assert np.array_equal(w.values[0], hard[0])
        assert np.array_equal(w.values[-1], hard[-1])
        min_eig = hessian_min_eig(differentiate(w).hess).min()
        assert min_eig >= 1e-8

    def test_swapped_ordering_rejected(self, grid, subsolution):
        # ordering holds at neither rim once the shift is too large
        u1 = quadratic_field(grid, 0.2)
        u2 = ScalarField(grid, subsolution.value(grid.r) + 5.0)
        g = GluedSubsolution(u1=u1, u2=u2, r1_out=2.0, r2_in=1.2)
        with pytest.raises(GlueError, match="u2 < u1"):
            glue_max(g)

    def test_overlap_required(self, grid):
        u = quadratic_field(grid, 0.2)
        with pytest.raises(GlueError, match="overlap"):
            GluedSubsolution(u1=u, u2=u, r1_out=1.2, r2_in=2.0)
