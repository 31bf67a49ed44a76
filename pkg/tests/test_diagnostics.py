import numpy as np
import pytest

from gausscone import (BoundaryFrame, ScalarField, build_annulus_grid,
                       c1_decay_audit, c2_boundary_audit, calibrate_theta_A,
                       fit_loglog_slope, interior_w_audit, theta_barrier_audit)
from gausscone.diagnostics import _ReadOnlyGuard


class TestLogLogFit:
    def test_exact_inverse_power(self):
        R = [8.0, 16.0, 32.0, 64.0]
        fit = fit_loglog_slope([(r, 3.0 / r) for r in R])
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert np.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)

    def test_inverse_sqrt(self):
        R = [8.0, 16.0, 32.0]
        fit = fit_loglog_slope([(r, 2.0 / np.sqrt(r)) for r in R])
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)

    def test_all_zero_trivial(self):
        fit = fit_loglog_slope([(8.0, 0.0), (16.0, 0.0), (32.0, 0.0)])
        assert fit.trivial

    def test_degenerate_radii(self):
        with pytest.raises(ValueError, match="degenerate"):
            fit_loglog_slope([(8.0, 1.0), (8.0, 2.0), (8.0, 3.0)])

    def test_too_few_pairs(self):
        with pytest.raises(ValueError, match="3"):
            fit_loglog_slope([(8.0, 1.0), (16.0, 0.5)])


class TestBoundaryFrame:
    def test_orthonormal(self):
        fr = BoundaryFrame(np.array([3.0, 4.0]))
        assert np.linalg.norm(fr.nu) == pytest.approx(1.0)
        assert fr.nu @ fr.tau == pytest.approx(0.0, abs=1e-15)
        assert fr.R == pytest.approx(5.0)

    def test_distance(self):
        fr = BoundaryFrame(np.array([8.0, 0.0]))
        assert fr.distance(6.0) == pytest.approx(2.0)


class TestModulatedAudits:
    def test_c1_slopes(self, modulated_run, subsolution):
        run, _, _ = modulated_run
        a_nu, a_tau = c1_decay_audit(run.solutions, subsolution)
        assert a_nu.passed and a_nu.slope <= -1.0 + 0.2
        assert a_tau.passed and a_tau.slope <= -0.5 + 0.15

    def test_c2_slopes(self, modulated_run, subsolution):
        run, _, _ = modulated_run
        a_tt, a_tn, a_nn = c2_boundary_audit(run.solutions, subsolution)
        assert a_tt.passed and a_tt.slope <= -2.0 + 0.3
        assert a_tn.passed and a_tn.slope <= -0.5 + 0.2
        assert a_nn.passed
        assert a_nn.sup_values[-1] <= 2.0 * a_nn.sup_values[0]

    def test_interior_max_boundary_dominated(self, modulated_run):
        run, _, _ = modulated_run
        for u in run.solutions:
            rep = interior_w_audit(u, beta=1.0)
            assert rep.passed
            assert rep.gap <= 0.5

    def test_theta_barrier(self, modulated_run, subsolution):
        run, _, _ = modulated_run
        u32 = next(u for u in run.solutions if u.grid.R == 32.0)
        j0 = u32.grid.N_theta // 8
        A = calibrate_theta_A(u32, subsolution, j0=j0)
        rep = theta_barrier_audit(u32, subsolution, j0=j0, A=A)
        assert rep.passed
        assert rep.theta_min_boundary >= -rep.tol
        assert rep.Theta_min_boundary >= -rep.tol
        assert rep.LTheta_max_interior <= rep.tol
        assert abs(rep.Theta_at_x0) <= rep.tol
        assert rep.theta_nu_x0 >= rep.T_nu_abs_x0 - rep.tol

    def test_shear_bound_scaled_sup_stable(self, modulated_run, subsolution):
        # sup |T(u - lower)| * sqrt(R) stays within a factor 2 across stages
        run, _, _ = modulated_run
        sups = []
        for u in run.solutions[1:]:
            j0 = u.grid.N_theta // 8
            rep = theta_barrier_audit(u, subsolution, j0=j0, A=1.0)
            sups.append(rep.T_sup_scaled)
        assert max(sups) <= 2.0 * min(sups) * 2.0  # pre-asymptotic slack

    def test_quadratic_rim_constant_stable(self, modulated_run, subsolution):
        run, _, _ = modulated_run
        consts = []
        for u in run.solutions[1:]:
            j0 = u.grid.N_theta // 8
            rep = theta_barrier_audit(u, subsolution, j0=j0, A=1.0)
            consts.append(rep.T_quad_constant)
        assert max(consts) <= 4.0 * min(consts)


class TestRadialSymmetry:
    def test_tangential_quantities_vanish(self, radial_run, subsolution):
        run, _, _ = radial_run
        _, a_tau = c1_decay_audit(run.solutions, subsolution)
        assert a_tau.trivial or max(a_tau.sup_values) <= 1e-10
        _, a_tn, _ = c2_boundary_audit(run.solutions, subsolution)
        assert a_tn.trivial or max(a_tn.sup_values) <= 1e-10

    def test_symmetry_within_truncation(self, radial_run, subsolution):
        run, _, _ = radial_run
        for u in run.solutions:
            h2 = u.grid.max_spacing() ** 2
            vals = u.values
            assert np.abs(vals - vals.mean(axis=1, keepdims=True)).max() <= 10 * h2


class TestExplicitFieldAudits:
    def test_paraboloid_interior_max(self):
        # w = beta r^2 / 2 + log(1): maximized at the outer boundary
        g = build_annulus_grid(1.0, 8.0, 64, 32)
        u = ScalarField(g, 0.5 * (g.x ** 2 + g.y ** 2))
        rep = interior_w_audit(u, beta=1.0)
        assert rep.passed
        assert rep.boundary_max > rep.interior_max

    def test_subsolution_boundary_dominated(self, subsolution):
        # largest Hessian eigenvalue (1 + psi')/r peaks on the inner row
        g = build_annulus_grid(1.0, 8.0, 64, 32)
        u = subsolution.field_on(g)
        rep = interior_w_audit(u, beta=1.0)
        assert rep.passed

    def test_tangential_rate_of_explicit_barrier(self, subsolution):
        # |u_tt - |x|_tt| = |psi'|/r decays like r^-2 for a = 3
        sups, radii = [], []
        for R in (8.0, 16.0, 32.0):
            g = build_annulus_grid(1.0, R, 128, 32)
            u = subsolution.field_on(g)
            from gausscone import differentiate
            gh = differentiate(u)
            i = g.N_r - 1
            tau = np.stack([-g.y[i] / g.r[i], g.x[i] / g.r[i]], axis=-1)
            u_tt = np.einsum("ja,jab,jb->j", tau, gh.hess[i], tau)
            sups.append(np.abs(u_tt - 1.0 / g.r[i]).max())
            radii.append(R)
        fit = fit_loglog_slope(list(zip(radii, sups)))
        assert fit.slope == pytest.approx(-2.0, abs=0.3)


class TestReadOnlyGuard:
    def test_detects_mutation(self):
        g = build_annulus_grid(1.0, 8.0, 16, 16)
        vals = np.hypot(g.x, g.y) ** 2
        u = ScalarField(g, vals)
        with pytest.raises(AssertionError, match="modified"):
            with _ReadOnlyGuard(u):
                u.values.setflags(write=True)
                u.values[0, 0] += 1.0

    def test_passes_untouched(self, radial_run, subsolution):
        run, _, _ = radial_run
        u = run.solutions[0]
        before = u.values.copy()
        c1_decay_audit(run.solutions, subsolution)
        c2_boundary_audit(run.solutions, subsolution)
        interior_w_audit(u)
        assert np.array_equal(u.values, before)
