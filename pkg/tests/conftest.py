"""Shared fixtures.  The expensive solves (full schedules, the fine
oracle-comparison grids) are session-scoped so the acceptance criteria and
the module tests share them."""

from __future__ import annotations

import numpy as np
import pytest

from gausscone import (ExplicitSubsolution, ExteriorRun, FSpec, ProblemSpec,
                       solve_exterior)

THEOREM_AMPLITUDE = 0.125          # (a-1) 2^(-3n/2-1) rho1^(a-1) for n=2, a=3
MODULATED_AMPLITUDE = 0.125 / 1.3  # keeps (1 + eps) * amplitude admissible


@pytest.fixture(scope="session")
def subsolution():
    return ExplicitSubsolution(rho1=1.0, a=3.0, n=2)


@pytest.fixture(scope="session")
def f_radial():
    return FSpec("radial_power", n=2, amplitude=THEOREM_AMPLITUDE, exponent=4.0)


@pytest.fixture(scope="session")
def f_modulated():
    return FSpec("angular_modulated", n=2, amplitude=MODULATED_AMPLITUDE,
                 exponent=4.0, eps=0.3, mode=2)


def _run(subsolution, f, schedule=(8.0, 16.0, 32.0, 64.0)):
    problem = ProblemSpec(n=2, rho_samples=np.array([1.0]), u0=0.0, f=f,
                          subsolution=subsolution, L=1.0)
    run = ExteriorRun(problem=problem, schedule=list(schedule), window=4.0,
                      n_r_base=96, n_theta=64, tol_window=1e-12,
                      tol_newton=1e-8)
    window, reports = solve_exterior(run)
    return run, window, reports


@pytest.fixture(scope="session")
def radial_run(subsolution, f_radial):
    """Radially symmetric schedule run (criteria 4 and 9)."""
    return _run(subsolution, f_radial)


@pytest.fixture(scope="session")
def modulated_run(subsolution, f_modulated):
    """Angular-modulated schedule run (criteria 5 and 8)."""
    return _run(subsolution, f_modulated)
