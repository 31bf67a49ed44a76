"""Problem description shared by the exterior driver and the command line."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .barriers import ExplicitSubsolution, TabulatedSubsolution
from .errors import ConfigError
from .fields import FSpec
from .grid import trig_interp


@dataclass
class ProblemSpec:
    """Exterior problem data: dimension, inner boundary, boundary values,
    prescription, lower barrier and the cone offset L of the upper barrier."""

    n: int
    rho_samples: np.ndarray          # inner boundary radii at uniform angles
    u0: float | np.ndarray           # Dirichlet data on the inner boundary
    f: FSpec
    subsolution: ExplicitSubsolution | TabulatedSubsolution
    L: float

    def __post_init__(self):
        self.rho_samples = np.atleast_1d(np.asarray(self.rho_samples, dtype=float))
        if self.n != 2:
            raise ConfigError("the full PDE solver supports n = 2 only "
                              "(use the radial solver for higher dimensions)")
        if np.any(self.rho_samples <= 0.0):
            raise ConfigError("inner boundary radii must be positive")
        u0 = np.broadcast_to(np.asarray(self.u0, dtype=float),
                             self.rho_samples.shape)
        if self.L <= float((u0 - self.rho_samples).max()):
            raise ConfigError(
                f"L > max(u0 - |x|) on the inner boundary required; "
                f"L = {self.L}, max(u0 - |x|) = {(u0 - self.rho_samples).max()}")

    @property
    def R0(self) -> float:
        """Radius of a ball containing the inner set."""
        return float(self.rho_samples.max())

    def rho_at(self, theta) -> np.ndarray:
        if self.rho_samples.size == 1:
            return np.full(np.shape(theta), self.rho_samples[0])
        return trig_interp(self.rho_samples, theta)

    def u0_at(self, theta) -> np.ndarray:
        u0 = np.asarray(self.u0, dtype=float)
        if u0.ndim == 0:
            return np.full(np.shape(theta), float(u0))
        return trig_interp(u0, theta)

    def subsolution_value(self, r, theta) -> np.ndarray:
        if isinstance(self.subsolution, ExplicitSubsolution):
            return self.subsolution.value(r)
        return self.subsolution.value_polar(r, theta)

    def cone_upper(self, r) -> np.ndarray:
        return np.asarray(r, dtype=float) + self.L
