"""Discrete domains: a polar annulus grid between a star-shaped inner boundary
and an outer sphere (n=2), and a 1D radial grid for arbitrary dimension.

Both grid kinds are immutable after construction (value arrays are marked
read-only) and nest exactly under refinement: with uniform or geometric
stretching the coarse nodes reappear bitwise in the refined grid because the
normalized coordinates i/N and (2i)/(2N) round to the same float.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GridError

STRETCHINGS = ("uniform", "geometric")


def trig_interp(samples: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of uniform periodic samples.

    `samples` are values at theta_j = 2*pi*j/M.  Exact (to roundoff) at the
    sample points; spectrally accurate for smooth periodic data.  The Nyquist
    mode of even M is kept as a pure cosine, which is the symmetric choice.
    """
    samples = np.asarray(samples, dtype=float)
    M = samples.size
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    F = np.fft.rfft(samples)
    out = np.full(theta.shape, F[0].real / M)
    kmax = (M - 1) // 2
    if kmax >= 1:
        k = np.arange(1, kmax + 1)
        phase = np.exp(1j * np.outer(theta, k))
        out = out + 2.0 / M * (phase * F[1:kmax + 1]).real.sum(axis=1)
    if M % 2 == 0:
        out = out + F[M // 2].real / M * np.cos(M // 2 * theta)
    return out


@dataclass
class RadialGrid:
    """1D radial grid on [rho1, R] for the radially symmetric problem in R^n."""

    n: int
    rho1: float
    R: float
    nodes: np.ndarray
    stretching: str

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.n < 2:
            raise GridError(f"dimension n must be >= 2, got {self.n}")
        if not (0.0 < self.rho1 < self.R):
            raise GridError(
                f"invalid radii ordering: need 0 < rho1 < R, got rho1={self.rho1}, R={self.R}")
        if self.stretching not in STRETCHINGS:
            raise GridError(f"unknown stretching {self.stretching!r}")
        if self.nodes[0] != self.rho1 or self.nodes[-1] != self.R:
            raise GridError("nodes must start at rho1 and end at R")
        if np.any(np.diff(self.nodes) <= 0.0):
            raise GridError("nodes must be strictly increasing")
        self.nodes.setflags(write=False)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)


def build_radial_grid(n: int, rho1: float, R: float, N: int,
                      stretching: str = "geometric") -> RadialGrid:
    """Construct a radial grid with N intervals.

    Geometric stretching places nodes at rho1*(R/rho1)**(i/N), which keeps
    the relative spacing constant; uniform spacing is available for bounded
    annuli.
    """
    if not (0.0 < rho1 < R):
        raise GridError(
            f"invalid radii ordering: need 0 < rho1 < R, got rho1={rho1}, R={R}")
    if N < 2:
        raise GridError(f"N too small: need N >= 2, got {N}")
    if stretching not in STRETCHINGS:
        raise GridError(f"unknown stretching {stretching!r}")
    s = np.arange(N + 1) / N
    if stretching == "geometric":
        nodes = rho1 * (R / rho1) ** s
    else:
        nodes = rho1 + s * (R - rho1)
    nodes[0] = rho1
    nodes[-1] = R
    return RadialGrid(n=n, rho1=float(rho1), R=float(R), nodes=nodes,
                      stretching=stretching)


@dataclass
class AnnulusGrid:
    """Polar tensor grid on B_R \\ K for n=2.

    The inner boundary is star-shaped with respect to the origin and described
    by radius samples rho(theta_j) at uniform angles.  Nodes sit on per-angle
    radial lines from rho(theta_j) to R; row i=0 lies on the inner boundary and
    row i=N_r on the outer sphere.  The logical coordinates (s, theta) with
    s in [0, 1] form a uniform tensor grid, which is what the finite
    difference stencils act on.
    """

    N_r: int
    N_theta: int
    theta: np.ndarray          # (N_theta,), uniform on [0, 2*pi)
    rho_inner: np.ndarray      # (N_theta,), inner boundary samples
    R: float
    r: np.ndarray              # (N_r+1, N_theta), node radii
    stretching: str

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.rho_inner = np.asarray(self.rho_inner, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.N_theta % 4 != 0:
            raise GridError(f"N_theta must be divisible by 4, got {self.N_theta}")
        if np.any(self.rho_inner <= 0.0):
            raise GridError("inner boundary radii must be positive")
        if np.any(self.rho_inner >= self.R):
            raise GridError(
                f"inner boundary outside outer ball: max rho = {self.rho_inner.max()} "
                f">= R = {self.R}")
        if self.r.shape != (self.N_r + 1, self.N_theta):
            raise GridError("node radius array has wrong shape")
        if np.any(np.diff(self.r, axis=0) <= 0.0):
            raise GridError("per-angle radial spacing must be monotone increasing")
        self.x = self.r * np.cos(self.theta)[None, :]
        self.y = self.r * np.sin(self.theta)[None, :]
        for arr in (self.theta, self.rho_inner, self.r, self.x, self.y):
            arr.setflags(write=False)
        self._ops = None  # finite-difference operator cache, built lazily

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N_r + 1, self.N_theta)

    @property
    def n_nodes(self) -> int:
        return (self.N_r + 1) * self.N_theta

    def rho_at(self, theta) -> np.ndarray:
        """Inner boundary radius at arbitrary angles (trigonometric interpolant)."""
        return trig_interp(self.rho_inner, theta)

    def radial_spacing(self) -> np.ndarray:
        """Local radial spacing per node, (N_r+1, N_theta)."""
        dr = np.diff(self.r, axis=0)
        out = np.empty_like(self.r)
        out[:-1] = dr
        out[-1] = dr[-1]
        out[1:] = np.maximum(out[1:], dr)
        return out

    def angular_spacing(self) -> np.ndarray:
        """Local arc-length spacing r*dtheta per node."""
        return self.r * (2.0 * np.pi / self.N_theta)

    def max_spacing(self, mask: np.ndarray | None = None) -> float:
        """Largest local spacing, the h entering h**2 tolerance formulas."""
        h = np.maximum(self.radial_spacing(), self.angular_spacing())
        if mask is not None:
            h = h[mask]
        return float(h.max())

    def interior_mask(self) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        m[0, :] = False
        m[-1, :] = False
        return m

    def neighbors(self, i: int, j: int) -> list[tuple[int, int]]:
        """Index neighbors: 8 for interior nodes (periodic in theta), one-sided
        in the radial direction on the boundary rows."""
        out = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                ii = i + di
                if ii < 0 or ii > self.N_r:
                    continue
                out.append((ii, (j + dj) % self.N_theta))
        return out


def _annulus_radii(rho: np.ndarray, R: float, N_r: int, stretching: str) -> np.ndarray:
    s = (np.arange(N_r + 1) / N_r)[:, None]
    if stretching == "geometric":
        r = np.exp(np.log(rho)[None, :] * (1.0 - s) + np.log(R) * s)
    else:
        r = rho[None, :] + s * (R - rho[None, :])
    r[0, :] = rho
    r[-1, :] = R
    return r


def build_annulus_grid(rho_inner, R: float, N_r: int, N_theta: int,
                       stretching: str = "geometric") -> AnnulusGrid:
    """Construct the annulus grid.

    rho_inner may be a positive scalar (circular inner boundary), an array of
    N_theta samples, or a callable theta -> rho(theta).
    """
    if N_theta % 4 != 0 or N_theta < 4:
        raise GridError(f"N_theta must be a positive multiple of 4, got {N_theta}")
    if N_r < 2:
        raise GridError(f"N_r too small: need N_r >= 2, got {N_r}")
    if stretching not in STRETCHINGS:
        raise GridError(f"unknown stretching {stretching!r}")
    theta = 2.0 * np.pi * (np.arange(N_theta) / N_theta)
    if callable(rho_inner):
        rho = np.asarray(rho_inner(theta), dtype=float)
        if rho.shape != theta.shape:
            rho = np.full(N_theta, float(rho_inner(0.0)))
    elif np.ndim(rho_inner) == 0:
        rho = np.full(N_theta, float(rho_inner))
    else:
        rho = np.asarray(rho_inner, dtype=float)
        if rho.shape != (N_theta,):
            raise GridError(
                f"rho_inner samples must have length N_theta={N_theta}, got {rho.shape}")
    if np.any(rho <= 0.0):
        raise GridError("inner boundary radii must be positive")
    if np.any(rho >= R):
        raise GridError(
            f"inner boundary outside outer ball: max rho = {rho.max()} >= R = {R}")
    r = _annulus_radii(rho, float(R), N_r, stretching)
    return AnnulusGrid(N_r=N_r, N_theta=N_theta, theta=theta, rho_inner=rho,
                       R=float(R), r=r, stretching=stretching)


def refine(grid):
    """Double the node counts; coarse nodes are a subset of the fine nodes."""
    if isinstance(grid, RadialGrid):
        return build_radial_grid(grid.n, grid.rho1, grid.R, 2 * grid.N,
                                 grid.stretching)
    if isinstance(grid, AnnulusGrid):
        N_theta = 2 * grid.N_theta
        theta = 2.0 * np.pi * (np.arange(N_theta) / N_theta)
        rho = trig_interp(grid.rho_inner, theta)
        rho[::2] = grid.rho_inner  # keep original samples bitwise
        return build_annulus_grid(rho, grid.R, 2 * grid.N_r, N_theta,
                                  grid.stretching)
    raise GridError(f"cannot refine object of type {type(grid).__name__}")
