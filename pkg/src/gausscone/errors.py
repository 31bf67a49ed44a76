"""Exception types shared across the package."""

from __future__ import annotations


class GridError(ValueError):
    """Invalid grid parameters (ordering, counts, inner boundary placement)."""


class FieldError(ValueError):
    """Field values incompatible with their grid (shape, non-finite entries)."""


class ConvexityError(RuntimeError):
    """Discrete Hessian not positive definite where strict convexity is required.

    Carries the first offending node so solver logs can point at it.
    """

    def __init__(self, message: str, node: tuple[int, int] | None = None,
                 position: tuple[float, float] | None = None):
        if node is not None:
            message = f"{message} at node (i={node[0]}, j={node[1]})"
            if position is not None:
                message += f", x=({position[0]:.6g}, {position[1]:.6g})"
        super().__init__(message)
        self.node = node
        self.position = position


class SubsolutionError(ValueError):
    """Candidate fails the discrete lower-barrier inequality or its hypotheses."""


class GlueError(ValueError):
    """Two-subsolution gluing hypotheses violated (ordering, crossing set, convexity)."""


class SolveError(RuntimeError):
    """Nonlinear solve failed; .report carries the convergence history when available."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class RadialSolveError(RuntimeError):
    """Radial boundary value problem unsolvable (curvature mass or bracketing)."""


class ConfigError(ValueError):
    """Run configuration rejected; message names the violated hypothesis."""
