"""Uniform grids and sampled functions on them."""

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import DomainError
from .kernels import FloatArray


@dataclass(frozen=True)
class Grid:
    """Nodes t_i = a + i*h, h = (b - a) / (n_nodes - 1)."""

    a: float
    b: float
    n_nodes: int

    def __post_init__(self) -> None:
        if self.n_nodes < 3:
            raise DomainError(f"a grid needs at least 3 nodes, got {self.n_nodes}")
        if not self.a < self.b:
            raise DomainError(f"grid needs a < b, got a={self.a}, b={self.b}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_nodes - 1)

    @property
    def nodes(self) -> FloatArray:
        return np.linspace(self.a, self.b, self.n_nodes)

    @property
    def midpoints(self) -> FloatArray:
        t = self.nodes
        return 0.5 * (t[:-1] + t[1:])

    def refine(self) -> "Grid":
        """Nested grid with every cell halved (2N - 1 nodes)."""
        return Grid(self.a, self.b, 2 * self.n_nodes - 1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real vector-valued samples, one row of length d per grid node."""

    grid: Grid
    values: FloatArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        if values.ndim != 2 or values.shape[0] != self.grid.n_nodes or values.shape[1] < 1:
            raise DomainError(
                f"values of shape {values.shape} do not match a grid of {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("grid function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[FloatArray], ArrayLike]) -> "GridFunction":
        """Sample ``fn`` (vectorized over the node array) on ``grid``."""
        return cls(grid, np.asarray(fn(grid.nodes), dtype=np.float64))

    @classmethod
    def constant(cls, grid: Grid, value: float, dim: int = 1) -> "GridFunction":
        return cls(grid, np.full((grid.n_nodes, dim), float(value)))

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def t(self) -> FloatArray:
        return self.grid.nodes

    def component(self, j: int) -> "GridFunction":
        return GridFunction(self.grid, self.values[:, j])

    def scalar(self) -> FloatArray:
        """Values of a scalar function as a 1-D array."""
        if self.dim != 1:
            raise DomainError(f"expected a scalar grid function, got dimension {self.dim}")
        return self.values[:, 0]

    def with_values(self, values: ArrayLike) -> "GridFunction":
        return GridFunction(self.grid, np.asarray(values, dtype=np.float64))


def derivative(f: GridFunction) -> GridFunction:
    """Second-order differences: central inside, 3-point one-sided at both ends.

    Exact for quadratics up to roundoff.
    """
    return f.with_values(np.gradient(f.values, f.grid.h, axis=0, edge_order=2))


def integrate(f: GridFunction) -> float:
    """Composite trapezoid rule over [a, b] for a scalar function."""
    return float(trapezoid(f.scalar(), dx=f.grid.h))


def cumulative_integral(f: GridFunction) -> GridFunction:
    """Running trapezoid integral from a, componentwise; zero at a."""
    return f.with_values(cumulative_trapezoid(f.values, dx=f.grid.h, axis=0, initial=0.0))


def interpolate(f: GridFunction, t: float) -> FloatArray:
    """Piecewise-linear value at t in [a, b]; exact at nodes.

    Raises:
        DomainError: If t lies outside [a, b].
    """
    grid = f.grid
    if not grid.a <= t <= grid.b:
        raise DomainError(f"t={t} outside [{grid.a}, {grid.b}]")
    nodes = grid.nodes
    return np.array([np.interp(t, nodes, f.values[:, j]) for j in range(f.dim)])


def resample(f: GridFunction, grid: Grid) -> GridFunction:
    """Linear interpolation of ``f`` onto another grid over the same interval."""
    nodes = f.grid.nodes
    cols = [np.interp(grid.nodes, nodes, f.values[:, j]) for j in range(f.dim)]
    return GridFunction(grid, np.column_stack(cols))


def interior_supnorm(f: GridFunction, edge: int = 1) -> FloatArray:
    """Componentwise max |f| over nodes, skipping ``edge`` nodes at each end."""
    n = f.grid.n_nodes
    if 2 * edge >= n:
        raise DomainError(f"cannot skip {edge} nodes at each end of a {n}-node grid")
    return np.max(np.abs(f.values[edge : n - edge]), axis=0)


def core_indices(grid: Grid, layer: float) -> slice:
    """Nodes of [a + layer*(b - a), b - layer*(b - a)], the range rounded inwards.

    At least one node is dropped at each end.

    Raises:
        DomainError: If ``layer`` is outside (0, 1/2) or leaves no node.
    """
    if not 0.0 < layer < 0.5:
        raise DomainError(f"boundary layer must lie in (0, 0.5), got {layer}")
    n = grid.n_nodes
    skip = max(1, math.ceil(layer * (n - 1) - 1e-9))
    if 2 * skip >= n:
        raise DomainError(f"a boundary layer of {layer:g} leaves no node of a {n}-node grid")
    return slice(skip, n - skip)


def core_supnorm(f: GridFunction, layer: float) -> FloatArray:
    """Componentwise max |f| away from a boundary layer of relative width ``layer``."""
    return np.max(np.abs(f.values[core_indices(f.grid, layer)]), axis=0)
