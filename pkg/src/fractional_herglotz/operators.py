"""Generalized fractional operators K_P, B_P = K_P o D and A_P = D o K_P on uniform grids.

The kernel integrals are evaluated by product integration: the data is replaced by
its piecewise-linear interpolant and the kernel moments over each cell are exact
(closed-form antiderivatives) or Gauss-Legendre (tabulated kernels). For the
power-law kernel this is the L1 family of weights.
"""

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError
from .kernels import (
    FloatArray,
    KernelFamily,
    KernelSpec,
    ParameterSet,
    check_order,
    make_caputo_kernel,
)
from .numgrid import Grid, GridFunction, derivative, integrate

_GAUSS_POINTS = 16


@dataclass(frozen=True)
class OperatorConfig:
    """Order, kernel of K^(1-alpha), parameter set and the classical switch.

    In classical mode alpha and kernel are ignored and K^(1-alpha) is the
    identity on each side.
    """

    pset: ParameterSet
    alpha: float | None = None
    kernel: KernelSpec | None = None
    classical_mode: bool = False

    def __post_init__(self) -> None:
        if self.classical_mode:
            return
        if self.alpha is None:
            raise DomainError("a fractional operator needs alpha (or classical_mode)")
        check_order(self.alpha)
        if self.kernel is None:
            object.__setattr__(self, "kernel", make_caputo_kernel(self.alpha))

    @classmethod
    def caputo(cls, alpha: float, pset: ParameterSet) -> "OperatorConfig":
        return cls(pset=pset, alpha=alpha, kernel=make_caputo_kernel(alpha))

    @classmethod
    def classical(cls, pset: ParameterSet) -> "OperatorConfig":
        return cls(pset=pset, classical_mode=True)

    def adjoint(self) -> "OperatorConfig":
        """Same operator over P*."""
        return replace(self, pset=self.pset.adjoint())

    def grid(self, n_nodes: int) -> Grid:
        return Grid(self.pset.a, self.pset.b, n_nodes)

    @property
    def label(self) -> str:
        if self.classical_mode:
            return "classical"
        assert self.kernel is not None
        return f"alpha={self.alpha:g}, kernel={self.kernel.family.value}"


@dataclass(frozen=True)
class IBPResult:
    """Both sides of the integration-by-parts identity and their defect."""

    lhs: float
    rhs: float
    residual: float


def _kernel_of(cfg: OperatorConfig) -> KernelSpec:
    kernel = cfg.kernel
    assert kernel is not None
    if kernel.singularity_exponent >= 1.0:
        raise DomainError(
            f"kernel is not integrable at 0 (singularity exponent "
            f"{kernel.singularity_exponent:g} >= 1)"
        )
    return kernel


def _check_grid(cfg: OperatorConfig, grid: Grid) -> None:
    pset = cfg.pset
    tol = 1e-12 * max(1.0, abs(pset.a), abs(pset.b))
    if abs(grid.a - pset.a) > tol or abs(grid.b - pset.b) > tol:
        raise DomainError(
            f"grid [{grid.a}, {grid.b}] does not match the parameter set [{pset.a}, {pset.b}]"
        )


def _cell_moments(kernel: KernelSpec, width: float, count: int) -> tuple[FloatArray, FloatArray]:
    """Zeroth and local first moments of k over the cells [(m-1)w, m*w], m = 1..count.

    The first moment is taken about each cell's left end, int k(s) (s - s_lo) ds.
    """
    edges = width * np.arange(count + 1, dtype=np.float64)
    if kernel.family is KernelFamily.TABULATED:
        x, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
        u = 0.5 * (x + 1.0) * width
        weighted = kernel(edges[:-1, np.newaxis] + u[np.newaxis, :]) * (0.5 * width * w)
        return weighted.sum(axis=1), (weighted * u).sum(axis=1)
    m0 = np.diff(kernel.antiderivative(edges))
    n1 = np.diff(kernel.first_moment(edges)) - edges[:-1] * m0
    return m0, n1


@functools.lru_cache(maxsize=32)
def _left_matrix(grid: Grid, kernel: KernelSpec) -> FloatArray:
    """Nodal weights W with (W f)_i = int_a^{t_i} k(t_i - t) f_lin(t) dt."""
    n, h = grid.n_nodes, grid.h
    m0, n1 = _cell_moments(kernel, h, n - 1)
    a = n1 / h  # weight of the far node of each cell
    b = m0 - a  # weight of the near node
    col = np.zeros(n)
    col[0] = b[0]
    col[1 : n - 1] = a[: n - 2] + b[1 : n - 1]
    col[n - 1] = a[n - 2]
    weights = toeplitz(col, np.zeros(n))
    weights[0, 0] = 0.0
    weights[1:, 0] = a
    weights.flags.writeable = False
    return weights


@functools.lru_cache(maxsize=32)
def _left_midpoint_matrix(grid: Grid, kernel: KernelSpec) -> FloatArray:
    """Weights W with (W d)_i = int_a^{m_i} k(m_i - t) d(t) dt for cellwise-constant d.

    m_i is the midpoint of cell i; the result has one row and column per cell.
    """
    cells = grid.n_nodes - 1
    half, _ = _cell_moments(kernel, 0.5 * grid.h, 2 * cells - 1)
    col = np.empty(cells)
    col[0] = half[0]
    col[1:] = half[1 : 2 * cells - 2 : 2] + half[2 : 2 * cells - 1 : 2]
    weights = toeplitz(col, np.zeros(cells))
    weights.flags.writeable = False
    return weights


def k_matrix(cfg: OperatorConfig, grid: Grid) -> FloatArray:
    """Dense nodal matrix of K_P^(1-alpha) on ``grid``."""
    _check_grid(cfg, grid)
    pset = cfg.pset
    if cfg.classical_mode:
        return (pset.p + pset.q) * np.eye(grid.n_nodes)
    left = _left_matrix(grid, _kernel_of(cfg))
    return pset.p * left + pset.q * left[::-1, ::-1]


def midpoint_b_matrix(cfg: OperatorConfig, grid: Grid) -> FloatArray:
    """Map node values to B_P at cell midpoints, shape (n_nodes - 1, n_nodes).

    The trajectory is piecewise linear, so its derivative is the forward
    difference on each cell and the kernel integrals are exact per cell.
    """
    _check_grid(cfg, grid)
    n, h, pset = grid.n_nodes, grid.h, cfg.pset
    forward = (np.eye(n - 1, n, k=1) - np.eye(n - 1, n)) / h
    if cfg.classical_mode:
        return (pset.p + pset.q) * forward
    left = _left_midpoint_matrix(grid, _kernel_of(cfg))
    return (pset.p * left + pset.q * left[::-1, ::-1]) @ forward


def apply_K(cfg: OperatorConfig, f: GridFunction) -> GridFunction:
    """K_P[f](x) = p int_a^x k(x-t) f(t) dt + q int_x^b k(t-x) f(t) dt at every node.

    The left integral vanishes at a and the right one at b.
    """
    return f.with_values(k_matrix(cfg, f.grid) @ f.values)


def apply_B(cfg: OperatorConfig, f: GridFunction) -> GridFunction:
    """Generalized Caputo derivative K_P^(1-alpha) o D; annihilates constants."""
    df = derivative(f)
    if cfg.classical_mode:
        _check_grid(cfg, f.grid)
        return df.with_values((cfg.pset.p + cfg.pset.q) * df.values)
    return apply_K(cfg, df)


def apply_A(cfg: OperatorConfig, f: GridFunction) -> GridFunction:
    """Generalized Riemann-Liouville derivative D o K_P^(1-alpha).

    In classical mode the left side contributes +D and the right side -D, the
    alpha -> 1 limit of the right Riemann-Liouville derivative.
    """
    if cfg.classical_mode:
        _check_grid(cfg, f.grid)
        df = derivative(f)
        return df.with_values((cfg.pset.p - cfg.pset.q) * df.values)
    return derivative(apply_K(cfg, f))


def apply_A_adjoint(cfg: OperatorConfig, g: GridFunction) -> GridFunction:
    """The adjoint derivative -D o K_{P*}^(1-alpha) of the Euler-Lagrange equation.

    Integration by parts moves B_P onto the multiplier as -D o K_{P*}; for a
    left-sided P this is the right Riemann-Liouville derivative and equals
    ``apply_A(cfg.adjoint(), g)`` in classical mode (-D).
    """
    adj = cfg.adjoint()
    return g.with_values(-derivative(apply_K(adj, g)).values)


def ibp_residual(cfg: OperatorConfig, f: GridFunction, g: GridFunction) -> IBPResult:
    """Check int g B_P[f] = [f K_{P*}[g]]_a^b - int f (D o K_{P*})[g].

    The boundary bracket is evaluated at b minus at a.
    """
    adj = cfg.adjoint()
    fv, gv = f.scalar(), g.scalar()
    lhs = integrate(f.with_values(gv * apply_B(cfg, f).scalar()))
    k_star = apply_K(adj, g)
    ks = k_star.scalar()
    boundary = fv[-1] * ks[-1] - fv[0] * ks[0]
    rl_star = derivative(k_star).scalar()
    rhs = boundary - integrate(f.with_values(fv * rl_star))
    residual = abs(lhs - rhs) / (1.0 + abs(lhs))
    if not math.isfinite(residual):
        raise DomainError("integration by parts produced a non-finite value")
    return IBPResult(lhs=lhs, rhs=float(rhs), residual=residual)
