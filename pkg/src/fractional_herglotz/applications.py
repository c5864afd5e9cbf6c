"""Damped harmonic oscillator with memory: problem, equation of motion and references."""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike

from .errors import DomainError, HerglotzError
from .herglotz import HerglotzEvaluation, HerglotzProblem, el_residual
from .kernels import (
    FloatArray,
    KernelSpec,
    ParameterSet,
    check_order,
    kernel_for_order,
    make_caputo_kernel,
)
from .lagrangians import oscillator
from .numgrid import Grid, GridFunction
from .operators import OperatorConfig, apply_A_adjoint
from .solver import SolveOptions, solve_direct

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OscillatorParams:
    """L = m v^2/2 - k x^2/2 + lambda0 z on [0, b] with P = <0, b, 1, 0>.

    ``alpha=None`` selects classical mode. ``xb=None`` leaves x(b) free;
    ``v0`` is the initial velocity used only by :func:`classical_reference`.
    """

    m: float
    k: float
    lambda0: float
    b: float
    x0: float
    xb: float | None = None
    z0: float = 0.0
    alpha: float | None = None
    kernel: KernelSpec | None = None
    v0: float | None = None

    def __post_init__(self) -> None:
        if not self.m > 0.0:
            raise DomainError(f"mass must be > 0, got {self.m}")
        if self.k < 0.0:
            raise DomainError(f"elasticity must be >= 0, got {self.k}")
        if not self.b > 0.0:
            raise DomainError(f"interval end must be > 0, got {self.b}")
        if self.alpha is not None:
            check_order(self.alpha)

    @property
    def classical(self) -> bool:
        return self.alpha is None

    @property
    def pset(self) -> ParameterSet:
        return ParameterSet(0.0, self.b, 1.0, 0.0)

    def op_config(self) -> OperatorConfig:
        if self.alpha is None:
            return OperatorConfig.classical(self.pset)
        kernel = self.kernel or make_caputo_kernel(self.alpha)
        return OperatorConfig(pset=self.pset, alpha=self.alpha, kernel=kernel)

    def with_alpha(self, alpha: float | None) -> "OscillatorParams":
        """Same oscillator at another order.

        A power-law kernel (or none) becomes the Caputo kernel of the new order;
        exponential and tabulated kernels are kept unchanged.
        """
        if alpha is None:
            return replace(self, alpha=None)
        return replace(self, alpha=alpha, kernel=kernel_for_order(self.kernel, alpha))


def oscillator_problem(p: OscillatorParams) -> HerglotzProblem:
    return HerglotzProblem(
        dim=1,
        lagrangian=oscillator(p.m, p.k, p.lambda0),
        op_config=p.op_config(),
        x_a=(p.x0,),
        x_b=(p.xb,),
        z_a=p.z0,
    )


def effective_coefficients(p: OscillatorParams, t: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Time-decaying mass m e^{-lambda0 t} and elasticity k e^{-lambda0 t}."""
    decay = np.exp(-p.lambda0 * np.asarray(t, dtype=np.float64))
    return p.m * decay, p.k * decay


def oscillator_el_residual(p: OscillatorParams, ev: HerglotzEvaluation) -> GridFunction:
    """Equation of motion m (-D o K_{P*})(e^{-lambda0 t} B[x]) - k e^{-lambda0 t} x.

    In classical mode this is -(m d/dt(e^{-lambda0 t} x') + k e^{-lambda0 t} x).
    """
    mass, stiffness = effective_coefficients(p, ev.x.t)
    weighted_v = ev.v.with_values(mass[:, np.newaxis] * ev.v.values)
    inertia = apply_A_adjoint(p.op_config(), weighted_v).values
    return ev.x.with_values(inertia - stiffness[:, np.newaxis] * ev.x.values)


def oscillator_residual_discrepancy(p: OscillatorParams, ev: HerglotzEvaluation) -> float:
    """Relative gap between the specialized and the generic Euler-Lagrange residual."""
    special = oscillator_el_residual(p, ev).values
    generic = el_residual(oscillator_problem(p), ev).values
    scale = max(1.0, float(np.max(np.abs(generic))))
    return float(np.max(np.abs(special - generic))) / scale


def _characteristic_basis(
    p: OscillatorParams, t: FloatArray
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Two solutions of m x'' - m lambda0 x' + k x = 0 and their derivatives at t."""
    lam0, w2 = p.lambda0, p.k / p.m
    disc = lam0 * lam0 - 4.0 * w2
    tol = 1e-12 * max(1.0, lam0 * lam0, 4.0 * w2)
    if disc > tol:
        root = math.sqrt(disc)
        r1, r2 = 0.5 * (lam0 + root), 0.5 * (lam0 - root)
        e1, e2 = np.exp(r1 * t), np.exp(r2 * t)
        return e1, e2, r1 * e1, r2 * e2
    if disc < -tol:
        mu, omega = 0.5 * lam0, 0.5 * math.sqrt(-disc)
        grow = np.exp(mu * t)
        c, s = np.cos(omega * t), np.sin(omega * t)
        return grow * c, grow * s, grow * (mu * c - omega * s), grow * (mu * s + omega * c)
    r = 0.5 * lam0
    e = np.exp(r * t)
    return e, t * e, r * e, e * (1.0 + r * t)


def classical_reference(p: OscillatorParams, t: ArrayLike) -> FloatArray:
    """Closed-form classical extremal, fitted to x(0) and x(b) (or x'(0) = v0).

    Raises:
        DomainError: If the data cannot fix both constants or the fit is degenerate.
    """
    if p.xb is None and p.v0 is None:
        raise DomainError("classical reference needs x(b) or an initial velocity v0")
    ends = np.array([0.0, p.b])
    phi1, phi2, dphi1, dphi2 = _characteristic_basis(p, ends)
    if p.xb is not None:
        system = np.array([[phi1[0], phi2[0]], [phi1[1], phi2[1]]])
        rhs = np.array([p.x0, p.xb])
    else:
        system = np.array([[phi1[0], phi2[0]], [dphi1[0], dphi2[0]]])
        rhs = np.array([p.x0, p.v0])
    scale = float(np.prod(np.linalg.norm(system, axis=1)))
    if abs(np.linalg.det(system)) < 1e-12 * max(scale, 1e-300):
        raise DomainError("boundary data do not determine the classical solution")
    c1, c2 = np.linalg.solve(system, rhs)
    t_arr = np.asarray(t, dtype=np.float64)
    b1, b2, _, _ = _characteristic_basis(p, t_arr)
    return c1 * b1 + c2 * b2


@dataclass
class SweepRow:
    alpha: float | None
    z_b: float | None = None
    converged: bool = False
    el_residual_supnorm: float | None = None
    el_residual_core_supnorm: float | None = None
    distance_to_classical: float | None = None
    trajectory: GridFunction | None = None
    error: str | None = None


@dataclass
class SweepTable:
    """One row per order plus the classical row the distances refer to."""

    rows: list[SweepRow] = field(default_factory=list)
    classical: SweepRow | None = None
    max_successive_difference: float | None = None

    @property
    def distances_decreasing(self) -> bool:
        d = [r.distance_to_classical for r in self.rows if r.distance_to_classical is not None]
        if len(d) != len(self.rows):
            return False
        return all(b < a for a, b in zip(d, d[1:]))


def _solve_row(p: OscillatorParams, grid: Grid, opts: SolveOptions) -> SweepRow:
    try:
        result = solve_direct(oscillator_problem(p), grid, opts)
    except HerglotzError as e:
        logger.warning("sweep entry alpha=%s failed: %s", p.alpha, e)
        return SweepRow(alpha=p.alpha, error=str(e))
    return SweepRow(
        alpha=p.alpha,
        z_b=result.z_b,
        converged=result.converged,
        el_residual_supnorm=float(np.max(result.el_residual_supnorm)),
        el_residual_core_supnorm=float(np.max(result.el_residual_core_supnorm)),
        trajectory=result.evaluation.x,
    )


def alpha_sweep(
    p: OscillatorParams,
    alphas: Sequence[float],
    grid: Grid,
    opts: SolveOptions | None = None,
    jobs: int = 1,
) -> SweepTable:
    """Solve the oscillator for each order next to the classical case.

    Every order keeps the kernel family of ``p`` (see :meth:`OscillatorParams.with_alpha`).
    Distances are sup-norms against the closed-form classical solution when x(b)
    is fixed, otherwise against the classical direct solution. Failed entries
    keep their error message and the sweep continues; so does a closed form that
    the boundary data cannot fix (x(b) at a conjugate point), which is recorded on
    the classical row and leaves the distances unset.
    """
    opts = opts or SolveOptions()
    for alpha in alphas:
        check_order(alpha)
    if not alphas:
        return SweepTable()

    entries = [p.with_alpha(None), *(p.with_alpha(a) for a in alphas)]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(lambda q: _solve_row(q, grid, opts), entries))
    classical, fractional = rows[0], rows[1:]

    reference: FloatArray | None = None
    if p.xb is not None:
        try:
            reference = classical_reference(p.with_alpha(None), grid.nodes)
        except DomainError as e:
            logger.warning("no classical reference for the sweep: %s", e)
            classical.error = classical.error or f"classical reference: {e}"
    elif classical.trajectory is not None:
        reference = classical.trajectory.values[:, 0]
    for row in [classical, *fractional]:
        if reference is not None and row.trajectory is not None:
            gap = row.trajectory.values[:, 0] - reference
            row.distance_to_classical = float(np.max(np.abs(gap)))

    trajectories = [r.trajectory.values for r in fractional if r.trajectory is not None]
    successive = [float(np.max(np.abs(b - a))) for a, b in zip(trajectories, trajectories[1:])]
    return SweepTable(
        rows=fractional,
        classical=classical,
        max_successive_difference=max(successive) if successive else None,
    )
