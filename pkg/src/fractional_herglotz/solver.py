"""Direct transcription: extremize z(b) over node values of the trajectory.

The optimizer works on the cell-midpoint transcription (``herglotz.staggered_z``),
whose discrete extremals converge at second order without spurious grid modes.
Every reported quantity (the evaluation, z(b) and all residuals) comes from the
nodal ``evaluate_z`` of the optimized trajectory.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

from .errors import DomainError, EvaluationError, SolverSetupError
from .herglotz import (
    Extremum,
    HerglotzEvaluation,
    HerglotzProblem,
    el_residual_core_supnorm,
    el_residual_supnorm,
    evaluate_z,
    staggered_z,
    transversality_residual,
)
from .kernels import FloatArray
from .numgrid import Grid, GridFunction, resample
from .operators import midpoint_b_matrix
from .optimize import InverseHessian, minimize_lbfgs

logger = logging.getLogger(__name__)


class InitialGuess(enum.Enum):
    LINEAR_INTERP = "linear_interp"
    CONSTANT_LEFT = "constant_left"


@dataclass(frozen=True, eq=False)
class SolveOptions:
    """Stopping rules, gradient differencing and the starting trajectory.

    ``initial_guess`` may be a GridFunction; ``None`` picks linear
    interpolation, or the constant x_a when some endpoint is free.
    """

    max_iterations: int = 5000
    gradient_tolerance: float = 1e-6
    step_tolerance: float = 1e-12
    fd_step: float = 1e-6
    memory: int = 10
    preconditioned: bool = True
    initial_guess: InitialGuess | GridFunction | None = None

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not (self.gradient_tolerance > 0.0 and self.step_tolerance > 0.0):
            raise DomainError("tolerances must be > 0")
        if not 1e-10 < self.fd_step < 1e-2:
            raise DomainError(f"fd_step must lie in (1e-10, 1e-2), got {self.fd_step}")
        if self.memory < 1:
            raise DomainError(f"memory must be >= 1, got {self.memory}")


@dataclass(eq=False)
class SolveResult:
    evaluation: HerglotzEvaluation
    converged: bool
    iterations: int
    final_gradient_norm: float
    el_residual_supnorm: FloatArray
    el_residual_core_supnorm: FloatArray
    transversality_residuals: dict[int, float] | None
    objective_z_b: float
    status: str
    message: str

    @property
    def z_b(self) -> float:
        return self.evaluation.z_b


@dataclass
class _Transcription:
    """Free-variable bookkeeping for one (problem, grid) pair."""

    prob: HerglotzProblem
    grid: Grid
    base: FloatArray
    mask: NDArray[np.bool_]
    b_mid: FloatArray
    sign: float
    nodes: NDArray[np.intp] = field(init=False)
    comps: NDArray[np.intp] = field(init=False)

    def __post_init__(self) -> None:
        positions = np.argwhere(self.mask)
        self.nodes = positions[:, 0]
        self.comps = positions[:, 1]

    def trajectory(self, u: FloatArray) -> FloatArray:
        xs = self.base.copy()
        xs[self.mask] = u
        return xs

    def objective(self, u: FloatArray) -> float:
        xs = self.trajectory(u)
        v_mid = self.b_mid @ xs
        return self.sign * float(staggered_z(self.prob, self.grid, xs, v_mid))

    def gradient(self, u: FloatArray, fd_step: float) -> FloatArray:
        """Central differences for all free variables in one batched evaluation."""
        m = u.size
        xs = self.trajectory(u)
        v_mid = self.b_mid @ xs
        deltas = fd_step * np.maximum(1.0, np.abs(u))
        idx = np.arange(m)

        x_batch = np.repeat(xs[np.newaxis], 2 * m, axis=0)
        x_batch[idx, self.nodes, self.comps] += deltas
        x_batch[m + idx, self.nodes, self.comps] -= deltas

        v_batch = np.repeat(v_mid[np.newaxis], 2 * m, axis=0)
        columns = self.b_mid[:, self.nodes].T * deltas[:, np.newaxis]
        v_batch[idx, :, self.comps] += columns
        v_batch[m + idx, :, self.comps] -= columns

        values = self.sign * staggered_z(self.prob, self.grid, x_batch, v_batch)
        return (values[:m] - values[m:]) / (2.0 * deltas)


def initial_trajectory(prob: HerglotzProblem, grid: Grid, opts: SolveOptions) -> GridFunction:
    """Starting trajectory with the boundary data imposed exactly."""
    guess = opts.initial_guess
    x_a = np.array(prob.x_a)
    if isinstance(guess, GridFunction):
        prob.check_trajectory(guess, boundary=False)
        values = resample(guess, grid).values.copy()
    else:
        if guess is None:
            free = bool(prob.free_components)
            guess = InitialGuess.CONSTANT_LEFT if free else InitialGuess.LINEAR_INTERP
        x_end = np.array([x_a[j] if xb is None else xb for j, xb in enumerate(prob.x_b)])
        if guess is InitialGuess.CONSTANT_LEFT:
            x_end = x_a
        s = (grid.nodes - grid.a) / (grid.b - grid.a)
        values = x_a[np.newaxis, :] + s[:, np.newaxis] * (x_end - x_a)[np.newaxis, :]
    values[0] = x_a
    for j, xb in enumerate(prob.x_b):
        if xb is not None:
            values[-1, j] = xb
    return GridFunction(grid, values)


def _transcription(prob: HerglotzProblem, grid: Grid, start: GridFunction) -> _Transcription:
    mask = np.zeros((grid.n_nodes, prob.dim), dtype=bool)
    mask[1:-1] = True
    for j in prob.free_components:
        mask[-1, j] = True
    sign = 1.0 if prob.extremum is Extremum.MIN else -1.0
    b_mid = midpoint_b_matrix(prob.op_config, grid)
    return _Transcription(prob, grid, np.array(start.values), mask, b_mid, sign)


def _preconditioner(
    tr: _Transcription, start: GridFunction, fd_step: float
) -> InverseHessian | None:
    """Inverse of B^T W B, W = h |d2L/dv2| lambda(t)/lambda(b) at the starting trajectory.

    Returns None when L does not depend on v there.
    """
    prob, grid = tr.prob, tr.grid
    try:
        ev = evaluate_z(prob, start)
    except EvaluationError as e:
        logger.debug("no preconditioner: %s", e)
        return None
    lag = prob.lagrangian
    t = grid.midpoints
    x_mid = 0.5 * (ev.x.values[:-1] + ev.x.values[1:])
    v_mid = tr.b_mid @ ev.x.values
    z_mid = 0.5 * (ev.z.values[:-1, 0] + ev.z.values[1:, 0])
    lam = ev.lam.values[:, 0]
    lam_mid = 0.5 * (lam[:-1] + lam[1:])

    curvature = np.empty_like(v_mid)
    for j in range(prob.dim):
        step = fd_step * np.maximum(1.0, np.abs(v_mid[:, j]))
        shift = np.zeros_like(v_mid)
        shift[:, j] = step
        up = lag.dv(t, x_mid, v_mid + shift, z_mid)[:, j]
        down = lag.dv(t, x_mid, v_mid - shift, z_mid)[:, j]
        curvature[:, j] = (up - down) / (2.0 * step)
    weights = grid.h * np.abs(curvature) * (lam_mid / lam[-1])[:, np.newaxis]
    if not np.all(np.isfinite(weights)) or np.max(weights) <= 0.0:
        return None

    columns = tr.b_mid[:, tr.nodes]
    metric = (columns * weights[:, tr.comps]).T @ columns
    metric *= tr.comps[:, np.newaxis] == tr.comps[np.newaxis, :]
    metric[np.diag_indices_from(metric)] += 1e-12 * np.trace(metric) / len(metric)
    try:
        factor = cho_factor(metric)
    except np.linalg.LinAlgError:
        return None
    return lambda vec: cho_solve(factor, vec)


def _residuals(
    prob: HerglotzProblem, ev: HerglotzEvaluation
) -> tuple[FloatArray, FloatArray, dict[int, float] | None]:
    trans = transversality_residual(prob, ev) if prob.free_components else None
    return el_residual_supnorm(prob, ev), el_residual_core_supnorm(prob, ev), trans


def solve_direct(
    prob: HerglotzProblem, grid: Grid, opts: SolveOptions | None = None
) -> SolveResult:
    """Extremize z(b) over the free node values by preconditioned L-BFGS.

    Raises:
        DomainError: If the grid does not match the problem or has fewer than 5 nodes.
        SolverSetupError: If the objective is not finite at the initial guess.
    """
    opts = opts or SolveOptions()
    pset = prob.op_config.pset
    if not (math.isclose(grid.a, pset.a) and math.isclose(grid.b, pset.b)):
        raise DomainError(f"grid [{grid.a}, {grid.b}] does not match [{pset.a}, {pset.b}]")
    if grid.n_nodes < 5:
        raise DomainError(f"the direct method needs at least 5 nodes, got {grid.n_nodes}")

    start = initial_trajectory(prob, grid, opts)
    tr = _transcription(prob, grid, start)
    u0 = tr.base[tr.mask]
    f0 = tr.objective(u0)
    if not math.isfinite(f0):
        raise SolverSetupError("objective is not finite at the initial guess")

    h0 = _preconditioner(tr, start, opts.fd_step) if opts.preconditioned else None
    logger.info(
        "solving %s on %d nodes (%d free values, preconditioned=%s)",
        prob.lagrangian.name,
        grid.n_nodes,
        u0.size,
        h0 is not None,
    )
    res = minimize_lbfgs(
        tr.objective,
        lambda u: tr.gradient(u, opts.fd_step),
        u0,
        memory=opts.memory,
        max_iterations=opts.max_iterations,
        gradient_tolerance=opts.gradient_tolerance,
        step_tolerance=opts.step_tolerance,
        inverse_hessian=h0,
    )
    if not res.converged:
        logger.warning("solver stopped without converging: %s", res.message)

    x = GridFunction(grid, tr.trajectory(res.x))
    ev = evaluate_z(prob, x)
    el_sup, el_core, trans = _residuals(prob, ev)
    logger.info(
        "finished after %d iterations: z(b)=%.12g |g|=%.3e",
        res.iterations,
        ev.z_b,
        res.gradient_norm,
    )
    return SolveResult(
        evaluation=ev,
        converged=res.converged,
        iterations=res.iterations,
        final_gradient_norm=res.gradient_norm,
        el_residual_supnorm=el_sup,
        el_residual_core_supnorm=el_core,
        transversality_residuals=trans,
        objective_z_b=tr.sign * res.fun,
        status=res.status,
        message=res.message,
    )


@dataclass
class ConvergenceReport:
    """Solutions on nested grids N, 2N-1, 4N-3, ... and their successive differences."""

    n_nodes: list[int]
    z_b: list[float]
    z_b_differences: list[float]
    trajectory_differences: list[float]
    el_residual_supnorms: list[float]
    el_residual_core_supnorms: list[float]
    converged: list[bool]
    observed_order: float | None
    flags: list[str] = field(default_factory=list)

    @property
    def residuals_decreasing(self) -> bool:
        """Strict decrease of the core residual from each level to the next."""
        r = self.el_residual_core_supnorms
        return all(b < a or a == b == 0.0 for a, b in zip(r, r[1:]))


def observed_order(differences: list[float]) -> float | None:
    """log2 of the ratio of the last two successive differences."""
    if len(differences) < 2:
        return None
    coarse, fine = differences[-2], differences[-1]
    if coarse <= 0.0 or fine <= 0.0:
        return None
    return math.log2(coarse / fine)


def refine_and_verify(
    prob: HerglotzProblem, grid: Grid, opts: SolveOptions | None = None, levels: int = 3
) -> ConvergenceReport:
    """Solve on ``levels`` nested grids, warm-starting each from the previous solution."""
    opts = opts or SolveOptions()
    if levels < 2:
        raise DomainError(f"refinement needs at least 2 levels, got {levels}")
    results: list[SolveResult] = []
    level_grid = grid
    level_opts = opts
    for _ in range(levels):
        result = solve_direct(prob, level_grid, level_opts)
        results.append(result)
        level_opts = SolveOptions(
            max_iterations=opts.max_iterations,
            gradient_tolerance=opts.gradient_tolerance,
            step_tolerance=opts.step_tolerance,
            fd_step=opts.fd_step,
            memory=opts.memory,
            preconditioned=opts.preconditioned,
            initial_guess=result.evaluation.x,
        )
        level_grid = level_grid.refine()

    z_b = [r.z_b for r in results]
    z_diffs = [abs(b - a) for a, b in zip(z_b, z_b[1:])]
    traj_diffs = [
        float(np.max(np.abs(fine.evaluation.x.values[::2] - coarse.evaluation.x.values)))
        for coarse, fine in zip(results, results[1:])
    ]
    el = [float(np.max(r.el_residual_supnorm)) for r in results]
    core = [float(np.max(r.el_residual_core_supnorm)) for r in results]
    report = ConvergenceReport(
        n_nodes=[r.evaluation.grid.n_nodes for r in results],
        z_b=z_b,
        z_b_differences=z_diffs,
        trajectory_differences=traj_diffs,
        el_residual_supnorms=el,
        el_residual_core_supnorms=core,
        converged=[r.converged for r in results],
        observed_order=observed_order(z_diffs),
    )
    if not report.residuals_decreasing:
        report.flags.append("el_residual_not_decreasing")
    if not all(report.converged):
        report.flags.append("solver_not_converged")
    return report


@dataclass
class StationarityProbe:
    """Largest first-order improvement found by single-variable perturbations."""

    worst_improvement: float
    worst_rate: float
    n_probed: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_rate <= self.tolerance


def probe_stationarity(
    prob: HerglotzProblem, result: SolveResult, opts: SolveOptions | None = None
) -> StationarityProbe:
    """Perturb each free value by +-10*fd_step and record the best improvement.

    The rate is improvement / perturbation, compared with the gradient tolerance.
    """
    opts = opts or SolveOptions()
    x = result.evaluation.x
    tr = _transcription(prob, x.grid, x)
    u = tr.base[tr.mask]
    f0 = tr.objective(u)
    deltas = 10.0 * opts.fd_step * np.maximum(1.0, np.abs(u))
    m = u.size
    idx = np.arange(m)
    batch = np.repeat(tr.base[np.newaxis], 2 * m, axis=0)
    batch[idx, tr.nodes, tr.comps] += deltas
    batch[m + idx, tr.nodes, tr.comps] -= deltas
    values = tr.sign * staggered_z(prob, x.grid, batch, np.einsum("ij,bjn->bin", tr.b_mid, batch))
    improvement = np.maximum(0.0, f0 - np.minimum(values[:m], values[m:]))
    rate = improvement / deltas
    return StationarityProbe(
        worst_improvement=float(np.max(improvement, initial=0.0)),
        worst_rate=float(np.max(rate, initial=0.0)),
        n_probed=m,
        tolerance=opts.gradient_tolerance,
    )


@dataclass
class EndpointProbe:
    """Objective (minimization form) at x(b) - delta, x(b) and x(b) + delta."""

    component: int
    delta: float
    below: float
    center: float
    above: float

    @property
    def slope(self) -> float:
        return (self.above - self.below) / (2.0 * self.delta)

    @property
    def optimal(self) -> bool:
        return self.below >= self.center and self.above >= self.center


def endpoint_probe(
    prob: HerglotzProblem, x: GridFunction, component: int, delta: float = 1e-4
) -> EndpointProbe:
    """Move a free right endpoint by +-delta; at an extremal neither move helps.

    Raises:
        DomainError: If ``component`` is not a free endpoint or delta <= 0.
    """
    if component not in prob.free_components:
        raise DomainError(f"component {component} does not have a free right endpoint")
    if not delta > 0.0:
        raise DomainError(f"delta must be > 0, got {delta}")
    prob.check_trajectory(x)
    tr = _transcription(prob, x.grid, x)
    shifted = np.repeat(tr.base[np.newaxis], 3, axis=0)
    shifted[0, -1, component] -= delta
    shifted[2, -1, component] += delta
    values = tr.sign * staggered_z(
        prob, x.grid, shifted, np.einsum("ij,bjn->bin", tr.b_mid, shifted)
    )
    return EndpointProbe(component, delta, float(values[0]), float(values[1]), float(values[2]))
