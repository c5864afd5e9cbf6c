"""Herglotz problems: the functional z[x; t], its integrating factor and necessary conditions."""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, EvaluationError
from .kernels import FloatArray
from .lagrangians import Lagrangian
from .numgrid import (
    Grid,
    GridFunction,
    core_supnorm,
    cumulative_integral,
    derivative,
    interior_supnorm,
)
from .operators import OperatorConfig, apply_A_adjoint, apply_B, apply_K

logger = logging.getLogger(__name__)

# Relative width of the end strips left out of the core residual view.
BOUNDARY_LAYER = 0.05


class Extremum(enum.Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class HerglotzProblem:
    """Extremize z(b) where z' = L(t, x, B_P[x], z), z(a) = z_a, x(a) = x_a.

    ``x_b`` holds one entry per component; ``None`` marks a free right endpoint.
    """

    dim: int
    lagrangian: Lagrangian
    op_config: OperatorConfig
    x_a: tuple[float, ...]
    x_b: tuple[float | None, ...]
    z_a: float = 0.0
    extremum: Extremum = Extremum.MIN

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "x_a", tuple(float(v) for v in self.x_a))
        object.__setattr__(self, "x_b", tuple(None if v is None else float(v) for v in self.x_b))
        if len(self.x_a) != self.dim or len(self.x_b) != self.dim:
            raise DomainError(
                f"boundary data must have {self.dim} components, "
                f"got x_a={len(self.x_a)}, x_b={len(self.x_b)}"
            )
        values = [*self.x_a, *(v for v in self.x_b if v is not None), self.z_a]
        if not all(math.isfinite(v) for v in values):
            raise DomainError("boundary data must be finite")

    @property
    def free_components(self) -> list[int]:
        return [j for j, v in enumerate(self.x_b) if v is None]

    def grid(self, n_nodes: int) -> Grid:
        return self.op_config.grid(n_nodes)

    def check_trajectory(self, x: GridFunction, boundary: bool = True) -> None:
        """Validate dimension, interval and (optionally) the fixed boundary values.

        Raises:
            DomainError: If ``x`` does not fit the problem.
        """
        if x.dim != self.dim:
            raise DomainError(f"trajectory has dimension {x.dim}, problem expects {self.dim}")
        pset = self.op_config.pset
        if not (math.isclose(x.grid.a, pset.a) and math.isclose(x.grid.b, pset.b)):
            raise DomainError(
                f"trajectory lives on [{x.grid.a}, {x.grid.b}], problem on [{pset.a}, {pset.b}]"
            )
        if not boundary:
            return
        scale = 1e-9 * (1.0 + float(np.max(np.abs(x.values))))
        if np.any(np.abs(x.values[0] - np.array(self.x_a)) > scale):
            raise DomainError(f"trajectory violates x(a) = {list(self.x_a)}")
        for j, xb in enumerate(self.x_b):
            if xb is not None and abs(x.values[-1, j] - xb) > scale:
                raise DomainError(f"trajectory violates x_{j + 1}(b) = {xb}")


@dataclass(frozen=True, eq=False)
class HerglotzEvaluation:
    """A trajectory with v = B_P[x], the solved z, lambda and the Lagrangian partials."""

    x: GridFunction
    v: GridFunction
    z: GridFunction
    z_b: float
    lam: GridFunction
    lx: GridFunction
    lv: GridFunction
    lz: GridFunction

    @property
    def grid(self) -> Grid:
        return self.x.grid


def _check_finite(values: FloatArray, what: str, node: int) -> None:
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"Lagrangian {what} is not finite", node)


def evaluate_z(
    prob: HerglotzProblem, x: GridFunction, boundary: bool = True
) -> HerglotzEvaluation:
    """Integrate z' = L(t, x, B_P[x], z) with Heun steps and derive lambda.

    Set ``boundary=False`` to evaluate trajectories that leave the boundary data,
    as variations do.

    Raises:
        DomainError: If ``x`` does not fit the problem.
        EvaluationError: If L or a partial is non-finite at some node.
    """
    prob.check_trajectory(x, boundary=boundary)
    lag = prob.lagrangian
    grid = x.grid
    h = grid.h
    t = grid.nodes
    xs = x.values
    v = apply_B(prob.op_config, x)
    vs = v.values

    z = np.empty(grid.n_nodes)
    z[0] = prob.z_a
    current = lag(t[0], xs[0], vs[0], z[0])
    _check_finite(current, "value", 0)
    for i in range(grid.n_nodes - 1):
        predictor = z[i] + h * current
        ahead = lag(t[i + 1], xs[i + 1], vs[i + 1], predictor)
        _check_finite(ahead, "value", i + 1)
        z[i + 1] = z[i] + 0.5 * h * (current + ahead)
        current = lag(t[i + 1], xs[i + 1], vs[i + 1], z[i + 1])
        _check_finite(current, "value", i + 1)

    lx = lag.dx(t, xs, vs, z)
    lv = lag.dv(t, xs, vs, z)
    lz = lag.dz(t, xs, vs, z)
    for name, arr in (("dx", lx), ("dv", lv), ("dz", lz)):
        bad = np.nonzero(~np.isfinite(np.reshape(arr, (grid.n_nodes, -1))).any(axis=1))[0]
        if bad.size:
            raise EvaluationError(f"Lagrangian partial {name} is not finite", int(bad[0]))

    lz_fn = GridFunction(grid, lz)
    lam = lz_fn.with_values(np.exp(-cumulative_integral(lz_fn).values))
    return HerglotzEvaluation(
        x=x,
        v=v,
        z=GridFunction(grid, z),
        z_b=float(z[-1]),
        lam=lam,
        lx=GridFunction(grid, lx),
        lv=GridFunction(grid, lv),
        lz=lz_fn,
    )


def staggered_z(
    prob: HerglotzProblem, grid: Grid, xs: FloatArray, v_mid: FloatArray
) -> FloatArray:
    """z(b) of the cell-midpoint transcription for a batch of trajectories.

    ``xs`` has shape ``(..., N, n)``; ``v_mid`` holds B_P[x] at the N - 1 cell
    midpoints, shape ``(..., N - 1, n)``. Each cell takes one explicit midpoint
    step with x and v frozen at the cell midpoint. Non-finite Lagrangian values
    propagate into the result.
    """
    lag = prob.lagrangian
    h = grid.h
    x_mid = 0.5 * (xs[..., :-1, :] + xs[..., 1:, :])
    batch = xs.shape[:-2]
    z = np.full(batch, prob.z_a)
    with np.errstate(all="ignore"):
        for i, tm in enumerate(grid.midpoints):
            t_i = np.full(batch, tm)
            xm = x_mid[..., i, :]
            vm = v_mid[..., i, :]
            half = z + 0.5 * h * lag(t_i, xm, vm, z)
            z = z + h * lag(t_i, xm, vm, half)
    return z


def el_residual(prob: HerglotzProblem, ev: HerglotzEvaluation) -> GridFunction:
    """r_j = lambda dL/dx_j - (D o K_{P*})(lambda dL/dv_j), one column per component.

    The adjoint term is the derivative that integration by parts attaches to the
    multiplier; in classical mode with a left-sided P it reduces to -d/dt.
    Endpoint values rest on one-sided stencils; see :func:`el_residual_supnorm`.
    """
    lam = ev.lam.values
    weighted = ev.lv.with_values(lam * ev.lv.values)
    adjoint_term = apply_A_adjoint(prob.op_config, weighted).values
    return ev.x.with_values(lam * ev.lx.values + adjoint_term)


def el_residual_supnorm(
    prob: HerglotzProblem, ev: HerglotzEvaluation, edge: int = 1
) -> FloatArray:
    """Componentwise sup-norm of the Euler-Lagrange residual over interior nodes."""
    return interior_supnorm(el_residual(prob, ev), edge=edge)


def el_residual_core_supnorm(
    prob: HerglotzProblem, ev: HerglotzEvaluation, layer: float = BOUNDARY_LAYER
) -> FloatArray:
    """Componentwise sup-norm of the Euler-Lagrange residual on the core of [a, b].

    Fixed-endpoint fractional extremals are not smooth at the endpoints: lambda dL/dv
    behaves like a power of b - t near b and x like a power of t - a near a. On a
    uniform grid the residual at the first and last few nodes then grows under
    refinement while it converges on every compact subinterval. The core drops the
    strips of relative width ``layer`` at both ends.
    """
    return core_supnorm(el_residual(prob, ev), layer)


def transversality_residual(prob: HerglotzProblem, ev: HerglotzEvaluation) -> dict[int, float]:
    """K_{P*}[lambda dL/dv_j](b) for every free component j.

    Raises:
        ContractError: If every right endpoint is fixed.
    """
    free = prob.free_components
    if not free:
        raise ContractError("transversality needs at least one free right endpoint")
    weighted = ev.lv.with_values(ev.lam.values * ev.lv.values)
    at_b = apply_K(prob.op_config.adjoint(), weighted).values[-1]
    return {j: float(at_b[j]) for j in free}


def classical_herglotz_residual(prob: HerglotzProblem, ev: HerglotzEvaluation) -> GridFunction:
    """dL/dx - c (d/dt dL/dv - dL/dz dL/dv), c = p + q, the classical Herglotz equation.

    Raises:
        ContractError: Outside classical mode.
    """
    cfg = prob.op_config
    if not cfg.classical_mode:
        raise ContractError("the classical Herglotz residual needs classical mode")
    c = cfg.pset.p + cfg.pset.q
    dlv = derivative(ev.lv).values
    lz = ev.lz.values
    return ev.x.with_values(ev.lx.values - c * (dlv - lz * ev.lv.values))


def first_variation(
    prob: HerglotzProblem, x: GridFunction, eta: GridFunction, step: float
) -> float:
    """Central-difference estimate of d/de z[x + e*eta; b] at e = 0."""
    if not step > 0.0:
        raise DomainError(f"variation step must be > 0, got {step}")
    if eta.dim != x.dim:
        raise DomainError(f"variation has dimension {eta.dim}, trajectory {x.dim}")
    plus = evaluate_z(prob, x.with_values(x.values + step * eta.values), boundary=False)
    minus = evaluate_z(prob, x.with_values(x.values - step * eta.values), boundary=False)
    return (plus.z_b - minus.z_b) / (2.0 * step)


@dataclass
class PartialsReport:
    """Worst disagreement between supplied partials and central differences of L."""

    n_probes: int
    seed: int
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def worst_relative_error(self) -> float:
        return max(self.errors.values(), default=0.0)


def _relative(analytic: FloatArray, numeric: FloatArray) -> float:
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))))


def check_partials(
    prob: HerglotzProblem, n_probes: int = 16, seed: int = 0, fd_step: float = 1e-6
) -> PartialsReport:
    """Compare dL/dx, dL/dv and dL/dz with central differences at random states.

    States are drawn from a seeded generator: t uniform on [a, b], x, v and z
    standard normal. Errors are relative to max(1, |difference quotient|).
    """
    if n_probes < 1:
        raise DomainError(f"n_probes must be >= 1, got {n_probes}")
    lag = prob.lagrangian
    n = prob.dim
    rng = np.random.default_rng(seed)
    pset = prob.op_config.pset
    t = rng.uniform(pset.a, pset.b, n_probes)
    x = rng.standard_normal((n_probes, n))
    v = rng.standard_normal((n_probes, n))
    z = rng.standard_normal(n_probes)

    report = PartialsReport(n_probes=n_probes, seed=seed)
    for name, arg, supplied in (("dx", x, lag.dx(t, x, v, z)), ("dv", v, lag.dv(t, x, v, z))):
        numeric = np.empty((n_probes, n))
        for j in range(n):
            step = fd_step * np.maximum(1.0, np.abs(arg[:, j]))
            shift = np.zeros((n_probes, n))
            shift[:, j] = step
            if name == "dx":
                up, down = lag(t, x + shift, v, z), lag(t, x - shift, v, z)
            else:
                up, down = lag(t, x, v + shift, z), lag(t, x, v - shift, z)
            numeric[:, j] = (up - down) / (2.0 * step)
        report.errors[name] = _relative(np.asarray(supplied), numeric)

    step = fd_step * np.maximum(1.0, np.abs(z))
    numeric_z = (lag(t, x, v, z + step) - lag(t, x, v, z - step)) / (2.0 * step)
    report.errors["dz"] = _relative(np.asarray(lag.dz(t, x, v, z)), numeric_z)
    logger.debug("partials check: %s", report.errors)
    return report
