"""Invariance of the Herglotz functional under x -> x + s*xi and the Noether identity."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .herglotz import (
    BOUNDARY_LAYER,
    HerglotzEvaluation,
    HerglotzProblem,
    evaluate_z,
    first_variation,
)
from .kernels import FloatArray
from .numgrid import GridFunction, core_supnorm, integrate, interior_supnorm
from .operators import OperatorConfig, apply_A_adjoint, apply_B

Generator = Callable[[FloatArray, FloatArray], FloatArray]


@dataclass(frozen=True)
class TransformationFamily:
    """First-order generator xi(t, x) of a family x_bar = h(t, x, s), h(t, x, 0) = x.

    ``xi`` maps node times of shape (N,) and states of shape (N, n) to (N, n).
    """

    name: str
    xi: Generator

    def along(self, x: GridFunction) -> GridFunction:
        """xi(t, x(t)) sampled on the trajectory's grid."""
        values = np.asarray(self.xi(x.t, x.values), dtype=np.float64)
        if values.shape != x.values.shape:
            raise DomainError(
                f"generator {self.name} returned shape {values.shape}, expected {x.values.shape}"
            )
        return x.with_values(values)


def translation(component: int, dim: int) -> TransformationFamily:
    """x_j -> x_j + s for one component."""
    if not 0 <= component < dim:
        raise DomainError(f"component {component} outside 0..{dim - 1}")

    def xi(t: FloatArray, x: FloatArray) -> FloatArray:
        out = np.zeros((len(t), dim))
        out[:, component] = 1.0
        return out

    return TransformationFamily(f"translation[{component}]", xi)


def scaling(dim: int) -> TransformationFamily:
    """x -> e^s x."""

    def xi(t: FloatArray, x: FloatArray) -> FloatArray:
        return np.array(x, dtype=np.float64).reshape(len(t), dim)

    return TransformationFamily("scaling", xi)


def zero_generator(dim: int) -> TransformationFamily:
    return TransformationFamily("zero", lambda t, x: np.zeros((len(t), dim)))


def tabulated_generator(table: GridFunction, name: str = "tabulated") -> TransformationFamily:
    """xi(t) read from a table and linearly interpolated in t; independent of x."""
    nodes = table.t

    def xi(t: FloatArray, x: FloatArray) -> FloatArray:
        if np.min(t) < nodes[0] - 1e-12 or np.max(t) > nodes[-1] + 1e-12:
            raise DomainError("trajectory times fall outside the generator table")
        cols = [np.interp(t, nodes, table.values[:, j]) for j in range(table.dim)]
        return np.column_stack(cols)

    return TransformationFamily(name, xi)


def invariance_defect(
    prob: HerglotzProblem, x: GridFunction, xi: TransformationFamily, s_step: float = 1e-5
) -> float:
    """theta(b) = d/ds z[x + s*xi; b] at s = 0 by central differences; ~0 means invariant."""
    if not 1e-8 < s_step < 1e-2:
        raise DomainError(f"s_step must lie in (1e-8, 1e-2), got {s_step}")
    return first_variation(prob, x, xi.along(x), s_step)


def noether_operator(cfg: OperatorConfig, f: GridFunction, g: GridFunction) -> GridFunction:
    """O[f, g] = f B_P[g] + g (D o K_{P*})[f], componentwise.

    With the adjoint derivative -D o K_{P*} this is f B_P g minus g times it;
    in classical mode with a left-sided P it is d(fg)/dt.
    """
    if f.values.shape != g.values.shape:
        raise DomainError(f"shapes differ: {f.values.shape} vs {g.values.shape}")
    fv, gv = f.values, g.values
    return f.with_values(fv * apply_B(cfg, g).values - gv * apply_A_adjoint(cfg, f).values)


@dataclass
class NoetherResult:
    pointwise: GridFunction
    supnorm: float
    integral: float
    core_supnorm: float


def noether_residual(
    prob: HerglotzProblem,
    ev: HerglotzEvaluation,
    xi: TransformationFamily,
    edge: int = 1,
    layer: float = BOUNDARY_LAYER,
) -> NoetherResult:
    """Sum over j of O[lambda dL/dv_j, xi_j(t, x(t))] along the evaluated trajectory.

    The sup-norm skips ``edge`` nodes at each end, the core sup-norm the strips of
    relative width ``layer`` (see :func:`herglotz.el_residual_core_supnorm`); the
    integral covers [a, b].
    """
    f = ev.lv.with_values(ev.lam.values * ev.lv.values)
    g = xi.along(ev.x)
    terms = noether_operator(prob.op_config, f, g)
    total = GridFunction(ev.grid, np.sum(terms.values, axis=1))
    return NoetherResult(
        pointwise=total,
        supnorm=float(interior_supnorm(total, edge=edge)[0]),
        integral=integrate(total),
        core_supnorm=float(core_supnorm(total, layer)[0]),
    )


@dataclass
class VariationalIdentity:
    """theta(b) lambda(b) against the integral of (dL/dx xi + dL/dv B[xi]) lambda."""

    lhs: float
    rhs: float

    @property
    def defect(self) -> float:
        return abs(self.lhs - self.rhs) / (1.0 + abs(self.rhs))


def variational_identity(
    prob: HerglotzProblem, x: GridFunction, xi: TransformationFamily, s_step: float = 1e-5
) -> VariationalIdentity:
    """Check the linearized Herglotz equation for any trajectory and generator.

    theta' = dL/dx xi + dL/dv B[xi] + dL/dz theta with theta(a) = 0, so
    lambda(b) theta(b) equals the lambda-weighted integral of the source.
    """
    ev = evaluate_z(prob, x, boundary=False)
    eta = xi.along(x)
    b_eta = apply_B(prob.op_config, eta).values
    source = np.sum(ev.lx.values * eta.values + ev.lv.values * b_eta, axis=1)
    rhs = integrate(GridFunction(x.grid, source * ev.lam.values[:, 0]))
    theta_b = invariance_defect(prob, x, xi, s_step)
    return VariationalIdentity(lhs=theta_b * float(ev.lam.values[-1, 0]), rhs=rhs)
