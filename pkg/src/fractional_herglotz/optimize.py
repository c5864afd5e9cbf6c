"""Limited-memory BFGS with Armijo backtracking and an optional preconditioner."""

import logging
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .kernels import FloatArray

logger = logging.getLogger(__name__)

Objective = Callable[[FloatArray], float]
Gradient = Callable[[FloatArray], FloatArray]
InverseHessian = Callable[[FloatArray], FloatArray]

STATUS = {
    "gradient": "gradient sup-norm below tolerance",
    "step": "step below tolerance",
    "max_iterations": "iteration limit reached",
    "line_search": "line search failed to find sufficient decrease",
}

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 40


@dataclass
class MinimizeResult:
    x: FloatArray
    fun: float
    grad: FloatArray
    iterations: int
    status: str
    n_evaluations: int

    @property
    def converged(self) -> bool:
        return self.status == "gradient"

    @property
    def message(self) -> str:
        return STATUS[self.status]

    @property
    def gradient_norm(self) -> float:
        return float(np.max(np.abs(self.grad), initial=0.0))


def _two_loop(
    g: FloatArray,
    pairs: deque[tuple[FloatArray, FloatArray, float]],
    h0: InverseHessian,
) -> FloatArray:
    """Apply the L-BFGS inverse Hessian (built on ``h0``) to ``g``."""
    q = g.copy()
    alphas: list[float] = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        h0y = h0(y)
        gamma = float(s @ y) / float(y @ h0y)
        r = gamma * h0(q)
    else:
        r = h0(q)
    for (s, y, rho), a in zip(pairs, reversed(alphas), strict=True):
        b = rho * float(y @ r)
        r += s * (a - b)
    return r


def minimize_lbfgs(
    fun: Objective,
    grad: Gradient,
    x0: FloatArray,
    *,
    memory: int = 10,
    max_iterations: int = 5000,
    gradient_tolerance: float = 1e-6,
    step_tolerance: float = 1e-12,
    inverse_hessian: InverseHessian | None = None,
) -> MinimizeResult:
    """Minimize ``fun`` from ``x0``.

    Convergence means the gradient sup-norm fell to ``gradient_tolerance``; the
    other stopping reasons (see ``STATUS``) leave ``converged`` false.
    ``inverse_hessian`` maps a vector to an approximate H^-1 times it and seeds
    every two-loop recursion; without it the first step is scaled to unit length.

    Example:
        >>> res = minimize_lbfgs(lambda x: float(x @ x), lambda x: 2 * x, np.ones(3))
        >>> res.converged
        True
    """
    h0: InverseHessian = inverse_hessian if inverse_hessian is not None else (lambda v: v)
    x = np.array(x0, dtype=np.float64)
    f = fun(x)
    g = grad(x)
    n_evals = 1
    pairs: deque[tuple[FloatArray, FloatArray, float]] = deque(maxlen=memory)

    for it in range(max_iterations):
        gnorm = float(np.max(np.abs(g), initial=0.0))
        logger.debug("iteration %d: f=%.12g |g|=%.3e", it, f, gnorm)
        if gnorm <= gradient_tolerance:
            return MinimizeResult(x, f, g, it, "gradient", n_evals)

        direction = -_two_loop(g, pairs, h0)
        slope = float(g @ direction)
        if not slope < 0.0:
            pairs.clear()
            direction = -h0(g)
            slope = float(g @ direction)
        if not pairs and inverse_hessian is None:
            scale = 1.0 / max(1.0, float(np.linalg.norm(g)))
            direction *= scale
            slope *= scale

        step = 1.0
        accepted = False
        trial, f_trial = x, f
        for _ in range(_MAX_BACKTRACKS):
            trial = x + step * direction
            f_trial = fun(trial)
            n_evals += 1
            if np.isfinite(f_trial) and f_trial <= f + _ARMIJO_C1 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if pairs:
                logger.debug("line search failed at iteration %d, resetting memory", it)
                pairs.clear()
                continue
            logger.warning("line search failed at iteration %d (f=%.12g)", it, f)
            return MinimizeResult(x, f, g, it, "line_search", n_evals)

        s = trial - x
        g_trial = grad(trial)
        y = g_trial - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = trial, f_trial, g_trial
        if float(np.max(np.abs(s))) <= step_tolerance * max(1.0, float(np.max(np.abs(x)))):
            if float(np.max(np.abs(g), initial=0.0)) <= gradient_tolerance:
                return MinimizeResult(x, f, g, it + 1, "gradient", n_evals)
            return MinimizeResult(x, f, g, it + 1, "step", n_evals)

    done = float(np.max(np.abs(g), initial=0.0)) <= gradient_tolerance
    status = "gradient" if done else "max_iterations"
    return MinimizeResult(x, f, g, max_iterations, status, n_evals)
