"""Tests for the L-BFGS minimizer."""

import numpy as np
import pytest

from fractional_herglotz.optimize import minimize_lbfgs


def _rosenbrock(x: np.ndarray) -> float:
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


def _rosenbrock_grad(x: np.ndarray) -> np.ndarray:
    return np.array(
        [
            -400.0 * x[0] * (x[1] - x[0] ** 2) - 2.0 * (1.0 - x[0]),
            200.0 * (x[1] - x[0] ** 2),
        ]
    )


def test_sphere() -> None:
    """|x|^2 is minimized at the origin."""
    res = minimize_lbfgs(lambda x: float(x @ x), lambda x: 2 * x, np.arange(1.0, 6.0))
    assert res.converged
    assert res.message == "gradient sup-norm below tolerance"
    assert np.allclose(res.x, 0.0, atol=1e-6)
    assert res.gradient_norm <= 1e-6


def test_rosenbrock() -> None:
    """The banana valley from the classic start."""
    res = minimize_lbfgs(
        _rosenbrock, _rosenbrock_grad, np.array([-1.2, 1.0]), gradient_tolerance=1e-8
    )
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-4)
    assert res.n_evaluations > res.iterations


def test_exact_inverse_hessian_solves_quadratic_in_one_step() -> None:
    """With H^-1 supplied a badly scaled quadratic needs a single step."""
    scales = np.array([1.0, 1e6])
    target = np.array([3.0, -2.0])
    res = minimize_lbfgs(
        lambda x: float(0.5 * np.sum(scales * (x - target) ** 2)),
        lambda x: scales * (x - target),
        np.zeros(2),
        inverse_hessian=lambda g: g / scales,
    )
    assert res.converged
    assert res.iterations <= 2
    assert np.allclose(res.x, target)


def test_iteration_limit() -> None:
    """Stopping early is reported and not counted as convergence."""
    res = minimize_lbfgs(_rosenbrock, _rosenbrock_grad, np.array([-1.2, 1.0]), max_iterations=1)
    assert not res.converged
    assert res.status == "max_iterations"
    assert res.iterations == 1


def test_line_search_failure() -> None:
    """An objective that is infinite away from the start cannot be decreased."""
    x0 = np.array([1.0, 2.0])
    res = minimize_lbfgs(
        lambda x: 0.0 if np.array_equal(x, x0) else float("inf"),
        lambda x: np.ones_like(x),
        x0,
    )
    assert res.status == "line_search"
    assert res.iterations == 0
    assert np.array_equal(res.x, x0)


@pytest.mark.parametrize("memory", [1, 3, 20])
def test_memory_sizes(memory: int) -> None:
    """Any memory length reaches the minimum of a convex quadratic."""
    diag = np.linspace(1.0, 50.0, 8)
    res = minimize_lbfgs(
        lambda x: float(0.5 * x @ (diag * x)), lambda x: diag * x, np.ones(8), memory=memory
    )
    assert res.converged
    assert np.allclose(res.x, 0.0, atol=1e-6)
