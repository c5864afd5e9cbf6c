"""Tests for memory kernels and parameter sets."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fractional_herglotz.errors import DomainError
from fractional_herglotz.kernels import (
    KernelFamily,
    KernelSpec,
    ParameterSet,
    adjoint,
    check_complete_monotonicity,
    check_order,
    eval_kernel,
    make_caputo_kernel,
)


def test_caputo_kernel_value_at_one() -> None:
    """k(1) = 1/Gamma(0.5) = 1/sqrt(pi) for alpha = 0.5."""
    kernel = make_caputo_kernel(0.5)
    assert kernel.family is KernelFamily.POWER_LAW
    assert eval_kernel(kernel, 1.0) == pytest.approx(0.564190, abs=1e-6)
    assert eval_kernel(kernel, 1.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_caputo_kernel_singularity_is_bounded(alpha: float) -> None:
    """k(s) * s^sigma stays at 1/Gamma(1 - alpha) as s -> 0."""
    kernel = make_caputo_kernel(alpha)
    sigma = kernel.singularity_exponent
    assert sigma == pytest.approx(alpha)
    s = np.geomspace(1e-8, 1.0, 50)
    scaled = kernel(s) * s**sigma
    assert np.allclose(scaled, 1.0 / math.gamma(1.0 - alpha), rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5, -0.2, float("nan")])
def test_invalid_order_rejected(alpha: float) -> None:
    """Orders outside (0, 1) are domain errors."""
    with pytest.raises(DomainError):
        check_order(alpha)
    with pytest.raises(DomainError):
        make_caputo_kernel(alpha)


def test_exponential_kernel() -> None:
    """e^{-ln 2} = 1/2; rho = 0 is the constant kernel."""
    kernel = KernelSpec.exponential(1.0, 1.0)
    assert eval_kernel(kernel, math.log(2.0)) == pytest.approx(0.5, rel=1e-14)
    assert kernel.singularity_exponent == 0.0
    constant = KernelSpec.exponential(0.0, 2.0)
    assert eval_kernel(constant, 3.0) == 2.0
    assert float(constant.antiderivative(1.5)) == pytest.approx(3.0)


def test_exponential_kernel_rejects_bad_parameters() -> None:
    """Negative rates and non-positive scales are rejected."""
    with pytest.raises(DomainError):
        KernelSpec.exponential(-1.0)
    with pytest.raises(DomainError):
        KernelSpec.exponential(1.0, 0.0)


def test_eval_kernel_rejects_non_positive_argument() -> None:
    """s must be positive."""
    with pytest.raises(DomainError):
        eval_kernel(KernelSpec.power_law(0.5), -0.1)
    with pytest.raises(DomainError):
        eval_kernel(KernelSpec.exponential(1.0), 0.0)


def test_tabulated_kernel_interpolates_log_log() -> None:
    """Log-log interpolation reproduces a sampled power law exactly."""
    samples = [(s, s**-0.5) for s in (0.01, 0.1, 1.0, 10.0)]
    kernel = KernelSpec.tabulated(samples)
    assert eval_kernel(kernel, 0.3) == pytest.approx(0.3**-0.5, rel=1e-12)
    assert kernel.singularity_exponent == pytest.approx(0.5)
    assert kernel.support == (0.01, 10.0)
    with pytest.raises(DomainError):
        eval_kernel(kernel, 20.0)


def test_tabulated_kernel_monotone_requirement() -> None:
    """Increasing samples are rejected unless explicitly allowed."""
    samples = [(0.1, 1.0), (1.0, 2.0), (2.0, 0.5)]
    with pytest.raises(DomainError):
        KernelSpec.tabulated(samples)
    kernel = KernelSpec.tabulated(samples, require_monotone=False)
    assert kernel.family is KernelFamily.TABULATED
    with pytest.raises(DomainError):
        KernelSpec.tabulated([(0.1, 1.0), (1.0, -1.0)], require_monotone=False)


def test_complete_monotonicity_exponential() -> None:
    """e^{-s} passes every order."""
    report = check_complete_monotonicity(KernelSpec.exponential(1.0), 0.1, 10.0, max_order=3)
    assert report.passed
    assert [order for order, _ in report.violations] == [0, 1, 2, 3]


def test_complete_monotonicity_power_law() -> None:
    """s^{-1/2} has alternating derivatives."""
    report = check_complete_monotonicity(KernelSpec.power_law(0.5), 0.1, 10.0, max_order=3)
    assert report.passed
    assert report.failing_orders() == []


def test_complete_monotonicity_detects_oscillating_kernel() -> None:
    """Samples of 1 + sin(5s) violate the first-order condition."""
    s = np.linspace(0.05, 3.0, 200)
    samples = [(float(si), float(1.0 + 0.9 * np.sin(5.0 * si))) for si in s]
    kernel = KernelSpec.tabulated(samples, require_monotone=False)
    report = check_complete_monotonicity(kernel, 0.1, 2.5, n_samples=128, max_order=2)
    assert not report.passed
    assert 1 in report.failing_orders()


def test_complete_monotonicity_validates_arguments() -> None:
    """Ranges and orders are checked."""
    kernel = KernelSpec.power_law(0.5)
    with pytest.raises(DomainError):
        check_complete_monotonicity(kernel, 1.0, 0.5)
    with pytest.raises(DomainError):
        check_complete_monotonicity(kernel, 0.1, 1.0, max_order=5)


def test_parameter_set_adjoint() -> None:
    """P* swaps p and q."""
    assert adjoint(ParameterSet(0, 1, 1, 0)) == ParameterSet(0, 1, 0, 1)
    symmetric = ParameterSet(0, 1, 0.5, 0.5)
    assert symmetric.adjoint() == symmetric
    assert ParameterSet(0, 1, 1, 0).left_sided
    assert ParameterSet(0, 1, 0, 1).right_sided


def test_parameter_set_validation() -> None:
    """a < b and (p, q) != (0, 0)."""
    with pytest.raises(DomainError):
        ParameterSet(1, 1, 1, 0)
    with pytest.raises(DomainError):
        ParameterSet(0, 1, 0, 0)


@given(
    a=st.floats(-10, 10),
    width=st.floats(0.1, 10),
    p=st.floats(-5, 5),
    q=st.floats(0.1, 5),
)
def test_adjoint_is_an_involution(a: float, width: float, p: float, q: float) -> None:
    """adjoint(adjoint(P)) == P."""
    pset = ParameterSet(a, a + width, p, q)
    assert adjoint(adjoint(pset)) == pset
