"""Memory kernels k(s) and the parameter sets of the generalized operators."""

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gamma

from .errors import DomainError

FloatArray = NDArray[np.float64]


class KernelFamily(enum.Enum):
    """Supported families of difference kernels k(x - t)."""

    POWER_LAW = "power_law"
    EXPONENTIAL = "exponential"
    TABULATED = "tabulated"


def check_order(alpha: float) -> float:
    """Validate a fractional order, 0 < alpha < 1."""
    if not math.isfinite(alpha) or not 0.0 < alpha < 1.0:
        raise DomainError(f"fractional order must satisfy 0 < alpha < 1, got {alpha}")
    return float(alpha)


@dataclass(frozen=True)
class KernelSpec:
    """A memory kernel k(s), s > 0, with its singularity metadata.

    Build instances through :meth:`power_law`, :meth:`exponential` or
    :meth:`tabulated`; the constructor only validates.

    Examples:
        >>> KernelSpec.power_law(0.5).singularity_exponent
        0.5
    """

    family: KernelFamily
    beta: float = 0.0
    rho: float = 0.0
    c: float = 1.0
    samples: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.family is KernelFamily.POWER_LAW:
            if not 0.0 < self.beta < 1.0:
                raise DomainError(f"power-law order must satisfy 0 < beta < 1, got {self.beta}")
        elif self.family is KernelFamily.EXPONENTIAL:
            if not (math.isfinite(self.rho) and self.rho >= 0.0):
                raise DomainError(f"exponential rate must be >= 0, got {self.rho}")
            if not (math.isfinite(self.c) and self.c > 0.0):
                raise DomainError(f"exponential scale must be > 0, got {self.c}")
        else:
            if len(self.samples) < 2:
                raise DomainError("tabulated kernel needs at least two samples")
            s = np.array([p[0] for p in self.samples])
            k = np.array([p[1] for p in self.samples])
            if not (np.all(np.isfinite(s)) and np.all(np.isfinite(k))):
                raise DomainError("tabulated kernel samples must be finite")
            if s[0] <= 0.0 or np.any(np.diff(s) <= 0.0):
                raise DomainError("tabulated sample abscissae must be positive and increasing")
            if np.any(k <= 0.0):
                raise DomainError("tabulated kernel samples must be strictly positive")

    @classmethod
    def power_law(cls, beta: float) -> "KernelSpec":
        """k(s) = s^(beta-1) / Gamma(beta)."""
        return cls(family=KernelFamily.POWER_LAW, beta=float(beta))

    @classmethod
    def exponential(cls, rho: float, c: float = 1.0) -> "KernelSpec":
        """k(s) = c * exp(-rho * s); rho = 0 gives the constant kernel c."""
        return cls(family=KernelFamily.EXPONENTIAL, rho=float(rho), c=float(c))

    @classmethod
    def tabulated(
        cls, samples: Sequence[Sequence[float]], require_monotone: bool = True
    ) -> "KernelSpec":
        """Kernel interpolated log-log between positive samples ``[(s, k), ...]``.

        Raises:
            DomainError: If samples are not positive, or increase while
                ``require_monotone`` is set.
        """
        pairs = tuple((float(s), float(k)) for s, k in samples)
        kernel = cls(family=KernelFamily.TABULATED, samples=pairs)
        if require_monotone and any(b[1] > a[1] for a, b in zip(pairs, pairs[1:])):
            raise DomainError("tabulated kernel samples must be non-increasing")
        return kernel

    @property
    def singularity_exponent(self) -> float:
        """sigma >= 0 such that k(s) * s^sigma stays bounded as s -> 0+."""
        if self.family is KernelFamily.POWER_LAW:
            return 1.0 - self.beta
        if self.family is KernelFamily.EXPONENTIAL:
            return 0.0
        log_s, log_k = self._log_samples()
        slope = (log_k[1] - log_k[0]) / (log_s[1] - log_s[0])
        return max(0.0, -float(slope))

    @property
    def support(self) -> tuple[float, float]:
        """Range of s on which :func:`eval_kernel` accepts arguments."""
        if self.family is KernelFamily.TABULATED:
            return self.samples[0][0], self.samples[-1][0]
        return 0.0, math.inf

    def __call__(self, s: ArrayLike) -> FloatArray:
        """Evaluate k at s > 0 without range checks (tabulated kernels extrapolate)."""
        s_arr = np.asarray(s, dtype=np.float64)
        if self.family is KernelFamily.POWER_LAW:
            return s_arr ** (self.beta - 1.0) / gamma(self.beta)
        if self.family is KernelFamily.EXPONENTIAL:
            return self.c * np.exp(-self.rho * s_arr)
        return np.exp(self._log_interp(np.log(s_arr)))

    def antiderivative(self, s: ArrayLike) -> FloatArray:
        """F0(s) = integral of k over [0, s] (power-law and exponential only)."""
        s_arr = np.asarray(s, dtype=np.float64)
        if self.family is KernelFamily.POWER_LAW:
            return s_arr**self.beta / gamma(self.beta + 1.0)
        if self.family is KernelFamily.EXPONENTIAL:
            if self.rho == 0.0:
                return self.c * s_arr
            return -self.c * np.expm1(-self.rho * s_arr) / self.rho
        raise DomainError("tabulated kernels have no closed-form antiderivative")

    def first_moment(self, s: ArrayLike) -> FloatArray:
        """F1(s) = integral of u * k(u) over [0, s] (power-law and exponential only)."""
        s_arr = np.asarray(s, dtype=np.float64)
        if self.family is KernelFamily.POWER_LAW:
            return s_arr ** (self.beta + 1.0) / ((self.beta + 1.0) * gamma(self.beta))
        if self.family is KernelFamily.EXPONENTIAL:
            if self.rho == 0.0:
                return 0.5 * self.c * s_arr**2
            x = self.rho * s_arr
            return self.c * (-np.expm1(-x) - x * np.exp(-x)) / self.rho**2
        raise DomainError("tabulated kernels have no closed-form first moment")

    def _log_samples(self) -> tuple[FloatArray, FloatArray]:
        pts = np.array(self.samples, dtype=np.float64)
        return np.log(pts[:, 0]), np.log(pts[:, 1])

    def _log_interp(self, log_s: FloatArray) -> FloatArray:
        xs, ys = self._log_samples()
        out = np.interp(log_s, xs, ys)
        left_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        right_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(log_s < xs[0], ys[0] + left_slope * (log_s - xs[0]), out)
        return np.where(log_s > xs[-1], ys[-1] + right_slope * (log_s - xs[-1]), out)


@dataclass(frozen=True)
class ParameterSet:
    """The tuple <a, b, p, q> weighting the left and right kernel integrals."""

    a: float
    b: float
    p: float
    q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.a >= self.b:
            raise DomainError(f"parameter set needs a < b, got a={self.a}, b={self.b}")
        if self.p == 0.0 and self.q == 0.0:
            raise DomainError("parameter set needs (p, q) != (0, 0)")

    @property
    def left_sided(self) -> bool:
        return self.q == 0.0

    @property
    def right_sided(self) -> bool:
        return self.p == 0.0

    def adjoint(self) -> "ParameterSet":
        """P* = <a, b, q, p>."""
        return adjoint(self)


def adjoint(pset: ParameterSet) -> ParameterSet:
    """Swap the left and right weights; an involution."""
    return ParameterSet(a=pset.a, b=pset.b, p=pset.q, q=pset.p)


def make_caputo_kernel(alpha: float) -> KernelSpec:
    """Kernel of K^(1-alpha) that turns B into the standard Caputo derivative.

    Example:
        >>> round(float(eval_kernel(make_caputo_kernel(0.5), 1.0)), 6)
        0.56419
    """
    return KernelSpec.power_law(1.0 - check_order(alpha))


def kernel_for_order(kernel: KernelSpec | None, alpha: float) -> KernelSpec:
    """The kernel to use at order ``alpha``, keeping the family of ``kernel``.

    Power-law kernels (and ``None``) become the Caputo kernel of ``alpha``; exponential
    and tabulated kernels do not depend on the order and are returned unchanged.
    """
    if kernel is None or kernel.family is KernelFamily.POWER_LAW:
        return make_caputo_kernel(alpha)
    return kernel


def eval_kernel(kernel: KernelSpec, s: float) -> float:
    """Evaluate ``kernel`` at a single s > 0.

    Raises:
        DomainError: If s <= 0, or s falls outside a tabulated kernel's samples.
    """
    if not s > 0.0:
        raise DomainError(f"kernel argument must be positive, got {s}")
    lo, hi = kernel.support
    if kernel.family is KernelFamily.TABULATED and not lo <= s <= hi:
        raise DomainError(f"kernel argument {s} outside tabulated range [{lo}, {hi}]")
    return float(kernel(s))


@dataclass
class MonotonicityReport:
    """Worst sign violation of (-1)^n k^(n)(s) >= 0 per derivative order."""

    violations: list[tuple[int, float]]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for _, v in self.violations)

    def failing_orders(self) -> list[int]:
        return [n for n, v in self.violations if v > self.tolerance]


def _fd_derivative(kernel: KernelSpec, s: FloatArray, order: int) -> FloatArray:
    if order == 0:
        return kernel(s)
    step = 0.05 * s
    total = np.zeros_like(s)
    for j in range(order + 1):
        total += (-1) ** j * math.comb(order, j) * kernel(s + (0.5 * order - j) * step)
    return total / step**order


def check_complete_monotonicity(
    kernel: KernelSpec,
    s_min: float,
    s_max: float,
    n_samples: int = 64,
    max_order: int = 3,
    tolerance: float = 1e-6,
) -> MonotonicityReport:
    """Sample complete monotonicity with central finite differences.

    Violations are measured relative to the local scale k(s) / s^n on a
    geometric grid, so a pass is evidence, not proof.

    Raises:
        DomainError: If the sampling range or order is invalid.
    """
    if not 0.0 < s_min < s_max:
        raise DomainError(f"need 0 < s_min < s_max, got [{s_min}, {s_max}]")
    if not 0 <= max_order <= 4:
        raise DomainError(f"max_order must be in 0..4, got {max_order}")
    if n_samples < 2:
        raise DomainError(f"n_samples must be >= 2, got {n_samples}")

    s = np.geomspace(s_min, s_max, n_samples)
    scale = np.abs(kernel(s))
    violations: list[tuple[int, float]] = []
    for order in range(max_order + 1):
        signed = (-1) ** order * _fd_derivative(kernel, s, order)
        relative = np.maximum(0.0, -signed) / (scale / s**order)
        violations.append((order, float(np.max(relative))))
    return MonotonicityReport(violations=violations, tolerance=tolerance)
