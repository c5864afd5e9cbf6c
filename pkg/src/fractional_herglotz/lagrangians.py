"""Built-in Lagrangians L(t, x, v, z) with exact partial derivatives.

Every callable is vectorized over a leading batch shape: ``t`` and ``z`` have
shape ``(...)``, ``x`` and ``v`` have shape ``(..., n)``. ``value`` and ``dz``
return ``(...)``; ``dx`` and ``dv`` return ``(..., n)``.
"""

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, DomainError
from .kernels import FloatArray

ScalarFn = Callable[[FloatArray, FloatArray, FloatArray, FloatArray], FloatArray]

BUILTIN_LAGRANGIANS = ("oscillator", "quadratic", "polynomial")


@dataclass(frozen=True)
class Lagrangian:
    """A Lagrangian and its partials with respect to x, v = B[x] and z."""

    name: str
    value: ScalarFn
    dx: ScalarFn
    dv: ScalarFn
    dz: ScalarFn
    params: tuple[tuple[str, float], ...] = field(default=(), compare=False)

    def __call__(self, t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return self.value(t, x, v, z)


def _batch_shape(t: FloatArray, x: FloatArray, z: FloatArray) -> tuple[int, ...]:
    return np.broadcast_shapes(np.shape(t), np.shape(z), np.shape(x)[:-1])


def oscillator(m: float, k: float, lambda0: float) -> Lagrangian:
    """L = m|v|^2/2 - k|x|^2/2 + lambda0*z, the damped oscillator with memory."""
    if not m > 0.0:
        raise DomainError(f"oscillator mass must be > 0, got {m}")
    if k < 0.0:
        raise DomainError(f"oscillator elasticity must be >= 0, got {k}")

    def value(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return 0.5 * m * np.sum(v * v, axis=-1) - 0.5 * k * np.sum(x * x, axis=-1) + lambda0 * z

    def dx(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return -k * np.broadcast_to(x, (*_batch_shape(t, x, z), x.shape[-1]))

    def dv(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return m * np.broadcast_to(v, (*_batch_shape(t, v, z), v.shape[-1]))

    def dz(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return np.full(_batch_shape(t, x, z), float(lambda0))

    return Lagrangian(
        "oscillator", value, dx, dv, dz, params=(("m", m), ("k", k), ("lambda0", lambda0))
    )


def quadratic(a: float, b: float, c: float) -> Lagrangian:
    """L = a|v|^2/2 + b|x|^2/2 + c*z.

    Example:
        >>> lag = quadratic(1.0, 0.0, 0.0)
        >>> float(lag(np.array(0.0), np.array([0.0]), np.array([2.0]), np.array(0.0)))
        2.0
    """

    def value(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return 0.5 * a * np.sum(v * v, axis=-1) + 0.5 * b * np.sum(x * x, axis=-1) + c * z

    def dx(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return b * np.broadcast_to(x, (*_batch_shape(t, x, z), x.shape[-1]))

    def dv(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return a * np.broadcast_to(v, (*_batch_shape(t, v, z), v.shape[-1]))

    def dz(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return np.full(_batch_shape(t, x, z), float(c))

    return Lagrangian("quadratic", value, dx, dv, dz, params=(("a", a), ("b", b), ("c", c)))


@dataclass(frozen=True)
class Monomial:
    """coef * t^t * prod x_j^x[j] * prod v_j^v[j] * z^z with non-negative integer powers."""

    coef: float
    t: int = 0
    x: tuple[int, ...] = ()
    v: tuple[int, ...] = ()
    z: int = 0

    def __post_init__(self) -> None:
        powers = (self.t, self.z, *self.x, *self.v)
        if any(p < 0 for p in powers):
            raise DomainError(f"monomial powers must be non-negative, got {powers}")

    def _factors(
        self, t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray
    ) -> list[tuple[tuple[str, int], FloatArray, int]]:
        n = x.shape[-1]
        if len(self.x) > n or len(self.v) > n:
            raise DomainError(f"monomial uses more components than the dimension {n}")
        factors = [(("t", 0), t, self.t), (("z", 0), z, self.z)]
        factors += [(("x", j), x[..., j], e) for j, e in enumerate(self.x)]
        factors += [(("v", j), v[..., j], e) for j, e in enumerate(self.v)]
        return factors

    def evaluate(
        self,
        t: FloatArray,
        x: FloatArray,
        v: FloatArray,
        z: FloatArray,
        wrt: tuple[str, int] | None = None,
    ) -> FloatArray:
        """Value of the monomial, or its partial with respect to ``wrt`` (e.g. ("x", 0))."""
        out = np.full(_batch_shape(t, x, z), float(self.coef))
        for key, base, power in self._factors(t, x, v, z):
            if key == wrt:
                if power == 0:
                    return np.zeros_like(out)
                out = out * power
                power -= 1
            if power:
                out = out * base**power
        return out


def polynomial(terms: Sequence[Monomial]) -> Lagrangian:
    """Sum of monomials in (t, x, v, z)."""
    terms = tuple(terms)
    if not terms:
        raise DomainError("polynomial Lagrangian needs at least one term")

    def value(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return sum((m.evaluate(t, x, v, z) for m in terms), np.zeros(_batch_shape(t, x, z)))

    def _gradient(
        var: str, t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray
    ) -> FloatArray:
        out = np.zeros((*_batch_shape(t, x, z), x.shape[-1]))
        for j in range(x.shape[-1]):
            for m in terms:
                powers = m.x if var == "x" else m.v
                if j < len(powers) and powers[j] > 0:
                    out[..., j] += m.evaluate(t, x, v, z, wrt=(var, j))
        return out

    def dx(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return _gradient("x", t, x, v, z)

    def dv(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return _gradient("v", t, x, v, z)

    def dz(t: FloatArray, x: FloatArray, v: FloatArray, z: FloatArray) -> FloatArray:
        return sum(
            (m.evaluate(t, x, v, z, wrt=("z", 0)) for m in terms), np.zeros(_batch_shape(t, x, z))
        )

    return Lagrangian("polynomial", value, dx, dv, dz)


def _number(spec: Mapping[str, Any], key: str, default: float | None = None) -> float:
    raw = spec.get(key, default)
    if raw is None:
        raise ConfigError("missing_field", f"lagrangian.{key} is required")
    if isinstance(raw, bool) or not isinstance(raw, int | float):
        raise ConfigError("domain", f"lagrangian.{key} must be a number, got {raw!r}")
    return float(raw)


def _powers(raw: Any, where: str) -> tuple[int, ...]:
    if isinstance(raw, int) and not isinstance(raw, bool):
        return (raw,)
    if not isinstance(raw, list) or not all(
        isinstance(p, int) and not isinstance(p, bool) for p in raw
    ):
        raise ConfigError("domain", f"{where} must be a list of integer powers")
    return tuple(raw)


def _monomial_from_spec(raw: Any, index: int) -> Monomial:
    where = f"lagrangian.terms[{index}]"
    if not isinstance(raw, dict):
        raise ConfigError("malformed", f"{where} must be an object")
    unknown = set(raw) - {"coef", "t", "x", "v", "z"}
    if unknown:
        raise ConfigError("unknown_key", f"{where}.{sorted(unknown)[0]}")
    if "coef" not in raw:
        raise ConfigError("missing_field", f"{where}.coef is required")
    try:
        return Monomial(
            coef=_number(raw, "coef"),
            t=_powers(raw.get("t", 0), f"{where}.t")[0],
            x=_powers(raw.get("x", []), f"{where}.x"),
            v=_powers(raw.get("v", []), f"{where}.v"),
            z=_powers(raw.get("z", 0), f"{where}.z")[0],
        )
    except DomainError as e:
        raise ConfigError("domain", f"{where}: {e}") from e


_ALLOWED_KEYS = {
    "oscillator": {"name", "m", "k", "lambda0"},
    "quadratic": {"name", "a", "b", "c"},
    "polynomial": {"name", "terms"},
}


def lagrangian_from_spec(spec: Mapping[str, Any]) -> Lagrangian:
    """Build a registered Lagrangian from its config object.

    Raises:
        ConfigError: For unknown names, unknown keys, missing or invalid fields.
    """
    name = spec.get("name")
    if name is None:
        raise ConfigError("missing_field", "lagrangian.name is required")
    if name not in _ALLOWED_KEYS:
        raise ConfigError(
            "domain",
            f"lagrangian.name must be one of {', '.join(BUILTIN_LAGRANGIANS)}, got {name!r}",
        )
    unknown = set(spec) - _ALLOWED_KEYS[name]
    if unknown:
        raise ConfigError("unknown_key", f"lagrangian.{sorted(unknown)[0]}")

    try:
        if name == "oscillator":
            return oscillator(_number(spec, "m"), _number(spec, "k"), _number(spec, "lambda0", 0.0))
        if name == "quadratic":
            return quadratic(
                _number(spec, "a", 0.0), _number(spec, "b", 0.0), _number(spec, "c", 0.0)
            )
    except DomainError as e:
        raise ConfigError("domain", f"lagrangian: {e}") from e

    terms = spec.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ConfigError("missing_field", "lagrangian.terms must be a non-empty list")
    return polynomial([_monomial_from_spec(raw, i) for i, raw in enumerate(terms)])
