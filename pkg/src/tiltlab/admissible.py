"""Admissible functions: nondecreasing maps R+ -> R+ vanishing only at 0."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "AdmissibleFunction",
    "AdmissibilityReport",
    "FAMILIES",
    "construct_catalog",
    "parse_admissible",
    "right_derivative",
    "inverse_right_derivative",
    "inverse_derivative_function",
    "derivative_function",
    "antiderivative_function",
    "check_admissibility",
    "phi_alpha",
]

FAMILIES = ("power", "scaled-power", "capped-linear", "user-table")

_BRACKET_DOUBLINGS = 64
_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class AdmissibleFunction:
    """A nondecreasing ``phi: R+ -> R+`` with ``phi(0) = 0``.

    ``derivative`` and ``inverse_derivative`` are closed forms when known;
    ``None`` makes callers fall back to numerics.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    is_convex: bool = False
    is_strictly_convex: bool = False
    is_differentiable: bool = False
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inverse_derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: tuple = field(default=())
    family: str = "custom"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.asarray(self.evaluate(np.maximum(t, 0.0)), dtype=float)
        out = np.where(t == np.inf, np.inf, out)
        return float(out) if out.ndim == 0 else out

    def d(self, t):
        """Vectorized right derivative (closed form or numeric)."""
        return right_derivative(self, t)


def _power(p: float, c: float = 1.0) -> AdmissibleFunction:
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p}")
    if not c > 0:
        raise ValueError(f"coefficient must be positive, got {c}")
    convex = p >= 1
    strict = p > 1
    name = f"power:{p:g}" if c == 1.0 else f"scaled-power:{c:.17g},{p:.17g}"

    def ev(t):
        return c * np.power(t, p)

    def der(t):
        if p == 1:
            return np.full_like(np.asarray(t, dtype=float), c)
        with np.errstate(divide="ignore"):
            out = c * p * np.power(t, p - 1)
        # right derivative at 0 of t^p with p<1 is +inf
        return np.where(np.asarray(t) == 0, 0.0 if p > 1 else np.inf, out)

    inv = None
    if p > 1:
        def inv(s):
            return np.power(np.asarray(s, dtype=float) / (c * p), 1.0 / (p - 1))

    return AdmissibleFunction(
        name=name,
        evaluate=ev,
        is_convex=convex,
        is_strictly_convex=strict,
        is_differentiable=p >= 1,
        derivative=der,
        inverse_derivative=inv,
        params=(c, p),
        family="power",
    )


def _capped_linear(c: float) -> AdmissibleFunction:
    if not c > 0:
        raise ValueError(f"cap must be positive, got {c}")

    def ev(t):
        return np.minimum(t, c)

    def der(t):
        return np.where(np.asarray(t) < c, 1.0, 0.0)

    return AdmissibleFunction(
        name=f"capped-linear:{c:g}", evaluate=ev, derivative=der, params=(c,),
        family="capped-linear")


def _user_table(values: Sequence[float]) -> AdmissibleFunction:
    arr = np.asarray(values, dtype=float)
    if arr.size < 4 or arr.size % 2:
        raise ValueError("user table needs pairs t0,v0,t1,v1,... (at least two)")
    ts, vs = arr[0::2], arr[1::2]
    if ts[0] != 0 or vs[0] != 0:
        raise ValueError("user table must start at (0, 0)")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("user table abscissae must increase")
    if np.any(np.diff(vs) < 0):
        raise ValueError("user table is not monotone")
    slopes = np.diff(vs) / np.diff(ts)
    convex = bool(np.all(np.diff(slopes) >= 0))

    def ev(t):
        t = np.asarray(t, dtype=float)
        # last slope continues past the table
        out = np.interp(t, ts, vs)
        return np.where(t > ts[-1], vs[-1] + slopes[-1] * (t - ts[-1]), out)

    def der(t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[k]

    return AdmissibleFunction(
        name="user-table:" + ",".join(f"{v:g}" for v in arr),
        evaluate=ev,
        is_convex=convex,
        derivative=der,
        params=tuple(arr),
        family="user-table",
    )


def construct_catalog(family: str, params: Sequence[float] = ()) -> AdmissibleFunction:
    """Build a catalog admissible function.

    >>> construct_catalog("power", [2])(3.0)
    9.0
    """
    params = [float(p) for p in params]
    if family == "power":
        if len(params) != 1:
            raise ValueError("power takes one exponent")
        return _power(params[0])
    if family == "scaled-power":
        if len(params) != 2:
            raise ValueError("scaled-power takes (c, p)")
        return _power(params[1], params[0])
    if family == "capped-linear":
        if len(params) != 1:
            raise ValueError("capped-linear takes one cap")
        return _capped_linear(params[0])
    if family == "user-table":
        return _user_table(params)
    raise ValueError(f"unknown admissible family {family!r}")


def parse_admissible(spec: str) -> AdmissibleFunction:
    """Parse ids such as ``"power:2"`` or ``"scaled-power:0.5,1"``."""
    family, _, rest = spec.strip().partition(":")
    params = [float(p) for p in rest.split(",") if p.strip()] if rest else []
    return construct_catalog(family, params)


def right_derivative(phi: AdmissibleFunction, t):
    """Right derivative of ``phi`` at ``t``.

    Uses the closed form when available. Otherwise, for convex ``phi``,
    returns the last of 21 right difference quotients with step starting
    at ``max(1e-6, 1e-8 (1 + t))``, halved each time but floored at
    ``1e-8 t``.
    """
    if phi.derivative is not None:
        out = np.asarray(phi.derivative(np.asarray(t, dtype=float)), dtype=float)
        return float(out) if out.ndim == 0 else out
    if not phi.is_convex:
        raise ValueError(f"{phi.name}: right derivative needs convexity or a closed form")
    t = np.asarray(t, dtype=float)
    h = np.maximum(1e-6, 1e-8 * (1.0 + t))
    # halving stops at 1e-8 t: below that, cancellation dominates the quotient
    hmin = 1e-8 * t
    q = None
    for _ in range(21):
        step = np.maximum(h, hmin)
        q = (phi.evaluate(t + step) - phi.evaluate(t)) / step
        h = h / 2
    q = np.maximum(q, 0.0)
    return float(q) if q.ndim == 0 else q


def inverse_right_derivative(phi: AdmissibleFunction, s: float) -> float:
    """Unique ``t >= 0`` with ``phi'(t) = s`` for strictly convex C1 ``phi``."""
    if not (phi.is_strictly_convex and phi.is_differentiable):
        raise ValueError(f"{phi.name}: needs a differentiable strictly convex function")
    s = float(s)
    d0 = float(right_derivative(phi, 0.0))
    if s < d0:
        raise ValueError(f"s={s} is below phi'(0)={d0}")
    if phi.inverse_derivative is not None:
        return float(phi.inverse_derivative(s))
    if s == d0:
        return 0.0
    hi = 1.0
    for _ in range(_BRACKET_DOUBLINGS):
        if right_derivative(phi, hi) >= s:
            break
        hi *= 2
    else:
        raise ValueError(f"s={s} exceeds the attainable derivative range")
    lo = 0.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if right_derivative(phi, mid) < s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def inverse_derivative_function(phi: AdmissibleFunction) -> AdmissibleFunction:
    """``psi = (phi')^{-1}`` as an admissible function."""
    if not (phi.is_strictly_convex and phi.is_differentiable):
        raise ValueError(f"{phi.name}: needs a differentiable strictly convex function")
    if phi.family == "power":
        c, p = phi.params
        # (c p t^{p-1})^{-1}(s) = (s / (c p))^{1/(p-1)}
        q = 1.0 / (p - 1)
        k = (c * p) ** (-q)
        psi = _power(q, k)
        return _rename(psi, f"inv-deriv({phi.name})")

    def ev(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.array([inverse_right_derivative(phi, v) for v in s.ravel()])
        return out.reshape(s.shape)

    return AdmissibleFunction(name=f"inv-deriv({phi.name})", evaluate=ev)


def derivative_function(phi: AdmissibleFunction) -> AdmissibleFunction:
    """``phi'_+`` as an admissible function; needs convexity and ``phi'_+(0) = 0``."""
    if not phi.is_convex:
        raise ValueError(f"{phi.name}: derivative is admissible only for convex functions")
    if float(right_derivative(phi, 0.0)) != 0.0:
        raise ValueError(f"{phi.name}: right derivative at 0 is not 0")
    if phi.family == "power":
        c, p = phi.params
        return _rename(_power(p - 1, c * p), f"deriv({phi.name})")

    def ev(t):
        return np.asarray(right_derivative(phi, np.asarray(t, dtype=float)), dtype=float)

    return AdmissibleFunction(name=f"deriv({phi.name})", evaluate=ev)


def antiderivative_function(psi: AdmissibleFunction) -> AdmissibleFunction:
    """``phi(t) = int_0^t psi(s) ds``; closed form for power families."""
    if psi.family == "power":
        c, p = psi.params
        return _rename(_power(p + 1, c / (p + 1)), f"int({psi.name})")
    from scipy.integrate import quad

    def ev(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.array([quad(lambda s: float(psi(s)), 0.0, v)[0] for v in t.ravel()])
        return out.reshape(t.shape)

    return AdmissibleFunction(name=f"int({psi.name})", evaluate=ev, is_convex=True,
                              derivative=lambda t: np.asarray(psi(t), dtype=float))


def _rename(fn: AdmissibleFunction, name: str) -> AdmissibleFunction:
    from dataclasses import replace
    return replace(fn, name=name)


@dataclass(frozen=True)
class AdmissibilityReport:
    zero_at_zero: bool
    monotone: bool
    separation: bool
    failed_epsilon: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.zero_at_zero and self.monotone and self.separation


def check_admissibility(phi: AdmissibleFunction, grid: Sequence[float],
                        epsilons: Optional[Sequence[float]] = None) -> AdmissibilityReport:
    """Grid test of the three admissibility conditions."""
    t = np.asarray(grid, dtype=float)
    if t.size == 0 or t[0] != 0 or np.any(np.diff(t) < 0):
        raise ValueError("grid must be sorted and start at 0")
    v = np.asarray(phi(t), dtype=float)
    zero = abs(v[0]) <= 1e-15
    mono = bool(np.all(np.diff(v) >= 0))
    if epsilons is None:
        epsilons = [10.0 ** -k for k in range(0, 7)]
    failed = None
    for eps in epsilons:
        tail = v[t >= eps]
        if tail.size and not tail.min() > 0:
            failed = float(eps)
            break
    return AdmissibilityReport(zero, mono, failed is None, failed)


def phi_alpha(phi: AdmissibleFunction, alpha: float, t):
    """``(1/alpha) phi'_+(t / (1 - alpha))``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return right_derivative(phi, np.asarray(t, dtype=float) / (1 - alpha)) / alpha
