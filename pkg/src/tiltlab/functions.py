"""Closed-form catalog functions.

A function id is a ``+``-separated sum of terms, each ``name[:p1,p2,...]``,
e.g. ``"abs+quad"`` or ``"power-q:1.3333333333333333,0.75"``. In two
dimensions every term is applied coordinatewise and summed, except
``indicator-ball`` which uses the Euclidean ball.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["Term", "FunctionSpec", "parse_function", "TERM_DOCS"]

TERM_DOCS = {
    "quad": "c x^2 (c=1)",
    "quartic": "c x^4 (c=1)",
    "abs": "c |x| (c=1)",
    "power-q": "c |x|^q; params q[,c]",
    "double-well": "(x^2 - 1)^2",
    "flat-well": "max(|x| - 1, 0)^2",
    "one-sided": "0 for x <= 0, x^2 for x > 0",
    "indicator-ball": "0 on the closed ball B[c, r], +inf elsewhere; params c,r",
    "linear": "a x",
    "max-linear": "max(a x, b x); params a,b",
    "concave-cap": "1 - |x|",
    "user-table": "piecewise-linear through x0,v0,x1,v1,...; +inf outside",
}

_DEFAULTS = {
    "quad": (1.0,),
    "quartic": (1.0,),
    "abs": (1.0,),
    "double-well": (),
    "flat-well": (),
    "one-sided": (),
    "concave-cap": (),
}

_CONVEX = {
    "quad": True, "quartic": True, "abs": True, "double-well": False,
    "flat-well": True, "one-sided": True, "indicator-ball": True,
    "linear": True, "max-linear": True, "concave-cap": False,
}


@dataclass(frozen=True)
class Term:
    name: str
    params: tuple

    def __post_init__(self):
        if self.name not in TERM_DOCS:
            raise ValueError(f"unknown function id {self.name!r}")
        p = self.params
        if self.name in ("quad", "quartic", "abs") and (len(p) != 1 or p[0] <= 0):
            raise ValueError(f"{self.name} takes one positive coefficient")
        if self.name == "power-q" and (len(p) not in (1, 2) or p[0] <= 0
                                        or (len(p) == 2 and p[1] <= 0)):
            raise ValueError("power-q takes q>0 and an optional coefficient c>0")
        if self.name == "indicator-ball" and (len(p) != 2 or p[1] <= 0):
            raise ValueError("indicator-ball takes center and radius>0")
        if self.name == "linear" and len(p) != 1:
            raise ValueError("linear takes one slope")
        if self.name == "max-linear" and len(p) != 2:
            raise ValueError("max-linear takes two slopes")
        if self.name == "user-table":
            if len(p) < 4 or len(p) % 2:
                raise ValueError("user-table takes x0,v0,x1,v1,...")
            if np.any(np.diff(np.asarray(p[0::2])) <= 0):
                raise ValueError("user-table abscissae must increase")
        if self.name in _DEFAULTS and not _DEFAULTS[self.name] and p:
            raise ValueError(f"{self.name} takes no parameters")

    # ---- values -----------------------------------------------------------

    def value_1d(self, x: np.ndarray) -> np.ndarray:
        n, p = self.name, self.params
        if n == "quad":
            return p[0] * x * x
        if n == "quartic":
            return p[0] * x ** 4
        if n == "abs":
            return p[0] * np.abs(x)
        if n == "power-q":
            c = p[1] if len(p) > 1 else 1.0
            return c * np.abs(x) ** p[0]
        if n == "double-well":
            return (x * x - 1.0) ** 2
        if n == "flat-well":
            return np.maximum(np.abs(x) - 1.0, 0.0) ** 2
        if n == "one-sided":
            return np.where(x > 0, x * x, 0.0)
        if n == "indicator-ball":
            return np.where(np.abs(x - p[0]) <= p[1], 0.0, np.inf)
        if n == "linear":
            return p[0] * x
        if n == "max-linear":
            return np.maximum(p[0] * x, p[1] * x)
        if n == "concave-cap":
            return 1.0 - np.abs(x)
        if n == "user-table":
            xs, vs = np.asarray(p[0::2]), np.asarray(p[1::2])
            out = np.interp(x, xs, vs)
            return np.where((x < xs[0]) | (x > xs[-1]), np.inf, out)
        raise AssertionError(n)

    def value(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate on ``(n, d)`` points."""
        if self.name == "indicator-ball":
            c, r = self.params
            dist = np.sqrt(((pts - c) ** 2).sum(axis=1))
            return np.where(dist <= r, 0.0, np.inf)
        return self.value_1d(pts).sum(axis=1) if pts.shape[1] > 1 else self.value_1d(pts[:, 0])

    # ---- one-sided derivatives (1-D) ---------------------------------------

    def dright(self, x: np.ndarray) -> np.ndarray:
        return self._deriv(np.asarray(x, dtype=float), right=True)

    def dleft(self, x: np.ndarray) -> np.ndarray:
        return self._deriv(np.asarray(x, dtype=float), right=False)

    def _deriv(self, x, right):
        n, p = self.name, self.params
        side = (x >= 0) if right else (x > 0)
        if n == "quad":
            return 2 * p[0] * x
        if n == "quartic":
            return 4 * p[0] * x ** 3
        if n == "abs":
            return np.where(side, p[0], -p[0])
        if n == "power-q":
            c, q = (p[1] if len(p) > 1 else 1.0), p[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                mag = c * q * np.abs(x) ** (q - 1)
            if q < 1:
                mag = np.where(x == 0, np.inf, mag)
            elif q == 1:
                mag = np.full_like(x, c)
            return np.where(side, mag, -mag) if q <= 1 else np.sign(x) * mag
        if n == "double-well":
            return 4 * x ** 3 - 4 * x
        if n == "flat-well":
            return 2 * np.sign(x) * np.maximum(np.abs(x) - 1.0, 0.0)
        if n == "one-sided":
            return 2 * np.maximum(x, 0.0)
        if n == "indicator-ball":
            lo, hi = p[0] - p[1], p[0] + p[1]
            out = np.zeros_like(x)
            if right:
                out = np.where(x >= hi, np.inf, out)
                return np.where(x < lo, np.nan, out)
            out = np.where(x <= lo, -np.inf, out)
            return np.where(x > hi, np.nan, out)
        if n == "linear":
            return np.full_like(x, p[0])
        if n == "max-linear":
            a, b = min(p), max(p)
            return np.where(side, b, a)
        if n == "concave-cap":
            return np.where(side, -1.0, 1.0)
        if n == "user-table":
            xs, vs = np.asarray(p[0::2]), np.asarray(p[1::2])
            slopes = np.diff(vs) / np.diff(xs)
            if right:
                k = np.searchsorted(xs, x, side="right") - 1
                out = slopes[np.clip(k, 0, len(slopes) - 1)]
                out = np.where(x >= xs[-1], np.inf, out)
            else:
                k = np.searchsorted(xs, x, side="left") - 1
                out = slopes[np.clip(k, 0, len(slopes) - 1)]
                out = np.where(x <= xs[0], -np.inf, out)
            return np.where((x < xs[0]) | (x > xs[-1]), np.nan, out)
        raise AssertionError(n)

    # ---- structure -----------------------------------------------------------

    @property
    def convex(self) -> bool:
        if self.name == "power-q":
            return self.params[0] >= 1
        if self.name == "user-table":
            xs, vs = np.asarray(self.params[0::2]), np.asarray(self.params[1::2])
            return bool(np.all(np.diff(np.diff(vs) / np.diff(xs)) >= 0))
        return _CONVEX[self.name]

    @property
    def kinks(self) -> tuple:
        n, p = self.name, self.params
        if n in ("abs", "max-linear", "concave-cap"):
            return (0.0,)
        if n == "power-q" and p[0] <= 1:
            return (0.0,)
        if n == "user-table":
            return tuple(float(v) for v in p[0::2])
        if n == "indicator-ball":
            return (p[0] - p[1], p[0] + p[1])
        return ()

    @property
    def domain(self) -> tuple:
        if self.name == "indicator-ball":
            return (self.params[0] - self.params[1], self.params[0] + self.params[1])
        if self.name == "user-table":
            return (float(self.params[0]), float(self.params[-2]))
        return (-np.inf, np.inf)

    def __str__(self):
        if not self.params or (self.name in _DEFAULTS and self.params == _DEFAULTS[self.name]):
            return self.name
        return self.name + ":" + ",".join(f"{v:.17g}" for v in self.params)


@dataclass(frozen=True)
class FunctionSpec:
    """Sum of catalog terms with closed-form values and one-sided slopes."""

    terms: tuple

    @property
    def id(self) -> str:
        return "+".join(str(t) for t in self.terms)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.zeros(pts.shape[0])
        for t in self.terms:
            out = out + t.value(pts)
        return out

    def value_1d(self, x) -> np.ndarray:
        return self(np.asarray(x, dtype=float).reshape(-1, 1))

    def dright(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            return sum(t.dright(x) for t in self.terms)

    def dleft(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            return sum(t.dleft(x) for t in self.terms)

    @property
    def convex(self) -> bool:
        return all(t.convex for t in self.terms)

    @property
    def kinks(self) -> tuple:
        ks = sorted({k for t in self.terms for k in t.kinks})
        return tuple(ks)

    @property
    def domain(self) -> tuple:
        lo = max(t.domain[0] for t in self.terms)
        hi = min(t.domain[1] for t in self.terms)
        return (lo, hi)

    def __str__(self):
        return self.id


def parse_function(spec) -> FunctionSpec:
    """Parse a function id; accepts an existing ``FunctionSpec`` unchanged."""
    if isinstance(spec, FunctionSpec):
        return spec
    terms = []
    for part in str(spec).split("+"):
        part = part.strip()
        if not part:
            raise ValueError(f"empty term in function id {spec!r}")
        name, _, rest = part.partition(":")
        params = tuple(float(v) for v in rest.split(",") if v.strip()) if rest else ()
        if not params and name in _DEFAULTS:
            params = _DEFAULTS[name]
        terms.append(Term(name, params))
    return FunctionSpec(tuple(terms))


def catalog_ids() -> Sequence[str]:
    return tuple(TERM_DOCS)
