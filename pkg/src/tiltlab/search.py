"""Constant search: sweep ``(tau, kappa)`` and radii for the best passing certificate."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .admissible import AdmissibleFunction
from .certificate import Certificate
from .gridfn import GridFunction
from .regularity import (check_metric_regularity, check_strong_metric_regularity,
                         regularity_margins, regularity_samples, singleton_violation)
from .subdiff import SetValuedGraph
from .wellposed import (NotLocalMinimizer, Sampling, WellPosednessInstance, check_slwp,
                        check_swlwp, check_tslm, check_weak_tslm, slope_scale, slwp_margins,
                        swlwp_margins_nested, tilt_minimizer_map, tslm_margins, weak_tslm_margins)

__all__ = ["SweepSpec", "SearchResult", "search_certificate", "KINDS"]

KINDS = ("slwp", "tslm", "swlwp", "weak-tslm", "metric-reg", "strong-metric-reg")


@dataclass(frozen=True)
class SweepSpec:
    """Grid of candidate constants.

    ``tau`` and ``kappa`` run over ``2**e`` for ``e`` in ``exponents``. ``r``
    is a fraction of the distance from the base point to the box edge;
    ``delta`` is ``delta_scale * r * max(slope, 1e-3)`` times each entry of
    ``delta_fractions``; ``gamma`` is ``r`` times each ``gamma_fractions``.
    For graph regularity the singleton radius takes ``r`` and the edge
    distance times each ``delta_fractions``.
    """

    exponents: tuple = tuple(range(-10, 11))
    r_fractions: tuple = (0.5, 0.25, 0.125)
    delta_scale: float = 0.25
    delta_fractions: tuple = (1.0, 0.25)
    gamma_fractions: tuple = (1.0, 0.5)
    sampling: Sampling = field(default_factory=Sampling)

    @property
    def values(self) -> np.ndarray:
        return np.array([2.0 ** e for e in self.exponents])

    def as_dict(self) -> dict:
        return {"exponents": list(self.exponents), "r_fractions": list(self.r_fractions),
                "delta_scale": self.delta_scale, "delta_fractions": list(self.delta_fractions),
                "gamma_fractions": list(self.gamma_fractions)}


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a search: the best passing certificate, else the least-violated one."""

    kind: str
    found: bool
    certificate: Certificate
    tried: int

    @property
    def verdict(self) -> str:
        return "found" if self.found else "not-found"


def _edge_distance(box, x_bar) -> float:
    return float(min(min(x - lo, hi - x) for (lo, hi), x in zip(box, x_bar)))


class _Best:
    """Keep the largest passing margin and the largest failing one, first seen wins ties."""

    def __init__(self):
        self.ok = None
        self.bad = None
        self.tried = 0

    def offer(self, margin: float, build):
        if margin >= 0:
            if self.ok is None or margin > self.ok[0]:
                self.ok = (margin, build)
        elif self.bad is None or margin > self.bad[0]:
            self.bad = (margin, build)


def _pick(m: np.ndarray):
    """Row-major first index of the maximum margin."""
    flat = int(np.argmax(m))
    return np.unravel_index(flat, m.shape)


def _wellposed_candidates(kind, f, x_bar, spec):
    edge = _edge_distance(f.box, x_bar)
    if not edge > 0:
        raise ValueError("base point must lie inside the box")
    for rf in spec.r_fractions:
        r = rf * edge
        slope = slope_scale(f, x_bar, r)
        for df in spec.delta_fractions:
            delta = spec.delta_scale * r * max(slope, 1e-3) * df
            gammas = [r * gf for gf in spec.gamma_fractions] if kind in ("swlwp", "weak-tslm") else [None]
            yield r, delta, gammas


def _tables(kind, table, phi, psi, gammas, vals):
    """``(gamma, margins, constants-builder)`` for every gamma of one tilt table."""
    if kind == "slwp":
        m, _, _ = slwp_margins(table, phi, vals, vals, with_arg=False)          # [kappa, tau]
        return [(None, m, ("kappa", "tau"))]
    if kind == "tslm":
        m, _, (_, _, single) = tslm_margins(table, psi, vals, vals, with_arg=False)
        if single.min() < 0:
            m = np.full(m.shape, float(single.min()))
        return [(None, m, ("kappa", "tau"))]
    if kind == "swlwp":
        return [(g, m, ("tau", "kappa"))
                for g, m in swlwp_margins_nested(table, phi, gammas, vals, vals)]
    return [(g, weak_tslm_margins(table, psi, g, vals, vals, with_arg=False)[0], ("kappa", "tau"))
            for g in gammas]


def _search_wellposed(kind, f, x_bar, phi, psi, spec: SweepSpec) -> SearchResult:
    vals = spec.values
    best = _Best()
    for r, delta, gammas in _wellposed_candidates(kind, f, x_bar, spec):
        table = tilt_minimizer_map(f, x_bar, r, delta, spec.sampling.tilt_points, spec.sampling)
        try:
            tables = _tables(kind, table, phi, psi, gammas, vals)
        except NotLocalMinimizer:
            best.tried += 1
            best.offer(-np.inf, (r, delta, gammas[0], {"kappa": 1.0, "tau": 1.0}, table))
            continue
        # evaluate gammas in the sweep's order so ties resolve deterministically
        order = {g: k for k, g in enumerate(gammas)}
        for gamma, m, names in sorted(tables, key=lambda e: order.get(e[0], 0)):
            i, j = _pick(m)
            best.tried += m.size
            best.offer(float(m[i, j]), (r, delta, gamma, {names[0]: vals[i], names[1]: vals[j]},
                                        table))
    return _finish_wellposed(kind, f, x_bar, phi, psi, spec, best)


def _finish_wellposed(kind, f, x_bar, phi, psi, spec, best) -> SearchResult:
    chosen = best.ok or best.bad
    r, delta, gamma, cons, table = chosen[1]
    constants = {"r": r, "delta": delta, **cons}
    if gamma is not None:
        constants["gamma"] = gamma
    inst = WellPosednessInstance(f, tuple(x_bar), phi, psi, constants)
    check = {"slwp": check_slwp, "tslm": check_tslm, "swlwp": check_swlwp,
             "weak-tslm": check_weak_tslm}[kind]
    try:
        cert = check(inst, spec.sampling, table)
    except NotLocalMinimizer:
        cert = Certificate(kind, "fail", float("-inf"), constants,
                           {"clause": "x_bar is not a localized minimizer"}, {})
    cert = cert.with_sweep(search=spec.as_dict(), candidates=best.tried)
    return SearchResult(kind, cert.passed, cert, best.tried)


def _search_regularity(kind, g: SetValuedGraph, center, psi, spec: SweepSpec) -> SearchResult:
    vals = spec.values
    lo, hi = g.bbox[0]
    x0 = float(center[0])
    edge = min(x0 - lo, hi - x0)
    if not edge > 0 or not np.isfinite(edge):
        edge = 1.0
    best = _Best()
    s_pts, s_lv = spec.sampling.points, spec.sampling.levels
    for rf in spec.r_fractions:
        r = rf * edge
        s = regularity_samples(g, center, r, s_pts, s_lv)
        m, _ = regularity_margins(s, psi, vals, vals)   # [kappa, tau]
        deltas = [None]
        if kind == "strong-metric-reg":
            # the singleton radius is independent of r: flat graphs need it wider
            deltas = sorted({s * df for s in (r, edge) for df in spec.delta_fractions}, reverse=True)
        for delta in deltas:
            mm = m
            if delta is not None:
                sm, _, _ = singleton_violation(g, s, delta)
                mm = np.minimum(m, sm)
            i, j = _pick(mm)
            best.tried += mm.size
            best.offer(float(mm[i, j]), (r, delta, vals[i], vals[j], s))
    r, delta, kappa, tau, s = (best.ok or best.bad)[1]
    if kind == "metric-reg":
        cert = check_metric_regularity(g, center, psi, tau, kappa, r, s_pts, s_lv, s)
    else:
        cert = check_strong_metric_regularity(g, center, psi, tau, kappa, r, delta, s_pts, s_lv, s)
    cert = cert.with_sweep(search=spec.as_dict(), candidates=best.tried)
    return SearchResult(kind, cert.passed, cert, best.tried)


def search_certificate(kind: str, f: Optional[GridFunction] = None, x_bar=None,
                       phi: Optional[AdmissibleFunction] = None,
                       psi: Optional[AdmissibleFunction] = None,
                       graph: Optional[SetValuedGraph] = None, center=None,
                       spec: Optional[SweepSpec] = None) -> SearchResult:
    """Search constants for ``kind``; returns the max-margin pass if any.

    Tilt kinds need ``f`` and ``x_bar``; ``slwp``/``swlwp`` need ``phi``
    and ``tslm``/``weak-tslm`` need ``psi``. Regularity kinds need
    ``graph``, ``center = (x0, y0)`` and ``psi``.
    """
    spec = spec or SweepSpec()
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if kind in ("metric-reg", "strong-metric-reg"):
        if graph is None or psi is None or center is None:
            raise ValueError(f"{kind} needs a graph, a center and psi")
        return _search_regularity(kind, graph, center, psi, spec)
    if f is None or x_bar is None:
        raise ValueError(f"{kind} needs a function and a base point")
    need = phi if kind in ("slwp", "swlwp") else psi
    if need is None:
        raise ValueError(f"{kind} needs {'phi' if kind in ('slwp', 'swlwp') else 'psi'}")
    xb = tuple(float(v) for v in np.atleast_1d(x_bar))
    return _search_wellposed(kind, f, xb, phi, psi, spec)
