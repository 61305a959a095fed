"""Metric regularity, monotonicity and selection checks for planar set-valued graphs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .admissible import AdmissibleFunction
from .certificate import Certificate
from .gridfn import graded_axis
from .subdiff import SetValuedGraph, interval_distance, merge_intervals

__all__ = [
    "RegularitySamples",
    "regularity_samples",
    "regularity_margins",
    "singleton_violation",
    "check_metric_regularity",
    "check_strong_metric_regularity",
    "check_monotone",
    "check_selection_property_4_4",
    "single_valuedness_radius",
    "interval_excess",
]

REL_FLOOR = 1e-9
ABS_FLOOR = 1e-15
OPEN_SHRINK = 1 - 1e-9


@dataclass(frozen=True, eq=False)
class RegularitySamples:
    """Distances over the sample grid of ``B(x0, r) x B(y0, r)``.

    ``dx[i, j] = d(x_i, F^{-1}(y_j))`` and ``dy[i, j] = d(y_j, F(x_i))``.
    """

    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    center: tuple
    r: float
    hx: float
    hv: float
    cell: float


def _axis(c: float, r: float, points: int, levels: int) -> np.ndarray:
    if levels <= 0:
        return c + np.linspace(-r, r, points)
    return graded_axis(c, r, points, levels)[0]


def regularity_samples(g: SetValuedGraph, center, r: float, points: int = 101,
                       levels: int = 12) -> RegularitySamples:
    """Sample the open ball pair around ``center`` (closed sub-balls of radius ``r (1 - 1e-9)``).

    With ``levels > 0`` both axes carry nested windows shrinking toward the
    center, so small-scale growth is visible.
    """
    x0, y0 = float(center[0]), float(center[1])
    if not r > 0:
        raise ValueError("r must be positive")
    if not g.on_graph((x0, y0)):
        raise ValueError("center is not on the graph")
    rr = r * OPEN_SHRINK
    xs = _axis(x0, rr, points, levels)
    ys = _axis(y0, rr, points, levels)
    dx = np.empty((xs.size, ys.size))
    dy = np.empty((xs.size, ys.size))
    for j, y in enumerate(ys):
        dx[:, j] = interval_distance(xs, g.F_inv(y))
    for i, x in enumerate(xs):
        dy[i, :] = interval_distance(ys, g.F(x))
    hx, hv = (float(v) for v in g.resolution)
    cell = float(np.hypot(2 * rr / (points - 1), 2 * rr / (points - 1)))
    return RegularitySamples(xs, ys, dx, dy, (x0, y0), float(r), hx, hv, cell)


def _psi_values(psi: AdmissibleFunction, t: np.ndarray) -> np.ndarray:
    out = np.asarray(psi(np.where(np.isfinite(t), t, 0.0)), dtype=float)
    return np.where(np.isfinite(t), out, np.inf)


def regularity_margins(s: RegularitySamples, psi: AdmissibleFunction, taus, kappas,
                       use_numba: Optional[bool] = None):
    """Margins ``kappa (d_y + hv) - psi(tau (d_x - hx)_+)`` minimised over samples.

    Returns ``(margins[k, t], flat_argmin[k, t])``. Samples with infinite
    right-hand side are vacuous and dropped; a relative floor of 1e-9 of
    the left-hand side absorbs rounding.
    """
    dx = np.maximum(s.dx.ravel() - s.hx, 0.0)
    rhs = s.dy.ravel() + s.hv
    keep = np.isfinite(rhs)
    idx = np.flatnonzero(keep)
    taus = np.asarray(taus, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    if idx.size == 0:
        return np.full((kappas.size, taus.size), np.inf), np.zeros((kappas.size, taus.size), int)
    lhs = np.stack([_psi_values(psi, t * dx[idx]) for t in taus])
    G = np.where(np.isfinite(lhs), -(1 - REL_FLOOR) * lhs + ABS_FLOOR, -np.inf)
    Q = np.broadcast_to(rhs[idx], G.shape)
    F = np.zeros((kappas.size, idx.size))
    m, a = kernels.sweep_margins(F, G, Q, kappas, use_numba)
    return m, idx[a]


def _witness(s: RegularitySamples, flat: int, psi, tau, kappa) -> dict:
    i, j = np.unravel_index(int(flat), s.dx.shape)
    return {"x": float(s.x[i]), "y": float(s.y[j]), "d_x_to_preimage": float(s.dx[i, j]),
            "d_y_to_image": float(s.dy[i, j]),
            "lhs": float(_psi_values(psi, np.array(tau * max(s.dx[i, j] - s.hx, 0.0)))),
            "rhs": float(kappa * (s.dy[i, j] + s.hv))}


def _sweep_meta(s: RegularitySamples, points: int, levels: int) -> dict:
    return {"x_samples": int(s.x.size), "y_samples": int(s.y.size), "points": points,
            "levels": levels, "ball_shrink": OPEN_SHRINK, "resolution": [s.hx, s.hv],
            "relative_floor": REL_FLOOR}


def check_metric_regularity(g: SetValuedGraph, center, psi: AdmissibleFunction, tau: float,
                            kappa: float, r: float, points: int = 101, levels: int = 12,
                            samples: Optional[RegularitySamples] = None) -> Certificate:
    """``psi(tau d(x, F^{-1}(y))) <= kappa d(y, F(x))`` on ``B(x0, r) x B(y0, r)``."""
    if not (tau > 0 and kappa > 0):
        raise ValueError("tau and kappa must be positive")
    s = samples or regularity_samples(g, center, r, points, levels)
    m, a = regularity_margins(s, psi, [tau], [kappa])
    margin = float(m[0, 0])
    wit = _witness(s, a[0, 0], psi, tau, kappa) if np.isfinite(margin) else None
    return Certificate.from_margin("metric-reg", margin,
                                   {"r": r, "tau": tau, "kappa": kappa}, wit,
                                   _sweep_meta(s, points, levels))


def singleton_violation(g: SetValuedGraph, s: RegularitySamples, delta: float,
                        slack: Optional[float] = None):
    """Worst ``slack - diam(F^{-1}(y) cap B(x0, delta))`` over sampled ``y``.

    An empty intersection counts as ``-inf``. Returns ``(margin, y, diameter)``.
    """
    x0 = s.center[0]
    if slack is None:
        slack = 2 * s.cell + 2 * s.hx
    lo_b, hi_b = x0 - delta * OPEN_SHRINK, x0 + delta * OPEN_SHRINK
    worst, wy, wd = np.inf, None, None
    for y in s.y:
        ivs = g.F_inv(y)
        lo = np.maximum(ivs[:, 0], lo_b)
        hi = np.minimum(ivs[:, 1], hi_b)
        ok = lo <= hi
        if not np.any(ok):
            diam = np.inf
        else:
            diam = float(hi[ok].max() - lo[ok].min())
        m = slack - diam
        if m < worst:
            worst, wy, wd = m, float(y), diam
    return worst, wy, wd


def check_strong_metric_regularity(g: SetValuedGraph, center, psi: AdmissibleFunction,
                                   tau: float, kappa: float, r: float, delta: float,
                                   points: int = 101, levels: int = 12,
                                   samples: Optional[RegularitySamples] = None) -> Certificate:
    """Metric regularity plus: ``F^{-1}(y) cap B(x0, delta)`` is a singleton up to slack."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    s = samples or regularity_samples(g, center, r, points, levels)
    base = check_metric_regularity(g, center, psi, tau, kappa, r, points, levels, s)
    slack = 2 * s.cell + 2 * s.hx
    sm, sy, sd = singleton_violation(g, s, delta, slack)
    margin = min(base.margin, sm)
    if base.margin <= sm:
        wit = base.witness
    else:
        wit = {"y": sy, "preimage_diameter": sd, "clause": "singleton"}
    sweep = {**base.sweep, "singleton_slack": slack, "singleton_margin": sm,
             "regularity_margin": base.margin}
    return Certificate.from_margin("strong-metric-reg", margin,
                                   {"r": r, "tau": tau, "kappa": kappa, "delta": delta},
                                   wit, sweep)


def check_monotone(g: SetValuedGraph, tol: float = 1e-12) -> Certificate:
    """``(v1 - v2)(x1 - x2) >= -tol`` over all pairs of graph sample points."""
    pts = g.sample_points()
    best, i, j = kernels.pair_monotone(pts[:, 0], pts[:, 1])
    margin = float(best) + tol if np.isfinite(best) else np.inf
    wit = None
    if i >= 0:
        wit = {"p1": [float(pts[i, 0]), float(pts[i, 1])],
               "p2": [float(pts[j, 0]), float(pts[j, 1])], "product": float(best)}
    return Certificate.from_margin("monotone", margin, {}, wit,
                                   {"samples": int(len(pts)), "tolerance": tol})


def interval_excess(a: np.ndarray, b: np.ndarray) -> float:
    """``sup_{v in A} d(v, B)`` for unions of closed intervals (``+inf`` if B empty)."""
    if a.shape[0] == 0:
        return 0.0
    if b.shape[0] == 0:
        return np.inf
    cand = [a[:, 0], a[:, 1]]
    mids = 0.5 * (b[1:, 0] + b[:-1, 1]) if b.shape[0] > 1 else np.zeros(0)
    for lo, hi in a:
        cand.append(mids[(mids > lo) & (mids < hi)])
    c = np.concatenate(cand)
    if not np.all(np.isfinite(c)) and not (b[0, 0] == -np.inf and b[-1, 1] == np.inf):
        return np.inf
    c = c[np.isfinite(c)]
    return float(interval_distance(c, b).max()) if c.size else 0.0


def check_selection_property_4_4(g: SetValuedGraph, center_point, omega: AdmissibleFunction,
                                 gamma: float, delta: float, points: int = 101,
                                 slack: float = 1e-12) -> Certificate:
    """``F(z1) cap B(z0*, gamma)`` lies within ``omega(|z2 - z1|)`` of ``F(z2)``.

    ``z1, z2`` range over a uniform grid of ``B(z0, delta)``; the sup over
    each image interval is taken exactly (endpoints and gap midpoints).
    """
    z0, w0 = float(center_point[0]), float(center_point[1])
    if not (gamma > 0 and delta > 0):
        raise ValueError("gamma and delta must be positive")
    if not g.on_graph((z0, w0)):
        raise ValueError("center is not on the graph")
    zs = z0 + np.linspace(-delta, delta, points) * OPEN_SHRINK
    if not np.any(zs == z0):
        zs = np.sort(np.append(zs, z0))
    glo, ghi = w0 - gamma * OPEN_SHRINK, w0 + gamma * OPEN_SHRINK
    images = [g.F(z) for z in zs]
    clipped = []
    for ivs in images:
        lo = np.maximum(ivs[:, 0], glo)
        hi = np.minimum(ivs[:, 1], ghi)
        ok = lo <= hi
        clipped.append(np.stack([lo[ok], hi[ok]], axis=1))
    worst, wit = np.inf, None
    for i, z1 in enumerate(zs):
        if clipped[i].shape[0] == 0:
            continue
        for j, z2 in enumerate(zs):
            ex = interval_excess(clipped[i], images[j])
            allowed = float(omega(abs(z2 - z1)))
            m = allowed - ex + slack * max(1.0, allowed)
            if m < worst:
                worst = m
                wit = {"z1": float(z1), "z2": float(z2), "excess": ex, "allowed": allowed}
    return Certificate.from_margin("selection", worst,
                                   {"gamma": gamma, "delta": delta}, wit,
                                   {"z_samples": int(zs.size), "slack": slack,
                                    "ball_shrink": OPEN_SHRINK})


def single_valuedness_radius(omega: AdmissibleFunction, gamma: float, delta: float) -> float:
    """``min(delta, gamma')`` with ``gamma' = sup{t : omega < gamma on [0, t]}``."""
    if gamma <= 0 or delta <= 0:
        return 0.0
    if not float(omega(0.0)) < gamma:
        return 0.0
    hi = 1.0
    for _ in range(200):
        if float(omega(hi)) >= gamma:
            break
        if hi >= delta:
            return float(delta)
        hi *= 2
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if float(omega(mid)) < gamma:
            lo = mid
        else:
            hi = mid
    # the sup is the first t where omega reaches gamma
    return float(min(delta, hi))
