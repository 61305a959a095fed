"""Tilt-minimizer maps and well-posedness / tilt-stability checkers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .admissible import AdmissibleFunction, right_derivative
from .certificate import Certificate
from .gridfn import GridFunction, PointSet, graded_axis, graded_samples
from .subdiff import SetValuedGraph, interval_distance, merge_intervals

__all__ = [
    "Sampling",
    "TiltMapTable",
    "WellPosednessInstance",
    "build_tilt_table",
    "tilt_minimizer_map",
    "slwp_margins",
    "tslm_margins",
    "swlwp_margins",
    "weak_tslm_margins",
    "check_slwp",
    "check_tslm",
    "check_swlwp",
    "check_weak_tslm",
    "check_growth_from_slope",
    "check_interiority",
    "slope_scale",
    "NotLocalMinimizer",
]

REL_FLOOR = 1e-9
ROUND = 4 * np.finfo(float).eps
OPEN_SHRINK = 1 - 1e-9


class NotLocalMinimizer(ValueError):
    """The base point does not attain the minimum over its ball."""


@dataclass(frozen=True)
class Sampling:
    """Sample layout for checkers.

    Primal points form nested windows around the base point (``points`` at
    the outer level, ``inner`` per finer level, ``levels`` refinements by
    ``ratio``); tilts do the same around 0. ``graded=False`` or a function
    without closed form falls back to the function's own grid and a uniform
    tilt grid of ``tilt_points``.
    """

    points: int = 101
    levels: int = 12
    inner: int = 21
    ratio: float = 0.25
    tilt_points: int = 41
    tilt_levels: int = 26
    tilt_inner: int = 7
    graded: bool = True

    def as_dict(self) -> dict:
        return {"points": self.points, "levels": self.levels, "inner": self.inner,
                "ratio": self.ratio, "tilt_points": self.tilt_points,
                "tilt_levels": self.tilt_levels, "tilt_inner": self.tilt_inner,
                "graded": self.graded}


@dataclass(frozen=True, eq=False)
class TiltMapTable:
    """Localized argmin data for every tilt of a dual sample.

    ``argmin[k]`` indexes ``points``. ``selected[k]`` is the grid minimizer,
    with rounding-level ties going to the point nearest the base point and
    then to the lexicographically smallest.
    """

    tilts: np.ndarray
    points: np.ndarray
    values: np.ndarray
    spacing: np.ndarray
    argmin: tuple
    selected: np.ndarray
    min_values: np.ndarray
    lipschitz: np.ndarray
    tolerances: np.ndarray
    x_bar: np.ndarray
    r: float
    delta: float

    @property
    def selected_points(self) -> np.ndarray:
        return self.points[self.selected]

    @property
    def selected_spacing(self) -> np.ndarray:
        return self.spacing[self.selected]

    def argmin_set(self, k: int) -> PointSet:
        idx = self.argmin[k]
        return PointSet(self.points[idx], idx)

    def diameters(self) -> np.ndarray:
        out = np.empty(len(self.argmin))
        for k, idx in enumerate(self.argmin):
            p = self.points[idx]
            out[k] = float(np.sqrt(((p.max(axis=0) - p.min(axis=0)) ** 2).sum())) if len(idx) > 1 else 0.0
        return out

    def zero_index(self) -> int:
        k = np.flatnonzero(np.all(self.tilts == 0, axis=1))
        if k.size == 0:
            raise ValueError("tilt sample lacks u* = 0")
        return int(k[0])

    def rows(self):
        """``(u*, selected minimizer, min value)`` rows for plotting."""
        for k in range(len(self.tilts)):
            yield (self.tilts[k].tolist(), self.selected_points[k].tolist(),
                   float(self.min_values[k]))


@dataclass(frozen=True, eq=False)
class WellPosednessInstance:
    """A function, a base point, an admissible modulus and constants."""

    f: GridFunction
    x_bar: tuple
    phi: Optional[AdmissibleFunction] = None
    psi: Optional[AdmissibleFunction] = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        xb = tuple(float(v) for v in np.atleast_1d(self.x_bar))
        if len(xb) != self.f.dim:
            raise ValueError("base point dimension mismatch")
        object.__setattr__(self, "x_bar", xb)
        for k, v in self.constants.items():
            if not v > 0:
                raise ValueError(f"constant {k} must be positive")

    def const(self, name: str) -> float:
        if name not in self.constants:
            raise ValueError(f"missing constant {name!r}")
        return float(self.constants[name])

    def with_constants(self, **kw) -> "WellPosednessInstance":
        return replace(self, constants={**self.constants, **kw})


# ---------------------------------------------------------------------------
# tilt tables


def _tilt_sample(dim: int, delta: float, s: Sampling, graded: bool) -> np.ndarray:
    dd = delta * OPEN_SHRINK
    if graded:
        ax, _ = graded_axis(0.0, dd, s.tilt_points, s.tilt_levels, s.ratio, s.tilt_inner)
        if dim == 2:
            ax2, _ = graded_axis(0.0, dd, min(s.tilt_points, 21), min(s.tilt_levels, 10),
                                 s.ratio, 7)
            ax = ax2
    else:
        ax = np.linspace(-dd, dd, s.tilt_points)
        ax = np.where(np.abs(ax) <= 1e-15 * dd, 0.0, ax)
    if dim == 1:
        return ax[:, None]
    mx, my = np.meshgrid(ax, ax, indexing="ij")
    u = np.stack([mx.ravel(), my.ravel()], axis=1)
    return u[np.sqrt((u ** 2).sum(axis=1)) <= dd]


def _neighbours(points: np.ndarray):
    """Neighbour lists: sorted adjacency in 1-D, eight nearest points in 2-D."""
    n = len(points)
    if points.shape[1] == 1:
        order = np.argsort(points[:, 0], kind="stable")
        rank = np.empty(n, dtype=int)
        rank[order] = np.arange(n)
        return lambda i: [order[j] for j in (rank[i] - 1, rank[i] + 1) if 0 <= j < n]

    def nb(i):
        d = ((points - points[i]) ** 2).sum(axis=1)
        d[i] = np.inf
        return list(np.argsort(d, kind="stable")[:8])

    return nb


def build_tilt_table(points, values, spacing, tilts, x_bar, r: float, delta: float,
                     tol: Optional[float] = None) -> TiltMapTable:
    """Argmin sets of ``values - <u, points>`` for every tilt ``u``.

    The argmin tolerance defaults to ``L h / 2`` plus a rounding floor, with
    ``L`` the largest quotient between the grid minimizer and its neighbours
    and ``h`` the local spacing there.
    """
    P = np.asarray(points, dtype=float)
    fv = np.asarray(values, dtype=float)
    sp = np.asarray(spacing, dtype=float)
    U = np.asarray(tilts, dtype=float)
    xb = np.asarray(x_bar, dtype=float)
    fin = np.isfinite(fv)
    if not fin.any():
        raise ValueError("no finite value inside the ball")
    nb = _neighbours(P)
    dist0 = np.sqrt(((P - xb) ** 2).sum(axis=1))
    lex = np.lexsort(tuple(P[:, k] for k in reversed(range(P.shape[1]))) + (dist0,))
    rank = np.empty(len(P), dtype=int)
    rank[lex] = np.arange(len(P))
    argmins, selected, mins, lips, tols = [], [], [], [], []
    for u in U:
        with np.errstate(invalid="ignore"):
            fu = np.where(fin, fv - P @ u, np.inf)
        i0 = int(np.argmin(fu))
        m = fu[i0]
        L = 0.0
        for j in nb(i0):
            if np.isfinite(fu[j]):
                dj = float(np.sqrt(((P[j] - P[i0]) ** 2).sum()))
                L = max(L, abs(fu[j] - m) / dj)
        rounding = ROUND * (abs(fv[i0]) + abs(float(P[i0] @ u)) + abs(m))
        t = (0.5 * L * sp[i0] + rounding) if tol is None else tol
        idx = np.flatnonzero(fu <= m + t)
        # select among rounding-level ties only: the wider tolerance set can
        # reach a cell away from the true minimizer
        tight = np.flatnonzero(fu <= m + rounding)
        sel = int(tight[np.argmin(rank[tight])])
        argmins.append(idx)
        selected.append(sel)
        mins.append(float(fu[sel]))
        lips.append(L)
        tols.append(t)
    return TiltMapTable(U, P, fv, sp, tuple(argmins), np.array(selected), np.array(mins),
                        np.array(lips), np.array(tols), xb, float(r), float(delta))


def _primal_samples(f: GridFunction, x_bar, r: float, s: Sampling):
    graded = s.graded and f.source is not None
    if graded:
        smp = graded_samples(f, x_bar, r, s.points, s.levels, s.ratio, s.inner)
        return smp.points, smp.values, smp.spacing, True
    c = np.asarray(x_bar, dtype=float)
    dist = np.sqrt(((f.coords - c) ** 2).sum(axis=1))
    mask = dist <= r * (1 + 1e-12)
    return f.coords[mask], f.values[mask], np.full(mask.sum(), float(f.spacing.max())), False


def tilt_minimizer_map(f: GridFunction, x_bar, r: float, delta: float, dual_points: int = 41,
                       sampling: Optional[Sampling] = None) -> TiltMapTable:
    """Tilt map over ``B[x_bar, r]`` for tilts in ``B(0, delta)``.

    Without ``sampling`` the function's own grid and a uniform dual grid of
    ``dual_points`` per axis are used.
    """
    if not (r > 0 and delta > 0):
        raise ValueError("r and delta must be positive")
    xb = np.atleast_1d(np.asarray(x_bar, dtype=float))
    s = sampling or Sampling(tilt_points=dual_points, graded=False)
    P, fv, sp, graded = _primal_samples(f, xb, r, s)
    if P.shape[0] == 0:
        raise ValueError("ball does not meet the grid")
    U = _tilt_sample(f.dim, delta, s, graded)
    return build_tilt_table(P, fv, sp, U, xb, r, delta)


def _require_minimizer(t: TiltMapTable):
    k0 = t.zero_index()
    d = np.sqrt(((t.points[t.argmin[k0]] - t.x_bar) ** 2).sum(axis=1))
    if not np.any(d <= 1e-12 * max(1.0, float(np.abs(t.x_bar).max()))):
        raise NotLocalMinimizer("x_bar does not attain the minimum over its ball")
    return k0


def _phi_values(phi: AdmissibleFunction, t: np.ndarray) -> np.ndarray:
    return np.asarray(phi(t), dtype=float)


# ---------------------------------------------------------------------------
# margin tables shared by checkers and the search


def slwp_margins(t: TiltMapTable, phi: AdmissibleFunction, kappas, taus,
                 use_numba: Optional[bool] = None, with_arg: bool = True):
    """Margins of ``phi(kappa |x - x_u|) <= tau (f_u(x) - f_u(x_u))`` for every ``(kappa, tau)``.

    The left side is evaluated at ``(|x - x_u| - h_u)_+`` and the right side
    gets ``L_u h_u`` plus a relative floor, where ``h_u`` is the spacing at
    the selected minimizer. Returns ``(margin[k, t], (tilt, point) argmin)``.
    """
    k0 = _require_minimizer(t)
    sel = t.selected.copy()
    # the base point is the selected minimizer of the untilted function
    sel[k0] = int(np.argmin(((t.points - t.x_bar) ** 2).sum(axis=1)))
    fin = np.isfinite(t.values)
    P = t.points[fin]
    fvals = t.values[fin]
    xs = t.points[sel]
    hs = t.spacing[sel]
    fu = fvals[None, :] - t.tilts @ P.T
    fsel = t.values[sel] - (t.tilts * xs).sum(axis=1)
    d = np.sqrt(((P[None, :, :] - xs[:, None, :]) ** 2).sum(axis=2))
    R = fu - fsel[:, None]
    slack_rhs = t.lipschitz[:, None] * hs[:, None] + REL_FLOOR * (np.abs(fu) + np.abs(fsel)[:, None])
    dl = np.maximum(d - hs[:, None], 0.0).ravel()
    kappas = np.asarray(kappas, dtype=float)
    taus = np.asarray(taus, dtype=float)
    F = np.stack([-_phi_values(phi, k * dl) for k in kappas])
    G = np.outer(taus, (R + slack_rhs).ravel())
    m, a = kernels.sweep_margins(F, G, None, None, use_numba, with_arg)
    return m, a, (R.shape, fin)


def tslm_margins(t: TiltMapTable, psi: AdmissibleFunction, kappas, taus,
                 use_numba: Optional[bool] = None, with_arg: bool = True):
    """Margins of ``kappa |M(u1) - M(u2)| <= psi(tau |u1 - u2|)`` over tilt pairs.

    Also returns the singleton margin ``2 h_u - diam(argmin)``; a negative
    singleton margin fails every constant choice.
    """
    k0 = _require_minimizer(t)
    sel = t.selected.copy()
    sel[k0] = int(np.argmin(((t.points - t.x_bar) ** 2).sum(axis=1)))
    M = t.points[sel]
    h = t.spacing[sel]
    diam = t.diameters()
    single = 2 * h * np.sqrt(t.points.shape[1]) - diam
    iu, ju = np.triu_indices(len(M), 1)
    dM = np.sqrt(((M[iu] - M[ju]) ** 2).sum(axis=1))
    du = np.sqrt(((t.tilts[iu] - t.tilts[ju]) ** 2).sum(axis=1))
    Q = -(dM - h[iu] - h[ju])
    taus = np.asarray(taus, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    G = np.stack([(1 + REL_FLOOR) * _phi_values(psi, tau * du) for tau in taus])
    Qm = np.broadcast_to(Q, G.shape)
    F = np.zeros((kappas.size, Q.size))
    m, a = kernels.sweep_margins(F, G, Qm, kappas, use_numba, with_arg)
    return m, a, (iu, ju, single)


def _set_distances(t: TiltMapTable, P: np.ndarray):
    """Distance from every point to every argmin set and the spacing at the nearest member."""
    m = len(t.argmin)
    D = np.empty((m, len(P)))
    H = np.empty((m, len(P)))
    for k, idx in enumerate(t.argmin):
        A = t.points[idx]
        dd = np.sqrt(((P[:, None, :] - A[None, :, :]) ** 2).sum(axis=2))
        j = np.argmin(dd, axis=1)
        D[k] = dd[np.arange(len(P)), j]
        H[k] = t.spacing[idx][j]
    return D, H


def swlwp_margins(t: TiltMapTable, phi: AdmissibleFunction, gamma: float, taus, kappas,
                  use_numba: Optional[bool] = None, with_arg: bool = True):
    """Margins of ``phi(tau d(x, argmin_u)) <= kappa (f_u(x) - min f_u)`` on ``B(x_bar, gamma)``.

    Rows of the result run over ``tau``, columns over ``kappa``.
    """
    _require_minimizer(t)
    fin = np.isfinite(t.values)
    inside = np.sqrt(((t.points - t.x_bar) ** 2).sum(axis=1)) < gamma * OPEN_SHRINK
    keep = fin & inside
    P = t.points[keep]
    fvals = t.values[keep]
    D, H = _set_distances(t, P)
    fu = fvals[None, :] - t.tilts @ P.T
    R = fu - t.min_values[:, None]
    hs = t.spacing[t.selected]
    slack_rhs = t.lipschitz[:, None] * hs[:, None] + REL_FLOOR * (np.abs(fu) + np.abs(t.min_values)[:, None])
    dl = np.maximum(D - H, 0.0).ravel()
    taus = np.asarray(taus, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    F = np.stack([-_phi_values(phi, tau * dl) for tau in taus])
    G = np.outer(kappas, (R + slack_rhs).ravel())
    m, a = kernels.sweep_margins(F, G, None, None, use_numba, with_arg)
    return m, a, (R.shape, keep)


def swlwp_margins_nested(t: TiltMapTable, phi: AdmissibleFunction, gammas, taus, kappas,
                         use_numba: Optional[bool] = None) -> list:
    """``swlwp_margins`` tables for several ``gamma`` in one pass.

    The samples of a smaller ``gamma`` are a subset of a larger one, so the
    sweep runs once per distance shell and the tables are running minima.
    """
    gs = sorted({float(g) for g in gammas}, reverse=True)
    _require_minimizer(t)
    fin = np.isfinite(t.values)
    dist = np.sqrt(((t.points - t.x_bar) ** 2).sum(axis=1))
    keep = fin & (dist < gs[0] * OPEN_SHRINK)
    P = t.points[keep]
    dP = dist[keep]
    fvals = t.values[keep]
    D, H = _set_distances(t, P)
    fu = fvals[None, :] - t.tilts @ P.T
    R = fu - t.min_values[:, None]
    hs = t.spacing[t.selected]
    slack_rhs = t.lipschitz[:, None] * hs[:, None] + REL_FLOOR * (np.abs(fu) + np.abs(t.min_values)[:, None])
    dl = np.maximum(D - H, 0.0)
    rhs = R + slack_rhs
    taus = np.asarray(taus, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    bounds = [g * OPEN_SHRINK for g in gs] + [-1.0]
    shells = []
    for k in range(len(gs)):
        cols = (dP < bounds[k]) & (dP >= bounds[k + 1])
        if not cols.any():
            shells.append(np.full((taus.size, kappas.size), np.inf))
            continue
        d = dl[:, cols].ravel()
        F = np.stack([-_phi_values(phi, tau * d) for tau in taus])
        G = np.outer(kappas, rhs[:, cols].ravel())
        shells.append(kernels.sweep_margins(F, G, None, None, use_numba, False)[0])
    out = []
    for k in range(len(gs)):
        out.append(np.minimum.reduce(shells[k:]))
    return [(g, m) for g, m in zip(gs, out)]


def weak_tslm_margins(t: TiltMapTable, psi: AdmissibleFunction, gamma: float, kappas, taus,
                      use_numba: Optional[bool] = None, with_arg: bool = True):
    """Margins of ``argmin_x* cap B(x_bar, gamma)`` within ``kappa psi(tau |x* - u*|)`` of ``argmin_u*``."""
    _require_minimizer(t)
    inside = np.sqrt(((t.points - t.x_bar) ** 2).sum(axis=1)) < gamma * OPEN_SHRINK
    D = kernels.set_excess(t.points, list(t.argmin), inside, use_numba)
    h = np.array([t.spacing[idx].max() for idx in t.argmin])
    m_t = len(t.argmin)
    ii, jj = np.meshgrid(np.arange(m_t), np.arange(m_t), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    du = np.sqrt(((t.tilts[ii] - t.tilts[jj]) ** 2).sum(axis=1))
    G0 = -D.ravel() + h[ii] + h[jj]
    taus = np.asarray(taus, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    Q = np.stack([(1 + REL_FLOOR) * _phi_values(psi, tau * du) for tau in taus])
    G = np.broadcast_to(G0, Q.shape)
    F = np.zeros((kappas.size, G0.size))
    m, a = kernels.sweep_margins(F, G, Q, kappas, use_numba, with_arg)
    return m, a, (ii, jj, D)


# ---------------------------------------------------------------------------
# single-constant checkers


def _table_for(inst: WellPosednessInstance, sampling: Optional[Sampling]) -> TiltMapTable:
    r, delta = inst.const("r"), inst.const("delta")
    s = sampling or Sampling()
    return tilt_minimizer_map(inst.f, inst.x_bar, r, delta, s.tilt_points, s)


def _meta(t: TiltMapTable, sampling: Optional[Sampling]) -> dict:
    s = sampling or Sampling()
    return {"sampling": s.as_dict(), "primal_samples": int(len(t.points)),
            "tilt_samples": int(len(t.tilts)), "relative_floor": REL_FLOOR,
            "argmin_tolerance_max": float(t.tolerances.max()),
            "argmin_tolerance": "L h / 2 at the grid minimizer plus rounding floor"}


def check_slwp(inst: WellPosednessInstance, sampling: Optional[Sampling] = None,
               table: Optional[TiltMapTable] = None) -> Certificate:
    """Stable local well-posedness with the instance constants ``delta, r, tau, kappa``."""
    if inst.phi is None:
        raise ValueError("check_slwp needs phi")
    t = table or _table_for(inst, sampling)
    kappa, tau = inst.const("kappa"), inst.const("tau")
    m, a, (shape, fin) = slwp_margins(t, inst.phi, [kappa], [tau])
    margin = float(m[0, 0])
    k, p = np.unravel_index(int(a[0, 0]), shape)
    P = t.points[fin]
    wit = {"u": t.tilts[k].tolist(), "x": P[p].tolist(),
           "x_u": t.selected_points[k].tolist()}
    cons = {kk: inst.const(kk) for kk in ("delta", "r", "tau", "kappa")}
    return Certificate.from_margin("slwp", margin, cons, wit, _meta(t, sampling))


def check_tslm(inst: WellPosednessInstance, sampling: Optional[Sampling] = None,
               table: Optional[TiltMapTable] = None) -> Certificate:
    """Tilt-stable local minimum with constants ``delta, r, kappa, tau``."""
    if inst.psi is None:
        raise ValueError("check_tslm needs psi")
    t = table or _table_for(inst, sampling)
    kappa, tau = inst.const("kappa"), inst.const("tau")
    m, a, (iu, ju, single) = tslm_margins(t, inst.psi, [kappa], [tau])
    cons = {kk: inst.const(kk) for kk in ("delta", "r", "tau", "kappa")}
    meta = _meta(t, sampling)
    ks = int(np.argmin(single))
    meta["singleton_margin"] = float(single[ks])
    if single[ks] < 0:
        wit = {"u": t.tilts[ks].tolist(), "argmin_diameter": float(t.diameters()[ks]),
               "clause": "single-valued"}
        return Certificate.from_margin("tslm", float(single[ks]), cons, wit, meta)
    margin = float(m[0, 0]) if iu.size else np.inf
    wit = None
    if iu.size:
        p = int(a[0, 0])
        wit = {"u1": t.tilts[iu[p]].tolist(), "u2": t.tilts[ju[p]].tolist(),
               "M1": t.selected_points[iu[p]].tolist(), "M2": t.selected_points[ju[p]].tolist()}
    return Certificate.from_margin("tslm", margin, cons, wit, meta)


def check_swlwp(inst: WellPosednessInstance, sampling: Optional[Sampling] = None,
                table: Optional[TiltMapTable] = None) -> Certificate:
    """Stable weak local well-posedness with constants ``r, gamma, delta, tau, kappa``."""
    if inst.phi is None:
        raise ValueError("check_swlwp needs phi")
    t = table or _table_for(inst, sampling)
    tau, kappa, gamma = inst.const("tau"), inst.const("kappa"), inst.const("gamma")
    m, a, (shape, keep) = swlwp_margins(t, inst.phi, gamma, [tau], [kappa])
    margin = float(m[0, 0])
    wit = None
    if shape[1]:
        k, p = np.unravel_index(int(a[0, 0]), shape)
        wit = {"u": t.tilts[k].tolist(), "x": t.points[keep][p].tolist(),
               "argmin_size": int(len(t.argmin[k]))}
    cons = {kk: inst.const(kk) for kk in ("r", "gamma", "delta", "tau", "kappa")}
    return Certificate.from_margin("swlwp", margin, cons, wit, _meta(t, sampling))


def check_weak_tslm(inst: WellPosednessInstance, sampling: Optional[Sampling] = None,
                    table: Optional[TiltMapTable] = None) -> Certificate:
    """Weak tilt stability (set-valued containment) with constants ``r, gamma, kappa, delta, tau``."""
    if inst.psi is None:
        raise ValueError("check_weak_tslm needs psi")
    t = table or _table_for(inst, sampling)
    tau, kappa, gamma = inst.const("tau"), inst.const("kappa"), inst.const("gamma")
    m, a, (ii, jj, D) = weak_tslm_margins(t, inst.psi, gamma, [kappa], [tau])
    p = int(a[0, 0])
    wit = {"x_star": t.tilts[ii[p]].tolist(), "u_star": t.tilts[jj[p]].tolist(),
           "excess": float(D.ravel()[p])}
    cons = {kk: inst.const(kk) for kk in ("r", "gamma", "delta", "tau", "kappa")}
    return Certificate.from_margin("weak-tslm", float(m[0, 0]), cons, wit, _meta(t, sampling))


# ---------------------------------------------------------------------------
# slope-to-growth and interiority


def check_growth_from_slope(f: GridFunction, g: SetValuedGraph, x_bar, r: float,
                            psi: AdmissibleFunction, tau: float, kappa: float, delta: float,
                            alpha: float, sampling: Optional[Sampling] = None) -> Certificate:
    """Two-phase slope-to-growth check in one dimension.

    Phase 1 tests ``psi'_+(tau d(x, M)) <= kappa d(0, F(x))`` on
    ``B(x_bar, delta)`` off ``M``, the argmin of ``f`` over ``B[x_bar, r]``.
    When it holds, phase 2 tests
    ``psi(tau (1 - alpha) d(x, M)) <= tau kappa (1 - alpha) / alpha (f(x) - f(x_bar))``
    on ``B(x_bar, min(delta, r) / (1 + alpha))``.
    """
    if f.dim != 1:
        raise ValueError("slope-to-growth is implemented in one dimension")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    s = sampling or Sampling()
    xb = float(np.atleast_1d(x_bar)[0])
    t = tilt_minimizer_map(f, [xb], r, 1.0, 3, replace(s, tilt_points=3, tilt_levels=0)
                           if s.graded else Sampling(tilt_points=3, graded=False))
    k0 = _require_minimizer(t)
    A = t.points[t.argmin[k0], 0]
    h_at = t.spacing[t.argmin[k0]].max()
    fbar = float(t.values[int(np.argmin(np.abs(t.points[:, 0] - xb)))])
    x = t.points[:, 0]
    vals = t.values
    dM = np.abs(x[:, None] - A[None, :]).min(axis=1)
    in_M = np.isin(np.arange(len(x)), t.argmin[k0])
    # phase 1
    ph1 = (np.abs(x - xb) < delta * OPEN_SHRINK) & ~in_M & np.isfinite(vals)
    d0 = np.array([float(interval_distance(np.array(0.0), g.F(v))) for v in x[ph1]])
    lhs1 = np.asarray(right_derivative(psi, tau * np.maximum(dM[ph1] - h_at, 0.0)), dtype=float)
    m1 = kappa * d0 - lhs1 + REL_FLOOR * (np.abs(lhs1) + kappa * d0)
    cons = {"r": r, "tau": tau, "kappa": kappa, "delta": delta, "alpha": alpha}
    meta = {"phase1_samples": int(ph1.sum()), "argmin_size": int(len(A)),
            "relative_floor": REL_FLOOR}
    if m1.size and m1.min() < 0:
        j = int(np.argmin(m1))
        meta["phase2"] = "skipped"
        wit = {"phase": 1, "x": float(x[ph1][j]), "lhs": float(lhs1[j]),
               "rhs": float(kappa * d0[j])}
        return Certificate.from_margin("growth-from-slope", float(m1[j]), cons, wit, meta)
    rad = min(delta, r) / (1 + alpha) * OPEN_SHRINK
    ph2 = (np.abs(x - xb) < rad) & np.isfinite(vals)
    lhs2 = np.asarray(psi(tau * (1 - alpha) * np.maximum(dM[ph2] - h_at, 0.0)), dtype=float)
    rhs2 = tau * kappa * (1 - alpha) / alpha * (vals[ph2] - fbar)
    m2 = rhs2 - lhs2 + REL_FLOOR * (np.abs(lhs2) + np.abs(rhs2))
    j = int(np.argmin(m2))
    meta["phase1_margin"] = float(m1.min()) if m1.size else float("inf")
    meta["phase2_samples"] = int(ph2.sum())
    wit = {"phase": 2, "x": float(x[ph2][j]), "lhs": float(lhs2[j]), "rhs": float(rhs2[j])}
    return Certificate.from_margin("growth-from-slope", float(m2[j]), cons, wit, meta)


def check_interiority(g: SetValuedGraph, x_bar: float, eps: float) -> Certificate:
    """``0`` lies in the interior of the union of ``F(x)`` over ``x in B(x_bar, eps)``.

    The margin is the largest ``gamma`` with ``(-gamma, gamma)`` covered
    (``0`` when ``0`` is not an interior point).
    """
    xb = float(x_bar)
    lo_b, hi_b = xb - eps * OPEN_SHRINK, xb + eps * OPEN_SHRINK
    s = g.segments
    ranges = []
    for x0, v0, x1, v1 in s:
        a, b = min(x0, x1), max(x0, x1)
        if b < lo_b or a > hi_b:
            continue
        if a == b or not np.isfinite(b - a):
            ranges.append((min(v0, v1), max(v0, v1)))
            continue
        ta = (max(a, lo_b) - x0) / (x1 - x0)
        tb = (min(b, hi_b) - x0) / (x1 - x0)
        va, vb = v0 + ta * (v1 - v0), v0 + tb * (v1 - v0)
        ranges.append((min(va, vb), max(va, vb)))
    cover = merge_intervals(ranges)
    gamma = 0.0
    for lo, hi in cover:
        if lo < 0 < hi:
            gamma = float(min(-lo, hi))
    wit = {"covered": cover.tolist()}
    cert = Certificate("interiority", "pass" if gamma > 0 else "fail", gamma,
                       {"eps": eps}, wit, {"ball_shrink": OPEN_SHRINK})
    return cert


def slope_scale(f: GridFunction, x_bar, r: float) -> float:
    """Largest neighbour difference quotient of ``f`` over ``B[x_bar, r]``."""
    c = np.asarray(x_bar, dtype=float)
    grid = f.grid
    best = 0.0
    mask = (np.sqrt(((f.coords - c) ** 2).sum(axis=1)) <= r * (1 + 1e-12)).reshape(grid.shape)
    for ax, h in enumerate(f.spacing):
        a = np.moveaxis(grid, ax, 0)
        mk = np.moveaxis(mask, ax, 0)
        with np.errstate(invalid="ignore"):
            q = np.abs(a[1:] - a[:-1]) / h
        ok = mk[1:] & mk[:-1] & np.isfinite(q)
        if ok.any():
            best = max(best, float(q[ok].max()))
    return best
