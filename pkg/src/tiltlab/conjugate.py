"""Discrete conjugates, convex envelopes, gradient moduli and the conjugate lower bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .certificate import Certificate
from .gridfn import GridFunction, normalize_box

__all__ = [
    "SmoothnessModulus",
    "conjugate_transform",
    "conjugate_at",
    "convex_envelope",
    "envelope_dual_box",
    "fit_smoothness_modulus",
    "check_conjugate_lower_bound",
    "lower_bound_pairs",
]

_EXPLOSION = 1e12


def _dual_axes(dual_box, dual_points: int):
    box = normalize_box(dual_box)
    if dual_points < 3 or dual_points % 2 == 0:
        raise ValueError("dual points per axis must be odd and >= 3")
    return box, [np.linspace(lo, hi, dual_points) for lo, hi in box]


def conjugate_transform(f: GridFunction, dual_box, dual_points: int, method: str = "auto",
                        use_numba: Optional[bool] = None) -> GridFunction:
    """``f*(u) = max_x <u, x> - f(x)`` over the grid nodes, on a dual grid.

    One dimension uses the lower-hull scan, which returns exactly what the
    brute-force scan returns. Two dimensions default to the brute-force
    scan; ``method="factorized"`` takes row conjugates first and agrees with
    it to rounding.
    """
    box, axes = _dual_axes(dual_box, dual_points)
    if len(box) != f.dim:
        raise ValueError("dual box dimension does not match f")
    name = f"({f.name})*"
    if f.dim == 1:
        if method not in ("auto", "hull", "brute"):
            raise ValueError(f"unknown 1-D method {method!r}")
        x = f.axes[0]
        if method == "brute":
            vals, _ = kernels.brute_conjugate(x[:, None], f.values, axes[0][:, None], use_numba)
        else:
            vals, _ = kernels.hull_conjugate_1d(x, f.values, axes[0], use_numba)
        return GridFunction(box, dual_points, vals, name)
    if method in ("auto", "brute"):
        mesh = np.meshgrid(*axes, indexing="ij")
        u = np.stack([m.ravel() for m in mesh], axis=1)
        vals, _ = kernels.brute_conjugate(f.coords, f.values, u, use_numba)
        return GridFunction(box, dual_points, vals, name)
    if method != "factorized":
        raise ValueError(f"unknown 2-D method {method!r}")
    x1, x2 = f.axes
    grid = f.grid
    rows = np.full((f.points, dual_points), -np.inf)
    for i in range(f.points):
        if np.any(np.isfinite(grid[i])):
            rows[i], _ = kernels.hull_conjugate_1d(x2, grid[i], axes[1], use_numba)
    out = np.empty((dual_points, dual_points))
    neg = np.where(np.isfinite(rows), -rows, np.inf)
    for l in range(dual_points):
        out[:, l], _ = kernels.hull_conjugate_1d(x1, neg[:, l], axes[0], use_numba)
    return GridFunction(box, dual_points, out.ravel(), name)


def conjugate_at(f: GridFunction, u, use_numba: Optional[bool] = None) -> np.ndarray:
    """Discrete conjugate of ``f`` at arbitrary dual points ``u`` (shape ``(m,)`` or ``(m, d)``)."""
    u = np.asarray(u, dtype=float)
    if f.dim == 1:
        u = u.reshape(-1)
        order = np.argsort(u, kind="stable")
        vals, _ = kernels.hull_conjugate_1d(f.axes[0], f.values, u[order], use_numba)
        out = np.empty_like(vals)
        out[order] = vals
        return out
    return kernels.brute_conjugate(f.coords, f.values, u.reshape(-1, f.dim), use_numba)[0]


def envelope_dual_box(f: GridFunction) -> tuple:
    """Range of one-sided difference quotients per axis, padded by 10 %."""
    grid = f.grid
    box = []
    for ax, h in enumerate(f.spacing):
        a = np.moveaxis(grid, ax, 0)
        with np.errstate(invalid="ignore"):
            d = (a[1:] - a[:-1]) / h
        d = d[np.isfinite(d)]
        if d.size == 0:
            lo, hi = -1.0, 1.0
        else:
            lo, hi = float(d.min()), float(d.max())
        if max(abs(lo), abs(hi)) > _EXPLOSION:
            raise ValueError("slope range explodes: f looks unbounded below on its box")
        pad = 0.1 * max(hi - lo, abs(lo), abs(hi), 1e-12)
        box.append((lo - pad, hi + pad))
    return tuple(box)


def _hull_mask(f: GridFunction) -> np.ndarray:
    """Nodes inside the convex hull of the finite nodes."""
    fin = f.finite
    if f.dim == 1:
        x = f.axes[0]
        lo, hi = x[fin].min(), x[fin].max()
        return (x >= lo) & (x <= hi)
    if fin.all():
        return fin
    from scipy.spatial import Delaunay
    from scipy.spatial import QhullError

    pts = f.coords[fin]
    try:
        tri = Delaunay(pts)
    except QhullError:
        return fin
    return (tri.find_simplex(f.coords, tol=1e-12) >= 0) | fin


def convex_envelope(f: GridFunction, dual_points: Optional[int] = None,
                    use_numba: Optional[bool] = None) -> GridFunction:
    """Biconjugate of ``f`` on its own grid (``+inf`` off the hull of ``dom f``)."""
    if dual_points is None:
        dual_points = 4 * (f.points - 1) + 1 if f.dim == 1 else 2 * (f.points - 1) + 1
    dual = conjugate_transform(f, envelope_dual_box(f), dual_points, use_numba=use_numba)
    back = conjugate_transform(dual, f.box, f.points, use_numba=use_numba)
    vals = np.where(_hull_mask(f), np.minimum(back.values, f.values), np.inf)
    return f.with_values(vals, name=f"co({f.name})")


# ---------------------------------------------------------------------------
# gradient modulus


@dataclass(frozen=True)
class SmoothnessModulus:
    """Power modulus ``omega(t) = C t^p`` with ``0 < p <= 1``.

    ``regression_coefficient`` is the coefficient before inflation;
    ``inflated`` is true when ``C`` had to grow to cover every sampled pair.
    """

    family: str
    coefficient: float
    exponent: float
    residual: float
    regression_coefficient: float = 0.0
    inflated: bool = False

    def __call__(self, t):
        return self.coefficient * np.power(np.asarray(t, dtype=float), self.exponent)

    def inverse(self, s):
        return np.power(np.asarray(s, dtype=float) / self.coefficient, 1.0 / self.exponent)

    def inverse_integral(self, R):
        """``int_0^R omega^{-1}(s) ds``."""
        R = np.asarray(R, dtype=float)
        p = self.exponent
        return p / (p + 1) * np.power(R / self.coefficient, 1.0 / p) * R


def _region_mask(f: GridFunction, region) -> np.ndarray:
    reg = normalize_box(region)
    if len(reg) != f.dim:
        raise ValueError("region dimension mismatch")
    c = f.coords
    mask = np.ones(len(c), dtype=bool)
    for k, (lo, hi) in enumerate(reg):
        mask &= (c[:, k] >= lo - 1e-12) & (c[:, k] <= hi + 1e-12)
    return mask


def _gradient(g: GridFunction) -> np.ndarray:
    """Central-difference gradient ``(N, d)``; NaN on boundary nodes."""
    grid = g.grid
    out = np.full((g.values.size, g.dim), np.nan)
    for ax, h in enumerate(g.spacing):
        a = np.moveaxis(grid, ax, 0)
        d = np.full(a.shape, np.nan)
        d[1:-1] = (a[2:] - a[:-2]) / (2 * h)
        out[:, ax] = np.moveaxis(d, 0, ax).ravel()
    return out


def fit_smoothness_modulus(g: GridFunction, region, fit_decades: float = 1.0,
                           max_nodes: int = 1601) -> SmoothnessModulus:
    """Fit ``omega(t) = C t^p`` to gradient differences of ``g`` on ``region``.

    The exponent comes from a log-log regression of the largest gradient
    difference per separation over the smallest ``fit_decades`` decades of
    separations above one cell, clipped to ``(0, 1]``. ``C`` is then raised until every
    sampled pair satisfies the bound. One-dimensional catalog functions use
    their closed-form derivative; everything else uses central differences.
    """
    mask = _region_mask(g, region)
    grad = _gradient(g)
    if g.dim == 1 and g.source is not None:
        inner = ~np.isnan(grad[:, 0])
        grad[inner, 0] = g.source.dright(g.coords[inner, 0])
    sel = np.flatnonzero(mask & ~np.isnan(grad).any(axis=1))
    if sel.size < 3:
        raise ValueError("region has fewer than three interior nodes")
    if not np.all(np.isfinite(grad[sel])):
        raise ValueError("gradient undefined: infinite neighbours inside the region")
    stride = max(1, int(np.ceil(sel.size / max_nodes)))
    sel = sel[::stride]
    pts, gr = g.coords[sel], grad[sel]
    if g.dim == 1:
        x, v = pts[:, 0], gr[:, 0]
        seps, maxes = [], []
        for k in range(1, x.size):
            seps.append(x[k] - x[0])
            maxes.append(float(np.abs(v[k:] - v[:-k]).max()))
        seps, maxes = np.asarray(seps), np.asarray(maxes)
    else:
        dx = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        dv = np.sqrt(((gr[:, None, :] - gr[None, :, :]) ** 2).sum(-1))
        iu = np.triu_indices(len(sel), 1)
        dx, dv = dx[iu], dv[iu]
        key = np.round(dx / dx[dx > 0].min(), 6)
        uniq, inv = np.unique(key, return_inverse=True)
        maxes = np.zeros(uniq.size)
        np.maximum.at(maxes, inv, dv)
        seps = np.zeros(uniq.size)
        np.maximum.at(seps, inv, dx)
    ok = (seps > 0) & (maxes > 0)
    if not np.any(ok):
        # affine g: any modulus works; report the smallest sensible one
        return SmoothnessModulus("power", 1e-12, 1.0, 0.0, 1e-12, False)
    s_ok, m_ok = seps[ok], maxes[ok]
    # the smallest separation is skipped: at one cell, node placement
    # relative to kinks distorts the maximum
    smin = s_ok.min()
    fit = (s_ok >= 1.5 * smin) & (s_ok <= 2 * smin * 10.0 ** fit_decades)
    if fit.sum() < 3:
        fit = s_ok <= np.sort(s_ok)[min(2, s_ok.size - 1)]
    ls, lm = np.log(s_ok[fit]), np.log(m_ok[fit])
    # geometric thinning so every scale weighs the same
    grid_ls = np.linspace(ls.min(), ls.max(), 24)
    pick = np.unique(np.searchsorted(ls, grid_ls).clip(0, ls.size - 1))
    if pick.size >= 2 and np.ptp(ls[pick]) > 0:
        p, logc = np.polyfit(ls[pick], lm[pick], 1)
    else:
        p, logc = 1.0, float(lm.mean() - ls.mean())
    p = float(np.clip(p, 1e-3, 1.0))
    c_reg = float(np.exp(lm[pick].mean() - p * ls[pick].mean())) if pick.size else float(np.exp(logc))
    ratio = maxes[seps > 0] / np.power(seps[seps > 0], p)
    c = max(c_reg, float(ratio.max()))
    residual = float(max(0.0, np.max(maxes[seps > 0] - c * np.power(seps[seps > 0], p))))
    return SmoothnessModulus("power", c, p, residual, c_reg, bool(c > c_reg))


# ---------------------------------------------------------------------------
# conjugate lower bound


def _true_gradient(g: GridFunction, u: np.ndarray) -> np.ndarray:
    """Derivative of 1-D ``g`` at nodes ``u``: closed form when known, else central differences."""
    if g.source is not None:
        return np.asarray(g.source.dright(u), dtype=float)
    grad = _gradient(g)[:, 0]
    return np.array([grad[g.index_of([v])] for v in u])


def lower_bound_pairs(g: GridFunction, modulus: SmoothnessModulus, u_bar, delta: float,
                      count: int = 100) -> np.ndarray:
    """Deterministic ``(u, x*)`` pairs on the primal axis for 1-D ``g``.

    ``u`` runs over nodes of ``B(u_bar, delta)``, ``x*`` over nodes of
    ``B(g'(u_bar), omega(delta))``, each thinned to at most ``count`` evenly spread
    values.
    """
    if g.dim != 1:
        raise ValueError("pair generation is implemented for 1-D functions")
    x = g.axes[0]
    ub = float(np.atleast_1d(u_bar)[0])
    gb = float(_true_gradient(g, np.array([ub]))[0])
    w = float(modulus(delta))
    us = x[np.abs(x - ub) < delta]
    xs = x[np.abs(x - gb) < w]
    if us.size == 0 or xs.size == 0:
        raise ValueError("no grid nodes inside the sampling balls")
    us = us[np.unique(np.linspace(0, us.size - 1, min(count, us.size)).round().astype(int))]
    xs = xs[np.unique(np.linspace(0, xs.size - 1, min(count, xs.size)).round().astype(int))]
    uu, xx = np.meshgrid(us, xs, indexing="ij")
    return np.stack([uu.ravel(), xx.ravel()], axis=1)


def check_conjugate_lower_bound(g: GridFunction, modulus: SmoothnessModulus, samples,
                                u_bar=None, delta: Optional[float] = None,
                                slack: float = 1e-8) -> Certificate:
    """Check ``g*(x*) >= <x*, u> - g(u) + int_0^{|x* - g'(u)|} omega^{-1}``.

    ``samples`` are ``(u, x*)`` rows with ``u`` on ``g``'s grid. The margin
    includes ``slack + omega(h) h`` to absorb the grid sup. When ``u_bar`` and
    ``delta`` are given, sample locality and the smoothness ball are checked.
    """
    if modulus.family != "power" or not 0 < modulus.exponent <= 1 or modulus.coefficient <= 0:
        raise ValueError("modulus family is not invertible")
    if g.dim != 1:
        raise ValueError("the lower-bound check is implemented for 1-D functions")
    s = np.asarray(samples, dtype=float).reshape(-1, 2)
    u, xs = s[:, 0], s[:, 1]
    h = float(g.spacing[0])
    if u_bar is not None and delta is not None:
        ub = float(np.atleast_1d(u_bar)[0])
        need = delta + float(modulus.inverse(2 * modulus(delta)))
        lo, hi = g.box[0]
        if ub - need < lo - 1e-12 or ub + need > hi + 1e-12:
            raise ValueError("smoothness ball B(u_bar, delta + omega^-1(2 omega(delta))) leaves the box")
        gb = float(_true_gradient(g, np.array([ub]))[0])
        if np.any(np.abs(u - ub) >= delta) or np.any(np.abs(xs - gb) >= modulus(delta)):
            raise ValueError("samples violate the locality requirement")
    gu = np.array([g.values[g.index_of([v])] for v in u])
    grad = _true_gradient(g, u)
    gstar = conjugate_at(g, xs)
    bound = xs * u - gu + modulus.inverse_integral(np.abs(xs - grad))
    grid_term = float(modulus(h)) * h
    margins = gstar - bound + slack + grid_term
    k = int(np.argmin(margins))
    witness = {"u": float(u[k]), "x_star": float(xs[k]), "conjugate": float(gstar[k]),
               "bound": float(bound[k])}
    sweep = {"samples": int(len(u)), "slack": slack, "grid_term": grid_term,
             "raw_margin": float(np.min(gstar - bound)),
             "modulus_inflated": modulus.inflated}
    constants = {"C": modulus.coefficient, "p": modulus.exponent}
    return Certificate.from_margin("conjugate-lower-bound", margins[k], constants, witness, sweep)
