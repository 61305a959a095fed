"""Extended-real functions sampled on uniform boxes in one or two dimensions."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .functions import FunctionSpec, parse_function

__all__ = [
    "GridFunction",
    "PointSet",
    "Samples",
    "normalize_box",
    "sample_function",
    "tilt_perturb",
    "add_ball_indicator",
    "localized_argmin",
    "distance_to_set",
    "graded_samples",
    "graded_axis",
    "local_lipschitz",
    "to_csv",
    "from_csv",
]


def normalize_box(box) -> tuple:
    """``(lo, hi)`` or ``((lo, hi), (lo, hi))`` -> tuple of per-axis pairs."""
    arr = np.asarray(box, dtype=float)
    if arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] not in (1, 2):
        raise ValueError(f"box must be (lo, hi) or two such pairs, got {box!r}")
    if np.any(~np.isfinite(arr)) or np.any(arr[:, 1] <= arr[:, 0]):
        raise ValueError(f"degenerate box {box!r}")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of an extended-real function on a uniform box grid.

    ``values`` is flat in row-major order (last axis fastest). ``source``
    keeps the closed form when the grid came from the catalog, which lets
    checkers resample on finer windows.
    """

    box: tuple
    points: int
    values: np.ndarray
    name: str = ""
    source: Optional[FunctionSpec] = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", vals)
        if self.points < 3 or self.points % 2 == 0:
            raise ValueError("points per axis must be odd and >= 3")
        if vals.size != self.points ** self.dim:
            raise ValueError("value count does not match the grid")
        if np.any(np.isnan(vals)) or np.any(vals == -np.inf):
            raise ValueError("values must be finite or +inf")
        if not np.any(np.isfinite(vals)):
            raise ValueError("function is identically +inf")
        vals.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / (self.points - 1) for lo, hi in self.box])

    @property
    def axes(self) -> list:
        return [np.linspace(lo, hi, self.points) for lo, hi in self.box]

    @property
    def coords(self) -> np.ndarray:
        """``(N, d)`` node coordinates in row-major order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape((self.points,) * self.dim)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def with_values(self, values, name=None, keep_source=False) -> "GridFunction":
        return GridFunction(self.box, self.points, values, name or self.name,
                            self.source if keep_source else None)

    def index_of(self, point) -> int:
        """Flat index of a grid node, or ``ValueError`` when off grid."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.size != self.dim:
            raise ValueError("point dimension mismatch")
        idx = 0
        for k, ((lo, _), h) in enumerate(zip(self.box, self.spacing)):
            t = (p[k] - lo) / h
            i = int(round(t))
            if abs(t - i) > 1e-9 or not 0 <= i < self.points:
                raise ValueError(f"point {tuple(p)} is not on the grid")
            idx = idx * self.points + i
        return idx


@dataclass(frozen=True, eq=False)
class PointSet:
    """Grid points (rows of ``points``) with their flat grid indices."""

    points: np.ndarray
    indices: np.ndarray

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(tuple(float(v) for v in p) for p in self.points)

    def as_tuples(self) -> list:
        return list(self)


def sample_function(closed_form, box, points: int, name: str = None) -> GridFunction:
    """Sample a catalog function id on a uniform grid.

    >>> sample_function("quad", (-1, 1), 3).values.tolist()
    [1.0, 0.0, 1.0]
    """
    spec = parse_function(closed_form)
    box = normalize_box(box)
    if points < 3 or points % 2 == 0:
        raise ValueError("points per axis must be odd and >= 3")
    axes = [np.linspace(lo, hi, points) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return GridFunction(box, points, spec(pts), name or spec.id, spec)


def tilt_perturb(f: GridFunction, u_star) -> GridFunction:
    """``f(x) - <u*, x>``; ``+inf`` entries stay ``+inf``."""
    u = np.atleast_1d(np.asarray(u_star, dtype=float))
    if u.size != f.dim:
        raise ValueError("tilt dimension does not match the function")
    lin = f.coords @ u if f.dim > 1 else f.coords[:, 0] * u[0]
    vals = np.where(np.isfinite(f.values), f.values - lin, np.inf)
    return f.with_values(vals, name=f"{f.name}-<{u.tolist()},x>")


def _ball_mask(f: GridFunction, center, r: float) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.size != f.dim:
        raise ValueError("center dimension mismatch")
    dist = np.sqrt(((f.coords - c) ** 2).sum(axis=1))
    return dist <= r * (1 + 1e-12)


def add_ball_indicator(f: GridFunction, center, r: float) -> GridFunction:
    """Restrict ``f`` to the closed ball ``B[center, r]`` (``+inf`` outside)."""
    if not r > 0:
        raise ValueError("radius must be positive")
    f.index_of(center)
    mask = _ball_mask(f, center, r)
    if not np.any(mask & f.finite):
        raise ValueError("ball does not meet the domain of f")
    vals = np.where(mask, f.values, np.inf)
    return f.with_values(vals, name=f"{f.name}+ind(B[{np.atleast_1d(center).tolist()},{r:g}])")


def local_lipschitz(f: GridFunction, index: int) -> float:
    """Largest one-sided difference quotient between a node and its grid neighbours."""
    shape = (f.points,) * f.dim
    multi = np.unravel_index(index, shape)
    h = f.spacing
    v0 = f.values[index]
    best = 0.0
    for ax in range(f.dim):
        for step in (-1, 1):
            nb = list(multi)
            nb[ax] += step
            if not 0 <= nb[ax] < f.points:
                continue
            v = f.values[np.ravel_multi_index(nb, shape)]
            if np.isfinite(v):
                best = max(best, abs(v - v0) / h[ax])
    return best


def localized_argmin(f: GridFunction, center, r: float, tol: Optional[float] = None,
                     lipschitz: Optional[float] = None) -> PointSet:
    """Grid points of ``B[center, r]`` within ``tol`` of the minimum there.

    The default ``tol`` is ``1e-9 + L h / 2`` with ``L`` the supplied bound or
    the local one-sided quotient at the grid minimizer and ``h`` the largest
    spacing.
    """
    mask = _ball_mask(f, center, r) & f.finite
    if not np.any(mask):
        raise ValueError("no finite value inside the ball")
    vals = np.where(mask, f.values, np.inf)
    i0 = int(np.argmin(vals))
    m = vals[i0]
    if tol is None:
        L = local_lipschitz(f, i0) if lipschitz is None else lipschitz
        tol = 1e-9 + 0.5 * L * float(f.spacing.max())
    idx = np.flatnonzero(vals <= m + tol)
    return PointSet(f.coords[idx], idx)


def distance_to_set(x, s) -> float:
    """Euclidean distance from ``x`` to a finite set; ``+inf`` for the empty set."""
    pts = s.points if isinstance(s, PointSet) else np.asarray(s, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if pts.size == 0:
        return np.inf
    pts = pts.reshape(-1, x.size)
    return float(np.sqrt(((pts - x) ** 2).sum(axis=1)).min())


# ---------------------------------------------------------------------------
# graded sampling: nested uniform windows shrinking toward a center


def graded_axis(center: float, radius: float, points: int = 101, levels: int = 12,
                ratio: float = 0.25, inner_points: int = 21):
    """Union of uniform grids on ``[c - R ratio^k, c + R ratio^k]``, k = 0..levels.

    Returns ``(nodes, spacing)`` with ``spacing`` the larger gap to a
    neighbouring node, so every point of the interval lies within
    ``spacing / 2`` of some node near it.
    """
    chunks = []
    for k in range(levels + 1):
        rk = radius * ratio ** k
        n = points if k == 0 else inner_points
        chunks.append(center + np.linspace(-rk, rk, n))
    nodes = np.concatenate(chunks)
    finest = 2 * radius * ratio ** levels / ((inner_points if levels else points) - 1)
    # rounding in linspace leaves near-duplicates where windows share nodes
    eps = 1e-6 * finest
    nodes = np.unique(np.where(np.abs(nodes - center) <= eps, center, nodes))
    keep = np.concatenate([[True], np.diff(nodes) > eps])
    nodes = nodes[keep]
    if nodes.size == 1:
        return nodes, np.zeros(1)
    gaps = np.diff(nodes)
    spacing = np.maximum(np.concatenate([[gaps[0]], gaps]), np.concatenate([gaps, [gaps[-1]]]))
    return nodes, spacing


@dataclass(frozen=True, eq=False)
class Samples:
    """Scattered evaluation points with values and local grid spacing."""

    points: np.ndarray
    values: np.ndarray
    spacing: np.ndarray
    levels: int

    def __len__(self):
        return len(self.values)


def graded_samples(f: GridFunction, center, radius: float, points: int = 101,
                   levels: int = 12, ratio: float = 0.25, inner_points: int = 21,
                   closed: bool = True) -> Samples:
    """Samples of ``f`` on the ball around ``center``, refined toward it.

    Refinement needs the closed form (``f.source``); plain tables are used at
    their own resolution. Points outside ``f``'s box are dropped.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    shrink = 1.0 if closed else 1 - 1e-9
    R = radius * shrink
    if f.source is None:
        levels = 0
        mask = _ball_mask(f, c, R)
        pts = f.coords[mask]
        vals = f.values[mask]
        spacing = np.full(len(vals), float(f.spacing.max()))
        return Samples(pts, vals, spacing, 0)
    axes = []
    for k in range(f.dim):
        nodes, steps = graded_axis(c[k], R, points if f.dim == 1 else min(points, 41),
                                   levels, ratio, inner_points if f.dim == 1 else 11)
        axes.append((nodes, steps))
    if f.dim == 1:
        pts = axes[0][0][:, None]
        spacing = axes[0][1]
    else:
        mx, my = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
        sx, sy = np.meshgrid(axes[0][1], axes[1][1], indexing="ij")
        pts = np.stack([mx.ravel(), my.ravel()], axis=1)
        spacing = np.maximum(sx.ravel(), sy.ravel())
    dist = np.sqrt(((pts - c) ** 2).sum(axis=1))
    inbox = np.all([(pts[:, k] >= lo - 1e-12) & (pts[:, k] <= hi + 1e-12)
                    for k, (lo, hi) in enumerate(f.box)], axis=0)
    keep = (dist <= R * (1 + 1e-12)) & inbox
    pts = pts[keep]
    return Samples(pts, f.source(pts), spacing[keep], levels)


# ---------------------------------------------------------------------------
# CSV


def to_csv(f: GridFunction, path=None) -> str:
    """Serialize as ``# dim, lo, hi, points`` header rows then one value per line."""
    buf = io.StringIO()
    buf.write("# dim, lo, hi, points\n")
    for lo, hi in f.box:
        buf.write(f"# {f.dim}, {lo!r}, {hi!r}, {f.points}\n")
    for v in f.values:
        buf.write("inf\n" if v == np.inf else f"{float(v)!r}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def from_csv(source, name: str = "") -> GridFunction:
    """Read a grid function written by :func:`to_csv` (path or text)."""
    if "\n" in str(source):
        text = str(source)
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    box, values, points, dim = [], [], None, None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("dim"):
                continue
            d, lo, hi, n = [s.strip() for s in body.split(",")]
            dim, points = int(d), int(n)
            box.append((float(lo), float(hi)))
            continue
        values.append(np.inf if line == "inf" else float(line))
    if dim is None or len(box) != dim:
        raise ValueError("malformed grid-function header")
    return GridFunction(tuple(box), points, np.asarray(values), name)
