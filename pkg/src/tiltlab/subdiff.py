"""Subdifferential graphs in R x R, polyline normal cones and second-order checks."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .admissible import AdmissibleFunction, right_derivative
from .certificate import Certificate
from .functions import parse_function
from .gridfn import GridFunction, graded_axis, normalize_box

__all__ = [
    "SetValuedGraph",
    "ConeSet",
    "merge_intervals",
    "interval_distance",
    "convex_subdifferential_1d",
    "subdifferential_graph",
    "graph_from_grid",
    "graph_from_points",
    "polyline_normal_cone",
    "second_subdifferential",
    "eta_psi",
    "check_condition_6_1",
    "UNBOUNDED_PROBE",
]

_EPS = 1e-12
_ON_GRAPH = 1e-9
# relative slack for line cuts: graph nodes cluster down to 1e-11 near focus points
_CUT_TOL = 1e-15
UNBOUNDED_PROBE = 1e6


def merge_intervals(ivs, eps: float = _EPS) -> np.ndarray:
    """Sort and merge closed intervals given as ``(k, 2)`` rows."""
    a = np.asarray(ivs, dtype=float).reshape(-1, 2)
    if a.size == 0:
        return np.zeros((0, 2))
    a = np.sort(a, axis=1)
    a = a[np.lexsort((a[:, 1], a[:, 0]))]
    out = [a[0].copy()]
    for lo, hi in a[1:]:
        if lo <= out[-1][1] + eps:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append(np.array([lo, hi]))
    return np.array(out)


def interval_distance(y, ivs) -> np.ndarray:
    """Distance from each ``y`` to a union of closed intervals (``+inf`` if empty)."""
    y = np.asarray(y, dtype=float)
    ivs = np.asarray(ivs, dtype=float).reshape(-1, 2)
    if ivs.shape[0] == 0:
        return np.full(y.shape, np.inf)
    lo, hi = ivs[:, 0], ivs[:, 1]
    yy = y[..., None]
    with np.errstate(invalid="ignore"):
        d = np.maximum(np.maximum(lo - yy, yy - hi), 0.0)
    return d.min(axis=-1)


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True, eq=False)
class SetValuedGraph:
    """Union of segments and axis-parallel rays in the ``(x, v)`` plane.

    Each row of ``segments`` is ``x0, v0, x1, v1``; an infinite coordinate
    marks a ray. ``resolution = (hx, hv)`` is the sampling error of the
    graph in each coordinate (zero for analytic polylines).
    """

    segments: np.ndarray
    resolution: tuple = (0.0, 0.0)
    metadata: dict = field(default_factory=dict)
    sample_step: Optional[float] = None

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=float).reshape(-1, 4)
        if seg.shape[0] == 0:
            raise ValueError("a graph needs at least one segment")
        if np.any(np.isnan(seg)):
            raise ValueError("segment coordinates must not be NaN")
        for x0, v0, x1, v1 in seg:
            if not (np.isfinite(x0) or np.isfinite(x1)) or not (np.isfinite(v0) or np.isfinite(v1)):
                raise ValueError("segments need one finite endpoint")
            inf_x = not (np.isfinite(x0) and np.isfinite(x1))
            inf_v = not (np.isfinite(v0) and np.isfinite(v1))
            if inf_x and (inf_v or v0 != v1):
                raise ValueError("rays must be axis-parallel")
            if inf_v and x0 != x1:
                raise ValueError("rays must be axis-parallel")
        seg.setflags(write=False)
        object.__setattr__(self, "segments", seg)
        object.__setattr__(self, "_cache", {})

    # ---- geometry ------------------------------------------------------------

    @property
    def bbox(self) -> tuple:
        s = self.segments
        xs = np.concatenate([s[:, 0], s[:, 2]])
        vs = np.concatenate([s[:, 1], s[:, 3]])
        xs, vs = xs[np.isfinite(xs)], vs[np.isfinite(vs)]
        return ((float(xs.min()), float(xs.max())), (float(vs.min()), float(vs.max())))

    def _finite_segments(self, pad: float = 1.0) -> np.ndarray:
        """Segments with rays cut at the bounding box widened by ``pad``."""
        (xl, xh), (vl, vh) = self.bbox
        s = self.segments.copy()
        s[:, 0] = np.clip(s[:, 0], xl - pad, xh + pad)
        s[:, 2] = np.clip(s[:, 2], xl - pad, xh + pad)
        s[:, 1] = np.clip(s[:, 1], vl - pad, vh + pad)
        s[:, 3] = np.clip(s[:, 3], vl - pad, vh + pad)
        return s

    def sample_points(self, step: Optional[float] = None) -> np.ndarray:
        """Segment endpoints plus subdivisions at most ``step`` apart."""
        s = self._finite_segments()
        if step is None:
            step = self.sample_step
        if step is None:
            (xl, xh), (vl, vh) = self.bbox
            step = max(np.hypot(xh - xl, vh - vl), 1e-9) / 400
        pts = []
        for x0, v0, x1, v1 in s:
            n = max(1, int(np.ceil(np.hypot(x1 - x0, v1 - v0) / step)))
            t = np.linspace(0.0, 1.0, n + 1)
            pts.append(np.stack([x0 + t * (x1 - x0), v0 + t * (v1 - v0)], axis=1))
        pts = np.concatenate(pts)
        return np.unique(pts, axis=0)

    def distance_to_graph(self, p) -> float:
        """Euclidean distance from ``p = (x, v)`` to the graph."""
        px, pv = float(p[0]), float(p[1])
        s = self._finite_segments(pad=abs(px) + abs(pv) + 1.0)
        a = s[:, :2]
        b = s[:, 2:]
        d = b - a
        L2 = (d * d).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(L2 > 0, ((px - a[:, 0]) * d[:, 0] + (pv - a[:, 1]) * d[:, 1]) / L2, 0.0)
        t = np.clip(t, 0.0, 1.0)
        q = a + t[:, None] * d
        return float(np.sqrt(((q - [px, pv]) ** 2).sum(axis=1)).min())

    def on_graph(self, p, tol: float = _ON_GRAPH) -> bool:
        return self.distance_to_graph(p) <= tol

    # ---- queries -------------------------------------------------------------

    def _cut(self, c: float, axis: int) -> np.ndarray:
        """Intersections of the line ``coord[axis] = c`` with the graph."""
        key = (axis, c)
        hit_cache = self._cache.setdefault("cuts", {})
        if key in hit_cache:
            return hit_cache[key]
        s = self.segments
        a0, a1 = (s[:, 0], s[:, 2]) if axis == 0 else (s[:, 1], s[:, 3])
        b0, b1 = (s[:, 1], s[:, 3]) if axis == 0 else (s[:, 0], s[:, 2])
        lo, hi = np.minimum(a0, a1), np.maximum(a0, a1)
        tol = _CUT_TOL * abs(c)
        k = np.flatnonzero((lo - tol <= c) & (c <= hi + tol))
        if k.size == 0:
            out = np.zeros((0, 2))
        else:
            span = hi[k] - lo[k]
            flat = span <= tol
            ray = ~np.isfinite(span)
            with np.errstate(invalid="ignore", divide="ignore"):
                t = np.clip((c - a0[k]) / (a1[k] - a0[k]), 0.0, 1.0)
                v = b0[k] + t * (b1[k] - b0[k])
            v = np.where(ray, b0[k], v)
            ivs = np.stack([np.where(flat, np.minimum(b0[k], b1[k]), v),
                            np.where(flat, np.maximum(b0[k], b1[k]), v)], axis=1)
            out = ivs if k.size == 1 else merge_intervals(ivs)
        if len(hit_cache) > 200000:
            hit_cache.clear()
        hit_cache[key] = out
        return out

    def F(self, x: float) -> np.ndarray:
        """``F(x)`` as merged closed intervals ``(k, 2)``."""
        return self._cut(float(x), 0)

    def F_inv(self, v: float) -> np.ndarray:
        """``F^{-1}(v)`` as merged closed intervals ``(k, 2)``."""
        return self._cut(float(v), 1)

    # ---- io ------------------------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("x0,v0,x1,v1\n")
        for row in self.segments:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, **kw) -> "SetValuedGraph":
        if "\n" in str(source):
            text = str(source)
        else:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("x0"):
                continue
            rows.append([float(v) for v in line.split(",")])
        return cls(np.array(rows), **kw)


def _fmt(v: float) -> str:
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def graph_from_points(x, v, **kw) -> SetValuedGraph:
    """Polyline through ``(x[i], v[i])`` in order; degenerate single points allowed."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.size == 1:
        return SetValuedGraph(np.array([[x[0], v[0], x[0], v[0]]]), **kw)
    return SetValuedGraph(np.stack([x[:-1], v[:-1], x[1:], v[1:]], axis=1), **kw)


# ---------------------------------------------------------------------------
# convex subdifferential from grid quotients


def _is_grid_convex(f: GridFunction) -> bool:
    v = f.values
    fin = np.isfinite(v)
    idx = np.flatnonzero(fin)
    if idx.size and np.any(np.diff(idx) != 1):
        return False
    w = v[fin]
    if w.size < 3:
        return True
    second = w[2:] - 2 * w[1:-1] + w[:-2]
    scale = 1e-12 * max(1.0, float(np.abs(w).max()))
    return bool(np.all(second >= -scale))


def convex_subdifferential_1d(f: GridFunction, x) -> tuple:
    """``[a, b]``: sup of left and inf of right difference quotients at node ``x``.

    A side without finite neighbours gives ``-inf`` or ``+inf``.
    """
    if f.dim != 1:
        raise ValueError("convex_subdifferential_1d needs a 1-D grid function")
    i = f.index_of(np.atleast_1d(x))
    if not np.isfinite(f.values[i]):
        raise ValueError("f(x) is infinite")
    if not _is_grid_convex(f):
        raise ValueError("f is not convex on its grid")
    xs, vs = f.axes[0], f.values
    left = np.isfinite(vs[:i])
    right = np.isfinite(vs[i + 1:])
    a = float(np.max((vs[i] - vs[:i][left]) / (xs[i] - xs[:i][left]))) if left.any() else -np.inf
    b = float(np.min((vs[i + 1:][right] - vs[i]) / (xs[i + 1:][right] - xs[i]))) if right.any() else np.inf
    return (a, b)


def graph_from_grid(f: GridFunction, resolution: Optional[tuple] = None) -> SetValuedGraph:
    """Staircase graph of the subdifferential of the piecewise-linear interpolant.

    Vertical pieces sit at the nodes, horizontal pieces carry the chord
    slopes; domain ends inside the box become vertical rays.
    """
    if f.dim != 1 or not _is_grid_convex(f):
        raise ValueError("graph_from_grid needs a convex 1-D grid function")
    xs, vs = f.axes[0], f.values
    idx = np.flatnonzero(np.isfinite(vs))
    x, v = xs[idx], vs[idx]
    h = float(f.spacing[0])
    segs = []
    if x.size == 1:
        segs.append([x[0], -np.inf, x[0], np.inf])
    else:
        q = np.diff(v) / np.diff(x)
        lo_open = idx[0] > 0
        hi_open = idx[-1] < f.points - 1
        if lo_open:
            segs.append([x[0], -np.inf, x[0], q[0]])
        for k in range(q.size):
            segs.append([x[k], q[k], x[k + 1], q[k]])
            if k + 1 < q.size and q[k + 1] > q[k]:
                segs.append([x[k + 1], q[k], x[k + 1], q[k + 1]])
        if hi_open:
            segs.append([x[-1], q[-1], x[-1], np.inf])
    if resolution is None:
        jumps = np.diff(np.diff(v) / np.diff(x)) if x.size > 2 else np.zeros(1)
        resolution = (h, float(np.median(np.abs(jumps))) if jumps.size else 0.0)
    meta = {"source": f.name, "construction": "grid-staircase", "convex": True}
    return SetValuedGraph(np.array(segs, dtype=float), resolution, meta, sample_step=h / 2)


# ---------------------------------------------------------------------------
# analytic catalog graphs


def _piece_nodes(a: float, b: float, points: int, focus: Sequence[float]) -> np.ndarray:
    nodes = [np.linspace(a, b, max(3, points))]
    width = b - a
    for c in focus:
        if a - _EPS <= c <= b + _EPS:
            lv = int(np.ceil(np.log(1e11) / np.log(2.0)))
            steps = width * 0.5 ** np.arange(1, lv + 1)
            nodes.append(c - steps)
            nodes.append(c + steps)
            nodes.append(np.array([c]))
    n = np.unique(np.concatenate(nodes))
    return n[(n >= a) & (n <= b)]


def _refine(nodes: np.ndarray, deriv, tol: float, passes: int = 40) -> np.ndarray:
    for _ in range(passes):
        v = deriv(nodes)
        mid = 0.5 * (nodes[1:] + nodes[:-1])
        vm = deriv(mid)
        with np.errstate(invalid="ignore"):
            bad = np.abs(vm - 0.5 * (v[1:] + v[:-1])) > tol
        bad &= (nodes[1:] - nodes[:-1]) > 1e-13
        if not np.any(bad):
            break
        nodes = np.sort(np.concatenate([nodes, mid[bad]]))
    return nodes


def subdifferential_graph(fid, box, points: int = 2001, focus: Sequence[float] = (),
                          tol: float = 1e-4) -> SetValuedGraph:
    """Polyline graph of the subdifferential of a 1-D catalog function on ``box``.

    Smooth pieces are sampled on ``points`` uniform nodes, refined
    geometrically toward kinks and ``focus`` points, then bisected until the
    chord error is below ``tol``. Kinks become vertical segments and domain
    ends become vertical rays. Nonconvex entries get the gradient graph with
    the convex hull of one-sided slopes at kinks.
    """
    spec = parse_function(fid)
    (lo, hi), = normalize_box(box)
    dlo, dhi = spec.domain
    a, b = max(lo, dlo), min(hi, dhi)
    if not a < b:
        raise ValueError("box does not meet the domain of f")
    kinks = [k for k in spec.kinks if a < k < b]
    breaks = [a] + kinks + [b]
    focus = tuple(focus) + tuple(kinks)
    segs = []

    def deriv(t):
        return np.asarray(spec.dright(t), dtype=float)

    first_v = last_v = None
    for left, right in zip(breaks[:-1], breaks[1:]):
        share = max(3, int(round(points * (right - left) / (b - a))))
        nodes = _piece_nodes(left, right, share, focus + (left, right))
        inner = _refine(nodes[1:-1] if nodes.size > 2 else nodes, deriv, tol)
        xs = np.concatenate([[left], inner[(inner > left) & (inner < right)], [right]])
        vs = deriv(xs)
        vs[0] = float(spec.dright(np.array([left]))[0])
        vs[-1] = float(spec.dleft(np.array([right]))[0])
        # infinite slopes at a kink are covered by its vertical line
        keep = np.isfinite(vs)
        xs, vs = xs[keep], vs[keep]
        if first_v is None:
            first_v = float(vs[0])
        last_v = float(vs[-1])
        segs.append(np.stack([xs[:-1], vs[:-1], xs[1:], vs[1:]], axis=1))
    for k in kinks:
        vl = float(spec.dleft(np.array([k]))[0])
        vr = float(spec.dright(np.array([k]))[0])
        if vr != vl:
            segs.append(np.array([[k, min(vl, vr), k, max(vl, vr)]]))
    if a == dlo and np.isfinite(dlo):
        segs.insert(0, np.array([[a, -np.inf, a, first_v]]))
    if b == dhi and np.isfinite(dhi):
        segs.append(np.array([[b, last_v, b, np.inf]]))
    seg = np.concatenate(segs)
    meta = {
        "function": spec.id,
        "box": [lo, hi],
        "convex": spec.convex,
        "construction": "analytic-polyline",
        "linearization_tol": tol,
        "subdifferential": "convex" if spec.convex else "gradient graph with slope hull at kinks",
    }
    h = (b - a) / (points - 1)
    return SetValuedGraph(seg, (0.0, 0.0), meta, sample_step=h)


# ---------------------------------------------------------------------------
# normal cones and the second subdifferential


@dataclass(frozen=True)
class ConeSet:
    """Finite union of closed cones in R^2.

    ``lines`` holds normals ``n`` of cones ``span{n}``; ``polars`` holds
    lists of directions ``d_i`` of cones ``{n : <n, d_i> <= 0 for all i}``.
    """

    lines: tuple = ()
    polars: tuple = ()

    def contains(self, p, tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        scale = tol * max(1.0, float(np.abs(p).max()))
        for n in self.lines:
            n = np.asarray(n)
            if abs(n[0] * p[1] - n[1] * p[0]) <= scale * max(1.0, np.abs(n).max()):
                return True
        for ds in self.polars:
            if all(float(np.dot(p, d)) <= scale * max(1.0, np.abs(d).max()) for d in ds):
                return True
        return False

    def slice_at(self, height: float) -> np.ndarray:
        """``{z : (z, height) in cone}`` as merged intervals."""
        out = []
        for n in self.lines:
            a, b = float(n[0]), float(n[1])
            if abs(b) > _EPS * max(1.0, abs(a)):
                z = height * a / b
                out.append((z, z))
            elif height == 0:
                out.append((-np.inf, np.inf))
        for ds in self.polars:
            lo, hi = -np.inf, np.inf
            empty = False
            for d in ds:
                # z * d_x + height * d_y <= 0
                dx, dy = float(d[0]), float(d[1])
                c = height * dy
                if abs(dx) <= _EPS * max(1.0, abs(dy)):
                    if c > _EPS * max(1.0, abs(c)):
                        empty = True
                elif dx > 0:
                    hi = min(hi, -c / dx)
                else:
                    lo = max(lo, -c / dx)
            if not empty and lo <= hi + _EPS:
                out.append((lo, max(lo, hi)))
        return merge_intervals(out)


def _unit_directions(g: SetValuedGraph):
    """Per segment: base point, unit direction and length (``inf`` for rays)."""
    if "dirs" in g._cache:
        return g._cache["dirs"]
    seg = g.segments
    a, b = seg[:, :2], seg[:, 2:]
    fin_a = np.isfinite(a).all(axis=1)
    base = np.where(fin_a[:, None], a, b)
    far = np.where(fin_a[:, None], b, a)
    ray = ~np.isfinite(far).all(axis=1)
    with np.errstate(invalid="ignore"):
        d = np.where(ray[:, None], np.where(np.isfinite(far), 0.0, np.sign(far)), far - base)
    length = np.where(ray, np.inf, np.hypot(d[:, 0], d[:, 1]))
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(ray[:, None], d, d / np.where(length > 0, length, 1.0)[:, None])
    out = (base, u, length)
    g._cache["dirs"] = out
    return out


def polyline_normal_cone(g: SetValuedGraph, p) -> ConeSet:
    """Limiting normal cone of the polyline graph at ``p``.

    The union of the normal lines of every segment through ``p`` with the
    polar of the tangent directions at ``p``.
    """
    px, pv = float(p[0]), float(p[1])
    base, u, length = _unit_directions(g)
    rx, rv = px - base[:, 0], pv - base[:, 1]
    t = rx * u[:, 0] + rv * u[:, 1]
    off = np.abs(u[:, 0] * rv - u[:, 1] * rx)
    point = length == 0
    hit = (~point) & (t >= -_ON_GRAPH) & (t <= length + _ON_GRAPH) & (off <= _ON_GRAPH)
    dot_hit = point & (np.hypot(rx, rv) <= _ON_GRAPH)
    if not (hit.any() or dot_hit.any()):
        raise ValueError(f"point {(px, pv)} is not on the graph")
    uh, th, lh = u[hit], t[hit], length[hit]
    lines = {(float(-d[1]) + 0.0, float(d[0]) + 0.0) for d in uh}
    dirs = set()
    for d, tt, L in zip(uh, th, lh):
        if tt > _ON_GRAPH:
            dirs.add((float(-d[0]) + 0.0, float(-d[1]) + 0.0))
        if tt < L - _ON_GRAPH:
            dirs.add((float(d[0]) + 0.0, float(d[1]) + 0.0))
    dirs = tuple(sorted(dirs))
    return ConeSet(tuple(sorted(lines)), (dirs,) if dirs else ())


def second_subdifferential(g: SetValuedGraph, x: float, v: float, h: float) -> np.ndarray:
    """``{z : (z, -h) in N(gph, (x, v))}`` as merged intervals (possibly unbounded)."""
    return polyline_normal_cone(g, (x, v)).slice_at(-float(h))


def eta_psi(g: SetValuedGraph, psi: AdmissibleFunction, x: float, v: float, h: float) -> float:
    """``psi'_+(d(x, F^{-1}(v - h)))``; ``+inf`` when the preimage is empty."""
    d = float(interval_distance(np.array(float(x)), g.F_inv(float(v) - float(h))))
    if not np.isfinite(d):
        return np.inf
    return float(right_derivative(psi, d))


def check_condition_6_1(g: SetValuedGraph, psi: AdmissibleFunction, kappa: float, r: float,
                        center=(0.0, 0.0), h_points: int = 21, h_levels: int = 6,
                        max_samples: int = 161, slack: float = 1e-9) -> Certificate:
    """Sweep ``kappa h^2 eta(x, v)(h) <= z h`` over graph samples near ``center``.

    ``(x, v)`` runs over at most ``max_samples`` graph sample points in
    ``B(x0, r) x B(v0, r)`` (evenly thinned, the center always included),
    ``h`` over a grid of ``B(0, r)`` refined toward 0. Unbounded ``z``-sets
    are probed at ``+-1e6`` and flagged.
    """
    if not (kappa > 0 and r > 0):
        raise ValueError("kappa and r must be positive")
    x0, v0 = float(center[0]), float(center[1])
    if not g.on_graph((x0, v0)):
        raise ValueError("center is not on the graph")
    rr = r * (1 - 1e-9)
    pts = g.sample_points()
    near = pts[(np.abs(pts[:, 0] - x0) < rr) & (np.abs(pts[:, 1] - v0) < rr)]
    if len(near) > max_samples:
        near = near[np.unique(np.linspace(0, len(near) - 1, max_samples).round().astype(int))]
    near = np.unique(np.vstack([near, [[x0, v0]]]), axis=0)
    hs, _ = graded_axis(0.0, rr, h_points, h_levels, 0.25, 9)
    hs = hs[hs != 0]
    worst, wit = np.inf, None
    probes = 0
    checked = 0
    for x, v in near:
        cone = polyline_normal_cone(g, (x, v))
        for h in hs:
            zs = cone.slice_at(-h)
            if zs.shape[0] == 0:
                continue
            eta = eta_psi(g, psi, x, v, h)
            lhs = kappa * h * h * eta
            for lo, hi in zs:
                # z h is linear in z: the worst z is the end that minimises it
                z = lo if h > 0 else hi
                if not np.isfinite(z):
                    z = -UNBOUNDED_PROBE if z < 0 else UNBOUNDED_PROBE
                    probes += 1
                checked += 1
                m = z * h - lhs + slack
                if m < worst:
                    worst = m
                    wit = {"x": float(x), "v": float(v), "h": float(h), "z": float(z),
                           "eta": float(eta)}
    sweep = {"graph_samples": int(len(near)), "h_grid": int(len(hs)), "checked": checked,
             "slack": slack, "unbounded_probe": probes > 0, "probe_count": probes,
             "probe_value": UNBOUNDED_PROBE}
    return Certificate.from_margin("second-order", worst, {"kappa": kappa, "r": r},
                                   wit, sweep)
