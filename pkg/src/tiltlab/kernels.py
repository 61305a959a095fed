"""Hot inner loops, each with a numba path and a pure-numpy path.

The two paths of every kernel perform the same floating-point operations in
the same order, so results agree bit-for-bit; ``tests/test_kernels.py``
checks this by calling both explicitly.
"""

import numpy as np

from ._accel import HAS_NUMBA, jit, jit_fast

# ---------------------------------------------------------------------------
# brute-force conjugate: out[j] = max_i <u_j, x_i> - f_i


@jit
def _brute_conjugate_nb(x, fx, u):
    m = u.shape[0]
    n = x.shape[0]
    d = x.shape[1]
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    for j in range(m):
        best = -np.inf
        bi = -1
        for i in range(n):
            if fx[i] == np.inf:
                continue
            s = u[j, 0] * x[i, 0]
            for k in range(1, d):
                s = s + u[j, k] * x[i, k]
            s = s - fx[i]
            if s > best:
                best = s
                bi = i
        out[j] = best
        arg[j] = bi
    return out, arg


def _brute_conjugate_np(x, fx, u, chunk=256):
    finite = np.flatnonzero(fx != np.inf)
    xs = x[finite]
    fs = fx[finite]
    m = u.shape[0]
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    for start in range(0, m, chunk):
        uu = u[start:start + chunk]
        s = uu[:, 0, None] * xs[None, :, 0]
        for k in range(1, x.shape[1]):
            s = s + uu[:, k, None] * xs[None, :, k]
        s = s - fs[None, :]
        # first index of the max, matching the strict '>' scan
        a = np.argmax(s, axis=1)
        out[start:start + chunk] = s[np.arange(len(uu)), a]
        arg[start:start + chunk] = finite[a]
    return out, arg


def brute_conjugate(x, fx, u, use_numba=None):
    """Return ``(values, argmax)`` of ``max_i <u_j, x_i> - f_i``.

    ``x`` is ``(n, d)``, ``fx`` is ``(n,)`` with ``+inf`` allowed and ``u`` is
    ``(m, d)``. Entries equal to ``+inf`` are skipped.
    """
    x = np.ascontiguousarray(x, dtype=float)
    fx = np.ascontiguousarray(fx, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if _pick(use_numba):
        return _brute_conjugate_nb(x, fx, u)
    return _brute_conjugate_np(x, fx, u)


# ---------------------------------------------------------------------------
# linear-time 1-D conjugate via the lower convex hull


@jit
def _lower_hull_nb(x, fx):
    n = x.shape[0]
    hull = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        if fx[i] == np.inf:
            continue
        while top >= 2:
            a = hull[top - 2]
            b = hull[top - 1]
            # pop b only when it lies strictly above the chord a-i
            lhs = (fx[b] - fx[a]) * (x[i] - x[a])
            rhs = (fx[i] - fx[a]) * (x[b] - x[a])
            if lhs > rhs:
                top -= 1
            else:
                break
        hull[top] = i
        top += 1
    return hull[:top]


@jit
def _hull_scan_nb(x, fx, hull, u):
    m = u.shape[0]
    h = hull.shape[0]
    n = x.shape[0]
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    k = 0
    for j in range(m):
        uj = u[j]
        # advance while the next hull edge is still steeper-below uj
        while k < h - 1:
            a = hull[k]
            b = hull[k + 1]
            if (fx[b] - fx[a]) < uj * (x[b] - x[a]):
                k += 1
            else:
                break
        best = -np.inf
        bi = -1
        lo = k - 2 if k >= 2 else 0
        hi = k + 2 if k + 2 < h else h - 1
        for kk in range(lo, hi + 1):
            c = hull[kk]
            ilo = c - 2 if c >= 2 else 0
            ihi = c + 2 if c + 2 < n else n - 1
            for i in range(ilo, ihi + 1):
                if fx[i] == np.inf:
                    continue
                s = uj * x[i] - fx[i]
                if s > best or (s == best and i < bi):
                    best = s
                    bi = i
        out[j] = best
        arg[j] = bi
    return out, arg


def _lower_hull_np(x, fx):
    hull = []
    for i in np.flatnonzero(fx != np.inf):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (fx[b] - fx[a]) * (x[i] - x[a]) > (fx[i] - fx[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(int(i))
    return np.asarray(hull, dtype=np.int64)


def _hull_scan_np(x, fx, hull, u):
    # slopes of hull edges are nondecreasing; vertex k is optimal for
    # u in [slope_{k-1}, slope_k], located by a vectorized search
    xa, xb = x[hull[:-1]], x[hull[1:]]
    fa, fb = fx[hull[:-1]], fx[hull[1:]]
    n = x.shape[0]
    h = len(hull)
    ks = np.zeros(len(u), dtype=np.int64)
    # same comparison as the scan: edge e is passed iff fb-fa < u*(xb-xa)
    if h > 1:
        passed = (fb - fa)[None, :] < u[:, None] * (xb - xa)[None, :]
        # the scan stops at the first edge that is not passed
        notpassed = ~passed
        first = np.where(notpassed.any(axis=1), notpassed.argmax(axis=1), h - 1)
        ks = first.astype(np.int64)
    offs = np.arange(-2, 3)
    cand_hull = np.clip(ks[:, None] + offs[None, :], 0, h - 1)
    cand = hull[cand_hull][:, :, None] + offs[None, None, :]
    cand = np.clip(cand, 0, n - 1).reshape(len(u), -1)
    fc = fx[cand]
    s = u[:, None] * x[cand] - fc
    s = np.where(fc == np.inf, -np.inf, s)
    # tie-break on smallest index, like the scan
    best = s.max(axis=1)
    is_best = s == best[:, None]
    idx = np.where(is_best, cand, np.iinfo(np.int64).max).min(axis=1)
    return best, idx


def hull_conjugate_1d(x, fx, u, use_numba=None):
    """Linear-time discrete conjugate on a sorted 1-D grid.

    ``u`` must be sorted ascending. Returns ``(values, argmax)`` where the
    argmax is the smallest primal index attaining the maximum.
    """
    x = np.ascontiguousarray(x, dtype=float)
    fx = np.ascontiguousarray(fx, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if _pick(use_numba):
        hull = _lower_hull_nb(x, fx)
        return _hull_scan_nb(x, fx, hull, u)
    hull = _lower_hull_np(x, fx)
    return _hull_scan_np(x, fx, hull, u)


# ---------------------------------------------------------------------------
# (min,+) sweep over a constants grid:
#   margin[i, j] = min_p F[i, p] + G[j, p] + kv[i] * Q[j, p]


_BLOCK = 2048


@jit
def _sweep_nb(F, G, Q, kv):
    # tiled over samples so the F and G columns of a block stay in cache
    nk, P = F.shape
    nt = G.shape[0]
    out = np.full((nk, nt), np.inf)
    arg = np.zeros((nk, nt), dtype=np.int64)
    for p0 in range(0, P, _BLOCK):
        p1 = min(P, p0 + _BLOCK)
        for i in range(nk):
            k = kv[i]
            for j in range(nt):
                best = out[i, j]
                bp = arg[i, j]
                for p in range(p0, p1):
                    s = F[i, p] + G[j, p] + k * Q[j, p]
                    if s < best:
                        best = s
                        bp = p
                out[i, j] = best
                arg[i, j] = bp
    return out, arg


@jit_fast
def _sweep_min_nb(F, G, Q, kv):
    nk, P = F.shape
    nt = G.shape[0]
    out = np.full((nk, nt), np.inf)
    for p0 in range(0, P, _BLOCK):
        p1 = min(P, p0 + _BLOCK)
        for i in range(nk):
            k = kv[i]
            for j in range(nt):
                best = out[i, j]
                for p in range(p0, p1):
                    best = min(best, F[i, p] + G[j, p] + k * Q[j, p])
                out[i, j] = best
    return out


@jit_fast
def _sweep_min2_nb(F, G):
    nk, P = F.shape
    nt = G.shape[0]
    out = np.full((nk, nt), np.inf)
    for p0 in range(0, P, _BLOCK):
        p1 = min(P, p0 + _BLOCK)
        for i in range(nk):
            for j in range(nt):
                best = out[i, j]
                for p in range(p0, p1):
                    best = min(best, F[i, p] + G[j, p])
                out[i, j] = best
    return out


def _sweep_np(F, G, Q, kv):
    nk = F.shape[0]
    nt = G.shape[0]
    out = np.empty((nk, nt))
    arg = np.empty((nk, nt), dtype=np.int64)
    for i in range(nk):
        s = F[i][None, :] + G + kv[i] * Q
        a = np.argmin(s, axis=1)
        out[i] = s[np.arange(nt), a]
        arg[i] = a
    return out, arg


def sweep_margins(F, G, Q=None, kv=None, use_numba=None, with_arg=True):
    """Minimum over samples of ``F[i] + G[j] + kv[i] * Q[j]`` for every (i, j).

    NaN entries must be resolved by the caller; ``+inf`` is a vacuous sample.
    With ``with_arg=False`` the argmin is skipped (returned as ``None``),
    which lets the compiled loop vectorize.
    """
    F = np.ascontiguousarray(F, dtype=float)
    G = np.ascontiguousarray(G, dtype=float)
    if not with_arg and _pick(use_numba) and F.shape[1]:
        if Q is None:
            return _sweep_min2_nb(F, G), None
        Q = np.ascontiguousarray(Q, dtype=float)
        return _sweep_min_nb(F, G, Q, np.ascontiguousarray(kv, dtype=float)), None
    if Q is None:
        Q = np.zeros_like(G)
        kv = np.zeros(F.shape[0])
    Q = np.ascontiguousarray(Q, dtype=float)
    kv = np.ascontiguousarray(kv, dtype=float)
    if F.shape[1] == 0:
        return np.full((F.shape[0], G.shape[0]), np.inf), np.zeros(
            (F.shape[0], G.shape[0]), dtype=np.int64)
    if _pick(use_numba):
        out, arg = _sweep_nb(F, G, Q, kv)
    else:
        out, arg = _sweep_np(F, G, Q, kv)
    return (out, arg) if with_arg else (out, None)


# ---------------------------------------------------------------------------
# monotonicity: min over pairs of <v_i - v_j, x_i - x_j>


@jit
def _pair_monotone_nb(x, v):
    n = x.shape[0]
    best = np.inf
    bi = -1
    bj = -1
    for i in range(n):
        for j in range(i + 1, n):
            s = (v[i] - v[j]) * (x[i] - x[j])
            if s < best:
                best = s
                bi = i
                bj = j
    return best, bi, bj


def _pair_monotone_np(x, v):
    n = x.shape[0]
    best, bi, bj = np.inf, -1, -1
    for i in range(n - 1):
        s = (v[i] - v[i + 1:]) * (x[i] - x[i + 1:])
        k = int(np.argmin(s))
        if s[k] < best:
            best, bi, bj = float(s[k]), i, i + 1 + k
    return best, bi, bj


def pair_monotone(x, v, use_numba=None):
    """Return ``(min_product, i, j)`` over all sample pairs."""
    x = np.ascontiguousarray(x, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if x.shape[0] < 2:
        return np.inf, -1, -1
    if _pick(use_numba):
        b, i, j = _pair_monotone_nb(x, v)
        return float(b), int(i), int(j)
    return _pair_monotone_np(x, v)


# ---------------------------------------------------------------------------
# set excess: D[i, j] = max_{a in A_i, a in mask} d(a, A_j)


@jit
def _set_excess_nb(pts, indptr, idx, mask):
    m = indptr.shape[0] - 1
    d = pts.shape[1]
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            worst = 0.0
            for ai in range(indptr[i], indptr[i + 1]):
                a = idx[ai]
                if not mask[a]:
                    continue
                near = np.inf
                for bi in range(indptr[j], indptr[j + 1]):
                    b = idx[bi]
                    s = 0.0
                    for k in range(d):
                        t = pts[a, k] - pts[b, k]
                        s += t * t
                    if s < near:
                        near = s
                if near > worst:
                    worst = near
            out[i, j] = np.sqrt(worst)
    return out


def _set_excess_np(pts, indptr, idx, mask):
    m = len(indptr) - 1
    lens = np.diff(indptr)
    width = int(lens.max()) if m else 0
    pad = np.full((m, width), -1, dtype=np.int64)
    for j in range(m):
        pad[j, :lens[j]] = idx[indptr[j]:indptr[j + 1]]
    valid = pad >= 0
    out = np.zeros((m, m))
    for i in range(m):
        worst = np.zeros(m)
        for a in idx[indptr[i]:indptr[i + 1]]:
            if not mask[a]:
                continue
            diff = pts[a][None, None, :] - pts[np.where(valid, pad, 0)]
            s = np.zeros(diff.shape[:2])
            for k in range(pts.shape[1]):
                s = s + diff[:, :, k] * diff[:, :, k]
            s = np.where(valid, s, np.inf)
            worst = np.maximum(worst, s.min(axis=1))
        out[i] = np.sqrt(worst)
    return out


def set_excess(pts, sets, mask, use_numba=None):
    """Excess of ``sets[i]`` (restricted to ``mask``) over ``sets[j]``.

    ``sets`` is a list of index arrays into ``pts``; every set must be
    nonempty.
    """
    pts = np.ascontiguousarray(pts, dtype=float)
    lens = np.array([len(s) for s in sets], dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
    idx = (np.concatenate(sets).astype(np.int64) if len(sets)
           else np.zeros(0, dtype=np.int64))
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if _pick(use_numba):
        return _set_excess_nb(pts, indptr, idx, mask)
    return _set_excess_np(pts, indptr, idx, mask)


def _pick(use_numba):
    if use_numba is None:
        return HAS_NUMBA
    if use_numba and not HAS_NUMBA:
        raise RuntimeError("numba path requested but numba is disabled")
    return bool(use_numba)
