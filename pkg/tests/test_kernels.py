import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tiltlab import kernels
from tiltlab._accel import HAS_NUMBA

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba disabled")
finite = st.floats(-1e3, 1e3, allow_nan=False)


def both(fn, *args):
    return fn(*args, use_numba=False), fn(*args, use_numba=True)


def equal(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.array_equal(np.asarray(p), np.asarray(q)) for p, q in zip(a, b))


@needs_numba
@settings(max_examples=40, deadline=None)
@given(fx=arrays(float, 33, elements=finite), lo=st.floats(-50, 0), hi=st.floats(0.1, 50))
def test_hull_conjugate_backends_agree(fx, lo, hi):
    x = np.linspace(-1.0, 1.0, 33)
    u = np.linspace(lo, hi, 17)
    a, b = both(kernels.hull_conjugate_1d, x, fx, u)
    assert equal(a, b)
    assert np.array_equal(a[0], kernels.brute_conjugate(x[:, None], fx, u[:, None], False)[0])


@needs_numba
def test_hull_conjugate_with_infinite_entries():
    x = np.linspace(-2.0, 2.0, 41)
    fx = np.where(np.abs(x) <= 1, x ** 2, np.inf)
    u = np.linspace(-5, 5, 21)
    a, b = both(kernels.hull_conjugate_1d, x, fx, u)
    assert equal(a, b)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(fx=arrays(float, 25, elements=finite))
def test_brute_conjugate_backends_agree_in_two_dimensions(fx):
    g = np.linspace(-1.0, 1.0, 5)
    x = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    u = x * 3.0
    assert equal(*both(kernels.brute_conjugate, x, fx, u))


@needs_numba
@settings(max_examples=30, deadline=None)
@given(F=arrays(float, (3, 50), elements=finite), G=arrays(float, (4, 50), elements=finite),
       Q=arrays(float, (4, 50), elements=finite), kv=arrays(float, 3, elements=finite))
def test_sweep_backends_agree(F, G, Q, kv):
    a, b = both(kernels.sweep_margins, F, G, Q, kv)
    assert equal(a, b)
    fast = kernels.sweep_margins(F, G, Q, kv, use_numba=True, with_arg=False)
    assert fast[1] is None and np.array_equal(fast[0], a[0])
    fast2 = kernels.sweep_margins(F, G, None, None, use_numba=True, with_arg=False)
    assert np.array_equal(fast2[0], kernels.sweep_margins(F, G, use_numba=False)[0])


def test_sweep_matches_direct_broadcast():
    rng = np.random.default_rng(0)
    F, G = rng.normal(size=(3, 5000)), rng.normal(size=(2, 5000))
    out, arg = kernels.sweep_margins(F, G)
    direct = (F[:, None, :] + G[None, :, :]).min(axis=2)
    assert np.array_equal(out, direct)
    assert np.array_equal(arg, (F[:, None, :] + G[None, :, :]).argmin(axis=2))


def test_sweep_with_infinite_samples_and_no_columns():
    F = np.array([[np.inf, 1.0]])
    G = np.array([[0.0, np.inf]])
    assert kernels.sweep_margins(F, G)[0][0, 0] == np.inf
    out, _ = kernels.sweep_margins(np.zeros((2, 0)), np.zeros((3, 0)))
    assert out.shape == (2, 3) and np.all(np.isinf(out))


@needs_numba
@settings(max_examples=30, deadline=None)
@given(x=arrays(float, 30, elements=finite), v=arrays(float, 30, elements=finite))
def test_pair_monotone_backends_agree(x, v):
    assert equal(*both(kernels.pair_monotone, x, v))


@needs_numba
def test_set_excess_backends_agree():
    pts = np.linspace(-1.0, 1.0, 200)[:, None]
    sets = [np.arange(i, min(i + 5, 200)) for i in range(0, 200, 3)]
    mask = np.abs(pts[:, 0]) < 0.6
    assert equal(*both(kernels.set_excess, pts, sets, mask))


def test_disable_flag_selects_the_numpy_path():
    env = {**os.environ, "TILTLAB_DISABLE_NUMBA": "1"}
    code = "from tiltlab._accel import HAS_NUMBA; print(HAS_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "False"


def test_forcing_numba_when_disabled_raises(monkeypatch):
    monkeypatch.setattr(kernels, "HAS_NUMBA", False)
    with pytest.raises(RuntimeError):
        kernels.pair_monotone(np.zeros(2), np.zeros(2), use_numba=True)
