import importlib
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridid import _kernels_py, kernels

try:
    compiled = importlib.import_module("gridid._kernels")
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def spd(p, rng):
    a = rng.standard_normal((p + 3, p))
    return a.T @ a


def cd_reference(h, g, pen, iters=20000):
    """Proximal gradient on x'Hx - 2g'x + sum pen |x|; slow but independent."""
    step = 1.0 / (2 * np.linalg.eigvalsh(h)[-1])
    x = np.zeros_like(g)
    for _ in range(iters):
        z = x - step * (2 * h @ x - 2 * g)
        x = np.sign(z) * np.maximum(np.abs(z) - step * pen, 0.0)
    return x


@pytest.mark.parametrize("impl", [_kernels_py, pytest.param(compiled, marks=needs_ext)], ids=["python", "cython"])
def test_cd_matches_proximal_gradient(impl):
    rng = np.random.default_rng(0)
    h = spd(8, rng)
    g = rng.standard_normal(8) * 3
    pen = rng.uniform(0, 4, 8)
    x = np.zeros(8)
    hx = h @ x
    impl.cd_weighted_l1(h, g, pen, x, hx, 1e-14, 100_000)
    np.testing.assert_allclose(x, cd_reference(h, g, pen), atol=1e-8)
    np.testing.assert_allclose(hx, h @ x, atol=1e-10)


def test_cd_zero_penalty_solves_linear_system():
    rng = np.random.default_rng(1)
    h = spd(10, rng)
    g = rng.standard_normal(10)
    x = np.zeros(10)
    kernels.cd_weighted_l1(h, g, np.zeros(10), x, h @ x, 1e-15, 200_000)
    np.testing.assert_allclose(x, np.linalg.solve(h, g), rtol=1e-8, atol=1e-10)


@needs_ext
@settings(max_examples=25, deadline=None)
@given(st.integers(1, 15), st.integers(0, 10_000))
def test_backends_agree(p, seed):
    rng = np.random.default_rng(seed)
    h = spd(p, rng)
    g = rng.standard_normal(p)
    pen = rng.uniform(0, 2, p)
    out = []
    for impl in (_kernels_py, compiled):
        x = np.zeros(p)
        hx = h @ x
        sweeps = impl.cd_weighted_l1(h, g, pen, x, hx, 1e-12, 5000)
        out.append((x, sweeps))
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-12, atol=1e-14)
    assert out[0][1] == out[1][1]


@pytest.mark.parametrize("impl", [_kernels_py, pytest.param(compiled, marks=needs_ext)], ids=["python", "cython"])
def test_scatter_add_blocks(impl):
    rng = np.random.default_rng(2)
    blocks = rng.standard_normal((3, 4, 4))
    index = np.array([[0, 1, 2, 3], [2, 3, 4, 5], [5, 4, 1, 0]], dtype=np.intp)
    h = np.zeros((6, 6))
    impl.scatter_add_blocks(h, blocks, index)
    ref = np.zeros((6, 6))
    for k in range(3):
        for a in range(4):
            for b in range(4):
                ref[index[k, a], index[k, b]] += blocks[k, a, b]
    np.testing.assert_allclose(h, ref, atol=1e-14)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    forced = os.environ.get("GRIDID_PURE_PYTHON", "") in ("1", "true", "yes")
    assert kernels.BACKEND == ("cython" if compiled is not None and not forced else "python")
