import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from okdroplet import _pykernels, kernels

compiled = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
BACKENDS = [_pykernels] + ([compiled] if compiled is not None else [])
THIRD_PI = math.pi / 3


def _points(seed, n, shift=0.0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 3)) + shift


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_pair_sums_match_direct(be):
    x, y = _points(0, 5000), _points(1, 5000, 0.3)
    inv = 1 / np.linalg.norm(x - y, axis=1)
    s, s2 = be.pair_sums(x, y)
    assert s == pytest.approx(inv.sum(), rel=1e-12)
    assert s2 == pytest.approx((inv * inv).sum(), rel=1e-12)


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_cross_sum_match_direct(be):
    a, b = _points(2, 300), _points(3, 200, 5.0)
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    assert be.cross_sum(a, b, False) == pytest.approx((1 / d).sum(), rel=1e-12)
    d = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    assert be.cross_sum(a, a, True) == pytest.approx((1 / d).sum(), rel=1e-12)


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_pair_sums_shape_mismatch(be):
    with pytest.raises(ValueError):
        be.pair_sums(np.zeros((3, 3)), np.ones((4, 3)))


@needs_compiled
def test_backends_agree_on_sums():
    x, y = _points(4, 20_000), _points(5, 20_000, 0.1)
    for got, want in zip(compiled.pair_sums(x, y), _pykernels.pair_sums(x, y)):
        assert got == pytest.approx(want, rel=1e-13)
    a, b = _points(6, 500), _points(7, 400, 1.0)
    assert compiled.cross_sum(a, b, False) == pytest.approx(_pykernels.cross_sum(a, b, False), rel=1e-13)


@needs_compiled
@given(st.floats(1e-6, THIRD_PI))
def test_log_ratio_bit_identical(b1):
    assert compiled.unit_log_ratio(b1) == _pykernels.unit_log_ratio(b1)


@needs_compiled
@given(st.floats(1e-10, 1.0))
def test_brent_bit_identical(q):
    args = (math.log(q), 1e-6, THIRD_PI, 1e-300, 4 * np.finfo(float).eps, 200)
    if _pykernels.unit_log_ratio(1e-6) - args[0] > 0:
        return
    assert compiled.brent_b1(*args) == _pykernels.brent_b1(*args)


@given(st.floats(1e-8, 1.0))
def test_brent_matches_scipy(q):
    t = math.log(q)
    lo = 1e-6
    if _pykernels.unit_log_ratio(lo) - t > 0:
        return
    root, _, ok = _pykernels.brent_b1(t, lo, THIRD_PI, 1e-300, 4 * np.finfo(float).eps, 200)
    ref = brentq(lambda b: _pykernels.unit_log_ratio(b) - t, lo, THIRD_PI, xtol=1e-300,
                 rtol=4 * np.finfo(float).eps, maxiter=200)
    assert ok
    assert root == ref


def test_equal_volumes_at_third_pi():
    assert _pykernels.unit_log_ratio(THIRD_PI) == pytest.approx(0.0, abs=1e-15)


def test_pure_python_fallback_selected_by_env():
    code = "from okdroplet import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, OKDROPLET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_pure_python_results_match_compiled_pipeline():
    # the double bubble solve goes through the kernels; both backends must give the same area
    code = "from okdroplet import double_bubble_area as a; print(repr(a(1.0, 0.37)), repr(a(2.5, 0.01)))"
    outs = []
    for flag in ("1", "0"):
        env = dict(os.environ, OKDROPLET_PURE_PYTHON=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]


def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["--repeat", "1"])
    out = capsys.readouterr().out
    assert "pair_sums" in out and "brent_b1" in out
