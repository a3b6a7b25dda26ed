import os
import subprocess
import sys

import numpy as np
import pytest

import drcbf
from drcbf import _backend, _purepy
from drcbf.barrier import ClassK, ObstacleSpec, make_chain
from drcbf.dynamics import BoxSet, unicycle
from drcbf.margins import reach_margin_bound
from drcbf.reach import propagate

compiled = _backend.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")

MEAS = BoxSet([-0.5, -0.5, 0.0, 0.0], [0.5, 0.5, 0.0, 0.0])
DIST = BoxSet([-0.3, -0.3], [0.3, 0.3])
UBOX = BoxSet([-1.0, -2.0], [1.0, 2.0])


def _random_state(rng):
    return np.array([rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(-np.pi, np.pi), rng.uniform(-0.5, 2.5)])


def test_backend_flag():
    assert drcbf.BACKEND in ("cython", "python")
    assert drcbf.BACKEND == ("cython" if compiled is not None else "python")


def test_env_var_forces_fallback():
    env = dict(os.environ, DRCBF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import drcbf; print(drcbf.BACKEND)"], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_tube_kernels_agree(rng):
    for _ in range(200):
        x = tuple(_random_state(rng))
        u = tuple(rng.uniform(UBOX.lo, UBOX.hi))
        args = (x, tuple(MEAS.lo), tuple(MEAS.hi), u, u, tuple(DIST.lo), tuple(DIST.hi), 0.1, 10)
        for a, b in zip(_purepy.unicycle_tube(*args), compiled.unicycle_tube(*args)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_margin_kernels_agree(rng):
    for _ in range(200):
        x = _random_state(rng)
        lo, hi = x - rng.uniform(0, 1, 4), x + rng.uniform(0, 1, 4)
        args = (tuple(lo), tuple(hi), tuple(x), tuple(UBOX.lo), tuple(UBOX.hi), tuple(DIST.lo), tuple(DIST.hi),
                32.5, 25.0, 5.0, 1.0, 1.0)
        a, b = _purepy.unicycle_margin(*args), compiled.unicycle_margin(*args)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-9)


@needs_compiled
def test_rk4_kernels_agree(rng):
    for _ in range(200):
        x = tuple(_random_state(rng))
        u = tuple(rng.uniform(UBOX.lo, UBOX.hi))
        d = tuple(rng.uniform(DIST.lo, DIST.hi))
        np.testing.assert_allclose(_purepy.unicycle_rk4(x, u, d, 0.1, 4), compiled.unicycle_rk4(x, u, d, 0.1, 4),
                                   rtol=1e-13, atol=1e-13)


def test_kernel_and_generic_tubes_agree(rng):
    sys_ = unicycle()
    for _ in range(50):
        x = _random_state(rng)
        u = rng.uniform(UBOX.lo, UBOX.hi)
        ek, tk = propagate(sys_, x, MEAS, u, DIST, 0.1, 10, use_kernel=True)
        eg, tg = propagate(sys_, x, MEAS, u, DIST, 0.1, 10, use_kernel=False)
        for a, b in ((ek, eg), (tk, tg)):
            np.testing.assert_allclose(a.lo, b.lo, atol=1e-9)
            np.testing.assert_allclose(a.hi, b.hi, atol=1e-9)


def test_kernel_and_generic_margins_agree(rng):
    sys_ = unicycle()
    chain = make_chain("unicycle", ObstacleSpec(32.5, 25.0, 5.0), (ClassK("linear", 1.0), ClassK("linear", 1.0)))
    for _ in range(50):
        x = _random_state(rng)
        _, tube = propagate(sys_, x, MEAS, UBOX, DIST, 0.1, 10)
        mk = reach_margin_bound(chain, tube, x, UBOX, DIST, use_kernel=True)
        mg = reach_margin_bound(chain, tube, x, UBOX, DIST, use_kernel=False)
        assert mk == pytest.approx(mg, rel=1e-9, abs=1e-9)
