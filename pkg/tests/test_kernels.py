"""Backend equivalence: the compiled kernels and the numpy fallback must be
bitwise identical, so backend selection can never change pipeline outputs."""

import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from pglee import _pykernels
from pglee import kernels

cython_kernels = pytest.importorskip(
    "pglee._ckernels", reason="compiled extension not built"
)


def random_case(rng, n, k, d):
    points = rng.normal(0, 3, (n, d))
    centers = rng.normal(0, 3, (k, d))
    return points, centers


class TestBitwiseEquivalence:
    def test_pairwise_sqdist_identical(self):
        rng = np.random.default_rng(0)
        for n, k, d in [(1, 1, 1), (7, 3, 5), (64, 10, 16), (200, 38, 32)]:
            points, centers = random_case(rng, n, k, d)
            a = cython_kernels.pairwise_sqdist(points, centers)
            b = _pykernels.pairwise_sqdist(points, centers)
            assert a.shape == (n, k)
            np.testing.assert_array_equal(a, b)

    def test_nearest_center_identical(self):
        rng = np.random.default_rng(1)
        for n, k, d in [(5, 2, 3), (100, 7, 8), (300, 24, 16)]:
            points, centers = random_case(rng, n, k, d)
            a = cython_kernels.nearest_center(points, centers)
            b = _pykernels.nearest_center(points, centers)
            np.testing.assert_array_equal(a, b)

    def test_nearest_center_tie_breaks_low_index(self):
        points = np.zeros((3, 2))
        centers = np.array([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
        for impl in (cython_kernels, _pykernels):
            assert list(impl.nearest_center(points, centers)) == [0, 0, 0]

    def test_backend_tags(self):
        assert cython_kernels.BACKEND == "cython"
        assert _pykernels.BACKEND == "python"


class TestSelection:
    def test_default_prefers_compiled(self):
        if os.environ.get("PGLEE_PURE_PYTHON") == "1":
            pytest.skip("pure-Python mode forced via environment")
        importlib.reload(kernels)
        assert kernels.BACKEND == "cython"

    def test_env_var_forces_python(self):
        code = (
            "import pglee.kernels as k; "
            "assert k.BACKEND == 'python', k.BACKEND"
        )
        subprocess.run(
            [sys.executable, "-c", code],
            check=True,
            env={"PGLEE_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
        )
