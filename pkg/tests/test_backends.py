import os
import subprocess
import sys

import numpy as np
import pytest

from dwellcert import _kernels_py, linalg

compiled = pytest.importorskip("dwellcert._kernels")


@pytest.fixture(scope="module")
def mats():
    rng = np.random.default_rng(17)
    return [rng.normal(size=(n, n)) * s for n in (1, 2, 3, 6, 10) for s in (0.1, 1.0, 8.0)]


def test_expm_agrees(mats):
    for m in mats:
        a, b = compiled.expm(m, 0.7), _kernels_py.expm(m, 0.7)
        assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))


def test_jacobi_agrees(mats):
    for m in mats:
        s = m + m.T
        np.testing.assert_allclose(compiled.jacobi_eig(s), _kernels_py.jacobi_eig(s),
                                   atol=1e-12 * max(1.0, np.max(np.abs(s))))


def test_cholesky_agrees(mats):
    for m in mats:
        s = m @ m.T
        for shift in (0.0, 0.5, np.trace(s)):
            assert compiled.cholesky_ok(s, shift) == _kernels_py.cholesky_ok(s, shift)


def test_eig_moduli_agree(mats):
    for m in mats:
        a = np.sort(compiled.eig_moduli(m))
        b = np.sort(_kernels_py.eig_moduli(m))
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_backend_selection():
    env = dict(os.environ, DWELLCERT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from dwellcert import linalg; print(linalg.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert linalg.BACKEND == "compiled"
