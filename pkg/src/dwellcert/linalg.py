"""Dense real matrix kernels.

Matrices are plain ``numpy`` float arrays. The heavy lifting is done by the
compiled ``_kernels`` extension when it is importable; otherwise the
pure-Python twin in ``_kernels_py`` is used. Set ``DWELLCERT_PURE_PYTHON=1``
to force the fallback.
"""
import os

import numpy as np

if os.environ.get("DWELLCERT_PURE_PYTHON"):
    from . import _kernels_py as _k
    BACKEND = "python"
else:
    try:
        from . import _kernels as _k
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as _k
        BACKEND = "python"

ConvergenceError = _k.ConvergenceError
MAX_DIM = 10


def as_matrix(m, square=False, name="matrix"):
    a = np.array(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def sym(m):
    """Symmetric part of a square matrix."""
    a = np.asarray(m, dtype=float)
    return 0.5 * (a + a.T)


def expm(m, t=1.0):
    """Matrix exponential ``e^{m t}``.

    Scaling and squaring around a fixed [13/13] Padé approximant; the scaling
    exponent is chosen from the 1-norm of ``m t``.
    """
    a = as_matrix(m, square=True)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    return _k.expm(a, float(t))


def sym_eig(s, vectors=False):
    """Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi.

    With ``vectors=True`` returns ``(w, Q)`` with ``s = Q diag(w) Q^T``.
    """
    a = as_matrix(s, square=True)
    return _k.jacobi_eig(sym(a), bool(vectors))


def is_pd(s, tol=0.0):
    """True iff the Cholesky factorisation of ``s - tol*I`` succeeds."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    a = as_matrix(s, square=True)
    return bool(_k.cholesky_ok(sym(a), float(tol)))


def spectral_radius(m):
    """Largest eigenvalue modulus of a real square matrix.

    Closed form up to 2x2, Hessenberg + shifted QR above. Raises
    :class:`ConvergenceError` if the QR iteration hits its cap.
    """
    a = as_matrix(m, square=True)
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"spectral_radius supports dim <= {MAX_DIM}")
    # the QR deflation test is absolute, so work on a unit-scaled copy
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    return scale * float(max(_k.eig_moduli(a / scale)))


def min_eig(s):
    return float(sym_eig(s)[0])


def max_eig(s):
    return float(sym_eig(s)[-1])
