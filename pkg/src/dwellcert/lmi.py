"""Affine matrix expressions in scalar decision variables and their
compilation into :class:`~dwellcert.sdp.SdpProblem` blocks.

An :class:`AffineExpr` of shape ``(r, c)`` is ``const + sum_k x_k C_k``. The
coefficients live in one sparse matrix with ``r*c`` rows (row-major
flattening) and one column per variable, which keeps Gram matrices with
thousands of entries cheap to manipulate.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import sdp as _sdp


class AffineExpr:
    __array_ufunc__ = None

    def __init__(self, const, coef=None):
        const = np.array(const, dtype=float)
        if const.ndim == 0:
            const = const.reshape(1, 1)
        self.const = const
        r, c = const.shape
        if coef is None:
            coef = sp.csr_matrix((r * c, 0))
        self.coef = sp.csr_matrix(coef)
        if self.coef.shape[0] != r * c:
            raise ValueError("coefficient rows must equal the number of entries")

    @property
    def shape(self):
        return self.const.shape

    @property
    def dim(self):
        return self.const.shape[0]

    @property
    def nvars(self):
        return self.coef.shape[1]

    def terms(self):
        """``{variable index: coefficient matrix}`` for the variables present."""
        cc = self.coef.tocsc()
        out = {}
        for k in range(cc.shape[1]):
            lo, hi = cc.indptr[k], cc.indptr[k + 1]
            if lo == hi:
                continue
            m = np.zeros(self.const.size)
            m[cc.indices[lo:hi]] = cc.data[lo:hi]
            out[k] = m.reshape(self.shape)
        return out

    def is_constant(self):
        return self.coef.nnz == 0

    def _widen(self, n):
        if self.nvars >= n:
            return self.coef
        return sp.hstack([self.coef, sp.csr_matrix((self.coef.shape[0], n - self.nvars))]).tocsr()

    def __add__(self, other):
        other = as_expr(other, self.shape)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        n = max(self.nvars, other.nvars)
        return AffineExpr(self.const + other.const, self._widen(n) + other._widen(n))

    __radd__ = __add__

    def __neg__(self):
        return AffineExpr(-self.const, -self.coef)

    def __sub__(self, other):
        return self + (-as_expr(other, self.shape))

    def __rsub__(self, other):
        return as_expr(other, self.shape) + (-self)

    def __mul__(self, s):
        if not np.isscalar(s):
            return NotImplemented
        return AffineExpr(self.const * s, self.coef * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    @property
    def T(self):
        r, c = self.shape
        perm = np.arange(r * c).reshape(r, c).T.ravel()
        return AffineExpr(self.const.T, self.coef[perm])

    def __matmul__(self, m):
        m = np.asarray(m, dtype=float)
        r, c = self.shape
        # vec_r(E M) = (I_r kron M^T) vec_r(E)
        op = sp.kron(sp.identity(r), sp.csr_matrix(m.T)).tocsr()
        return AffineExpr(self.const @ m, op @ self.coef)

    def __rmatmul__(self, m):
        m = np.asarray(m, dtype=float)
        r, c = self.shape
        # vec_r(M E) = (M kron I_c) vec_r(E)
        op = sp.kron(sp.csr_matrix(m), sp.identity(c)).tocsr()
        return AffineExpr(m @ self.const, op @ self.coef)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        n = self.nvars
        xv = np.zeros(n)
        xv[:min(n, x.size)] = x[:n]
        return self.const + (self.coef @ xv).reshape(self.shape)

    def is_symmetric(self, tol=1e-12):
        if self.shape[0] != self.shape[1]:
            return False
        d = self - self.T
        return np.max(np.abs(d.const), initial=0.0) <= tol and (
            d.coef.nnz == 0 or np.max(np.abs(d.coef.data)) <= tol)

    def __repr__(self):
        return f"AffineExpr(shape={self.shape}, nvars={self.nvars}, nnz={self.coef.nnz})"


def as_expr(v, shape=None):
    if isinstance(v, AffineExpr):
        return v
    a = np.array(v, dtype=float)
    if a.ndim == 0 and shape is not None:
        a = a * np.ones(shape) if shape != (1, 1) else a.reshape(1, 1)
    return AffineExpr(a)


def zeros(r, c=None):
    return AffineExpr(np.zeros((r, r if c is None else c)))


def trace(e):
    """Scalar (1x1) expression equal to the trace of a square expression."""
    e = as_expr(e)
    r, c = e.shape
    if r != c:
        raise ValueError("trace() needs a square expression")
    rows = np.arange(r) * (c + 1)
    coef = sp.csr_matrix(e.coef[rows].sum(axis=0))
    return AffineExpr(np.trace(e.const).reshape(1, 1), coef)


def scalar_eye(e, n):
    """``e * I_n`` for a 1x1 expression ``e``."""
    e = as_expr(e)
    if e.shape != (1, 1):
        raise ValueError("scalar_eye needs a 1x1 expression")
    rows = np.arange(n) * (n + 1)
    op = sp.csr_matrix((np.ones(n), (rows, np.zeros(n, dtype=int))), shape=(n * n, 1))
    return AffineExpr(e.const[0, 0] * np.eye(n), (op @ e.coef).tocsr())


def entry(e, i, j):
    e = as_expr(e)
    k = i * e.shape[1] + j
    return AffineExpr(e.const[i:i + 1, j:j + 1], e.coef[k:k + 1])


def he(e):
    """``E + E^T``."""
    e = as_expr(e)
    if e.shape[0] != e.shape[1]:
        raise ValueError("he() needs a square expression")
    return e + e.T


def congruence(y, e):
    """``Y^T E Y``."""
    y = np.asarray(y, dtype=float)
    e = as_expr(e)
    if y.shape[0] != e.shape[0] or e.shape[0] != e.shape[1]:
        raise ValueError(f"congruence: Y has {y.shape[0]} rows, E is {e.shape}")
    return y.T @ (e @ y)


def bmat(rows):
    """Block matrix from a nested list of expressions/arrays/None (zero)."""
    heights = []
    for row in rows:
        h = None
        for b in row:
            if b is not None:
                h = as_expr(b).shape[0]
                break
        heights.append(h)
    widths = []
    for j in range(len(rows[0])):
        w = None
        for row in rows:
            if row[j] is not None:
                w = as_expr(row[j]).shape[1]
                break
        widths.append(w)
    if None in heights or None in widths:
        raise ValueError("every block row and column needs at least one sized entry")
    rr = np.concatenate([[0], np.cumsum(heights)])
    cc = np.concatenate([[0], np.cumsum(widths)])
    R, C = int(rr[-1]), int(cc[-1])
    out = AffineExpr(np.zeros((R, C)))
    for i, row in enumerate(rows):
        for j, b in enumerate(row):
            if b is None:
                continue
            b = as_expr(b)
            if b.shape != (heights[i], widths[j]):
                raise ValueError("inconsistent block sizes")
            out = out + _embed(b, (R, C), rr[i], cc[j])
    return out


def _embed(e, shape, r0, c0):
    R, C = shape
    r, c = e.shape
    const = np.zeros(shape)
    const[r0:r0 + r, c0:c0 + c] = e.const
    ii, jj = np.divmod(np.arange(r * c), c)
    target = (ii + r0) * C + (jj + c0)
    sel = sp.csr_matrix((np.ones(r * c), (target, np.arange(r * c))), shape=(R * C, r * c))
    return AffineExpr(const, sel @ e.coef)


def block_diag(*mats):
    n = len(mats)
    rows = [[mats[i] if i == j else None for j in range(n)] for i in range(n)]
    # off-diagonal zeros need sizes; fill them explicitly
    for i in range(n):
        for j in range(n):
            if i != j:
                rows[i][j] = np.zeros((as_expr(mats[i]).shape[0], as_expr(mats[j]).shape[1]))
    return bmat(rows)


@dataclass(frozen=True)
class MatVar:
    """Matrix of decision variables; ``index[i, j]`` is the scalar index of
    entry ``(i, j)`` (shared between ``(i, j)`` and ``(j, i)`` when
    symmetric)."""

    name: str
    index: np.ndarray
    symmetric: bool

    @property
    def dim(self):
        return self.index.shape[0]

    @property
    def expr(self):
        r, c = self.index.shape
        idx = self.index.ravel()
        n = int(idx.max()) + 1
        coef = sp.csr_matrix((np.ones(r * c), (np.arange(r * c), idx)), shape=(r * c, n))
        return AffineExpr(np.zeros((r, c)), coef)

    def value(self, x):
        return np.asarray(x, dtype=float)[self.index]


class Model:
    """Collects variables, LMIs and equalities, then :meth:`assemble` s them."""

    def __init__(self):
        self.nvars = 0
        self.names = []
        self.constraints = []   # (expr, sense, strict, name)
        self.equalities = []
        self.objective = None

    def _new(self, count, name):
        start = self.nvars
        self.nvars += count
        self.names.extend(f"{name}[{k}]" for k in range(count))
        return start

    def sym(self, n, name="S"):
        k = n * (n + 1) // 2
        start = self._new(k, name)
        idx = np.zeros((n, n), dtype=int)
        iu, ju = np.triu_indices(n)
        idx[iu, ju] = start + np.arange(k)
        idx[ju, iu] = start + np.arange(k)
        return MatVar(name, idx, True)

    def full(self, r, c, name="M"):
        start = self._new(r * c, name)
        return MatVar(name, (start + np.arange(r * c)).reshape(r, c), False)

    def scalar(self, name="s"):
        return self.full(1, 1, name)

    def add_lmi(self, expr, sense=">>", strict=True, name=""):
        """``expr >> 0`` (``sense='>>'``) or ``expr << 0`` (``sense='<<'``)."""
        if sense not in (">>", "<<"):
            raise ValueError("sense must be '>>' or '<<'")
        self.constraints.append((as_expr(expr), sense, strict, name))

    def add_eq(self, expr):
        self.equalities.append(as_expr(expr))

    def minimize(self, expr):
        self.objective = as_expr(expr)

    def assemble(self, compact=True):
        return assemble(self.constraints, self.equalities, self.objective,
                        num_vars=self.nvars, names=self.names, compact=compact)


def _sym_rows(e):
    """Flattened entry indices to keep: upper triangle for symmetric
    expressions, everything otherwise."""
    r, c = e.shape
    if r == c and e.is_symmetric():
        iu, ju = np.triu_indices(r)
        return iu * c + ju
    return np.arange(r * c)


def assemble(constraints, equalities=(), objective=None, num_vars=None, names=None,
             compact=True):
    """Compile constraints into an :class:`SdpProblem`.

    ``constraints`` holds ``(expr, sense)``, ``(expr, sense, strict)`` or
    ``(expr, sense, strict, name)`` tuples. Negative-semidefinite constraints
    are negated; matrix equalities become scalar rows (upper triangle when
    symmetric). With ``compact`` unused variables are dropped and reported
    through :mod:`warnings`. Returns ``(problem, index_map)`` where
    ``index_map[k]`` is the compacted column of original variable ``k``
    (``-1`` if dropped).
    """
    cons = []
    for c in constraints:
        e, sense = as_expr(c[0]), c[1]
        strict = c[2] if len(c) > 2 else True
        name = c[3] if len(c) > 3 else ""
        if e.shape[0] != e.shape[1]:
            raise ValueError(f"LMI '{name}' is not square: {e.shape}")
        if not e.is_symmetric(1e-9):
            raise ValueError(f"LMI '{name}' is not symmetric")
        cons.append((e if sense == ">>" else -e, strict, name))
    eqs = [as_expr(e) for e in equalities]
    n = num_vars if num_vars is not None else 0
    for e, _, _ in cons:
        n = max(n, e.nvars)
    for e in eqs:
        n = max(n, e.nvars)
    if objective is not None:
        n = max(n, objective.nvars)

    used = np.zeros(n, dtype=bool)
    for e, _, _ in cons:
        used[:e.nvars] |= np.diff(e.coef.tocsc().indptr) > 0
    for e in eqs:
        used[:e.nvars] |= np.diff(e.coef.tocsc().indptr) > 0
    if compact:
        keep = np.nonzero(used)[0]
        if len(keep) < n:
            warnings.warn(f"{n - len(keep)} unused decision variable(s) dropped", stacklevel=2)
    else:
        keep = np.arange(n)
    index_map = -np.ones(n, dtype=int)
    index_map[keep] = np.arange(len(keep))
    m = len(keep)

    blocks = []
    for e, strict, name in cons:
        d = e.shape[0]
        iu, ju = np.triu_indices(d)
        rows = iu * d + ju
        w = np.where(iu == ju, 1.0, np.sqrt(2.0))
        coef = e._widen(n)[rows][:, keep]
        g = sp.diags(w) @ coef
        blocks.append(_sdp.LmiBlock(0.5 * (e.const + e.const.T), sp.csc_matrix(g), strict, name))

    erows, frows = [], []
    for e in eqs:
        rows = _sym_rows(e)
        erows.append(e._widen(n)[rows][:, keep])
        frows.append(-e.const.ravel()[rows])
    if erows:
        emat = sp.vstack(erows).tocsr()
        fvec = np.concatenate(frows)
        nz = np.diff(emat.indptr) > 0
        if np.any(~nz & (np.abs(fvec) > 1e-12)):
            raise ValueError("equality reduces to a non-zero constant")
        emat, fvec = emat[nz], fvec[nz]
    else:
        emat, fvec = None, None
    c = None
    if objective is not None:
        if objective.shape != (1, 1):
            raise ValueError("objective must be scalar")
        c = objective._widen(n).toarray().ravel()[keep]
    names = tuple(names[k] for k in keep) if names is not None else ()
    return _sdp.SdpProblem(m, blocks, emat, fvec, c, names), index_map
