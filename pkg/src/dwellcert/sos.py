"""Matrix polynomials in ``(tau, theta)`` and their SOS/Putinar compilation.

A :class:`PolyMatrix` maps monomial exponent tuples to coefficients, which
are either numeric symmetric matrices or :class:`~dwellcert.lmi.AffineExpr`
objects when they depend on decision variables.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg, lmi, sdp

TAU = "tau"
THETA = "theta"


def _is_zero(c):
    if isinstance(c, lmi.AffineExpr):
        co = c.coef
        return not np.any(c.const) and (co.nnz == 0 or not np.any(co.data))
    return not np.any(c)


def monomials(nvars, degree, convention="total"):
    """Exponent tuples in graded lexicographic order.

    ``convention='total'`` bounds the total degree; ``'tau-only'`` bounds the
    degree of each variable separately (box of side ``degree``).
    """
    if nvars == 0:
        return [()]
    if convention == "total":
        out = []
        for d in range(degree + 1):
            for e in itertools.product(range(d + 1), repeat=nvars):
                if sum(e) == d:
                    out.append(e)
        return sorted(out, key=lambda e: (sum(e), tuple(-x for x in e)))
    if convention == "tau-only":
        out = list(itertools.product(range(degree + 1), repeat=nvars))
        return sorted(out, key=lambda e: (sum(e), tuple(-x for x in e)))
    raise ValueError(f"unknown degree convention {convention!r}")


class PolyMatrix:
    """``sum_e C_e v^e`` with symmetric-matrix (or affine) coefficients."""

    def __init__(self, dim, vars, coeffs=None):
        self.dim = dim
        self.vars = tuple(vars)
        self.coeffs = {}
        for e, c in (coeffs or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != len(self.vars) or min(e, default=0) < 0:
                raise ValueError(f"bad exponent {e} for variables {self.vars}")
            if not _is_zero(c):
                self.coeffs[e] = c

    # -- construction helpers -------------------------------------------
    @classmethod
    def constant(cls, c, vars=(TAU,)):
        c = c if isinstance(c, lmi.AffineExpr) else np.asarray(c, dtype=float)
        return cls(c.shape[0], vars, {(0,) * len(vars): c})

    @classmethod
    def scalar(cls, terms, vars):
        """Scalar polynomial from ``{exponent: value}``."""
        return cls(1, vars, {e: np.array([[float(v)]]) for e, v in terms.items()})

    def _like(self, coeffs):
        return PolyMatrix(self.dim, self.vars, coeffs)

    # -- queries -----------------------------------------------------------
    @property
    def degree(self):
        return max((sum(e) for e in self.coeffs), default=0)

    def degree_in(self, var):
        k = self.vars.index(var)
        return max((e[k] for e in self.coeffs), default=0)

    @property
    def is_affine(self):
        return any(isinstance(c, lmi.AffineExpr) for c in self.coeffs.values())

    def __iter__(self):
        return iter(sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0])))

    # -- algebra -----------------------------------------------------------
    def _align(self, other):
        if other.vars != self.vars:
            raise ValueError(f"variable lists differ: {self.vars} vs {other.vars}")
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")

    def __add__(self, other):
        if not isinstance(other, PolyMatrix):
            other = PolyMatrix.constant(other, self.vars)
        self._align(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c
        return self._like(out)

    def __neg__(self):
        return self._like({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, PolyMatrix):
            return self.times_scalar_poly(s)
        return self._like({e: c * s for e, c in self.coeffs.items()})

    __rmul__ = __mul__

    def times_scalar_poly(self, g):
        """Product with a scalar (1x1) polynomial on the same variables."""
        if g.dim != 1 or g.vars != self.vars:
            raise ValueError("expected a scalar polynomial on the same variables")
        out = {}
        for eg, cg in g.coeffs.items():
            s = float(np.asarray(cg).ravel()[0])
            for e, c in self.coeffs.items():
                k = tuple(a + b for a, b in zip(e, eg))
                term = c * s
                out[k] = out[k] + term if k in out else term
        return self._like(out)

    def lmul(self, m):
        """``M Z`` for a constant matrix ``M``."""
        m = np.asarray(m, dtype=float)
        return PolyMatrix(m.shape[0], self.vars, {e: m @ c for e, c in self.coeffs.items()})

    def rmul(self, m):
        m = np.asarray(m, dtype=float)
        return PolyMatrix(m.shape[1], self.vars, {e: c @ m for e, c in self.coeffs.items()})

    def congruence(self, y):
        """``Y^T Z Y``."""
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.dim:
            raise ValueError(f"Y has {y.shape[0]} rows, polynomial has dim {self.dim}")
        return PolyMatrix(y.shape[1], self.vars,
                          {e: lmi.congruence(y, c) if isinstance(c, lmi.AffineExpr)
                           else y.T @ c @ y for e, c in self.coeffs.items()})

    def he(self):
        return self._like({e: lmi.he(c) if isinstance(c, lmi.AffineExpr) else c + c.T
                           for e, c in self.coeffs.items()})

    @property
    def T(self):
        return self._like({e: c.T for e, c in self.coeffs.items()})

    def with_vars(self, vars):
        """Re-express on a superset of variables (new ones get exponent 0)."""
        vars = tuple(vars)
        pos = [vars.index(v) for v in self.vars]
        out = {}
        for e, c in self.coeffs.items():
            k = [0] * len(vars)
            for p, a in zip(pos, e):
                k[p] = a
            out[tuple(k)] = c
        return PolyMatrix(self.dim, vars, out)

    # -- evaluation --------------------------------------------------------
    def numeric(self, x):
        """Numeric polynomial obtained by fixing the decision variables."""
        return self._like({e: c.value(x) if isinstance(c, lmi.AffineExpr) else c
                           for e, c in self.coeffs.items()})

    def __call__(self, *point):
        if len(point) != len(self.vars):
            raise ValueError(f"expected {len(self.vars)} coordinates")
        acc = None
        for e, c in self.coeffs.items():
            w = float(np.prod([p ** a for p, a in zip(point, e)]))
            acc = c * w if acc is None else acc + c * w
        if acc is None:
            return np.zeros((self.dim, self.dim))
        return acc

    def __repr__(self):
        return f"PolyMatrix(dim={self.dim}, vars={self.vars}, terms={len(self.coeffs)}, degree={self.degree})"


def poly_derivative(z, var):
    if var not in z.vars:
        raise ValueError(f"unknown variable {var!r}")
    k = z.vars.index(var)
    out = {}
    for e, c in z.coeffs.items():
        if e[k] == 0:
            continue
        ne = list(e)
        ne[k] -= 1
        out[tuple(ne)] = c * float(e[k])
    return PolyMatrix(z.dim, z.vars, out)


def poly_substitute(z, bindings):
    """Substitute variables by numbers or by other variables.

    Bound variables disappear from the variable list; binding ``tau`` to
    ``'theta'`` merges exponents.
    """
    for v in bindings:
        if v not in z.vars:
            raise ValueError(f"unknown variable {v!r}")
    keep = tuple(v for v in z.vars if v not in bindings)
    out = {}
    for e, c in z.coeffs.items():
        w = 1.0
        ne = dict.fromkeys(keep, 0)
        for v, a in zip(z.vars, e):
            if v in bindings:
                b = bindings[v]
                if isinstance(b, str):
                    if b not in ne:
                        raise ValueError(f"cannot bind {v!r} to {b!r}")
                    ne[b] += a
                else:
                    w *= float(b) ** a
            else:
                ne[v] += a
        k = tuple(ne[v] for v in keep)
        if w == 0.0:
            continue
        term = c * w
        out[k] = out[k] + term if k in out else term
    return PolyMatrix(z.dim, keep, out)


def looping_equality(z, y1, y2, theta=THETA, tau=TAU):
    """Coefficient-wise equalities for ``Y1^T Z(0, θ) Y1 - Y2^T Z(θ, θ) Y2 = 0``.

    ``theta`` is either the name of the second variable of ``z`` (the
    identity must hold for all θ, hence every θ-coefficient vanishes) or a
    number when ``z`` only depends on ``tau``.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape != y2.shape or y1.shape[0] != z.dim:
        raise ValueError(f"selector shapes {y1.shape}, {y2.shape} do not fit dim {z.dim}")
    z0 = poly_substitute(z, {tau: 0.0})
    zt = poly_substitute(z, {tau: theta})
    diff = z0.congruence(y1) - zt.congruence(y2)
    return [c for _, c in diff], diff


def poly_matvar(model, dim, vars, degree, convention="total", name="Z"):
    """Symmetric matrix polynomial with one fresh symmetric matrix variable
    per monomial."""
    coeffs = {}
    for e in monomials(len(vars), degree, convention):
        mv = model.sym(dim, f"{name}{e}")
        coeffs[e] = mv.expr
    return PolyMatrix(dim, vars, coeffs)


def sos_gram(model, dim, vars, degree, name="Q"):
    """Matrix SOS polynomial ``(I ⊗ m)^T Q (I ⊗ m)`` with a fresh Gram
    variable ``Q``; ``m`` holds the monomials of total degree ``<= degree/2``.

    Returns ``(S, Q)``. The caller constrains ``Q >= 0`` (non-strict).
    """
    if degree % 2:
        raise ValueError("SOS degree must be even")
    basis = monomials(len(vars), degree // 2)
    k = len(basis)
    q = model.sym(dim * k, name)
    nv = int(q.index.max()) + 1
    rows = {}
    for a in range(dim):
        for b in range(dim):
            for i, mi in enumerate(basis):
                for j, mj in enumerate(basis):
                    e = tuple(x + y for x, y in zip(mi, mj))
                    rows.setdefault(e, ([], []))
                    rows[e][0].append(a * dim + b)
                    rows[e][1].append(q.index[a * k + i, b * k + j])
    coeffs = {}
    for e, (r, c) in rows.items():
        coef = sp.csr_matrix((np.ones(len(r)), (r, c)), shape=(dim * dim, nv))
        coeffs[e] = lmi.AffineExpr(np.zeros((dim, dim)), coef)
    return PolyMatrix(dim, vars, coeffs), q


@dataclass
class SemialgebraicDomain:
    """``{v : g_i(v) >= 0}`` with scalar polynomial generators."""

    vars: tuple
    generators: list
    # axis-aligned bounding box used for sampling
    box: tuple = ()

    def contains(self, *point, tol=0.0):
        return all(float(g(*point)[0, 0]) >= -tol for g in self.generators)

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        out = []
        while len(out) < count:
            p = lo + (hi - lo) * rng.random(len(self.vars))
            if self.contains(*p):
                out.append(tuple(p))
        return out

    def grid(self, count):
        """Deterministic points of the domain (uniform per axis, filtered)."""
        if len(self.vars) == 1:
            lo, hi = self.box[0]
            return [(v,) for v in np.linspace(lo, hi, count)]
        side = max(2, int(np.ceil(np.sqrt(count * 2))))
        pts = []
        axes = [np.linspace(lo, hi, side) for lo, hi in self.box]
        for p in itertools.product(*axes):
            if self.contains(*p, tol=1e-12):
                pts.append(p)
        return pts


def interval_domain(lo, hi, var=TAU):
    g1 = PolyMatrix.scalar({(0,): -lo, (1,): 1.0}, (var,))
    g2 = PolyMatrix.scalar({(0,): hi, (1,): -1.0}, (var,))
    return SemialgebraicDomain((var,), [g1, g2], ((lo, hi),))


def ranged_domain(t_min, t_max):
    """``{tau >= 0, theta - tau >= 0, (theta - t_min)(t_max - theta) >= 0}``."""
    vars = (TAU, THETA)
    g1 = PolyMatrix.scalar({(1, 0): 1.0}, vars)
    g2 = PolyMatrix.scalar({(0, 1): 1.0, (1, 0): -1.0}, vars)
    g3 = PolyMatrix.scalar({(0, 2): -1.0, (0, 1): t_min + t_max, (0, 0): -t_min * t_max}, vars)
    return SemialgebraicDomain(vars, [g1, g2, g3], ((0.0, t_max), (t_min, t_max)))


def _even_up(d):
    return d + (d % 2)


def _even_down(d):
    return d - (d % 2)


@dataclass
class PutinarCertificate:
    p0: PolyMatrix
    multipliers: list
    grams: list
    lmis: list = field(default_factory=list)
    equalities: list = field(default_factory=list)
    p0_degree: int = 0


def putinar_compile(model, L, domain, mult_degree=None, p0_degree=None, name="P"):
    """Certify ``L(v) <= 0`` on ``domain`` through
    ``-L = P0 + sum_i g_i P_i`` with SOS matrices ``P0, P_i``.

    Gram matrices are registered in ``model`` as non-strict LMIs and the
    coefficient-matching equalities are added to it as well; the returned
    :class:`PutinarCertificate` lists both.
    """
    if L.vars != domain.vars:
        L = L.with_vars(domain.vars)
    if mult_degree is None:
        mult_degree = _even_up(L.degree)
    if mult_degree % 2:
        raise ValueError("multiplier degree must be even")
    gdeg = [g.degree for g in domain.generators]
    auto = _even_up(max([L.degree] + [mult_degree + d for d in gdeg]))
    if p0_degree is None:
        p0_degree = auto
    if p0_degree < L.degree:
        raise ValueError(f"P0 degree {p0_degree} below degree of L ({L.degree})")
    p0_degree = _even_up(p0_degree)
    p0, q0 = sos_gram(model, L.dim, domain.vars, p0_degree, f"{name}0")
    cert = PutinarCertificate(p0, [], [q0], p0_degree=p0_degree)
    rhs = p0
    for i, g in enumerate(domain.generators, start=1):
        d = _even_down(p0_degree - g.degree)
        if d < 0:
            continue
        pi, qi = sos_gram(model, L.dim, domain.vars, d, f"{name}{i}")
        cert.multipliers.append(pi)
        cert.grams.append(qi)
        rhs = rhs + pi.times_scalar_poly(g)
    for q in cert.grams:
        e = q.expr
        model.add_lmi(e, ">>", strict=False, name=q.name)
        cert.lmis.append(e)
    resid = (-L) - rhs
    for _, c in resid:
        ce = lmi.as_expr(c)
        model.add_eq(ce)
        cert.equalities.append(ce)
    return cert


def max_eig_on(poly, points):
    """Largest eigenvalue of a numeric polynomial over sample points."""
    return max(float(linalg.sym_eig(poly(*p))[-1]) for p in points)


@dataclass
class PutinarResult:
    accepted: bool
    status: object
    max_eig: float
    p0: PolyMatrix = None
    multipliers: list = field(default_factory=list)

    def __bool__(self):
        return self.accepted


def check_nonpositive(L, domain, mult_degree=None, samples=100, opts=None):
    """Stand-alone test of ``L <= 0`` on ``domain`` for a numeric ``L``.

    Gram matrices of a Putinar certificate often have no interior (the top
    coefficient of ``P0`` may be forced to vanish), so a ``Marginal`` solve
    is accepted as long as the Grams are PSD to solver precision and ``L``
    sampled at ``samples`` domain points has no eigenvalue above ``1e-6``.
    """
    model = lmi.Model()
    cert = putinar_compile(model, L, domain, mult_degree)
    prob, _ = model.assemble(compact=False)
    sol = sdp.solve(prob, opts)
    worst = max_eig_on(L, domain.sample(samples))
    ok = sol.status in (sdp.Status.FEASIBLE, sdp.Status.MARGINAL) and worst <= 1e-6
    p0 = cert.p0.numeric(sol.x) if ok else None
    mults = [m.numeric(sol.x) for m in cert.multipliers] if ok else []
    return PutinarResult(ok, sol.status, worst, p0, mults)
