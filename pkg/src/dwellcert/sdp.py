"""Small dense semidefinite programs in LMI form.

A problem is a list of blocks ``F0 + sum_i x_i F_i >= 0`` plus linear
equalities ``E x = f`` and a linear objective ``min c^T x``. With an all-zero
objective the problem is a feasibility question and :func:`solve` maximises
the margin ``t`` such that every *strict* block satisfies ``F(x) >= t I``.
Non-strict blocks (Gram matrices of SOS certificates) only need ``F(x) >= 0``.

Internally the affine family of block values is rewritten in kernel form
(block matrices ``S`` subject to a few linear equalities), which keeps the
Schur complement at the size of the codimension of that family. For SOS
programs this is one or two orders of magnitude smaller than the number of
free parameters.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import linalg

STALL_ITERS = 8
REFINE_STEPS = 3


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    MARGINAL = "Marginal"
    NUMERICAL_FAILURE = "NumericalFailure"


_SQRT2 = math.sqrt(2.0)


def svec_dim(d):
    return d * (d + 1) // 2


def _triu(d):
    return np.triu_indices(d)


def svec(m):
    """Upper triangle, row-major, off-diagonals scaled by sqrt(2)."""
    m = np.asarray(m, dtype=float)
    iu, ju = _triu(m.shape[0])
    w = np.where(iu == ju, 1.0, _SQRT2)
    return m[iu, ju] * w


def smat(v, d):
    iu, ju = _triu(d)
    w = np.where(iu == ju, 1.0, 1.0 / _SQRT2)
    m = np.zeros((d, d))
    m[iu, ju] = v * w
    m[ju, iu] = v * w
    return m


@dataclass(frozen=True)
class LmiBlock:
    """One block ``F0 + sum_i x_i F_i``; coefficients are stored as a sparse
    matrix whose column ``i`` is ``svec(F_i)``."""

    f0: np.ndarray
    coeffs: sp.csc_matrix
    strict: bool = True
    name: str = ""

    @property
    def dim(self):
        return self.f0.shape[0]

    @classmethod
    def from_matrices(cls, f0, mats, num_vars, strict=True, name=""):
        f0 = linalg.sym(linalg.as_matrix(f0, square=True))
        d = f0.shape[0]
        rows, cols, vals = [], [], []
        for i, fi in mats.items():
            v = svec(linalg.sym(fi))
            nz = np.nonzero(v)[0]
            rows.extend(nz)
            cols.extend([i] * len(nz))
            vals.extend(v[nz])
        g = sp.csc_matrix((vals, (rows, cols)), shape=(svec_dim(d), num_vars))
        return cls(f0, g, strict, name)

    def coefficient(self, i):
        return smat(self.coeffs[:, i].toarray().ravel(), self.dim)

    def evaluate(self, x):
        v = svec(self.f0) + self.coeffs @ np.asarray(x, dtype=float)
        return smat(v, self.dim)


@dataclass(frozen=True)
class SdpProblem:
    num_vars: int
    blocks: tuple
    eq_matrix: sp.csr_matrix = None
    eq_rhs: np.ndarray = None
    objective: np.ndarray = None
    var_names: tuple = ()

    def __post_init__(self):
        m = self.num_vars
        blocks = tuple(self.blocks)
        for b in blocks:
            if b.coeffs.shape[1] != m:
                raise ValueError("block coefficient width differs from num_vars")
            if not np.all(np.isfinite(b.f0)) or not np.all(np.isfinite(b.coeffs.data)):
                raise ValueError("non-finite block data")
        object.__setattr__(self, "blocks", blocks)
        e = sp.csr_matrix((0, m)) if self.eq_matrix is None else sp.csr_matrix(self.eq_matrix)
        f = np.zeros(e.shape[0]) if self.eq_rhs is None else np.asarray(self.eq_rhs, dtype=float)
        if e.shape[1] != m or f.shape != (e.shape[0],):
            raise ValueError("equality data has inconsistent shape")
        object.__setattr__(self, "eq_matrix", e)
        object.__setattr__(self, "eq_rhs", f)
        c = np.zeros(m) if self.objective is None else np.asarray(self.objective, dtype=float)
        if c.shape != (m,):
            raise ValueError("objective has wrong length")
        object.__setattr__(self, "objective", c)

    @property
    def is_feasibility(self):
        return not np.any(self.objective)

    def scaled(self, s):
        """Copy with every block's data multiplied by ``s``."""
        blocks = [LmiBlock(b.f0 * s, b.coeffs * s, b.strict, b.name) for b in self.blocks]
        return SdpProblem(self.num_vars, blocks, self.eq_matrix, self.eq_rhs,
                          self.objective, self.var_names)


@dataclass
class SolverOptions:
    feas_tol: float = 1e-7
    gap_tol: float = 1e-9
    infeas_tol: float = 1e-9
    max_iter: int = 200
    min_step: float = 1e-12
    # accept a stalled run whose best iterate has max(gap, pinf, dinf) below this
    near_tol: float = 1e-6
    # feasibility runs stop at the first verified iterate whose margin exceeds this
    early_margin: float = 1e-5
    margin_cap: float = 1e-2
    # slack allowed on non-strict blocks and equalities of a certificate
    psd_tol: float = 1e-7
    verbose: bool = False


@dataclass
class SdpSolution:
    status: Status
    x: np.ndarray
    margin: float
    iterations: int
    t: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status is Status.FEASIBLE


def verify(p, x):
    """A-posteriori margin of ``x``: smallest eigenvalue over strict blocks
    (over all blocks if none is strict).

    Pure evaluation; the equality residual and the worst non-strict block are
    available through :func:`verify_report`.
    """
    return verify_report(p, x)["margin"]


def verify_report(p, x):
    x = np.asarray(x, dtype=float)
    strict, loose = [], []
    for b in p.blocks:
        v = b.evaluate(x)
        lo = float(linalg.sym_eig(v)[0])
        if b.strict:
            strict.append(lo)
        else:
            # non-strict blocks are judged relative to their own magnitude
            loose.append(lo / max(1.0, float(np.max(np.abs(v)))))
    margin = min(strict) if strict else (min(loose) if loose else float("inf"))
    eq = p.eq_matrix @ x - p.eq_rhs if p.eq_matrix.shape[0] else np.zeros(0)
    return {
        "margin": margin,
        "nonstrict_min": min(loose) if loose else float("inf"),
        "eq_residual": float(np.max(np.abs(eq))) if eq.size else 0.0,
    }


# ---------------------------------------------------------------------------
# kernel-form reduction


@dataclass
class _Reduced:
    dims: list
    offsets: np.ndarray
    a: np.ndarray          # m' x D, orthonormal rows
    b: np.ndarray
    c: np.ndarray          # objective in svec coordinates
    recover: callable
    nvars: int


def _reduce(p, feasibility, cap):
    m = p.num_vars
    blocks = list(p.blocks)
    nw = m + 1 if feasibility else m
    cols = []
    g0 = []
    dims = []
    for b in blocks:
        g = b.coeffs
        if feasibility:
            tcol = -svec(np.eye(b.dim)) if b.strict else np.zeros(svec_dim(b.dim))
            g = sp.hstack([g, sp.csc_matrix(tcol.reshape(-1, 1))])
        cols.append(g)
        g0.append(svec(b.f0))
        dims.append(b.dim)
    if feasibility:
        tcol = np.zeros((1, nw))
        tcol[0, m] = -1.0
        cols.append(sp.csc_matrix(tcol))
        g0.append(np.array([cap]))
        dims.append(1)
    g = sp.vstack(cols).tocsc()
    g0 = np.concatenate(g0)
    nrow = g.shape[0]
    e = p.eq_matrix
    if feasibility:
        e = sp.hstack([e, sp.csr_matrix((e.shape[0], 1))])
    e = sp.csc_matrix(e)
    f = p.eq_rhs
    c = np.zeros(nw)
    if feasibility:
        c[m] = -1.0
    else:
        c[:m] = p.objective

    # variables that are a single entry of one block and appear in no other row
    gr = g.tocsr()
    row_nnz = np.diff(gr.indptr)
    col_nnz = np.diff(g.indptr)
    direct_row = {}
    for i in range(nw):
        if feasibility and i == m:
            continue
        if col_nnz[i] != 1:
            continue
        r = g.indices[g.indptr[i]]
        if row_nnz[r] == 1 and r not in direct_row:
            direct_row[r] = i
    d_rows = np.array(sorted(direct_row), dtype=int)
    d_vars = np.array([direct_row[r] for r in d_rows], dtype=int)
    d_coef = np.array([g.data[g.indptr[i]] for i in d_vars], dtype=float)
    is_direct = np.zeros(nw, dtype=bool)
    is_direct[d_vars] = True
    f_vars = np.nonzero(~is_direct)[0]
    is_drow = np.zeros(nrow, dtype=bool)
    is_drow[d_rows] = True
    c_rows = np.nonzero(~is_drow)[0]

    # B w_F = K s - k0
    gcf = gr[c_rows][:, f_vars].toarray()
    ef = e[:, f_vars].toarray()
    ed = e[:, d_vars].toarray() / d_coef if d_vars.size else np.zeros((e.shape[0], 0))
    bmat = np.vstack([gcf, ef])
    nc, nq = len(c_rows), e.shape[0]
    k = np.zeros((nc + nq, nrow))
    k[np.arange(nc), c_rows] = 1.0
    if d_vars.size:
        k[nc:, d_rows] = -ed
    k0 = np.concatenate([g0[c_rows], -f - ed @ g0[d_rows] if d_vars.size else -f])
    if bmat.shape[1]:
        u, sv, vt = np.linalg.svd(bmat, full_matrices=True)
        tol = max(bmat.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
        r = int(np.sum(sv > max(tol, 1e-12)))
    else:
        u = np.eye(bmat.shape[0])
        sv = np.zeros(0)
        vt = np.zeros((0, 0))
        r = 0
    u1, u2 = u[:, :r], u[:, r:]
    v1 = vt[:r].T
    pinv = v1 / sv[:r] @ u1.T if r else np.zeros((len(f_vars), bmat.shape[0]))
    a = u2.T @ k
    bb = u2.T @ k0
    # drop dependent kernel rows; inconsistent rows mean infeasible equalities
    inconsistent = False
    if a.shape[0]:
        ua, sa, vat = np.linalg.svd(a, full_matrices=False)
        ra = int(np.sum(sa > max(a.shape) * np.finfo(float).eps * max(sa[0], 1.0) + 1e-13))
        proj = ua.T @ bb
        if ra < a.shape[0] and np.linalg.norm(proj[ra:]) > 1e-8 * (1 + np.linalg.norm(bb)):
            inconsistent = True
        a = vat[:ra]
        bb = proj[:ra] / sa[:ra]
    if len(f_vars) and bmat.shape[1] > r:
        null = vt[r:]
        cf = c[f_vars]
        if np.linalg.norm(null @ cf) > 1e-9 * (1 + np.linalg.norm(cf)):
            return None

    # objective in svec coordinates
    cf = c[f_vars]
    cs = (cf @ pinv) @ k
    if d_vars.size:
        cs[d_rows] += c[d_vars] / d_coef

    def recover(s):
        w = np.zeros(nw)
        w[f_vars] = pinv @ (k @ s - k0)
        if d_vars.size:
            w[d_vars] = (s[d_rows] - g0[d_rows]) / d_coef
        return w

    offsets = np.concatenate([[0], np.cumsum([svec_dim(d) for d in dims])])
    red = _Reduced(dims, offsets, a, bb, cs, recover, nw)
    red.c_w = c
    red.inconsistent = inconsistent
    return red


# ---------------------------------------------------------------------------
# primal-dual interior point on  min <C,X>  s.t. <A_i,X> = b_i,  X >= 0


def _split(v, red):
    return [smat(v[red.offsets[j]:red.offsets[j + 1]], d) for j, d in enumerate(red.dims)]


def _join(mats):
    return np.concatenate([svec(m) for m in mats])


def _max_step(x, dx):
    """Largest alpha with x + alpha dx >= 0 (x positive definite)."""
    try:
        lo = sla.cholesky(x, lower=True)
    except sla.LinAlgError:
        return 0.0
    w = sla.solve_triangular(lo, dx, lower=True)
    w = sla.solve_triangular(lo, w.T, lower=True)
    lmin = sla.eigvalsh(0.5 * (w + w.T))[0]
    return np.inf if lmin >= 0 else -1.0 / lmin


def _interior_point(red, opts, monitor=None):
    dims = red.dims
    nb = len(dims)
    a, b, cvec = red.a, red.b, red.c
    m = a.shape[0]
    n_tot = sum(dims)
    amats = []
    for j, d in enumerate(dims):
        sl = a[:, red.offsets[j]:red.offsets[j + 1]]
        amats.append(np.stack([smat(row, d) for row in sl]) if m else np.zeros((0, d, d)))
    cm = _split(cvec, red)

    normb = np.linalg.norm(b)
    normc = np.linalg.norm(cvec)
    scale = max(10.0, math.sqrt(n_tot), normb * math.sqrt(n_tot), normc)
    xs = [scale * np.eye(d) for d in dims]
    zs = [scale * np.eye(d) for d in dims]
    y = np.zeros(m)

    def a_op(mats):
        out = np.zeros(m)
        for j in range(nb):
            out += np.einsum("kij,ij->k", amats[j], mats[j])
        return out

    def at_op(v):
        return [np.einsum("k,kij->ij", v, amats[j]) for j in range(nb)]

    info = {"reason": "max_iter"}
    best = (np.inf, None)
    since_best = 0
    it = 0
    for it in range(1, opts.max_iter + 1):
        aty = at_op(y)
        rd = [cm[j] - aty[j] - zs[j] for j in range(nb)]
        rp = b - a_op(xs)
        mu = sum(np.vdot(xs[j], zs[j]) for j in range(nb)) / n_tot
        pobj = sum(np.vdot(cm[j], xs[j]) for j in range(nb))
        dobj = b @ y
        pinf = np.linalg.norm(rp) / (1 + normb)
        dinf = math.sqrt(sum(np.vdot(r, r) for r in rd)) / (1 + normc)
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if opts.verbose:
            print(f"{it:3d} pobj {pobj:+.8e} dobj {dobj:+.8e} gap {gap:.1e} "
                  f"pinf {pinf:.1e} dinf {dinf:.1e} mu {mu:.1e}")
        if gap < opts.gap_tol and pinf < opts.infeas_tol and dinf < opts.infeas_tol:
            info = {"reason": "optimal"}
            best = (0.0, None)
            break
        if monitor is not None:
            reason = monitor(xs, pobj, dobj, pinf, dinf)
            if reason:
                info = {"reason": reason}
                best = (0.0, None)
                break
        merit = max(gap, pinf, dinf)
        if merit < 0.5 * best[0]:
            best = (merit, ([x.copy() for x in xs], y.copy(), it,
                            dict(pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf, gap=gap)))
            since_best = 0
        else:
            since_best += 1
            if since_best >= STALL_ITERS:
                info = {"reason": "stalled"}
                break
        # certificates of infeasibility
        if dobj > 0:
            crd = math.sqrt(sum(np.vdot(cm[j] - rd[j], cm[j] - rd[j]) for j in range(nb)))
            if crd / dobj < 1e-8 and dobj > 1e6:
                info = {"reason": "primal_infeasible"}
                break
        if pobj < 0:
            if np.linalg.norm(b - rp) / -pobj < 1e-8 and -pobj > 1e6:
                info = {"reason": "dual_infeasible"}
                break

        try:
            zinv = [sla.cho_solve(sla.cho_factor(z), np.eye(z.shape[0])) for z in zs]
        except sla.LinAlgError:
            info = {"reason": "lost_positivity"}
            break
        schur = np.zeros((m, m))
        for j in range(nb):
            if m == 0:
                break
            t = np.matmul(np.matmul(xs[j], amats[j]), zinv[j])
            schur += amats[j].reshape(m, -1) @ t.reshape(m, -1).T
        schur = 0.5 * (schur + schur.T)
        try:
            fac = sla.cho_factor(schur)
            solve_m = lambda r: sla.cho_solve(fac, r)
        except sla.LinAlgError:
            reg = 1e-14 * max(1.0, np.max(np.abs(np.diag(schur))))
            try:
                fac = sla.cho_factor(schur + reg * np.eye(m))
                solve_m = lambda r: sla.cho_solve(fac, r)
            except sla.LinAlgError:
                lu = sla.lu_factor(schur)
                solve_m = lambda r: sla.lu_solve(lu, r)

        xrz = [xs[j] @ rd[j] @ zinv[j] for j in range(nb)]

        def direction(sigma, corr):
            rhs = b - sigma * mu * a_op(zinv) + a_op(xrz)
            if corr is not None:
                rhs = rhs + a_op(corr)
            dy = solve_m(rhs) if m else np.zeros(0)
            best_res = np.inf
            for step in range(REFINE_STEPS + 1):
                atdy = at_op(dy)
                dz_try = [rd[j] - atdy[j] for j in range(nb)]
                dx_try = []
                for j in range(nb):
                    g = xs[j] @ dz_try[j] @ zinv[j]
                    if corr is not None:
                        g = g + corr[j]
                    dx_try.append(sigma * mu * zinv[j] - xs[j] - 0.5 * (g + g.T))
                # iterative refinement of dy against the exact operator A(dx) = rp
                res = rp - a_op(dx_try) if m else np.zeros(0)
                nres = np.linalg.norm(res)
                if nres < best_res:
                    best_res, dx, dy_ok, dz = nres, dx_try, dy, dz_try
                if nres <= 1e-12 * (1 + normb) or step == REFINE_STEPS:
                    break
                dy = dy + solve_m(res)
            dy = dy_ok
            return dx, dy, dz

        def steps(dx, dz):
            ap = min([_max_step(xs[j], dx[j]) for j in range(nb)] + [np.inf])
            ad = min([_max_step(zs[j], dz[j]) for j in range(nb)] + [np.inf])
            return ap, ad

        dx, dy, dz = direction(0.0, None)
        ap, ad = steps(dx, dz)
        ap1, ad1 = min(1.0, ap), min(1.0, ad)
        mu_aff = sum(np.vdot(xs[j] + ap1 * dx[j], zs[j] + ad1 * dz[j]) for j in range(nb)) / n_tot
        expon = max(1.0, 3.0 * min(ap1, ad1) ** 2)
        sigma = min(1.0, max(0.0, mu_aff / mu) ** expon)
        corr = [dx[j] @ dz[j] @ zinv[j] for j in range(nb)]
        dx, dy, dz = direction(sigma, corr)
        ap, ad = steps(dx, dz)
        gamma = 0.9 + 0.09 * min(ap1, ad1)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        if max(ap, ad) < opts.min_step:
            info = {"reason": "stalled"}
            break
        xs = [xs[j] + ap * dx[j] for j in range(nb)]
        y = y + ad * dy
        zs = [zs[j] + ad * dz[j] for j in range(nb)]
        for j in range(nb):
            xs[j] = 0.5 * (xs[j] + xs[j].T)
            zs[j] = 0.5 * (zs[j] + zs[j].T)
    stats = dict(pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf, gap=gap)
    if info["reason"] != "optimal" and best[1] is not None:
        # ill-conditioning near the solution can undo progress; fall back to
        # the most accurate iterate seen
        xs, y, _, stats = best[1]
        if best[0] < opts.near_tol and info["reason"] in ("stalled", "max_iter",
                                                          "lost_positivity"):
            info = {"reason": "near_optimal"}
    info.update({k: float(v) for k, v in stats.items()})
    info["iterations"] = it
    return _join(xs), y, it, info


def solve(p, opts=None):
    """Solve an :class:`SdpProblem`.

    Feasibility problems (zero objective) maximise the margin ``t`` of the
    strict blocks, capped at ``opts.margin_cap``. They stop early as soon as
    an iterate yields a verified point (``Feasible``) or the dual bound shows
    ``t < -feas_tol`` (``Infeasible``). Otherwise the classification uses the
    a-posteriori margin of the returned point: ``Feasible`` above
    ``feas_tol``, ``Infeasible`` below ``-feas_tol``, ``Marginal`` in between.
    """
    opts = opts or SolverOptions()
    feas = p.is_feasibility
    m = p.num_vars
    try:
        red = _reduce(p, feas, opts.margin_cap)
    except np.linalg.LinAlgError as exc:
        return SdpSolution(Status.NUMERICAL_FAILURE, np.zeros(m), -np.inf, 0,
                           info={"reason": f"reduction failed: {exc}"})
    if red is None:
        return SdpSolution(Status.NUMERICAL_FAILURE, np.zeros(m), -np.inf, 0,
                           info={"reason": "objective unbounded along the equality null space"})
    if red.inconsistent:
        return SdpSolution(Status.INFEASIBLE, np.zeros(m), -np.inf, 0,
                           info={"reason": "inconsistent_equalities"})
    eq_pinv = None
    eq_tol = 1e-8 * (1 + float(np.max(np.abs(p.eq_rhs), initial=0.0)))
    if p.eq_matrix.shape[0]:
        eq_pinv = np.linalg.pinv(p.eq_matrix.toarray())

    def finish(svals):
        w = red.recover(svals)
        x = w[:m]
        if eq_pinv is not None:
            # restore the equalities exactly; the correction is at solver precision
            x = x - eq_pinv @ (p.eq_matrix @ x - p.eq_rhs)
        return x, w, verify_report(p, x)

    def accepted(rep):
        return (rep["margin"] > opts.feas_tol and rep["nonstrict_min"] >= -opts.psd_tol
                and rep["eq_residual"] <= eq_tol)

    found = {}
    monitor = None
    if feas:
        c0 = float(red.c_w @ red.recover(np.zeros(red.offsets[-1])))

        def monitor(xs, pobj, dobj, pinf, dinf):
            if dinf < opts.infeas_tol and -(dobj + c0) < -opts.feas_tol:
                found["t_upper"] = -(dobj + c0)
                return "dual_bound"
            if pinf < 1e-6 and -(pobj + c0) > opts.early_margin:
                x, w, rep = finish(_join(xs))
                if accepted(rep):
                    found.update(x=x, w=w, rep=rep)
                    return "verified_iterate"
            return None

    s, y, it, info = _interior_point(red, opts, monitor)
    reason = info["reason"]
    if reason == "primal_infeasible":
        return SdpSolution(Status.INFEASIBLE, np.zeros(m), -np.inf, it, info=info)
    if reason == "verified_iterate":
        x, w, rep = found["x"], found["w"], found["rep"]
    else:
        x, w, rep = finish(s)
    t = float(w[m]) if feas else float("nan")
    margin = rep["margin"]
    info.update(rep)
    if reason == "dual_bound":
        t = found["t_upper"]
        return SdpSolution(Status.INFEASIBLE, x, t, it, t, info)
    if reason == "dual_infeasible" and not feas:
        return SdpSolution(Status.NUMERICAL_FAILURE, x, margin, it, t, info)
    converged = reason in ("optimal", "near_optimal", "verified_iterate")
    if accepted(rep):
        status = Status.FEASIBLE
    elif not converged:
        status = Status.NUMERICAL_FAILURE
    elif feas and t < -opts.feas_tol:
        status = Status.INFEASIBLE
    else:
        status = Status.MARGINAL
    return SdpSolution(status, x, margin, it, t, info)


def write_sdpa(p, path, comment="dwellcert problem"):
    """Dump a problem in SDPA sparse format.

    The SDPA convention is ``min c^T x`` s.t. ``sum_i F_i x_i - F_0 >= 0``.
    Feasibility problems get an extra last variable ``t`` (minimise ``-t``)
    entering strict blocks as ``-t I``. Equalities become a diagonal block
    with the two inequalities ``E x - f >= 0`` and ``f - E x >= 0``.
    """
    feas = p.is_feasibility
    m = p.num_vars + (1 if feas else 0)
    c = np.zeros(m)
    if feas:
        c[-1] = -1.0
    else:
        c[:] = p.objective
    structs = [b.dim for b in p.blocks]
    entries = []  # (matno, blkno, i, j, value)
    for k, blk in enumerate(p.blocks, start=1):
        d = blk.dim
        iu, ju = _triu(d)
        w = np.where(iu == ju, 1.0, 1.0 / _SQRT2)
        for r, (i, j) in enumerate(zip(iu, ju)):
            if blk.f0[i, j] != 0.0:
                entries.append((0, k, i + 1, j + 1, -blk.f0[i, j]))
        g = blk.coeffs.tocoo()
        for r, var, v in zip(g.row, g.col, g.data):
            entries.append((var + 1, k, iu[r] + 1, ju[r] + 1, v * w[r]))
        if feas and blk.strict:
            for i in range(d):
                entries.append((m, k, i + 1, i + 1, -1.0))
    q = p.eq_matrix.shape[0]
    if q:
        k = len(p.blocks) + 1
        structs.append(-2 * q)
        e = p.eq_matrix.tocoo()
        for r, var, v in zip(e.row, e.col, e.data):
            entries.append((var + 1, k, r + 1, r + 1, v))
            entries.append((var + 1, k, q + r + 1, q + r + 1, -v))
        for r, fr in enumerate(p.eq_rhs):
            if fr != 0.0:
                entries.append((0, k, r + 1, r + 1, fr))
                entries.append((0, k, q + r + 1, q + r + 1, -fr))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    with open(path, "w") as fh:
        fh.write(f'"{comment}\n')
        fh.write(f"{m}\n{len(structs)}\n")
        fh.write(" ".join(str(s) for s in structs) + "\n")
        fh.write(" ".join(repr(float(v)) for v in c) + "\n")
        for e in entries:
            fh.write(f"{e[0]} {e[1]} {e[2]} {e[3]} {float(e[4])!r}\n")


def read_sdpa(path):
    """Parse an SDPA sparse file into ``(c, {matno: {blkno: dense}}, structs)``."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and ln[0] not in '"*']
    m = int(lines[0].split()[0])
    nblk = int(lines[1].split()[0])
    structs = [int(s) for s in lines[2].replace(",", " ").replace("{", " ").replace("}", " ").split()[:nblk]]
    c = np.array([float(v) for v in lines[3].replace(",", " ").split()[:m]])
    mats = {}
    for ln in lines[4:]:
        k, blk, i, j, v = ln.split()
        k, blk, i, j = int(k), int(blk), int(i) - 1, int(j) - 1
        d = abs(structs[blk - 1])
        mk = mats.setdefault(k, {}).setdefault(blk, np.zeros((d, d)))
        mk[i, j] = mk[j, i] = float(v)
    return c, mats, structs
