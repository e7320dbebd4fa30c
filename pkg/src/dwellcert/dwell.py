"""Dwell-time analysis of linear impulsive systems.

Two families of tests live here:

* the exponential-based conditions (a single LMI in ``P`` built from
  ``e^{A T}``), used as an oracle and for periodic/gridded comparisons;
* the exponential-free looped-functional conditions, compiled to an SDP
  through matrix SOS with a polynomial ``Z``. These extend verbatim to
  polytopic ``(A, J)``.

All SDPs normalise ``trace(P) = n`` and maximise a common margin ``t`` with
``P >= tI``, ``eps >= t`` and (where present) the flow condition
``±(A^T P + P A) >= tI``. A check succeeds when that margin exceeds the
solver's feasibility tolerance.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg, lmi, sdp, sos
from .sos import TAU, THETA

RANGED, MINIMAL, MAXIMAL, PERIODIC = "ranged", "min", "max", "periodic"

METHODS = ("Lemma1", "Lemma2", "Lemma3", "Thm1", "Thm2", "Thm3", "Thm4")


class BracketError(ValueError):
    """Bisection endpoints do not straddle the feasibility boundary."""


@dataclass(frozen=True)
class ImpulsiveSystem:
    flow_vertices: tuple
    jump_vertices: tuple
    name: str = ""

    def __post_init__(self):
        fv = tuple(linalg.as_matrix(a, square=True, name="A") for a in self.flow_vertices)
        jv = tuple(linalg.as_matrix(j, square=True, name="J") for j in self.jump_vertices)
        if not fv or not jv:
            raise ValueError("vertex lists must be non-empty")
        n = fv[0].shape[0]
        if any(a.shape != (n, n) for a in fv + jv):
            raise ValueError("all vertices must be n x n with a common n")
        object.__setattr__(self, "flow_vertices", fv)
        object.__setattr__(self, "jump_vertices", jv)

    @classmethod
    def nominal(cls, a, j, name=""):
        return cls((a,), (j,), name)

    @property
    def n(self):
        return self.flow_vertices[0].shape[0]

    @property
    def is_nominal(self):
        return len(self.flow_vertices) == 1 and len(self.jump_vertices) == 1

    @property
    def A(self):
        self._need_nominal()
        return self.flow_vertices[0]

    @property
    def J(self):
        self._need_nominal()
        return self.jump_vertices[0]

    def _need_nominal(self):
        if not self.is_nominal:
            raise ValueError("operation needs a nominal (single-vertex) system")

    def combination(self, wa, wj):
        a = sum(w * m for w, m in zip(wa, self.flow_vertices))
        j = sum(w * m for w, m in zip(wj, self.jump_vertices))
        return a, j

    def random_members(self, count, seed=0):
        """``count`` random convex combinations (flat Dirichlet weights)."""
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            wa = rng.dirichlet(np.ones(len(self.flow_vertices)))
            wj = rng.dirichlet(np.ones(len(self.jump_vertices)))
            out.append(self.combination(wa, wj))
        return out


@dataclass(frozen=True)
class DwellSpec:
    mode: str
    t_min: float
    t_max: float

    def __post_init__(self):
        m, lo, hi = self.mode, self.t_min, self.t_max
        if m == RANGED and not (0 < lo <= hi < math.inf):
            raise ValueError("ranged dwell-time needs 0 < T_min <= T_max < inf")
        if m == MINIMAL and not (lo > 0 and hi == math.inf):
            raise ValueError("minimal dwell-time needs T_min > 0 and T_max = inf")
        if m == MAXIMAL and not (lo == 0 and 0 < hi < math.inf):
            raise ValueError("maximal dwell-time needs T_min = 0 and 0 < T_max < inf")
        if m == PERIODIC and not (0 < lo == hi < math.inf):
            raise ValueError("periodic dwell-time needs T_min = T_max > 0")
        if m not in (RANGED, MINIMAL, MAXIMAL, PERIODIC):
            raise ValueError(f"unknown mode {m!r}")

    @classmethod
    def ranged(cls, t_min, t_max):
        return cls(RANGED, float(t_min), float(t_max))

    @classmethod
    def minimal(cls, t_bar):
        return cls(MINIMAL, float(t_bar), math.inf)

    @classmethod
    def maximal(cls, t_bar):
        return cls(MAXIMAL, 0.0, float(t_bar))

    @classmethod
    def periodic(cls, t):
        return cls(PERIODIC, float(t), float(t))

    def admits(self, gap, tol=1e-12):
        return self.t_min - tol <= gap <= self.t_max + tol and gap > 0

    def check_window(self, horizon=5.0):
        """Finite window over which the exponential condition is sampled."""
        if self.mode == MINIMAL:
            return self.t_min, self.t_min + horizon
        if self.mode == MAXIMAL:
            return self.t_max / 200.0, self.t_max
        return self.t_min, self.t_max


@dataclass
class DwellCertificate:
    P: np.ndarray
    eps: float
    Z: list
    method: str
    margin: float
    degree: int
    spec: DwellSpec
    vars: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def V(self):
        return lambda x: float(np.asarray(x) @ self.P @ np.asarray(x))


@dataclass
class CheckResult:
    """Outcome of one dwell-time test; truthy iff a certificate was found."""

    certificate: Optional[DwellCertificate]
    outcome: str
    margin: float = float("nan")
    solution: Optional[sdp.SdpSolution] = None

    def __bool__(self):
        return self.certificate is not None


def _selectors(n, j):
    i, o = np.eye(n), np.zeros((n, n))
    y1 = np.block([[j, o], [i, o], [o, i]])
    y2 = np.block([[o, i], [i, o], [o, i]])
    return y1, y2


def selectors(n, j):
    """Looping selector matrices ``(Y1, Y2)`` for jump matrix ``j``."""
    return _selectors(n, np.asarray(j, dtype=float))


def chebyshev_grid(lo, hi, count):
    """Chebyshev-Lobatto points on ``[lo, hi]`` (endpoints included)."""
    if count < 2:
        raise ValueError("grid needs at least two points")
    k = np.arange(count)
    x = np.cos(np.pi * k / (count - 1))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x


def transition(a, j, theta):
    """``e^{A θ} J``: state map over one inter-impulse interval."""
    return linalg.expm(a, theta) @ j


def lemma_lhs(a, j, p, theta):
    m = transition(a, j, theta)
    return m.T @ p @ m - p


# ---------------------------------------------------------------------------
# exponential-based conditions


def _base_model(n):
    model = lmi.Model()
    pv = model.sym(n, "P")
    model.add_lmi(pv.expr, ">>", strict=True, name="P")
    model.add_eq(lmi.trace(pv.expr) - float(n))
    return model, pv


def _flow_lmi(model, pv, a, sign, name):
    """``sign*(A^T P + P A) >> t I``; sign=+1 anti-Hurwitz, -1 Hurwitz."""
    e = a.T @ pv.expr + pv.expr @ a
    model.add_lmi(e * float(sign), ">>", strict=True, name=name)


def _solve(model, opts):
    with np.errstate(all="ignore"):
        prob, imap = model.assemble(compact=False)
    sol = sdp.solve(prob, opts)
    return prob, imap, sol


def _matrix_lemma(sys, thetas, flow_sign, opts, pairs=None):
    """SDP in P: ``P - M^T P M >> tI`` for every listed transition M."""
    n = sys.n
    model, pv = _base_model(n)
    if flow_sign:
        for k, a in enumerate(sys.flow_vertices):
            _flow_lmi(model, pv, a, flow_sign, f"flow{k}")
    pairs = pairs if pairs is not None else [(a, j) for a in sys.flow_vertices
                                             for j in sys.jump_vertices]
    for th in thetas:
        for k, (a, j) in enumerate(pairs):
            m = transition(a, j, th)
            # positive rescaling keeps huge e^{A θ} from swamping the P block
            w = 1.0 / max(1.0, np.linalg.norm(m, 2) ** 2)
            e = (pv.expr - m.T @ (pv.expr @ m)) * w
            model.add_lmi(e, ">>", strict=True, name=f"jump{k}@{th:.6g}")
    prob, imap, sol = _solve(model, opts)
    p = linalg.sym(pv.value(sol.x))
    return sol, p


def lemma_ranged_check(sys, t_min, t_max, grid_n=20, verify_factor=10, opts=None):
    """Gridded exponential condition over ``[t_min, t_max]``.

    The LMI is imposed at ``grid_n`` Chebyshev points; the candidate ``P`` is
    then re-checked on a uniform grid ``verify_factor`` times finer and
    rejected if the strict decrease fails anywhere on it.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    sys._need_nominal()
    opts = opts or sdp.SolverOptions()
    spec = DwellSpec.ranged(t_min, t_max)
    sol, p = _matrix_lemma(sys, chebyshev_grid(t_min, t_max, grid_n), 0, opts)
    if not sol.feasible:
        return CheckResult(None, sol.status.value.lower(), sol.margin, sol)
    fine = np.linspace(t_min, t_max, verify_factor * grid_n)
    worst = max(linalg.max_eig(lemma_lhs(sys.A, sys.J, p, th)) for th in fine)
    if not worst < 0:
        return CheckResult(None, "rejected", -worst, sol)
    cert = DwellCertificate(p, 0.0, [], "Lemma1", sol.margin, 0, spec,
                            info={"fine_grid_max_eig": worst})
    return CheckResult(cert, "certified", sol.margin, sol)


def _lemma_two_point(sys, t_bar, flow_sign, method, spec, opts):
    sys._need_nominal()
    opts = opts or sdp.SolverOptions()
    sol, p = _matrix_lemma(sys, [t_bar], flow_sign, opts)
    if not sol.feasible:
        return CheckResult(None, sol.status.value.lower(), sol.margin, sol)
    cert = DwellCertificate(p, 0.0, [], method, sol.margin, 0, spec)
    return CheckResult(cert, "certified", sol.margin, sol)


def lemma_min_dwell_check(sys, t_bar, opts=None):
    """``A^T P + P A < 0`` and ``J^T e^{A^T T} P e^{A T} J - P < 0`` at ``T = t_bar``."""
    return _lemma_two_point(sys, t_bar, -1, "Lemma2", DwellSpec.minimal(t_bar), opts)


def lemma_max_dwell_check(sys, t_bar, opts=None):
    """Mirror of :func:`lemma_min_dwell_check` with ``A^T P + P A > 0``."""
    return _lemma_two_point(sys, t_bar, +1, "Lemma3", DwellSpec.maximal(t_bar), opts)


def lemma_robust_max_gridded(sys, t_bar, n_random=50, seed=0, opts=None):
    """Maximal dwell-time exponential condition for a polytopic system,
    imposed at every vertex pair plus ``n_random`` random members."""
    opts = opts or sdp.SolverOptions()
    pairs = [(a, j) for a in sys.flow_vertices for j in sys.jump_vertices]
    pairs += sys.random_members(n_random, seed)
    sol, p = _matrix_lemma(sys, [t_bar], +1, opts, pairs=pairs)
    if not sol.feasible:
        return CheckResult(None, sol.status.value.lower(), sol.margin, sol)
    cert = DwellCertificate(p, 0.0, [], "Lemma3", sol.margin, 0, DwellSpec.maximal(t_bar),
                            info={"members": len(pairs)})
    return CheckResult(cert, "certified", sol.margin, sol)


# ---------------------------------------------------------------------------
# looped-functional (exponential-free) conditions


def _lift(a, n):
    """``blockdiag(A, 0, 0)`` of size 3n."""
    out = np.zeros((3 * n, 3 * n))
    out[:n, :n] = a
    return out


def _psi_blocks(n, pv, epsv, a, j):
    """Return the flow and jump parts of Ψ as 3n x 3n expressions."""
    z = np.zeros((n, n))
    flow = a.T @ pv.expr + pv.expr @ a
    jump = j.T @ (pv.expr @ j) - pv.expr + lmi.scalar_eye(epsv.expr, n)
    return lmi.block_diag(flow, z, z), lmi.block_diag(z, jump, z)


@dataclass
class SosOptions:
    mult_degree: Optional[int] = None
    convention: str = "total"
    solver: sdp.SolverOptions = field(default_factory=sdp.SolverOptions)
    eps_floor: float = 1e-6
    loop_tol: float = 1e-8


def _sos_condition(sys, spec, degree, options):
    """Assemble and solve the looped-functional SDP; works for nominal and
    polytopic systems alike (one Z per jump vertex)."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    n = sys.n
    model, pv = _base_model(n)
    epsv = model.scalar("eps")
    model.add_lmi(epsv.expr, ">>", strict=True, name="eps")

    bivariate = spec.mode == RANGED
    if bivariate:
        vars_ = (TAU, THETA)
        domain = sos.ranged_domain(spec.t_min, spec.t_max)
        scale = 1.0
    else:
        # univariate in s = tau / T on [0, 1]; T = the single checked period
        vars_ = (TAU,)
        t_bar = spec.t_min if spec.mode in (MINIMAL, PERIODIC) else spec.t_max
        domain = sos.interval_domain(0.0, 1.0)
        scale = t_bar
    flow_sign = {MINIMAL: -1, MAXIMAL: +1}.get(spec.mode, 0)
    if flow_sign:
        for k, a in enumerate(sys.flow_vertices):
            _flow_lmi(model, pv, a, flow_sign, f"flow{k}")

    # strict slack on the SOS inequality itself: -L >= s I on the domain
    slack = model.scalar("sos_margin")
    model.add_lmi(slack.expr, ">>", strict=True, name="sos_margin")
    lift_slack = sos.PolyMatrix(3 * n, vars_, {(0,) * len(vars_): lmi.scalar_eye(slack.expr, 3 * n)})

    zs = []
    for i, j in enumerate(sys.jump_vertices):
        z = sos.poly_matvar(model, 3 * n, vars_, degree, options.convention, name=f"Z{i}_")
        zs.append(z)
        y1, y2 = _selectors(n, j)
        eqs, _ = sos.looping_equality(z, y1, y2, theta=THETA if bivariate else 1.0)
        for e in eqs:
            model.add_eq(e)
        for k, a in enumerate(sys.flow_vertices):
            flow3, jump3 = _psi_blocks(n, pv, epsv, a, j)
            abar = _lift(a, n)
            he = z.lmul(abar.T).he()
            dz = sos.poly_derivative(z, TAU)
            if bivariate:
                psi = sos.PolyMatrix(3 * n, vars_, {(0, 1): flow3, (0, 0): jump3})
                L = psi + he + dz
            else:
                psi = sos.PolyMatrix(3 * n, vars_, {(0,): flow3 * scale + jump3})
                L = psi + he + dz * (1.0 / scale)
            sos.putinar_compile(model, L + lift_slack, domain, options.mult_degree,
                                name=f"S{i}{k}_")
    prob, imap, sol = _solve(model, options.solver)
    x = sol.x
    full = np.zeros(model.nvars)
    full[imap >= 0] = x[imap[imap >= 0]]
    p = linalg.sym(pv.value(full))
    eps = float(epsv.value(full)[0, 0])
    znum = []
    for z in zs:
        zn = z.numeric(full)
        if not bivariate:
            # back to tau coordinates: Z(tau) = Z~(tau / T)
            zn = sos.PolyMatrix(zn.dim, zn.vars,
                                {e: c / scale ** e[0] for e, c in zn.coeffs.items()})
        znum.append(zn)
    return sol, p, eps, znum, prob


def _looping_residual(z, j, theta_values, bivariate, t_bar=None):
    n = z.dim // 3
    y1, y2 = _selectors(n, j)
    worst = 0.0
    zscale = 1.0 + max((np.max(np.abs(c)) for c in z.coeffs.values()), default=0.0)
    for th in theta_values:
        if bivariate:
            r = y1.T @ z(0.0, th) @ y1 - y2.T @ z(th, th) @ y2
        else:
            r = y1.T @ z(0.0) @ y1 - y2.T @ z(t_bar) @ y2
        worst = max(worst, float(np.max(np.abs(r))) / zscale)
    return worst


def _sos_check(sys, spec, degree, method, options):
    options = options or SosOptions()
    sol, p, eps, zs, prob = _sos_condition(sys, spec, degree, options)
    if not sol.feasible:
        return CheckResult(None, sol.status.value.lower(), sol.margin, sol)
    if not linalg.is_pd(p) or eps < options.eps_floor:
        return CheckResult(None, "rejected", sol.margin, sol)
    bivariate = spec.mode == RANGED
    if bivariate:
        ths = np.linspace(spec.t_min, spec.t_max, 50)
        t_bar = None
    else:
        t_bar = spec.t_min if spec.mode == MINIMAL else spec.t_max
        ths = [t_bar]
    loop = max(_looping_residual(z, j, ths, bivariate, t_bar)
               for z, j in zip(zs, sys.jump_vertices))
    if loop > options.loop_tol:
        return CheckResult(None, "rejected", sol.margin, sol)
    cert = DwellCertificate(p, eps, zs, method, sol.margin, degree, spec,
                            vars=zs[0].vars if zs else (),
                            info={"looping_residual": loop, "iterations": sol.iterations,
                                  "num_vars": prob.num_vars})
    return CheckResult(cert, "certified", sol.margin, sol)


def thm_ranged_check(sys, t_min, t_max, degree, options=None):
    """Looped-functional test for ranged dwell-time ``[t_min, t_max]`` with a
    bivariate ``Z(tau, theta)`` of the given degree."""
    sys._need_nominal()
    return _sos_check(sys, DwellSpec.ranged(t_min, t_max), degree, "Thm1", options)


def thm_min_dwell_check(sys, t_bar, degree, options=None):
    sys._need_nominal()
    return _sos_check(sys, DwellSpec.minimal(t_bar), degree, "Thm2", options)


def thm_max_dwell_check(sys, t_bar, degree, options=None):
    sys._need_nominal()
    return _sos_check(sys, DwellSpec.maximal(t_bar), degree, "Thm3", options)


def thm_robust_check(sys, spec, degree, options=None):
    """Polytopic version: one ``Z_i`` per jump vertex, the flow/jump LMI for
    every vertex pair, a common ``P`` and ``eps``. ``spec.mode`` chooses the
    side conditions (``max``: every ``A_j`` anti-Hurwitz w.r.t. ``P``;
    ``min``: Hurwitz)."""
    if spec.mode == PERIODIC:
        spec = DwellSpec.ranged(spec.t_min, spec.t_max)
    return _sos_check(sys, spec, degree, "Thm4", options)


# ---------------------------------------------------------------------------
# searches


@dataclass
class BisectionResult:
    value: float
    certificate: Optional[DwellCertificate]
    steps: int
    history: list = field(default_factory=list)


def bisect_dwell(check, lo, hi, tol=1e-4):
    """Locate the boundary of a monotone feasibility predicate.

    ``check(T)`` returns something truthy (typically a :class:`CheckResult`)
    when ``T`` is certified. Exactly one endpoint must be certified; the
    returned value is the certified-side endpoint of the final bracket.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not lo < hi:
        raise BracketError(f"invalid bracket [{lo}, {hi}]")
    r_lo, r_hi = check(lo), check(hi)
    history = [(lo, bool(r_lo)), (hi, bool(r_hi))]
    if bool(r_lo) == bool(r_hi):
        state = "certified" if r_lo else "not certified"
        raise BracketError(f"both endpoints {state} on [{lo}, {hi}]")
    good_is_hi = bool(r_hi)
    good, bad = (hi, lo) if good_is_hi else (lo, hi)
    best = r_hi if good_is_hi else r_lo
    steps = 0
    while abs(good - bad) > tol:
        mid = 0.5 * (good + bad)
        r = check(mid)
        history.append((mid, bool(r)))
        steps += 1
        if r:
            good, best = mid, r
        else:
            bad = mid
    cert = getattr(best, "certificate", None)
    return BisectionResult(good, cert, steps, history)


def min_dwell_boundary(check, lo, hi, tol=1e-4):
    """Smallest certified ``T`` in ``[lo, hi]`` for a minimal dwell-time test."""
    return bisect_dwell(check, lo, hi, tol)


def max_dwell_boundary(check, lo, hi, tol=1e-4):
    return bisect_dwell(check, lo, hi, tol)


def ranged_boundaries(sys, degree, anchor, lo, hi, tol=1e-4, options=None):
    """Independent searches for ``T_min`` (with ``T_max = anchor``) and
    ``T_max`` (with ``T_min = anchor``)."""
    left = bisect_dwell(lambda t: thm_ranged_check(sys, min(t, anchor), anchor, degree, options),
                        lo, anchor, tol)
    right = bisect_dwell(lambda t: thm_ranged_check(sys, anchor, max(t, anchor), degree, options),
                         anchor, hi, tol)
    return left, right


def lemma_ranged_boundaries(sys, anchor, lo, hi, tol=1e-4, grid_n=20):
    left = bisect_dwell(lambda t: lemma_ranged_check(sys, min(t, anchor), anchor, grid_n),
                        lo, anchor, tol)
    right = bisect_dwell(lambda t: lemma_ranged_check(sys, anchor, max(t, anchor), grid_n),
                         anchor, hi, tol)
    return left, right


def periodic_radius(sys, t):
    return linalg.spectral_radius(transition(sys.A, sys.J, t))


def periodic_scan(sys, t_lo, t_hi, samples=200, tol=1e-10):
    """Stability of periodic impulses ``T`` in ``[t_lo, t_hi]``.

    Returns maximal intervals ``((a, b), stable)`` on which the spectral
    radius of ``e^{A T} J`` stays on one side of 1; each switch point is
    refined by bisection to ``tol``.
    """
    sys._need_nominal()
    if samples < 2:
        raise ValueError("samples must be >= 2")
    ts = np.linspace(t_lo, t_hi, samples)
    stable = [periodic_radius(sys, t) < 1.0 for t in ts]
    cuts = []
    for k in range(samples - 1):
        if stable[k] != stable[k + 1]:
            a, b = ts[k], ts[k + 1]
            sa = stable[k]
            while b - a > tol:
                mid = 0.5 * (a + b)
                if (periodic_radius(sys, mid) < 1.0) == sa:
                    a = mid
                else:
                    b = mid
            cuts.append(0.5 * (a + b))
    edges = [t_lo] + cuts + [t_hi]
    out = []
    for k in range(len(edges) - 1):
        mid = 0.5 * (edges[k] + edges[k + 1])
        out.append(((edges[k], edges[k + 1]), periodic_radius(sys, mid) < 1.0))
    return out


# ---------------------------------------------------------------------------
# a-posteriori checks


def soundness_check(cert, sys, samples=200, horizon=5.0, n_members=50, seed=0):
    """Largest eigenvalue of ``J^T e^{A^T θ} P e^{A θ} J - P`` over the
    certificate's dwell range; negative means the exponential condition holds
    with the certificate's ``P``.

    Polytopic systems are sampled at the vertices plus ``n_members`` random
    members (``samples`` is then split between members and θ values)."""
    lo, hi = cert.spec.check_window(horizon)
    if sys.is_nominal:
        members = [(sys.A, sys.J)]
        thetas = np.linspace(lo, hi, samples)
    else:
        members = [(a, j) for a in sys.flow_vertices for j in sys.jump_vertices]
        members += sys.random_members(n_members, seed)
        thetas = np.linspace(lo, hi, max(2, samples // 4))
    worst = -np.inf
    for a, j in members:
        for th in thetas:
            worst = max(worst, linalg.max_eig(lemma_lhs(a, j, cert.P, th)))
    return worst


def flow_condition_eig(cert, sys):
    """Smallest eigenvalue of ``±(A^T P + P A)`` over flow vertices (sign by mode)."""
    sign = {MINIMAL: -1.0, MAXIMAL: 1.0}.get(cert.spec.mode)
    if sign is None:
        return None
    return min(linalg.min_eig(sign * (a.T @ cert.P + cert.P @ a)) for a in sys.flow_vertices)


def sos_inequality_max_eig(cert, sys, points=100):
    """Largest eigenvalue of the looped-functional LMI left-hand side over
    ``points`` domain samples (should be <= ~0)."""
    n = sys.n
    spec = cert.spec
    worst = -np.inf
    for z, j in zip(cert.Z, sys.jump_vertices):
        dz = sos.poly_derivative(z, TAU)
        for a in sys.flow_vertices:
            flow = a.T @ cert.P + cert.P @ a
            jump = j.T @ cert.P @ j - cert.P + cert.eps * np.eye(n)
            abar = _lift(a, n)
            if spec.mode == RANGED:
                dom = sos.ranged_domain(spec.t_min, spec.t_max)
                pts = dom.sample(points, seed=1)
                for tau, th in pts:
                    psi = np.zeros((3 * n, 3 * n))
                    psi[:n, :n] = th * flow
                    psi[n:2 * n, n:2 * n] = jump
                    zz = z(tau, th)
                    lhs = psi + abar.T @ zz + zz.T @ abar + dz(tau, th)
                    worst = max(worst, linalg.max_eig(lhs))
            else:
                t_bar = spec.t_min if spec.mode == MINIMAL else spec.t_max
                psi = np.zeros((3 * n, 3 * n))
                psi[:n, :n] = t_bar * flow
                psi[n:2 * n, n:2 * n] = jump
                for tau in np.linspace(0.0, t_bar, points):
                    zz = z(tau)
                    lhs = psi + abar.T @ zz + zz.T @ abar + dz(tau)
                    worst = max(worst, linalg.max_eig(lhs))
    return worst


# ---------------------------------------------------------------------------
# serialisation


def _hex_matrix(m):
    return [[float(v).hex() for v in row] for row in np.atleast_2d(m)]


def _from_hex(rows):
    return np.array([[float.fromhex(v) for v in row] for row in rows])


def certificate_to_dict(cert):
    """Exact (hex) serialisation; see :func:`certificate_from_dict`."""
    spec = cert.spec
    return {
        "method": cert.method,
        "degree": cert.degree,
        "margin": float(cert.margin).hex(),
        "eps": float(cert.eps).hex(),
        "P": _hex_matrix(cert.P),
        "spec": {"mode": spec.mode, "t_min": float(spec.t_min).hex(),
                 "t_max": float(spec.t_max).hex()},
        "vars": list(cert.vars),
        "Z": [[{"exponent": list(e), "coeff": _hex_matrix(c)} for e, c in sorted(z.coeffs.items())]
              for z in cert.Z],
    }


def certificate_from_dict(d):
    spec = DwellSpec(d["spec"]["mode"], float.fromhex(d["spec"]["t_min"]),
                     float.fromhex(d["spec"]["t_max"]))
    vars_ = tuple(d.get("vars", ()))
    zs = []
    for terms in d.get("Z", []):
        coeffs = {tuple(t["exponent"]): _from_hex(t["coeff"]) for t in terms}
        dim = next(iter(coeffs.values())).shape[0] if coeffs else 0
        zs.append(sos.PolyMatrix(dim, vars_, coeffs))
    return DwellCertificate(_from_hex(d["P"]), float.fromhex(d["eps"]), zs, d["method"],
                            float.fromhex(d["margin"]), int(d["degree"]), spec, vars_)
