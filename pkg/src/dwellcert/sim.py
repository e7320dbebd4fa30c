"""Simulation of linear impulsive systems and certificate checks along trajectories.

The flow between impulses is evaluated with exact matrix exponentials, so
the only error is that of :func:`linalg.expm`. Random inter-impulse gaps come
from numpy's PCG64 generator seeded by the caller, which is documented and
platform independent, so traces are bit-reproducible.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import dwell, linalg

MIN_GAP = 1e-6
DEFAULT_SUBSTEPS = 50


@dataclass(frozen=True)
class Periodic:
    T: float


@dataclass(frozen=True)
class Uniform:
    t_min: float
    t_max: float
    seed: int = 0


@dataclass(frozen=True)
class ImpulseSequence:
    t0: float
    times: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        prev = self.t0
        for t in times:
            if not t - prev >= MIN_GAP:
                raise ValueError(f"impulse gaps must be >= {MIN_GAP}: {prev} -> {t}")
            prev = t
        object.__setattr__(self, "times", times)

    @property
    def gaps(self):
        """Inter-impulse gaps ``T_k = t_{k+1} - t_k`` (between impulses)."""
        return np.diff(np.asarray(self.times))

    def __len__(self):
        return len(self.times)


def gen_sequence(kind, horizon, t0=0.0, max_impulses=None):
    """Impulse times in ``(t0, horizon]``.

    ``kind`` is :class:`Periodic` or :class:`Uniform`; uniform gaps are i.i.d.
    on ``[t_min, t_max]``. Times are accumulated gap by gap, so a uniform
    range of zero width reproduces the periodic sequence exactly.
    """
    if not horizon > t0:
        raise ValueError("horizon must exceed t0")
    if isinstance(kind, Periodic):
        if not kind.T >= MIN_GAP:
            raise ValueError("period must be positive")
        draw = lambda: kind.T
    elif isinstance(kind, Uniform):
        lo, hi = kind.t_min, kind.t_max
        if not (MIN_GAP <= lo <= hi < math.inf):
            raise ValueError(f"empty or invalid gap range [{lo}, {hi}]")
        rng = np.random.Generator(np.random.PCG64(kind.seed))
        draw = lambda: lo + (hi - lo) * rng.random()
    else:
        raise TypeError(f"unknown sequence kind {kind!r}")
    times = []
    t = t0
    slack = 1e-12 * max(1.0, abs(horizon))
    while max_impulses is None or len(times) < max_impulses:
        t = t + draw()
        if t > horizon + slack:
            break
        times.append(t)
    return ImpulseSequence(t0, tuple(times))


@dataclass
class Trajectory:
    """Samples of ``x(t)``; impulse instants appear twice, flagged ``pre``
    and ``post``, other samples are flagged ``flow``."""

    times: np.ndarray
    states: np.ndarray
    flags: list
    impulse_times: np.ndarray

    @property
    def pre_jump(self):
        """States ``x(t_k)`` just before each impulse."""
        idx = [i for i, f in enumerate(self.flags) if f == "pre"]
        return self.states[idx]


def simulate(sys, x0, seq, substeps=DEFAULT_SUBSTEPS):
    """Trajectory of ``x' = Ax``, ``x+ = Jx`` from ``x(t0) = x0``.

    Each inter-impulse interval is sampled at ``substeps`` equally spaced
    offsets using ``e^{A s}`` applied to the post-jump state.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    a, j = sys.A, sys.J
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (sys.n,):
        raise ValueError(f"x0 must have length {sys.n}")
    times, states, flags = [seq.t0], [x.copy()], ["flow"]
    cache = {}
    start = seq.t0
    for tk in seq.times:
        gap = tk - start
        key = (gap, substeps)
        if key not in cache:
            cache[key] = [linalg.expm(a, s) for s in gap * np.arange(1, substeps + 1) / substeps]
        flows = cache[key]
        for k, e in enumerate(flows[:-1], start=1):
            times.append(start + gap * k / substeps)
            states.append(e @ x)
            flags.append("flow")
        pre = flows[-1] @ x
        post = j @ pre
        times += [tk, tk]
        states += [pre, post]
        flags += ["pre", "post"]
        x, start = post, tk
    return Trajectory(np.asarray(times), np.asarray(states), flags, np.asarray(seq.times))


@dataclass
class LyapunovTrace:
    times: np.ndarray
    values: np.ndarray
    envelope_times: np.ndarray
    envelope_values: np.ndarray

    @property
    def envelope_decreasing(self):
        """True iff ``V(x(t_k))`` is strictly decreasing over the impulses
        (vacuously true for fewer than two)."""
        v = self.envelope_values
        return bool(np.all(v[1:] < v[:-1]) or np.all(v == 0.0))


def lyapunov_trace(traj, p):
    """``V = x^T P x`` at every sample and the discrete envelope at the
    impulse instants (pre-jump values)."""
    p = linalg.as_matrix(p, square=True, name="P")
    if not linalg.is_pd(p):
        raise ValueError("P must be positive definite")
    v = np.einsum("ti,ij,tj->t", traj.states, p, traj.states)
    pre = [i for i, f in enumerate(traj.flags) if f == "pre"]
    return LyapunovTrace(traj.times, v, traj.times[pre], v[pre])


def flow_increases(traj, values):
    """True if ``V`` increases between two consecutive samples of one flow
    interval; used to exhibit non-monotonic continuous behaviour."""
    for i in range(1, len(values)):
        if traj.flags[i - 1] in ("flow", "post") and traj.flags[i] in ("flow", "pre"):
            if traj.times[i] > traj.times[i - 1] and values[i] > values[i - 1]:
                return True
    return False


@dataclass
class FunctionalEval:
    tau: np.ndarray
    W: np.ndarray
    looping_residual: float
    increments: dict = field(default_factory=dict)


def eval_looped_functional(cert, sys, x_tk, T_k, samples=101):
    """Looped functional of an SOS certificate over one interval.

    ``x_tk`` is the state just before the impulse at ``t_k`` and ``T_k`` the
    gap to the next one. With ``ξ(τ) = col(x(t_k+τ), x(t_k), x(t_{k+1}))``::

        W(τ) = θ V(x(t_k+τ)) + ξ^T Z(τ, θ) ξ + τ x(t_k)^T (J^T P J - P + ε I) x(t_k)

    at ``θ = T_k``; its τ-derivative is ``ξ^T L ξ`` with ``L`` the certified
    inequality, so ``W`` is non-increasing. The looping residual compares
    ``ξ(0)^T Z(0, θ) ξ(0)`` with ``ξ(θ)^T Z(θ, θ) ξ(θ)``.
    """
    if not cert.Z:
        raise ValueError("certificate has no Z (not from an SOS method)")
    spec = cert.spec
    bivariate = len(cert.Z[0].vars) == 2
    if bivariate:
        if not spec.admits(T_k):
            raise ValueError(f"T_k = {T_k} outside the certified range [{spec.t_min}, {spec.t_max}]")
    else:
        t_bar = spec.t_min if spec.mode == dwell.MINIMAL else spec.t_max
        if abs(T_k - t_bar) > 1e-12 * max(1.0, t_bar):
            raise ValueError(f"univariate certificate only covers T_k = {t_bar}")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if not sys.is_nominal and len(cert.Z) != 1:
        raise ValueError("pass the nominal member whose jump vertex matches the Z used")
    a, j = sys.A, sys.J
    p, eps = cert.P, cert.eps
    z = cert.Z[0]
    x_tk = np.asarray(x_tk, dtype=float).reshape(-1)
    x_next = linalg.expm(a, T_k) @ j @ x_tk
    c = float(x_tk @ (j.T @ p @ j - p + eps * np.eye(sys.n)) @ x_tk)

    def zval(tau):
        return z(tau, T_k) if bivariate else z(tau)

    taus = np.linspace(0.0, T_k, samples)
    w = np.empty(samples)
    for k, tau in enumerate(taus):
        x = linalg.expm(a, tau) @ j @ x_tk
        xi = np.concatenate([x, x_tk, x_next])
        w[k] = T_k * float(x @ p @ x) + float(xi @ zval(tau) @ xi) + tau * c
    xi0 = np.concatenate([j @ x_tk, x_tk, x_next])
    xi1 = np.concatenate([x_next, x_tk, x_next])
    residual = abs(float(xi0 @ zval(0.0) @ xi0) - float(xi1 @ zval(T_k) @ xi1))
    return FunctionalEval(taus, w, residual)


def write_trace_csv(traj, p, out):
    """CSV with header ``t,pre_post,x1,...,xn,V``; floats use the shortest
    round-trip representation. ``out`` is a path or a text file object."""
    v = lyapunov_trace(traj, p).values if np.any(traj.states) else np.zeros(len(traj.times))
    n = traj.states.shape[1]
    header = ["t", "pre_post"] + [f"x{i + 1}" for i in range(n)] + ["V"]

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, f, x, vv in zip(traj.times, traj.flags, traj.states, v):
            w.writerow([repr(float(t)), f] + [repr(float(e)) for e in x] + [repr(float(vv))])

    if hasattr(out, "write"):
        emit(out)
    else:
        with open(out, "w", newline="") as fh:
            emit(fh)


def envelope_violations(sys, p, gap_range, seeds, x0=None, impulses=200):
    """Count sequences (one per seed) on which the discrete envelope fails to
    decrease strictly. Polytopic systems use one random member per seed."""
    lo, hi = gap_range
    bad = 0
    for s in seeds:
        if sys.is_nominal:
            member = sys
        else:
            rng = np.random.default_rng(s)
            wa = rng.dirichlet(np.ones(len(sys.flow_vertices)))
            wj = rng.dirichlet(np.ones(len(sys.jump_vertices)))
            member = dwell.ImpulsiveSystem.nominal(*sys.combination(wa, wj))
        start = np.ones(sys.n) if x0 is None else np.asarray(x0, dtype=float)
        seq = gen_sequence(Uniform(lo, hi, s), horizon=hi * impulses + 1.0,
                           max_impulses=impulses)
        traj = simulate(member, start, seq, substeps=1)
        tr = lyapunov_trace(traj, p)
        v = tr.envelope_values
        # stop comparing once the state has decayed below double precision noise
        live = v > 1e-250
        if not np.all(v[1:][live[1:]] < v[:-1][live[1:]]):
            bad += 1
    return bad
