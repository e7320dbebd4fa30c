import io

import numpy as np
import pytest

from dwellcert import dwell, linalg, sim
from dwellcert.dwell import ImpulsiveSystem
from conftest import taylor_expm


@pytest.fixture(scope="module")
def ex4_cert(ex4):
    return dwell.thm_max_dwell_check(ex4, 0.46, 3).certificate


@pytest.fixture(scope="module")
def ex2_cert(ex2):
    return dwell.thm_min_dwell_check(ex2, 1.15, 3).certificate


@pytest.fixture(scope="module")
def ex1_cert(ex1):
    return dwell.thm_ranged_check(ex1, 0.2, 0.56, 2).certificate


class TestSequences:
    def test_periodic(self):
        seq = sim.gen_sequence(sim.Periodic(0.5), 2.0)
        assert seq.times == (0.5, 1.0, 1.5, 2.0)

    def test_degenerate_uniform_is_periodic(self):
        a = sim.gen_sequence(sim.Periodic(0.3), 10.0)
        b = sim.gen_sequence(sim.Uniform(0.3, 0.3, seed=5), 10.0)
        assert a.times == b.times

    def test_uniform_bounds(self):
        seq = sim.gen_sequence(sim.Uniform(0.2, 0.5, seed=42), 1e9, max_impulses=10_000)
        gaps = np.diff((0.0,) + seq.times)
        assert len(gaps) == 10_000
        assert gaps.min() >= 0.2 and gaps.max() <= 0.5

    def test_seeded(self):
        a = sim.gen_sequence(sim.Uniform(0.2, 0.5, seed=1), 20.0)
        b = sim.gen_sequence(sim.Uniform(0.2, 0.5, seed=1), 20.0)
        c = sim.gen_sequence(sim.Uniform(0.2, 0.5, seed=2), 20.0)
        assert a.times == b.times != c.times

    def test_empty_range(self):
        with pytest.raises(ValueError):
            sim.gen_sequence(sim.Uniform(0.5, 0.2), 2.0)
        with pytest.raises(ValueError):
            sim.gen_sequence(sim.Periodic(0.5), 0.0)

    def test_gap_floor(self):
        with pytest.raises(ValueError):
            sim.ImpulseSequence(0.0, (1.0, 1.0 + 1e-9))


class TestSimulate:
    def test_trivial_dynamics(self):
        sys = ImpulsiveSystem.nominal(np.zeros((2, 2)), np.eye(2))
        traj = sim.simulate(sys, [1.0, -2.0], sim.gen_sequence(sim.Periodic(0.3), 3.0), 7)
        assert np.all(traj.states == np.array([1.0, -2.0]))

    def test_first_interval_against_taylor(self, ex3):
        x0 = np.array([0.3, -1.2])
        traj = sim.simulate(ex3, x0, sim.ImpulseSequence(0.0, (0.8,)), 4)
        for t, x, f in zip(traj.times, traj.states, traj.flags):
            if f != "post":
                np.testing.assert_allclose(x, taylor_expm(ex3.A, t) @ x0, atol=1e-9)

    def test_jump_exact(self, ex1):
        traj = sim.simulate(ex1, [1.0, 1.0], sim.gen_sequence(sim.Periodic(0.3), 3.0))
        pre = [i for i, f in enumerate(traj.flags) if f == "pre"]
        for i in pre:
            assert traj.flags[i + 1] == "post" and traj.times[i] == traj.times[i + 1]
            assert np.array_equal(traj.states[i + 1], ex1.J @ traj.states[i])

    def test_composition(self, ex4):
        sys = ImpulsiveSystem.nominal(ex4.A, np.eye(2))
        x0 = np.array([0.4, 0.9])
        seq = sim.gen_sequence(sim.Uniform(0.1, 0.4, seed=3), 3.0)
        traj = sim.simulate(sys, x0, seq, 1)
        end = traj.states[-1]
        ref = linalg.expm(ex4.A, seq.times[-1]) @ x0
        assert np.max(np.abs(end - ref)) <= 1e-9 * np.max(np.abs(ref))

    def test_maximal_dwell_decay(self, ex4):
        p = dwell.lemma_max_dwell_check(ex4, 0.45).certificate.P
        traj = sim.simulate(ex4, [1.0, 1.0], sim.gen_sequence(sim.Periodic(0.45), 20.0), 5)
        xs = traj.pre_jump
        v = np.einsum("ki,ij,kj->k", xs, p, xs)
        assert np.all(np.diff(v) < 0)
        # the Euclidean norm decays overall but is not monotone step to step
        norms = np.linalg.norm(xs, axis=1)
        assert norms[-1] < 0.5 * norms[0]
        assert np.any(np.diff(norms) > 0)

    def test_wrong_state_length(self, ex1):
        with pytest.raises(ValueError):
            sim.simulate(ex1, [1.0], sim.gen_sequence(sim.Periodic(0.3), 1.0))


class TestLyapunovTrace:
    def test_zero_state(self, ex1):
        traj = sim.simulate(ex1, [0.0, 0.0], sim.gen_sequence(sim.Periodic(0.3), 2.0))
        tr = sim.lyapunov_trace(traj, np.eye(2))
        assert not np.any(tr.values) and tr.envelope_decreasing

    def test_rejects_indefinite(self, ex1):
        traj = sim.simulate(ex1, [1.0, 0.0], sim.gen_sequence(sim.Periodic(0.3), 1.0))
        with pytest.raises(ValueError):
            sim.lyapunov_trace(traj, np.diag([1.0, -1.0]))

    def test_envelope_with_non_monotone_flow(self, ex4, ex4_cert):
        traj = sim.simulate(ex4, [1.0, 1.0], sim.gen_sequence(sim.Periodic(0.46), 10.0))
        tr = sim.lyapunov_trace(traj, ex4_cert.P)
        assert tr.envelope_decreasing
        assert sim.flow_increases(traj, tr.values)

    def test_uniform_sequences(self, ex2, ex2_cert):
        assert sim.envelope_violations(ex2, ex2_cert.P, (1.15, 3.0), range(20), impulses=60) == 0

    def test_convergence(self, ex2, ex2_cert):
        x0 = np.array([1.0, -0.5])
        seq = sim.gen_sequence(sim.Uniform(1.15, 3.0, seed=0), 1e6, max_impulses=200)
        traj = sim.simulate(ex2, x0, seq, 1)
        assert np.linalg.norm(traj.states[-1]) < 1e-3 * np.linalg.norm(x0)


class TestLoopedFunctional:
    def test_zero_state(self, ex1, ex1_cert):
        ev = sim.eval_looped_functional(ex1_cert, ex1, [0.0, 0.0], 0.3)
        assert not np.any(ev.W) and ev.looping_residual == 0.0

    def test_non_increasing(self, ex1, ex1_cert):
        rng = np.random.default_rng(0)
        for _ in range(5):
            ev = sim.eval_looped_functional(ex1_cert, ex1, rng.normal(size=2), rng.uniform(0.2, 0.56))
            slope = np.diff(ev.W) / np.diff(ev.tau)
            assert slope.max() <= 1e-6
            assert ev.looping_residual <= 1e-7 * (1 + abs(ev.W[0]))

    def test_univariate(self, ex4, ex4_cert):
        ev = sim.eval_looped_functional(ex4_cert, ex4, [1.0, -0.3], 0.46)
        assert np.all(np.diff(ev.W) <= 1e-9 * (1 + abs(ev.W[0])))

    def test_out_of_range(self, ex1, ex1_cert, ex4, ex4_cert):
        with pytest.raises(ValueError):
            sim.eval_looped_functional(ex1_cert, ex1, [1.0, 0.0], 0.7)
        with pytest.raises(ValueError):
            sim.eval_looped_functional(ex4_cert, ex4, [1.0, 0.0], 0.3)


class TestCsv:
    def test_header_and_rows(self, ex1):
        traj = sim.simulate(ex1, [1.0, 2.0], sim.gen_sequence(sim.Periodic(0.3), 0.9), 3)
        buf = io.StringIO()
        sim.write_trace_csv(traj, np.eye(2), buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,pre_post,x1,x2,V"
        assert len(lines) == 1 + len(traj.times)
        assert sum(ln.split(",")[1] == "post" for ln in lines) == 3

    def test_zero_state_column(self, ex1):
        traj = sim.simulate(ex1, [0.0, 0.0], sim.gen_sequence(sim.Periodic(0.3), 0.9), 3)
        buf = io.StringIO()
        sim.write_trace_csv(traj, np.eye(2), buf)
        assert all(ln.split(",")[-1] == "0.0" for ln in buf.getvalue().splitlines()[1:])

    def test_bit_reproducible(self, ex1, tmp_path):
        def run(path):
            seq = sim.gen_sequence(sim.Uniform(0.2, 0.5, seed=9), 5.0)
            sim.write_trace_csv(sim.simulate(ex1, [1.0, 1.0], seq), np.eye(2), path)
            return path.read_bytes()
        assert run(tmp_path / "a.csv") == run(tmp_path / "b.csv")
