import numpy as np
import pytest
import scipy.sparse as sp

from dwellcert import lmi, sdp


def interval_problem():
    # [[x, 0], [0, 1 - x]] >= t I
    b = sdp.LmiBlock.from_matrices(np.diag([0.0, 1.0]), {0: np.diag([1.0, -1.0])}, 1)
    return sdp.SdpProblem(1, [b])


def lyapunov_problem(a):
    model = lmi.Model()
    p = model.sym(2, "P")
    model.add_lmi(p.expr, ">>", name="P")
    model.add_lmi(a.T @ p.expr + p.expr @ a, "<<", name="flow")
    model.add_eq(lmi.trace(p.expr) - 2.0)
    return model.assemble()[0]


class TestHandInstances:
    def test_symmetric_interval(self):
        sol = sdp.solve(interval_problem())
        assert sol.status is sdp.Status.FEASIBLE
        assert sol.x[0] == pytest.approx(0.5, abs=1e-6)
        assert sol.margin == pytest.approx(0.5, abs=1e-6)

    def test_hurwitz_flow_is_feasible(self):
        sol = sdp.solve(lyapunov_problem(np.array([[-1.0, 0.0], [1.0, -2.0]])))
        assert sol.status is sdp.Status.FEASIBLE

    def test_anti_hurwitz_flow_is_infeasible(self):
        sol = sdp.solve(lyapunov_problem(np.array([[1.0, 3.0], [-1.0, 2.0]])))
        assert sol.status is sdp.Status.INFEASIBLE
        assert sol.t < 0

    def test_zero_margin_is_marginal(self):
        # [[x, 0], [0, -x]] >= t I only admits t = 0
        b = sdp.LmiBlock.from_matrices(np.zeros((2, 2)), {0: np.diag([1.0, -1.0])}, 1)
        sol = sdp.solve(sdp.SdpProblem(1, [b]))
        assert sol.status is sdp.Status.MARGINAL

    def test_inconsistent_equalities(self):
        b = sdp.LmiBlock.from_matrices(np.eye(1), {0: np.eye(1)}, 1)
        e = sp.csr_matrix(np.array([[1.0], [1.0]]))
        sol = sdp.solve(sdp.SdpProblem(1, [b], e, np.array([0.0, 1.0])))
        assert sol.status is sdp.Status.INFEASIBLE

    def test_objective_minimisation(self):
        # minimise x subject to x >= 2 (1x1 block x - 2 >= 0)
        b = sdp.LmiBlock.from_matrices(np.array([[-2.0]]), {0: np.eye(1)}, 1, strict=False)
        sol = sdp.solve(sdp.SdpProblem(1, [b], objective=np.array([1.0])))
        assert sol.x[0] == pytest.approx(2.0, abs=1e-6)


class TestVerify:
    def test_interior_point(self):
        assert sdp.verify(interval_problem(), [0.5]) == pytest.approx(0.5)

    def test_infeasible_point(self):
        assert sdp.verify(interval_problem(), [2.0]) == pytest.approx(-1.0)

    def test_matches_reported_margin(self):
        p = lyapunov_problem(np.array([[-1.0, 0.0], [1.0, -2.0]]))
        sol = sdp.solve(p)
        assert sdp.verify(p, sol.x) == pytest.approx(sol.margin, abs=1e-6)
        assert sdp.verify_report(p, sol.x)["eq_residual"] <= 1e-8 * 3.0


class TestInvariants:
    def test_deterministic(self):
        p = lyapunov_problem(np.array([[-1.0, 0.0], [1.0, -2.0]]))
        a, b = sdp.solve(p), sdp.solve(p)
        assert np.array_equal(a.x, b.x)
        assert a.iterations == b.iterations

    @pytest.mark.parametrize("s", [1e-3, 0.5, 40.0])
    def test_scaling_keeps_classification(self, s):
        for a in ([[-1.0, 0.0], [1.0, -2.0]], [[1.0, 3.0], [-1.0, 2.0]]):
            p = lyapunov_problem(np.array(a))
            assert sdp.solve(p.scaled(s)).status is sdp.solve(p).status

    def test_margin_scales(self):
        p = interval_problem()
        assert sdp.verify(p.scaled(3.0), [0.25]) == pytest.approx(3.0 * sdp.verify(p, [0.25]))


class TestSdpaFormat:
    def test_round_trip(self, tmp_path):
        p = lyapunov_problem(np.array([[-1.0, 0.0], [1.0, -2.0]]))
        path = tmp_path / "p.dat-s"
        sdp.write_sdpa(p, path)
        c, mats, structs = sdp.read_sdpa(path)
        # feasibility problems gain the margin variable t, minimised as -t
        assert len(c) == p.num_vars + 1 and c[-1] == -1.0
        assert structs[: len(p.blocks)] == [b.dim for b in p.blocks]
        x = np.linspace(0.2, 0.9, p.num_vars)
        for k, b in enumerate(p.blocks, start=1):
            d = b.dim
            total = -mats.get(0, {}).get(k, np.zeros((d, d)))
            for i in range(p.num_vars):
                total = total + x[i] * mats.get(i + 1, {}).get(k, np.zeros((d, d)))
            np.testing.assert_allclose(total, b.evaluate(x), atol=1e-12)
