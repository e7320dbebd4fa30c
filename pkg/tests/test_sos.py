import numpy as np
import pytest

from dwellcert import dwell, lmi, sdp, sos
from dwellcert.sos import TAU, THETA


def random_poly(dim, vars, degree, seed=0):
    rng = np.random.default_rng(seed)
    coeffs = {}
    for e in sos.monomials(len(vars), degree):
        b = rng.normal(size=(dim, dim))
        coeffs[e] = b + b.T
    return sos.PolyMatrix(dim, vars, coeffs)


def scalar(terms, vars=(TAU,)):
    return sos.PolyMatrix.scalar(terms, vars)


class TestMonomials:
    def test_total_degree_count(self):
        assert len(sos.monomials(2, 3)) == 10
        assert sos.monomials(2, 1) == [(0, 0), (1, 0), (0, 1)]

    def test_box_convention(self):
        assert len(sos.monomials(2, 2, "tau-only")) == 9

    def test_unknown_convention(self):
        with pytest.raises(ValueError):
            sos.monomials(1, 2, "bogus")


class TestDerivative:
    def test_constant(self):
        z = sos.PolyMatrix.constant(np.eye(2))
        assert not sos.poly_derivative(z, TAU).coeffs

    def test_square(self):
        c = np.array([[1.0, 2.0], [2.0, -1.0]])
        d = sos.poly_derivative(sos.PolyMatrix(2, (TAU,), {(2,): c}), TAU)
        assert list(d.coeffs) == [(1,)]
        np.testing.assert_array_equal(d.coeffs[(1,)], 2 * c)

    def test_finite_difference(self):
        z = random_poly(3, (TAU, THETA), 3, seed=2)
        d = sos.poly_derivative(z, TAU)
        h = 1e-5
        fd = (z(0.37 + h, 0.9) - z(0.37 - h, 0.9)) / (2 * h)
        np.testing.assert_allclose(d(0.37, 0.9), fd, atol=1e-7)

    def test_unknown_variable(self):
        with pytest.raises(ValueError):
            sos.poly_derivative(sos.PolyMatrix.constant(np.eye(1)), THETA)


class TestSubstitute:
    def test_zero_binding(self):
        z = sos.PolyMatrix(1, (TAU, THETA), {(1, 0): np.eye(1)})
        assert not sos.poly_substitute(z, {TAU: 0.0}).coeffs

    def test_merge_exponents(self):
        c = np.array([[3.0]])
        z = sos.PolyMatrix(1, (TAU, THETA), {(1, 1): c})
        out = sos.poly_substitute(z, {TAU: THETA})
        assert out.vars == (THETA,)
        assert list(out.coeffs) == [(2,)]
        np.testing.assert_array_equal(out.coeffs[(2,)], c)

    def test_numeric_binding(self):
        z = random_poly(2, (TAU, THETA), 3, seed=7)
        out = sos.poly_substitute(z, {TAU: 0.2, THETA: 0.5})
        np.testing.assert_allclose(out(), z(0.2, 0.5), atol=1e-14)

    def test_derivative_then_bind(self):
        z = random_poly(2, (TAU, THETA), 4, seed=8)
        d = sos.poly_substitute(sos.poly_derivative(z, TAU), {TAU: 0.3})
        h = 1e-5
        fd = (z(0.3 + h, 0.8) - z(0.3 - h, 0.8)) / (2 * h)
        np.testing.assert_allclose(d(0.8), fd, atol=1e-7)


class TestLoopingEquality:
    def test_zero(self):
        z = sos.PolyMatrix(6, (TAU, THETA), {})
        y1, y2 = dwell.selectors(2, np.eye(2))
        eqs, diff = sos.looping_equality(z, y1, y2)
        assert eqs == [] and not diff.coeffs

    def test_identical_selectors_constant_z(self):
        rng = np.random.default_rng(0)
        b = rng.normal(size=(6, 6))
        z = sos.PolyMatrix.constant(b + b.T, (TAU, THETA))
        _, y2 = dwell.selectors(2, np.eye(2))
        eqs, diff = sos.looping_equality(z, y2, y2)
        assert not diff.coeffs

    def test_identity_jump_keeps_distinct_selectors(self):
        y1, y2 = dwell.selectors(2, np.eye(2))
        assert not np.array_equal(y1, y2)

    def test_coefficients_against_sampling(self, ex1):
        model = lmi.Model()
        z = sos.poly_matvar(model, 6, (TAU, THETA), 2)
        y1, y2 = dwell.selectors(2, ex1.J)
        eqs, diff = sos.looping_equality(z, y1, y2)
        assert diff.vars == (THETA,)
        x = np.random.default_rng(3).normal(size=model.nvars)
        deg = diff.degree
        assert len(eqs) == deg + 1
        # a θ-polynomial of degree deg is fixed by deg + 1 samples
        thetas = np.linspace(0.2, 0.6, deg + 1)
        zx = z.numeric(x)
        for th in thetas:
            direct = y1.T @ zx(0.0, th) @ y1 - y2.T @ zx(th, th) @ y2
            np.testing.assert_allclose(diff.numeric(x)(th), direct, atol=1e-12)
        vander = np.vander(thetas, deg + 1, increasing=True)
        samples = np.array([(y1.T @ zx(0.0, th) @ y1 - y2.T @ zx(th, th) @ y2).ravel()
                            for th in thetas])
        coef = np.linalg.solve(vander, samples)
        for (e,), c in diff.numeric(x):
            np.testing.assert_allclose(c.ravel(), coef[e], atol=1e-9)

    def test_shape_mismatch(self):
        z = sos.PolyMatrix(6, (TAU, THETA), {})
        with pytest.raises(ValueError):
            sos.looping_equality(z, np.ones((4, 4)), np.ones((4, 4)))


class TestGram:
    def test_degree_zero(self):
        model = lmi.Model()
        s, q = sos.sos_gram(model, 1, (TAU,), 0)
        assert q.dim == 1 and list(s.coeffs) == [(0,)]

    def test_scalar_quadratic_identity(self):
        model = lmi.Model()
        s, q = sos.sos_gram(model, 1, (TAU,), 2)
        x = np.zeros(model.nvars)
        qv = np.array([[2.0, -1.0], [-1.0, 3.0]])
        x[q.index[0, 0]], x[q.index[0, 1]], x[q.index[1, 1]] = 2.0, -1.0, 3.0
        num = s.numeric(x)
        for t in np.linspace(-2, 2, 9):
            m = np.array([1.0, t])
            assert num(t)[0, 0] == pytest.approx(m @ qv @ m)
            assert num(t)[0, 0] >= 0

    def test_matrix_sampling(self):
        model = lmi.Model()
        s, q = sos.sos_gram(model, 2, (TAU,), 2)
        rng = np.random.default_rng(4)
        for _ in range(20):
            b = rng.normal(size=(4, 4))
            qv = b @ b.T
            x = np.zeros(model.nvars)
            x[q.index] = qv
            assert np.min(np.linalg.eigvalsh(s.numeric(x)(rng.uniform(-3, 3)))) >= -1e-12

    def test_odd_degree(self):
        with pytest.raises(ValueError):
            sos.sos_gram(lmi.Model(), 1, (TAU,), 3)


class TestPutinar:
    unit = sos.interval_domain(0.0, 1.0)

    def test_negative_constant(self):
        assert sos.check_nonpositive(scalar({(0,): -1.0}), self.unit)

    def test_boundary_touching(self):
        res = sos.check_nonpositive(scalar({(0,): -1.0, (1,): 1.0}), self.unit, mult_degree=0)
        assert res
        # the certificate is 1 - τ = g2 with P2 = 1
        assert res.multipliers[1](0.5)[0, 0] == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("md", [0, 2, 4])
    def test_positive_somewhere(self, md):
        res = sos.check_nonpositive(scalar({(0,): -0.5, (1,): 1.0}), self.unit, mult_degree=md)
        assert not res
        assert res.status is sdp.Status.INFEASIBLE

    def test_degree_underflow(self):
        with pytest.raises(ValueError):
            sos.putinar_compile(lmi.Model(), scalar({(4,): -1.0}), self.unit, p0_degree=2)

    def test_odd_multiplier_degree(self):
        with pytest.raises(ValueError):
            sos.putinar_compile(lmi.Model(), scalar({(0,): -1.0}), self.unit, mult_degree=1)

    def test_matrix_valued(self):
        # -[[1+τ, τ], [τ, 2-τ]] is negative definite on [0, 1]
        L = sos.PolyMatrix(2, (TAU,), {(0,): -np.diag([1.0, 2.0]),
                                        (1,): -np.array([[1.0, 1.0], [1.0, -1.0]])})
        assert sos.check_nonpositive(L, self.unit)

    def test_ranged_domain_membership(self):
        d = sos.ranged_domain(0.2, 0.6)
        assert d.contains(0.1, 0.3)
        assert not d.contains(0.4, 0.3)
        assert not d.contains(0.1, 0.7)
        pts = d.sample(50, seed=1)
        assert all(0 <= t <= th and 0.2 <= th <= 0.6 for t, th in pts)
