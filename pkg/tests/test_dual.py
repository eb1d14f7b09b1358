"""Tests for the dual-number differentiation core."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crgeo.dual import (
    AD,
    FD,
    Dual,
    conj,
    cos,
    dir_contract,
    directional_derivative,
    exp,
    jacfwd,
    jvp,
    jvp_vec,
    log,
    new_tag,
    omat,
    ovec,
    pmag,
    primal,
    primal_vec,
    sin,
    sqrt,
)
from crgeo.errors import DegenerateStructureError
from crgeo import linalg

finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
nonzero = st.floats(min_value=0.3, max_value=2.0).map(lambda v: v * (-1) ** int(v * 10))


def fd_dir(f, x, v, h=1e-6):
    xp = [x[i] + h * v[i] for i in range(len(x))]
    xm = [x[i] - h * v[i] for i in range(len(x))]
    return (f(ovec(xp)) - f(ovec(xm))) / (2 * h)


def scalar_field(x):
    # mixes every primitive the library relies on
    return sin(x[0]) * exp(0.3 * x[1]) + x[0] * x[1] ** 2 - x[1] / (2.0 + cos(x[0]))


class TestArithmetic:
    @given(a=finite, b=finite, da=finite, db=finite)
    @settings(max_examples=60, deadline=None)
    def test_mul_div_rules(self, a, b, da, db):
        t = new_tag()
        x = Dual(t, a, da)
        y = Dual(t, b + 3.0, db)  # keep denominator away from 0
        p = x * y
        assert p.re == pytest.approx(a * (b + 3.0))
        assert p.eps == pytest.approx(da * (b + 3.0) + a * db)
        q = x / y
        assert q.eps == pytest.approx((da * (b + 3.0) - a * db) / (b + 3.0) ** 2, abs=1e-12)

    @given(a=finite, da=finite)
    @settings(max_examples=40, deadline=None)
    def test_scalar_mixing(self, a, da):
        t = new_tag()
        x = Dual(t, a, da)
        assert (2.0 + x).re == pytest.approx(2.0 + a)
        assert (2.0 - x).eps == pytest.approx(-da)
        assert (3.0 * x).eps == pytest.approx(3.0 * da)
        assert (1.0 / (x + 4.0)).eps == pytest.approx(-da / (a + 4.0) ** 2)

    def test_pow_rules(self):
        t = new_tag()
        x = Dual(t, 1.7, 1.0)
        assert (x ** 3).eps == pytest.approx(3 * 1.7 ** 2)
        assert (x ** 0).eps == 0.0
        assert (x ** -2).eps == pytest.approx(-2 * 1.7 ** -3)
        assert (x ** 0.5).eps == pytest.approx(0.5 * 1.7 ** -0.5)
        # dual exponent goes through exp(log(.) * n)
        y = x ** Dual(t, 2.0, 0.0)
        assert primal(y) == pytest.approx(1.7 ** 2)
        assert y.eps == pytest.approx(2 * 1.7)
        z = 2.0 ** x
        assert z.eps == pytest.approx(math.log(2.0) * 2.0 ** 1.7)

    def test_transcendental_chain(self):
        t = new_tag()
        x = Dual(t, 0.6, 1.0)
        assert exp(x).eps == pytest.approx(math.exp(0.6))
        assert log(x).eps == pytest.approx(1 / 0.6)
        assert sin(x).eps == pytest.approx(math.cos(0.6))
        assert cos(x).eps == pytest.approx(-math.sin(0.6))
        assert sqrt(x).eps == pytest.approx(0.5 / math.sqrt(0.6))

    def test_conj_is_elementwise_on_parts(self):
        t = new_tag()
        x = Dual(t, 1.0 + 2.0j, 0.5 - 1.0j)
        c = conj(x)
        assert c.re == 1.0 - 2.0j
        assert c.eps == 0.5 + 1.0j
        arr = ovec([x, 3.0 + 1.0j])
        carr = conj(arr)
        assert carr[0].re == 1.0 - 2.0j
        assert carr[1] == 3.0 - 1.0j


class TestDrivers:
    @given(x0=finite, x1=finite, v0=finite, v1=finite)
    @settings(max_examples=40, deadline=None)
    def test_jvp_matches_fd(self, x0, x1, v0, v1):
        x = [x0, x1]
        v = [v0, v1]
        val, der = jvp(scalar_field, x, v)
        assert val == pytest.approx(scalar_field(ovec(x)))
        assert der == pytest.approx(fd_dir(scalar_field, x, v), abs=1e-6, rel=1e-6)

    def test_jvp_fd_mode(self):
        x = [0.4, -0.9]
        v = [1.0, 0.5]
        _, ad = jvp(scalar_field, x, v, AD)
        _, fd = jvp(scalar_field, x, v, FD)
        assert fd == pytest.approx(ad, abs=1e-8)

    def test_second_derivative_by_nesting(self):
        # f(t) = sin(a t) exp(b t) has closed-form second derivative
        a, b = 1.3, -0.7

        def f(x):
            return sin(a * x[0]) * exp(b * x[0])

        def df(x):
            _, d = jvp(f, [x[0]], [1.0])
            return d

        t0 = 0.37
        _, d2 = jvp(df, [t0], [1.0])
        exact = math.exp(b * t0) * (
            (b * b - a * a) * math.sin(a * t0) + 2 * a * b * math.cos(a * t0)
        )
        assert d2 == pytest.approx(exact, rel=1e-12)

    def test_mixed_partials_by_nesting(self):
        def f(x):
            return x[0] ** 2 * sin(x[1])

        def dx(x):
            _, d = jvp(f, x, [1.0, 0.0])
            return d

        x0, x1 = 0.8, 1.1
        _, dxy = jvp(dx, [x0, x1], [0.0, 1.0])
        assert dxy == pytest.approx(2 * x0 * math.cos(x1), rel=1e-12)

    def test_jvp_vec_complex_direction(self):
        def f(x):
            z = x[0] + 1j * x[1]
            return z * conj(z) + z ** 2

        x = [0.5, -0.3]
        v = [1.0 + 2.0j, -0.5 + 1.0j]
        val, der = jvp_vec(f, x, v)
        _, dr = jvp(f, x, [1.0, -0.5])
        _, di = jvp(f, x, [2.0, 1.0])
        assert der == pytest.approx(dr + 1j * di, rel=1e-12)
        assert val == pytest.approx(f(ovec(x)))

    def test_jvp_vec_real_direction_shortcut(self):
        def f(x):
            return exp(x[0]) * x[1]

        _, d1 = jvp_vec(f, [0.2, 0.7], [1.0, 2.0])
        _, d2 = jvp(f, [0.2, 0.7], [1.0, 2.0])
        assert d1 == pytest.approx(d2, rel=1e-14)

    def test_jvp_vec_dual_direction(self):
        # direction depends on the outer variable: d/dt [ v(t)(f) ] at fixed p
        def f(x):
            return x[0] ** 2 * x[1]

        p = [0.9, 1.4]

        def g(t):
            v = [t[0], 1.0]
            _, d = jvp_vec(f, p, v)
            return d

        _, outer = jvp(g, [0.25], [1.0])
        # v(f) = t * 2 x0 x1 + x0^2, so d/dt = 2 x0 x1
        assert outer == pytest.approx(2 * p[0] * p[1], rel=1e-12)

    def test_jacfwd_layout_and_values(self):
        def f(x):
            return scalar_field(x), ovec([x[0] * x[1], exp(x[0])])

        x = [0.3, -1.2]
        val, jac = jacfwd(f, x)
        assert val[0] == pytest.approx(scalar_field(ovec(x)))
        js, jv = jac
        assert np.shape(js) == (2,)
        for i, e in enumerate(np.eye(2)):
            _, d = jvp(lambda q: scalar_field(q), x, list(e))
            assert js[i] == pytest.approx(d, rel=1e-12)
        assert jv[0][0] == pytest.approx(x[1])
        assert jv[0][1] == pytest.approx(x[0])
        assert jv[1][1] == pytest.approx(0.0, abs=1e-15)

    def test_jacfwd_fd_mode_matches(self):
        def f(x):
            return ovec([scalar_field(x), x[0] ** 3])

        x = [0.3, -1.2]
        _, ja = jacfwd(f, x, AD)
        _, jf = jacfwd(f, x, FD)
        for i in range(2):
            assert jf[i] == pytest.approx(np.asarray(ja[i], dtype=float), abs=1e-8)

    def test_dir_contract_numeric_and_object(self):
        slot = np.array([1.0, 2.0])
        assert dir_contract(slot, [3.0, -1.0]) == pytest.approx(1.0)
        t = new_tag()
        oslot = ovec([Dual(t, 1.0, 0.5), Dual(t, 2.0, -0.25)])
        out = dir_contract(oslot, [1.0, 2.0])
        assert primal(out) == pytest.approx(5.0)
        assert out.eps == pytest.approx(0.0)

    def test_directional_derivative_wrapper(self):
        d = directional_derivative(lambda x: x[0] * x[1], [2.0, 5.0], [1.0, 1.0])
        assert d == pytest.approx(7.0)


class TestBatched:
    def test_batched_jvp_matches_per_sample(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(-1, 1, size=(2, 5))
        v = [1.0, -0.7]
        _, der = jvp(scalar_field, [X[0], X[1]], v)
        assert der.shape == (5,)
        for s in range(5):
            _, ds = jvp(scalar_field, [X[0, s], X[1, s]], v)
            assert der[s] == pytest.approx(ds, rel=1e-12)

    def test_batched_jacfwd_leading_axis(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-1, 1, size=(3, 4))

        def f(x):
            return x[0] * x[1] + sin(x[2])

        val, jac = jacfwd(f, [X[0], X[1], X[2]])
        assert np.shape(jac) == (3, 4)
        assert jac[0] == pytest.approx(X[1])
        assert jac[2] == pytest.approx(np.cos(X[2]))
        assert val == pytest.approx(X[0] * X[1] + np.sin(X[2]))


class TestContainers:
    def test_ovec_omat_keep_cells(self):
        cell = np.arange(3.0)
        v = ovec([cell, 1.0])
        assert v.dtype == object and v[0] is cell
        m = omat([[cell, 0.0], [1.0, cell]])
        assert m[0, 0] is cell and m.shape == (2, 2)

    def test_primal_helpers(self):
        t = new_tag()
        x = Dual(t, Dual(t - 1, 3.0, 1.0), 2.0)
        assert primal(x) == 3.0
        assert pmag(Dual(t, np.array([1.0, -4.0]), 0.0)) == 4.0
        pv = primal_vec(ovec([Dual(t, 2.0, 9.0), 5.0]))
        assert pv == pytest.approx([2.0, 5.0])


class TestLinalg:
    def test_object_solve_matches_numpy(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        b = rng.normal(size=4)
        xo = linalg.solve(A.astype(object), b.astype(object))
        xn = np.linalg.solve(A, b)
        assert primal_vec(xo) == pytest.approx(xn, rel=1e-12)
        Ao = linalg.inv(A.astype(object))
        assert primal_vec(Ao.ravel()) == pytest.approx(np.linalg.inv(A).ravel(), rel=1e-10)

    def test_solve_derivative_implicit_rule(self):
        rng = np.random.default_rng(4)
        A0 = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        dA = rng.normal(size=(3, 3))
        b0 = rng.normal(size=3)
        db = rng.normal(size=3)
        t = new_tag()
        A = omat([[Dual(t, A0[i, j], dA[i, j]) for j in range(3)] for i in range(3)])
        b = ovec([Dual(t, b0[i], db[i]) for i in range(3)])
        x = linalg.solve(A, b)
        x0 = np.linalg.solve(A0, b0)
        expect = np.linalg.solve(A0, db - dA @ x0)
        for i in range(3):
            assert x[i].re == pytest.approx(x0[i], rel=1e-12)
            assert x[i].eps == pytest.approx(expect[i], rel=1e-10)

    def test_solve_matrix_rhs_and_pivoting(self):
        # leading zero forces a row swap on the generic path
        A = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=object)
        B = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=object)
        X = linalg.solve(A, B)
        assert primal_vec(X.ravel()) == pytest.approx([3.0, 4.0, 1.0, 2.0])

    def test_singular_raises(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0]], dtype=object)
        with pytest.raises(DegenerateStructureError):
            linalg.solve(A, np.array([1.0, 0.0], dtype=object))

    def test_complex_solve(self):
        A = np.array([[2.0, 1.0j], [-1.0j, 3.0]], dtype=object)
        b = np.array([1.0 + 1.0j, 2.0], dtype=object)
        x = linalg.solve(A, b)
        An = np.array([[2.0, 1.0j], [-1.0j, 3.0]])
        xn = np.linalg.solve(An, np.array([1.0 + 1.0j, 2.0]))
        assert primal_vec(x) == pytest.approx(xn, rel=1e-12)
