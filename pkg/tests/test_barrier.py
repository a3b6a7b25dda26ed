import numpy as np
import pytest
import sympy as sp

from drcbf.barrier import (ClassK, IntegratorObstacleChain, ObstacleSpec, UnicycleObstacleChain, eval_fd, eval_fv,
                           eval_h, eval_psi, lie_derivatives, make_chain)
from drcbf.dynamics import eval_dynamics, unicycle

OB = ObstacleSpec(32.5, 25.0, 5.0)
CHAIN = UnicycleObstacleChain(OB)
UNI = unicycle()


def _sym_chain(p1=1, p2=1):
    """Independent symbolic psi-chain for the unicycle obstacle barrier."""
    x, y, th, v, u1, u2, d1, d2 = sp.symbols("x y theta v u1 u2 d1 d2", real=True)
    state = [x, y, th, v]
    field = [v * sp.cos(th) + d1, v * sp.sin(th) + d2, u1, u2]
    h = (x - OB.x_o) ** 2 + (y - OB.y_o) ** 2 - OB.D ** 2

    def dot(expr):
        return sum(sp.diff(expr, s) * f for s, f in zip(state, field))

    psi1 = dot(h) + p1 * h
    psi2 = dot(psi1) + p2 * psi1
    syms = (x, y, th, v, u1, u2, d1, d2)
    return syms, h, psi1, psi2


SYMS, H_S, PSI1_S, PSI2_S = _sym_chain()
PSI1_F = sp.lambdify(SYMS, PSI1_S, "math")
PSI2_F = sp.lambdify(SYMS, PSI2_S, "math")
X_S, U_S, D_S = SYMS[:4], SYMS[4:6], SYMS[6:]


def _random_states(rng, n=100):
    return np.column_stack([rng.uniform(0, 50, n), rng.uniform(0, 50, n), rng.uniform(-np.pi, np.pi, n),
                            rng.uniform(-0.5, 2.5, n)])


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def test_eval_h_examples():
    assert eval_h(OB, (32.5, 25.0, 0, 0)) == -25.0
    assert eval_h(OB, (37.5, 25.0, 0, 0)) == 0.0
    assert eval_h(OB, (5.0, 25.0, 0, 0)) == 731.25


def test_psi_examples():
    psi = eval_psi(CHAIN, (27.5, 25.0, 0.0, 1.0))
    assert psi[0] == 0.0 and psi[1] == -10.0


def test_psi1_equals_h_at_rest(rng):
    for x in _random_states(rng, 20):
        x[3] = 0.0
        assert eval_psi(CHAIN, x)[1] == pytest.approx(eval_h(OB, x), rel=1e-14)


def test_fv_examples():
    assert eval_fv(CHAIN, (27.5, 25.0, 0.0, 1.0), (0, 0)) == pytest.approx(-18.0, abs=1e-12)
    # at rest only the alpha terms survive: p1 * p2 * h
    x = np.array([10.0, 20.0, 0.4, 0.0])
    assert eval_fv(CHAIN, x, (0, 0)) == pytest.approx(eval_h(OB, x), rel=1e-14)


def test_fd_examples(rng):
    for x in _random_states(rng, 10):
        assert eval_fd(CHAIN, x, (0.0, 0.0)) == 0.0
    assert eval_fd(CHAIN, (0.0, 0.0, 0.0, 1.0), (0.3, 0.0)) == pytest.approx(-37.62, abs=1e-12)


def test_psi_against_symbolic(rng):
    for x in _random_states(rng):
        u = rng.uniform(-2, 2, 2)
        d = rng.uniform(-0.3, 0.3, 2)
        psi = eval_psi(CHAIN, x, d, u)
        args = (*x, *u, *d)
        assert _rel(psi[1], PSI1_F(*args)) < 1e-9
        assert _rel(psi[2], PSI2_F(*args)) < 1e-9


def test_fv_plus_fd_is_psi2(rng):
    for x in _random_states(rng):
        u = rng.uniform(-2, 2, 2)
        d = rng.uniform(-0.3, 0.3, 2)
        total = eval_fv(CHAIN, x, u) + eval_fd(CHAIN, x, d)
        assert _rel(total, eval_psi(CHAIN, x, d, u)[2]) < 1e-9
        assert eval_fv(CHAIN, x, u) == eval_psi(CHAIN, x, None, u)[2]


def test_lie_against_symbolic(rng):
    psi1_0 = PSI1_S.subs({D_S[0]: 0, D_S[1]: 0, U_S[0]: 0, U_S[1]: 0})
    grad = [sp.diff(psi1_0, s) for s in X_S]
    th, v = X_S[2], X_S[3]
    Lf = sp.lambdify(X_S, grad[0] * v * sp.cos(th) + grad[1] * v * sp.sin(th), "math")
    Lg = sp.lambdify(X_S, [grad[2], grad[3]], "math")
    Lp = sp.lambdify(X_S, [grad[0], grad[1]], "math")
    for x in _random_states(rng):
        lb = lie_derivatives(CHAIN, x)
        assert _rel(lb.Lf_psi, Lf(*x)) < 1e-9
        assert _rel(lb.Lg_psi, Lg(*x)) < 1e-9
        assert _rel(lb.Lp_psi, Lp(*x)) < 1e-9
        assert _rel(lb.psi_prev, float(psi1_0.subs(dict(zip(X_S, x))))) < 1e-9


def test_lie_against_finite_differences(rng):
    eps = 1e-6
    for x in _random_states(rng):
        lb = lie_derivatives(CHAIN, x)

        def directional(vec):
            return (CHAIN.psi(x + eps * vec)[1] - CHAIN.psi(x - eps * vec)[1]) / (2 * eps)

        assert _rel(lb.Lf_psi, directional(UNI.f(x))) < 1e-6
        assert _rel(lb.Lg_psi, [directional(col) for col in UNI.g(x).T]) < 1e-6
        assert _rel(lb.Lp_psi, [directional(col) for col in UNI.p(x).T]) < 1e-6


def test_lie_examples():
    x = np.array([20.0, 30.0, 0.7, 0.0])
    lb = lie_derivatives(CHAIN, x)
    assert lb.Lg_psi[0] == 0.0
    assert lb.Lg_psi[1] == pytest.approx(2 * (x[0] - OB.x_o) * np.cos(0.7) + 2 * (x[1] - OB.y_o) * np.sin(0.7))
    np.testing.assert_array_equal(lb.dist_direct, [2 * (x[0] - OB.x_o), 2 * (x[1] - OB.y_o)])
    # input does not reach the disturbance term of psi_1
    assert np.all(lb.Lg_Lph == 0.0)


def test_relative_degree(rng):
    # L_g h = 0: h depends on position only, inputs act on heading and speed
    for x in _random_states(rng, 50):
        gradh = np.array([2 * (x[0] - OB.x_o), 2 * (x[1] - OB.y_o), 0.0, 0.0])
        assert np.all(gradh @ UNI.g(x) == 0.0)


def test_chain_consistency_finite_slope(rng):
    delta = 1e-5
    for x in _random_states(rng, 30):
        u = rng.uniform(-1, 1, 2)
        d = rng.uniform(-0.3, 0.3, 2)
        xdot = eval_dynamics(UNI, x, u, d)
        slope = (CHAIN.psi(x + delta * xdot, d)[1] - CHAIN.psi(x - delta * xdot, d)[1]) / (2 * delta)
        expected = CHAIN.psi(x, d, u)[2]
        psi1 = CHAIN.psi(x, d)[1]
        assert _rel(slope + psi1, expected) < 1e-6


def test_power_class_k_chain(rng):
    a = (ClassK("power", 0.5, 2.0), ClassK("power", 2.0, 1.5))
    chain = UnicycleObstacleChain(OB, a)
    delta = 1e-6
    for x in _random_states(rng, 20):
        u = rng.uniform(-1, 1, 2)
        d = rng.uniform(-0.3, 0.3, 2)
        xdot = eval_dynamics(UNI, x, u, d)
        slope = (chain.psi(x + delta * xdot, d)[1] - chain.psi(x - delta * xdot, d)[1]) / (2 * delta)
        psi1 = chain.psi(x, d)[1]
        assert _rel(slope + a[1](psi1), chain.psi(x, d, u)[2]) < 1e-5


def test_class_k_properties():
    for k in (ClassK(), ClassK("linear", 3.0), ClassK("power", 1.0, 2.0), ClassK("power", 0.5, 3.0)):
        s = np.linspace(0, 10, 500)
        vals = k(s)
        assert k(0.0) == 0.0
        assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        ClassK("power", 1.0, 0.5)
    with pytest.raises(ValueError):
        ClassK("linear", -1.0)
    with pytest.raises(ValueError):
        ObstacleSpec(0, 0, 0.0)


def test_integrator_chain():
    chain = make_chain("single_integrator", ObstacleSpec(0.0, 0.0, 1.0))
    assert isinstance(chain, IntegratorObstacleChain)
    x = np.array([2.0, 1.0])
    lb = chain.lie(x)
    np.testing.assert_array_equal(lb.Lg_psi, [4.0, 2.0])
    assert lb.Lf_psi + lb.alpha_psi == pytest.approx(4.0)
    assert chain.fv(x, [1.0, 0.0]) + chain.fd(x, [0.1, 0.2]) == pytest.approx(chain.psi(x, [0.1, 0.2], [1.0, 0.0])[1])
    assert not chain.mismatched and CHAIN.mismatched
