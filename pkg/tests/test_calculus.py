import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covcalc import calculus as ca
from covcalc import covmeasure as cm
from covcalc import kernels as kr
from covcalc import simulate as sm
from covcalc.calculus import CylindricalFunctional as Cyl, ElementaryProcess as Elem, StepFunction
from covcalc.calculus.smooth import Ridge, random_function
from covcalc.errors import DomainError

from conftest import FAMILIES

G16 = cm.Grid(16, 1.0)


def ensemble(k, n=16, M=2000, seed=1):
    g = cm.Grid(n, 1.0)
    return sm.simulate(k, g, M, seed), cm.build_measure(k, g)


def random_cyl(rng, grid, k=None):
    k = k or int(rng.integers(1, 4))
    return Cyl(tuple(StepFunction.random(grid, rng) for _ in range(k)), random_function(rng, k))


def random_elem(rng, grid, terms=2):
    return Elem(tuple((StepFunction.random(grid, rng), random_cyl(rng, grid)) for _ in range(terms)))


# ---------------------------------------------------------------- step functions

vals = st.lists(st.floats(-5, 5), min_size=16, max_size=16)


@given(vals, vals)
def test_step_algebra(a, b):
    f, g = StepFunction(G16, a), StepFunction(G16, b)
    assert np.array_equal((f + g).values, np.add(a, b))
    assert np.array_equal((f * g).values, np.multiply(a, b))
    assert np.array_equal((f - f).values, np.zeros(16))
    assert np.array_equal(f.abs().values, np.abs(a))


def test_step_indicator_and_eval():
    f = StepFunction.indicator(G16, 0.25, 0.5)
    assert f.values.sum() == 4
    assert f(0.3) == 1 and f(0.25) == 0 and f(0.5) == 1
    assert list(f.breakpoints()) == [0, 0.25, 0.5, 1.0]
    with pytest.raises(DomainError):
        StepFunction(G16, np.ones(3))


# ---------------------------------------------------------------- Wiener integrals

@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_wiener_variance(name, rng):
    ens, m = ensemble(FAMILIES[name], M=20000)
    phi = StepFunction.random(m.grid, rng, 5)
    est = ca.variance_estimate(ca.wiener_integral(ens, phi))
    assert ca.agree(est, ca.h_inner(m, phi, phi))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(sorted(FAMILIES)), vals)
def test_norm_chain(name, v):
    m = cm.build_measure(FAMILIES[name], G16)
    a, b, c = ca.norm_chain(m, StepFunction(G16, v))
    assert a <= b * (1 + 1e-12) + 1e-15 and b <= c * (1 + 1e-12) + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(FAMILIES)), vals)
def test_variance_split(name, v):
    m = cm.build_measure(FAMILIES[name], G16)
    lhs, rhs = ca.variance_split_check(m, StepFunction(G16, v))
    assert abs(lhs - rhs) <= 1e-10


def test_abs_norm_ratio_bm_is_one(rng):
    m = cm.build_measure(kr.bm(), cm.Grid(64, 1.0))
    assert ca.abs_norm_ratio_scan(m, rng, count=20) == pytest.approx(1.0)


def test_wiener_upto():
    ens, _ = ensemble(kr.fbm(0.7), M=5)
    one = StepFunction.constant(ens.grid, 1.0)
    assert np.allclose(ca.wiener_integral(ens, one, upto=0.5), ens.at(0.5), atol=1e-14)


# ---------------------------------------------------------------- regularization

def test_forward_backward_equal_wiener_at_h(rng):
    ens, _ = ensemble(kr.bifbm(0.75, 2 / 3), M=50)
    phi = StepFunction.random(ens.grid, rng)
    w = ca.wiener_integral(ens, phi)
    assert np.allclose(ca.forward_integral(phi, ens, G16.h), w, atol=1e-13)
    assert np.allclose(ca.backward_integral(phi, ens, G16.h), w, atol=1e-13)


def test_forward_x_dx_identity():
    # sum X_i dX_i = (X_T^2 - sum dX_i^2) / 2
    ens, _ = ensemble(kr.fbm(0.7), M=50)
    X = ens.paths
    lhs = ca.forward_integral(X, ens, G16.h)
    rhs = 0.5 * (X[:, -1] ** 2 - ca.covariation(ens, eps=G16.h))
    assert np.allclose(lhs, rhs, atol=1e-13)
    # symmetric integral at eps = h is exactly X_T^2 / 2
    assert np.allclose(ca.symmetric_integral(X, ens, G16.h), 0.5 * X[:, -1] ** 2, atol=1e-13)


@pytest.mark.parametrize("name", ["bm", "bifbm", "fbm", "martingale_sq"])
def test_covariation_mean(name):
    ens, m = ensemble(FAMILIES[name], n=64, M=20000)
    for eps in (1 / 64, 1 / 16):
        est = ca.MonteCarloEstimate.from_samples(ca.covariation(ens, eps=eps, upto=0.75))
        assert ca.agree(est, ca.expected_covariation(m, eps, upto=0.75))


def test_eps_validation():
    ens, _ = ensemble(kr.bm(), M=3)
    with pytest.raises(DomainError):
        ca.forward_integral(1.0, ens, 0.01)
    with pytest.raises(DomainError):
        ca.covariation(ens)


# ---------------------------------------------------------------- smooth functions

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 4))
def test_smooth_derivatives(seed, dim):
    rng = np.random.default_rng(seed)
    f = random_function(rng, dim)
    y = rng.normal(size=(3, dim))
    e = 1e-6
    for j in range(dim):
        d = np.zeros(dim)
        d[j] = e
        fd = (f.value(y + d) - f.value(y - d)) / (2 * e)
        assert np.allclose(f.grad(y)[:, j], fd, atol=1e-6)
        fdg = (f.grad(y + d) - f.grad(y - d)) / (2 * e)
        assert np.allclose(f.hess(y)[:, :, j], fdg, atol=1e-6)


def test_identity_profile():
    f = Ridge("identity", [1.0])
    y = np.array([[0.3], [-2.0]])
    assert np.allclose(f.value(y), y[:, 0], atol=1e-8)
    assert np.allclose(f.grad(y), 1.0, atol=1e-8)


# ---------------------------------------------------------------- Malliavin calculus

@pytest.mark.parametrize("name", ["fbm", "bifbm", "mixedfbm", "martingale"])
def test_exact_identities(name, rng):
    ens, m = ensemble(FAMILIES[name], M=200)
    for _ in range(3):
        F, u = random_cyl(rng, m.grid), random_elem(rng, m.grid)
        assert ca.product_rule_gap(F, u, ens, m) <= 1e-10
        assert ca.commutation_gap(u, ens, m, cells=range(0, 16, 5)) <= 1e-10
        fam = [(rng.normal(), random_elem(rng, m.grid, 1)) for _ in range(3)]
        assert ca.fubini_gap(fam, ens, m) <= 1e-10


def test_skorohod_of_deterministic_is_wiener(rng):
    ens, m = ensemble(kr.fbm(0.7), M=100)
    psi = StepFunction.random(m.grid, rng)
    d = ca.skorohod_cylindrical(Elem.deterministic(psi), ens, m)
    assert np.allclose(d, ca.wiener_integral(ens, psi), atol=1e-14)


def test_derivative_of_linear_functional(rng):
    ens, m = ensemble(kr.fbm(0.7), M=10)
    phi = StepFunction.random(m.grid, rng)
    F = Cyl((phi,), Ridge("identity", [1.0]))
    assert np.allclose(ca.malliavin_derivative(F, ens), phi.values, atol=1e-8)


@pytest.mark.parametrize("name", ["fbm", "bifbm", "martingale_sq"])
def test_duality(name, rng):
    ens, m = ensemble(FAMILIES[name], M=30000, seed=9)
    F, u = random_cyl(rng, m.grid), random_elem(rng, m.grid)
    lhs, rhs, se = ca.duality_check(F, u, ens, m)
    assert abs(lhs.mean - rhs.mean) <= 4 * se
    h = StepFunction.random(m.grid, rng)
    lhs, rhs, se = ca.integration_by_parts_check(F, h, ens, m)
    assert abs(lhs.mean - rhs.mean) <= 4 * se


def test_skorohod_variance_formula(rng):
    ens, m = ensemble(kr.bifbm(0.75, 2 / 3), M=30000, seed=4)
    u = random_elem(rng, m.grid)
    mc, formula = ca.skorohod_variance_check(u, ens, m)
    assert abs(mc.mean - formula.mean) <= 4 * np.hypot(mc.std_error, formula.std_error)


def test_skorohod_variance_bm_closed_form():
    # u_s = X_{t_j} on cell j: E delta^2 = t^2/2 (1 - h/t) on the grid
    ens, m = ensemble(kr.bm(), M=20000)
    g = m.grid
    terms = [(StepFunction.indicator(g, g.points[j], g.points[j + 1]),
              Cyl((StepFunction.indicator(g, 0, g.points[j]),), Ridge("identity", [1.0])))
             for j in range(1, g.n)]
    mc, formula = ca.skorohod_variance_check(Elem(tuple(terms)), ens, m)
    assert ca.agree(formula, 0.5 * (1 - g.h)) and ca.agree(mc, 0.5 * (1 - g.h))


@pytest.mark.parametrize("k", [kr.fbm(0.7), kr.bifbm(0.75, 2 / 3), kr.bm()])
def test_trace_formula_matches_elementary(k):
    # forward integral minus trace equals delta of the left-point step process
    ens, m = ensemble(k, M=50)
    g = m.grid
    terms = [(StepFunction.indicator(g, g.points[j], g.points[j + 1]),
              Cyl((StepFunction.indicator(g, 0, g.points[j]),), Ridge("sin", [1.0])))
             for j in range(g.n)]
    d = ca.skorohod_cylindrical(Elem(tuple(terms)), ens, m)
    tr = ca.skorohod_via_trace(np.sin, np.cos, ens, m)
    assert np.allclose(d, tr, atol=1e-12)


def test_trace_formula_bm_square():
    ens, m = ensemble(kr.bm(), M=50)
    d = ca.skorohod_via_trace(lambda x: x, np.ones_like, ens, m)
    X = ens.paths
    assert np.allclose(d, 0.5 * (X[:, -1] ** 2 - (np.diff(X, axis=1) ** 2).sum(axis=1)), atol=1e-13)


# ---------------------------------------------------------------- estimates and tolerances

def test_estimate():
    e = ca.MonteCarloEstimate.from_samples([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5 and e.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert e.to_dict() == {"mean": 2.5, "std_error": e.std_error, "M": 4}
    with pytest.raises(DomainError):
        ca.MonteCarloEstimate.from_samples([1.0])


def test_override_tolerances():
    e = ca.MonteCarloEstimate(1.0, 0.1, 100)
    assert not ca.agree(e, 1.5)
    with ca.override_tolerances(mc_sigmas=6):
        assert ca.TOL.mc_sigmas == 6 and ca.agree(e, 1.5)
    assert ca.TOL.mc_sigmas == 4
    with pytest.raises(DomainError):
        with ca.override_tolerances(bogus=1):
            pass
