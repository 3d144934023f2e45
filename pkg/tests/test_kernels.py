import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from covcalc import kernels as kr
from covcalc.errors import DomainError, UnsupportedError

from conftest import FAMILIES

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_examples_eval():
    assert kr.eval_covariance(kr.fbm(0.5, T=2), 1.0, 2.0) == pytest.approx(1.0, abs=1e-15)
    assert kr.eval_covariance(kr.martingale("identity"), 0.3, 0.7) == pytest.approx(0.3)
    k = kr.stationary("paper_piecewise", 0.8)
    assert kr.eval_covariance(k, 0.25, 0.25) == pytest.approx(0.25, abs=1e-15)


@given(unit, unit, st.floats(0.05, 0.95))
def test_bifbm_k1_is_fbm(s, t, H):
    a = kr.eval_covariance(kr.bifbm(H, 1.0), s, t)
    b = kr.eval_covariance(kr.fbm(H), s, t)
    assert a == pytest.approx(b, abs=1e-14)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_symmetry_and_axes(name, rng):
    k = FAMILIES[name]
    s, t = rng.uniform(0, 1, size=(2, 1000))
    assert np.array_equal(kr.eval_covariance(k, s, t), kr.eval_covariance(k, t, s))
    assert np.all(kr.eval_covariance(k, s, 0.0) == 0)
    assert np.all(kr.eval_covariance(k, 0.0, t) == 0)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_gram_psd(name):
    k = FAMILIES[name]
    p = np.linspace(0, 1, 1025)[1:]
    G = kr.eval_covariance(k, *np.meshgrid(p, p, indexing="ij"))
    ev = np.linalg.eigvalsh(G)
    assert ev[0] >= -1e-8 * ev[-1]


@given(unit, unit)
def test_bifbm_split(s, t):
    k = kr.bifbm(0.75, 2 / 3)
    r1, r2 = kr.bifbm_parts(k, s, t)
    assert r1 + r2 == pytest.approx(kr.eval_covariance(k, s, t), abs=1e-14)


@settings(max_examples=200)
@given(st.floats(0.05, 0.95), st.floats(0.05, 1.0), unit, unit)
def test_quasi_helix(H, K, s, t):
    k = kr.bifbm(H, K)
    d2 = kr.canonical_distance_sq(k, s, t)
    lo, hi = kr.quasi_helix_bounds(k, s, t)
    assert lo * (1 - 1e-9) - 1e-15 <= d2 <= hi * (1 + 1e-9) + 1e-15


def test_density_examples():
    # normalized covariance: H(2H-1)|t-s|^(2H-2)
    assert kr.offdiag_density(kr.fbm(0.75), 0.2, 0.6) == pytest.approx(0.75 * 0.5 * 0.4 ** -0.5)
    assert kr.offdiag_density(kr.martingale("identity"), 0.2, 0.6) == 0
    assert kr.offdiag_density(kr.fbm(0.3), 0.2, 0.6) is None
    assert kr.offdiag_density(kr.bifbm(0.6, 0.5), 0.2, 0.6) is None
    assert kr.offdiag_density(kr.stationary("paper_piecewise", 0.8), 0.2, 0.6) is None
    with pytest.raises(DomainError):
        kr.offdiag_density(kr.fbm(0.7), 0.4, 0.4)


def test_bifbm_critical_density_is_r1():
    H, K, s, t = 0.75, 2 / 3, 0.2, 0.6
    r1 = 4 * H * H * K * (K - 1) / 2 ** K * (s ** (2 * H) + t ** (2 * H)) ** (K - 2) * (s * t) ** (2 * H - 1)
    assert kr.offdiag_density(kr.bifbm(H, K), s, t) == pytest.approx(r1)
    assert r1 < 0


@pytest.mark.parametrize("k", [kr.fbm(0.7), kr.bifbm(0.9, 0.8), kr.mixed_fbm(0.8), kr.stationary("fbm", 0.65)])
def test_density_is_mixed_derivative(k):
    # cell mass of a rectangle away from the diagonal equals the integral of the density
    a, b, c, d = 0.1, 0.3, 0.5, 0.8
    R = lambda s, t: kr.eval_covariance(k, s, t)
    mass = R(b, d) + R(a, c) - R(a, d) - R(b, c)
    quad, _ = integrate.dblquad(lambda t, s: kr.offdiag_density(k, s, t), a, b, c, d, epsabs=1e-13, epsrel=1e-11)
    assert quad == pytest.approx(mass, rel=1e-8)


def test_energy_closed_forms():
    assert kr.energy_closed_form(kr.bifbm(0.75, 2 / 3), 1.0) == pytest.approx(2 ** (1 / 3))
    assert kr.energy_closed_form(kr.mixed_fbm(0.8, T=1), 0.5) == pytest.approx(0.5)
    assert kr.energy_closed_form(kr.fbm(0.7), 1.0) == 0
    assert kr.energy_closed_form(kr.martingale("square"), 0.5) == pytest.approx(0.25)
    assert kr.energy_closed_form(kr.fbm(0.3), 1.0) is None
    assert kr.energy_closed_form(kr.stationary("paper_piecewise", 0.8), 1.0) == pytest.approx(1.0)
    assert kr.energy_closed_form(kr.parse_kernel("bifbm:H=0.75,K=0.6667"), 1.0) == pytest.approx(2 ** (1 - 0.6667))


def test_variance_curve():
    assert kr.variance_curve(kr.fbm(0.7), 1.0) == pytest.approx(1.0)
    assert kr.variance_curve(kr.bifbm(0.75, 0.5), 0.3) == pytest.approx(0.3 ** 0.75)
    assert kr.variance_curve(kr.mixed_fbm(0.8, T=2), 2.0) == pytest.approx(2 + 2 ** 1.6)
    assert kr.variance_curve(kr.bm(), 0.0) == 0


def test_q_decomposition():
    atoms, ac = kr.q_decomposition(kr.mixed_fbm(0.8))
    assert atoms == [(0.0, 2.0)]
    assert ac(0.5) == pytest.approx(2 * 0.8 * 0.6 * 0.5 ** -0.4)
    atoms, _ = kr.q_decomposition(kr.stationary("paper_piecewise", 0.8))
    assert atoms == [(0.0, 2.0), (0.5, pytest.approx(0.6)), (-0.5, pytest.approx(0.6))]
    atoms, ac = kr.q_decomposition(kr.bm())
    assert atoms == [(0.0, 2.0)] and ac(0.3) == 0
    with pytest.raises(UnsupportedError):
        kr.q_decomposition(kr.bifbm(0.75, 0.5))


def test_piecewise_q_jump_matches_atom():
    H = 0.8
    Q = kr.q_paper_piecewise(H)
    e = 1e-7
    jump = (Q(0.5 + e) - Q(0.5)) / e - (Q(0.5) - Q(0.5 - e)) / e
    assert jump == pytest.approx(2 * H - 1, rel=1e-5)


@pytest.mark.parametrize("text", ["fbm:H=0.7", "bifbm:H=0.75,K=0.6667", "martingale:lambda=identity",
                                  "mixedfbm:H=0.8", "statinc:Q=paper_piecewise,H=0.8", "bm", "statinc:Q=bm"])
def test_parse_roundtrip(text):
    k = kr.parse_kernel(text)
    assert kr.parse_kernel(k.id) == k


def test_parse_case_and_fraction():
    assert kr.parse_kernel("BIFBM:H=0.75,K=2/3").K == pytest.approx(2 / 3)


@pytest.mark.parametrize("bad", ["fbm:Z=1", "fbm:H=1.2", "bifbm:H=0.5", "bifbm:H=0.5,K=1.5", "mixedfbm:H=0.4",
                                 "martingale:lambda=cube", "foo:H=0.5", "fbm:H", "statinc:Q=mixed,H=0.3"])
def test_parse_errors(bad):
    with pytest.raises(DomainError):
        kr.parse_kernel(bad)


def test_domain_errors():
    with pytest.raises(DomainError):
        kr.eval_covariance(kr.fbm(0.7), 1.5, 0.2)
    with pytest.raises(DomainError):
        kr.martingale(lambda t: t + 1.0)
    with pytest.raises(DomainError):
        kr.fbm(0.7, T=0)


def test_axis_powers_do_not_nan():
    assert kr.eval_covariance(kr.bifbm(0.3, 0.5), 0.0, 0.0) == 0
    assert math.isfinite(kr.eval_covariance(kr.fbm(0.2), 0.0, 1.0))
