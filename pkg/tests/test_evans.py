import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BBM, MBBM, REFERENCE, W0, W1, WB, cached_origin, cached_table
from wavelab.evans import (
    TraceSeries,
    coefficient_matrix,
    evans,
    evans_coeffs,
    evans_local,
    monodromy,
    monodromy_batch,
    sign_at_infinity,
    trace_series,
)
from wavelab.indices import bracket3
from wavelab.wave_family import conserved_set, sample_profile


def test_coefficient_matrix_trace():
    for u, ux in [(0.3, 0.2), (1.1, -0.5)]:
        H = coefficient_matrix(u, ux, 0.4 + 0.3j, W0, MBBM)
        assert np.trace(H) == pytest.approx((0.4 + 0.3j) / W0.c, abs=1e-15)


def test_monodromy_identity_at_zero_det():
    m = monodromy(W0, MBBM, 0.0)
    assert abs(np.linalg.det(m.mat) - 1) < 1e-9


def test_abel_w0():
    m = monodromy(W0, MBBM, 0.5)
    T = conserved_set(W0, MBBM).T
    assert abs(np.linalg.det(m.mat) - np.exp(0.5 * T / 2)) < 1e-8 * np.exp(0.5 * T / 2)
    assert m.abel_residual < 1e-8


def test_translation_mode_fixed_by_monodromy():
    prof = sample_profile(W0, MBBM, 8)
    u, ux = prof.u[0], prof.ux[0]
    uxx = -(u**3 - W0.a - (W0.c - 1) * u) / W0.c
    v = np.array([0.0, W0.c * uxx, 0.0])
    m = monodromy(W0, MBBM, 0.0).mat
    assert abs(ux) < 1e-12
    assert np.linalg.norm(m @ v - v) < 1e-7 * np.linalg.norm(v)


def test_evans_triple_root_value():
    assert abs(evans(W0, MBBM, 0.0, 1.0)) < 1e-8


def test_evans_at_zero_lambda():
    T = conserved_set(W0, MBBM).T
    ref = np.exp(0.7 * T / 2)
    assert abs(evans(W0, MBBM, 0.7, 0.0) - ref) < 1e-8 * ref


def test_evans_vanishes_at_eigenvalue():
    m = monodromy(W0, MBBM, 0.3j).mat
    lam = np.linalg.eigvals(m)
    # on the imaginary axis the spectrum contains a unimodular eigenvalue
    k = np.argmin(np.abs(np.abs(lam) - 1))
    assert abs(abs(lam[k]) - 1) < 1e-9
    assert abs(evans(W0, MBBM, 0.3j, lam[k])) < 1e-9


def test_trace_at_origin():
    assert abs(evans_coeffs(W0, MBBM, 0.0).a_mu - 3) < 1e-7


def test_symmetry_example():
    ec = evans_coeffs(W0, MBBM, 0.4)
    assert ec.symmetry_residual < 1e-7


def test_schwarz_reflection_of_trace():
    mu = 0.2j
    a = evans_coeffs(W0, MBBM, mu).a_mu
    ac = evans_coeffs(W0, MBBM, np.conj(mu)).a_mu
    assert abs(ac - np.conj(a)) < 1e-9


@settings(max_examples=5, deadline=None)
@given(r=st.floats(min_value=0.0, max_value=1.0), th=st.floats(min_value=0.0, max_value=2 * np.pi),
       lr=st.floats(min_value=0.2, max_value=2.0), lt=st.floats(min_value=0.0, max_value=2 * np.pi))
def test_schwarz_property(r, th, lr, lt):
    mu = r * np.exp(1j * th)
    lam = lr * np.exp(1j * lt)
    M = monodromy_batch(W0, MBBM, [mu, np.conj(mu)])
    d = np.linalg.det(M[0] - lam * np.eye(3))
    dc = np.linalg.det(M[1] - np.conj(lam) * np.eye(3))
    assert abs(dc - np.conj(d)) < 1e-9 * max(1.0, abs(d))


@settings(max_examples=8, deadline=None)
@given(r=st.floats(min_value=0.0, max_value=1.0), th=st.floats(min_value=0.0, max_value=2 * np.pi),
       wave=st.sampled_from(sorted(REFERENCE)))
def test_abel_and_symmetry_property(r, th, wave):
    params, nl = REFERENCE[wave]
    mu = r * np.exp(1j * th)
    assert monodromy(params, nl, mu).abel_residual < 1e-8
    assert evans_coeffs(params, nl, mu).symmetry_residual < 1e-7


# --- derivatives at the origin -----------------------------------------------

def test_origin_triple_root():
    od = cached_origin(W0, MBBM)
    r = od.contour_radius
    d = od.d_taylor
    assert abs(d[1]) < 1e-6 * abs(d[3]) * r**2
    assert abs(d[2]) < 1e-6 * abs(d[3]) * r
    assert max(od.lower_order_ratios) < 1e-6


def test_origin_cubic_matches_jacobian():
    od = cached_origin(W0, MBBM)
    jac3 = bracket3(cached_table(W0, MBBM))
    assert jac3 == pytest.approx(279.4269, abs=1e-3)
    assert od.cubic_coefficient == pytest.approx(-jac3, rel=1e-3)
    assert od.d3_evans == pytest.approx(6 * od.cubic_coefficient)


def test_a_prime_equals_period_over_speed():
    od = cached_origin(W0, MBBM)
    assert od.a_prime_residual < 1e-6
    assert od.tr_m2 == pytest.approx(151.6195, abs=1e-3)
    assert od.b_prime == pytest.approx(0.0, abs=1e-6 * od.a_prime)
    assert od.b_second_residual < 1e-6


def test_origin_radius_independent():
    from wavelab.evans import origin_derivatives
    a = cached_origin(W0, MBBM)
    b = origin_derivatives(W0, MBBM, radius=0.5 * a.contour_radius)
    assert b.cubic_coefficient == pytest.approx(a.cubic_coefficient, rel=1e-7)
    assert b.tr_m2 == pytest.approx(a.tr_m2, rel=1e-7)


@pytest.mark.parametrize("wave", ["W1", "WB"])
def test_origin_cubic_other_waves(wave):
    params, nl = REFERENCE[wave]
    od = cached_origin(params, nl)
    assert od.cubic_coefficient == pytest.approx(-bracket3(cached_table(params, nl)), rel=1e-3)
    assert od.a_prime_residual < 1e-6


# --- structured local evaluation ---------------------------------------------

def test_trace_series_matches_direct_evaluation():
    ser = trace_series(W0, MBBM)
    assert isinstance(ser, TraceSeries)
    mu = 0.2 * ser.radius * np.exp(0.7j)
    M = monodromy_batch(W0, MBBM, [mu])[0]
    assert abs(ser.a(mu) - np.trace(M)) < 1e-10
    for lam in [1.0, 0.9 + 0.1j, np.exp(0.3j)]:
        direct = np.linalg.det(M - lam * np.eye(3))
        assert abs(ser.evans(mu, lam) - direct) < 1e-9


def test_evans_local_small_values_have_cubic_scale():
    kappa = 1e-4
    d = evans_local(W0, MBBM, [1j * kappa], 1.0)[0]
    jac3 = bracket3(cached_table(W0, MBBM))
    # D(i kappa, 1) = -jac3 (i kappa)^3 + O(kappa^4)
    assert abs(d - (-jac3 * (1j * kappa) ** 3)) < 1e-3 * jac3 * kappa**3


# --- sign at infinity ---------------------------------------------------------

def test_sign_at_infinity_reference_waves():
    s0 = sign_at_infinity(W0, MBBM)
    assert s0 == -1
    assert sign_at_infinity(W1, MBBM) == s0
    assert sign_at_infinity(W0.replace(c=3.0, branch_hint=np.sqrt(2.0)), MBBM) == s0


def test_sign_at_infinity_values_grow():
    s, mus, vals = sign_at_infinity(WB, BBM, return_values=True)
    assert s == -1
    assert np.all(np.diff(mus) > 0)
    assert abs(vals[-1]) > abs(vals[-2]) > abs(vals[-3])
