import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import MBBM, ORACLE_WAVES, W0, W0_C15, W1, cached_origin, cached_table
from wavelab.errors import DegenerateJacobian
from wavelab.indices import (
    Modulational,
    bracket2,
    bracket3,
    classify,
    cubic_coefficients,
    cubic_discriminant,
    delta_from,
    delta_printed_variant,
    delta_terms,
    eval_index_formula,
    modulational_delta,
    nullspace_residuals,
)
from wavelab.spectrum import cubic_roots
from wavelab.wave_family import GradientTable, WaveParams, gradient_table

F = ("T", "M", "P")
X = ("a", "E", "c")
DN = WaveParams(0.0, -0.01, 2.0, 1.0)
CN = WaveParams(0.0, 0.02, 2.0, 0.0)
HARMONIC = WaveParams(0.0, -0.249, 2.0, 1.0)


def _table(values):
    return GradientTable(np.asarray(values, dtype=float))


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@given(arrays(float, (3, 3), elements=finite), st.sampled_from(F), st.sampled_from(F),
       st.sampled_from(X), st.sampled_from(X))
def test_bracket_antisymmetry(values, g, h, x, y):
    t = _table(values)
    assert bracket2(g, h, x, y, t) == -bracket2(h, g, x, y, t)
    assert bracket2(g, h, x, y, t) == -bracket2(g, h, y, x, t)
    assert bracket2(g, g, x, y, t) == 0.0
    assert bracket2(g, h, x, x, t) == 0.0


@given(arrays(float, (2, 3), elements=finite), st.integers(0, 1))
def test_bracket3_repeated_row_vanishes(rows, k):
    values = np.vstack([rows, rows[k]])
    assert abs(bracket3(_table(values))) <= 1e-9 * max(1.0, np.abs(rows).max()) ** 3


@given(arrays(float, (3, 3), elements=finite))
def test_bracket3_is_determinant(values):
    assert bracket3(_table(values)) == pytest.approx(np.linalg.det(values), abs=1e-6 * max(1.0, np.abs(values).max()) ** 3)


def test_bracket_step_halving():
    a = bracket2("T", "M", "a", "E", cached_table(W0, MBBM))
    b = bracket2("T", "M", "a", "E", gradient_table(W0, MBBM, rel_step=5e-6))
    assert np.isfinite(a) and a != 0
    assert b == pytest.approx(a, rel=1e-4)


def test_long_wave_jacobian_sign():
    t = gradient_table(WaveParams(0.0, 1e-3, 2.0, 0.0), MBBM)
    assert np.sign(bracket3(t)) == np.sign(-t.T_E * t.M_a * t.P_c)


@pytest.mark.parametrize("wave", sorted(ORACLE_WAVES))
def test_jacobian_matches_evans_cubic(wave):
    params, nl = ORACLE_WAVES[wave]
    jac3 = bracket3(cached_table(params, nl))
    assert -cached_origin(params, nl).cubic_coefficient == pytest.approx(jac3, rel=1e-3)


# --- discriminant -------------------------------------------------------------

@settings(max_examples=200)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 20))
def test_delta_is_cubic_discriminant(jac3, t2, tau):
    coeffs = cubic_coefficients(jac3, t2, tau)
    d = delta_from(jac3, t2, tau)
    ref = cubic_discriminant(coeffs)
    scale = max(abs(x) for x in delta_terms(jac3, t2, tau)) + 1.0
    assert d == pytest.approx(ref, abs=1e-9 * scale)
    assert sum(delta_terms(jac3, t2, tau)) == pytest.approx(d, abs=1e-9 * scale)


@settings(max_examples=200)
@given(st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3), st.floats(-50, 50), st.floats(0.1, 20))
def test_delta_sign_counts_real_roots(jac3, t2, tau):
    coeffs = cubic_coefficients(jac3, t2, tau)
    d = delta_from(jac3, t2, tau)
    scale = max(abs(x) for x in delta_terms(jac3, t2, tau))
    if abs(d) < 1e-6 * scale:
        return
    roots = cubic_roots(coeffs)
    n_real = int(np.sum(np.abs(np.imag(roots)) <= 1e-9 * np.abs(roots)))
    assert n_real == (3 if d > 0 else 1)


def test_printed_variant_differs():
    jac3, t2, tau = 279.4269, 151.6195, 4.150271
    assert delta_printed_variant(jac3, t2, tau) != pytest.approx(delta_from(jac3, t2, tau), rel=1e-3)


def test_delta_harmonic_limit_agrees_with_roots():
    from wavelab.spectrum import projective_cubic
    t = cached_table(HARMONIC, MBBM)
    d = modulational_delta(HARMONIC, MBBM, table=t)
    assert d > 0
    assert projective_cubic(HARMONIC, MBBM, table=t).all_real


def test_delta_long_cnoidal_negative():
    assert modulational_delta(CN, MBBM, table=cached_table(CN, MBBM)) < 0


def test_delta_dnoidal_positive():
    assert modulational_delta(DN, MBBM, table=cached_table(DN, MBBM)) > 0


def test_degenerate_jacobian_raises():
    t = cached_table(W0, MBBM)
    v = t.values.copy()
    v[2] = v[1]
    bad = dataclasses.replace(t, values=v)
    with pytest.raises(DegenerateJacobian):
        modulational_delta(W0, MBBM, table=bad)
    rep = classify(W0, MBBM, with_sign_at_infinity=False, table=bad)
    assert "DegenerateJacobian" in rep.degenerate
    assert rep.modulational == Modulational.DEGENERATE.value
    assert not rep.orientation_unstable and not rep.orbital_stable_sufficient


# --- trace of the second derivative --------------------------------------------

@pytest.mark.parametrize("params", [W0, W1, W0_C15], ids=["W0", "W1", "W0_C15"])
def test_trace_identity_gradient_form(params):
    ev = eval_index_formula(params, MBBM, cached_table(params, MBBM))
    assert ev.gradient == pytest.approx(cached_origin(params, MBBM).tr_m2, rel=1e-6)


@pytest.mark.xfail(strict=True, reason="neither bracket formula with a V'(u_-) term reproduces the contour trace")
@pytest.mark.parametrize("params", [W0, W1, W0_C15], ids=["W0", "W1", "W0_C15"])
def test_trace_identity_bracket_variants(params):
    ev = eval_index_formula(params, MBBM, cached_table(params, MBBM))
    t2 = cached_origin(params, MBBM).tr_m2
    assert min(abs(ev.statement - t2), abs(ev.proof - t2)) < 1e-3 * abs(t2)


def test_trace_reference_w0():
    ev = eval_index_formula(W0, MBBM, cached_table(W0, MBBM))
    assert ev.statement == pytest.approx(180.87, abs=0.01)
    assert ev.proof == pytest.approx(164.38, abs=0.01)
    assert ev.gradient == pytest.approx(151.6195, abs=1e-3)


# --- classification -----------------------------------------------------------

def test_classify_dnoidal_near_separatrix():
    rep = classify(DN, MBBM, with_sign_at_infinity=False, table=cached_table(DN, MBBM))
    assert rep.orbital_stable_sufficient
    assert rep.modulational == "stable_triple_axis"
    assert not rep.orientation_unstable


def test_classify_long_cnoidal():
    rep = classify(CN, MBBM, with_sign_at_infinity=False, table=cached_table(CN, MBBM))
    assert rep.orientation_unstable
    assert rep.jac3 < 0
    assert rep.modulational == "unstable_two_curves"


def test_classify_w0_report():
    rep = classify(W0, MBBM, table=cached_table(W0, MBBM))
    assert rep.sign_at_infinity == -1
    assert rep.eval_index_match == "gradient"
    assert rep.residual_d3 < 1e-3
    assert rep.residual_a_prime < 1e-6
    assert rep.modulational == "stable_triple_axis"
    d = rep.to_dict()
    assert d["modulational"] == "stable_triple_axis"
    if rep.orientation_unstable:
        assert rep.jac3 < 0


@pytest.mark.parametrize("params", [W0, DN, CN], ids=["W0", "DN", "CN"])
def test_classify_invariant_under_refinement(params):
    base = classify(params, MBBM, with_sign_at_infinity=False, table=cached_table(params, MBBM))
    t = cached_table(params, MBBM)
    fine = gradient_table(params, MBBM, rel_step=5e-6, nodes=4 * t.base.n_nodes)
    ref = classify(params, MBBM, with_sign_at_infinity=False, table=fine)
    for flag in ("orientation_unstable", "iff_instability", "orbital_stable_sufficient", "modulational"):
        assert getattr(ref, flag) == getattr(base, flag)


# --- generalised kernel -------------------------------------------------------

def test_nullspace_w0():
    chk = nullspace_residuals(W0, MBBM, table=cached_table(W0, MBBM))
    rel = chk.relative()
    assert rel["JLphi1"] < 1e-5
    assert rel["JLphi0"] < 1e-4
    assert chk.phi2_momentum == pytest.approx(chk.jac3, rel=1e-3)
    assert chk.phi0_mass == pytest.approx(chk.tm_ae, rel=1e-3)
    assert rel["<phi0,Du>"] < 1e-3


def test_nullspace_symmetric_cnoidal():
    rel = nullspace_residuals(W1, MBBM, table=cached_table(W1, MBBM)).relative()
    assert max(rel.values()) < 1e-4
