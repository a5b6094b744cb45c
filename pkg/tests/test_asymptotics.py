import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import MBBM
from wavelab.asymptotics import (
    PowerLaw,
    Verdict,
    arbitrate_scaling,
    classify_solitary_limit,
    critical_speed,
    finite_part_moments,
    mass_a_limit,
    mass_a_ratio,
    momentum_dc_limit,
    pf_matrix,
    picard_fuchs,
    radicand_discriminant,
    radicand_discriminant_closed,
    scaling_map,
    sech_integral,
    sech_integral_quadrature,
    solitary_limit_consistency,
)
from wavelab.errors import SingularSystem
from wavelab.wave_family import WaveParams, gradient_table


# --- power law and scaling ----------------------------------------------------

def test_power_law_validation():
    with pytest.raises(ValueError):
        PowerLaw(0.5)
    with pytest.raises(ValueError):
        PowerLaw(2, "other")
    assert PowerLaw(2).nonlinearity().label == "u^3"


def test_amplitude_vanishes_as_speed_tends_to_one():
    amps = [scaling_map(0.0, -0.01, 1 + d, 2).amplitude for d in (1e-1, 1e-3, 1e-6)]
    assert amps == sorted(amps, reverse=True)
    assert amps[-1] == pytest.approx(1e-3)


def test_scaling_identity_at_unit_prefactor():
    assert scaling_map(0.0, -0.01, 2.0, 2).verify() < 1e-9


def test_scaling_arbitration():
    out = arbitrate_scaling(0.0, -0.01, 3.0, 2, v_hint=1.0)
    assert out["selected"] == "shifted"
    assert out["shifted"] < 1e-8
    assert out["printed"] > 1e-2


@settings(max_examples=6, deadline=None)
@given(c=st.floats(1.2, 4.0), p=st.sampled_from([1.0, 2.0, 3.0]), E=st.floats(-0.02, -0.002))
def test_shifted_scaling_property(c, p, E):
    law = PowerLaw(p)
    hint = law.well_minimum(2.0)
    sm = scaling_map(0.0, E * (2.0 - 1) ** (1 + 2 / p), c, p, "shifted", v_hint=hint)
    assert sm.verify(64) < 1e-8 * max(1.0, sm.amplitude)


# --- solitary-limit closed forms ----------------------------------------------

@pytest.mark.parametrize("r,expected", [(2, 2.0), (4, 4 / 3), (1, math.pi)])
def test_sech_integral_values(r, expected):
    assert sech_integral(r) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("r", [1, 2, 3, 4, 4 / 3, 0.5])
def test_sech_integral_quadrature(r):
    assert sech_integral(r) == pytest.approx(sech_integral_quadrature(r), rel=1e-10)


def test_momentum_derivative_signs():
    assert momentum_dc_limit(2, 2) > 0
    assert momentum_dc_limit(5, 1.05) < 0


@pytest.mark.parametrize("p", [4.5, 5, 6, 8])
def test_momentum_derivative_vanishes_at_critical_speed(p):
    assert abs(momentum_dc_limit(p, critical_speed(p))) < 1e-10


def test_critical_speed_values():
    assert critical_speed(4) == pytest.approx(1.0, abs=1e-15)
    assert critical_speed(5) == pytest.approx(5 * (1 + math.sqrt(4.5)) / 14, rel=1e-15)
    assert critical_speed(5) == pytest.approx(1.114757, abs=1e-6)
    ps = np.linspace(4, 20, 65)
    assert np.all(np.diff([critical_speed(p) for p in ps]) > 0)


@settings(max_examples=50)
@given(p=st.floats(4.2, 20.0), frac=st.floats(0.05, 0.95))
def test_momentum_derivative_sign_brackets_critical_speed(p, frac):
    c0 = critical_speed(p)
    below = 1 + frac * (c0 - 1)
    assert momentum_dc_limit(p, below) < 0
    assert momentum_dc_limit(p, c0 + frac) > 0


def test_classify_solitary_limit_examples():
    assert classify_solitary_limit(2, 2) is Verdict.STABLE
    assert classify_solitary_limit(5, 1.05) is Verdict.UNSTABLE
    assert classify_solitary_limit(5, 1.2) is Verdict.STABLE
    assert classify_solitary_limit(4, 3) is Verdict.CRITICAL
    assert classify_solitary_limit(5, critical_speed(5)) is Verdict.CRITICAL


# --- Picard-Fuchs ---------------------------------------------------------------

def test_pf_odd_moments_vanish():
    pf = picard_fuchs(0.1, 2.0)
    norm = np.linalg.norm(pf.I)
    assert max(abs(pf.I[1]), abs(pf.I[3]), abs(pf.I[5])) < 1e-8 * norm
    assert abs(pf.mu1) < 1e-10


@pytest.mark.parametrize("E", [0.02, 0.05, 0.1])
@pytest.mark.parametrize("c", [1.5, 2.0, 3.0])
def test_pf_matches_finite_part(E, c):
    pf = picard_fuchs(E, c)
    fp = finite_part_moments(WaveParams(0.0, E, c, 0.0), MBBM)
    assert pf.I[2] == pytest.approx(fp[2], rel=1e-5)
    assert np.allclose(pf.I[::2], fp[::2], rtol=1e-8)


def test_pf_gradients_match_finite_differences():
    E, c = 0.05, 2.0
    pf = picard_fuchs(E, c)
    t = gradient_table(WaveParams(0.0, E, c, 0.0), MBBM)
    assert pf.M_a == pytest.approx(t.M_a, rel=1e-6)
    assert pf.T_E == pytest.approx(t.T_E, rel=1e-6)


def test_pf_singular_at_separatrix():
    with pytest.raises(SingularSystem):
        picard_fuchs(0.0, 2.0)


@pytest.mark.parametrize("E,c", [(0.01, 2.0), (0.1, 1.5), (0.3, 3.0)])
def test_discriminant_normalization(E, c):
    assert radicand_discriminant(E, c) == pytest.approx(radicand_discriminant_closed(E, c), rel=1e-10)
    assert pf_matrix(E, c).shape == (7, 7)


def test_mass_ratio_trend():
    r = [mass_a_ratio(E, 2.0) for E in (1e-2, 1e-3, 1e-4)]
    assert abs(r[1]) < abs(r[0]) and abs(r[2]) < abs(r[1])
    r3 = mass_a_ratio(1e-2, 3.0)
    assert np.isfinite(r3)


def test_mass_ratio_limit_is_speed_independent():
    lim2 = mass_a_limit(2.0)["limit"]
    lim3 = mass_a_limit(3.0)["limit"]
    assert abs(lim2) < 1e-4 and abs(lim3) < 1e-4


@pytest.mark.xfail(strict=True, reason="the normalized ratio tends to 0, so no constant makes the limit +-1")
def test_mass_ratio_unit_limit():
    assert abs(abs(mass_a_ratio(1e-2, 2.0)) - 1) < 0.1


# --- approach to the separatrix -------------------------------------------------

def test_solitary_limit_cubic():
    rep = solitary_limit_consistency(2, 2.0)
    assert rep.predicted == "stable"
    assert rep.eventually_agrees and rep.agreement == 1.0
    assert np.all(rep.jac3 > 0) and np.all(rep.delta > 0)
    assert rep.M_a[-1] <= 0
    assert abs(rep.slope_fit - rep.slope_previous) < 0.2 * abs(rep.slope_previous)
    assert rep.slope_fit == pytest.approx(rep.slope_expected, rel=0.05)
    assert not rep.errors


def test_solitary_limit_supercritical_power():
    rep = solitary_limit_consistency(5, 1.05, E_seq=(-1e-2, -3e-3, -1e-3))
    assert rep.predicted == "unstable"
    assert rep.eventually_agrees and rep.agreement == 1.0
