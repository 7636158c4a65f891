"""Closed-form parameters.

Reference values were computed once with 30-digit arithmetic from CODATA
constants, independently of this package, and frozen here.
"""

import math

import pytest
from hypothesis import given, strategies as st

from eggsim.errors import ConfigError
from eggsim.model import (DriveTone, GateConfig, ModeSpec, MoleculeConfig, TrapConfig,
                          carrier_phase_bound, check_modes_orthonormal, eta, eta_scale,
                          heating_rate_law, ms_angle, ms_bell_time, ms_gate_time,
                          ms_validity_ratio, quadrupole_carrier_rate, rabi_frequency,
                          rabi_from_voltage, thermal_occupation, two_ion_modes, xeq_tolerance)
from eggsim.constants import HBAR, KB, TWO_PI, to_angular

RABI_REF = 727496607.2374659
ETA_REF = 2.1194947172103297e-05
NBAR_05MK = 9.926307078548584
NBAR_01MK = 1.6235029156383212
T_GATE_REF = 0.016604779593194816
XTOL_REF = 9.160626099060574e-09
QUAD_100UM = 8508.764319866137

MOL, TRAP = MoleculeConfig(), TrapConfig()
W = TWO_PI * 1e6


def test_rabi_reference():
    tone = DriveTone("quadrupole", 0.0, 10.0)
    assert rabi_frequency(MOL, tone, TRAP) == pytest.approx(RABI_REF, rel=1e-9)
    assert rabi_from_voltage(10.0, MOL, TRAP) / TWO_PI == pytest.approx(115.78e6, rel=1e-4)


def test_eta_reference():
    assert eta_scale(W, MOL.mass, TRAP.field_radius) == pytest.approx(ETA_REF, rel=1e-9)


@given(st.floats(1e5, 1e8), st.floats(1.1, 10.0))
def test_eta_scales_as_inverse_sqrt_frequency(w, lam):
    a = eta_scale(w, MOL.mass, TRAP.field_radius)
    b = eta_scale(lam ** 2 * w, MOL.mass, TRAP.field_radius)
    assert b == pytest.approx(a / lam, rel=1e-12)


def test_quadrupling_frequency_halves_eta():
    assert eta_scale(4 * W, MOL.mass, 0.5e-3) == pytest.approx(ETA_REF / 2, rel=1e-12)


def test_thermal_occupation_reference():
    assert thermal_occupation(0.5e-3, W) == pytest.approx(NBAR_05MK, rel=1e-9)
    assert thermal_occupation(0.1e-3, W) == pytest.approx(NBAR_01MK, rel=1e-9)
    assert thermal_occupation(0.0, W) == 0.0


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0))
def test_thermal_occupation_monotone_in_temperature(t1, t2):
    lo, hi = sorted((t1, t2))
    assert thermal_occupation(lo, W) <= thermal_occupation(hi, W)


@given(st.floats(5.0, 100.0))
def test_thermal_occupation_high_temperature_limit(ratio):
    # kT = ratio * hbar w
    t = ratio * HBAR * W / KB
    assert thermal_occupation(t, W) == pytest.approx(ratio - 0.5, rel=1e-2)


def test_two_ion_modes():
    com, rel = two_ion_modes(TRAP)
    assert com.frequency == W
    assert rel.frequency / TWO_PI == pytest.approx(0.5774e6, rel=1e-4)
    check_modes_orthonormal((com, rel))
    ratio = eta(rel, 0, MOL, TRAP) / eta(com, 0, MOL, TRAP)
    assert ratio == pytest.approx(3 ** 0.25, rel=1e-12)
    assert eta(rel, 1, MOL, TRAP) == -eta(rel, 0, MOL, TRAP)
    assert eta(com, 0, MOL, TRAP) == pytest.approx(ETA_REF / math.sqrt(2), rel=1e-12)


def test_two_ion_modes_needs_two_ions():
    with pytest.raises(ConfigError):
        two_ion_modes(TrapConfig(n_ions=3))


def test_non_orthonormal_modes_rejected():
    with pytest.raises(ConfigError):
        check_modes_orthonormal((ModeSpec(W, (1.0, 0.0)), ModeSpec(W, (0.6, 0.8))))
    with pytest.raises(ConfigError):
        ModeSpec(W, (1.0, 1.0))


def test_ms_gate_time_reference():
    e = ETA_REF / math.sqrt(2)
    g = TWO_PI * 200e3
    assert ms_gate_time(RABI_REF, e, e, g) == pytest.approx(T_GATE_REF, rel=1e-9)
    assert ms_gate_time(RABI_REF, e, e, 2 * g) == pytest.approx(2 * T_GATE_REF, rel=1e-12)
    assert ms_bell_time(RABI_REF, e, e, g) == pytest.approx(T_GATE_REF / 4, rel=1e-12)
    assert ms_angle(RABI_REF, e, e, g, T_GATE_REF / 4) == pytest.approx(math.pi / 4)
    assert ms_validity_ratio(g, RABI_REF, e) == pytest.approx(57.62773567162745, rel=1e-9)


def test_ms_gate_time_errors():
    with pytest.raises(ValueError):
        ms_gate_time(RABI_REF, 1e-5, 1e-5, 0.0)
    with pytest.raises(ValueError):
        ms_gate_time(RABI_REF, 0.0, 1e-5, 1.0)


def test_xeq_tolerance_reference():
    g = TWO_PI * 200e3
    x = xeq_tolerance(W, g, 0.5e-3, 10.0, MOL.dipole_moment)
    assert x == pytest.approx(XTOL_REF, rel=1e-9)
    bound = carrier_phase_bound(RABI_REF, x, 0.5e-3, W, g)
    assert bound == pytest.approx(0.0141421, rel=1e-5)
    assert bound ** 2 / 2 == pytest.approx(1e-4, rel=1e-9)
    assert xeq_tolerance(W, g, 0.5e-3, 0.0, MOL.dipole_moment) == math.inf


@given(st.floats(1e-8, 1e-2))
def test_xeq_tolerance_meets_target_infidelity(target):
    g = TWO_PI * 200e3
    x = xeq_tolerance(W, g, 0.5e-3, 10.0, MOL.dipole_moment, target)
    rabi = rabi_from_voltage(10.0, MOL, TrapConfig())
    assert carrier_phase_bound(rabi, x, 0.5e-3, W, g) ** 2 / 2 == pytest.approx(target, rel=1e-9)


def test_quadrupole_carrier_rate():
    assert quadrupole_carrier_rate(10.0, 100e-6) == pytest.approx(QUAD_100UM, rel=1e-9)
    assert quadrupole_carrier_rate(10.0, 0.5e-3) == pytest.approx(340.3505727946455, rel=1e-9)


def test_heating_law_values():
    assert heating_rate_law(RABI_REF, ETA_REF, 500e-6) == pytest.approx(237.7533371, rel=1e-8)
    half = heating_rate_law(RABI_REF, ETA_REF / math.sqrt(2), 500e-6)
    assert half == pytest.approx(118.8766686, rel=1e-8)
    assert heating_rate_law(RABI_REF, ETA_REF, 0.0, 3.0) == 3.0


@pytest.mark.parametrize("bad", [
    lambda: TrapConfig(field_radius=0.0),
    lambda: TrapConfig(x_eq=1e-4),
    lambda: DriveTone("quadrupole", 0.0, -1.0),
    lambda: DriveTone("octupole", 0.0, 1.0),
    lambda: GateConfig(detuning=-1.0),
    lambda: MoleculeConfig(mass=0.0),
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ConfigError):
        bad()


def test_splitting_must_dominate_modes():
    with pytest.raises(ConfigError):
        MoleculeConfig(splitting=TWO_PI * 50e6).check_modes(two_ion_modes(TRAP))
    MOL.check_modes(two_ion_modes(TRAP))


def test_frequency_units():
    assert to_angular("1 MHz") == pytest.approx(W)
    assert to_angular("200 kHz") == pytest.approx(TWO_PI * 200e3)
    assert to_angular(5.0) == 5.0
