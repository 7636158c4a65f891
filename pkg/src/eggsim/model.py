"""Trap, molecule and drive parameters plus every closed-form derived quantity.

All angular frequencies are in rad/s, lengths in metres, voltages in volts.
Functions here are pure: equal inputs give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .constants import AMU, BOHR_RADIUS, DEBYE, E_CHARGE, HBAR, KB, TWO_PI
from .errors import ConfigError

SQRT3 = math.sqrt(3.0)

# Default molecule: 29Si16O+ with d = (4 D)/sqrt(3) rounded to 2.3 D.
SIO_DIPOLE = 2.3 * DEBYE
SIO_MASS = 45.0 * AMU
# Placeholder microwave splitting; dynamics only depend on detunings from it.
DEFAULT_SPLITTING = TWO_PI * 1e9


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class MoleculeConfig:
    dipole_moment: float = SIO_DIPOLE
    mass: float = SIO_MASS
    splitting: float = DEFAULT_SPLITTING
    has_aux: bool = False

    def __post_init__(self):
        _require(self.dipole_moment > 0, "molecule.dipole_moment must be > 0")
        _require(self.mass > 0, "molecule.mass must be > 0")
        _require(self.splitting > 0, "molecule.splitting must be > 0")

    def check_modes(self, modes):
        """Raise unless the qubit splitting exceeds every mode frequency by > 100x."""
        for mode in modes:
            _require(self.splitting / mode.frequency > 100,
                     f"splitting/mode frequency = {self.splitting / mode.frequency:.3g} <= 100")


@dataclass(frozen=True)
class TrapConfig:
    field_radius: float = 0.5e-3
    secular_frequency: float = TWO_PI * 1e6
    x_eq: float = 0.0
    n_ions: int = 2

    def __post_init__(self):
        _require(self.field_radius > 0, "trap.field_radius must be > 0")
        _require(self.secular_frequency > 0, "trap.secular_frequency must be > 0")
        _require(abs(self.x_eq) / self.field_radius < 0.1,
                 "trap.x_eq must satisfy |x_eq| / r_o < 0.1")
        _require(self.n_ions >= 1, "trap.n_ions must be >= 1")


@dataclass(frozen=True)
class ModeSpec:
    """One normal mode: angular frequency and per-ion participation vector."""

    frequency: float
    participation: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "participation", tuple(float(b) for b in self.participation))
        _require(self.frequency > 0, "mode frequency must be > 0")
        norm = sum(b * b for b in self.participation)
        _require(abs(norm - 1.0) < 1e-9, f"mode participation not normalized (|b|^2 = {norm})")


@dataclass(frozen=True)
class DriveTone:
    geometry: Literal["dipole", "quadrupole"]
    frequency: float
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        _require(self.geometry in ("dipole", "quadrupole"),
                 f"unknown tone geometry {self.geometry!r}")
        _require(self.amplitude >= 0, "tone amplitude V_m must be >= 0")


@dataclass(frozen=True)
class GateConfig:
    detuning: float = TWO_PI * 200e3
    mode_index: int = 0
    temperature: float = 0.1e-3

    def __post_init__(self):
        _require(self.detuning > 0, "gate.detuning must be > 0")
        _require(self.temperature >= 0, "gate.temperature must be >= 0")
        _require(self.mode_index >= 0, "gate.mode_index must be >= 0")


def check_modes_orthonormal(modes, atol=1e-9):
    b = np.array([m.participation for m in modes])
    if not np.allclose(b @ b.T, np.eye(len(modes)), atol=atol):
        raise ConfigError("mode participation vectors are not orthonormal")


# --------------------------------------------------------------------------
# derived quantities


def rabi_frequency(mol, tone, trap):
    """Common drive prefactor ``Omega = d V_m / (2 r_o hbar)`` for either geometry."""
    return mol.dipole_moment * tone.amplitude / (2.0 * trap.field_radius * HBAR)


def rabi_from_voltage(voltage, mol, trap):
    return mol.dipole_moment * voltage / (2.0 * trap.field_radius * HBAR)


def eta_scale(frequency, mass, field_radius):
    """Gradient coupling for unit participation, ``sqrt(hbar / (2 m w r_o^2))``."""
    return math.sqrt(HBAR / (2.0 * mass * frequency * field_radius ** 2))


def eta(mode, ion_index, mol, trap):
    """Gradient coupling ``eta_q^(i)`` of ion ``ion_index`` to ``mode`` (signed)."""
    if not 0 <= ion_index < len(mode.participation):
        raise IndexError(f"ion index {ion_index} out of range for mode with "
                         f"{len(mode.participation)} ions")
    return eta_scale(mode.frequency, mol.mass, trap.field_radius) * mode.participation[ion_index]


def thermal_occupation(temperature, frequency):
    """Bose-Einstein mean occupation; exactly 0 at T = 0."""
    if temperature < 0 or frequency <= 0:
        raise ValueError("need T >= 0 and frequency > 0")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * frequency / (KB * temperature))


def two_ion_modes(trap):
    """Radial modes of an equal-mass two-ion crystal.

    Returns the centre-of-mass mode at the secular frequency and the relative
    mode at ``secular_frequency / sqrt(3)``.
    """
    if trap.n_ions != 2:
        raise ConfigError(f"two_ion_modes needs n_ions = 2, got {trap.n_ions}")
    s = 1.0 / math.sqrt(2.0)
    com = ModeSpec(trap.secular_frequency, (s, s))
    rel = ModeSpec(trap.secular_frequency / SQRT3, (s, -s))
    return com, rel


def ms_angle(rabi, eta1, eta2, detuning, t):
    """Accumulated sigma_x sigma_x angle ``2 Omega^2 eta1 eta2 t / gamma``."""
    return 2.0 * rabi ** 2 * eta1 * eta2 * t / detuning


def ms_gate_time(rabi, eta1, eta2, detuning):
    """``pi gamma / (2 Omega^2 eta1 eta2)``: the time at which the angle reaches pi.

    The maximally entangled point (angle pi/4) is at a quarter of this, see
    :func:`ms_bell_time`.
    """
    if detuning <= 0:
        raise ValueError("detuning must be > 0")
    if eta1 * eta2 <= 0 or rabi == 0:
        raise ValueError("zero coupling: Omega^2 eta1 eta2 must be > 0")
    return math.pi * detuning / (2.0 * rabi ** 2 * eta1 * eta2)


def ms_bell_time(rabi, eta1, eta2, detuning):
    return ms_gate_time(rabi, eta1, eta2, detuning) / 4.0


def ms_validity_ratio(detuning, rabi, eta_q):
    return detuning / (2.0 * rabi * abs(eta_q))


def carrier_phase_bound(rabi, x_eq, field_radius, mode_frequency, detuning):
    """Largest carrier phase ``8 Omega x_eq / (r_o (w_q + gamma))``."""
    return 8.0 * rabi * abs(x_eq) / (field_radius * (mode_frequency + detuning))


def xeq_tolerance(mode_frequency, detuning, field_radius, voltage, dipole_moment,
                  target_infidelity=1e-4):
    """Largest x_eq keeping the carrier-induced infidelity below ``target_infidelity``.

    At 1e-4 this is ``hbar (w_q + gamma) r_o^2 / (200 sqrt(2) V_m d)``; other
    targets scale as sqrt(infidelity).
    """
    if voltage == 0:
        return math.inf
    base = HBAR * (mode_frequency + detuning) * field_radius ** 2 / (
        200.0 * math.sqrt(2.0) * voltage * dipole_moment)
    return base * math.sqrt(target_infidelity / 1e-4)


def quadrupole_carrier_rate(voltage, field_radius):
    """Order-of-magnitude rate ``e a0^2 2V / (hbar r_o^2)`` of a trap-gradient
    driven quadrupole carrier transition, in rad/s."""
    return E_CHARGE * BOHR_RADIUS ** 2 * 2.0 * voltage / (HBAR * field_radius ** 2)


def heating_rate_law(rabi, eta_q, t, nbar=0.0):
    """Mean phonon number ``nbar + (2 Omega eta t)^2`` under the bichromatic drive."""
    return nbar + (2.0 * rabi * eta_q * np.asarray(t)) ** 2
