"""
Derived parameters of the SiO+ two-ion system
=============================================

Every closed-form quantity follows from the trap voltage, the field radius,
the secular frequency and the molecule.
"""

import math

from eggsim.config import paper_config
from eggsim.model import (carrier_phase_bound, quadrupole_carrier_rate, thermal_occupation,
                          two_ion_modes, xeq_tolerance)
from eggsim.cli import derived_parameters

cfg = paper_config()
p = derived_parameters(cfg)

# Common drive prefactor Omega = d V_m / (2 r_o hbar)
print(f"Omega / 2pi        = {p['rabi_over_2pi_hz'] / 1e6:.2f} MHz")

# Gradient couplings: COM and relative modes, per ion
for name, etas in p["eta"].items():
    print(f"eta ({name:8s})    = {etas[0]:+.4e}, {etas[1]:+.4e}")

# The relative mode sits at w / sqrt 3 and couples 3^(1/4) times more strongly
com, rel = two_ion_modes(cfg.trap)
print(f"relative mode      = {rel.frequency / 2 / math.pi / 1e6:.4f} MHz")

# Thermal occupation after Doppler cooling
for T in (0.5e-3, 0.1e-3):
    label = f"nbar({T * 1e3:.1f} mK)"
    print(f"{label:<19s}= {thermal_occupation(T, com.frequency):.3f}")

# MS gate: the angle reaches pi/4 (Bell state) at a quarter of t_gate
print(f"t_gate             = {p['ms_gate_time_s'] * 1e3:.2f} ms")
print(f"t_Bell             = {p['ms_bell_time_s'] * 1e3:.2f} ms")
print(f"validity ratio     = {p['ms_validity_ratio']:.1f}")

# Equilibrium offset allowed for 1e-4 infidelity from the residual carrier
x_tol = xeq_tolerance(com.frequency, cfg.gate.detuning, cfg.trap.field_radius,
                      cfg.drive.voltage, cfg.molecule.dipole_moment)
bound = carrier_phase_bound(p["rabi_rad_s"], x_tol, cfg.trap.field_radius, com.frequency,
                            cfg.gate.detuning)
print(f"x_eq tolerance     = {x_tol * 1e9:.2f} nm (phase {bound:.4f}, Phi^2/2 = {bound ** 2 / 2:.1e})")

# Trap-gradient driven quadrupole carrier, at a tighter 100 um electrode radius
rate = quadrupole_carrier_rate(cfg.drive.voltage, 100e-6)
print(f"quadrupole carrier = {rate / 2 / math.pi:.0f} Hz at r_o = 100 um")
