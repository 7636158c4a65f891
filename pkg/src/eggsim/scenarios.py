"""Full numerical runs of the quadrupole Hamiltonian: bichromatic heating and MS gate."""

from __future__ import annotations

import math

import numpy as np

from . import fock
from .dynamics import evolve, evolve_ensemble
from .errors import TruncationError
from .hamiltonians import QuadrupoleTone, build_carrier_error, build_e2
from .model import (eta, eta_scale, heating_rate_law, ms_angle, ms_bell_time, rabi_from_voltage,
                    thermal_occupation, two_ion_modes)


def fock_cutoff(n_cut, alpha_max, margin=10):
    """Truncation holding a Fock state ``n_cut`` displaced by up to ``alpha_max``.

    The classical turning point of ``D(alpha)|n>`` is ``(sqrt(n) + |alpha|)^2``;
    four extra standard widths plus ``margin`` levels cover the quantum tail.
    """
    reach = math.sqrt(n_cut) + abs(alpha_max)
    return int(math.ceil(reach ** 2 + 4 * reach + margin))


def _check_cutoff(n_max, n_cut, auto):
    if n_max < n_cut + 2:
        raise TruncationError(f"n_max = {n_max} cannot hold the initial Fock states up to "
                              f"n = {n_cut}; use at least {auto}")


def _initial_ensemble(space, internal, nbar, eps, initial_fock):
    if initial_fock is not None:
        return fock.MixedEnsemble(((1.0, fock.product_state(space, internal, (initial_fock,))),))
    return fock.thermal_ensemble(space, internal, (nbar,), eps)


def _period_grid(t_end, n_samples, period):
    """``n_samples`` times in [0, t_end] rounded to whole drive periods."""
    if t_end <= 0:
        return np.zeros(1)
    k = np.unique(np.round(np.linspace(0.0, t_end, n_samples) / period))
    return k * period


def heating_scenario(cfg, *, times=None, initial_internal="g", convergence_check=False):
    """Mean phonon number of mode q under tones at ``Delta +- w_q`` (one molecule).

    The blue tone carries ``V_m (1 + eps/2)`` and the red tone
    ``V_m (1 - eps/2)`` with ``eps = cfg.heating.mismatch``.  The trap's
    ``x_eq`` switches on the carrier term.
    """
    h, trap, mol = cfg.heating, cfg.trap, cfg.molecule
    w = trap.secular_frequency
    eta_q = eta_scale(w, mol.mass, trap.field_radius) * h.participation
    rabi = rabi_from_voltage(cfg.drive.voltage, mol, trap)
    nbar = thermal_occupation(h.temperature, w)
    weights = fock.thermal_fock_weights(nbar, h.thermal_eps)
    alpha_max = 2 * rabi * abs(eta_q) * h.t_end * (1 + h.mismatch / 2)
    auto = fock_cutoff(weights[-1][0], alpha_max)
    n_max = h.n_max or auto
    _check_cutoff(n_max, weights[-1][0], auto)
    space = fock.HilbertSpace(2, (n_max + 1,), 1)
    v = cfg.drive.voltage
    tones = [QuadrupoleTone(-w, v * (1 + h.mismatch / 2)), QuadrupoleTone(w, v * (1 - h.mismatch / 2))]
    ham = build_e2(space, tones, [[eta_q]], [w], mol, trap, frame="interaction",
                   period=2 * math.pi / w)
    ens = fock.thermal_ensemble(space, initial_internal, (nbar,), h.thermal_eps)
    if times is None:
        times = _period_grid(h.t_end, h.n_samples, 2 * math.pi / w)
    observables = {
        "mean_n": fock.number_operator(space, 0),
        "P_gg": fock.projector(space, fock.internal_vector("g")),
        "P_ee": fock.projector(space, fock.internal_vector("e")),
    }
    res = evolve_ensemble(ham, ens, times=times, observables=observables,
                          convergence_check=convergence_check)
    # compare against the truncated ensemble's own mean (within eps of nbar)
    nbar_ens = sum(n * p for n, p in weights)
    res.traces["analytic_mean_n"] = heating_rate_law(rabi, eta_q, res.times, nbar_ens)
    res.meta.update(nbar=nbar, nbar_ensemble=nbar_ens, n_max=n_max, rabi=rabi, eta=eta_q,
                    n_members=len(weights), scenario="heating")
    return res


def stark_compensated_detuning(detuning, mode_frequency):
    """Tone offset ``gamma'`` from the mode that restores the nominal MS rate.

    The counter-rotating half of each tone adds a spin-spin coupling of
    opposite sign detuned by ``2 w_q + gamma'``; choosing
    ``1/gamma' - 1/(2 w_q + gamma') = 1/gamma`` makes the net rate
    ``2 Omega^2 eta1 eta2 / gamma``.
    """
    w = mode_frequency
    return -w + math.sqrt(w * w + 2 * w * detuning)


def ms_couplings(cfg):
    """``(Omega, eta1, eta2, mode)`` for the gate mode of a two-ion crystal."""
    mode = two_ion_modes(cfg.trap)[cfg.gate.mode_index]
    rabi = rabi_from_voltage(cfg.drive.voltage, cfg.molecule, cfg.trap)
    e1 = eta(mode, 0, cfg.molecule, cfg.trap)
    e2 = eta(mode, 1, cfg.molecule, cfg.trap)
    return rabi, e1, e2, mode


def ms_scenario(cfg, *, times=None, initial_fock=None, convergence_check=False):
    """Two molecules driven by tones at ``Delta +- (w_q' + gamma)``.

    Each tone carries ``V_m / 2``, i.e. ``V_m`` is the peak of the
    bichromatic waveform; this makes the ideal propagator
    ``exp(-i 2 Omega^2 eta1 eta2 t / gamma sigma_x sigma_x)``.  The motion is
    integrated in a frame rotating at the tone offset, in which the
    Hamiltonian is periodic.  Starts from ``|g,g>`` and a thermal state of
    the gate mode at ``cfg.gate.temperature`` (or the Fock state
    ``initial_fock``).
    """
    ms, trap, mol, gate = cfg.ms, cfg.trap, cfg.molecule, cfg.gate
    rabi, e1, e2, mode = ms_couplings(cfg)
    w = mode.frequency
    gamma = gate.detuning
    offset_detuning = stark_compensated_detuning(gamma, w) if ms.stark_compensation else gamma
    nu = w + offset_detuning
    v_tone = cfg.drive.voltage / 2.0
    tones = [QuadrupoleTone(-nu, v_tone), QuadrupoleTone(nu, v_tone)]
    if initial_fock is None:
        initial_fock = ms.initial_fock
    nbar = thermal_occupation(gate.temperature, w)
    n_cut = initial_fock if initial_fock is not None else \
        fock.thermal_fock_weights(nbar, ms.thermal_eps)[-1][0]
    # largest spin-dependent excursion 2 g (|eta1| + |eta2|) / gamma' with g = Omega
    alpha_max = 2 * rabi * (abs(e1) + abs(e2)) / offset_detuning
    auto = fock_cutoff(n_cut, alpha_max)
    n_max = ms.n_max or auto
    _check_cutoff(n_max, n_cut, auto)
    space = fock.HilbertSpace(2, (n_max + 1,), 2)
    ham = build_e2(space, tones, [[e1, e2]], [w], mol, trap, frame="rotating",
                   reference_frequencies=[nu], period=2 * math.pi / nu)
    ens = _initial_ensemble(space, ("g", "g"), nbar, ms.thermal_eps, initial_fock)
    t_bell = ms_bell_time(rabi, abs(e1), abs(e2), gamma)
    t_end = ms.t_end if ms.t_end is not None else 2 * t_bell
    if times is None:
        times = _period_grid(t_end, ms.n_samples, 2 * math.pi / nu)
    gg = np.kron(fock.internal_vector("g"), fock.internal_vector("g"))
    ee = np.kron(fock.internal_vector("e"), fock.internal_vector("e"))
    ge = np.kron(fock.internal_vector("g"), fock.internal_vector("e"))
    eg = np.kron(fock.internal_vector("e"), fock.internal_vector("g"))
    observables = {
        "P_gg": fock.projector(space, gg),
        "P_ee": fock.projector(space, ee),
        "P_ge_eg": fock.projector(space, ge) + fock.projector(space, eg),
        "mean_n": fock.number_operator(space, 0),
        # Im <gg|rho|ee>, the coherence entering the Bell fidelity
        "im_gg_ee": fock.internal_operator(space, (np.outer(ee, gg) - np.outer(gg, ee)) / 2j),
    }
    res = evolve_ensemble(ham, ens, times=times, observables=observables,
                          convergence_check=convergence_check)
    theta = ms_angle(rabi, abs(e1), abs(e2), gamma, res.times)
    c, s = np.cos(theta), np.sin(theta)
    # overlap with (cos theta |gg> - i sin theta |ee>), i.e. u_ms(t)|gg>
    res.traces["bell_fidelity"] = (c * c * res.traces["P_gg"] + s * s * res.traces["P_ee"]
                                   + 2 * c * s * res.traces["im_gg_ee"])
    res.traces["theta"] = theta
    res.traces["analytic_P_gg"] = np.cos(theta) ** 2
    res.traces["analytic_P_ee"] = np.sin(theta) ** 2
    res.meta.update(rabi=rabi, eta1=e1, eta2=e2, nbar=nbar, n_max=n_max, t_bell=t_bell,
                    tone_offset=nu, stark_shift=offset_detuning - gamma, scenario="ms-gate",
                    initial_fock=initial_fock)
    return res


def carrier_phase_trace(cfg, x_eq, *, n_periods=2, samples_per_period=200):
    """Carrier phase accumulated by the residual off-resonant carrier of the MS drive.

    Integrates ``(4 Omega x_eq / r_o)(sigma_x^(1) + sigma_x^(2)) cos((w_q + gamma) t)``
    from ``|+X,+X>`` and returns ``(times, phi)`` where ``phi`` is the
    rotation angle about X of one molecule, i.e. the relative phase of its
    ``|+X>`` and ``|-X>`` components.  Its maximum is
    ``8 Omega x_eq / (r_o (w_q + gamma))``.
    """
    rabi, _, _, mode = ms_couplings(cfg)
    space = fock.HilbertSpace(2, (), 2)
    ham = build_carrier_error(space, rabi, x_eq, cfg.trap.field_radius, mode.frequency,
                              cfg.gate.detuning)
    nu = mode.frequency + cfg.gate.detuning
    times = np.linspace(0.0, n_periods * 2 * math.pi / nu, n_periods * samples_per_period + 1)
    psi0 = fock.product_state(space, ("+x", "+x"))
    res = evolve(ham, psi0, times=times, store_states=True, check_truncation=False)
    # |+X+X> picks up exp(-i phi); each molecule contributes half
    phi = np.array([-np.angle(np.vdot(psi0.amplitudes, s)) for s in res.states])
    return res.times, phi
