import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from eggsim import fock, ultrafast as uf
from eggsim.errors import ConfigError, ConvergenceError
from eggsim.hamiltonians import QuadrupoleTone, build_e2, mode_etas
from eggsim.dynamics import _apply_steps
from eggsim.model import rabi_from_voltage, two_ion_modes

W0 = 2 * math.pi * 1e6
FREQS = (W0, W0 / math.sqrt(3))
DP = (1.0903e-4, 1.0903e-4 * 3 ** 0.25)


@pytest.fixture(scope="module")
def designed():
    return uf.design_sequence(4, DP, FREQS)


def small_space(n=12):
    return fock.HilbertSpace(2, (n + 1, n + 1), 2)


def seq(times, z, dp=DP):
    return uf.PulseSequence(times, z, dp, FREQS)


# ---------------------------------------------------------------- propagators


def test_kick_propagator_identity():
    space = small_space(4)
    assert np.allclose(uf.kick_propagator(space, 0.0, 0.0).dense(), np.eye(space.dim))


def test_kick_on_mixed_branch_excites_relative_mode():
    space = small_space(20)
    dp0, dp1 = 0.3, 0.4
    psi = uf.kick_propagator(space, dp0, dp1) @ fock.product_state(space, ("+x", "-x"), (0, 0))
    assert fock.mean_phonons(psi, 0) == pytest.approx(0.0, abs=1e-14)
    assert fock.mean_phonons(psi, 1) == pytest.approx(abs(2 * dp1) ** 2, rel=1e-9)


def test_kick_signs_on_com_branches():
    assert uf.branch_kick(1, 1, DP) == (0, -2j * DP[0])
    assert uf.branch_kick(-1, -1, DP) == (0, 2j * DP[0])
    assert uf.branch_kick(1, -1, DP) == (1, -2j * DP[1])
    assert uf.branch_kick(-1, 1, DP) == (1, 2j * DP[1])


def test_kick_propagator_unitary():
    space = small_space(16)
    u = uf.kick_propagator(space, 0.2, 0.3).dense()
    n = np.arange(17)
    low = np.flatnonzero(((n[:, None] < 5) & (n[None, :] < 5)).ravel())
    cols = np.concatenate([low + k * 17 ** 2 for k in range(4)])
    assert np.abs((u.conj().T @ u - np.eye(space.dim))[:, cols]).max() < 1e-8


def test_free_propagator():
    space = small_space(20)
    full = uf.free_propagator(space, 2 * math.pi / FREQS[1], FREQS).dense()
    n_com = fock.number_operator(space, 0).dense().diagonal().real
    assert np.allclose(full.diagonal(), np.exp(-2j * math.pi * n_com * math.sqrt(3)))
    a = uf.free_propagator(space, 1.3e-7, FREQS).dense()
    b = uf.free_propagator(space, 0.4e-7, FREQS).dense()
    assert np.allclose(a @ b, uf.free_propagator(space, 1.7e-7, FREQS).dense())
    alpha = 0.8 + 0.3j
    vec = np.kron(np.kron(fock.internal_vector("g"), fock.internal_vector("g")),
                  np.kron(fock.coherent_vector(alpha, 21), fock.fock_vector(0, 21)))
    out = uf.free_propagator(space, 2e-7, FREQS).matrix @ vec
    ref = np.kron(np.kron(fock.internal_vector("g"), fock.internal_vector("g")),
                  np.kron(fock.coherent_vector(alpha * np.exp(-1j * W0 * 2e-7), 21),
                          fock.fock_vector(0, 21)))
    assert abs(np.vdot(ref, out)) == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------- closure and phase


def test_closure_examples():
    two = seq([0.0, 2 * math.pi / W0], [1.0, -1.0])
    assert two.n_pulses == 2
    assert uf.closure_residual(two)[0] < 1e-15
    assert uf.closure_residual(two)[1] > 0
    single = seq([0.0], [3.0])
    assert np.allclose(uf.closure_residual(single), 3 * np.array(DP))
    assert np.all(uf.closure_residual(seq([0.0, 1e-7, 2e-7], [0, 0, 0])) == 0)


def test_single_pulse_has_no_phase():
    assert uf.accumulated_phase(seq([0.0], [5.0])) == 0.0


def test_phase_uses_sqrt3_prefactor():
    s = seq([0.0, 1.1e-7, 3.0e-7, 4.2e-7], [1.0, -2.0, 0.5, 1.5])
    p = uf.branch_phases(s)
    assert uf.accumulated_phase(s) == pytest.approx((p[0] - p[1]) / 2, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6), st.floats(0.1, 5.0))
def test_phase_scales_quadratically(z, lam):
    times = np.cumsum([0.0] + [1.7e-7 * (k + 1) for k in range(len(z) - 1)])
    s = seq(times, z)
    assert uf.accumulated_phase(s.scaled(lam)) == pytest.approx(
        lam ** 2 * uf.accumulated_phase(s), rel=1e-9, abs=1e-15)


def test_mode_model_check():
    with pytest.raises(ConfigError):
        uf.accumulated_phase(uf.PulseSequence([0.0, 1e-7], [1, -1], DP, (W0, W0 / 2)))
    with pytest.raises(ConfigError):
        uf.accumulated_phase(uf.PulseSequence([0.0, 1e-7], [1, -1], (1e-4, 1e-4), FREQS))


def test_sequence_validation():
    with pytest.raises(ValueError):
        seq([0.0, 1e-7], [1.0])
    with pytest.raises(ValueError):
        seq([1e-7, 2e-7], [1.0, 1.0])
    with pytest.raises(ValueError):
        seq([0.0, 2e-7, 1e-7], [1.0, 1.0, 1.0])
    with pytest.raises(ConfigError):
        uf.PulseSequence.from_dict({"pulses": [{"T_s": 0.0}]})


def test_sequence_round_trip(designed):
    import json
    back = uf.PulseSequence.from_dict(json.loads(designed.to_json()))
    assert back == designed


# ---------------------------------------------------------------- designer


def test_designed_sequence_constraints(designed):
    assert designed.n_pulses == 4
    res = uf.closure_residual(designed) / np.array(DP)
    assert np.all(res < 1e-9)
    assert abs(uf.accumulated_phase(designed) - math.pi / 4) < 1e-6
    assert abs(sum(designed.z)) < 1e-6
    assert designed.total_time < 10e-6


def test_designer_is_deterministic(designed):
    assert uf.design_sequence(4, DP, FREQS) == designed


def test_designer_rejects_too_few_pulses():
    with pytest.raises(ConfigError):
        uf.design_sequence(3, DP, FREQS)


def test_designer_reports_failure():
    # a kick bound far too small for the phase target within the time limit
    with pytest.raises(ConvergenceError):
        uf.design_sequence(4, DP, FREQS, max_total_time=2e-7, n_random=3)


@pytest.mark.parametrize("motional", [(0, 0), (1, 0), (1 + 1j, 0.5), (2, 2j)])
def test_operator_product_restores_motion(designed, motional):
    r = uf.simulate_branches(designed, motional, n_max=80)
    assert min(r.overlaps().values()) > 1 - 1e-6
    assert r.phase() == pytest.approx(uf.accumulated_phase(designed), abs=1e-6)


def test_branch_simulation_matches_full_operator_product(designed):
    small = designed.scaled(0.05)
    space = small_space(10)
    u = uf.sequence_propagator(space, small)
    free = uf.free_propagator(space, small.total_time, FREQS)
    amps = {}
    for label, s1, s2 in uf.BRANCHES[:2]:
        psi = fock.product_state(space, ("+x" if s1 > 0 else "-x", "+x" if s2 > 0 else "-x"),
                                 (0, 0))
        amps[label] = (free @ psi).overlap(u @ psi)
    full = float(np.angle(amps["+X+X"] / amps["+X-X"]) / 2)
    assert full == pytest.approx(uf.extracted_phase(small, n_max=10), abs=1e-10)


def test_relative_phase_of_branches(designed):
    r = uf.simulate_branches(designed)
    rel = np.angle(r.amplitude("+X+X") / r.amplitude("+X-X"))
    assert rel == pytest.approx(2 * math.pi / 4, abs=1e-9)


# ---------------------------------------------------------------- trajectories


def test_trajectory_topology(designed):
    tr = uf.trajectory(designed)
    for label in ("+X+X", "-X-X"):
        assert tr.max_excursion(label, 1) == 0.0
        assert tr.max_excursion(label, 0) > 0.1
    for label in ("+X-X", "-X+X"):
        assert tr.max_excursion(label, 0) == 0.0
        assert tr.max_excursion(label, 1) > 0.1
    for key in tr.paths:
        assert tr.endpoint_error(*key) < 1e-9


def test_trajectory_rows_are_ordered(designed):
    rows = uf.trajectory(designed, ["+X+X"]).rows()
    assert rows[0][:2] == (0, "+X+X") and rows[-1][:2] == (1, "+X+X")


def test_rotating_frame_loop_area_equals_twice_branch_phase(designed):
    tr = uf.trajectory(designed, ["+X+X", "+X-X"], frame="rotating")
    phases = uf.branch_phases(designed)
    for (label, mode), p in (("+X+X", 0), phases[0]), (("+X-X", 1), phases[1]):
        _, x, pp = tr.paths[(label, mode)]
        # (x/x0, p/p0) = 2 (Re, Im) alpha, so areas carry a factor 4
        assert abs(uf.loop_area(x, pp)) / 4 == pytest.approx(abs(p) / 2, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_closure_iff_loop_closure(z1, z2, g1, g2):
    assume(abs(z1) > 0.1 and abs(z2) > 0.1)
    times = np.cumsum([0.0, g1 * 1e-7, g2 * 1e-7])
    s = seq(times, [z1, z2, -(z1 + z2)])
    tr = uf.trajectory(s)
    res = uf.closure_residual(s)
    for label, s1, s2 in uf.BRANCHES:
        mode = 0 if s1 == s2 else 1
        end = tr.endpoint_error(label, mode)
        # endpoint distance in (x/x0, p/p0) is 4 times the residual
        assert end == pytest.approx(4 * res[mode], rel=1e-6, abs=1e-15)


def test_loop_area_of_square():
    x = np.array([0, 1, 1, 0.0])
    p = np.array([0, 0, 1, 1.0])
    assert uf.loop_area(x, p) == pytest.approx(1.0)
    assert uf.loop_area(x[::-1], p[::-1]) == pytest.approx(-1.0)


# ---------------------------------------------------------------- finite pulses


def test_impulse_approximation(cfg):
    """A 10 ns resonant pulse reproduces the kick to overlap 1 - 1e-4."""
    modes = two_ion_modes(cfg.trap)
    freqs = [m.frequency for m in modes]
    etas = mode_etas(modes, cfg.molecule, cfg.trap)
    tau, z = cfg.ultrafast.t_pulse, 1500.0
    space = small_space(14)
    tone = QuadrupoleTone(0.0, z * cfg.drive.voltage / 2)
    ham = build_e2(space, [tone], etas, freqs, cfg.molecule, cfg.trap)
    dp = uf.base_kicks(cfg)
    kick = uf.kick_propagator(space, z * dp[0], z * dp[1]).matrix
    half = uf.free_propagator(space, tau / 2, freqs).matrix
    for labels in (("+x", "+x"), ("+x", "-x"), ("g", "e")):
        psi = fock.product_state(space, labels, (0, 0)).amplitudes[:, None]
        finite = _apply_steps(ham, psi, 0.0, tau, tau / 200)[:, 0]
        impulse = (half.conj().T @ (kick @ (half @ psi)))[:, 0]
        assert abs(np.vdot(impulse, finite)) ** 2 > 1 - 1e-4


def test_base_kicks(cfg):
    dp = uf.base_kicks(cfg)
    rabi = rabi_from_voltage(10.0, cfg.molecule, cfg.trap)
    assert dp[0] == pytest.approx(rabi * 2.1194947e-5 / math.sqrt(2) * 1e-8, rel=1e-7)
    assert dp[1] / dp[0] == pytest.approx(3 ** 0.25)


def test_xeq_zero_has_no_deviation(designed, cfg):
    assert uf.xeq_robustness_check(designed, cfg, 0.0) == 0.0


def test_carrier_eigenstate():
    space = small_space(2)
    assert uf.carrier_eigenstate_check(space, 7e8, 1e-6, 5e-4) == pytest.approx(1.0)
    assert uf.carrier_eigenstate_check(space, 7e8, 1e-6, 5e-4, ("g", "g")) == pytest.approx(0.0)
