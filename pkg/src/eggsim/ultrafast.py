"""Impulsive spin-dependent kicks on a two-molecule crystal: propagators,
closure and phase bookkeeping, a pulse-sequence designer and phase-space paths.

A kick of scale ``z`` is a resonant quadrupole pulse of duration ``t_pulse``
and amplitude ``z V_m / 2``; it gives mode ``p`` the momentum kick
``dp_p = z Omega eta_p t_pulse`` with ``eta_p = |eta_p^(i)|``.  In the X basis
the kick displaces the centre-of-mass mode (mode 0) for ``|+-X, +-X>`` and
the relative mode (mode 1) for ``|+-X, -+X>``:

    |+X+X> -> D_0(-2i dp_0)    |-X-X> -> D_0(2i dp_0)
    |+X-X> -> D_1(-2i dp_1)    |-X+X> -> D_1(2i dp_1)

For a closed sequence each branch picks up ``4 sum_{j>k} dp_j dp_k sin(w (T_j - T_k))``
from its mode, so the sequence acts as ``exp(i Phi sigma_x sigma_x)`` with

    Phi = 2 sum_{j>k} [dp_{0,j} dp_{0,k} sin(w_0 T_jk) - dp_{1,j} dp_{1,k} sin(w_1 T_jk)].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import least_squares, minimize

from . import fock
from .dynamics import _apply_steps, default_step
from .errors import ConfigError, ConvergenceError
from .hamiltonians import QuadrupoleTone, build_e2, mode_etas
from .model import SQRT3, rabi_from_voltage, two_ion_modes

#: X-basis branches as (label, s1, s2); s = +1 for |+X>, -1 for |-X>
BRANCHES = (("+X+X", 1, 1), ("+X-X", 1, -1), ("-X+X", -1, 1), ("-X-X", -1, -1))


def branch_kick(s1, s2, dp):
    """``(mode, beta)`` of the displacement a kick ``dp = (dp_0, dp_1)`` gives a branch."""
    if s1 == s2:
        return 0, -2j * s1 * dp[0]
    return 1, -2j * s1 * dp[1]


@dataclass(frozen=True)
class PulseSequence:
    """Kick times ``times`` (s, starting at 0) and dimensionless scales ``z``.

    ``dp_base[p] = Omega eta_p t_pulse`` is the kick of mode ``p`` for ``z = 1``.
    """

    times: tuple
    z: tuple
    dp_base: tuple
    mode_freqs: tuple
    t_pulse: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))
        object.__setattr__(self, "dp_base", tuple(float(v) for v in self.dp_base))
        object.__setattr__(self, "mode_freqs", tuple(float(v) for v in self.mode_freqs))
        if len(self.times) != len(self.z):
            raise ValueError("times and z must have equal length")
        if self.times and self.times[0] != 0.0:
            raise ValueError("the first pulse must be at T = 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("pulse times must be strictly increasing")
        if len(self.dp_base) != 2 or len(self.mode_freqs) != 2:
            raise ValueError("two modes (centre of mass, relative) are required")

    @property
    def n_pulses(self):
        return len(self.times)

    @property
    def total_time(self):
        return self.times[-1] if self.times else 0.0

    @property
    def kicks(self):
        """``(N, 2)`` array of ``dp_{p,j}``."""
        return np.outer(self.z, self.dp_base)

    def scaled(self, factor):
        return PulseSequence(self.times, [factor * v for v in self.z], self.dp_base,
                             self.mode_freqs, self.t_pulse)

    def to_dict(self):
        return {"pulses": [{"T_s": t, "z": v} for t, v in zip(self.times, self.z)],
                "dp_base": list(self.dp_base), "mode_freqs": list(self.mode_freqs),
                "t_pulse": self.t_pulse}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, doc):
        try:
            pulses = doc["pulses"]
            return cls([p["T_s"] for p in pulses], [p["z"] for p in pulses], doc["dp_base"],
                       doc["mode_freqs"], doc.get("t_pulse", 1e-8))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed pulse sequence: {exc}") from exc


def sequence_from_config(cfg, times, z):
    """Attach the kick sizes and mode frequencies of ``cfg`` to a schedule."""
    return PulseSequence(times, z, base_kicks(cfg), [m.frequency for m in two_ion_modes(cfg.trap)],
                         cfg.ultrafast.t_pulse)


def base_kicks(cfg):
    """``(Omega eta_0 t_pulse, Omega eta_1 t_pulse)`` for ``z = 1``."""
    modes = two_ion_modes(cfg.trap)
    etas = np.abs(mode_etas(modes, cfg.molecule, cfg.trap)[:, 0])
    rabi = rabi_from_voltage(cfg.drive.voltage, cfg.molecule, cfg.trap)
    return tuple(float(rabi * e * cfg.ultrafast.t_pulse) for e in etas)


# --------------------------------------------------------------------------
# propagators on a two-molecule, two-mode space


def _x_projector(s1, s2):
    v1 = fock.internal_vector("+x" if s1 > 0 else "-x")
    v2 = fock.internal_vector("+x" if s2 > 0 else "-x")
    v = np.kron(v1, v2)
    return np.outer(v, v.conj())


def _check_space(space):
    if space.n_molecules != 2 or len(space.fock_dims) != 2 or space.internal_dim != 2:
        raise ValueError("need two two-level molecules and two modes")


def kick_propagator(space, dp0, dp1):
    """Impulsive kick ``U_p`` on the two-molecule, two-mode ``space``."""
    _check_space(space)
    out = None
    for _, s1, s2 in BRANCHES:
        mode, beta = branch_kick(s1, s2, (dp0, dp1))
        term = fock.internal_operator(space, _x_projector(s1, s2)) @ fock.displacement(
            space, mode, beta)
        out = term if out is None else out + term
    return out


def free_propagator(space, t, mode_freqs):
    """``prod_p exp(-i w_p a_p^dag a_p t)`` (diagonal)."""
    phase = np.zeros(space.dim)
    for p, w in enumerate(mode_freqs):
        phase = phase + w * fock.number_operator(space, p).matrix.diagonal().real
    return fock.Operator(space, sp.diags(np.exp(-1j * phase * t), format="csr"))


def sequence_propagator(space, seq):
    """Full operator product ``U_p(N) U_o(t_{N-1}) ... U_o(t_1) U_p(1)``."""
    u = fock.identity(space)
    prev = 0.0
    for t, dp in zip(seq.times, seq.kicks):
        u = kick_propagator(space, *dp) @ free_propagator(space, t - prev, seq.mode_freqs) @ u
        prev = t
    return u


# --------------------------------------------------------------------------
# closure and phase


def closure_residual(seq):
    """``|sum_j dp_{p,j} exp(i w_p T_j)|`` for each mode."""
    t = np.asarray(seq.times)
    k = seq.kicks
    return np.array([abs(np.sum(k[:, p] * np.exp(1j * w * t)))
                     for p, w in enumerate(seq.mode_freqs)])


def branch_phases(seq):
    """Phase ``4 sum_{j>k} dp_j dp_k sin(w T_jk)`` picked up by a branch kicking each mode."""
    t = np.asarray(seq.times)
    k = seq.kicks
    out = []
    for p, w in enumerate(seq.mode_freqs):
        tau = t[:, None] - t[None, :]
        m = np.outer(k[:, p], k[:, p]) * np.sin(w * tau)
        out.append(4.0 * float(np.sum(np.tril(m, -1))))
    return np.array(out)


def check_mode_model(seq, rtol=1e-9):
    """Raise unless the modes follow the two-ion model (frequency ratio sqrt 3)."""
    w0, w1 = seq.mode_freqs
    if not math.isclose(w0 / w1, SQRT3, rel_tol=rtol):
        raise ConfigError(f"mode frequency ratio {w0 / w1:.6g} is not sqrt(3)")
    if not math.isclose(seq.dp_base[1] / seq.dp_base[0], 3 ** 0.25, rel_tol=rtol):
        raise ConfigError("kick ratio dp_1/dp_0 is not 3^(1/4)")


def accumulated_phase(seq):
    """Two-qubit phase ``Phi`` of the sequence (exact for closed sequences).

    ``Phi = 2 sum_{j>k} dp_{0,j} dp_{0,k} [sin(w_0 T_jk) - sqrt(3) sin(w_0 T_jk / sqrt 3)]``.
    """
    check_mode_model(seq)
    if seq.n_pulses < 2:
        return 0.0
    t = np.asarray(seq.times)
    k0 = seq.kicks[:, 0]
    w0 = seq.mode_freqs[0]
    tau = t[:, None] - t[None, :]
    m = np.outer(k0, k0) * (np.sin(w0 * tau) - SQRT3 * np.sin(w0 * tau / SQRT3))
    return 2.0 * float(np.sum(np.tril(m, -1)))


# --------------------------------------------------------------------------
# branch-resolved operator product


def _mode_vector(spec, dim):
    if isinstance(spec, (int, np.integer)):
        return fock.fock_vector(int(spec), dim)
    return fock.coherent_vector(complex(spec), dim)


@dataclass
class BranchResult:
    """Final motional states per X-basis branch and their free-evolution references."""

    finals: dict
    references: dict

    def amplitude(self, label):
        """``<ref|final>`` for a branch: the diagonal element of ``U`` relative to free evolution."""
        return complex(np.prod([np.vdot(r, f) for r, f in
                                zip(self.references[label], self.finals[label])]))

    def overlaps(self):
        return {lab: abs(self.amplitude(lab)) ** 2 for lab in self.finals}

    def phase(self):
        """``Phi = [arg A(+X+X) - arg A(+X-X)] / 2``."""
        return float(np.angle(self.amplitude("+X+X") / self.amplitude("+X-X")) / 2)


def simulate_branches(seq, motional=(0, 0), n_max=60):
    """Apply the sequence to every X-basis branch, one mode at a time.

    The kick operator is block diagonal in the X basis and each block is a
    product over modes, so this equals the full operator product on
    ``(n_max + 1)^2``-level motion without forming it.  ``motional`` holds per
    mode a Fock number or a complex coherent amplitude.
    """
    dim = n_max + 1
    n = np.arange(dim)
    init = [_mode_vector(m, dim) for m in motional]
    cache = {}
    finals, refs = {}, {}
    for label, s1, s2 in BRANCHES:
        vecs = [v.copy() for v in init]
        prev = 0.0
        for t, dp in zip(seq.times, seq.kicks):
            for p, w in enumerate(seq.mode_freqs):
                vecs[p] = np.exp(-1j * w * n * (t - prev)) * vecs[p]
            mode, beta = branch_kick(s1, s2, dp)
            if beta != 0:
                key = (mode, beta)
                if key not in cache:
                    fock.truncation_guard(beta, n_max)
                    cache[key] = fock.displacement_matrix(dim, beta)
                vecs[mode] = cache[key] @ vecs[mode]
            prev = t
        finals[label] = vecs
        refs[label] = [np.exp(-1j * w * n * seq.total_time) * v
                       for v, w in zip(init, seq.mode_freqs)]
    return BranchResult(finals, refs)


def extracted_phase(seq, motional=(0, 0), n_max=60):
    return simulate_branches(seq, motional, n_max).phase()


# --------------------------------------------------------------------------
# designer


def _unpack(x, n):
    u = x[:n]
    tau = np.concatenate([[0.0], x[n:]])
    return u, tau


def _residuals(x, n, r, q, target):
    u, tau = _unpack(x, n)
    c0 = np.sum(u * np.exp(1j * tau))
    c1 = r * np.sum(u * np.exp(1j * q * tau))
    d = tau[:, None] - tau[None, :]
    m = np.outer(u, u) * (np.sin(d) - r * r * np.sin(q * d))
    phi = 2.0 * np.sum(np.tril(m, -1))
    return np.array([c0.real, c0.imag, c1.real, c1.imag, phi - target, np.sum(u)])


def _seeds(n, target, r, q, tau_max, rng, n_random):
    pattern = np.resize([1.0, -1.0, -1.0, 1.0], n)
    for k in range(1, 13):
        tau = np.arange(n) * k * math.pi / 2
        if tau[-1] > tau_max:
            break
        # u -> -u leaves every constraint invariant, so one sign suffices
        x = np.concatenate([pattern, tau[1:]])
        phi = _residuals(x, n, r, q, 0.0)[4]
        if phi * target > 0:
            yield np.concatenate([pattern * math.sqrt(target / phi), tau[1:]])
    for _ in range(n_random):
        tau = np.sort(rng.uniform(0, tau_max, n - 1))
        u = rng.normal(size=n)
        u -= u.mean()
        x = np.concatenate([u, tau])
        phi = _residuals(x, n, r, q, 0.0)[4]
        if phi * target > 0:
            yield np.concatenate([u * math.sqrt(target / phi), tau])


def _feasible(x, n, r, q, target, gap, tau_max, tol):
    u, tau = _unpack(x, n)
    return (np.max(np.abs(_residuals(x, n, r, q, target))) < tol
            and np.all(np.diff(tau) >= gap * (1 - 1e-9)) and tau[-1] <= tau_max)


def _minimize_time(x0, n, r, q, target, gap, tau_max, u_max):
    """Shortest schedule near ``x0`` with ``|u_j| <= u_max``."""
    cons = [{"type": "eq", "fun": lambda x: _residuals(x, n, r, q, target)},
            {"type": "ineq", "fun": lambda x: np.diff(_unpack(x, n)[1]) - gap}]
    bounds = [(-u_max, u_max)] * n + [(0, tau_max)] * (n - 1)
    res = minimize(lambda x: x[-1], x0, jac=lambda x: np.eye(len(x))[-1], method="SLSQP",
                   constraints=cons, bounds=bounds, options={"maxiter": 500, "ftol": 1e-14})
    return res.x


def _polish(x, n, r, q, target):
    """Newton refinement with the final time held fixed."""
    tau_n = x[-1]

    def f(y):
        return _residuals(np.concatenate([y, [tau_n]]), n, r, q, target)

    res = least_squares(f, x[:-1], method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=2000)
    return np.concatenate([res.x, [tau_n]])


def design_sequence(n_pulses, dp_base, mode_freqs, *, target=math.pi / 4, max_total_time=None,
                    max_kick=None, t_pulse=1e-8, n_random=40, seed=0):
    """Find kick scales and times that close both mode loops and give ``Phi = target``.

    Constraints: both closure conditions, ``Phi = target`` and ``sum_j z_j = 0``
    (so the carrier phases from a static offset cancel).  A multistart least
    squares from the ``(1, -1, -1, 1)`` pattern at quarter-period spacings
    finds feasible schedules; each is then shortened (minimal ``T_N``) with
    ``|z_j|`` bounded by ``max_kick`` (default: that schedule's own largest
    ``|z_j|``) and polished by a Newton solve at fixed ``T_N``.  The shortest
    result wins, ties broken by lexicographic ``z``.

    Raises
    ------
    ConvergenceError
        No schedule meets closure < 1e-9 dp_base and ``|Phi - target| < 1e-6``.
    """
    if n_pulses < 4:
        raise ConfigError("at least 4 pulses are needed (5 constraints)")
    w0, w1 = mode_freqs
    base = dp_base[0]
    r = dp_base[1] / base
    q = w1 / w0
    tau_max = w0 * max_total_time if max_total_time else 20 * math.pi * n_pulses
    gap = 2 * w0 * t_pulse
    rng = np.random.default_rng(seed)
    tol = 1e-10
    candidates, best = [], None
    for x0 in _seeds(n_pulses, target, r, q, tau_max, rng, n_random):
        res = least_squares(_residuals, x0, args=(n_pulses, r, q, target), method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=300)
        err = float(np.max(np.abs(res.fun)))
        if best is None or err < best[0]:
            best = (err, res.x)
        if not _feasible(res.x, n_pulses, r, q, target, gap, tau_max, tol):
            continue
        u_max = max_kick * base if max_kick else float(np.max(np.abs(res.x[:n_pulses])))
        x = _minimize_time(res.x, n_pulses, r, q, target, gap, tau_max, u_max)
        for trial in (x, res.x):
            y = _polish(trial, n_pulses, r, q, target)
            ok = _feasible(y, n_pulses, r, q, target, gap, tau_max, tol) and \
                np.max(np.abs(y[:n_pulses])) <= u_max * (1 + 1e-6)
            if ok:
                candidates.append(y)
                break
    if not candidates:
        err, x = best if best else (math.inf, None)
        raise ConvergenceError(f"no feasible {n_pulses}-pulse sequence found "
                               f"(best max residual {err:.3g})", best=x)
    candidates.sort(key=lambda y: (round(y[-1], 9), tuple(np.round(y[:n_pulses], 12))))
    u, tau = _unpack(candidates[0], n_pulses)
    return PulseSequence(tau / w0, u / base, dp_base, mode_freqs, t_pulse)


# --------------------------------------------------------------------------
# phase-space paths


@dataclass(frozen=True)
class Trajectory:
    """Polylines of ``(x/x0, p/p0)`` per branch and mode, with sample times."""

    paths: dict  # (branch, mode) -> (t, x, p) arrays

    def endpoint_error(self, branch, mode):
        _, x, p = self.paths[(branch, mode)]
        return math.hypot(x[-1] - x[0], p[-1] - p[0])

    def max_excursion(self, branch, mode):
        _, x, p = self.paths[(branch, mode)]
        return float(np.max(np.hypot(x, p)))

    def rows(self):
        """CSV rows ``(mode, branch, x_over_x0, p_over_p0, t_s)`` in a fixed order."""
        out = []
        for (branch, mode) in sorted(self.paths):
            t, x, p = self.paths[(branch, mode)]
            out += [(mode, branch, float(a), float(b), float(c)) for a, b, c in zip(x, p, t)]
        return out


def _path(seq, beta_of_kick, w, alpha0, samples_per_period, frame):
    """Coherent amplitude through kicks and free rotation."""
    ts, amps = [0.0], [alpha0]
    alpha, prev = complex(alpha0), 0.0
    period = 2 * math.pi / w
    for t, dp in zip(seq.times, seq.kicks):
        span = t - prev
        if span > 0:
            k = max(2, int(math.ceil(samples_per_period * span / period)))
            for s in np.linspace(0, span, k + 1)[1:]:
                ts.append(prev + s)
                amps.append(alpha * np.exp(-1j * w * s))
            alpha = alpha * np.exp(-1j * w * span)
        alpha = alpha + beta_of_kick(dp)
        ts.append(t)
        amps.append(alpha)
        prev = t
    ts, amps = np.array(ts), np.array(amps)
    if frame == "rotating":
        amps = amps * np.exp(1j * w * ts)
    return ts, 2 * amps.real, 2 * amps.imag


def trajectory(seq, branches=None, alpha0=(0j, 0j), samples_per_period=64, frame="lab"):
    """Phase-space path of both modes for each requested X-basis branch.

    ``frame="lab"`` traces the circular arcs of free motion; ``"rotating"``
    removes the free rotation, leaving the polygon of kicks.

    ``<x>/x0 = 2 Re(alpha)`` and ``<p>/p0 = 2 Im(alpha)`` with
    ``x0 = sqrt(hbar / 2 m w)``, ``p0 = sqrt(hbar m w / 2)``.
    """
    labels = {b[0]: b for b in BRANCHES}
    chosen = branches or [b[0] for b in BRANCHES]
    paths = {}
    for label in chosen:
        _, s1, s2 = labels[label]
        for p, w in enumerate(seq.mode_freqs):
            def kick(dp, p=p):
                mode, beta = branch_kick(s1, s2, dp)
                return beta if mode == p else 0j
            paths[(label, p)] = _path(seq, kick, w, alpha0[p], samples_per_period, frame)
    return Trajectory(paths)


def loop_area(x, p):
    """Signed shoelace area of a closed polyline (counter-clockwise positive)."""
    return 0.5 * float(np.sum(x * np.roll(p, -1) - np.roll(x, -1) * p))


# --------------------------------------------------------------------------
# finite pulses with a static offset


def finite_pulse_phase(seq, cfg, x_eq, n_max=None, dt=None):
    """``Phi`` from integrating the quadrupole drive through finite pulses.

    Pulse ``j`` is a resonant tone of amplitude ``z_j V_m / 2`` centred at
    ``T_j`` and lasting ``t_pulse``; ``x_eq`` adds the carrier term.  Motion
    starts in the ground state of both modes.
    """
    trap = cfg.trap.__class__(**{**cfg.trap.__dict__, "x_eq": x_eq})
    modes = two_ion_modes(trap)
    freqs = [m.frequency for m in modes]
    if not np.allclose(freqs, seq.mode_freqs, rtol=1e-12):
        raise ConfigError("sequence mode frequencies do not match the trap")
    n_max = n_max or cfg.ultrafast.n_max
    space = fock.HilbertSpace(2, (n_max + 1, n_max + 1), 2)
    etas = mode_etas(modes, cfg.molecule, trap)
    tau = seq.t_pulse
    block = np.stack([fock.product_state(space, ("+x", "+x"), (0, 0)).amplitudes,
                      fock.product_state(space, ("+x", "-x"), (0, 0)).amplitudes], axis=1)
    for t_j, z in zip(seq.times, seq.z):
        start = t_j - tau / 2
        tone = QuadrupoleTone(0.0, abs(z) * cfg.drive.voltage / 2, 0.0 if z >= 0 else math.pi)
        ham = build_e2(space, [tone], etas, freqs, cfg.molecule, trap, frame="interaction")
        # interaction-picture time origin shifted to the pulse start
        shift = free_propagator(space, start, freqs).matrix
        block = shift @ block
        # the resonant carrier commutes with the rest of the pulse, so only the
        # mode coupling sets the step
        step = dt or min(default_step(build_e2(space, [tone], etas, freqs, cfg.molecule, trap,
                                               include_carrier=False)), tau / 8)
        block = _apply_steps(ham, block, 0.0, tau, step)
        block = shift.conj().T @ block
    ref = [fock.product_state(space, ("+x", "+x"), (0, 0)).amplitudes,
           fock.product_state(space, ("+x", "-x"), (0, 0)).amplitudes]
    a_pp = np.vdot(ref[0], block[:, 0])
    a_pm = np.vdot(ref[1], block[:, 1])
    return float(np.angle(a_pp / a_pm) / 2)


def xeq_robustness_check(seq, cfg, x_eq, **kwargs):
    """``|Phi(x_eq) - Phi(0)|`` from finite-pulse integration."""
    if x_eq == 0:
        return 0.0
    return abs(finite_pulse_phase(seq, cfg, x_eq, **kwargs) - finite_pulse_phase(seq, cfg, 0.0,
                                                                                  **kwargs))


def carrier_eigenstate_check(space, rabi, x_eq, field_radius, label=("+x", "+x")):
    """Return ``|<psi|H_c|psi>|^2 / <psi|H_c^2|psi>`` (1 for an eigenstate)."""
    h = (fock.pauli(space, "x", 0) + fock.pauli(space, "x", 1)) * (2 * rabi * x_eq / field_radius)
    psi = fock.product_state(space, label, tuple(0 for _ in space.fock_dims)).amplitudes
    hp = h.matrix @ psi
    return abs(np.vdot(psi, hp)) ** 2 / max(np.vdot(hp, hp).real, 1e-300)
