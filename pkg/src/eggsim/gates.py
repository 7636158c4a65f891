"""Analytic gate propagators, the shelve/map/displace/detect readout, and fidelities.

Internal conventions follow :mod:`eggsim.fock`: ``|+X> = (|g> + |e>)/sqrt 2``
and ``sigma_x`` acts on the ``(g, e)`` pair; a shelf level ``|a>`` (when
``internal_dim = 3``) is a spectator of every gate here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import fock
from .errors import AmbiguousThresholdError
from .model import eta_scale, ms_angle, ms_validity_ratio, rabi_from_voltage, thermal_occupation
from .scenarios import fock_cutoff

#: below this gamma / (2 Omega eta) the effective spin-spin Hamiltonian is unreliable
MS_VALIDITY_MIN = 10.0
#: largest misclassified probability tolerated before a threshold counts as ambiguous
THRESHOLD_TOL = 1e-9


@dataclass
class GateOutcome:
    """Result of applying a gate: state, fidelity against the ideal, phases, duration."""

    state: object
    fidelity: float
    phases: dict = field(default_factory=dict)
    duration: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")


def _local(space, matrix, molecule):
    """Embed a single-molecule internal matrix acting on ``molecule``."""
    return fock.Operator(space, fock._embed(space, np.asarray(matrix, dtype=complex), molecule))


def _qubit_block(space, m2):
    """Internal matrix with ``m2`` on (g, e) and identity on the shelf."""
    out = np.eye(space.internal_dim, dtype=complex)
    out[:2, :2] = m2
    return out


def rotation_matrix(phi, theta):
    """2x2 ``exp(-i theta/2 (cos phi sigma_x + sin phi sigma_y))`` in the (g, e) basis."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, 1j], [-1j, 0]], dtype=complex)
    gen = math.cos(phi) * sx + math.sin(phi) * sy
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * gen


def single_qubit_rotation(space, phi, theta, molecule=0):
    """Resonant dipole-drive rotation by ``theta`` about the equatorial axis ``phi``.

    ``phi = 0`` is the X axis, ``phi = pi/2`` the Y axis; ``theta = pi/2``
    about Y maps ``|e>`` to ``|+X>``.  A resonant drive of Rabi frequency
    ``Omega`` takes ``theta / Omega``.
    """
    return _local(space, _qubit_block(space, rotation_matrix(phi, theta)), molecule)


def u_displacement(space, rabi, eta_q, t, mode=0, molecule=0):
    """Spin-dependent displacement generated by the matched bichromatic drive.

    ``|-X><-X| D(2 i Omega eta t) + |+X><+X| D(-2 i Omega eta t)``, identity
    on the shelf level.  Raises :class:`TruncationError` if ``|2 Omega eta t|^2``
    is too large for the mode cutoff.
    """
    beta = 2j * rabi * eta_q * t
    d_minus = fock.displacement(space, mode, beta)
    d_plus = fock.displacement(space, mode, -beta)
    p_plus = np.zeros((space.internal_dim,) * 2, dtype=complex)
    p_plus[:2, :2] = 0.5 * np.array([[1, 1], [1, 1]])
    p_minus = np.zeros_like(p_plus)
    p_minus[:2, :2] = 0.5 * np.array([[1, -1], [-1, 1]])
    op = _local(space, p_plus, molecule) @ d_plus + _local(space, p_minus, molecule) @ d_minus
    if space.internal_dim > 2:
        shelf = np.zeros_like(p_plus)
        shelf[2:, 2:] = np.eye(space.internal_dim - 2)
        op = op + _local(space, shelf, molecule)
    return op


def u_ms(space, rabi, eta1, eta2, detuning, t):
    """Effective MS propagator ``exp(-i theta sigma_x^(1) sigma_x^(2))``, identity on motion.

    ``theta = 2 Omega^2 eta1 eta2 t / gamma``.  Warns when
    ``gamma / (2 Omega eta) < 10``.
    """
    if space.n_molecules != 2:
        raise ValueError("u_ms needs a two-molecule space")
    eta_max = max(abs(eta1), abs(eta2))
    if eta_max and ms_validity_ratio(detuning, rabi, eta_max) < MS_VALIDITY_MIN:
        warnings.warn(f"MS validity ratio {ms_validity_ratio(detuning, rabi, eta_max):.3g} "
                      f"< {MS_VALIDITY_MIN}; the effective Hamiltonian is not reliable",
                      RuntimeWarning, stacklevel=2)
    theta = ms_angle(rabi, eta1, eta2, detuning, t)
    sxx = fock.pauli(space, "x", 0) @ fock.pauli(space, "x", 1)
    return fock.identity(space) * math.cos(theta) + sxx * (-1j * math.sin(theta))


def ms_target(rabi, eta1, eta2, detuning, t):
    """Internal 4-vector ``u_ms(t)|g,g>`` (basis gg, ge, eg, ee)."""
    theta = ms_angle(rabi, eta1, eta2, detuning, t)
    return np.array([math.cos(theta), 0, 0, -1j * math.sin(theta)], dtype=complex)


def bell_fidelity(state, rabi, eta1, eta2, detuning, t):
    """Overlap of the reduced internal state with ``u_ms(t)|g,g>``.

    Motion is traced out and ensembles are weight-averaged.  The target phase
    is fixed (at ``theta = pi/4`` it is ``(|gg> - i|ee>)/sqrt 2``); no local
    phase optimization is done.
    """
    space = state.space
    if space.n_molecules != 2 or space.internal_dim != 2:
        raise ValueError("bell_fidelity needs two two-level molecules")
    rho = fock.reduced_internal(state)
    target = ms_target(rabi, eta1, eta2, detuning, t)
    return float(np.real(target.conj() @ rho @ target))


# --------------------------------------------------------------------------
# state preparation and measurement


@dataclass
class SpamRecord:
    """Outcome of one run of the readout sequence.

    ``energy`` is the motional energy deposited in the heralded branch in
    units of ``hbar w_q`` (conditional mean over the thermal ensemble).
    """

    herald: str  # "bright" | "dark"
    energy: float
    label: str  # "e" (left in |+X>) or "g" (left in |a>)
    threshold: float
    p_bright: float
    misclassification: float
    repeat_heralds: list = field(default_factory=list)
    repeat_probability: float = 1.0
    steps: list = field(default_factory=list)

    def __post_init__(self):
        if (self.herald == "bright") != (self.energy >= self.threshold):
            raise ValueError("herald disagrees with the deposited energy and threshold")

    def to_dict(self):
        return {
            "herald": self.herald,
            "energy": self.energy,
            "label": self.label,
            "threshold": self.threshold,
            "p_bright": self.p_bright,
            "misclassification": self.misclassification,
            "repeat_heralds": list(self.repeat_heralds),
            "repeat_probability": self.repeat_probability,
            "steps": list(self.steps),
        }


def _as_internal3(initial):
    if isinstance(initial, str):
        return fock.internal_vector(initial, 3)
    v = np.asarray(initial, dtype=complex)
    if v.shape == (2,):
        v = np.concatenate([v, [0]])
    if v.shape != (3,):
        raise ValueError("initial internal state must have 2 or 3 components")
    return v / np.linalg.norm(v)


def displaced_energy_tail(alpha, fock_numbers, threshold, n_dim=None):
    """``P(m < threshold)`` for ``D(alpha)|n>`` for each ``n`` in ``fock_numbers``."""
    n_hi = int(max(fock_numbers))
    dim = n_dim or fock_cutoff(n_hi, abs(alpha))
    cols = fock.displacement_matrix(dim, alpha, columns=n_hi + 1)
    probs = np.abs(cols) ** 2
    m_below = int(math.ceil(threshold))
    return np.array([probs[:m_below, n].sum() for n in fock_numbers])


@dataclass(frozen=True)
class SpamModel:
    """Numbers shared by every run of the readout sequence."""

    nbar: float
    alpha: complex
    threshold: float
    weights: tuple
    false_dark: float  # P(bright branch lands below threshold)
    false_bright: float  # P(dark branch lands at or above threshold)
    dark_mean: float
    bright_mean: float


def spam_model(cfg, threshold=None):
    """Energy-detector model for ``cfg.spam``; raises if the threshold is ambiguous."""
    s, trap, mol = cfg.spam, cfg.trap, cfg.molecule
    w = trap.secular_frequency
    eta_q = eta_scale(w, mol.mass, trap.field_radius) * s.participation
    rabi = rabi_from_voltage(cfg.drive.voltage, mol, trap)
    alpha = -2j * rabi * eta_q * s.drive_time
    nbar = thermal_occupation(s.temperature, w)
    if threshold is None:
        threshold = s.threshold if s.threshold is not None else max(4 * nbar, abs(alpha) ** 2 / 4)
    weights = fock.thermal_fock_weights(nbar, s.thermal_eps)
    ns = [n for n, _ in weights]
    ps = np.array([p for _, p in weights])
    tail = displaced_energy_tail(alpha, ns, threshold)
    false_dark = float(ps @ tail)
    false_bright = float(sum(p for n, p in weights if n >= threshold))
    dark_mean = float(ps @ np.array(ns, dtype=float))
    bright_mean = dark_mean + abs(alpha) ** 2
    if max(false_dark, false_bright) > THRESHOLD_TOL:
        raise AmbiguousThresholdError(
            f"threshold {threshold:.4g} hbar*w does not separate the energy distributions "
            f"(dark mean {dark_mean:.4g}, bright mean {bright_mean:.4g}; misclassified "
            f"{max(false_dark, false_bright):.3g})", dark_mean, bright_mean)
    return SpamModel(nbar, alpha, float(threshold), tuple(weights), false_dark, false_bright,
                     dark_mean, bright_mean)


def _probs(v):
    return {k: float(abs(v[i]) ** 2) for k, i in (("g", 0), ("e", 1), ("a", 2))}


def spam_protocol(initial, cfg, threshold=None, *, rng=None, repeats=1, model=None):
    """Run shelve, map, displace and detect on one molecule.

    1. shelve: swap ``|g>`` and ``|a>``.
    2. map: ``pi/2`` rotation about Y takes ``|e>`` to ``|+X>``.
    3. displace: the matched bichromatic drive for ``cfg.spam.drive_time``
       adds ``|2 Omega eta t_d|^2`` quanta to any population left in (g, e).
    4. detect: ideal projective threshold on the motional energy.

    The measurement branch (steps 3 and 4, motion re-thermalized first) is
    then repeated ``repeats`` times on the post-measurement state.
    A superposition input is projected with probabilities drawn by ``rng``
    (``numpy.random.default_rng(0)`` when omitted).
    """
    model = model or spam_model(cfg, threshold)
    rng = rng if rng is not None else np.random.default_rng(0)
    v = _as_internal3(initial)
    steps = [{"step": "prepare", "populations": _probs(v)}]
    swap = np.eye(3, dtype=complex)[[2, 1, 0]]
    v = swap @ v
    steps.append({"step": "shelve g<->a", "populations": _probs(v)})
    r = np.eye(3, dtype=complex)
    r[:2, :2] = rotation_matrix(math.pi / 2, math.pi / 2)
    v = r @ v
    steps.append({"step": "map e->+X", "populations": _probs(v)})
    p_displaced = float(abs(v[0]) ** 2 + abs(v[1]) ** 2)
    steps.append({"step": "displace", "alpha": [model.alpha.real, model.alpha.imag],
                  "p_displaced": p_displaced})
    if p_displaced >= 1 - 1e-12:
        bright = True
    elif p_displaced <= 1e-12:
        bright = False
    else:
        bright = bool(rng.random() < p_displaced)
    if bright:
        post = v.copy()
        post[2] = 0
    else:
        post = np.array([0, 0, v[2]], dtype=complex)
    post /= np.linalg.norm(post)
    herald = "bright" if bright else "dark"
    energy = model.bright_mean - model.dark_mean if bright else 0.0
    steps.append({"step": "detect", "herald": herald, "energy": energy,
                  "threshold": model.threshold})
    # repeat the measurement branch on the projected state
    repeat_heralds, p_same = [], 1.0
    for _ in range(repeats):
        p_rep = float(abs(post[0]) ** 2 + abs(post[1]) ** 2)
        p_same *= p_rep if bright else 1.0 - p_rep
        repeat_heralds.append("bright" if p_rep >= 0.5 else "dark")
    if repeats:
        steps.append({"step": "repeat", "heralds": repeat_heralds, "p_same": p_same})
    return SpamRecord(herald=herald, energy=energy, label="e" if bright else "g",
                      threshold=model.threshold, p_bright=p_displaced,
                      misclassification=max(model.false_dark, model.false_bright),
                      repeat_heralds=repeat_heralds, repeat_probability=p_same, steps=steps)


def herald_loop(p_success, rng=None, max_attempts=10_000):
    """Count preparation attempts until a qubit-subspace herald succeeds.

    Stands in for the stochastic redistribution of population into the
    qubit manifold; the physics of each attempt is not modelled.
    """
    if not 0 < p_success <= 1:
        raise ValueError("p_success must be in (0, 1]")
    rng = rng if rng is not None else np.random.default_rng(0)
    for attempt in range(1, max_attempts + 1):
        if rng.random() < p_success:
            return attempt
    raise RuntimeError(f"no successful herald in {max_attempts} attempts")


__all__ = ["GateOutcome", "SpamRecord", "SpamModel", "rotation_matrix", "single_qubit_rotation",
           "u_displacement", "u_ms", "ms_target", "bell_fidelity", "spam_model", "spam_protocol",
           "displaced_energy_tail", "herald_loop"]
