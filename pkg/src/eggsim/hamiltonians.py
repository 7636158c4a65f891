"""Time-dependent Hamiltonians for dipole (E1) and quadrupole (E2) microwave drives.

Hamiltonians are stored in units of hbar (rad/s) as a sum of fixed operators
multiplied by scalar envelopes from a closed set: constant,
``amp cos(w t + phi)`` and ``amp exp(i (w t + phi))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fock
from .model import eta_scale, rabi_from_voltage


@dataclass(frozen=True)
class Envelope:
    kind: str = "const"  # "const" | "cos" | "exp"
    amplitude: complex = 1.0
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("const", "cos", "exp"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")

    def __call__(self, t):
        if self.kind == "const":
            return complex(self.amplitude)
        arg = self.frequency * t + self.phase
        if self.kind == "cos":
            return self.amplitude * math.cos(arg)
        return self.amplitude * complex(math.cos(arg), math.sin(arg))

    @property
    def max_frequency(self):
        return 0.0 if self.kind == "const" else abs(self.frequency)


@dataclass(frozen=True, eq=False)
class HamiltonianTerm:
    operator: fock.Operator
    envelope: Envelope = Envelope()
    frame: str = "interaction"


#: spaces up to this dimension are stepped with dense matrices (less overhead)
DENSE_DIM = 64


def _inf_norm(m):
    return float(abs(m).sum(axis=1).max()) if m.nnz else 0.0


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """``H(t)/hbar = sum_k envelope_k(t) O_k``.

    ``period`` is set when every envelope frequency is an integer multiple of
    ``2 pi / period``; :func:`eggsim.dynamics.evolve` then reuses a one-period
    propagator.
    """

    space: fock.HilbertSpace
    terms: tuple
    period: float | None = None
    frame: str = "interaction"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.operator.space != self.space:
                raise ValueError("Hamiltonian term lives in a different space")
        mats = [sp.csr_matrix(t.operator.matrix) for t in self.terms]
        object.__setattr__(self, "_mats", mats)
        # every term scattered onto the union sparsity pattern, so H(t) is one product
        dim = self.space.dim
        pattern, stack = None, None
        if mats:
            union = sum((abs(m) for m in mats), sp.csr_matrix((dim, dim))).tocsr()
            union.sort_indices()
            rows = np.repeat(np.arange(dim), np.diff(union.indptr))
            lookup = {(r, c): k for k, (r, c) in enumerate(zip(rows.tolist(),
                                                                union.indices.tolist()))}
            stack = np.zeros((len(mats), union.nnz), dtype=complex)
            for i, m in enumerate(mats):
                coo = m.tocoo()
                idx = [lookup[rc] for rc in zip(coo.row.tolist(), coo.col.tolist())]
                np.add.at(stack[i], idx, coo.data)
            pattern = (union.indices.copy(), union.indptr.copy())
        object.__setattr__(self, "_pattern", pattern)
        object.__setattr__(self, "_stack", stack)
        dense = None
        if mats and dim <= DENSE_DIM:
            dense = np.stack([m.toarray().ravel() for m in mats]).astype(complex)
        object.__setattr__(self, "_dense_stack", dense)

    def matrix(self, t):
        dim = self.space.dim
        if self._pattern is None:
            return sp.csr_matrix((dim, dim), dtype=complex)
        coeffs = np.array([term.envelope(t) for term in self.terms], dtype=complex)
        indices, indptr = self._pattern
        return sp.csr_matrix((coeffs @ self._stack, indices, indptr), shape=(dim, dim))

    def step_matrix(self, t):
        """``H(t)`` in the cheapest form for time stepping: dense for small spaces."""
        if self._dense_stack is None:
            return self.matrix(t)
        coeffs = np.array([term.envelope(t) for term in self.terms], dtype=complex)
        dim = self.space.dim
        return (coeffs @ self._dense_stack).reshape(dim, dim)

    def __call__(self, t):
        return fock.Operator(self.space, self.matrix(t))

    def __add__(self, other):
        if other.space != self.space:
            raise ValueError("cannot add Hamiltonians on different spaces")
        period = self.period if self.period == other.period else None
        return Hamiltonian(self.space, self.terms + other.terms, period, self.frame)

    def with_period(self, period):
        return Hamiltonian(self.space, self.terms, period, self.frame)

    @property
    def max_frequency(self):
        return max((t.envelope.max_frequency for t in self.terms), default=0.0)

    def norm_bound(self):
        """Upper bound on ``max_t ||H(t)||``."""
        return sum(abs(t.envelope.amplitude) * _inf_norm(m) for t, m in zip(self.terms, self._mats))

    def is_hermitian(self, t, rtol=1e-12):
        m = self.matrix(t)
        scale = abs(m).max() if m.nnz else 0.0
        diff = m - m.conj().T
        return (abs(diff).max() if diff.nnz else 0.0) <= rtol * max(scale, 1e-300)


def _pair(op, amplitude, frequency, phase=0.0, frame="interaction"):
    """``amp e^{i(w t + phi)} op + h.c.`` as two terms."""
    return [HamiltonianTerm(op, Envelope("exp", amplitude, frequency, phase), frame),
            HamiltonianTerm(op.dag(), Envelope("exp", np.conj(amplitude), -frequency, -phase), frame)]


# --------------------------------------------------------------------------
# builders


def build_e1(space, rabi, detuning, phase=0.0, molecule=0, splitting=None):
    """Dipole-configuration carrier drive ``(Omega/2)(sigma_+ e^{i(delta t - phi)} + h.c.)``.

    With ``splitting`` given, the RWA validity ratio ``Delta / Omega`` is
    attached to the returned Hamiltonian as ``rwa_ratio``.
    """
    sp_op = fock.pauli(space, "+", molecule)
    terms = _pair(sp_op, rabi / 2.0, detuning, -phase)
    period = 2 * math.pi / abs(detuning) if detuning else None
    ham = Hamiltonian(space, terms, period=period)
    if splitting is not None:
        object.__setattr__(ham, "rwa_ratio", splitting / rabi if rabi else math.inf)
    return ham


@dataclass(frozen=True)
class QuadrupoleTone:
    """A quadrupole tone expressed relative to the qubit: ``delta = Delta - w_m``."""

    detuning: float
    voltage: float
    phase: float = 0.0


def tone_from_drive(tone, molecule):
    if tone.geometry != "quadrupole":
        raise ValueError("build_e2 only accepts quadrupole tones")
    return QuadrupoleTone(molecule.splitting - tone.frequency, tone.amplitude, tone.phase)


def build_e2(space, tones, etas, mode_frequencies, molecule, trap, frame="interaction",
             reference_frequencies=None, include_carrier=True, period=None):
    """Quadrupole gradient drive including the ``x_eq`` carrier term.

    Parameters
    ----------
    space : HilbertSpace
        One or two molecules, one or more modes.
    tones : sequence of DriveTone or QuadrupoleTone
    etas : array (n_modes, n_molecules)
        Signed couplings ``eta_p^(i)``.
    mode_frequencies : sequence of float
    frame : {"interaction", "lab", "rotating"}
        ``interaction``: motion in the interaction picture of ``H_o``.
        ``lab``: motion undisplaced in time, ``H_o`` added explicitly.
        ``rotating``: motion rotating at ``reference_frequencies``; the
        residual ``(w_p - w_ref) a^dag a`` is added.

    Each tone contributes
    ``2 Omega_k [sum_p eta_p^(i) (a_p e^{-i w_ref t} + h.c.) + x_eq / r_o] (sigma_+ e^{i(delta_k t - phi_k)} + h.c.)``
    with ``Omega_k = d V_k / (2 r_o hbar)``.
    """
    tones = [t if isinstance(t, QuadrupoleTone) else tone_from_drive(t, molecule) for t in tones]
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    n_modes = len(mode_frequencies)
    if etas.shape != (n_modes, space.n_molecules):
        raise ValueError(f"etas must have shape ({n_modes}, {space.n_molecules})")
    if frame == "interaction":
        refs = list(mode_frequencies)
    elif frame == "lab":
        refs = [0.0] * n_modes
    elif frame == "rotating":
        if reference_frequencies is None:
            raise ValueError("rotating frame needs reference_frequencies")
        refs = list(reference_frequencies)
    else:
        raise ValueError(f"unknown frame {frame!r}")

    ladders = [fock.ladder(space, p)[0] for p in range(n_modes)]
    terms = []
    for p in range(n_modes):
        residual = mode_frequencies[p] - refs[p]
        if residual != 0:
            terms.append(HamiltonianTerm(fock.number_operator(space, p) * residual, Envelope(), frame))
    for tone in tones:
        rabi = rabi_from_voltage(tone.voltage, molecule, trap)
        if rabi == 0:
            continue
        for i in range(space.n_molecules):
            s_plus = fock.pauli(space, "+", i)
            for p in range(n_modes):
                g = 2.0 * rabi * etas[p, i]
                if g == 0:
                    continue
                a = ladders[p]
                # sigma_+ a and sigma_+ a^dag, each with its Hermitian conjugate
                terms += _pair(s_plus @ a, g, tone.detuning - refs[p], -tone.phase, frame)
                terms += _pair(s_plus @ a.dag(), g, tone.detuning + refs[p], -tone.phase, frame)
            if include_carrier and trap.x_eq != 0:
                c = 2.0 * rabi * trap.x_eq / trap.field_radius
                terms += _pair(s_plus, c, tone.detuning, -tone.phase, frame)
    return Hamiltonian(space, terms, period=period, frame=frame)


def mode_etas(modes, molecule, trap):
    """Signed couplings ``eta_p^(i)`` as an (n_modes, n_ions) array."""
    return np.array([[eta_scale(m.frequency, molecule.mass, trap.field_radius) * b
                      for b in m.participation] for m in modes])


def build_carrier_error(space, rabi, x_eq, field_radius, mode_frequency, detuning):
    """Residual carrier ``(4 Omega x_eq / r_o)(sigma_x^(1) + sigma_x^(2)) cos((w_q + gamma) t)``."""
    if space.n_molecules != 2:
        raise ValueError("carrier-error Hamiltonian needs a two-molecule space")
    sx = fock.pauli(space, "x", 0) + fock.pauli(space, "x", 1)
    nu = mode_frequency + detuning
    amp = 4.0 * rabi * x_eq / field_radius
    term = HamiltonianTerm(sx, Envelope("cos", amp, nu), "interaction")
    return Hamiltonian(space, (term,), period=2 * math.pi / nu)


def build_bichromatic_effective(space, rabi, eta_q, mode=0, molecule=0):
    """Time-independent ``2 Omega eta (a + a^dag) sigma_x``."""
    a, ad = fock.ladder(space, mode)
    op = (fock.pauli(space, "x", molecule) @ (a + ad)) * (2.0 * rabi * eta_q)
    return Hamiltonian(space, (HamiltonianTerm(op),))


def build_free(space, mode_frequencies):
    """``sum_p w_p a_p^dag a_p``."""
    terms = [HamiltonianTerm(fock.number_operator(space, p) * w, Envelope(), "lab")
             for p, w in enumerate(mode_frequencies)]
    return Hamiltonian(space, terms, frame="lab")
