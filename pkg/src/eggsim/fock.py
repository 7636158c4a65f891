"""Truncated Fock-space algebra for molecules coupled to motional modes.

Basis ordering is fixed: molecule 1's internal index is slowest, then
molecule 2, then the motional modes in declared order (last mode fastest).
Internal levels are ``g = 0``, ``e = 1`` and, when modelled, the shelf
``a = 2``.  ``sigma_z`` has ``|g>`` as its -1 eigenstate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import TruncationError

G, E, A = 0, 1, 2

#: coherent states with |alpha|^2 <= GUARD_FACTOR * n_max keep < 1e-8 population above n_max
GUARD_FACTOR = 0.5


@dataclass(frozen=True)
class HilbertSpace:
    internal_dim: int = 2
    fock_dims: tuple[int, ...] = ()
    n_molecules: int = 1

    def __post_init__(self):
        object.__setattr__(self, "fock_dims", tuple(int(n) for n in self.fock_dims))
        if self.n_molecules and self.internal_dim not in (2, 3):
            raise ValueError("internal_dim must be 2 or 3")
        if self.n_molecules not in (0, 1, 2):
            raise ValueError("n_molecules must be 0, 1 or 2")
        if any(n < 2 for n in self.fock_dims):
            raise ValueError("every Fock dimension must be >= 2")

    @property
    def internal_size(self):
        return self.internal_dim ** self.n_molecules

    @property
    def motional_size(self):
        return int(np.prod(self.fock_dims, dtype=int)) if self.fock_dims else 1

    @property
    def dim(self):
        return self.internal_size * self.motional_size

    @property
    def shape(self):
        return (self.internal_dim,) * self.n_molecules + self.fock_dims

    def n_max(self, mode):
        return self.fock_dims[mode] - 1

    def check_mode(self, mode):
        if not 0 <= mode < len(self.fock_dims):
            raise IndexError(f"mode {mode} not in space with {len(self.fock_dims)} modes")

    def index(self, internal=(), fock=()):
        """Flat basis index of ``|internal...> (x) |fock...>``."""
        if isinstance(internal, int):
            internal = (internal,)
        return int(np.ravel_multi_index(tuple(internal) + tuple(fock), self.shape))


def _identity(n):
    return sp.identity(n, dtype=complex, format="csr")


@dataclass(frozen=True, eq=False)
class Operator:
    """Operator on a :class:`HilbertSpace`; ``matrix`` is a scipy sparse matrix or ndarray."""

    space: HilbertSpace
    matrix: object

    def __post_init__(self):
        if self.matrix.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dim {self.space.dim}")

    def dense(self):
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    def dag(self):
        return Operator(self.space, self.matrix.conj().T)

    def _check(self, other):
        if other.space != self.space:
            raise ValueError("operator spaces differ")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            self._check(other)
            return StateVector(self.space, np.asarray(self.matrix @ other.amplitudes).ravel(),
                               check_norm=False)
        return NotImplemented

    def __add__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return Operator(self.space, self.matrix * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray
    check_norm: bool = True

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.size != self.space.dim:
            raise ValueError(f"state has {amps.size} amplitudes, space dim is {self.space.dim}")
        if self.check_norm and abs(self.norm() - 1.0) > 1e-9:
            raise ValueError(f"state not normalized (norm {self.norm():.12f})")

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor_array(self):
        return self.amplitudes.reshape(self.space.shape)

    def to_json(self, atol=0.0):
        """Debug dump: list of ``[basis index, re, im]`` for nonzero amplitudes."""
        idx = np.nonzero(np.abs(self.amplitudes) > atol)[0]
        return json.dumps([[int(i), float(self.amplitudes[i].real), float(self.amplitudes[i].imag)]
                           for i in idx])


@dataclass(frozen=True, eq=False)
class MixedEnsemble:
    """Weighted list of pure states representing a mixed state."""

    members: tuple

    def __post_init__(self):
        members = tuple((float(w), s) for w, s in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("empty ensemble")
        ws = np.array([w for w, _ in members])
        if np.any(ws < 0) or abs(ws.sum() - 1.0) > 1e-9:
            raise ValueError("ensemble weights must be >= 0 and sum to 1")
        if len({s.space for _, s in members}) != 1:
            raise ValueError("ensemble members live in different spaces")

    @property
    def space(self):
        return self.members[0][1].space

    @property
    def weights(self):
        return np.array([w for w, _ in self.members])

    def block(self):
        """Member amplitudes as columns of a (dim, K) array."""
        return np.stack([s.amplitudes for _, s in self.members], axis=1)


# --------------------------------------------------------------------------
# state constructors


def fock_vector(n, dim):
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} outside 0..{dim - 1}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_vector(alpha, dim):
    """Coherent-state amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` on ``dim`` levels."""
    n = np.arange(dim)
    if alpha == 0:
        return fock_vector(0, dim)
    logmag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in n])
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


INTERNAL_STATES = {
    "g": np.array([1, 0], dtype=complex),
    "e": np.array([0, 1], dtype=complex),
    "+x": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "-x": np.array([1, -1], dtype=complex) / math.sqrt(2),
}


def internal_vector(label, internal_dim=2):
    """Single-molecule internal vector for ``g``, ``e``, ``a``, ``+x`` or ``-x``."""
    label = label.lower()
    if label == "a":
        if internal_dim < 3:
            raise ValueError("shelf state |a> needs internal_dim = 3")
        return fock_vector(A, 3)
    v = INTERNAL_STATES[label]
    return np.concatenate([v, np.zeros(internal_dim - 2)])


def product_state(space, internal, modes=()):
    """Normalized product state.

    ``internal`` is a label like ``"g"``/``"+x"`` per molecule (or an explicit
    vector); ``modes`` holds per mode either an integer Fock number or a
    ``("coherent", alpha)`` pair or an explicit vector.
    """
    if isinstance(internal, str):
        internal = (internal,)
    factors = []
    for item in internal:
        factors.append(internal_vector(item, space.internal_dim) if isinstance(item, str)
                       else np.asarray(item, dtype=complex))
    if len(factors) != space.n_molecules:
        raise ValueError(f"need {space.n_molecules} internal factors, got {len(factors)}")
    if len(modes) != len(space.fock_dims):
        raise ValueError(f"need {len(space.fock_dims)} mode factors, got {len(modes)}")
    for spec, dim in zip(modes, space.fock_dims):
        if isinstance(spec, (int, np.integer)):
            factors.append(fock_vector(int(spec), dim))
        elif isinstance(spec, tuple) and spec[0] == "coherent":
            factors.append(coherent_vector(spec[1], dim))
        else:
            factors.append(np.asarray(spec, dtype=complex))
    vec = reduce(np.kron, factors, np.ones(1, dtype=complex))
    return StateVector(space, vec / np.linalg.norm(vec))


# --------------------------------------------------------------------------
# operators


def _embed(space, local, position):
    """Embed a local factor matrix at tensor position ``position`` of ``space.shape``."""
    dims = space.shape
    left = int(np.prod(dims[:position], dtype=int))
    right = int(np.prod(dims[position + 1:], dtype=int))
    m = sp.kron(sp.kron(_identity(left), sp.csr_matrix(local)), _identity(right), format="csr")
    return m


def annihilation_matrix(dim):
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr").astype(complex)


def ladder(space, mode):
    """Return ``(a, a_dag)`` for ``mode``; ``a|n> = sqrt(n)|n-1>``."""
    space.check_mode(mode)
    a = _embed(space, annihilation_matrix(space.fock_dims[mode]), space.n_molecules + mode)
    return Operator(space, a), Operator(space, a.conj().T.tocsr())


def number_operator(space, mode):
    space.check_mode(mode)
    n = sp.diags(np.arange(space.fock_dims[mode], dtype=complex), 0, format="csr")
    return Operator(space, _embed(space, n, space.n_molecules + mode))


def identity(space):
    return Operator(space, _identity(space.dim))


def _pair_matrix(internal_dim, axis, pair):
    lo, hi = pair  # lo plays |g>, hi plays |e>
    m = np.zeros((internal_dim, internal_dim), dtype=complex)
    axis = axis.lower()
    if axis == "x":
        m[lo, hi] = m[hi, lo] = 1
    elif axis == "y":
        # sigma_y = -i sigma_+ + i sigma_-, sigma_+ = |hi><lo|
        m[hi, lo] = -1j
        m[lo, hi] = 1j
    elif axis == "z":
        m[hi, hi], m[lo, lo] = 1, -1
    elif axis == "+":
        m[hi, lo] = 1
    elif axis == "-":
        m[lo, hi] = 1
    else:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return m


def pauli(space, axis, molecule=0, internal_pair=(G, E)):
    """Pauli ``x``/``y``/``z`` (or ``+``/``-``) on ``internal_pair`` of ``molecule``."""
    if not 0 <= molecule < space.n_molecules:
        raise IndexError(f"molecule {molecule} not in space")
    local = _pair_matrix(space.internal_dim, axis, internal_pair)
    return Operator(space, _embed(space, local, molecule))


def internal_operator(space, matrix):
    """Lift a matrix acting on the full internal factor to ``space``."""
    m = sp.kron(sp.csr_matrix(np.asarray(matrix, dtype=complex)), _identity(space.motional_size),
                format="csr")
    return Operator(space, m)


def projector(space, internal_vec):
    v = np.asarray(internal_vec, dtype=complex)
    return internal_operator(space, np.outer(v, v.conj()))


def tensor(op_a, op_b):
    """``op_a (x) op_b``.

    The first factor may carry molecules and modes only if the second carries
    no molecules, so the documented basis ordering is preserved.
    """
    sa, sb = op_a.space, op_b.space
    if sb.n_molecules and sa.fock_dims:
        raise ValueError("tensor(A, B): B may not carry molecules when A carries modes")
    if sa.n_molecules and sb.n_molecules and sa.internal_dim != sb.internal_dim:
        raise ValueError("internal dimensions differ")
    space = HilbertSpace(internal_dim=sa.internal_dim if sa.n_molecules else sb.internal_dim,
                         fock_dims=sa.fock_dims + sb.fock_dims,
                         n_molecules=sa.n_molecules + sb.n_molecules)
    ma = op_a.matrix if sp.issparse(op_a.matrix) else sp.csr_matrix(op_a.matrix)
    mb = op_b.matrix if sp.issparse(op_b.matrix) else sp.csr_matrix(op_b.matrix)
    return Operator(space, sp.kron(ma, mb, format="csr"))


def tensor_states(psi_a, psi_b):
    op = tensor(identity(psi_a.space), identity(psi_b.space))
    return StateVector(op.space, np.kron(psi_a.amplitudes, psi_b.amplitudes))


# --------------------------------------------------------------------------
# displacement


def truncation_guard(alpha, n_max, factor=GUARD_FACTOR):
    if abs(alpha) ** 2 > factor * n_max:
        need = math.ceil(abs(alpha) ** 2 / factor)
        raise TruncationError(f"|alpha|^2 = {abs(alpha) ** 2:.4g} exceeds {factor} * n_max; "
                              f"need n_max >= {need}")


def displacement_matrix(dim, alpha, columns=None):
    """Dense ``exp(alpha a^dag - alpha* a)`` on ``dim`` levels.

    Computed exactly on the truncated space by diagonalizing the real
    symmetric tridiagonal generator obtained after the gauge transform
    ``|n> -> i^n |n>`` and a rotation by ``arg(alpha)``.  If ``columns`` is
    given only the first ``columns`` columns are returned.
    """
    ncols = dim if columns is None else columns
    if alpha == 0:
        return np.eye(dim, ncols, dtype=complex)
    r, phi = abs(alpha), np.angle(alpha)
    lam, vecs = eigh_tridiagonal(np.zeros(dim), r * np.sqrt(np.arange(1, dim, dtype=float)))
    gauge = (1j) ** np.arange(dim) * np.exp(1j * phi * np.arange(dim))
    core = (vecs * np.exp(-1j * lam)) @ vecs[:ncols].T
    return gauge[:, None] * core * gauge[:ncols].conj()[None, :]


def displacement(space, mode, alpha, guard=GUARD_FACTOR):
    """``D(alpha)`` on ``mode``; raises :class:`TruncationError` if
    ``|alpha|^2 > guard * n_max``."""
    space.check_mode(mode)
    truncation_guard(alpha, space.n_max(mode), guard)
    local = displacement_matrix(space.fock_dims[mode], alpha)
    return Operator(space, _embed(space, local, space.n_molecules + mode))


def thermal_fock_weights(nbar, eps=1e-4):
    """Truncated Bose-Einstein Fock distribution as ``[(n, p_n), ...]``.

    Keeps the smallest ``n = 0..N`` whose cumulative weight reaches ``1 - eps``
    and renormalizes.
    """
    if nbar < 0 or not 0 < eps < 1:
        raise ValueError("need nbar >= 0 and 0 < eps < 1")
    if nbar == 0:
        return [(0, 1.0)]
    ratio = nbar / (nbar + 1.0)
    # cumulative weight up to N is 1 - ratio^(N+1)
    n_cut = max(0, math.ceil(math.log(eps) / math.log(ratio)) - 1)
    while 1.0 - ratio ** (n_cut + 1) < 1.0 - eps:
        n_cut += 1
    while n_cut > 0 and 1.0 - ratio ** n_cut >= 1.0 - eps:
        n_cut -= 1
    n = np.arange(n_cut + 1)
    p = ratio ** n / (nbar + 1.0)
    p /= p.sum()
    return list(zip(n.tolist(), p.tolist()))


def thermal_ensemble(space, internal, nbars, eps=1e-4):
    """Internal product state times independent thermal states of every mode."""
    per_mode = [thermal_fock_weights(nb, eps) for nb in nbars]
    members = []
    for combo in np.ndindex(*[len(w) for w in per_mode]):
        weight = math.prod(per_mode[m][i][1] for m, i in enumerate(combo))
        fock = tuple(per_mode[m][i][0] for m, i in enumerate(combo))
        members.append((weight, product_state(space, internal, fock)))
    total = sum(w for w, _ in members)
    return MixedEnsemble(tuple((w / total, s) for w, s in members))


# --------------------------------------------------------------------------
# expectation values


def expectation(state, op):
    """``<psi|O|psi>``, or the weight-averaged value over an ensemble."""
    if isinstance(state, MixedEnsemble):
        return sum(w * expectation(s, op) for w, s in state.members)
    if state.space != op.space:
        raise ValueError("state and operator spaces differ")
    psi = state.amplitudes
    return complex(np.vdot(psi, op.matrix @ psi))


def mean_phonons(state, mode):
    space = state.space
    return expectation(state, number_operator(space, mode)).real


def fock_populations(state, mode):
    """Phonon-number distribution of ``mode`` (ensemble-averaged)."""
    if isinstance(state, MixedEnsemble):
        return sum(w * fock_populations(s, mode) for w, s in state.members)
    arr = np.abs(state.tensor_array()) ** 2
    axis = state.space.n_molecules + mode
    other = tuple(i for i in range(arr.ndim) if i != axis)
    return arr.sum(axis=other)


def reduced_internal(state):
    """Internal density matrix with the motion traced out."""
    if isinstance(state, MixedEnsemble):
        return sum(w * reduced_internal(s) for w, s in state.members)
    m = state.amplitudes.reshape(state.space.internal_size, state.space.motional_size)
    return m @ m.conj().T
