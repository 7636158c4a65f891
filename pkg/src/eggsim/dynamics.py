"""Schrodinger-equation integration on truncated Fock spaces.

The integrator is the fourth-order Magnus expansion with two Gauss-Legendre
samples per step.  Each step is an exact exponential of an anti-Hermitian
generator, so the propagator is unitary up to round-off.  When the
Hamiltonian declares a period, a one-period propagator is built once and
reused; sample times that are not whole periods are completed by direct
stepping (valid because ``H(t + kP) = H(t)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fock
from .errors import NormDriftError, TruncationError

_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0

#: step <= (2 pi / w_fast) / STEPS_PER_PERIOD
STEPS_PER_PERIOD = 40
#: step <= PHASE_PER_STEP / ||H||
PHASE_PER_STEP = 0.1
NORM_DRIFT_TOL = 1e-6
TOP_LEVEL_TOL = 1e-6


@dataclass
class EvolutionResult:
    times: np.ndarray
    traces: dict
    final_state: object
    norm_drift: float
    dt: float
    flags: tuple = ()
    convergence_delta: float | None = None
    meta: dict = field(default_factory=dict)
    states: list | None = None
    drift_trace: np.ndarray | None = None  # largest |norm - 1| at each sample

    def trace(self, name):
        return self.traces[name]


def default_step(ham):
    """Largest step obeying the sampling and phase-per-step rules."""
    limits = []
    if ham.max_frequency > 0:
        limits.append(2 * math.pi / ham.max_frequency / STEPS_PER_PERIOD)
    norm = ham.norm_bound()
    if norm > 0:
        limits.append(PHASE_PER_STEP / norm)
    return min(limits) if limits else math.inf


def magnus_generator(ham, t, dt):
    """Anti-Hermitian generator ``Omega`` of one fourth-order Magnus step."""
    h1 = ham.step_matrix(t + _C1 * dt)
    h2 = ham.step_matrix(t + _C2 * dt)
    gen = (-0.5j * dt) * (h1 + h2)
    comm = h2 @ h1 - h1 @ h2
    if _nonzero(comm):
        gen = gen - (math.sqrt(3.0) * dt * dt / 12.0) * comm
    return gen


def expm_action(gen, block, tol=1e-16):
    """``exp(gen) @ block`` for a sparse or dense generator by a scaled Taylor series.

    The series is summed until the next term is below ``tol`` relative to the
    block, so for anti-Hermitian ``gen`` the result is unitary to round-off.
    """
    norm = _inf_norm1(gen)
    substeps = max(1, math.ceil(norm / 0.5))
    if substeps > 1:
        gen = gen / substeps
    scale = max(float(np.max(np.abs(block))), 1e-300)
    for _ in range(substeps):
        out = block.copy()
        term = block
        for k in range(1, 60):
            term = (gen @ term) / k
            out += term
            if np.max(np.abs(term)) <= tol * scale:
                break
        block = out
    return block


def _nonzero(m):
    return m.nnz > 0 if sp.issparse(m) else bool(np.any(m))


def _inf_norm1(m):
    """Induced infinity norm of a sparse or dense matrix."""
    if not _nonzero(m):
        return 0.0
    return float(np.max(np.asarray(abs(m).sum(axis=1))))


def _apply_steps(ham, block, t0, t1, dt):
    """Advance ``block`` (dim, K) from ``t0`` to ``t1`` in equal steps <= ``dt``."""
    span = t1 - t0
    if span <= 0:
        return block
    n = max(1, math.ceil(span / dt - 1e-9))
    h = span / n
    for k in range(n):
        block = expm_action(magnus_generator(ham, t0 + k * h, h), block)
    return block


def step_propagator(ham, t0, t1, dt):
    """Dense propagator ``U(t1, t0)``."""
    return _apply_steps(ham, np.eye(ham.space.dim, dtype=complex), t0, t1, dt)


def _propagate(ham, block, times, dt):
    """Yield the evolved block at each sample time (sorted, >= 0)."""
    if ham.period:
        period = ham.period
        u_period = None
        base, k_base = block, 0
        for t in times:
            k = int(math.floor(t / period + 1e-9))
            rem = t - k * period
            if rem < 1e-12 * period:
                rem = 0.0
            if k > k_base:
                if u_period is None:
                    u_period = step_propagator(ham, 0.0, period, dt)
                for _ in range(k - k_base):
                    base = u_period @ base
                k_base = k
            yield base if rem == 0 else _apply_steps(ham, base, 0.0, rem, dt)
    else:
        current, t_cur = block, 0.0
        for t in times:
            current = _apply_steps(ham, current, t_cur, t, dt)
            t_cur = t
            yield current


def _observable_trace(block, weights, op):
    ob = op.matrix @ block
    return float(np.real(np.einsum("ik,ik->k", block.conj(), ob) @ weights))


def _top_population(space, block, weights, levels=2):
    """Largest (over modes) weighted population in the top ``levels`` Fock levels."""
    worst = 0.0
    probs = np.abs(block) ** 2 @ weights
    arr = probs.reshape(space.shape)
    for p in range(len(space.fock_dims)):
        axis = space.n_molecules + p
        other = tuple(i for i in range(arr.ndim) if i != axis)
        marg = arr.sum(axis=other)
        worst = max(worst, float(marg[-levels:].sum()))
    return worst


def _run(ham, block, weights, times, dt, observables, check_truncation, states=None):
    space = ham.space
    traces = {name: np.empty(len(times)) for name in observables}
    drifts = np.empty(len(times))
    final = block
    for i, cur in enumerate(_propagate(ham, block, times, dt)):
        if states is not None:
            states.append(cur.copy())
        for name, op in observables.items():
            traces[name][i] = _observable_trace(cur, weights, op)
        norms = np.linalg.norm(cur, axis=0)
        drifts[i] = float(np.max(np.abs(norms - 1.0)))
        if check_truncation and space.fock_dims:
            top = _top_population(space, cur, weights)
            if top > TOP_LEVEL_TOL:
                raise TruncationError(
                    f"population {top:.3g} in top two Fock levels at t = {times[i]:.6g} s; "
                    f"increase n_max (currently {space.fock_dims})")
        final = cur
    return traces, drifts, final


def _normalize_times(t_end, times, n_samples):
    if times is None:
        if t_end is None:
            raise ValueError("give t_end or times")
        times = np.linspace(0.0, t_end, n_samples) if t_end > 0 else np.zeros(1)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("sample times must be sorted and non-negative")
    return times


def _evolve_block(ham, block, weights, *, t_end=None, times=None, n_samples=101, dt=None,
                  observables=None, convergence_check=False, strict=True,
                  check_truncation=True, store_states=False):
    times = _normalize_times(t_end, times, n_samples)
    observables = dict(observables or {})
    dt = dt or default_step(ham)
    if not math.isfinite(dt):
        dt = max(times[-1], 1.0)
    states = [] if store_states else None
    traces, drifts, final = _run(ham, block, weights, times, dt, observables, check_truncation,
                                 states)
    drift = float(drifts.max())
    flags = []
    if drift > NORM_DRIFT_TOL:
        flags.append("norm-drift")
        if strict:
            raise NormDriftError(f"norm drift {drift:.3g} exceeds {NORM_DRIFT_TOL}")
    delta = None
    if convergence_check:
        half, _, _ = _run(ham, block, weights, times, dt / 2, observables, False)
        delta = max((float(np.max(np.abs(half[k] - traces[k]))) for k in traces), default=0.0)
    return EvolutionResult(times, traces, final, drift, dt, tuple(flags), delta, states=states,
                           drift_trace=drifts)


def evolve(ham, psi0, t_end=None, *, times=None, n_samples=101, dt=None, observables=None,
           convergence_check=False, strict=True, check_truncation=True, store_states=False):
    """Integrate ``i d psi/dt = H(t) psi`` from ``t = 0``.

    Parameters
    ----------
    ham : Hamiltonian
    psi0 : StateVector
    t_end : float, optional
        End time; ``n_samples`` equally spaced samples including 0 and t_end.
    times : array_like, optional
        Explicit sample times (overrides ``t_end``).
    dt : float, optional
        Maximum step; defaults to :func:`default_step`.
    observables : dict of name -> Operator
        Expectation values recorded at every sample.
    convergence_check : bool
        Re-run at ``dt/2`` and store the largest observable change in
        ``convergence_delta``.
    store_states : bool
        Keep the state vector at every sample in ``states``.

    Raises
    ------
    TruncationError
        Population in the top two Fock levels of any mode exceeds 1e-6.
    NormDriftError
        Norm drift exceeds 1e-6 and ``strict`` is set.
    """
    if psi0.space != ham.space:
        raise ValueError("state and Hamiltonian spaces differ")
    res = _evolve_block(ham, psi0.amplitudes[:, None].copy(), np.ones(1), t_end=t_end,
                        times=times, n_samples=n_samples, dt=dt, observables=observables,
                        convergence_check=convergence_check, strict=strict,
                        check_truncation=check_truncation, store_states=store_states)
    res.final_state = fock.StateVector(ham.space, res.final_state[:, 0], check_norm=False)
    if store_states:
        res.states = [s[:, 0] for s in res.states]
    return res


def evolve_ensemble(ham, ensemble, t_end=None, **kwargs):
    """Evolve every member of a :class:`MixedEnsemble` and weight-average the traces.

    Members are propagated together as columns of one block, so the
    reduction order is fixed and results are bit-stable.
    """
    if ensemble.space != ham.space:
        raise ValueError("ensemble and Hamiltonian spaces differ")
    weights = ensemble.weights
    res = _evolve_block(ham, ensemble.block(), weights, t_end=t_end, **kwargs)
    final = res.final_state
    res.final_state = fock.MixedEnsemble(tuple(
        (w, fock.StateVector(ham.space, final[:, k] / np.linalg.norm(final[:, k])))
        for k, w in enumerate(weights)))
    return res
