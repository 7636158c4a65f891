import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eggsim import fock
from eggsim.errors import TruncationError

complexes = st.builds(complex, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))


def mode_space(n_max, molecules=0):
    return fock.HilbertSpace(2, (n_max + 1,), molecules)


def guarded(n_max, reach):
    """Fock columns n whose displaced support (sqrt(n) + reach)^2 stays within the guard."""
    n = np.arange(n_max + 1)
    return n[(np.sqrt(n) + reach) ** 2 <= fock.GUARD_FACTOR * n_max]


def test_space_dimensions():
    space = fock.HilbertSpace(3, (5, 4), 2)
    assert space.dim == 9 * 20
    with pytest.raises(ValueError):
        fock.HilbertSpace(4, (5,), 1)
    with pytest.raises(ValueError):
        fock.HilbertSpace(2, (1,), 1)


def test_ladder_elements():
    space = mode_space(10)
    a, ad = fock.ladder(space, 0)
    v0 = fock.product_state(space, (), (0,))
    assert fock.expectation(v0, a @ ad).real == pytest.approx(1.0)
    n = (ad @ a).dense()
    assert np.allclose(np.diag(n), np.arange(11))
    comm = (a @ ad - ad @ a).dense()
    assert np.allclose(comm[:10, :10], np.eye(10))
    assert comm[10, 10] == pytest.approx(-10)
    with pytest.raises(IndexError):
        fock.ladder(space, 1)


def test_displacement_identity_and_coherent_mean():
    space = mode_space(64)
    assert np.allclose(fock.displacement(space, 0, 0).dense(), np.eye(65))
    psi = fock.displacement(space, 0, 2.0) @ fock.product_state(space, (), (0,))
    assert fock.mean_phonons(psi, 0) == pytest.approx(4.0, abs=1e-6)
    # Poisson statistics
    pops = fock.fock_populations(psi, 0)
    poisson = np.array([math.exp(-4) * 4 ** k / math.factorial(k) for k in range(65)])
    assert np.allclose(pops, poisson, atol=1e-12)
    assert np.allclose(psi.amplitudes, fock.coherent_vector(2.0, 65), atol=1e-10)


def test_displacement_guard():
    space = mode_space(20)
    with pytest.raises(TruncationError, match="n_max"):
        fock.displacement(space, 0, 4.0)


@settings(max_examples=30, deadline=None)
@given(complexes)
def test_displacement_inverse_and_unitarity(alpha):
    space = mode_space(40)
    d = fock.displacement(space, 0, alpha).dense()
    dm = fock.displacement(space, 0, -alpha).dense()
    cols = guarded(40, abs(alpha))
    assert np.abs((d @ dm - np.eye(41))[:, cols]).max() < 1e-8
    assert np.abs((d.conj().T @ d - np.eye(41))[:, cols]).max() < 1e-8


@settings(max_examples=30, deadline=None)
@given(complexes, complexes)
def test_displacement_composition(alpha, beta):
    space = mode_space(60)
    d = lambda z: fock.displacement(space, 0, z).dense()
    lhs = d(alpha) @ d(beta)
    rhs = np.exp(1j * (alpha * np.conj(beta)).imag) * d(alpha + beta)
    cols = guarded(60, abs(alpha) + abs(beta))
    assert np.abs((lhs - rhs)[:, cols]).max() < 1e-7


def test_displacement_matches_laguerre_elements():
    # <m|D(alpha)|n> for m >= n: sqrt(n!/m!) alpha^(m-n) e^{-|a|^2/2} L_n^(m-n)(|a|^2)
    from scipy.special import eval_genlaguerre
    alpha = 0.7 - 0.4j
    d = fock.displacement_matrix(30, alpha)
    for m, n in [(0, 0), (3, 1), (5, 5), (7, 2)]:
        ref = (math.sqrt(math.factorial(n) / math.factorial(m)) * alpha ** (m - n)
               * math.exp(-abs(alpha) ** 2 / 2) * eval_genlaguerre(n, m - n, abs(alpha) ** 2))
        assert d[m, n] == pytest.approx(ref, abs=1e-12)


def test_thermal_weights():
    assert fock.thermal_fock_weights(0.0) == [(0, 1.0)]
    nbar = 9.93
    w = fock.thermal_fock_weights(nbar, 1e-4)
    ns = np.array([n for n, _ in w])
    ps = np.array([p for _, p in w])
    assert ps.sum() == pytest.approx(1.0, abs=1e-12)
    assert (ns * ps).sum() == pytest.approx(nbar, rel=1e-3)
    # minimal cutoff
    r = nbar / (nbar + 1)
    n_cut = ns[-1]
    assert 1 - r ** (n_cut + 1) >= 1 - 1e-4 > 1 - r ** n_cut
    raw_p0 = 1 / (nbar + 1)
    assert ps[0] == pytest.approx(raw_p0 / (1 - r ** (n_cut + 1)), rel=1e-12)
    with pytest.raises(ValueError):
        fock.thermal_fock_weights(-1.0)


@given(st.floats(0.0, 30.0), st.sampled_from([1e-2, 1e-4, 1e-6]))
def test_thermal_weights_properties(nbar, eps):
    w = fock.thermal_fock_weights(nbar, eps)
    ps = [p for _, p in w]
    assert all(p >= 0 for p in ps)
    assert sum(ps) == pytest.approx(1.0, abs=1e-9)
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_thermal_ensemble_mean_phonons():
    space = mode_space(80, 1)
    ens = fock.thermal_ensemble(space, "g", (1.62,), 1e-6)
    assert fock.mean_phonons(ens, 0) == pytest.approx(1.62, rel=2e-3)
    assert sum(ens.weights) == pytest.approx(1.0, abs=1e-12)


def test_paulis():
    space = fock.HilbertSpace(2, (), 1)
    g = fock.product_state(space, "g")
    e = fock.product_state(space, "e")
    sx = fock.pauli(space, "x")
    sy = fock.pauli(space, "y")
    sz = fock.pauli(space, "z")
    assert np.allclose((sx @ g).amplitudes, e.amplitudes)
    assert fock.expectation(g, sz).real == -1
    assert fock.expectation(fock.product_state(space, "+x"), sx).real == pytest.approx(1)
    assert fock.expectation(fock.product_state(space, "-x"), sx).real == pytest.approx(-1)
    assert np.allclose((sx @ sy).dense(), 1j * sz.dense())
    assert np.allclose(fock.pauli(space, "+").dense(), np.outer([0, 1], [1, 0]))


def test_pauli_on_shelf_pair():
    space = fock.HilbertSpace(3, (), 1)
    sx = fock.pauli(space, "x", internal_pair=(fock.G, fock.A)).dense()
    assert sx[0, 2] == 1 and sx[2, 0] == 1 and sx[1, 1] == 0


def test_tensor_structure(rng):
    a = fock.HilbertSpace(2, (), 1)
    b = mode_space(5)
    va = rng.normal(size=2) + 1j * rng.normal(size=2)
    vb = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi_a = fock.StateVector(a, va / np.linalg.norm(va))
    psi_b = fock.StateVector(b, vb / np.linalg.norm(vb))
    op_a = fock.pauli(a, "y")
    joint = fock.tensor(op_a, fock.identity(b))
    psi = fock.tensor_states(psi_a, psi_b)
    assert fock.expectation(psi, joint) == pytest.approx(fock.expectation(psi_a, op_a), abs=1e-10)


def test_fock_vector_range():
    assert fock.fock_vector(3, 4)[3] == 1
    with pytest.raises(ValueError):
        fock.fock_vector(-1, 4)
    with pytest.raises(ValueError):
        fock.fock_vector(4, 4)


def test_state_validation():
    space = mode_space(3)
    with pytest.raises(ValueError):
        fock.StateVector(space, np.ones(4))
    with pytest.raises(ValueError):
        fock.StateVector(space, np.ones(3))
    with pytest.raises(ValueError):
        fock.MixedEnsemble(((0.5, fock.product_state(space, (), (0,))),))
    with pytest.raises(ValueError):
        fock.expectation(fock.product_state(space, (), (0,)), fock.identity(mode_space(4)))


@settings(max_examples=25, deadline=None)
@given(complexes, st.sampled_from(["x", "y", "z"]))
def test_norm_preserved_by_displacement_and_pauli(alpha, axis):
    space = fock.HilbertSpace(2, (41,), 1)
    psi = fock.product_state(space, "+x", (0,))
    out = fock.pauli(space, axis) @ (fock.displacement(space, 0, alpha) @ psi)
    assert out.norm() == pytest.approx(1.0, abs=1e-8)


def test_basis_order_and_dump():
    space = fock.HilbertSpace(2, (3,), 2)
    psi = fock.product_state(space, ("e", "g"), (2,))
    # molecule 1 slowest, mode fastest
    assert np.flatnonzero(psi.amplitudes).tolist() == [1 * 6 + 0 * 3 + 2]
    assert json.loads(psi.to_json()) == [[8, 1.0, 0.0]]


def test_reduced_internal_of_product():
    space = fock.HilbertSpace(2, (4,), 1)
    psi = fock.product_state(space, "+x", (1,))
    assert np.allclose(fock.reduced_internal(psi), 0.5 * np.ones((2, 2)))
