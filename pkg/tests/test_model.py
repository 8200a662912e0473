import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinctrl.model import (SpinSystem, assemble_hamiltonian, make_topology,
                            spin_operator)


def test_single_particle_sz_is_half_sigma_z():
    sz = spin_operator(1, 1, "z")
    assert np.array_equal(sz, np.diag([0.5, -0.5]).astype(complex))


def test_two_particle_sz_eigenvalue_on_plus_plus():
    # |+>|+> is the first basis vector; S_1z acts with eigenvalue +1/2
    s1z = spin_operator(2, 1, "z")
    e0 = np.zeros(4)
    e0[0] = 1.0
    assert np.array_equal(s1z @ e0, 0.5 * e0)


def test_disjoint_slots_commute_exactly():
    s1x = spin_operator(2, 1, "x")
    s2y = spin_operator(2, 2, "y")
    comm = s1x @ s2y - s2y @ s1x
    assert np.array_equal(comm, np.zeros((4, 4), dtype=complex))


def test_spin_operator_index_out_of_range():
    with pytest.raises(IndexError):
        spin_operator(2, 3, "x")
    with pytest.raises(IndexError):
        spin_operator(2, 0, "x")
    with pytest.raises(ValueError):
        spin_operator(2, 1, "w")


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), axis=st.sampled_from("xyz"), data=st.data())
def test_spin_operator_hermitian_traceless(n, axis, data):
    i = data.draw(st.integers(1, n))
    s = spin_operator(n, i, axis)
    assert np.array_equal(s, s.conj().T)
    assert abs(np.trace(s)) == 0.0


def _two_particle_system(w1, w2, gamma):
    return SpinSystem(m=1, n=1, frequencies=[w1, w2],
                      couplings=make_topology("star", 1, 1, gamma).coupling)


def test_two_particle_matrix_form():
    # H must reproduce the explicit 4x4 form in the |++>,|+->,|-+>,|--> basis
    rng = np.random.default_rng(42)
    for _ in range(5):
        w1, w2, g, c = rng.uniform(0.2, 2.0, size=4)
        terms = assemble_hamiltonian(_two_particle_system(w1, w2, g))
        h = terms.h_drift + c * terms.h_ctrl
        expected = 0.5 * np.array([
            [w1 + w2 - 0.5 * g, 0, -c, 0],
            [0, w1 - w2 + 0.5 * g, -g, -c],
            [-c, -g, w2 - w1 + 0.5 * g, 0],
            [0, -c, 0, -w1 - w2 - 0.5 * g]], dtype=complex)
        np.testing.assert_allclose(h, expected, atol=1e-14)


def test_uncoupled_drift_is_diagonal():
    system = SpinSystem(m=1, n=2, frequencies=[1.0, 0.9, 1.1],
                        couplings=np.zeros((3, 3)))
    terms = assemble_hamiltonian(system)
    off = terms.h_drift - np.diag(np.diag(terms.h_drift))
    assert np.max(np.abs(off)) == 0.0


def test_degenerate_drift_eigenvalues_match_singlet_triplet_split():
    # Independent dense diagonalization against the exchange-coupled pair:
    # triplet states shift by -gamma/4, the singlet by +3 gamma/4.
    terms = assemble_hamiltonian(_two_particle_system(1.0, 1.0, 0.02))
    eig = np.sort(np.linalg.eigvalsh(terms.h_drift))
    expected = np.sort([1.0 - 0.005, -1.0 - 0.005, -0.005, 0.015])
    np.testing.assert_allclose(eig, expected, atol=1e-12)


def test_hamiltonian_hermitian():
    system = SpinSystem(m=2, n=1, frequencies=[1.0, 1.1, 0.99],
                        couplings=make_topology("two_qubit_triangle", 2, 1,
                                                gamma12=0.1, gamma13=0.01,
                                                gamma23=0.01).coupling)
    terms = assemble_hamiltonian(system)
    for h in (terms.h_drift, terms.h_ctrl):
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12


def test_control_acts_on_qubit_slots_only():
    system = SpinSystem(m=1, n=1, frequencies=[1.0, 0.9],
                        couplings=np.zeros((2, 2)))
    terms = assemble_hamiltonian(system)
    np.testing.assert_allclose(terms.h_ctrl, -spin_operator(2, 1, "x"), atol=0)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 4), data=st.data())
def test_heisenberg_term_symmetric_under_label_swap(n, data):
    i = data.draw(st.integers(1, n))
    j = data.draw(st.integers(1, n).filter(lambda x: x != i))

    def heisenberg(a, b):
        return sum(spin_operator(n, a, ax) @ spin_operator(n, b, ax) for ax in "xyz")

    assert np.array_equal(heisenberg(i, j), heisenberg(j, i))


def test_star_topology_row():
    topo = make_topology("star", 1, 4, gamma=0.02)
    np.testing.assert_allclose(topo.coupling[0], [0, 0.02, 0.02, 0.02, 0.02])
    assert np.max(np.abs(topo.coupling[1:, 1:])) == 0.0


def test_chain_topology_pairs():
    topo = make_topology("chain_nn", 1, 4, gamma=0.02)
    nonzero = {(i, j) for i in range(5) for j in range(i + 1, 5)
               if topo.coupling[i, j] != 0.0}
    assert nonzero == {(0, 1), (0, 2), (1, 3), (2, 4)}


def test_lattices_reduce_to_star():
    for kind, n in (("lattice_2d", 4), ("lattice_3d", 6)):
        topo = make_topology(kind, 1, n, gamma=0.02)
        star = make_topology("star", 1, n, gamma=0.02)
        assert np.array_equal(topo.coupling, star.coupling)
        assert topo.kind == kind


def test_triangle_topology():
    topo = make_topology("two_qubit_triangle", 2, 1, gamma12=0.1,
                         gamma13=0.01, gamma23=0.01)
    expected = np.array([[0, 0.1, 0.01], [0.1, 0, 0.01], [0.01, 0.01, 0]])
    np.testing.assert_allclose(topo.coupling, expected)


def test_topology_rejects_incompatible_shapes():
    with pytest.raises(ValueError):
        make_topology("star", 2, 1, gamma=0.02)
    with pytest.raises(ValueError):
        make_topology("two_qubit_triangle", 1, 1, gamma12=0.1, gamma13=0.01,
                      gamma23=0.01)
    with pytest.raises(ValueError):
        make_topology("chain_nn", 1, 3, gamma=0.02)
    with pytest.raises(ValueError):
        make_topology("hexagon", 1, 4, gamma=0.02)


def test_spin_system_validation():
    with pytest.raises(ValueError):
        SpinSystem(m=1, n=1, frequencies=[1.0], couplings=np.zeros((2, 2)))
    bad = np.zeros((2, 2))
    bad[0, 1] = 0.1  # asymmetric
    with pytest.raises(ValueError):
        SpinSystem(m=1, n=1, frequencies=[1.0, 1.0], couplings=bad)
    negative = np.array([[0.0, -0.1], [-0.1, 0.0]])
    with pytest.raises(ValueError):
        SpinSystem(m=1, n=1, frequencies=[1.0, 1.0], couplings=negative)
    with pytest.raises(ValueError):
        SpinSystem(m=0, n=2, frequencies=[1.0, 1.0], couplings=np.zeros((2, 2)))


def test_default_dipoles_are_unity():
    system = _two_particle_system(1.0, 0.9, 0.0)
    np.testing.assert_allclose(system.dipoles, [1.0])
