import numpy as np
import pytest

from vbslab import qstate as qs
from vbslab.cluster import build_cluster_state, cluster_hamiltonian
from vbslab.graphs import SiteGraph, chain, honeycomb_patch, square_patch
from vbslab.hamiltonian import (
    LocalHamiltonian,
    heisenberg_coupling,
    low_spectrum,
    ground_state,
    spin_matrices,
    subspace_intersection,
    subspaces_equal,
    symmetric_embedding,
    total_spin_projector,
)
from vbslab.pauli import cluster_stabilizer_generators


def test_chain_counts():
    g = chain(3)
    assert g.num_vertices == 3 and len(g.edges) == 2


def test_square_patch_counts():
    g = square_patch(2, 3)
    assert g.num_vertices == 6 and len(g.edges) == 7


def test_honeycomb_single_hexagon():
    g = honeycomb_patch(1, 1)
    assert g.num_vertices == 6 and len(g.edges) == 6
    assert all(g.degree(v) == 2 for v in g.vertex_ids)


def test_honeycomb_two_coloring_and_interior_degree():
    g = honeycomb_patch(2, 2)
    assert all(g.sublattice[a] != g.sublattice[b] for a, b in g.edges)
    assert max(g.degree(v) for v in g.vertex_ids) == 3


def test_graph_validation():
    with pytest.raises(ValueError):
        SiteGraph(["0"], [("0", "0")])
    with pytest.raises(ValueError):
        SiteGraph(["0"], [("0", "1")])
    with pytest.raises(ValueError):
        chain(0)
    with pytest.raises(ValueError):
        square_patch(0, 2)


def test_json_roundtrip():
    g = honeycomb_patch(1, 2)
    g2 = SiteGraph.from_json(g.to_json())
    assert g2.vertex_ids == g.vertex_ids
    assert g2.edges == g.edges
    assert g2.dims == g.dims
    assert g2.sublattice == g.sublattice


def test_cluster_state_no_edges_is_all_plus():
    g = SiteGraph(["0", "1"], [])
    psi = build_cluster_state(g)
    assert np.allclose(psi.amps, np.full(4, 0.5))


def test_cluster_state_three_chain_amplitudes():
    psi = build_cluster_state(chain(3))
    t = psi.tensor()
    for i in range(2):
        for j in range(2):
            for k in range(2):
                expect = (-1) ** (i * j + j * k) / np.sqrt(8)
                assert abs(t[i, j, k] - expect) < 1e-12


def test_cluster_state_edge_order_invariant():
    g = square_patch(2, 2)
    shuffled = SiteGraph(g.vertex_ids, list(reversed(g.edges)), coords=g.coords)
    a = build_cluster_state(g)
    b = build_cluster_state(shuffled)
    assert np.allclose(a.amps, b.amps)


def test_cluster_hamiltonian_single_vertex():
    g = SiteGraph(["0"], [])
    ham = cluster_hamiltonian(g)
    energy, gs = ground_state(ham)
    assert abs(energy + 1) < 1e-12
    assert qs.equal_up_to_global_phase(gs, qs.QuditState((2,), qs.PLUS))


def test_cluster_hamiltonian_three_chain_spectrum():
    ham = cluster_hamiltonian(chain(3))
    vals = np.linalg.eigvalsh(ham.dense())
    assert abs(vals[0] + 3) < 1e-10
    assert abs(vals[1] - vals[0] - 2) < 1e-10
    psi = build_cluster_state(chain(3))
    assert abs(ham.expectation(psi) + 3) < 1e-10


@pytest.mark.parametrize("builder", [lambda: chain(5), lambda: square_patch(3, 2), lambda: honeycomb_patch(1, 1)])
def test_cluster_state_is_unique_ground_state(builder):
    g = builder()
    ham = cluster_hamiltonian(g)
    psi = build_cluster_state(g)
    n = g.num_vertices
    vals = low_spectrum(ham, k=2)
    assert abs(vals[0] + n) < 1e-8
    assert vals[1] - vals[0] > 1e-4
    assert abs(ham.expectation(psi) + n) < 1e-8
    assert cluster_stabilizer_generators(g).all_stabilize(psi, g.vertex_ids)


def test_dense_matches_apply():
    rng = np.random.default_rng(11)
    dims = (2, 3, 2)
    h1 = qs.random_unitary(6, rng)
    h1 = h1 + h1.conj().T
    h2 = qs.random_unitary(2, rng)
    h2 = h2 + h2.conj().T
    ham = LocalHamiltonian(dims, [((0, 1), h1), ((2,), h2)])
    psi = qs.random_state(dims, rng)
    assert np.allclose(ham.dense() @ psi.amps, ham.apply(psi).amps)


def test_spin_matrices_algebra():
    for s in (0.5, 1.0, 1.5):
        sx, sy, sz = spin_matrices(s)
        assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
        casimir = sx @ sx + sy @ sy + sz @ sz
        assert np.allclose(casimir, s * (s + 1) * np.eye(sx.shape[0]))


def test_singlet_projector():
    proj = total_spin_projector(0.5, 0.5, 0.0)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert np.allclose(proj, np.outer(singlet, singlet))


def test_spin1_pair_eigenvalues():
    ss = heisenberg_coupling(1.0, 1.0)
    biquad = ss + (ss @ ss) / 3
    vals = np.unique(np.round(np.linalg.eigvalsh(biquad), 9))
    assert np.allclose(vals, [-2 / 3, 4 / 3])
    # same operator as the spin-2 projector, shifted and scaled
    p2 = total_spin_projector(1.0, 1.0, 2.0)
    assert np.allclose(biquad, 2 * p2 - (2 / 3) * np.eye(9))


def test_symmetric_embedding_two_qubits():
    v = symmetric_embedding(2)
    assert np.allclose(v[:, 0], [1, 0, 0, 0])
    assert np.allclose(v[:, 1], [0, 1, 1, 0] / np.sqrt(2))
    assert np.allclose(v[:, 2], [0, 0, 0, 1])
    assert np.allclose(v.conj().T @ v, np.eye(3))


def test_subspace_utilities():
    a = np.eye(4)[:, :2]
    b = np.eye(4)[:, 1:3]
    inter = subspace_intersection([a, b])
    assert inter.shape[1] == 1
    assert subspaces_equal(inter, np.eye(4)[:, 1:2])
    assert not subspaces_equal(a, b)
