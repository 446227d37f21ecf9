import numpy as np
import pytest

from vbslab import qstate as qs
from vbslab.cluster import build_cluster_state
from vbslab.graphs import SiteGraph, chain
from vbslab.pauli import (
    PauliString,
    StabilizerSet,
    apply_pauli,
    cluster_stabilizer_generators,
    pauli_multiply,
    stabilizes,
)


def dense(p: PauliString, labels):
    mats = [qs.PAULIS[p.factors.get(lab, "I")] for lab in labels]
    return p.phase * qs.kron_all(mats)


def test_x_times_z_is_minus_i_y():
    p = PauliString({"0": "X"}) * PauliString({"0": "Z"})
    assert p == PauliString({"0": "Y"}, -1j)


def test_square_is_identity():
    p = PauliString({"1": "X", "2": "Z"})
    sq = p * p
    assert sq.factors == {} and sq.phase == 1


def test_products_match_matrix_oracle():
    rng = np.random.default_rng(7)
    labels = ["0", "1", "2"]
    letters = ["I", "X", "Y", "Z"]
    for _ in range(40):
        fp = {lab: letters[rng.integers(4)] for lab in labels}
        fq = {lab: letters[rng.integers(4)] for lab in labels}
        p, q = PauliString(fp), PauliString(fq)
        prod = pauli_multiply(p, q)
        assert np.allclose(dense(prod, labels), dense(p, labels) @ dense(q, labels))


def test_commutation_counting_matches_matrices():
    rng = np.random.default_rng(8)
    labels = ["a", "b"]
    letters = ["I", "X", "Y", "Z"]
    for _ in range(30):
        p = PauliString({lab: letters[rng.integers(4)] for lab in labels})
        q = PauliString({lab: letters[rng.integers(4)] for lab in labels})
        mp, mq = dense(p, labels), dense(q, labels)
        commutes = np.allclose(mp @ mq, mq @ mp)
        assert p.commutes_with(q) == commutes


def test_rendering():
    assert str(PauliString({"1": "X", "2": "Z", "5": "Z"}, -1)) == "-X1 Z2 Z5"
    assert str(PauliString({}, 1j)) == "iI"


def test_x_stabilizes_plus():
    plus = qs.QuditState((2,), qs.PLUS)
    assert stabilizes(PauliString({"0": "X"}), plus)


def test_three_chain_stabilizer_relations():
    psi = build_cluster_state(chain(3))
    for factors in ({"0": "X", "1": "Z"}, {"0": "Z", "1": "X", "2": "Z"}, {"1": "Z", "2": "X"}):
        assert stabilizes(PauliString(factors), psi)


def test_random_pauli_rarely_stabilizes_random_state():
    rng = np.random.default_rng(9)
    psi = qs.random_state((2, 2, 2), rng)
    p = PauliString({"0": "X", "1": "Y", "2": "Z"})
    assert not stabilizes(p, psi)


def test_generators_empty_graph():
    g = SiteGraph(["0", "1"], [])
    gens = cluster_stabilizer_generators(g)
    assert [str(p) for p in gens] == ["X0", "X1"]


def test_generators_three_chain():
    gens = cluster_stabilizer_generators(chain(3))
    assert [str(p) for p in gens] == ["X0 Z1", "Z0 X1 Z2", "Z1 X2"]


def test_stabilizer_set_rejects_noncommuting():
    with pytest.raises(ValueError):
        StabilizerSet([PauliString({"0": "X"}), PauliString({"0": "Z"})])


def test_generator_products_stabilize_cluster_state():
    g = chain(4)
    psi = build_cluster_state(g)
    gens = list(cluster_stabilizer_generators(g))
    rng = np.random.default_rng(10)
    for _ in range(8):
        subset = [p for p in gens if rng.random() < 0.5]
        prod = PauliString({})
        for p in subset:
            prod = prod * p
        assert stabilizes(prod, psi)


def test_apply_pauli_rejects_non_qubit_site():
    psi = qs.basis_state((2, 3), (0, 0))
    with pytest.raises(ValueError):
        apply_pauli(PauliString({"1": "X"}), psi)
