import json

import numpy as np
import pytest

from vbslab.aklt2d import (
    OUTCOMES,
    PovmOutcomeField,
    apply_virtual_string,
    build_aklt2d,
    cluster_generator_signs,
    cube_patch,
    enumerate_branches,
    form_domains,
    honeycomb_patch,
    honeycomb_rect,
    k33_patch,
    measure_out_site,
    percolation_stats,
    povm_elements,
    sample_outcomes,
    site_kraus,
    site_projector,
    verify_encoded_cluster,
    virtual_qubits,
)
from vbslab.graphs import SiteGraph
from vbslab.hamiltonian import LocalHamiltonian, ground_state, total_spin_projector
from vbslab.pauli import PauliString
from vbslab.qstate import PAULIS, overlap


@pytest.fixture(scope="module")
def hexagon():
    return honeycomb_rect(2, 3)


@pytest.fixture(scope="module")
def path3():
    return honeycomb_patch([(0, 0), (1, 0), (2, 0)])


@pytest.fixture(scope="module")
def star():
    return SiteGraph(
        ["c", "u", "v", "w"],
        [("c", "u"), ("c", "v"), ("c", "w")],
        dims={"c": 4, "u": 2, "v": 2, "w": 2},
        sublattice={"c": "A", "u": "B", "v": "B", "w": "B"},
    )


@pytest.fixture(scope="module")
def hexagon_branches(hexagon):
    return list(enumerate_branches(hexagon))


# ---------------------------------------------------------------------------
# site spaces and the measurement


def test_site_projector_isometry():
    for d in (1, 2, 3):
        p = site_projector(d)
        assert p.shape == (d + 1, 2 ** d)
        assert np.allclose(p @ p.conj().T, np.eye(d + 1))


def test_site_projector_mixed_rows():
    p = site_projector(3)
    w = np.zeros(8)
    w[[1, 2, 4]] = 1 / np.sqrt(3)  # one excitation in any position
    assert np.allclose(p[2], w)
    wbar = np.zeros(8)
    wbar[[3, 5, 6]] = 1 / np.sqrt(3)
    assert np.allclose(p[3], wbar)
    with pytest.raises(ValueError):
        site_projector(4)


def test_povm_completeness():
    fz, fx, fy = povm_elements()
    total = sum(f.conj().T @ f for f in (fz, fx, fy))
    p = site_projector(3)
    # the elements resolve the identity on the symmetric (physical) subspace
    assert np.max(np.abs(total - p.conj().T @ p)) <= 1e-12
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    h3 = np.kron(np.kron(h, h), h)
    assert np.allclose(fx, h3 @ fz @ h3)


def test_site_kraus_complete_every_degree():
    for d in (1, 2, 3):
        ks = site_kraus(d)
        total = sum(ks[a].conj().T @ ks[a] for a in OUTCOMES)
        assert np.max(np.abs(total - np.eye(d + 1))) <= 1e-12


def test_two_site_state_is_singlet_projector_ground():
    patch = SiteGraph(["a", "b"], [("a", "b")], dims=2,
                      sublattice={"a": "A", "b": "B"})
    state = build_aklt2d(patch)
    ham = LocalHamiltonian(state.dims, [((0, 1), total_spin_projector(0.5, 0.5, 1.0))])
    e0, ground = ground_state(ham)
    assert abs(e0) <= 1e-12
    assert abs(abs(overlap(state, ground)) - 1.0) <= 1e-10


def test_build_rejects_bad_patches():
    too_big = honeycomb_rect(2, 6)
    with pytest.raises(ValueError, match="10-site"):
        build_aklt2d(too_big)
    lonely = SiteGraph(["a", "b", "c"], [("a", "b")], dims=2)
    with pytest.raises(ValueError, match="no bonds"):
        build_aklt2d(lonely)
    hub = SiteGraph(
        ["c", "u", "v", "w", "x"],
        [("c", "u"), ("c", "v"), ("c", "w"), ("c", "x")],
        dims=2,
    )
    with pytest.raises(ValueError, match="degree"):
        build_aklt2d(hub)


# ---------------------------------------------------------------------------
# branch enumeration and verification


def test_branch_probabilities_sum_to_one(path3, hexagon_branches):
    total = sum(f.probability for f, _ in enumerate_branches(path3))
    assert abs(total - 1.0) <= 1e-9
    total = sum(f.probability for f, _ in hexagon_branches)
    assert abs(total - 1.0) <= 1e-9


def test_every_hexagon_branch_verifies(hexagon, hexagon_branches):
    assert len(hexagon_branches) == 3 ** 6
    for field, post in hexagon_branches:
        assert verify_encoded_cluster(hexagon, field, post), field.outcomes


def test_every_k33_branch_verifies():
    patch = k33_patch()
    n = 0
    for field, post in enumerate_branches(patch):
        assert verify_encoded_cluster(patch, field, post), field.outcomes
        n += 1
    assert n == 3 ** 6


def test_sampled_cube_branches_verify():
    patch = cube_patch()
    state = build_aklt2d(patch)
    rng = np.random.default_rng(2026)
    for _ in range(8):
        field, post = sample_outcomes(patch, rng, model="exact", state=state)
        assert verify_encoded_cluster(patch, field, post), field.outcomes


def test_all_paths_verify(path3):
    for field, post in enumerate_branches(path3):
        assert verify_encoded_cluster(path3, field, post), field.outcomes


def test_verify_rejects_unmeasured_state(path3):
    state = build_aklt2d(path3)
    field = {"x0y0": "z", "x1y0": "x", "x2y0": "z"}
    assert not verify_encoded_cluster(path3, field, state)
    with pytest.raises(ValueError):
        verify_encoded_cluster(path3, field, None)


def test_verify_rejects_mismatched_branch(hexagon, hexagon_branches):
    (f1, p1), (f2, p2) = hexagon_branches[3], hexagon_branches[200]
    assert verify_encoded_cluster(hexagon, f1, p1)
    assert not verify_encoded_cluster(hexagon, f1, p2)


def test_degree_one_labels_share_state_and_verify(path3):
    # end sites have identity Kraus, so these branches carry the same state
    posts = {}
    for field, post in enumerate_branches(path3):
        key = tuple(field.outcomes[v] for v in path3.vertex_ids)
        posts[key] = post
    same = abs(overlap(posts[("z", "y", "z")], posts[("y", "y", "y")]))
    assert abs(same - 1.0) <= 1e-10


# ---------------------------------------------------------------------------
# domains, logicals, twists


def test_form_domains_structure(hexagon):
    field = {"x0y0": "z", "x1y0": "z", "x2y0": "x",
             "x0y1": "z", "x1y1": "y", "x2y1": "x"}
    dg = form_domains(hexagon, field)
    assert dg.domains == (("x0y0", "x1y0", "x0y1"), ("x2y0", "x2y1"), ("x1y1",))
    assert dg.outcomes == ("z", "x", "y")
    # one z|y bond, one x|y bond, and the y side of its x bond all mismatch
    assert dg.twists == (1, 1, 1)
    assert dg.edges == ((0, 1), (0, 2), (1, 2))
    assert dg.multiplicities == {(0, 1): 1, (0, 2): 1, (1, 2): 1}


def test_reduced_edges_drop_even_multiplicity(hexagon):
    field = {"x0y0": "z", "x1y0": "z", "x2y0": "z",
             "x0y1": "x", "x1y1": "x", "x2y1": "x"}
    dg = form_domains(hexagon, field)
    # two rows, joined by the two vertical bonds: even, so no reduced edge
    assert len(dg.domains) == 2
    assert dg.multiplicities == {(0, 1): 2}
    assert dg.edges == ()
    assert dg.twists == (0, 0)


def test_reduced_edges_keep_odd_multiplicity(hexagon):
    field = {"x0y0": "z", "x1y0": "x", "x2y0": "z",
             "x0y1": "x", "x1y1": "z", "x2y1": "x"}
    dg = form_domains(hexagon, field)
    # alternating ring: six singleton domains, all six bonds survive
    assert len(dg.domains) == 6
    assert all(m == 1 for m in dg.multiplicities.values())
    assert len(dg.edges) == 6


def test_twist_parity_counts_raw_bonds(path3):
    dg = form_domains(path3, {"x0y0": "z", "x1y0": "y", "x2y0": "z"})
    assert dg.twists == (1, 0, 1)
    k33 = k33_patch()
    field = {"a0": "z", "a1": "z", "a2": "z", "b0": "y", "b1": "y", "b2": "y"}
    dg = form_domains(k33, field)
    # each z singleton has three bonds into y sites (odd); y domains see no x
    assert dg.twists == (1, 1, 1, 0, 0, 0)


def test_logicals_anticommute_and_commute_with_generators(hexagon):
    rng = np.random.default_rng(7)
    for _ in range(50):
        field = {v: OUTCOMES[k] for v, k in
                 zip(hexagon.vertex_ids, rng.integers(0, 3, hexagon.num_vertices))}
        dg = form_domains(hexagon, field)
        for c in range(len(dg.domains)):
            assert not dg.logical_x[c].commutes_with(dg.logical_z[c])
            for g in dg.generators[c]:
                assert dg.logical_x[c].commutes_with(g)
                assert dg.logical_z[c].commutes_with(g)
            k = dg.cluster_generator(c)
            assert k.phase in (1, -1)
            for c2 in range(len(dg.domains)):
                assert k.commutes_with(dg.cluster_generator(c2))


def test_domain_qubit_inventory(path3):
    dg = form_domains(path3, {"x0y0": "z", "x1y0": "y", "x2y0": "z"})
    assert dg.qubits[0] == ("x0y0>x1y0",)
    assert dg.qubits[1] == ("x1y0>x0y0", "x1y0>x2y0")
    assert dg.domain_of("x1y0") == 1
    with pytest.raises(ValueError):
        dg.domain_of("nope")


def test_quotient_graph_round_trip(hexagon):
    rng = np.random.default_rng(123)
    for _ in range(200):
        field = {v: OUTCOMES[k] for v, k in
                 zip(hexagon.vertex_ids, rng.integers(0, 3, hexagon.num_vertices))}
        dg = form_domains(hexagon, field)
        q = dg.quotient_graph()
        dg2 = form_domains(q, dg.quotient_outcomes())
        # reduction is idempotent: every quotient domain is a single vertex
        # and no edge survives a second mod-2 pass partially
        assert len(dg2.domains) == len(dg.domains)
        assert all(len(g) == 1 for g in dg2.domains)
        assert len(dg2.edges) == len(dg.edges)


def test_r1_r2_fixed_point_on_random_fields():
    patch = honeycomb_rect(6, 6)
    rng = np.random.default_rng(99)
    for _ in range(1000):
        field = {v: OUTCOMES[k] for v, k in
                 zip(patch.vertex_ids, rng.integers(0, 3, patch.num_vertices))}
        dg = form_domains(patch, field)
        q = dg.quotient_graph()
        # adjacent domains always carry different outcomes ...
        out = dg.quotient_outcomes()
        for i, j in dg.edges:
            assert dg.outcomes[i] != dg.outcomes[j]
        # ... so a second pass changes nothing
        dg2 = form_domains(q, out)
        assert len(dg2.domains) == len(dg.domains)
        assert dg2.edges == tuple(
            (min(i, j), max(i, j)) for i, j in dg.edges
        )


# ---------------------------------------------------------------------------
# virtual-string application


def test_compressed_application_matches_qubit_oracle(hexagon, hexagon_branches):
    def embed(patch, st):
        t = st.tensor()
        labels = []
        for v in patch.vertex_ids:
            iso = site_projector(patch.degree(v))
            t = np.tensordot(t, iso.conj(), axes=([0], [0]))
            labels += virtual_qubits(patch, v)
        return t.reshape(-1), labels

    def qubit_apply(p, vec, labels):
        t = vec.reshape([2] * len(labels))
        pos = {lab: i for i, lab in enumerate(labels)}
        for lab, letter in p.factors.items():
            q = pos[lab]
            t = np.moveaxis(np.tensordot(PAULIS[letter], t, axes=([1], [q])), 0, q)
        return t.reshape(-1) * p.phase

    rng = np.random.default_rng(3)
    picks = rng.choice(len(hexagon_branches), size=12, replace=False)
    for k in picks:
        field, post = hexagon_branches[k]
        dg = form_domains(hexagon, field)
        vec, labels = embed(hexagon, post)
        ops = []
        for c in range(len(dg.domains)):
            ops += list(dg.generators[c])
            ops += [dg.logical_x[c], dg.logical_z[c], dg.cluster_generator(c)]
        for g in ops:
            got, _ = embed(hexagon, apply_virtual_string(post, hexagon, g))
            want = qubit_apply(g, vec, labels)
            assert np.linalg.norm(got - want) <= 1e-10


def test_compressed_application_truncates_outside_support(path3):
    # a single-qubit X on the unmeasured state leaves the symmetric subspace,
    # so the compressed result loses norm; this is the documented contract
    state = build_aklt2d(path3)
    out = apply_virtual_string(state, path3, PauliString({"x1y0>x0y0": "X"}))
    assert np.linalg.norm(out.amps) < 0.99


def test_virtual_label_validation(path3):
    state = build_aklt2d(path3)
    with pytest.raises(ValueError, match="virtual qubit"):
        apply_virtual_string(state, path3, PauliString({"x0y0": "X"}))
    with pytest.raises(ValueError, match="virtual qubit"):
        apply_virtual_string(state, path3, PauliString({"x0y0>x2y0": "X"}))


def test_cluster_generator_signs_resolve(path3):
    for field, post in enumerate_branches(path3):
        signs = cluster_generator_signs(path3, field, post)
        assert all(s in (1, -1) for s in signs)


def test_star_bond_product_stabilizes(star):
    target = {"c": "z", "u": "x", "v": "x", "w": "x"}
    found = False
    for field, post in enumerate_branches(star):
        if field.outcomes == target:
            found = True
            op = PauliString(
                {"c>u": "X", "u>c": "X", "c>v": "X", "v>c": "X",
                 "c>w": "X", "w>c": "X"},
                phase=-1,
            )
            out = apply_virtual_string(post, star, op)
            assert np.linalg.norm(out.amps - post.amps) <= 1e-12
    assert found


# ---------------------------------------------------------------------------
# sampling and the outcome field type


def test_field_validation():
    with pytest.raises(ValueError, match="provenance"):
        PovmOutcomeField({"a": "z"}, "guessed")
    with pytest.raises(ValueError, match="outcome"):
        PovmOutcomeField({"a": "w"}, "iid-model")


def test_missing_site_outcome_rejected(path3):
    state = build_aklt2d(path3)
    with pytest.raises(ValueError, match="no x/y/z outcome"):
        verify_encoded_cluster(path3, {"x0y0": "z"}, state)


def test_exact_sampling_reproducible_and_consistent(path3):
    f1, p1 = sample_outcomes(path3, np.random.default_rng(5), model="exact")
    f2, p2 = sample_outcomes(path3, np.random.default_rng(5), model="exact")
    assert f1.outcomes == f2.outcomes
    assert f1.provenance == "exact-Born"
    assert abs(overlap(p1, p2)) >= 1.0 - 1e-12
    for field, post in enumerate_branches(path3):
        if field.outcomes == f1.outcomes:
            assert abs(field.probability - f1.probability) <= 1e-12
            assert abs(abs(overlap(post, p1)) - 1.0) <= 1e-10


def test_iid_sampling_reproducible(hexagon):
    f1, s1 = sample_outcomes(hexagon, np.random.default_rng(42), model="iid")
    f2, s2 = sample_outcomes(hexagon, np.random.default_rng(42), model="iid")
    assert f1.outcomes == f2.outcomes
    assert f1.provenance == "iid-model"
    assert s1 is None and s2 is None


def test_sampling_validation(path3):
    with pytest.raises(ValueError, match="iid"):
        sample_outcomes(path3, model="exact", probs=(1, 0, 0))
    with pytest.raises(ValueError, match="state"):
        sample_outcomes(path3, model="iid", state=build_aklt2d(path3))
    with pytest.raises(ValueError, match="model"):
        sample_outcomes(path3, model="born")
    with pytest.raises(ValueError, match="triple"):
        sample_outcomes(path3, model="iid", probs=(0.5, 0.6, 0.2))


def test_enumeration_prunes_by_probability(path3):
    assert list(enumerate_branches(path3, min_probability=1.0)) == []


# ---------------------------------------------------------------------------
# domain simplification


def test_measure_out_two_site_domain():
    patch = SiteGraph(["a", "b"], [("a", "b")], dims=2,
                      sublattice={"a": "A", "b": "B"})
    field = {"a": "z", "b": "z"}
    state = build_aklt2d(patch)
    plus_sign, p_plus, plus = measure_out_site(state, patch, field, "b", forced=1)
    minus_sign, p_minus, minus = measure_out_site(state, patch, field, "b", forced=-1)
    assert (plus_sign, minus_sign) == (1, -1)
    assert abs(p_plus - 0.5) <= 1e-12 and abs(p_minus - 0.5) <= 1e-12
    assert plus.dims == (2,) and minus.dims == (2,)
    # the minus branch is the plus branch with the logical Z flipped
    z = np.diag([1.0, -1.0]).astype(complex)
    assert abs(abs(np.vdot(z @ plus.amps, minus.amps)) - 1.0) <= 1e-12


def test_measure_out_site_random_branch(path3):
    for field, post in enumerate_branches(path3):
        if field.outcomes == {"x0y0": "z", "x1y0": "z", "x2y0": "z"}:
            sign, prob, red = measure_out_site(
                post, path3, field, "x2y0", rng=np.random.default_rng(0))
            assert sign in (1, -1)
            assert 0 < prob <= 1
            assert red.dims == (2, 3)
            assert abs(np.linalg.norm(red.amps) - 1.0) <= 1e-12


# ---------------------------------------------------------------------------
# percolation statistics


def test_percolation_stats_byte_reproducible():
    s1 = percolation_stats(6, 4, samples=25, seed=123)
    s2 = percolation_stats(6, 4, samples=25, seed=123)
    assert json.dumps(s1, sort_keys=True) == json.dumps(s2, sort_keys=True)
    assert s1["model"] == "iid-model"
    assert s1["approximate_model"] is True
    assert s1["outcome_probabilities"] == {"z": 1 / 3, "x": 1 / 3, "y": 1 / 3}
    assert 0 <= s1["spanning_probability"] <= 1
    lo, hi = s1["ci95_largest_fraction"]
    assert lo <= s1["mean_largest_fraction"] <= hi


def test_percolation_single_outcome_is_one_domain():
    s = percolation_stats(6, 4, samples=10, seed=5, probs=(1.0, 0.0, 0.0))
    assert s["mean_largest_fraction"] == 1.0
    assert s["spanning_probability"] == 0.0
    assert s["degree_histogram"] == {"0": 10}


def test_percolation_exact_model_small_patch():
    s = percolation_stats(3, 2, samples=6, seed=11, model="exact")
    assert s["model"] == "exact-Born"
    assert s["approximate_model"] is False
    assert s["outcome_probabilities"] is None
    assert s["sites"] == 6


def test_percolation_validation():
    with pytest.raises(ValueError, match="sample"):
        percolation_stats(4, 4, samples=0, seed=1)
    with pytest.raises(ValueError, match="model"):
        percolation_stats(4, 4, samples=2, seed=1, model="mean-field")
