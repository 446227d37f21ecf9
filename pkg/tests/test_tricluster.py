import itertools

import numpy as np
import pytest

from vbslab.graphs import SiteGraph
from vbslab.hamiltonian import (
    ground_state,
    low_spectrum,
    orthonormal_columns,
    subspaces_equal,
)
from vbslab.qstate import overlap, range_projector, reduced_density
from vbslab.tricluster import (
    ORIENTATIONS,
    P_TRICLUSTER,
    PepsSpec,
    RangeSpace,
    block_decomposition,
    brick_patch,
    brick_rect,
    build_h_tricluster,
    build_tricluster,
    check_uniqueness_condition,
    classify_edge,
    gap_bound_checks,
    hexagon_patch,
    neighbor_range,
    orientation_range,
    pair_environment,
    path_patch,
    project_to_cluster,
    star_patch,
)


@pytest.fixture(scope="module")
def hexagon():
    return hexagon_patch()


@pytest.fixture(scope="module")
def hexagon_state(hexagon):
    return build_tricluster(hexagon)


@pytest.fixture(scope="module")
def hexagon_ham(hexagon):
    return build_h_tricluster(hexagon)


@pytest.fixture(scope="module")
def gap_report():
    return gap_bound_checks()


# --- site projector ---------------------------------------------------------


def test_projector_rows_orthonormal():
    gram = P_TRICLUSTER @ P_TRICLUSTER.conj().T
    assert np.allclose(gram, np.eye(6), atol=1e-12)


def test_projector_rows_are_complementary_patterns():
    # each row selects a single virtual pattern; the two levels of a pair
    # differ by flipping all three slots
    for row in P_TRICLUSTER:
        assert np.count_nonzero(row) == 1
    for c in range(3):
        lo = int(np.argmax(np.abs(P_TRICLUSTER[2 * c])))
        hi = int(np.argmax(np.abs(P_TRICLUSTER[2 * c + 1])))
        assert lo + hi == 7


# --- patch geometry ---------------------------------------------------------


def test_hexagon_patch_shape(hexagon):
    assert hexagon.num_vertices == 6
    assert len(hexagon.edges) == 6
    assert hexagon.dims == (6,) * 6
    assert hexagon.sublattice["x0y0"] == "A"
    assert hexagon.sublattice["x1y0"] == "B"
    assert hexagon.sublattice["x1y1"] == "A"


def test_classify_edge_tags(hexagon):
    tags = {}
    for u, v in hexagon.edges:
        tag, a, b = classify_edge(hexagon, u, v)
        assert hexagon.sublattice[a] == "A"
        assert hexagon.sublattice[b] == "B"
        assert classify_edge(hexagon, v, u) == (tag, a, b)
        tags.setdefault(tag, []).append((a, b))
    assert sorted(len(tags[t]) for t in ORIENTATIONS) == [2, 2, 2]
    assert ("x0y0", "x1y0") in tags["ab"]
    assert ("x2y0", "x1y0") in tags["ba"]
    assert ("x0y0", "x0y1") in tags["b_over_a"]


def test_classify_edge_rejects(hexagon):
    with pytest.raises(ValueError):
        classify_edge(hexagon, "x0y0", "x2y0")  # same sublattice
    with pytest.raises(ValueError):
        classify_edge(hexagon, "x0y0", "x2y1")  # not adjacent
    bare = SiteGraph(["a", "b"], [("a", "b")], dims=6)
    with pytest.raises(ValueError):
        classify_edge(bare, "a", "b")  # no coordinates


def test_patch_builders_validate():
    with pytest.raises(ValueError):
        brick_patch([(0, 0), (0, 0)])
    with pytest.raises(ValueError):
        brick_rect(0, 2)
    with pytest.raises(ValueError):
        path_patch(0)


def test_vertical_bonds_follow_parity():
    patch = brick_rect(2, 4)
    edges = {frozenset(e) for e in patch.edges}
    assert frozenset(("x0y0", "x0y1")) in edges
    assert frozenset(("x1y0", "x1y1")) not in edges
    assert frozenset(("x2y0", "x2y1")) in edges


def test_pepsspec_validation(hexagon):
    PepsSpec(hexagon)  # the shipped patches pass
    missing = SiteGraph(
        ["x0y0", "x1y0"],
        [],
        dims=6,
        sublattice={"x0y0": "A", "x1y0": "B"},
        coords={"x0y0": (0.0, 0.0), "x1y0": (1.0, 0.0)},
    )
    with pytest.raises(ValueError, match="adjacency"):
        PepsSpec(missing)
    relabeled = SiteGraph(
        ["x0y0", "x1y0"],
        [("x0y0", "x1y0")],
        dims=6,
        sublattice={"x0y0": "B", "x1y0": "A"},
        coords={"x0y0": (0.0, 0.0), "x1y0": (1.0, 0.0)},
    )
    with pytest.raises(ValueError, match="sublattice"):
        PepsSpec(relabeled)
    with pytest.raises(ValueError, match="dimension"):
        PepsSpec(hexagon.with_dims(2))
    with pytest.raises(ValueError, match="bond"):
        PepsSpec(hexagon, bond=np.ones(3))
    with pytest.raises(ValueError, match="projector"):
        PepsSpec(hexagon, projector=np.eye(6))


# --- network contraction ----------------------------------------------------


def test_truncate_and_plus_agree(hexagon):
    for patch in (star_patch(), hexagon):
        a = build_tricluster(patch, boundary="truncate")
        b = build_tricluster(patch, boundary="plus")
        assert abs(overlap(a, b)) >= 1.0 - 1e-12


def test_free_boundary_appends_stub_qubits():
    closed = build_tricluster(path_patch(2))
    assert closed.dims == (6, 6)
    opened = build_tricluster(path_patch(2), boundary="free")
    assert opened.dims == (6, 6, 2, 2, 2, 2)
    star = build_tricluster(star_patch(), boundary="free")
    assert star.dims == (6,) * 4 + (2,) * 6


def test_build_rejects_bad_input(hexagon):
    with pytest.raises(ValueError):
        build_tricluster(hexagon, boundary="periodic")
    with pytest.raises(ValueError, match="cap"):
        build_tricluster(brick_rect(3, 3))


# --- two-site ranges --------------------------------------------------------


def test_orientation_ranges_have_rank_16():
    for o in ORIENTATIONS:
        r = orientation_range(o)
        assert r.orientation == o
        assert r.rank == 16


def test_orientation_range_stable_under_larger_environment():
    for o in ORIENTATIONS:
        small = orientation_range(o)
        large = orientation_range(o, extended=True)
        assert large.rank == 16
        assert subspaces_equal(small.basis, large.basis)


def test_pair_environment_lists_the_pair_first():
    for o in ORIENTATIONS:
        patch = pair_environment(o)
        u, v = patch.vertex_ids[:2]
        assert classify_edge(patch, u, v) == (o, u, v)


def test_boundary_pair_ranges_sit_inside_canonical(hexagon):
    for u, v in hexagon.edges:
        r = neighbor_range(hexagon, (u, v))
        assert r.rank == 4
        big = orientation_range(r.orientation).basis
        proj = big @ big.conj().T
        assert np.allclose(proj @ r.basis, r.basis, atol=1e-8)


def test_neighbor_range_checks_orientation(hexagon):
    with pytest.raises(ValueError, match="orientation"):
        neighbor_range(hexagon, ("x0y0", "x1y0"), orientation="ba")


def test_single_site_marginals(hexagon, hexagon_state):
    star = star_patch()
    state = build_tricluster(star)
    rho = reduced_density(state, (star.index("x0y0"),))
    _, rank = range_projector(rho)
    assert rank == 6  # fully surrounded site explores all six levels
    rho = reduced_density(hexagon_state, (hexagon.index("x0y0"),))
    _, rank = range_projector(rho)
    assert rank == 4  # a corner site with a truncated slot does not


def test_range_space_validation():
    good = orientation_range("ab")
    comp = good.complement_projector()
    assert np.allclose(comp @ comp, comp, atol=1e-10)
    assert np.max(np.abs(comp @ good.basis)) <= 1e-10
    with pytest.raises(ValueError, match="orientation"):
        RangeSpace("diagonal", good.basis)
    with pytest.raises(ValueError, match="orthonormal"):
        RangeSpace("ab", np.ones((36, 2)))
    with pytest.raises(ValueError, match="36"):
        RangeSpace("ab", np.eye(8))


# --- parent Hamiltonian -----------------------------------------------------


def test_h_tricluster_is_frustration_free(hexagon_ham, hexagon_state):
    assert max(hexagon_ham.term_residuals(hexagon_state)) <= 1e-9
    assert abs(hexagon_ham.expectation(hexagon_state)) <= 1e-9


def test_h_tricluster_term_ranks(hexagon_ham):
    for _, mat in hexagon_ham.terms:
        assert np.linalg.matrix_rank(mat, tol=1e-8) == 32
    surrounded = build_h_tricluster(pair_environment("ab"))
    ranks = {sites: np.linalg.matrix_rank(mat, tol=1e-8) for sites, mat in surrounded.terms}
    assert ranks[(0, 1)] == 20  # the fully surrounded central bond


def test_h_two_sites_has_unique_ground():
    patch = path_patch(2)
    ham = build_h_tricluster(patch)
    e0, psi = ground_state(ham)
    assert abs(e0) <= 1e-12
    assert abs(overlap(psi, build_tricluster(patch))) >= 1.0 - 1e-10
    spectrum = low_spectrum(ham, k=2)
    assert spectrum[1] >= 0.5


def test_hexagon_ground_is_unique(gap_report):
    numbers = gap_report["numbers"]
    assert abs(numbers["ground_energy"]) <= 1e-9
    assert numbers["gap"] > 1e-4


# --- uniqueness of the ground space -----------------------------------------


def test_uniqueness_condition_holds(hexagon):
    assert check_uniqueness_condition(hexagon, ("x0y0", "x1y0", "x2y0"))
    assert check_uniqueness_condition(hexagon, ("x1y1", "x0y1", "x0y0", "x1y0"))


def test_uniqueness_condition_fails_for_generic_subspace(hexagon):
    rng = np.random.default_rng(7)
    raw = rng.normal(size=(36, 16)) + 1j * rng.normal(size=(36, 16))
    fake = orthonormal_columns(raw)
    assert not check_uniqueness_condition(
        hexagon, ("x0y0", "x1y0", "x2y0"), replace={"ab": fake}
    )


def test_uniqueness_condition_rejects(hexagon):
    with pytest.raises(ValueError, match="3 or 4"):
        check_uniqueness_condition(hexagon, ("x0y0", "x1y0"))
    with pytest.raises(ValueError, match="3 or 4"):
        check_uniqueness_condition(hexagon, tuple(hexagon.vertex_ids)[:5])
    with pytest.raises(ValueError, match="repeated"):
        check_uniqueness_condition(hexagon, ("x0y0", "x0y0", "x1y0"))
    with pytest.raises(ValueError, match="not in the patch"):
        check_uniqueness_condition(hexagon, ("x0y0", "x1y0", "x9y9"))
    with pytest.raises(ValueError, match="connected"):
        check_uniqueness_condition(hexagon, ("x0y0", "x2y0", "x2y1"))


# --- gap certificates -------------------------------------------------------


def test_block_decomposition_of_hexagon(hexagon):
    blocks, pairs = block_decomposition(hexagon)
    edges = {frozenset(e) for e in hexagon.edges}
    assert len(blocks) == 3
    assert len(pairs) == 3
    assert all(frozenset(b) in edges for b in blocks)
    for bp in pairs:
        path = bp.path()
        assert len(set(path)) == 4
        steps = list(zip(path, path[1:]))
        assert all(frozenset(s) in edges for s in steps)
        # a block pair crosses all three bond orientations
        tags = {classify_edge(hexagon, x, y)[0] for x, y in steps}
        assert tags == set(ORIENTATIONS)


def test_block_decomposition_rejects_odd_patch():
    with pytest.raises(ValueError, match="block-decomposable"):
        block_decomposition(path_patch(3))


def test_gap_checks_need_block_pairs():
    with pytest.raises(ValueError, match="block pairs"):
        gap_bound_checks(path_patch(2))


def test_gap_bound_checks(gap_report):
    assert gap_report["mu_ok"]
    assert gap_report["c_ok"]
    assert gap_report["eta_ok"]
    numbers = gap_report["numbers"]
    assert numbers["block_pairs"] == 3
    assert abs(numbers["mu"] - 0.5) <= 1e-9
    assert numbers["mu_slack"] >= -1e-6
    assert abs(numbers["k_ground"]) <= 1e-9
    assert abs(numbers["k_min_nonzero"] - 1.0 / 3.0) <= 1e-6
    assert numbers["relaxed_min"] >= -1e-9
    assert numbers["gap"] >= 1.0 / 24.0 - 1e-6
    assert abs(numbers["gap"] - 2.0 / 3.0) <= 1e-6


# --- reduction to the cluster state -----------------------------------------


def test_projecting_first_pairs_gives_cluster_exactly():
    for patch in (path_patch(3), star_patch(), hexagon_patch()):
        n = patch.num_vertices
        red = project_to_cluster(patch, (0,) * n)
        assert red.fidelity >= 1.0 - 1e-12
        assert red.frame == "I" * n
        assert abs(red.weight - 3.0 ** -n) <= 1e-12


def test_every_pair_pattern_reduces_to_cluster():
    for patch in (star_patch(), path_patch(4)):
        total = 0.0
        for choices in itertools.product(range(3), repeat=4):
            red = project_to_cluster(patch, choices)
            assert red.fidelity >= 1.0 - 1e-9
            total += red.weight
        assert abs(total - 1.0) <= 1e-9


def test_project_to_cluster_rejects(hexagon):
    with pytest.raises(ValueError, match="one pair choice"):
        project_to_cluster(hexagon, (0, 0, 0))
    with pytest.raises(ValueError, match="out of range"):
        project_to_cluster(hexagon, (0, 0, 0, 0, 0, 3))
