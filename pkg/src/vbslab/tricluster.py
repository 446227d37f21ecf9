"""Six-level tri-cluster tensor network on the brick-wall honeycomb lattice.

Every site carries a six-level particle obtained by projecting three virtual
qubits with a rank-6 isometry; every bond holds the two-qubit state
(|00> + |01> + |10> - |11>)/2.  The six levels group into three pairs.  Each
pair acts like the copy tensor of the cluster-state PEPS, the second and
third pairs with one horizontal virtual leg flipped, so keeping any one pair
per site under a projective measurement leaves the patch graph state up to
site-local Pauli corrections.

Virtual slots are ordered (east, west, vertical).  The vertical slot points
up on sublattice A (even coordinate parity) and down on sublattice B, so
every bond joins an A site to a B site in one of three orientations: "ab"
(a west of b), "ba" (b west of a) and "b_over_a".

Besides exact patch construction, the module extracts the two-site reduced
ranges whose orthogonal complements define the parent Hamiltonian, verifies
the range-intersection property behind ground-state uniqueness, and
certifies the numbers in the spectral-gap chain: the block relaxation
constant mu, the lower bound on the nonzero spectrum of the block-pair
interaction K, and the resulting patch gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse.linalg as sla

from .cluster import build_cluster_state
from .graphs import SiteGraph
from .hamiltonian import (
    DENSE_CAP,
    LocalHamiltonian,
    orthonormal_columns,
    subspace_intersection,
    subspaces_equal,
)
from .mps import BOND, CBOND
from .qstate import DESK_CAP, QuditState, X, Y, Z, range_projector, reduced_density

ORIENTATIONS = ("ab", "ba", "b_over_a")

# Physical level r keeps virtual pattern _ROWS[r] on (east, west, vertical).
# Pairs (0,1), (2,3), (4,5): copy tensor, copy with the east leg flipped,
# copy with the west leg flipped.
_ROWS = ((0, 0, 0), (1, 1, 1), (1, 0, 0), (0, 1, 1), (0, 1, 0), (1, 0, 1))


def _pattern_tensor() -> np.ndarray:
    w = np.zeros((6, 2, 2, 2), dtype=complex)
    for r, bits in enumerate(_ROWS):
        w[(r,) + bits] = 1.0
    return w


_W_FULL = _pattern_tensor()

# Site projector rows on the flat little-endian three-qubit basis.
P_TRICLUSTER = np.zeros((6, 8), dtype=complex)
for _r, (_b1, _b2, _b3) in enumerate(_ROWS):
    P_TRICLUSTER[_r, _b1 + 2 * _b2 + 4 * _b3] = 1.0
del _r, _b1, _b2, _b3


# ---------------------------------------------------------------------------
# brick-wall geometry


def _site_id(x: int, y: int) -> str:
    return f"x{x}y{y}"


def _cell(patch: SiteGraph, v: str) -> tuple[int, int]:
    x, y = patch.coords[v]
    return int(round(x)), int(round(y))


def _slot_targets(x: int, y: int):
    """Neighbour cells of (x, y), listed in slot order (east, west, vertical)."""
    vert = (x, y + 1) if (x + y) % 2 == 0 else (x, y - 1)
    return (x + 1, y), (x - 1, y), vert


def brick_patch(cells) -> SiteGraph:
    """Lattice patch on the given integer cells.

    Horizontal bonds join east-west neighbours; vertical bonds join
    (x, y)-(x, y+1) exactly when x + y is even.  Every site then touches at
    most three bonds, with sublattice A (even parity) below B on each
    vertical bond.
    """
    cells = [(int(x), int(y)) for x, y in cells]
    if len(set(cells)) != len(cells):
        raise ValueError("repeated cell in patch")
    have = set(cells)
    vertices, sub, coords = [], {}, {}
    for x, y in cells:
        v = _site_id(x, y)
        vertices.append(v)
        sub[v] = "A" if (x + y) % 2 == 0 else "B"
        coords[v] = (float(x), float(y))
    edges = []
    for x, y in cells:
        if (x + 1, y) in have:
            edges.append((_site_id(x, y), _site_id(x + 1, y)))
        if (x + y) % 2 == 0 and (x, y + 1) in have:
            edges.append((_site_id(x, y), _site_id(x, y + 1)))
    return SiteGraph(vertices, edges, dims=6, sublattice=sub, coords=coords)


def brick_rect(rows: int, cols: int) -> SiteGraph:
    """Rectangular window of the lattice: `rows` brick rows of `cols` sites."""
    if rows < 1 or cols < 1:
        raise ValueError("need at least one row and one column")
    return brick_patch([(x, y) for y in range(rows) for x in range(cols)])


def hexagon_patch() -> SiteGraph:
    """The single closed hexagon (2 rows x 3 columns); unit cell of the
    gap certificates."""
    return brick_rect(2, 3)


def path_patch(n: int) -> SiteGraph:
    """n sites along one brick row."""
    if n < 1:
        raise ValueError("need at least one site")
    return brick_patch([(x, 0) for x in range(n)])


def star_patch() -> SiteGraph:
    """An A site with all three neighbours present."""
    return brick_patch([(0, 0), (1, 0), (-1, 0), (0, 1)])


def pair_environment(orientation: str, extended: bool = False) -> SiteGraph:
    """A bonded pair together with every adjacent site, the pair listed first.

    The two-site reduced state of this patch already carries the exact
    infinite-lattice range for the bond orientation; `extended` grows the
    environment by two more sites as a stability check.
    """
    if orientation == "ab":
        cells = [(0, 0), (1, 0), (-1, 0), (0, 1), (2, 0), (1, -1)]
        extra = [(-1, -1), (2, 1)]
    elif orientation == "ba":
        cells = [(2, 0), (1, 0), (3, 0), (2, 1), (0, 0), (1, -1)]
        extra = [(3, -1), (0, 1)]
    elif orientation == "b_over_a":
        cells = [(0, 0), (0, 1), (1, 0), (-1, 0), (1, 1), (-1, 1)]
        extra = [(1, -1), (-1, 2)]
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    if extended:
        cells = cells + extra
    return brick_patch(cells)


def classify_edge(patch: SiteGraph, u: str, v: str):
    """Orientation tag and (a, b) ordering of a bond, from coordinates alone."""
    if patch.coords is None or u not in patch.coords or v not in patch.coords:
        raise ValueError("patch does not carry coordinates for both sites")
    cu, cv = _cell(patch, u), _cell(patch, v)
    a, b = (u, v) if sum(cu) % 2 == 0 else (v, u)
    (ax, ay), (bx, by) = _cell(patch, a), _cell(patch, b)
    if (ax + ay) % 2 != 0 or (bx + by) % 2 != 1:
        raise ValueError("bond does not join the two sublattices")
    if ax == bx and by == ay + 1:
        return "b_over_a", a, b
    if ay == by and bx == ax + 1:
        return "ab", a, b
    if ay == by and bx == ax - 1:
        return "ba", a, b
    raise ValueError("sites are not brick-wall neighbours")


# ---------------------------------------------------------------------------
# the tensor network


@dataclass(frozen=True, eq=False)
class PepsSpec:
    """Validated pairing of a brick-wall patch with the site projector.

    Checks that coordinates are integral and distinct, the stored sublattice
    matches coordinate parity, the bond set is exactly the brick-wall
    adjacency of the cells, and every site dimension equals the number of
    projector rows.
    """

    lattice: SiteGraph
    bond: np.ndarray = None
    projector: np.ndarray = None

    def __post_init__(self):
        if self.bond is None:
            object.__setattr__(self, "bond", CBOND.copy())
        if self.projector is None:
            object.__setattr__(self, "projector", P_TRICLUSTER.copy())
        bond = np.asarray(self.bond, dtype=complex)
        proj = np.asarray(self.projector, dtype=complex)
        if bond.shape != (4,):
            raise ValueError("bond must be a two-qubit vector")
        if proj.ndim != 2 or proj.shape[1] != 8:
            raise ValueError("projector must act on three virtual qubits")
        g = self.lattice
        if g.coords is None or g.sublattice is None:
            raise ValueError("patch needs coordinates and sublattice labels")
        cell_to_id = {}
        for v in g.vertex_ids:
            if g.dim(v) != proj.shape[0]:
                raise ValueError("site dimension does not match projector rows")
            if v not in g.coords:
                raise ValueError(f"site {v} has no coordinates")
            x, y = g.coords[v]
            if abs(x - round(x)) > 1e-9 or abs(y - round(y)) > 1e-9:
                raise ValueError("coordinates must be integers")
            cell = (int(round(x)), int(round(y)))
            if cell in cell_to_id:
                raise ValueError("two sites share a cell")
            cell_to_id[cell] = v
            want = "A" if sum(cell) % 2 == 0 else "B"
            if g.sublattice.get(v) != want:
                raise ValueError("sublattice labels do not match coordinate parity")
        expected = set()
        for cell, v in cell_to_id.items():
            for tgt in _slot_targets(*cell):
                if tgt in cell_to_id:
                    expected.add(tuple(sorted((v, cell_to_id[tgt]))))
        if set(g.edges) != expected:
            raise ValueError("patch bonds do not match brick-wall adjacency")


def build_tricluster(patch: SiteGraph, boundary: str = "truncate") -> QuditState:
    """Contract the network exactly on a patch; sites keep the patch order.

    boundary:
      * "truncate": projector rows are restricted to the present slots.
      * "plus": absent slots are pinned to |+> first (the same state).
      * "free": absent slots are purified into extra physical qubits appended
        after the sites, exposing the exact infinite-lattice environment.
    """
    if boundary not in ("truncate", "plus", "free"):
        raise ValueError(f"unknown boundary mode {boundary!r}")
    PepsSpec(patch)
    verts = list(patch.vertex_ids)
    cells = {v: _cell(patch, v) for v in verts}
    have = {cells[v]: v for v in verts}

    present = {}
    absent = {}
    for v in verts:
        slots = _slot_targets(*cells[v])
        present[v] = [s for s in range(3) if slots[s] in have]
        absent[v] = [s for s in range(3) if slots[s] not in have]

    stubs = []
    if boundary == "free":
        stubs = [("stub", v, s) for v in verts for s in absent[v]]
    total = 6 ** len(verts) * 2 ** len(stubs)
    if total > DESK_CAP:
        raise ValueError(f"patch dimension {total} exceeds the cap {DESK_CAP}")

    factors = []
    for u, v in patch.edges:
        cu, cv = cells[u], cells[v]
        su = _slot_targets(*cu).index(cv)
        sv = _slot_targets(*cv).index(cu)
        factors.append((CBOND, ("leg", u, su), ("leg", v, sv)))
    for _, v, s in stubs:
        factors.append((BOND, ("leg", v, s), ("stub", v, s)))
    if 2 * len(factors) + 1 > 30:
        raise ValueError("too many virtual legs for exact contraction")

    t = np.ones((), dtype=complex)
    legs = []
    for vec, la, lb in factors:
        t = np.multiply.outer(t, vec.reshape(2, 2, order="F"))
        legs.extend([la, lb])

    edge_vec = np.ones(2, dtype=complex)
    if boundary == "plus":
        edge_vec = edge_vec / np.sqrt(2.0)
    for v in verts:
        consumed = present[v] if boundary != "free" else sorted(present[v] + absent[v])
        w = _W_FULL
        for s in (2, 1, 0):
            if s not in consumed:
                w = np.tensordot(w, edge_vec, axes=([1 + s], [0]))
        ax = [legs.index(("leg", v, s)) for s in consumed]
        t = np.tensordot(w, t, axes=(list(range(1, len(ax) + 1)), ax))
        t = np.moveaxis(t, 0, -1)
        legs = [l for l in legs if not (l[0] == "leg" and l[1] == v)]
        legs.append(("phys", v))

    desired = [("phys", v) for v in verts] + stubs
    t = t.transpose([legs.index(l) for l in desired])
    dims = (6,) * len(verts) + (2,) * len(stubs)
    return QuditState(dims, t.reshape(-1, order="F")).normalized()


# ---------------------------------------------------------------------------
# two-site ranges and the parent Hamiltonian


@dataclass(frozen=True, eq=False)
class RangeSpace:
    """Orthonormal basis of a two-site reduced range, tagged by orientation.

    Columns live on the pair big-endian as (a, b)."""

    orientation: str
    basis: np.ndarray

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"unknown orientation {self.orientation!r}")
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] != 36:
            raise ValueError("basis columns must live on the 36-dimensional pair space")
        gram = b.conj().T @ b
        if np.max(np.abs(gram - np.eye(b.shape[1]))) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def complement_projector(self) -> np.ndarray:
        return np.eye(36, dtype=complex) - self.basis @ self.basis.conj().T


def neighbor_range(
    patch: SiteGraph, pair, orientation: str | None = None, boundary: str = "truncate"
) -> RangeSpace:
    """Range of the reduced density matrix on a bonded pair of the patch.

    The orientation is read off the coordinates; passing one explicitly just
    asserts it matches."""
    u, v = pair
    tag, a, b = classify_edge(patch, u, v)
    if orientation is not None and orientation != tag:
        raise ValueError(f"pair {pair} has orientation {tag!r}, not {orientation!r}")
    state = build_tricluster(patch, boundary=boundary)
    rho = reduced_density(state, (patch.index(a), patch.index(b)))
    proj, _ = range_projector(rho)
    return RangeSpace(tag, orthonormal_columns(proj))


@lru_cache(maxsize=None)
def orientation_range(orientation: str, extended: bool = False) -> RangeSpace:
    """Canonical two-site range of a bond orientation, from its fully
    surrounded pair patch."""
    patch = pair_environment(orientation, extended)
    u, v = patch.vertex_ids[:2]
    return neighbor_range(patch, (u, v))


def _pair_range_basis(state: QuditState, patch: SiteGraph, a: str, b: str) -> np.ndarray:
    rho = reduced_density(state, (patch.index(a), patch.index(b)))
    proj, _ = range_projector(rho)
    return orthonormal_columns(proj)


def build_h_tricluster(patch: SiteGraph) -> LocalHamiltonian:
    """Parent Hamiltonian: per bond, the projector complementary to the
    patch's two-site reduced range on that bond.

    On a fully surrounded pair the term equals the rank-20 complement of the
    canonical orientation range; on boundary pairs truncation shrinks the
    range further and the term is kept in projector form, which pins the
    dangling freedom and leaves the patch state as the unique ground state.
    """
    PepsSpec(patch)
    state = build_tricluster(patch)
    terms = []
    for u, v in patch.edges:
        _, a, b = classify_edge(patch, u, v)
        basis = _pair_range_basis(state, patch, a, b)
        h = np.eye(36, dtype=complex) - basis @ basis.conj().T
        terms.append(((patch.index(a), patch.index(b)), h))
    return LocalHamiltonian(patch.dims, terms)


def check_uniqueness_condition(patch: SiteGraph, region, replace=None) -> bool:
    """Intersection property on a patch region of 3 or 4 sites.

    True when the infinite-lattice reduced range on the region (computed
    with free boundary legs) equals the intersection of the embedded
    canonical two-site ranges over the bonds inside it.  `replace` may map
    an orientation tag to a different pair basis, to probe how the property
    fails for generic subspaces.
    """
    region = tuple(region)
    if not 3 <= len(region) <= 4:
        raise ValueError("region must contain 3 or 4 sites")
    if len(set(region)) != len(region):
        raise ValueError("repeated site in region")
    for s in region:
        if s not in patch.vertex_ids:
            raise ValueError(f"site {s} is not in the patch")
    bonds = [e for e in patch.edges if e[0] in region and e[1] in region]
    reach = {region[0]}
    grew = True
    while grew:
        grew = False
        for u, v in bonds:
            if (u in reach) != (v in reach):
                reach.update((u, v))
                grew = True
    if reach != set(region):
        raise ValueError("region must be connected through patch bonds")
    sub = brick_patch([_cell(patch, s) for s in region])
    state = build_tricluster(sub, boundary="free")
    # little-endian flat site index, matching the dense embeddings below
    m = state.amps.reshape(6 ** len(region), -1, order="F")
    s_region = orthonormal_columns(m)
    dims = (6,) * len(region)
    bases = []
    for u, v in bonds:
        tag, a, b = classify_edge(patch, u, v)
        basis = None if replace is None else replace.get(tag)
        if basis is None:
            basis = orientation_range(tag).basis
        basis = np.asarray(basis, dtype=complex)
        p36 = basis @ basis.conj().T
        emb = LocalHamiltonian(dims, [((region.index(a), region.index(b)), p36)])
        bases.append(emb.dense())
    return subspaces_equal(s_region, subspace_intersection(bases))


# ---------------------------------------------------------------------------
# gap certificates


@dataclass(frozen=True)
class BlockPair:
    """Two matched bonds joined by a bridge from the right end of m to the
    left end of n; path() lists the four sites along the bonds."""

    m: tuple[str, str]
    n: tuple[str, str]

    def path(self) -> tuple[str, str, str, str]:
        return self.m + self.n


def block_decomposition(patch: SiteGraph):
    """Split the bonds into a perfect matching of blocks plus bridges.

    Each block is an ordered bond (left, right); every bridge must run from
    the right end of one block to the left end of another.  Returns
    (blocks, pairs) with one BlockPair per bridge.
    """
    verts = list(patch.vertex_ids)
    if len(verts) % 2:
        raise ValueError("patch is not block-decomposable")
    adj = {v: list(patch.neighbors(v)) for v in verts}

    def matchings(rem):
        if not rem:
            yield []
            return
        v = rem[0]
        for u in adj[v]:
            if u in rem:
                rest = [w for w in rem if w not in (v, u)]
                for tail in matchings(rest):
                    yield [(v, u)] + tail

    for match in matchings(verts):
        matched = {frozenset(b) for b in match}
        bridges = [e for e in patch.edges if frozenset(e) not in matched]
        for flips in product((0, 1), repeat=len(match)):
            blocks = [(b[1], b[0]) if f else b for b, f in zip(match, flips)]
            role = {}
            block_of = {}
            for blk in blocks:
                role[blk[0]], role[blk[1]] = "l", "r"
                block_of[blk[0]] = block_of[blk[1]] = blk
            pairs = []
            for x, y in bridges:
                if role[x] == "r" and role[y] == "l":
                    pairs.append(BlockPair(block_of[x], block_of[y]))
                elif role[y] == "r" and role[x] == "l":
                    pairs.append(BlockPair(block_of[y], block_of[x]))
                else:
                    pairs = None
                    break
            if pairs is not None:
                return blocks, pairs
    raise ValueError("patch is not block-decomposable")


def _path_kernel_basis(patch: SiteGraph, path) -> np.ndarray:
    """Orthonormal basis of the ideal four-site range along a bonded path.

    Built with free boundary legs, so the span is the infinite-lattice one,
    independent of the hosting patch."""
    sub = brick_patch([_cell(patch, s) for s in path])
    if len(sub.edges) != 3:
        raise ValueError("path sites must form a chordless bonded path")
    state = build_tricluster(sub, boundary="free")
    m = state.tensor().reshape(6 ** 4, -1)
    return orthonormal_columns(m)


def _lowrank_operator(dims, const: float, pieces) -> sla.LinearOperator:
    """const * identity plus a sum of coeff * (B B^dagger) supported on site
    tuples; B columns are big-endian over the support."""
    dims = tuple(dims)
    n = len(dims)
    total = int(np.prod(dims))
    plans = []
    for sites, basis, coeff in pieces:
        sites = tuple(sites)
        rest = [a for a in range(n) if a not in sites]
        perm = list(sites) + rest
        inv = tuple(np.argsort(perm))
        dsup = int(np.prod([dims[s] for s in sites]))
        shape = tuple(dims[a] for a in perm)
        plans.append((np.asarray(basis), complex(coeff), perm, inv, dsup, shape))

    def matvec(v):
        t = np.asarray(v, dtype=complex).reshape(dims, order="F")
        out = const * t
        for basis, coeff, perm, inv, dsup, shape in plans:
            m = t.transpose(perm).reshape(dsup, -1)
            m = basis @ (basis.conj().T @ m)
            out = out + coeff * m.reshape(shape).transpose(inv)
        return out.reshape(-1, order="F")

    return sla.LinearOperator((total, total), matvec=matvec, dtype=complex)


def _assemble_dense(dims, const, pieces) -> np.ndarray:
    total = int(np.prod(dims))
    out = const * np.eye(total, dtype=complex)
    for sites, basis, coeff in pieces:
        basis = np.asarray(basis)
        p = basis @ basis.conj().T
        emb = LocalHamiltonian(dims, [(tuple(sites), p)]).dense()
        out = out + coeff * emb
    return out


def _bottom_eigs(dims, const, pieces, k: int) -> np.ndarray:
    total = int(np.prod(dims))
    if total <= 2000:
        return np.linalg.eigvalsh(_assemble_dense(dims, const, pieces))[:k]
    op = _lowrank_operator(dims, const, pieces)
    v0 = np.full(total, 1.0 / np.sqrt(total))
    vals = sla.eigsh(op, k=k, which="SA", v0=v0, return_eigenvectors=False)
    return np.sort(vals)


def _quadratic_floor(dims, const, pieces) -> float:
    """Bottom eigenvalue of K^2 - K/3 for K described by (const, pieces).

    The kernel of K sits at 0 here whatever its dimension, so the value
    certifies the nonzero spectrum without resolving the kernel."""
    total = int(np.prod(dims))
    if total <= 2000:
        kd = _assemble_dense(dims, const, pieces)
        return float(np.linalg.eigvalsh(kd @ kd - kd / 3.0)[0])
    op = _lowrank_operator(dims, const, pieces)

    def matvec(v):
        w = op.matvec(v)
        return op.matvec(w) - w / 3.0

    quad = sla.LinearOperator((total, total), matvec=matvec, dtype=complex)
    v0 = np.full(total, 1.0 / np.sqrt(total))
    vals = sla.eigsh(quad, k=1, which="SA", v0=v0, return_eigenvectors=False)
    return float(vals[0])


def gap_bound_checks(patch: SiteGraph | None = None) -> dict:
    """Certify the spectral-gap chain on a patch (default: the hexagon).

    Checks, in order: (i) on every block pair, the three-bond Hamiltonian
    dominates half the four-site interaction k; (ii) the smallest nonzero
    eigenvalue of K = sum of the k terms is at least 1/3; (iii) H - K/8 is
    positive semidefinite; (iv) the patch gap is at least 1/24.
    """
    if patch is None:
        patch = hexagon_patch()
    _, pairs = block_decomposition(patch)
    if not pairs:
        raise ValueError("patch has no block pairs")

    state = build_tricluster(patch)
    h_pieces = []
    for u, v in patch.edges:
        _, a, b = classify_edge(patch, u, v)
        sites = (patch.index(a), patch.index(b))
        h_pieces.append((sites, _pair_range_basis(state, patch, a, b), -1.0))

    k_pieces = []
    mu_vals, mu_slacks = [], []
    for bp in pairs:
        path = bp.path()
        kernel = _path_kernel_basis(patch, path)
        sites = tuple(patch.index(s) for s in path)
        k_pieces.append((sites, kernel, -1.0))

        # restriction of the three-bond Hamiltonian to the support of k
        dims4 = tuple(patch.dims[i] for i in sites)
        terms4 = []
        for x, y in zip(path, path[1:]):
            tag, a, b = classify_edge(patch, x, y)
            h36 = orientation_range(tag).complement_projector()
            terms4.append(((path.index(a), path.index(b)), h36))
        ht = LocalHamiltonian(dims4, terms4).dense()
        kt = np.eye(6 ** 4, dtype=complex) - kernel @ kernel.conj().T
        kt = LocalHamiltonian(dims4, [((0, 1, 2, 3), kt)]).dense()
        cols = orthonormal_columns(kt)
        mu_vals.append(float(np.linalg.eigvalsh(cols.conj().T @ ht @ cols)[0]))
        mu_slacks.append(float(np.linalg.eigvalsh(ht - kt / 2)[0]))

    dims = patch.dims
    n_edges = len(h_pieces)
    n_pairs = len(k_pieces)
    h_spec = _bottom_eigs(dims, float(n_edges), h_pieces, 2)
    k_ground = float(_bottom_eigs(dims, float(n_pairs), k_pieces, 1)[0])
    quad_floor = _quadratic_floor(dims, float(n_pairs), k_pieces)
    # every nonzero eigenvalue lambda of K obeys lambda*(lambda - 1/3) >=
    # quad_floor, hence lambda >= 1/6 + sqrt(1/36 + quad_floor)
    c_val = 1.0 / 6.0 + np.sqrt(max(1.0 / 36.0 + quad_floor, 0.0))
    relax_pieces = h_pieces + [(s, b, 1.0 / 8.0) for s, b, _ in k_pieces]
    relax_min = _bottom_eigs(dims, n_edges - n_pairs / 8.0, relax_pieces, 1)[0]
    gap = float(h_spec[1] - h_spec[0])

    numbers = {
        "mu": float(min(mu_vals)),
        "mu_slack": float(min(mu_slacks)),
        "k_ground": k_ground,
        "k_quadratic_floor": float(quad_floor),
        "k_min_nonzero": float(c_val),
        "relaxed_min": float(relax_min),
        "ground_energy": float(h_spec[0]),
        "gap": gap,
        "block_pairs": len(pairs),
    }
    return {
        "mu_ok": bool(min(mu_slacks) >= -1e-6),
        "c_ok": bool(c_val >= 1.0 / 3.0 - 1e-6),
        "eta_ok": bool(relax_min >= -1e-9 and gap >= 1.0 / 24.0 - 1e-6),
        "numbers": numbers,
    }


# ---------------------------------------------------------------------------
# reduction to the cluster state


_PAULI_STACK = np.stack([np.eye(2, dtype=complex), X, Y, Z])
_PAULI_LETTERS = "IXYZ"


@dataclass(eq=False)
class ClusterReduction:
    """Outcome of keeping one two-level pair per site.

    `frame` lists one Pauli letter per site (patch order); applying it to
    `register` matches the patch graph state with overlap `fidelity`.
    `weight` is the Born probability of the pair pattern."""

    choices: tuple
    register: QuditState
    frame: str
    fidelity: float
    weight: float


def project_to_cluster(patch: SiteGraph, choices, boundary: str = "truncate") -> ClusterReduction:
    """Project each site onto pair `choices[i]` (levels 2c, 2c+1) and find
    the site-local Pauli frame aligning the result with the graph state."""
    verts = list(patch.vertex_ids)
    n = len(verts)
    choices = tuple(int(c) for c in choices)
    if len(choices) != n:
        raise ValueError("need one pair choice per site")
    if any(not 0 <= c < 3 for c in choices):
        raise ValueError("pair choice out of range")
    if 4 ** n > DESK_CAP:
        raise ValueError("frame search exceeds the cap")

    state = build_tricluster(patch, boundary=boundary)
    t = state.tensor()
    for i in range(n - 1, -1, -1):
        sel = np.zeros((2, 6), dtype=complex)
        sel[0, 2 * choices[i]] = 1.0
        sel[1, 2 * choices[i] + 1] = 1.0
        t = np.moveaxis(np.tensordot(sel, t, axes=([1], [i])), 0, i)
    vec = t.reshape(-1, order="F")
    weight = float(np.real(np.vdot(vec, vec)))
    if weight < 1e-12:
        raise ArithmeticError("selected pair pattern has zero weight")
    register = QuditState((2,) * n, vec).normalized()
    target = build_cluster_state(patch.with_dims(2))

    # overlap <target| frame |register> for all 4^n Pauli frames at once
    g = np.multiply.outer(register.tensor(), target.tensor().conj())
    for i in range(n):
        g = np.tensordot(g, _PAULI_STACK, axes=([0, n - i], [2, 1]))
    best = np.unravel_index(np.argmax(np.abs(g)), g.shape)
    fidelity = float(np.abs(g[best]))
    frame = "".join(_PAULI_LETTERS[p] for p in best)
    return ClusterReduction(choices, register, frame, fidelity, weight)
