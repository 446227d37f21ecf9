"""Mixed spin-3/2 / spin-1/2 valence-bond chains, their reduction to encoded
1D cluster states, and the pendant-pair operations that stitch two chains
into one 2D resource.

A chain has N spin-3/2 backbone sites, each using its three virtual-qubit
slots for backbone bonds plus pendant spin-1/2's: interior sites carry one
pendant, the two end sites carry an extra one (b0 and b_{N+1}).  Every bond
is a singlet and every backbone site is projected onto its symmetric
subspace, so the ground state is the valence-bond state of the chain graph
and the Hamiltonian is a sum of total-spin projectors (spin 3 on backbone
pairs, spin 2 on backbone-pendant pairs).

Backbone sites use the shared four-level order (all zeros, all ones, then
the mixed symmetric states); `level_to_spin_basis` is the permutation onto
the |3/2, m> ladder, m descending, which the projector terms are built in.

Measuring the x/y/z POVM on the backbone only leaves an encoded cluster
state on the chain of same-outcome domains; the unmeasured pendants join
the domain of the site they hang from, with their qubit value locked by the
singlet (the logical basis states repeat the domain pattern on every
pendant, up to the sublattice flip).  Two reduced chains are coupled
through a pendant of each: flip both pendants in their outcome bases, for a
logical CZ also apply the controlled-Z diagonal in those bases, then
measure both pendants out.  The outcome-dependent correction is a logical
Pauli on the two coupled domains, found by search and reported.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .aklt2d import (
    OUTCOMES,
    DomainGraph,
    PovmOutcomeField,
    _BASIS_PAIR,
    _FLIP_LETTER,
    _extremal,
    _lam,
    build_aklt2d,
    cluster_generator_signs,
    form_domains,
    measure_out_site,
    site_kraus,
    site_projector,
    verify_encoded_cluster,
)
from .cluster import build_cluster_state
from .graphs import SiteGraph
from .hamiltonian import LocalHamiltonian, total_spin_projector
from .qstate import CZ, PAULIS, QuditState, apply_gate, measure, overlap, product_state

# ---------------------------------------------------------------------------
# geometry and the chain state


@dataclass(frozen=True)
class QuasichainSpec:
    """Chain layout: n_backbone spin-3/2 sites a1..aN, pendants b0..b_{N+1}.

    Pendant b_i hangs from a_i for 1 <= i <= N; b0 and b_{N+1} fill the free
    slots of the two end sites, so every backbone site has degree exactly 3.
    A prefix keeps site names disjoint when several chains coexist.
    """

    n_backbone: int
    prefix: str = ""

    def __post_init__(self):
        if not 1 <= self.n_backbone <= 4:
            raise ValueError("chain length must be 1..4 at desk scale")

    @property
    def backbone(self) -> tuple:
        return tuple(f"{self.prefix}a{i}" for i in range(1, self.n_backbone + 1))

    @property
    def pendants(self) -> tuple:
        return tuple(f"{self.prefix}b{i}" for i in range(self.n_backbone + 2))

    def anchor(self, pendant: str) -> str:
        """The backbone site a pendant hangs from."""
        i = int(pendant[len(self.prefix) + 1 :])
        n = self.n_backbone
        return self.backbone[min(max(i, 1), n) - 1]

    def patch(self) -> SiteGraph:
        n = self.n_backbone
        back = self.backbone
        edges = [(back[i], back[i + 1]) for i in range(n - 1)]
        sub = {v: "A" if i % 2 == 0 else "B" for i, v in enumerate(back)}
        for p in self.pendants:
            a = self.anchor(p)
            edges.append((a, p))
            sub[p] = "B" if sub[a] == "A" else "A"
        dims = {**{v: 4 for v in back}, **{p: 2 for p in self.pendants}}
        g = SiteGraph(list(back) + list(self.pendants), edges, dims=dims, sublattice=sub)
        assert all(g.degree(v) == 3 for v in back)
        return g


def build_quasichain(spec: QuasichainSpec) -> QuditState:
    """Valence-bond ground state; sites in patch order, backbone first."""
    return build_aklt2d(spec.patch())


def level_to_spin_basis() -> np.ndarray:
    """Permutation from the package four-level order onto |3/2, m>, m
    descending; level k holds m = 3/2, -3/2, 1/2, -1/2 for k = 0..3."""
    r = np.zeros((4, 4), dtype=complex)
    for col, ones in enumerate((0, 3, 1, 2)):
        r[ones, col] = 1.0
    return r


def quasichain_hamiltonian(spec: QuasichainSpec, coupling: float = 1.0) -> LocalHamiltonian:
    """Sum of total-spin projectors: spin 3 across backbone bonds, spin 2
    across every backbone-pendant bond.  Annihilates the built state."""
    patch = spec.patch()
    r = level_to_spin_basis()
    p3 = total_spin_projector(1.5, 1.5, 3.0)
    p2 = total_spin_projector(1.5, 0.5, 2.0)
    rr = np.kron(r, r)
    r2 = np.kron(r, np.eye(2))
    back = set(spec.backbone)
    terms = []
    for u, v in patch.edges:
        if u in back and v in back:
            terms.append(((patch.index(u), patch.index(v)), coupling * rr.conj().T @ p3 @ rr))
        else:
            a, p = (u, v) if u in back else (v, u)
            terms.append(((patch.index(a), patch.index(p)), coupling * r2.conj().T @ p2 @ r2))
    return LocalHamiltonian(patch.dims, terms)


# ---------------------------------------------------------------------------
# reduction to an encoded cluster state


@dataclass(eq=False)
class ReducedChain:
    """Post-measurement chain plus everything needed to read it as an
    encoded cluster state: the full outcome field (pendants inherit their
    anchor's outcome), the domain structure, and the per-domain generator
    signs."""

    spec: QuasichainSpec
    patch: SiteGraph
    outcomes: PovmOutcomeField
    state: QuditState
    domains: DomainGraph
    signs: tuple
    probability: float
    verified: bool


def _finish_reduction(spec, patch, got_backbone, prob, psi) -> ReducedChain:
    got = dict(got_backbone)
    for p in spec.pendants:
        got[p] = got[spec.anchor(p)]
    field = PovmOutcomeField(got, "exact-Born", prob)
    dg = form_domains(patch, got)
    ok = verify_encoded_cluster(patch, field, psi)
    signs = cluster_generator_signs(patch, field, psi)
    return ReducedChain(spec, patch, field, psi, dg, signs, prob, ok)


def reduce_to_cluster(
    spec: QuasichainSpec,
    state: QuditState | None = None,
    outcomes=None,
    rng: np.random.Generator | None = None,
) -> ReducedChain:
    """Measure the x/y/z POVM on every backbone site (pendants untouched).

    Outcomes may be forced with a backbone-site -> outcome mapping;
    otherwise they are sampled by the Born rule.
    """
    patch = spec.patch()
    psi = build_quasichain(spec) if state is None else state.normalized()
    kraus = site_kraus(3)
    ops = [kraus[a] for a in OUTCOMES]
    got = {}
    prob = 1.0
    for v in spec.backbone:
        if outcomes is None:
            idx, p, psi = measure(psi, patch.index(v), ops, rng=rng)
        else:
            idx, p, psi = measure(psi, patch.index(v), ops, forced=OUTCOMES.index(outcomes[v]))
        got[v] = OUTCOMES[idx]
        prob *= p
    return _finish_reduction(spec, patch, got, prob, psi)


def enumerate_reductions(spec: QuasichainSpec, min_probability: float = 1e-12):
    """Yield a ReducedChain for every reachable backbone outcome field."""
    patch = spec.patch()
    base = build_quasichain(spec)
    kraus = site_kraus(3)

    def rec(k, psi, prob, got):
        if k == spec.n_backbone:
            yield _finish_reduction(spec, patch, got, prob, psi)
            return
        v = spec.backbone[k]
        for a in OUTCOMES:
            branch = apply_gate(psi, patch.index(v), kraus[a])
            p = float(np.real(np.vdot(branch.amps, branch.amps)))
            if prob * p <= min_probability:
                continue
            got[v] = a
            yield from rec(k + 1, branch.normalized(), prob * p, got)
            del got[v]

    yield from rec(0, base, 1.0, {})


# ---------------------------------------------------------------------------
# logical codewords and the cluster-state oracle


def codeword_state(patch: SiteGraph, dg: DomainGraph, bits, skip=()) -> QuditState:
    """The product state carrying logical value bits[c] on every domain c.

    Within a domain all qubits hold the same extremal state of the outcome
    basis, flipped on sublattice-B sites; a degree-d site contributes the
    symmetric compression of its d copies.  Sites in `skip` are left out.
    """
    skip = set(skip)
    vecs = []
    for v in patch.vertex_ids:
        if v in skip:
            continue
        c = dg.domain_of(v)
        bit = bits[c] if _lam(patch, v) == 1 else 1 - bits[c]
        e = _BASIS_PAIR[dg.outcomes[c]][bit]
        d = patch.degree(v)
        vecs.append(e if d == 1 else site_projector(d) @ _extremal(e, d))
    return product_state(vecs)


def logical_amplitudes(state: QuditState, patch: SiteGraph, dg: DomainGraph, skip=()) -> np.ndarray:
    """<codeword_b|state> over all 2^D logical bitstrings, bit c = domain c.

    Norm 1 certifies that the state lies entirely in the codespace.
    """
    n = len(dg.domains)
    out = np.zeros(2**n, dtype=complex)
    for b in range(2**n):
        bits = [(b >> c) & 1 for c in range(n)]
        out[b] = overlap(codeword_state(patch, dg, bits, skip), state)
    return out


def _apply_logical_diag(vec: np.ndarray, c: int, diag, n: int) -> np.ndarray:
    shape = [1] * n
    shape[c] = 2
    t = vec.reshape([2] * n, order="F") * np.asarray(diag).reshape(shape)
    return t.reshape(-1, order="F")


def _apply_logical_pauli(vec: np.ndarray, letters: dict, n: int) -> np.ndarray:
    out = vec.reshape([2] * n, order="F")
    for c, letter in letters.items():
        if letter == "I":
            continue
        out = np.moveaxis(np.tensordot(PAULIS[letter], out, axes=([1], [c])), 0, c)
    return out.reshape(-1, order="F")


def expected_logical(dg: DomainGraph, signs, extra_edges=(), z_powers=None) -> np.ndarray:
    """Logical state predicted by the stabilizer bookkeeping: the cluster
    state of the domain graph (plus any extra edges), a phase gate on every
    twisted domain, Z for every negative generator sign and every entry of
    z_powers."""
    if any(s is None for s in signs):
        raise ValueError("unresolved generator sign")
    names = [f"d{i}" for i in range(len(dg.domains))]
    edges = [(names[i], names[j]) for i, j in dg.edges]
    edges += [(names[i], names[j]) for i, j in extra_edges]
    vec = build_cluster_state(SiteGraph(names, edges, dims=2)).amps
    n = len(names)
    for c in range(n):
        d = np.ones(2, dtype=complex)
        if dg.twists[c]:
            d = d * np.array([1.0, 1j])
        if signs[c] == -1:
            d = d * np.array([1.0, -1.0])
        if z_powers and z_powers.get(c, 0) % 2:
            d = d * np.array([1.0, -1.0])
        if d[1] != 1.0:
            vec = _apply_logical_diag(vec, c, d, n)
    return vec


@dataclass(eq=False)
class SimplifiedChain:
    """Encoded chain after measuring out every redundant site: one spin-3/2
    left per logical qubit, with the collected sign flips folded into the
    generator signs."""

    kept: tuple
    state: QuditState
    signs: tuple
    probability: float


def simplify_chain(reduced: ReducedChain, forced=None, rng=None) -> SimplifiedChain:
    """Measure out the pendants and all but one backbone site per domain.

    Each removal is a +-basis measurement of the site's extremal pair; a
    minus outcome is a logical Z on its domain, absorbed here by flipping
    that domain's generator sign.
    """
    back = set(reduced.spec.backbone)
    keep, drop = [], []
    for members in reduced.domains.domains:
        rep = next(v for v in members if v in back)
        keep.append(rep)
        drop.extend(v for v in members if v != rep)
    flips, prob, state, _ = measure_out_many(
        reduced.state, reduced.patch, reduced.outcomes, drop, forced=forced, rng=rng
    )
    signs = []
    for c, members in enumerate(reduced.domains.domains):
        s = reduced.signs[c]
        for v in members:
            s *= flips.get(v, 1)
        signs.append(s)
    return SimplifiedChain(tuple(keep), state, tuple(signs), prob)


# ---------------------------------------------------------------------------
# coupling two chains through a pendant pair


def _union_patch(p1: SiteGraph, p2: SiteGraph) -> SiteGraph:
    if set(p1.vertex_ids) & set(p2.vertex_ids):
        raise ValueError("chains share site names; give the specs distinct prefixes")
    dims = {v: p1.dim(v) for v in p1.vertex_ids}
    dims.update({v: p2.dim(v) for v in p2.vertex_ids})
    return SiteGraph(
        p1.vertex_ids + p2.vertex_ids,
        list(p1.edges) + list(p2.edges),
        dims=dims,
        sublattice={**p1.sublattice, **p2.sublattice},
    )


def measure_out_many(state, patch, outcomes, sites, forced=None, rng=None):
    """Measure several sites out, highest patch index first so the earlier
    axes stay aligned with the patch.  Returns (signs, joint probability,
    reduced state, kept site order)."""
    order = sorted(sites, key=patch.index, reverse=True)
    signs = {}
    prob = 1.0
    for v in order:
        f = None if forced is None else forced[v]
        s, p, state = measure_out_site(state, patch, outcomes, v, forced=f, rng=rng)
        signs[v] = s
        prob *= p
    kept = tuple(v for v in patch.vertex_ids if v not in signs)
    return signs, prob, state, kept


@dataclass(eq=False)
class CoupledChains:
    """Two reduced chains after a pendant-pair coupling, with the pair
    measured out.  `coupled` holds the two domain indices (in the union
    domain order, first chain's domains first) whose logical qubits the
    operation acted on."""

    patch: SiteGraph
    outcomes: dict
    sites: tuple
    state: QuditState
    mode: str
    pair: tuple
    signs: tuple
    probability: float
    coupled: tuple


def couple_chains(
    chain1: ReducedChain,
    chain2: ReducedChain,
    pair,
    mode: str = "logical_cz",
    forced=None,
    rng: np.random.Generator | None = None,
) -> CoupledChains:
    """Couple two reduced chains through one pendant of each.

    Both pendants are flipped in their outcome bases; in logical_cz mode the
    controlled-Z diagonal in those bases is applied across the pair; then
    both pendants are measured out in their (e0 +- e1)/sqrt2 bases.  A
    minus sign on either measurement leaves a logical Z on that pendant's
    domain, recovered by coupling_frame.
    """
    if mode not in ("identity", "logical_cz"):
        raise ValueError(f"unknown coupling mode {mode!r}")
    b1, b2 = pair
    if b1 not in chain1.spec.pendants or b2 not in chain2.spec.pendants:
        raise ValueError(f"({b1}, {b2}) is not a pendant pair of the two chains")
    patch = _union_patch(chain1.patch, chain2.patch)
    got = {**chain1.outcomes.outcomes, **chain2.outcomes.outcomes}
    state = QuditState(
        chain1.state.dims + chain2.state.dims,
        np.kron(chain2.state.amps, chain1.state.amps),
    )
    i1, i2 = patch.index(b1), patch.index(b2)
    for b, i in ((b1, i1), (b2, i2)):
        state = apply_gate(state, i, PAULIS[_FLIP_LETTER[got[b]]])
    if mode == "logical_cz":
        w = np.kron(
            np.column_stack(_BASIS_PAIR[got[b1]]),
            np.column_stack(_BASIS_PAIR[got[b2]]),
        )
        state = apply_gate(state, (i1, i2), w @ CZ @ w.conj().T)
    fmap = None if forced is None else {b1: forced[0], b2: forced[1]}
    signs, prob, state, kept = measure_out_many(state, patch, got, [b1, b2], forced=fmap, rng=rng)
    dg = form_domains(patch, got)
    return CoupledChains(
        patch=patch,
        outcomes=got,
        sites=kept,
        state=state,
        mode=mode,
        pair=(b1, b2),
        signs=(signs[b1], signs[b2]),
        probability=prob,
        coupled=(dg.domain_of(b1), dg.domain_of(b2)),
    )


def coupling_frame(coupled: CoupledChains, chain1: ReducedChain, chain2: ReducedChain) -> dict:
    """Find the local correction on the two coupled logical qubits.

    Compares the coupled state's logical amplitudes with the ideal action
    (nothing, or a CZ edge between the coupled domains) applied to the
    pre-coupling cluster-state prediction, searching all single-qubit Pauli
    pairs.  Returns the letters, the achieved overlap, and the codespace
    weight of the coupled state (both should be 1 up to tolerance).
    """
    dg = form_domains(coupled.patch, coupled.outcomes)
    phi = logical_amplitudes(coupled.state, coupled.patch, dg, skip=coupled.pair)
    signs = tuple(chain1.signs) + tuple(chain2.signs)
    extra = [coupled.coupled] if coupled.mode == "logical_cz" else []
    base = expected_logical(dg, signs, extra_edges=extra)
    u, v = coupled.coupled
    best = None
    for pu, pv in product("IXYZ", repeat=2):
        cand = _apply_logical_pauli(base, {u: pu, v: pv}, len(dg.domains))
        ov = abs(np.vdot(cand, phi))
        if best is None or ov > best[0]:
            best = (ov, pu, pv)
    return {
        "letters": {u: best[1], v: best[2]},
        "overlap": float(best[0]),
        "codespace_weight": float(np.linalg.norm(phi)),
    }


# ---------------------------------------------------------------------------
# merging pendant pairs into spin-3/2's


def merge_unitary() -> np.ndarray:
    """Relabeling of a qubit pair as one four-level site: |m1 m2> maps to
    the level holding m = m1 + 2 m2, in the package level order.  Columns
    are the pair basis with the first qubit most significant."""
    u = np.zeros((4, 4), dtype=complex)
    # (m1, m2) = (up, up), (up, down), (down, up), (down, down)
    for col, m in enumerate((1.5, -0.5, 0.5, -1.5)):
        ones = int(round(1.5 - m))
        level = {0: 0, 3: 1, 1: 2, 2: 3}[ones]
        u[level, col] = 1.0
    return u


@dataclass(frozen=True)
class MergeMap:
    """The pendant-pair relabeling; checks it is a phase-permutation."""

    unitary: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.unitary)
        if u.shape != (4, 4) or np.max(np.abs(u.conj().T @ u - np.eye(4))) > 1e-12:
            raise ValueError("merge map must be a 4x4 unitary")
        if np.count_nonzero(np.abs(u) > 1e-12) != 4:
            raise ValueError("merge map must relabel basis states")

    @staticmethod
    def standard() -> "MergeMap":
        return MergeMap(merge_unitary())

    def conjugate(self, op: np.ndarray) -> np.ndarray:
        """The four-level operation matching a pair operation."""
        return self.unitary @ np.asarray(op, dtype=complex) @ self.unitary.conj().T

    def merge_state(self, state: QuditState, i1: int, i2: int) -> QuditState:
        """Contract qubit axes i1 < i2 into one four-level axis at i1."""
        if not (i1 < i2 and state.dims[i1] == 2 and state.dims[i2] == 2):
            raise ValueError("merge needs two qubit axes, first index lower")
        t = np.moveaxis(state.tensor(), (i1, i2), (0, 1))
        t = np.tensordot(self.unitary.reshape(4, 2, 2), t, axes=([1, 2], [0, 1]))
        t = np.moveaxis(t, 0, i1)
        dims = [d for k, d in enumerate(state.dims) if k != i2]
        dims[i1] = 4
        return QuditState(dims, t.reshape(-1, order="F"))


def _merge_term(mat: np.ndarray, ds: tuple, k: int, member: int, u3: np.ndarray) -> np.ndarray:
    """Rewrite a term whose k-th support site is one member of a merged
    pair; the other member rides along as the spectator index of u3."""
    n = len(ds)
    t = mat.reshape(ds + ds)
    t = np.moveaxis(t, (k, n + k), (0, 1))
    if member == 1:
        w = np.einsum("apq,brq,pr...->ab...", u3, u3.conj(), t)
    else:
        w = np.einsum("aqp,bqr,pr...->ab...", u3, u3.conj(), t)
    w = np.moveaxis(w, (0, 1), (k, n + k))
    new_ds = list(ds)
    new_ds[k] = 4
    d = int(np.prod(new_ds))
    return w.reshape(d, d)


@dataclass(eq=False)
class MergedMagnet:
    """Two chains with pendant pairs relabeled as spin-3/2's: site list,
    ground state, and the conjugated Hamiltonian."""

    sites: tuple
    dims: tuple
    state: QuditState
    hamiltonian: LocalHamiltonian
    pairs: tuple


def merged_system(spec1: QuasichainSpec, spec2: QuasichainSpec, pairs) -> MergedMagnet:
    """Join two chains and relabel each (pendant, pendant) pair in `pairs`
    (first chain's member first) as one four-level site named "p1~p2"."""
    p1, p2 = spec1.patch(), spec2.patch()
    union = _union_patch(p1, p2)
    for a, b in pairs:
        if a not in spec1.pendants or b not in spec2.pendants:
            raise ValueError(f"({a}, {b}) is not a pendant pair of the two chains")
    s1, s2 = build_quasichain(spec1), build_quasichain(spec2)
    state = QuditState(s1.dims + s2.dims, np.kron(s2.amps, s1.amps))

    merged_of = {}
    for a, b in pairs:
        merged_of[a] = (f"{a}~{b}", 1)
        merged_of[b] = (f"{a}~{b}", 2)
    sites = []
    for v in union.vertex_ids:
        if v not in merged_of:
            sites.append(v)
        elif merged_of[v][1] == 1:
            sites.append(merged_of[v][0])
    dims = tuple(4 if "~" in v else union.dim(v) for v in sites)
    new_index = {v: i for i, v in enumerate(sites)}

    u3 = merge_unitary().reshape(4, 2, 2)
    by_desc = sorted(pairs, key=lambda ab: union.index(ab[1]), reverse=True)
    mm = MergeMap.standard()
    for a, b in by_desc:
        state = mm.merge_state(state, union.index(a), union.index(b))

    h1 = quasichain_hamiltonian(spec1)
    h2 = quasichain_hamiltonian(spec2)
    off = len(p1.vertex_ids)
    terms = []
    for ham, shift, patch in ((h1, 0, p1), (h2, off, p2)):
        for sites_idx, mat in ham.terms:
            names = [patch.vertex_ids[s] for s in sites_idx]
            ds = tuple(patch.dims[s] for s in sites_idx)
            hit = [(k, v) for k, v in enumerate(names) if v in merged_of]
            if hit:
                (k, v), = hit
                mat = _merge_term(mat, ds, k, merged_of[v][1], u3)
                names[k] = merged_of[v][0]
            terms.append((tuple(new_index[v] for v in names), mat))
    ham = LocalHamiltonian(dims, terms)
    return MergedMagnet(tuple(sites), dims, state.normalized(), ham, tuple(pairs))


# ---------------------------------------------------------------------------
# demo report for the command line


def coupling_report(n: int, mode: str, seed: int, samples: int = 4) -> dict:
    """Sample couplings of two fresh chains and summarize the frames."""
    rng = np.random.default_rng(seed)
    runs = []
    for _ in range(samples):
        c1 = reduce_to_cluster(QuasichainSpec(n, "L"), rng=rng)
        c2 = reduce_to_cluster(QuasichainSpec(n, "R"), rng=rng)
        pair = (c1.spec.pendants[1], c2.spec.pendants[1])
        coup = couple_chains(c1, c2, pair, mode=mode, rng=rng)
        frame = coupling_frame(coup, c1, c2)
        runs.append(
            {
                "outcomes": dict(coup.outcomes),
                "measurement_signs": list(coup.signs),
                "coupled_domains": list(coup.coupled),
                "frame": {str(k): v for k, v in frame["letters"].items()},
                "overlap": frame["overlap"],
                "codespace_weight": frame["codespace_weight"],
                "verified": bool(c1.verified and c2.verified),
            }
        )
    return {
        "chain_length": n,
        "mode": mode,
        "seed": seed,
        "samples": samples,
        "runs": runs,
        "all_pass": all(r["overlap"] >= 1 - 1e-9 and r["verified"] for r in runs),
    }
