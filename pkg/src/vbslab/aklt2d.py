"""Spin-3/2 valence-bond states on honeycomb patches and their reduction to
encoded cluster states.

Every bond carries a singlet; a site of degree d keeps the symmetric
(spin-d/2) subspace of its d virtual qubits, so interior sites are genuine
spin-3/2 particles and boundary sites shrink to spin-1 or spin-1/2.  Site
levels are ordered (all zeros, all ones, then the mixed symmetric states),
which puts the two states selected by the z outcome of the generalized
x/y/z measurement at levels 0 and 1.

The honeycomb is drawn in brick-wall coordinates (shared with the six-level
network module): integer cells, horizontal bonds east-west, vertical bonds
where x + y is even, sublattice A on even parity.  Virtual qubits are
labeled "site>neighbour", the qubit at `site` on the bond toward
`neighbour`; within a site they are ordered like patch.neighbors(site).

Measuring every site in the x/y/z POVM leaves an encoded cluster state on
the graph obtained by contracting same-outcome bonds (each connected group
is a domain, one logical qubit) and deleting even-multiplicity edges.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .graphs import SiteGraph
from .hamiltonian import symmetric_embedding
from .mps import SINGLET
from .pauli import PAULIS, PauliString
from .qstate import DESK_CAP, QuditState, apply_gate, measure
from .tricluster import brick_patch as _brick_patch

OUTCOMES = ("z", "x", "y")

_SQ2 = np.sqrt(2.0)
_BASIS_PAIR = {
    "z": (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)),
    "x": (np.array([1.0, 1.0], dtype=complex) / _SQ2, np.array([1.0, -1.0], dtype=complex) / _SQ2),
    "y": (np.array([1.0, 1j], dtype=complex) / _SQ2, np.array([1.0, -1j], dtype=complex) / _SQ2),
}
# sum over the three bases of the two extremal projectors = alpha_d * P_sym
_ALPHA = {1: 3.0, 2: 2.0, 3: 1.5}

# letters of the intra-domain pair stabilizers and of the two logicals
_STAB_LETTER = {"z": "Z", "x": "X", "y": "Y"}
_FLIP_LETTER = {"z": "X", "x": "Z", "y": "Z"}


# ---------------------------------------------------------------------------
# geometry and site spaces


def honeycomb_patch(cells) -> SiteGraph:
    """Honeycomb patch on the given brick-wall cells (nominal site dim 4)."""
    return _brick_patch(cells).with_dims(4)


def honeycomb_rect(rows: int, cols: int) -> SiteGraph:
    """Rectangular honeycomb window: `rows` brick rows of `cols` sites."""
    if rows < 1 or cols < 1:
        raise ValueError("need at least one row and one column")
    return honeycomb_patch([(x, y) for y in range(rows) for x in range(cols)])


def k33_patch() -> SiteGraph:
    """Complete bipartite 3+3 patch: six sites, all genuine spin-3/2."""
    a = ["a0", "a1", "a2"]
    b = ["b0", "b1", "b2"]
    sub = {**{v: "A" for v in a}, **{v: "B" for v in b}}
    return SiteGraph(a + b, [(x, y) for x in a for y in b], dims=4, sublattice=sub)


def cube_patch() -> SiteGraph:
    """Cube-graph patch: eight sites, 3-regular and bipartite, no boundary."""
    verts = ["".join(map(str, bits)) for bits in product((0, 1), repeat=3)]
    edges = [
        (u, v)
        for u in verts
        for v in verts
        if u < v and sum(a != b for a, b in zip(u, v)) == 1
    ]
    sub = {v: "A" if v.count("1") % 2 == 0 else "B" for v in verts}
    return SiteGraph(verts, edges, dims=4, sublattice=sub)


def site_projector(degree: int) -> np.ndarray:
    """Rows map the degree+1 site levels to symmetric virtual-qubit states.

    Row order: all zeros, all ones, then 1..degree-1 ones; for degree 3 the
    mixed rows have coefficient 1/sqrt(3) on each weight-1 (resp. weight-2)
    pattern.
    """
    if not 1 <= degree <= 3:
        raise ValueError("site degree must be 1, 2 or 3")
    emb = symmetric_embedding(degree)
    order = [0, degree] + list(range(1, degree))
    return emb.T[order].astype(complex)


def virtual_qubits(patch: SiteGraph, v: str) -> list[str]:
    """Labels of the virtual qubits at site v, in neighbor order."""
    return [f"{v}>{u}" for u in patch.neighbors(v)]


def _extremal(vec: np.ndarray, degree: int) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for _ in range(degree):
        out = np.kron(out, vec)
    return out


def _lam(patch: SiteGraph, v: str) -> int:
    return 1 if patch.sublattice.get(v, "A") == "A" else -1


# ---------------------------------------------------------------------------
# the state and the measurement


def build_aklt2d(patch: SiteGraph) -> QuditState:
    """Contract singlets and site projectors exactly; sites keep patch order.

    Site dimensions in the output are degree+1 (the declared patch dims are
    ignored); boundary sites are spin-1 or spin-1/2.
    """
    verts = list(patch.vertex_ids)
    if len(verts) > 10:
        raise ValueError("patch exceeds the 10-site cap")
    degs = {v: patch.degree(v) for v in verts}
    for v, d in degs.items():
        if d == 0:
            raise ValueError(f"site {v} has no bonds")
        if d > 3:
            raise ValueError(f"site {v} has degree {d} > 3")
    dims = tuple(degs[v] + 1 for v in verts)
    if int(np.prod(dims)) > DESK_CAP:
        raise ValueError("patch dimension exceeds the cap")

    t = np.ones((), dtype=complex)
    legs = []
    for u, v in patch.edges:
        t = np.multiply.outer(t, SINGLET.reshape(2, 2, order="F"))
        legs.extend([("leg", u, v), ("leg", v, u)])

    for v in verts:
        d = degs[v]
        w = site_projector(d).reshape((d + 1,) + (2,) * d)
        ax = [legs.index(("leg", v, u)) for u in patch.neighbors(v)]
        t = np.tensordot(w, t, axes=(list(range(1, d + 1)), ax))
        t = np.moveaxis(t, 0, -1)
        legs = [l for l in legs if not (l[0] == "leg" and l[1] == v)]
        legs.append(("phys", v))

    t = t.transpose([legs.index(("phys", v)) for v in verts])
    return QuditState(dims, t.reshape(-1, order="F")).normalized()


def povm_elements() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three rank-2 measurement operators F_z, F_x, F_y on the three
    virtual qubits of an interior site, prefactor sqrt(2/3)."""
    out = []
    for a in OUTCOMES:
        lo, hi = _BASIS_PAIR[a]
        vl, vh = _extremal(lo, 3), _extremal(hi, 3)
        out.append(np.sqrt(2.0 / 3.0) * (np.outer(vl, vl.conj()) + np.outer(vh, vh.conj())))
    return tuple(out)


@lru_cache(maxsize=None)
def site_kraus(degree: int) -> dict:
    """The x/y/z measurement compressed to the site levels.

    Boundary prefactors 1/sqrt(alpha_degree) keep it a complete three-outcome
    measurement on every site dimension.
    """
    p = site_projector(degree)
    out = {}
    for a in OUTCOMES:
        lo, hi = _BASIS_PAIR[a]
        vl, vh = _extremal(lo, degree), _extremal(hi, degree)
        f = (np.outer(vl, vl.conj()) + np.outer(vh, vh.conj())) / np.sqrt(_ALPHA[degree])
        out[a] = p @ f @ p.conj().T
    return out


@dataclass(eq=False)
class PovmOutcomeField:
    """One x/y/z outcome per site, tagged with how it was produced."""

    outcomes: dict
    provenance: str
    probability: float | None = None

    def __post_init__(self):
        if self.provenance not in ("exact-Born", "iid-model"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        for v, a in self.outcomes.items():
            if a not in OUTCOMES:
                raise ValueError(f"unknown outcome {a!r} at site {v}")


def _as_outcomes(patch: SiteGraph, outcomes) -> dict:
    got = outcomes.outcomes if isinstance(outcomes, PovmOutcomeField) else dict(outcomes)
    for v in patch.vertex_ids:
        if got.get(v) not in OUTCOMES:
            raise ValueError(f"site {v} has no x/y/z outcome")
    return got


def sample_outcomes(
    patch: SiteGraph,
    rng: np.random.Generator | None = None,
    model: str = "exact",
    probs=None,
    state: QuditState | None = None,
):
    """Draw one outcome field; returns (field, post state or None).

    "exact" measures site by site on the actual state (Born rule, with
    collapse), so the field carries its exact probability and the
    post-measurement state.  "iid" assigns outcomes independently with the
    given triple (default uniform); it is an approximation to the Born
    distribution and returns no state.
    """
    if rng is None:
        rng = np.random.default_rng()
    if model == "exact":
        if probs is not None:
            raise ValueError("probability triple only applies to the iid model")
        psi = build_aklt2d(patch) if state is None else state.normalized()
        outcomes = {}
        total = 1.0
        for i, v in enumerate(patch.vertex_ids):
            kraus = site_kraus(patch.degree(v))
            idx, p, psi = measure(psi, i, [kraus[a] for a in OUTCOMES], rng=rng)
            outcomes[v] = OUTCOMES[idx]
            total *= p
        return PovmOutcomeField(outcomes, "exact-Born", total), psi
    if model == "iid":
        if state is not None:
            raise ValueError("the iid model does not use a state")
        p = np.full(3, 1.0 / 3.0) if probs is None else np.asarray(probs, dtype=float)
        if p.shape != (3,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a z/x/y triple summing to 1")
        cum = np.cumsum(p)
        draws = rng.random(patch.num_vertices)
        picks = np.searchsorted(cum, draws, side="right").clip(max=2)
        outcomes = {v: OUTCOMES[k] for v, k in zip(patch.vertex_ids, picks)}
        return PovmOutcomeField(outcomes, "iid-model", None), None
    raise ValueError(f"unknown outcome model {model!r}")


def enumerate_branches(patch: SiteGraph, state: QuditState | None = None, min_probability: float = 1e-12):
    """Yield every reachable outcome field as (field, post state), exactly.

    Branch probabilities are accumulated down the measurement tree; branches
    at or below the floor are pruned.
    """
    psi0 = (build_aklt2d(patch) if state is None else state).normalized()
    verts = list(patch.vertex_ids)

    def rec(i, psi, prob, acc):
        if i == len(verts):
            yield PovmOutcomeField(dict(acc), "exact-Born", prob), psi
            return
        kraus = site_kraus(patch.degree(verts[i]))
        for a in OUTCOMES:
            nxt = apply_gate(psi, i, kraus[a])
            p = float(np.real(np.vdot(nxt.amps, nxt.amps)))
            if prob * p <= min_probability:
                continue
            acc[verts[i]] = a
            yield from rec(i + 1, nxt.normalized(), prob * p, acc)
            del acc[verts[i]]

    yield from rec(0, psi0, 1.0, {})


# ---------------------------------------------------------------------------
# domains and the encoded cluster graph


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _reduce_graph(patch: SiteGraph, outcomes: dict):
    """R1 contraction and mod-2 edge reduction, graph part only."""
    parent = {v: v for v in patch.vertex_ids}
    for u, v in patch.edges:
        if outcomes[u] == outcomes[v]:
            ru, rv = _find(parent, u), _find(parent, v)
            if ru != rv:
                parent[ru] = rv
    groups = {}
    for v in patch.vertex_ids:
        groups.setdefault(_find(parent, v), []).append(v)
    domains = sorted(groups.values(), key=lambda g: patch.index(g[0]))
    domains = tuple(tuple(g) for g in domains)
    dom_of = {v: i for i, g in enumerate(domains) for v in g}
    counts = {}
    for u, v in patch.edges:
        i, j = dom_of[u], dom_of[v]
        if i != j:
            key = (min(i, j), max(i, j))
            counts[key] = counts.get(key, 0) + 1
    reduced = tuple(sorted(e for e, m in counts.items() if m % 2 == 1))
    return domains, dom_of, reduced, counts


@dataclass(eq=False)
class DomainGraph:
    """Same-outcome domains, their mod-2 reduced adjacency, and one encoded
    qubit (logical X/Z pair plus pair stabilizers) per domain.

    twists[c] is the parity of boundary bonds whose singlet letter cannot
    match the domain's flip letter (z|y, x|y and y|x interfaces).  Each such
    bond deposits one phase-type factor on the domain, so an odd count turns
    the flip operator in the domain's cluster generator from Xbar into
    Ybar = i Xbar Zbar.
    """

    domains: tuple
    outcomes: tuple
    edges: tuple
    multiplicities: dict
    qubits: tuple
    logical_x: tuple
    logical_z: tuple
    generators: tuple
    twists: tuple

    def domain_of(self, site: str) -> int:
        for i, g in enumerate(self.domains):
            if site in g:
                return i
        raise ValueError(f"site {site} is in no domain")

    def neighbors(self, i: int) -> list[int]:
        out = [j for a, j in self.edges if a == i]
        out += [a for a, j in self.edges if j == i]
        return sorted(out)

    def cluster_generator(self, c: int) -> PauliString:
        """Encoded-cluster generator of domain c up to an overall sign."""
        g = self.logical_x[c]
        if self.twists[c]:
            prod = g * self.logical_z[c]
            g = PauliString(prod.factors, phase=1j * prod.phase)
        for nb in self.neighbors(c):
            g = g * self.logical_z[nb]
        assert g.phase in (1, -1)
        return g

    def quotient_graph(self) -> SiteGraph:
        names = [f"d{i}" for i in range(len(self.domains))]
        edges = [(names[i], names[j]) for i, j in self.edges]
        return SiteGraph(names, edges, dims=2)

    def quotient_outcomes(self) -> dict:
        return {f"d{i}": a for i, a in enumerate(self.outcomes)}


_FRAME_MISMATCH = {("z", "y"), ("x", "y"), ("y", "x")}


def form_domains(patch: SiteGraph, outcomes) -> DomainGraph:
    """Apply the contraction and mod-2 rules and assign the per-domain
    logical operators; the lambda signs come from the sublattice tags."""
    got = _as_outcomes(patch, outcomes)
    domains, dom_of, reduced, counts = _reduce_graph(patch, got)
    dom_outcomes = tuple(got[g[0]] for g in domains)
    twists = [0] * len(domains)
    for u, v in patch.edges:
        if dom_of[u] != dom_of[v]:
            if (got[u], got[v]) in _FRAME_MISMATCH:
                twists[dom_of[u]] ^= 1
            if (got[v], got[u]) in _FRAME_MISMATCH:
                twists[dom_of[v]] ^= 1
    qubits, lx, lz, gens = [], [], [], []
    for g, a in zip(domains, dom_outcomes):
        qs = [q for v in g for q in virtual_qubits(patch, v)]
        if not qs:
            # isolated vertex of an abstract graph (e.g. a quotient after the
            # mod-2 rule): nothing is encoded there
            qubits.append(())
            lx.append(PauliString({}))
            lz.append(PauliString({}))
            gens.append(())
            continue
        site_of = {q: v for v in g for q in virtual_qubits(patch, v)}
        stab, flip = _STAB_LETTER[a], _FLIP_LETTER[a]
        x_bar = PauliString({q: flip for q in qs})
        z_bar = PauliString({qs[0]: stab}, phase=_lam(patch, site_of[qs[0]]))
        pair_gens = tuple(
            PauliString(
                {p: stab, q: stab},
                phase=_lam(patch, site_of[p]) * _lam(patch, site_of[q]),
            )
            for p, q in zip(qs, qs[1:])
        )
        assert not x_bar.commutes_with(z_bar)
        assert all(x_bar.commutes_with(s) and z_bar.commutes_with(s) for s in pair_gens)
        qubits.append(tuple(qs))
        lx.append(x_bar)
        lz.append(z_bar)
        gens.append(pair_gens)
    return DomainGraph(
        domains,
        dom_outcomes,
        reduced,
        counts,
        tuple(qubits),
        tuple(lx),
        tuple(lz),
        tuple(gens),
        tuple(twists),
    )


def apply_virtual_string(state: QuditState, patch: SiteGraph, pauli: PauliString) -> QuditState:
    """Apply a Pauli string over virtual-qubit labels to the site-level state.

    Each site factor is compressed through the site's symmetric projector,
    which is exact whenever the factor maps the site's support back into the
    symmetric subspace; the stabilizers and logicals used here permute the
    two extremal states of the measured basis, so they qualify.
    """
    by_site = {}
    for label, letter in pauli.factors.items():
        v, sep, u = label.partition(">")
        if not sep or v not in patch.vertex_ids or u not in patch.neighbors(v):
            raise ValueError(f"label {label!r} is not a virtual qubit of the patch")
        by_site.setdefault(v, {})[u] = letter
    out = state
    for v, letters in by_site.items():
        op = np.ones((1, 1), dtype=complex)
        for u in patch.neighbors(v):
            op = np.kron(op, PAULIS[letters.get(u, "I")])
        p = site_projector(patch.degree(v))
        out = apply_gate(out, patch.index(v), p @ op @ p.conj().T)
    if pauli.phase != 1:
        out = QuditState(out.dims, pauli.phase * out.amps)
    return out


def _stabilizes(state: QuditState, patch: SiteGraph, pauli: PauliString, tol: float) -> bool:
    moved = apply_virtual_string(state, patch, pauli)
    return float(np.linalg.norm(moved.amps - state.amps)) <= tol


def cluster_generator_signs(patch: SiteGraph, outcomes, post_state: QuditState, tol: float = 1e-8):
    """Per domain c, the sign s with s * X_c * prod(Z_neighbors) stabilizing
    the post-measurement state; None where no sign resolves."""
    if post_state is None:
        raise ValueError("the exact post-measurement state is required")
    dg = form_domains(patch, outcomes)
    psi = post_state.normalized()
    signs = []
    for c in range(len(dg.domains)):
        g = dg.cluster_generator(c)
        moved = apply_virtual_string(psi, patch, g)
        for cand in (1, -1):
            if float(np.linalg.norm(moved.amps - cand * psi.amps)) <= tol:
                signs.append(cand)
                break
        else:
            signs.append(None)
    return tuple(signs)


def verify_encoded_cluster(patch: SiteGraph, outcomes, post_state: QuditState, tol: float = 1e-8) -> bool:
    """True iff every intra-domain pair stabilizer fixes the state and every
    domain's cluster generator fixes it up to a resolvable sign."""
    if post_state is None:
        raise ValueError("the exact post-measurement state is required")
    dg = form_domains(patch, outcomes)
    psi = post_state.normalized()
    for gens in dg.generators:
        if not all(_stabilizes(psi, patch, g, tol) for g in gens):
            return False
    return all(s is not None for s in cluster_generator_signs(patch, outcomes, psi, tol))


def measure_out_site(
    state: QuditState,
    patch: SiteGraph,
    outcomes,
    site: str,
    forced: int | None = None,
    rng: np.random.Generator | None = None,
):
    """Measure a redundant domain site in the basis (|lo>+-|hi>)/sqrt2 of its
    outcome's extremal pair and drop it from the state.

    Returns (sign, probability, reduced state); the remaining sites keep
    patch order.  A sign of -1 flips the domain's logical Z, which the
    caller corrects on a kept site.
    """
    got = _as_outcomes(patch, outcomes)
    i = patch.index(site)
    d = patch.degree(site)
    p = site_projector(d)
    lo, hi = _BASIS_PAIR[got[site]]
    u0 = p @ _extremal(lo, d)
    u1 = p @ _extremal(hi, d)
    t = state.normalized().tensor()
    branches = []
    for sign in (1, -1):
        bra = ((u0 + sign * u1) / _SQ2).conj()
        vec = np.tensordot(bra, t, axes=([0], [i]))
        branches.append(vec)
    probs = np.array([float(np.real(np.vdot(v, v))) for v in branches])
    if forced is not None:
        pick = 0 if forced == 1 else 1
        if probs[pick] <= 1e-12:
            raise ValueError("forced outcome has zero probability")
    else:
        if rng is None:
            rng = np.random.default_rng()
        pick = int(rng.choice(2, p=probs / probs.sum()))
    dims = tuple(dd for k, dd in enumerate(state.dims) if k != i)
    out = QuditState(dims, branches[pick].reshape(-1, order="F")).normalized()
    return (1 if pick == 0 else -1), float(probs[pick]), out


# ---------------------------------------------------------------------------
# percolation statistics


def _domain_components(patch: SiteGraph, outcomes: dict, xmin: float, xmax: float):
    domains, _, reduced, _ = _reduce_graph(patch, outcomes)
    parent = list(range(len(domains)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in reduced:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    comp_sites = {}
    comp_left = {}
    comp_right = {}
    for i, g in enumerate(domains):
        r = find(i)
        comp_sites[r] = comp_sites.get(r, 0) + len(g)
        xs = [patch.coords[v][0] for v in g]
        if min(xs) <= xmin:
            comp_left.setdefault(r, set()).add(i)
        if max(xs) >= xmax:
            comp_right.setdefault(r, set()).add(i)
    largest = max(comp_sites.values()) / patch.num_vertices
    spanning = False
    for r in comp_sites:
        left = comp_left.get(r, set())
        right = comp_right.get(r, set())
        # a spanning path needs two distinct logical qubits at the ends
        if left and right and not (len(left) == 1 and left == right):
            spanning = True
            break
    degree = {}
    for i, j in reduced:
        degree[i] = degree.get(i, 0) + 1
        degree[j] = degree.get(j, 0) + 1
    hist = {}
    for i in range(len(domains)):
        k = degree.get(i, 0)
        hist[k] = hist.get(k, 0) + 1
    return largest, spanning, hist


def percolation_stats(
    width: int,
    height: int,
    samples: int,
    seed: int,
    model: str = "iid",
    probs=None,
) -> dict:
    """Monte Carlo connectivity statistics of the encoded cluster graphs.

    Spanning means one component of the reduced domain graph holds two
    distinct domains touching the left and right patch boundaries.  Samples
    use independent child seeds of `seed`, so the report is byte-stable.
    The iid outcome model is an approximation to the exact Born
    distribution and is labeled as such in the output.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    patch = honeycomb_rect(height, width)
    xs = [patch.coords[v][0] for v in patch.vertex_ids]
    xmin, xmax = min(xs), max(xs)
    state = None
    if model == "exact":
        state = build_aklt2d(patch)
    elif model != "iid":
        raise ValueError(f"unknown outcome model {model!r}")
    triple = np.full(3, 1.0 / 3.0) if probs is None else np.asarray(probs, dtype=float)

    fractions = np.zeros(samples)
    spans = np.zeros(samples, dtype=bool)
    hist_total = {}
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(samples)):
        rng = np.random.default_rng(child)
        field, _ = sample_outcomes(
            patch,
            rng,
            model=model,
            probs=None if model == "exact" else triple,
            state=state,
        )
        largest, spanning, hist = _domain_components(patch, field.outcomes, xmin, xmax)
        fractions[k] = largest
        spans[k] = spanning
        for deg, cnt in hist.items():
            hist_total[deg] = hist_total.get(deg, 0) + cnt

    mean = float(fractions.mean())
    sdev = float(fractions.std(ddof=1)) if samples > 1 else 0.0
    half = 1.96 * sdev / np.sqrt(samples)
    return {
        "model": "iid-model" if model == "iid" else "exact-Born",
        "approximate_model": model == "iid",
        "width": int(width),
        "height": int(height),
        "sites": patch.num_vertices,
        "samples": int(samples),
        "seed": int(seed),
        "outcome_probabilities": (
            {a: float(p) for a, p in zip(OUTCOMES, triple)} if model == "iid" else None
        ),
        "mean_largest_fraction": mean,
        "ci95_largest_fraction": [mean - half, mean + half],
        "spanning_probability": float(spans.mean()),
        "degree_histogram": {str(k): int(v) for k, v in sorted(hist_total.items())},
    }
