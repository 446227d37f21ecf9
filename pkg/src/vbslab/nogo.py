"""Pair-marginal Hamiltonians on qubits and their product ground states.

For an n-qubit state, summing over every pair the projector onto the
kernel of that pair's reduced density matrix gives a two-body
frustration-free Hamiltonian with the state at energy zero, and its zero
space is contained in the zero space of every two-body frustration-free
qubit Hamiltonian annihilating the same state.

The machinery here exhibits the obstruction to qubit resource states:
that minimal zero space always holds a state that is a product of
single-qubit factors, possibly up to one two-qubit factor inherited from
a rank-2 pair encoding, so a genuinely entangled qubit state is never
the unique ground state of any two-body frustration-free Hamiltonian.
Searches are numeric: a Bloch-grid seeded alternating single-site
optimization, and a recursive reduction that encodes rank-2 pairs into
single qubits, solves the core, and lifts back.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import subspace_angles

from .hamiltonian import LocalHamiltonian, zero_space
from .qstate import (
    RANK_TOL,
    QuditState,
    basis_state,
    random_state,
    range_projector,
    reduced_density,
)


def w_state(n: int = 3) -> QuditState:
    """Equal superposition of the weight-1 bitstrings."""
    amps = np.zeros(2**n, dtype=complex)
    for k in range(n):
        amps += basis_state([2] * n, [1 if i == k else 0 for i in range(n)]).amps
    return QuditState([2] * n, amps / np.sqrt(n))


def ghz_state(n: int = 3) -> QuditState:
    amps = basis_state([2] * n, [0] * n).amps + basis_state([2] * n, [1] * n).amps
    return QuditState([2] * n, amps / np.sqrt(2.0))


def _check_qubits(psi: QuditState, lo: int = 2, hi: int = 6) -> int:
    n = psi.num_sites
    if any(d != 2 for d in psi.dims):
        raise ValueError("qubit sites required")
    if not lo <= n <= hi:
        raise ValueError(f"supported between {lo} and {hi} qubits")
    return n


def pair_kernel_projector(psi: QuditState, pair, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projector onto the kernel of the pair's reduced density matrix."""
    rho = reduced_density(psi.normalized(), tuple(pair))
    ran, _ = range_projector(rho, rank_tol)
    return np.eye(ran.shape[0]) - ran


def build_h_psi(psi: QuditState, rank_tol: float = RANK_TOL) -> LocalHamiltonian:
    """Sum of pair-kernel projectors over all qubit pairs.

    Two-body, frustration-free, with the input state at energy zero; the
    zero space is minimal among such Hamiltonians annihilating the input.
    Pairs whose marginal has full rank contribute nothing and are kept as
    explicit zero terms so the term list always covers every pair.
    """
    n = _check_qubits(psi)
    state = psi.normalized()
    terms = []
    for i, j in combinations(range(n), 2):
        terms.append(((i, j), pair_kernel_projector(state, (i, j), rank_tol)))
    return LocalHamiltonian(psi.dims, terms)


# ---------------------------------------------------------------------------
# ground spaces


@dataclass(frozen=True)
class GroundSpace:
    """Orthonormal basis (columns) of the zero-energy eigenspace."""

    dims: tuple
    basis: np.ndarray
    threshold: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def contains(self, state: QuditState, tol: float = 1e-7) -> bool:
        v = state.normalized().amps
        return float(np.linalg.norm(v - self.basis @ (self.basis.conj().T @ v))) <= tol


def ground_space(ham: LocalHamiltonian, tol: float = 1e-9) -> GroundSpace:
    return GroundSpace(ham.dims, zero_space(ham, tol), tol)


def span_of(states) -> np.ndarray:
    """Orthonormalized column span of the given states."""
    m = np.column_stack([s.normalized().amps for s in states])
    q, r = np.linalg.qr(m)
    keep = np.abs(np.diag(r)) > 1e-12
    return q[:, keep]


def max_principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between two column spans, in radians."""
    if a.shape[1] != b.shape[1]:
        return float(np.pi / 2)
    if a.shape[1] == 0:
        return 0.0
    return float(np.max(subspace_angles(a, b)))


# ---------------------------------------------------------------------------
# entanglement certification


def is_genuinely_entangled(psi: QuditState, sv_tol: float = 1e-6) -> bool:
    """Schmidt rank at least 2 across every bipartition."""
    n = psi.num_sites
    t = psi.normalized().tensor()
    for r in range(1, n):
        # every cut is determined by the side holding qubit 0
        for sub in combinations(range(1, n), r - 1):
            left = (0,) + sub
            rest = tuple(a for a in range(n) if a not in left)
            mat = np.transpose(t, left + rest).reshape(2 ** len(left), -1)
            if np.linalg.svd(mat, compute_uv=False)[1] <= sv_tol:
                return False
    return True


def random_genuinely_entangled(n: int, rng: np.random.Generator, max_tries: int = 50) -> QuditState:
    for _ in range(max_tries):
        psi = random_state([2] * n, rng)
        if is_genuinely_entangled(psi):
            return psi
    raise RuntimeError("failed to draw a genuinely entangled state")


# ---------------------------------------------------------------------------
# SLOCC moves


def _check_invertible(ops) -> list:
    mats = [np.asarray(op, dtype=complex) for op in ops]
    for m in mats:
        if m.shape != (2, 2) or abs(np.linalg.det(m)) <= 1e-10:
            raise ValueError("every local operator must be an invertible 2x2")
    return mats


def slocc_transform(psi: QuditState, ops) -> QuditState:
    """Apply one invertible operator per qubit and renormalize."""
    mats = _check_invertible(ops)
    if len(mats) != psi.num_sites:
        raise ValueError("one operator per qubit required")
    t = psi.tensor()
    for k, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [k])), 0, k)
    return QuditState(psi.dims, t.reshape(-1, order="F")).normalized()


def slocc_conjugated_hamiltonian(ham: LocalHamiltonian, ops) -> LocalHamiltonian:
    """Conjugate every pair term by the corresponding local operators.

    A state is zero-energy for the result iff its image under the local
    operators is zero-energy for the original.
    """
    mats = _check_invertible(ops)
    if len(mats) != len(ham.dims):
        raise ValueError("one operator per qubit required")
    terms = []
    for (i, j), mat in ham.terms:
        g = np.kron(mats[i], mats[j])
        terms.append(((i, j), g.conj().T @ mat @ g))
    return LocalHamiltonian(ham.dims, terms)


# ---------------------------------------------------------------------------
# rank-2 pair encoding


@dataclass(eq=False)
class Rank2Reduction:
    """Encoding of a rank-2 pair into one qubit.

    The isometry's columns are a basis of the pair marginal's support,
    rows big-endian over the (sorted) pair.  The reduced problem lives on
    one qubit fewer, with the encoded qubit at the first pair position.
    """

    pair: tuple
    isometry: np.ndarray
    state: QuditState
    hamiltonian: LocalHamiltonian


def _conjugate_term(sites, mat, i, j, v):
    """Pull one term through the pair encoding V on (i, j), i < j.

    Returns (sites, matrix) in original site labels, with the encoded
    qubit written as i.  Supports touching neither pair site pass through.
    """
    vr = v.reshape(2, 2, 2)
    if len(sites) == 1:
        (s,) = sites
        if s == i:
            return (i,), np.einsum("xja,xy,yjb->ab", vr.conj(), mat, vr)
        if s == j:
            return (i,), np.einsum("jxa,xy,jyb->ab", vr.conj(), mat, vr)
        return sites, mat
    if set(sites) == {i, j}:
        if sites == (j, i):
            mat = mat.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        return (i,), v.conj().T @ mat @ v
    m = mat.reshape(2, 2, 2, 2)
    if i in sites:
        if sites[0] == i:
            k, out = sites[1], np.einsum("xja,xcyd,yjb->acbd", vr.conj(), m, vr)
        else:
            k, out = sites[0], np.einsum("xja,cxdy,yjb->acbd", vr.conj(), m, vr)
        return (i, k), out.reshape(4, 4)
    if j in sites:
        if sites[0] == j:
            k, out = sites[1], np.einsum("jxa,xcyd,jyb->acbd", vr.conj(), m, vr)
        else:
            k, out = sites[0], np.einsum("jxa,cxdy,jyb->acbd", vr.conj(), m, vr)
        return (i, k), out.reshape(4, 4)
    return sites, mat


def _conjugate_hamiltonian(ham: LocalHamiltonian, i, j, v) -> LocalHamiltonian:
    """V-conjugated Hamiltonian on n-1 qubits; slot j disappears."""
    remap = {q: (q if q < j else q - 1) for q in range(len(ham.dims))}
    terms = []
    for sites, mat in ham.terms:
        new_sites, new_mat = _conjugate_term(tuple(sites), mat, i, j, v)
        if np.max(np.abs(new_mat)) < 1e-14:
            continue
        if len(new_sites) == 1:
            terms.append(((remap[new_sites[0]],), new_mat))
        else:
            a, b = remap[new_sites[0]], remap[new_sites[1]]
            if a > b:
                new_mat = new_mat.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
                a, b = b, a
            terms.append(((a, b), new_mat))
    return LocalHamiltonian([2] * (len(ham.dims) - 1), terms)


def _contract_pair(psi: QuditState, i, j, v) -> QuditState:
    t = psi.normalized().tensor()
    t = np.moveaxis(t, (i, j), (0, 1))
    t = np.tensordot(v.conj().reshape(2, 2, 2), t, axes=([0, 1], [0, 1]))
    t = np.moveaxis(t, 0, i)
    return QuditState([2] * (psi.num_sites - 1), t.reshape(-1, order="F")).normalized()


def rank2_pair_reduce(
    psi: QuditState, pair, rank_tol: float = RANK_TOL, ham: LocalHamiltonian = None
) -> Rank2Reduction:
    """Encode a rank-2 pair as a single qubit and pull the problem back.

    Errors if the pair marginal's rank is not exactly 2.  The contracted
    state is genuinely entangled iff the input was, and the conjugated
    Hamiltonian's zero-energy states are exactly the encodings of the
    original's.
    """
    _check_qubits(psi, lo=3)
    i, j = sorted(int(p) for p in pair)
    rho = reduced_density(psi.normalized(), (i, j))
    vals, vecs = np.linalg.eigh(rho.mat)
    if int(np.sum(vals > rank_tol)) != 2:
        raise ValueError("pair marginal is not rank 2")
    v = vecs[:, np.argsort(vals)[::-1][:2]]
    if ham is None:
        ham = build_h_psi(psi, rank_tol)
    phi = _contract_pair(psi, i, j, v)
    return Rank2Reduction((i, j), v, phi, _conjugate_hamiltonian(ham, i, j, v))


# ---------------------------------------------------------------------------
# product ground-state search


@dataclass(eq=False)
class ProductSearchResult:
    """Outcome of a product ground-state search.

    factors lists (sites, vector) pieces whose tensor product is the
    state; every piece is a single qubit unless a rank-2 encoding lifted
    an entangled two-qubit factor.
    """

    found: bool
    state: QuditState
    factors: tuple
    energy: float
    strategy: str
    iterations: int
    diagnostics: str = None


def _bloch_grid() -> list:
    """Twelve icosahedral Bloch directions as qubit states."""
    phi = (1 + np.sqrt(5.0)) / 2
    dirs = []
    for a in (1.0, -1.0):
        for b in (phi, -phi):
            dirs += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    out = []
    for x, y, z in dirs:
        r = np.sqrt(x * x + y * y + z * z)
        theta = np.arccos(np.clip(z / r, -1, 1))
        az = np.arctan2(y, x)
        out.append(np.array([np.cos(theta / 2), np.exp(1j * az) * np.sin(theta / 2)]))
    return out


def _site_matrix(terms, factors, k) -> np.ndarray:
    """Effective single-site Hamiltonian at k, other factors frozen."""
    m = np.zeros((2, 2), dtype=complex)
    for sites, mat in terms:
        if len(sites) == 1:
            if sites[0] == k:
                m += mat
            continue
        i, j = sites
        if k == i:
            w = factors[j]
            m += np.einsum("acbd,c,d->ab", mat.reshape(2, 2, 2, 2), w, w.conj())
        elif k == j:
            w = factors[i]
            m += np.einsum("cadb,c,d->ab", mat.reshape(2, 2, 2, 2), w, w.conj())
    return m


def _product_energy(terms, factors) -> float:
    e = 0.0
    for sites, mat in terms:
        if len(sites) == 1:
            w = factors[sites[0]]
        else:
            w = np.kron(factors[sites[0]], factors[sites[1]])
        e += float(np.real(w.conj() @ mat @ w))
    return e


def _descend(terms, n, factors, max_updates, stop_at):
    """Alternating exact single-site minimization; monotone in energy."""
    energy = _product_energy(terms, factors)
    updates = 0
    while updates < max_updates:
        prev = energy
        for k in range(n):
            vals, vecs = np.linalg.eigh(_site_matrix(terms, factors, k))
            factors[k] = vecs[:, 0]
            updates += 1
        energy = _product_energy(terms, factors)
        if energy <= stop_at or prev - energy < 1e-13:
            break
    return factors, energy, updates


def _grid_polish(ham, budget, energy_tol, rng):
    n = len(ham.dims)
    grid = _bloch_grid()
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    best_energy, best_factors = np.inf, [plus.copy() for _ in range(n)]
    used = 0
    seed_id = 0
    while used < budget:
        if seed_id == 0:
            factors = [plus.copy() for _ in range(n)]
        elif seed_id <= len(grid):
            factors = [grid[seed_id - 1].copy() for _ in range(n)]
        else:
            factors = [grid[rng.integers(len(grid))].copy() for _ in range(n)]
        seed_id += 1
        factors, energy, upd = _descend(ham.terms, n, factors, budget - used, energy_tol)
        used += upd
        if energy < best_energy:
            best_energy, best_factors = energy, factors
        if best_energy <= energy_tol:
            break
    return best_energy, best_factors, used


def _product_candidates(v: np.ndarray) -> list:
    """Product vectors in the span of the encoding's columns.

    The 2x2 matricization determinant is a quadratic form along the span,
    so its roots enumerate every product direction.
    """
    d0 = np.linalg.det(v[:, 0].reshape(2, 2))
    d1 = np.linalg.det(v[:, 1].reshape(2, 2))
    mix = np.linalg.det((v[:, 0] + v[:, 1]).reshape(2, 2)) - d0 - d1
    if max(abs(d0), abs(d1), abs(mix)) < 1e-13:
        combos = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)]
    else:
        combos = [(t, 1.0) for t in np.atleast_1d(np.roots([d0, mix, d1]))]
        if abs(d0) < 1e-13:
            combos.append((1.0, 0.0))
    out = []
    for a, b in combos:
        w = a * v[:, 0] + b * v[:, 1]
        nrm = np.linalg.norm(w)
        if nrm < 1e-12:
            continue
        # double roots land slightly off; rank-1 truncation repairs them and
        # the caller's energy check is the real gate
        u, s, vh = np.linalg.svd((w / nrm).reshape(2, 2))
        if s[1] <= 1e-3:
            out.append((u[:, 0], vh[0]))
    return out


def _assemble(n, factors) -> QuditState:
    t = np.ones([2] * n, dtype=complex)
    for sites, vec in factors:
        shape = [1] * n
        for s in sites:
            shape[s] = 2
        t = t * np.asarray(vec).reshape(shape)
    return QuditState([2] * n, t.reshape(-1, order="F")).normalized()


def _two_qubit_core_factors(ham, energy_tol):
    """Exact product vector in a two-qubit zero space, when one exists.

    Any two-dimensional subspace of two qubits contains a product vector
    (the matricization determinant is a quadratic with a complex root),
    so this never fails on a zero space of dimension 2 or more.
    """
    z = zero_space(ham)
    if z.shape[1] == 0:
        return None
    z = z[[0, 2, 1, 3], :]  # little-endian amplitudes -> big-endian rows
    if z.shape[1] == 1:
        u, s, vh = np.linalg.svd(z[:, 0].reshape(2, 2))
        cands = [(u[:, 0], vh[0])] if s[1] <= 1e-8 else []
    else:
        pairs = combinations(range(z.shape[1]), 2)
        cands = [c for a, b in pairs for c in _product_candidates(z[:, [a, b]])]
    for w1, w2 in cands:
        pieces = [((0,), w1), ((1,), w2)]
        if ham.expectation(_assemble(2, pieces)) <= energy_tol:
            return pieces
    return None


def _lift(pieces, level_ham, i, j, v, energy_tol):
    """Lift core factors through one encoding, preferring a product split
    of the pair whenever one keeps the energy at zero."""
    lifted = []
    encoded = None
    for sites, vec in pieces:
        new_sites = tuple(q if q < j else q + 1 for q in sites)
        if i in new_sites:
            if len(sites) > 1:
                return None
            encoded = vec
            continue
        lifted.append((new_sites, vec))
    for w1, w2 in _product_candidates(v):
        trial = lifted + [((i,), w1), ((j,), w2)]
        if level_ham.expectation(_assemble(len(level_ham.dims), trial)) <= energy_tol:
            return trial
    return lifted + [((i, j), v @ encoded)]


def find_product_ground_state(
    ham: LocalHamiltonian,
    strategy: str = "grid_polish",
    budget: int = 10_000,
    energy_tol: float = 1e-7,
    rng: np.random.Generator = None,
) -> ProductSearchResult:
    """Search the zero space for a product state.

    grid_polish seeds every qubit on a 12-point Bloch grid and alternates
    exact single-site minimizations within the update budget.
    rank2_reduction encodes rank-2 pair terms into single qubits until
    none remain, solves the core by grid_polish, then lifts, splitting
    each pair back into single-qubit factors whenever a product vector in
    the encoded span keeps the energy at zero.  Failure returns a
    NOT_FOUND result with diagnostics rather than raising.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = len(ham.dims)
    if strategy == "grid_polish":
        energy, factors, used = _grid_polish(ham, budget, energy_tol, rng)
        pieces = tuple(((k,), f) for k, f in enumerate(factors))
        if energy <= energy_tol:
            return ProductSearchResult(
                True, _assemble(n, pieces), pieces, energy, strategy, used
            )
        return ProductSearchResult(
            False, None, pieces, energy, strategy, used,
            f"budget exhausted: best product energy {energy:.3e}",
        )
    if strategy != "rank2_reduction":
        raise ValueError(f"unknown strategy {strategy!r}")

    # peel rank-2 pair terms; each kernel is the marginal support to encode
    stack = []
    current = ham
    while len(current.dims) > 2:
        pick = None
        for sites, mat in current.terms:
            if len(sites) == 2 and np.linalg.matrix_rank(mat, tol=1e-10) == 2:
                pick = (tuple(sites), mat)
                break
        if pick is None:
            break
        (i, j), mat = pick
        if i > j:
            mat = mat.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
            i, j = j, i
        vals, vecs = np.linalg.eigh(mat)
        v = vecs[:, np.argsort(vals)[:2]]
        stack.append((current, (i, j), v))
        current = _conjugate_hamiltonian(current, i, j, v)

    if len(current.dims) == 2:
        pieces = _two_qubit_core_factors(current, energy_tol)
        used = 0
        if pieces is None:
            return ProductSearchResult(
                False, None, (), np.inf, strategy, 0,
                "two-qubit core has no product zero-energy vector",
            )
    else:
        energy, factors, used = _grid_polish(current, budget, energy_tol, rng)
        if energy > energy_tol:
            return ProductSearchResult(
                False, None, (), energy, strategy, used,
                f"reduced core search failed: best energy {energy:.3e}",
            )
        pieces = [((k,), f) for k, f in enumerate(factors)]
    for level_ham, (i, j), v in reversed(stack):
        pieces = _lift(pieces, level_ham, i, j, v, energy_tol)
        if pieces is None:
            return ProductSearchResult(
                False, None, (), energy, strategy, used,
                "nested entangled pair factors admit no lift",
            )

    state = _assemble(n, pieces)
    energy = float(ham.expectation(state))
    if energy <= energy_tol:
        return ProductSearchResult(True, state, tuple(pieces), energy, strategy, used)
    return ProductSearchResult(
        False, None, tuple(pieces), energy, strategy, used,
        f"lifted state misses zero energy: {energy:.3e}",
    )
