"""Dense statevector engine for chains of mixed-dimension qudits.

Conventions, fixed package-wide:

* A state over sites (0, 1, ..., n-1) with dimensions (d0, d1, ...) is a
  flat complex vector indexed little-endian: site 0 varies fastest, so the
  flat index of |i_0, i_1, ..., i_{n-1}> is i_0 + d0*(i_1 + d1*(i_2 + ...)).
* Every multi-site matrix (gate, Hamiltonian term, reduced density matrix)
  is indexed big-endian over its own listed site order: the first listed
  site is the most significant digit of the row/column index.  This is the
  convention in which two-qubit gates are usually printed, e.g. CNOT below
  acts with the first listed site as control.
* ``dense_ket`` converts between the two pictures: it returns the
  amplitudes re-indexed big-endian over a chosen site order.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

# Hard cap on total Hilbert-space size; dense desk scale only.
DESK_CAP = 2_000_000

TOL_BUILD = 1e-12
TOL_COMPARE = 1e-10
RANK_TOL = 1e-8


# ---------------------------------------------------------------------------
# states


class QuditState:
    """Flat complex amplitude vector over an ordered list of qudit sites."""

    __slots__ = ("dims", "amps")

    def __init__(self, dims: Sequence[int], amps):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError("every site dimension must be an integer >= 2")
        total = math.prod(dims)
        if total > DESK_CAP:
            raise ValueError(
                f"total dimension {total} exceeds desk-scale cap {DESK_CAP}"
            )
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if amps.size != total:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {total}"
            )
        self.dims = dims
        self.amps = amps

    @property
    def num_sites(self) -> int:
        return len(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "QuditState":
        n = self.norm()
        if n < TOL_BUILD:
            raise ValueError("cannot normalize a zero state")
        return QuditState(self.dims, self.amps / n)

    def tensor(self) -> np.ndarray:
        """Amplitudes as an ndarray with one axis per site (site 0 first)."""
        return self.amps.reshape(self.dims, order="F")

    def copy(self) -> "QuditState":
        return QuditState(self.dims, self.amps.copy())

    def __repr__(self) -> str:
        return f"QuditState(dims={self.dims}, norm={self.norm():.6f})"


def basis_state(dims: Sequence[int], labels: Sequence[int]) -> QuditState:
    """Computational basis state |labels[0], labels[1], ...>."""
    dims = tuple(dims)
    labels = tuple(int(x) for x in labels)
    if len(labels) != len(dims):
        raise ValueError("one label per site required")
    for x, d in zip(labels, dims):
        if not 0 <= x < d:
            raise ValueError(f"label {x} out of range for dimension {d}")
    amps = np.zeros(math.prod(dims), dtype=complex)
    idx = 0
    stride = 1
    for x, d in zip(labels, dims):
        idx += x * stride
        stride *= d
    amps[idx] = 1.0
    return QuditState(dims, amps)


def ket(bits: str | Sequence[int]) -> QuditState:
    """Qubit basis state; ket("01") has site 0 in |0> and site 1 in |1>."""
    labels = [int(b) for b in bits]
    return basis_state((2,) * len(labels), labels)


def product_state(vectors: Iterable[np.ndarray]) -> QuditState:
    """Product state from per-site vectors (site 0 first), normalized."""
    vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    if not vecs:
        raise ValueError("need at least one site vector")
    amps = vecs[0]
    for v in vecs[1:]:
        # little-endian: later sites are slower axes
        amps = np.kron(v, amps)
    return QuditState(tuple(v.size for v in vecs), amps).normalized()


def dense_ket(state: QuditState, site_order: Sequence[int] | None = None) -> np.ndarray:
    """Amplitudes re-indexed big-endian over ``site_order`` (default 0..n-1).

    The result is the vector on which big-endian matrices (gates built by
    ``np.kron`` in listed order, reduced density matrices, Hamiltonian
    embeddings) act directly.
    """
    n = state.num_sites
    order = tuple(range(n)) if site_order is None else tuple(site_order)
    if sorted(order) != list(range(n)):
        raise ValueError("site_order must be a permutation of all sites")
    return np.ascontiguousarray(state.tensor().transpose(order)).reshape(-1)


def state_from_dense(
    dims: Sequence[int], vec: np.ndarray, site_order: Sequence[int] | None = None
) -> QuditState:
    """Inverse of ``dense_ket``: build a state from a big-endian vector."""
    dims = tuple(dims)
    n = len(dims)
    order = tuple(range(n)) if site_order is None else tuple(site_order)
    if sorted(order) != list(range(n)):
        raise ValueError("site_order must be a permutation of all sites")
    shaped = np.asarray(vec, dtype=complex).reshape([dims[s] for s in order])
    t = shaped.transpose(np.argsort(order))
    return QuditState(dims, t.reshape(-1, order="F"))


# ---------------------------------------------------------------------------
# gates


_SQ2 = math.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / _SQ2

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

# first listed site is the control
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / _SQ2
MINUS = np.array([1, -1], dtype=complex) / _SQ2


def xrot(theta: float) -> np.ndarray:
    """exp(-i theta X / 2)."""
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * X


def yrot(theta: float) -> np.ndarray:
    """exp(-i theta Y / 2)."""
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * Y


def zrot(theta: float) -> np.ndarray:
    """exp(-i theta Z / 2)."""
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


def is_unitary(mat: np.ndarray, tol: float = TOL_BUILD) -> bool:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    return np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))) <= tol


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    """Big-endian tensor product: first factor is most significant."""
    out = None
    for m in mats:
        out = np.asarray(m, dtype=complex) if out is None else np.kron(out, m)
    if out is None:
        raise ValueError("need at least one factor")
    return out


# ---------------------------------------------------------------------------
# operations


def _as_sites(sites) -> tuple[int, ...]:
    if isinstance(sites, (int, np.integer)):
        return (int(sites),)
    return tuple(int(s) for s in sites)


def apply_gate(state: QuditState, sites, gate: np.ndarray) -> QuditState:
    """Apply a matrix on the listed sites (big-endian over the list order).

    The output is not renormalized: unitary gates preserve the norm, and
    non-unitary matrices (projectors, Kraus operators) are applied as-is so
    branch probabilities stay readable from the output norm.
    """
    sites = _as_sites(sites)
    n = state.num_sites
    if len(set(sites)) != len(sites):
        raise ValueError("repeated site index")
    for s in sites:
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range")
    gdims = tuple(state.dims[s] for s in sites)
    dg = math.prod(gdims)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (dg, dg):
        raise ValueError(f"gate shape {gate.shape} does not match sites {sites}")
    t = state.tensor()
    gt = gate.reshape(gdims + gdims)
    k = len(sites)
    out = np.tensordot(gt, t, axes=(list(range(k, 2 * k)), list(sites)))
    # tensordot leaves axes ordered (sites..., remaining sites ascending)
    rest = [a for a in range(n) if a not in sites]
    out = out.transpose(np.argsort(list(sites) + rest))
    return QuditState(state.dims, out.reshape(-1, order="F"))


def measure(
    state: QuditState,
    site,
    ops: Sequence[np.ndarray],
    rng: np.random.Generator | None = None,
    forced: int | None = None,
):
    """Generalized measurement on one site (or a tuple of sites).

    ``ops`` are Kraus operators K_k on the measured sites; completeness
    sum_k K_k^dag K_k = identity is enforced to 1e-10.  The outcome is drawn
    from ``rng`` by the Born rule, or fixed with ``forced`` (an index into
    ``ops``) for deterministic branch enumeration.

    Returns (outcome index, probability, renormalized post state).
    """
    sites = _as_sites(site)
    dg = math.prod(state.dims[s] for s in sites)
    mats = [np.asarray(op, dtype=complex) for op in ops]
    comp = sum(m.conj().T @ m for m in mats)
    if np.max(np.abs(comp - np.eye(dg))) > 1e-10:
        raise ValueError("incomplete measurement: sum K^dag K != identity")
    branches = [apply_gate(state, sites, m) for m in mats]
    probs = np.array([b.norm() ** 2 for b in branches])
    if forced is not None:
        outcome = int(forced)
        if not 0 <= outcome < len(mats):
            raise ValueError("forced outcome out of range")
        if probs[outcome] <= 1e-12:
            raise ValueError("forced outcome has zero probability")
    else:
        if rng is None:
            rng = np.random.default_rng()
        outcome = int(rng.choice(len(mats), p=probs / probs.sum()))
    post = branches[outcome].normalized()
    return outcome, float(probs[outcome]), post


def projective_ops(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Rank-1 projectors |v><v| for an orthonormal basis, for ``measure``."""
    return [np.outer(v, np.conj(v)) for v in vectors]


class DensityMatrix:
    """Hermitian, positive semidefinite, trace-1 matrix over listed sites."""

    __slots__ = ("dims", "mat")

    def __init__(self, dims: Sequence[int], mat: np.ndarray, validate: bool = True):
        dims = tuple(int(d) for d in dims)
        mat = np.asarray(mat, dtype=complex)
        total = math.prod(dims)
        if mat.shape != (total, total):
            raise ValueError("matrix shape does not match dims")
        if validate:
            if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
                raise ValueError("matrix is not Hermitian")
            if abs(np.trace(mat).real - 1.0) > 1e-10:
                raise ValueError("trace is not 1")
            if np.linalg.eigvalsh(mat)[0] < -1e-10:
                raise ValueError("matrix has a negative eigenvalue")
        self.dims = dims
        self.mat = mat

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


def reduced_density(state: QuditState, keep) -> DensityMatrix:
    """Partial trace onto ``keep``; indexed big-endian over the keep order.

    The keep order matters: reduced_density(psi, (a, b)) and (b, a) are the
    same operator written in swapped tensor slots.
    """
    keep = _as_sites(keep)
    n = state.num_sites
    if not keep:
        raise ValueError("keep set must be nonempty")
    if len(set(keep)) != len(keep):
        raise ValueError("repeated site in keep set")
    for s in keep:
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range")
    rest = [a for a in range(n) if a not in keep]
    t = state.tensor().transpose(list(keep) + rest)
    dk = math.prod(state.dims[s] for s in keep)
    m = t.reshape(dk, -1)
    rho = m @ m.conj().T
    return DensityMatrix(tuple(state.dims[s] for s in keep), rho)


def range_projector(rho, rank_tol: float = RANK_TOL):
    """Projector onto the eigenspaces of rho with eigenvalue > rank_tol.

    Accepts a DensityMatrix or any Hermitian matrix. Returns (projector, rank).
    """
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    vals, vecs = np.linalg.eigh(mat)
    cols = vecs[:, vals > rank_tol]
    return cols @ cols.conj().T, cols.shape[1]


def overlap(a: QuditState, b: QuditState) -> complex:
    """<a|b> of the normalized states."""
    if a.dims != b.dims:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(a.normalized().amps, b.normalized().amps))


def equal_up_to_global_phase(a: QuditState, b: QuditState, tol: float = TOL_COMPARE) -> bool:
    return abs(overlap(a, b)) >= 1.0 - tol


def expectation(state: QuditState, sites, op: np.ndarray) -> complex:
    """<psi|O|psi> for an operator on the listed sites."""
    psi = state.normalized()
    return complex(np.vdot(psi.amps, apply_gate(psi, sites, op).amps))


# ---------------------------------------------------------------------------
# randomness helpers (deterministic given an explicit generator)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dims: Sequence[int], rng: np.random.Generator) -> QuditState:
    total = math.prod(dims)
    amps = rng.normal(size=total) + 1j * rng.normal(size=total)
    return QuditState(dims, amps).normalized()
