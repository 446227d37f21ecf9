"""Local Hamiltonians as lists of (support, matrix) terms, spin operators,
and small-system eigensolvers.

Term matrices follow the package convention: big-endian over the listed
support sites.  Dense embeddings and matvecs act on little-endian flat
amplitude vectors, the same layout as QuditState.amps, so eigenvectors are
directly comparable to states.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as sla

from .qstate import QuditState, apply_gate

# largest total dimension for dense matrix builds / dense diagonalization
DENSE_CAP = 4200


class LocalHamiltonian:
    def __init__(self, dims: Sequence[int], terms):
        self.dims = tuple(int(d) for d in dims)
        self.terms = []
        n = len(self.dims)
        for sites, mat in terms:
            sites = tuple(int(s) for s in sites)
            if len(set(sites)) != len(sites):
                raise ValueError("repeated site in term support")
            for s in sites:
                if not 0 <= s < n:
                    raise ValueError(f"term references missing site {s}")
            mat = np.asarray(mat, dtype=complex)
            d = math.prod(self.dims[s] for s in sites)
            if mat.shape != (d, d):
                raise ValueError("term matrix shape does not match its support")
            if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
                raise ValueError("term matrix is not Hermitian")
            self.terms.append((sites, mat))

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def apply(self, state: QuditState) -> QuditState:
        """H|psi>, not normalized."""
        out = np.zeros_like(state.amps)
        for sites, mat in self.terms:
            out += apply_gate(state, sites, mat).amps
        return QuditState(state.dims, out)

    def expectation(self, state: QuditState) -> float:
        psi = state.normalized()
        return float(np.real(np.vdot(psi.amps, self.apply(psi).amps)))

    def term_residuals(self, state: QuditState) -> list[float]:
        """Per term, || (h - min_eig(h)) |psi> ||; zero iff the state sits in
        every term's lowest eigenspace (frustration-freeness witness)."""
        psi = state.normalized()
        out = []
        for sites, mat in self.terms:
            e0 = float(np.linalg.eigvalsh(mat)[0])
            moved = apply_gate(psi, sites, mat)
            out.append(float(np.linalg.norm(moved.amps - e0 * psi.amps)))
        return out

    def dense(self) -> np.ndarray:
        """Full matrix on the little-endian flat basis (small systems only)."""
        total = self.total_dim
        if total > DENSE_CAP:
            raise ValueError(f"dense build refused above {DENSE_CAP} dimensions")
        out = np.zeros((total, total), dtype=complex)
        eye = np.eye(total, dtype=complex)
        # batch of all basis columns, little-endian site axes + batch axis
        t = eye.reshape(self.dims + (total,), order="F")
        nax = len(self.dims)
        for sites, mat in self.terms:
            gdims = tuple(self.dims[s] for s in sites)
            k = len(sites)
            gt = mat.reshape(gdims + gdims)
            moved = np.tensordot(gt, t, axes=(list(range(k, 2 * k)), list(sites)))
            rest = [a for a in range(nax + 1) if a not in sites]
            moved = moved.transpose(np.argsort(list(sites) + rest))
            out += moved.reshape((total, total), order="F")
        return out

    def linear_operator(self) -> sla.LinearOperator:
        total = self.total_dim

        def matvec(v):
            return self.apply(QuditState(self.dims, v)).amps

        return sla.LinearOperator((total, total), matvec=matvec, dtype=complex)

    def __add__(self, other: "LocalHamiltonian") -> "LocalHamiltonian":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return LocalHamiltonian(self.dims, self.terms + other.terms)

    def __repr__(self) -> str:
        return f"LocalHamiltonian(dims={self.dims}, {len(self.terms)} terms)"


def low_spectrum(ham: LocalHamiltonian, k: int = 2) -> np.ndarray:
    """The k lowest eigenvalues, ascending.

    Dense diagonalization below 1200 dimensions, Lanczos (deterministic
    start vector) above.
    """
    total = ham.total_dim
    if total <= 1200:
        return np.linalg.eigvalsh(ham.dense())[:k]
    v0 = np.full(total, 1.0 / math.sqrt(total))
    vals = sla.eigsh(
        ham.linear_operator(), k=k, which="SA", v0=v0, return_eigenvectors=False
    )
    return np.sort(vals)


def ground_state(ham: LocalHamiltonian) -> tuple[float, QuditState]:
    total = ham.total_dim
    if total <= 1200:
        vals, vecs = np.linalg.eigh(ham.dense())
        return float(vals[0]), QuditState(ham.dims, vecs[:, 0]).normalized()
    v0 = np.full(total, 1.0 / math.sqrt(total))
    vals, vecs = sla.eigsh(ham.linear_operator(), k=1, which="SA", v0=v0)
    return float(vals[0]), QuditState(ham.dims, vecs[:, 0]).normalized()


def zero_space(ham: LocalHamiltonian, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns, little-endian) of the eigenvalue-0 space."""
    vals, vecs = np.linalg.eigh(ham.dense())
    return vecs[:, np.abs(vals) <= tol]


# ---------------------------------------------------------------------------
# spin operators


def spin_matrices(s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) for spin s, basis ordered m = s, s-1, ..., -s."""
    d = int(round(2 * s)) + 1
    ms = np.array([s - i for i in range(d)])
    sz = np.diag(ms).astype(complex)
    sp = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        m = ms[i]
        sp[i - 1, i] = math.sqrt(s * (s + 1) - m * (m + 1))
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / (2j)
    return sx, sy, sz


def heisenberg_coupling(s1: float, s2: float) -> np.ndarray:
    """S1 . S2 on the pair space, first site most significant."""
    a = spin_matrices(s1)
    b = spin_matrices(s2)
    d1, d2 = a[0].shape[0], b[0].shape[0]
    out = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for sa, sb in zip(a, b):
        out += np.kron(sa, sb)
    return out


def total_spin_projector(s1: float, s2: float, stot: float) -> np.ndarray:
    """Projector onto the total-spin-``stot`` multiplet of two spins."""
    a = spin_matrices(s1)
    b = spin_matrices(s2)
    d1, d2 = a[0].shape[0], b[0].shape[0]
    s2tot = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for sa, sb in zip(a, b):
        j = np.kron(sa, np.eye(d2)) + np.kron(np.eye(d1), sb)
        s2tot += j @ j
    vals, vecs = np.linalg.eigh(s2tot)
    target = stot * (stot + 1)
    cols = vecs[:, np.abs(vals - target) < 0.5]
    expect = int(round(2 * stot)) + 1
    if cols.shape[1] % expect != 0:
        raise ValueError("unexpected multiplet dimension")
    return cols @ cols.conj().T


def symmetric_embedding(k: int) -> np.ndarray:
    """Isometry (2^k x (k+1)) from the spin-k/2 basis into k qubits.

    Column t is the normalized symmetric state with t ones; qubit |0> is
    spin up, so column t carries m = k/2 - t.  The matrix is invariant
    under any qubit ordering convention.
    """
    v = np.zeros((2**k, k + 1), dtype=complex)
    for idx in range(2**k):
        t = bin(idx).count("1")
        v[idx, t] = 1.0
    return v / np.linalg.norm(v, axis=0, keepdims=True)


# ---------------------------------------------------------------------------
# subspace utilities


def orthonormal_columns(mat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span."""
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim == 1:
        mat = mat[:, None]
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    return u[:, s > tol * max(1.0, s[0] if s.size else 1.0)]


def principal_angle_gap(a: np.ndarray, b: np.ndarray) -> float:
    """max(1 - cos(theta)) over principal angles; 0 iff span(a) = span(b).

    Requires equal dimensions; returns inf otherwise.
    """
    qa = orthonormal_columns(a)
    qb = orthonormal_columns(b)
    if qa.shape[1] != qb.shape[1]:
        return float("inf")
    if qa.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(qa.conj().T @ qb, compute_uv=False)
    return float(1.0 - s.min())


def subspaces_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    return principal_angle_gap(a, b) <= tol


def subspace_intersection(bases: Sequence[np.ndarray], tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the intersection of the given column spans."""
    bases = [orthonormal_columns(b) for b in bases]
    if not bases:
        raise ValueError("need at least one subspace")
    total = sum(q @ q.conj().T for q in bases)
    vals, vecs = np.linalg.eigh(total)
    keep = vals > len(bases) - tol
    return vecs[:, keep]
