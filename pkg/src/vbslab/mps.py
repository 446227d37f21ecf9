"""1D valence-bond states: bond + projector builders, matrix product
contraction, named matrix families, and the spin-1 chain Hamiltonian.

Bond states are two-qubit vectors; site projectors map the two virtual
qubits of a site (left qubit most significant, as printed) to the physical
basis.  ``build_vbs`` exposes the two unpaired end virtual qubits as
physical spin-1/2 sites, so its output has n+2 sites: this matches the
boundary-pinned chain Hamiltonian and makes ground-state uniqueness
checkable.  ``mps_to_state`` is the closed-chain form with explicit
boundary vectors instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamiltonian import LocalHamiltonian, heisenberg_coupling
from .qstate import DESK_CAP, H, X, Y, Z, QuditState

SQ2 = math.sqrt(2.0)

# two-qubit bond states, little-endian over (first, second) qubit
SINGLET = np.array([0, -1, 1, 0], dtype=complex) / SQ2  # (|01> - |10>)/sqrt2
BOND = np.array([1, 0, 0, 1], dtype=complex) / SQ2  # (|00> + |11>)/sqrt2
CBOND = np.array([1, 1, 1, -1], dtype=complex) / 2  # (|00>+|01>+|10>-|11>)/2

# symmetric two-qubit subspace in the standard spin-1 basis, rows ordered
# m = +1, 0, -1, so the projected chain lives in the same site basis as
# the spin operators used by the chain Hamiltonian
SYMMETRIC_PROJECTOR = np.array(
    [[SQ2, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, SQ2]], dtype=complex
) / SQ2

# physical-qubit relabelings: row m of the projector is the <kl| functional
CLUSTER_PROJECTOR = np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex)
CLUSTER_PROJECTOR_FLIPPED = np.array([[0, 1, 0, 0], [0, 0, 1, 0]], dtype=complex)
# spin-3/2 relabeling; the first two rows are the cluster pair, the last
# two its flipped partner, so a {0,1} vs {2,3} site measurement leaves a
# qubit chain either way
FULL_RELABEL_PROJECTOR = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0]], dtype=complex
)


@dataclass
class BondProjectorSpec:
    """Bond state (4-vector) + per-site projector (rows = physical basis)."""

    bond: np.ndarray
    projector: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.bond = np.asarray(self.bond, dtype=complex).reshape(4)
        self.projector = np.asarray(self.projector, dtype=complex)
        if self.projector.shape[1] != 4:
            raise ValueError("projector columns must index the virtual pair")
        gram = self.projector @ self.projector.conj().T
        scale = gram[0, 0].real
        if scale < 1e-12 or np.max(np.abs(gram - scale * np.eye(len(gram)))) > 1e-10:
            raise ValueError("projector rows must be orthogonal with equal norm")


def cluster_spec() -> BondProjectorSpec:
    return BondProjectorSpec(CBOND, CLUSTER_PROJECTOR, "cluster")


def cluster_spec_flipped() -> BondProjectorSpec:
    return BondProjectorSpec(CBOND, CLUSTER_PROJECTOR_FLIPPED, "cluster-flipped")


def spin32_relabel_spec() -> BondProjectorSpec:
    return BondProjectorSpec(CBOND, FULL_RELABEL_PROJECTOR, "spin32-relabel")


def aklt_spec() -> BondProjectorSpec:
    return BondProjectorSpec(SINGLET, SYMMETRIC_PROJECTOR, "aklt")


def build_vbs(n: int, spec: BondProjectorSpec) -> QuditState:
    """Chain of n projected sites with exposed boundary qubits.

    Layout: one boundary qubit, n physical sites, one boundary qubit.
    Bond alpha spans virtual qubits (2a, 2a+1) for a = 0..n; site j consumes
    virtual qubits (2j-1, 2j), its left qubit being the more significant
    projector index.
    """
    if n < 1:
        raise ValueError("need at least one site")
    d = spec.projector.shape[0]
    total = 4 * d**n
    if total > DESK_CAP:
        raise ValueError("chain exceeds the desk-scale amplitude cap")
    # product of n+1 bonds over 2n+2 virtual qubits, little-endian
    amps = spec.bond
    for _ in range(n):
        amps = np.kron(spec.bond, amps)
    t = amps.reshape((2,) * (2 * n + 2), order="F")
    # contract each site's projector; axes tracked by original qubit index
    axes = list(range(2 * n + 2))
    ptens = spec.projector.reshape(d, 2, 2)  # (m, left, right)
    for j in range(1, n + 1):
        left, right = 2 * j - 1, 2 * j
        al, ar = axes.index(left), axes.index(right)
        t = np.tensordot(ptens, t, axes=([1, 2], [al, ar]))
        rest = [a for k, a in enumerate(axes) if k not in (al, ar)]
        axes = [f"site{j}"] + rest  # placeholder label for the new axis
    # axes now: [site_n, site_{n-1}, ..., site_1, qubit0, qubit_{2n+1}]
    order = axes.index(0), *[axes.index(f"site{j}") for j in range(1, n + 1)], axes.index(2 * n + 1)
    t = t.transpose(order)
    dims = (2,) + (d,) * n + (2,)
    return QuditState(dims, t.reshape(-1, order="F")).normalized()


def site_chain_matrices(spec: BondProjectorSpec):
    """Row-chain factors of the exposed-boundary state.

    Writing the contraction in reading order,

        amp(x, m_1..m_n, y) = <x| beta B[m_1] B[m_2] ... B[m_n] |y>,

    the site factor is B[m] = P_m beta, where P_m is projector row m
    reshaped to a (left, right) matrix and beta the bond state as a
    matrix.  Returns ([B[m]], beta).
    """
    beta = spec.bond.reshape(2, 2, order="F")
    mats = [spec.projector[m].reshape(2, 2) @ beta for m in range(spec.projector.shape[0])]
    return mats, beta


def build_exposed_mps(site_matrices: Sequence[np.ndarray], n: int, beta: np.ndarray) -> QuditState:
    """Chain state from raw site matrices A[m] with bond matrix beta and
    exposed boundary qubits: amp(x, m.., y) = <x|beta (A[m_1]beta) ... |y>.

    Unlike build_vbs this accepts matrix families whose rows are not
    orthogonal, so deformed chains are constructible directly.
    """
    beta = np.asarray(beta, dtype=complex)
    b_mats = [np.asarray(a, dtype=complex) @ beta for a in site_matrices]
    d = len(b_mats)
    if 4 * d**n > DESK_CAP:
        raise ValueError("chain exceeds the desk-scale amplitude cap")
    t = beta[None, ...]  # axes: (dummy, x, bond)
    stack = np.stack(b_mats)
    for _ in range(n):
        t = np.einsum("...a,mab->...mb", t, stack)
    amps = t[0]  # axes (x, m_1..m_n, y)
    dims = (2,) + (d,) * n + (2,)
    return QuditState(dims, amps.reshape(-1, order="F")).normalized()


# ---------------------------------------------------------------------------
# matrix product form


@dataclass
class MatrixProductState:
    """Site matrices A[m] per site plus boundary vectors.

    Contraction: amp(i_1..i_n) = <R| A[i_n] ... A[i_1] |L>, site 1 applied
    first.  ``right_bra`` stores <R| as a plain row vector.
    """

    matrices: list  # list over sites; each a list of DxD arrays per label
    left: np.ndarray
    right_bra: np.ndarray

    @classmethod
    def uniform(cls, site_matrices: Sequence[np.ndarray], n: int, left, right_bra):
        mats = [list(np.asarray(a, dtype=complex) for a in site_matrices)] * n
        return cls(mats, np.asarray(left, complex), np.asarray(right_bra, complex))


def mps_to_state(mps: MatrixProductState) -> QuditState:
    """Dense contraction of the matrix product form, normalized."""
    t = np.asarray(mps.left, dtype=complex).reshape(-1)
    t = t[None, :]  # axes: (labels so far ..., bond)
    for mats in mps.matrices:
        stack = np.stack([np.asarray(a, dtype=complex) for a in mats])  # (d, D, D)
        # new axis for this site's label goes last, bond stays last+1
        t = np.einsum("...b,mcb->...mc", t, stack)
    amps = np.einsum("...c,c->...", t, mps.right_bra)[0]
    dims = tuple(len(mats) for mats in mps.matrices)
    state = QuditState(dims, amps.reshape(-1, order="F"))
    return state.normalized()


def cluster_mps_matrices(projector_form: bool = True) -> list[np.ndarray]:
    """Site matrices for the chain cluster state.

    The projector form H|m><m| contracts to the cluster chain for every
    length with boundaries |L> = |+>, <R| = <0|.  The Hadamard pair
    (H, HZ) is the same family written after a physical Hadamard mix on
    every site (see tabular.basis_mix); as raw matrices it contracts to
    H^(x)n times the cluster chain.
    """
    if projector_form:
        return [H @ np.diag([1, 0]).astype(complex), H @ np.diag([0, 1]).astype(complex)]
    return [H, H @ Z]


def cluster_mps_boundaries() -> tuple[np.ndarray, np.ndarray]:
    left = np.array([1, 1], dtype=complex) / SQ2
    right_bra = np.array([1, 0], dtype=complex)
    return left, right_bra


def aklt_mps_matrices() -> list[np.ndarray]:
    return [X.copy(), Y.copy(), Z.copy()]


def modified_aklt_mps_matrices() -> list[np.ndarray]:
    return [H.copy(), X.copy(), Y.copy()]


def fnw_mps_matrices(theta: float) -> list[np.ndarray]:
    """One-parameter deformation family; theta in the open interval
    (0, pi/2) keeps every matrix's rank structure intact."""
    if not 0.0 < theta < math.pi / 2:
        raise ValueError("theta must lie strictly between 0 and pi/2")
    return [
        math.sin(theta) * Z,
        math.cos(theta) * np.array([[0, 1], [0, 0]], dtype=complex),
        math.cos(theta) * np.array([[0, 0], [1, 0]], dtype=complex),
    ]


def cluster_chain_mps(n: int) -> MatrixProductState:
    left, right_bra = cluster_mps_boundaries()
    return MatrixProductState.uniform(cluster_mps_matrices(), n, left, right_bra)


# ---------------------------------------------------------------------------
# spin-1 chain Hamiltonian


def aklt_hamiltonian(n: int, with_boundary: bool = True) -> LocalHamiltonian:
    """Bulk terms S.S + (S.S)^2/3 on neighboring spin-1 pairs; boundary
    terms s.S pinning a spin-1/2 at each end when requested.

    With boundary pinning the site layout matches build_vbs(n, aklt_spec()):
    (qubit, n spin-1 sites, qubit).
    """
    if n < 1:
        raise ValueError("need at least one site")
    ss = heisenberg_coupling(1.0, 1.0)
    bulk = ss + (ss @ ss) / 3.0
    if not with_boundary:
        dims = (3,) * n
        terms = [((j, j + 1), bulk) for j in range(n - 1)]
        return LocalHamiltonian(dims, terms)
    dims = (2,) + (3,) * n + (2,)
    terms = [((j, j + 1), bulk) for j in range(1, n)]
    terms.insert(0, ((0, 1), heisenberg_coupling(0.5, 1.0)))
    terms.append(((n, n + 1), heisenberg_coupling(1.0, 0.5)))
    return LocalHamiltonian(dims, terms)
