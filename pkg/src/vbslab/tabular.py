"""Tabular calculus for matrix product chains.

A table holds one column per site; each column lists (label, 2x2 matrix)
entries.  Contraction runs in reading order:

    amp(i_1, ..., i_n) = <l| C_1[i_1] C_2[i_2] ... C_n[i_n] |r>

Columns with a single entry carry no physical index; ``to_state`` skips
them, so deleting measured rows and absorbing the leftover matrix are
state-preserving bookkeeping moves.  The four rewrite moves (gauge
insertion, basis mixing, row deletion, single-entry absorption) each map
to an exact statement about the contracted state, tested against the
dense simulator.

The second half implements the measurement protocol that turns the
spin-1 chain with exposed boundary qubits into a chain cluster state:
two-outcome site measurements alternating between two fixed splits
(switch on success), followed by a constructively derived local
correction frame.  A second, adaptive variant handles deformed site
families such as (H, X, Y), re-deriving the kept basis pair at every
site from the accumulated byproduct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cluster import build_cluster_state
from .graphs import chain
from .mps import (
    MatrixProductState,
    aklt_spec,
    build_exposed_mps,
    build_vbs,
    modified_aklt_mps_matrices,
    site_chain_matrices,
)
from .qstate import I2, QuditState, X, Y, Z, apply_gate, measure

Entry = tuple[int, np.ndarray]

_TOL = 1e-10


@dataclass
class Tabular:
    columns: list  # list[list[Entry]]
    left_bra: np.ndarray
    right: np.ndarray
    log: list = field(default_factory=list)

    def __post_init__(self):
        self.columns = [
            [(int(lab), np.asarray(m, dtype=complex)) for lab, m in col]
            for col in self.columns
        ]
        self.left_bra = np.asarray(self.left_bra, dtype=complex).reshape(2)
        self.right = np.asarray(self.right, dtype=complex).reshape(2)
        for col in self.columns:
            if not col:
                raise ValueError("empty column")

    def dims(self) -> tuple:
        return tuple(len(col) for col in self.columns)

    def copy(self) -> "Tabular":
        return Tabular(
            [[(lab, m.copy()) for lab, m in col] for col in self.columns],
            self.left_bra.copy(),
            self.right.copy(),
            list(self.log),
        )

    def to_state(self) -> QuditState:
        """Contract the table; single-entry columns contribute their matrix
        but no site."""
        t = self.left_bra[None, :]
        dims = []
        for col in self.columns:
            stack = np.stack([m for _, m in col])
            if len(col) == 1:
                t = np.einsum("...a,ab->...b", t, stack[0])
            else:
                dims.append(len(col))
                t = np.einsum("...a,mab->...mb", t, stack)
        amps = np.einsum("...a,a->...", t, self.right)[0]
        if not dims:
            raise ValueError("table has no open sites")
        return QuditState(tuple(dims), amps.reshape(-1, order="F")).normalized()


def from_mps(mps: MatrixProductState) -> Tabular:
    """Rewrite <R|A[i_n]...A[i_1]|L> as a reading-order table by
    transposing every matrix."""
    cols = [
        [(m, np.asarray(a, dtype=complex).T) for m, a in enumerate(mats)]
        for mats in mps.matrices
    ]
    return Tabular(cols, np.asarray(mps.left, complex), np.asarray(mps.right_bra, complex))


def gauge_insert(tab: Tabular, bond: int, m: np.ndarray) -> Tabular:
    """Insert M M^-1 at the bond between columns ``bond`` and ``bond+1``.

    The earlier column's matrices pick up M on the right, the later
    column's M^-1 on the left; the contracted state is unchanged.
    """
    m = np.asarray(m, dtype=complex)
    if abs(np.linalg.det(m)) < 1e-12:
        raise ValueError("gauge matrix must be invertible")
    if not 0 <= bond < len(tab.columns) - 1:
        raise ValueError("bond index out of range")
    minv = np.linalg.inv(m)
    out = tab.copy()
    out.columns[bond] = [(lab, a @ m) for lab, a in out.columns[bond]]
    out.columns[bond + 1] = [(lab, minv @ a) for lab, a in out.columns[bond + 1]]
    out.log.append(("gauge_insert", bond))
    return out


def basis_mix(tab: Tabular, col: int, u: np.ndarray) -> Tabular:
    """Replace column entries by unitary mixtures: new[t] = sum_s u[t,s] old[s].

    The contracted state changes by the same unitary applied to that
    site's physical basis, so the move is recorded rather than silent.
    """
    u = np.asarray(u, dtype=complex)
    entries = tab.columns[col]
    d = len(entries)
    if u.shape != (d, d) or np.max(np.abs(u.conj().T @ u - np.eye(d))) > _TOL:
        raise ValueError("mixing matrix must be unitary on the column labels")
    stack = np.stack([m for _, m in entries])
    mixed = np.einsum("ts,sab->tab", u, stack)
    out = tab.copy()
    out.columns[col] = [(t, mixed[t]) for t in range(d)]
    out.log.append(("basis_mix", col, u))
    return out


def measure_delete(tab: Tabular, col: int, keep) -> Tabular:
    """Keep only the listed labels of a column: the branch of a
    computational-basis measurement that observed the kept subset."""
    keep = list(keep)
    have = {lab: m for lab, m in tab.columns[col]}
    if not keep or any(lab not in have for lab in keep) or len(set(keep)) != len(keep):
        raise ValueError("kept labels must be a nonempty subset of the column")
    out = tab.copy()
    out.columns[col] = [(t, have[lab]) for t, lab in enumerate(keep)]
    out.log.append(("measure_delete", col, tuple(keep)))
    return out


def absorb_single(tab: Tabular, col: int, into: str = "next") -> Tabular:
    """Remove a single-entry column by folding its matrix into a neighbor
    (or into the boundary vector at the chain ends)."""
    if len(tab.columns[col]) != 1:
        raise ValueError("only single-entry columns can be absorbed")
    b = tab.columns[col][0][1]
    out = tab.copy()
    if into == "next":
        if col == len(tab.columns) - 1:
            out.right = b @ out.right
        else:
            out.columns[col + 1] = [(lab, b @ a) for lab, a in out.columns[col + 1]]
    elif into == "prev":
        if col == 0:
            out.left_bra = out.left_bra @ b
        else:
            out.columns[col - 1] = [(lab, a @ b) for lab, a in out.columns[col - 1]]
    else:
        raise ValueError("into must be 'next' or 'prev'")
    del out.columns[col]
    out.log.append(("absorb_single", col, into))
    return out


# ---------------------------------------------------------------------------
# reduction of the spin-1 chain to the cluster state

# Site mix bringing each spin-z-basis column to the presentation
# (G, Z G, X G) with G invertible: rows give the post-measurement basis.
# The first split keeps rows (0, 1) and leaves residual letter X; the
# second keeps (0, 2) and leaves letter Z; alternating on success makes
# neighboring letters anticommute, which is exactly the cluster condition.
_SITE_MIX = np.array(
    [[1 / math.sqrt(2), 0, 1 / math.sqrt(2)], [0, 1, 0], [1 / math.sqrt(2), 0, -1 / math.sqrt(2)]],
    dtype=complex,
)
_SPLITS = {1: ((0, 1), 2), 2: ((0, 2), 1)}


@dataclass
class ReductionStep:
    site: int
    mode: int
    outcome: str
    probability: float


@dataclass
class ReductionResult:
    register: QuditState
    corrected: QuditState
    target: QuditState
    corrections: list
    steps: list
    success_sites: list
    fidelity: float
    probability: float


def reduce_aklt_to_cluster(n: int, rng=None, forced=None) -> ReductionResult:
    """Measure every spin-1 site of the boundary-pinned chain with the
    alternating two-outcome protocol and return the surviving register,
    the derived correction frame, and the fidelity against the chain
    cluster state on (successes + 2) qubits.

    ``forced`` fixes the outcome sequence ("success"/"fail" per site) for
    exhaustive branch checks; otherwise outcomes are Born-sampled.
    """
    state = build_vbs(n, aklt_spec())
    b_mats, beta = site_chain_matrices(aklt_spec())
    return _reduce_exposed_chain(state, b_mats, beta, rng, forced)


def _reduce_exposed_chain(state, b_mats, beta, rng, forced):
    n = len(state.dims) - 2
    carry = I2.copy()
    mode = 1
    steps, lams, letters = [], [], []
    ops, success_sites = {}, []
    post = state
    q_stack = np.einsum("tm,mab->tab", _SITE_MIX, np.stack(b_mats))
    for j in range(1, n + 1):
        keep_rows, fail_row = _SPLITS[mode]
        succ = sum(np.outer(_SITE_MIX[r].conj(), _SITE_MIX[r]) for r in keep_rows)
        fail = np.outer(_SITE_MIX[fail_row].conj(), _SITE_MIX[fail_row])
        forced_idx = None
        if forced is not None:
            forced_idx = 0 if forced[j - 1] in (0, "success") else 1
        outcome, prob, post = measure(post, j, [succ, fail], rng=rng, forced=forced_idx)
        t_mats = np.einsum("ab,tbc->tac", carry, q_stack)
        if outcome == 0:
            t0, t1 = t_mats[keep_rows[0]], t_mats[keep_rows[1]]
            r = t1 @ np.linalg.inv(t0)
            lam = np.sqrt(-np.linalg.det(r) + 0j)
            p = r / lam
            if (
                np.max(np.abs(p - p.conj().T)) > _TOL
                or np.max(np.abs(p @ p - I2)) > _TOL
                or abs(np.trace(p)) > _TOL
            ):
                raise ArithmeticError("success branch does not canonicalize")
            lams.append(lam)
            letters.append(p)
            ops[j] = _SITE_MIX[list(keep_rows)]
            success_sites.append(j)
            carry = t0
            steps.append(ReductionStep(j, mode, "success", prob))
            mode = 2 if mode == 1 else 1
        else:
            carry = t_mats[fail_row]
            ops[j] = _SITE_MIX[fail_row][None, :]
            steps.append(ReductionStep(j, mode, "fail", prob))
    register = _contract_register(post, ops)
    corrections = _cluster_frame(lams, letters, beta, carry)
    corrected = register
    for site, k in enumerate(corrections):
        corrected = _apply_single(corrected, site, k)
    target = build_cluster_state(chain(len(success_sites) + 2))
    fid = abs(np.vdot(target.amps, corrected.amps))
    prob_total = float(np.prod([s.probability for s in steps])) if steps else 1.0
    return ReductionResult(
        register, corrected, target, corrections, steps, success_sites, fid, prob_total
    )


def _apply_single(state, site, k):
    return apply_gate(state, (site,), k)


def _contract_register(state, ops):
    """Contract measured sites with their post-measurement row vectors and
    qubitize kept sites with their 2x3 isometry rows."""
    t = state.tensor()
    for site in sorted(ops, reverse=True):
        w = np.asarray(ops[site], dtype=complex)
        t = np.tensordot(w, t, axes=([1], [site]))
        t = np.moveaxis(t, 0, site)
        if w.shape[0] == 1:
            t = np.squeeze(t, axis=site)
    amps = t.reshape(-1, order="F")
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-8:
        raise ArithmeticError("register contraction lost weight")
    dims = tuple(d for d in t.shape)
    return QuditState(dims, amps / norm)


def _cluster_frame(lams, letters, beta, carry_final):
    """Single-qubit corrections mapping the reduced register to the chain
    cluster state.

    Bulk columns read (I, lam_j P_j) with Hermitian unitary traceless P_j
    anticommuting along the chain.  Bond gauges send |+->-ish axes onto
    the P eigenbases; the per-site mixes then collapse to H|t><t| up to
    scalars that are absorbed as diagonal phases; the two boundary
    columns are solved directly.
    """
    k = len(letters)
    c2 = np.array([[1, 1], [1, -1]], dtype=complex) / 2
    if k == 0:
        m = beta @ carry_final
        kl = c2 @ np.linalg.inv(m)
        kl /= math.sqrt(abs(np.linalg.det(kl)))
        _check_unitary(kl)
        return [kl, I2.copy()]
    plus, minus = [], []
    for p in letters:
        vals, vecs = np.linalg.eigh(p)
        minus.append(vecs[:, 0])
        plus.append(vecs[:, 1])
    ws = [None] * (k + 1)
    ws[0] = np.column_stack(
        [(plus[0] + minus[0]) / math.sqrt(2), (plus[0] - minus[0]) / math.sqrt(2)]
    )
    for j in range(1, k):
        a_plus = np.vdot(plus[j - 1], plus[j])
        b_plus = np.vdot(minus[j - 1], plus[j])
        if not math.isclose(abs(a_plus), abs(b_plus), rel_tol=0, abs_tol=1e-8):
            raise ArithmeticError("adjacent letters are not unbiased")
        ws[j] = math.sqrt(2) * (
            np.outer(plus[j - 1], [a_plus, 0]) + np.outer(minus[j - 1], [0, b_plus])
        )
    ws[k] = np.column_stack([plus[k - 1], minus[k - 1]])
    plus_m = np.array([[1, 1], [1, -1]], dtype=complex) / 2  # |+><0|, |-><1| packers
    corrections = [None] * (k + 2)
    for j in range(k):
        lam = lams[j]
        kj = np.array([[lam, 1], [-lam, 1]], dtype=complex) / math.sqrt(2)
        col = [I2, lam * letters[j]]
        wl, wr = np.linalg.inv(ws[j]), ws[j + 1]
        scal = []
        for t in range(2):
            mixed = wl @ (kj[t, 0] * col[0] + kj[t, 1] * col[1]) @ wr
            basis = np.array([1, 1 - 2 * t], dtype=complex) / math.sqrt(2)  # <+| or <-|
            c = basis.conj() @ mixed @ np.eye(2)[:, t]
            if np.max(np.abs(mixed - c * np.outer(basis, np.eye(2)[t]))) > 1e-8:
                raise ArithmeticError("bulk column failed to collapse")
            scal.append(c)
        if not math.isclose(abs(scal[0]), abs(scal[1]), rel_tol=0, abs_tol=1e-8):
            raise ArithmeticError("bulk scalars differ in magnitude")
        phase = np.diag([s.conjugate() / abs(s) for s in scal])
        corrections[j + 1] = phase @ kj
    u_hat = beta @ ws[0]
    kl = np.linalg.inv(u_hat)
    kl /= math.sqrt(abs(np.linalg.det(kl)))
    _check_unitary(kl)
    v_hat = np.linalg.inv(ws[k]) @ carry_final
    kr = (np.linalg.inv(v_hat) @ (c2 * 2 / math.sqrt(2))).T
    kr /= math.sqrt(abs(np.linalg.det(kr)))
    _check_unitary(kr)
    corrections[0] = kl
    corrections[k + 1] = kr
    return corrections


def _check_unitary(m):
    if np.max(np.abs(m.conj().T @ m - np.eye(len(m)))) > 1e-8:
        raise ArithmeticError("derived correction is not unitary")


def enumerate_reduction_branches(n: int):
    """All 2^n outcome patterns with their exact Born probabilities."""
    results = []
    for bits in range(2**n):
        forced = ["success" if (bits >> j) & 1 == 0 else "fail" for j in range(n)]
        res = reduce_aklt_to_cluster(n, forced=forced)
        results.append((tuple(forced), res))
    return results


# ---------------------------------------------------------------------------
# adaptive reduction for deformed site families

_SIGMA = np.stack([X, Y, Z])


@dataclass
class AdaptiveStep:
    site: int
    outcome: int  # 0 = success, higher = fail flavor
    probability: float
    branch_probs: tuple


def _pauli_axis(m):
    """Split a traceless 2x2 matrix into coeff * (unit real axis . sigma)."""
    m = np.asarray(m, dtype=complex)
    scale = np.linalg.norm(m)
    if abs(np.trace(m)) > 1e-9 * max(scale, 1.0):
        raise ValueError("matrix is not traceless")
    vec = np.array([np.trace(s @ m) for s in _SIGMA]) / 2
    ref = vec[np.argmax(np.abs(vec))]
    if abs(ref) < 1e-12:
        raise ValueError("matrix vanishes")
    axis = vec / ref
    if np.max(np.abs(axis.imag)) > 1e-9:
        raise ValueError("matrix direction is not a real axis")
    axis = axis.real
    length = np.linalg.norm(axis)
    return ref * length, axis / length


def _adaptive_site_rows(m_inv, gt, pulled):
    """Measurement rows for one site, in the effective-direction frame.

    ``pulled`` is the axis the new residual letter must be orthogonal to
    (None at the first site).  The kept directions are q0 (aligned with
    the pulled axis whenever that is admissible) and q1 ~ q0 x Gt q0; the
    letter then points along the orthogonal complement of q0 in Gt q0, so
    adjacent letters anticommute by construction.  Unequal effective row
    norms are evened out by the weights (a, b) <= 1.
    """
    axes = np.eye(3)
    if pulled is None:
        candidates = [axes[0], axes[1], axes[2], np.ones(3) / math.sqrt(3)]
    elif np.linalg.norm(np.cross(pulled, gt @ pulled)) > 1e-9 * np.linalg.norm(gt @ pulled):
        candidates = [pulled]
    else:
        # pulled is an eigendirection: any orthogonal q0 keeps the letter
        # orthogonal to it, but q0 itself must not be an eigendirection
        candidates = []
        for e in (axes[1], axes[0], axes[2], np.ones(3) / math.sqrt(3)):
            c = np.cross(pulled, e)
            nc = np.linalg.norm(c)
            if nc > 1e-6:
                candidates.append(c / nc)
    q0 = None
    for c in candidates:
        if np.linalg.norm(np.cross(c, gt @ c)) > 1e-9 * np.linalg.norm(gt @ c):
            q0 = c
            break
    if q0 is None:
        raise ArithmeticError("no admissible measurement direction")
    q1 = np.cross(q0, gt @ q0)
    q1 /= np.linalg.norm(q1)
    v0_raw = q0 @ m_inv
    v1_raw = q1 @ m_inv
    n0, n1 = np.linalg.norm(v0_raw), np.linalg.norm(v1_raw)
    v0, v1 = v0_raw / n0, v1_raw / n1
    v2 = np.cross(v0, v1)
    rho = n0 / n1  # |lambda| of the unweighted letter
    a, b = (1.0, 1.0 / rho) if rho >= 1.0 else (rho, 1.0)
    return v0, v1, v2, a, b


def reduce_adaptive_to_cluster(site_matrices, n: int, rng=None, forced=None, beta=None) -> ReductionResult:
    """Reduce a chain of Pauli-axis site matrices to the chain cluster state.

    Works for any family of three invertible traceless matrices with real
    Pauli axes, e.g. the deformed set (H, X, Y).  The two kept rows are
    re-derived at every site from the accumulated byproduct so the
    residual letters stay Hermitian and anticommute; the success outcome
    is weighted to keep the letter scale unimodular, with the weight
    deficit spilling into extra fail flavors.  Outcome 0 is success;
    higher indices are fail flavors (all fail flavors end the register
    run the same way, they differ only in the carried matrix).

    ``forced`` entries fix outcome indices per site; ``None`` entries take
    the most likely outcome, which branch enumeration uses as padding.
    """
    if n < 1:
        raise ValueError("need at least one site")
    mats = [np.asarray(m, dtype=complex) for m in site_matrices]
    if len(mats) != 3:
        raise ValueError("adaptive reduction expects three site matrices")
    if beta is None:
        beta = I2 / math.sqrt(2)
    beta = np.asarray(beta, dtype=complex)
    state = build_exposed_mps(mats, n, beta)
    b_mats = [m @ beta for m in mats]
    parts = [_pauli_axis(b) for b in b_mats]
    phases = np.array([c / abs(c) for c, _ in parts])
    m_real = np.array([abs(c) * u for c, u in parts])
    if abs(np.linalg.det(m_real)) < 1e-9:
        raise ValueError("site matrix directions are linearly dependent")
    m_inv = np.linalg.inv(m_real)
    gt = np.linalg.inv(m_real.T @ m_real)
    bstack = np.stack(b_mats)
    carry = I2.copy()
    steps, lams, letters = [], [], []
    ops, success_sites = {}, []
    post = state
    for j in range(1, n + 1):
        pulled = None
        if letters:
            _, pulled = _pauli_axis(np.linalg.inv(carry) @ letters[-1] @ carry)
        v0, v1, v2, a, b = _adaptive_site_rows(m_inv, gt, pulled)
        # chain factor of a measurement row is Q(conj(row)); attaching the
        # direction-frame phases keeps those factors on real Pauli axes
        rows = [v0 * phases, v1 * phases, v2 * phases]
        succ = np.zeros((3, 3), dtype=complex)
        succ[0], succ[1] = a * rows[0].conj(), b * rows[1].conj()
        kraus = [succ]
        flavors = []
        for w2, idx in ((1 - a**2, 0), (1 - b**2, 1)):
            if w2 > 1e-18:
                flavors.append((math.sqrt(w2), idx))
        flavors.append((1.0, 2))
        for w, idx in flavors:
            k = np.zeros((3, 3), dtype=complex)
            k[2] = w * rows[idx].conj()
            kraus.append(k)
        branch_probs = tuple(float(apply_gate(post, (j,), k).norm() ** 2) for k in kraus)
        forced_idx = None
        if forced is not None:
            entry = forced[j - 1]
            forced_idx = int(np.argmax(branch_probs)) if entry is None else int(entry)
            if forced_idx >= len(kraus):
                raise ValueError("forced outcome has no flavor at this site")
        outcome, prob, post = measure(post, j, kraus, rng=rng, forced=forced_idx)
        if outcome == 0:
            t0 = a * carry @ np.einsum("m,mab->ab", rows[0].conj(), bstack)
            t1 = b * carry @ np.einsum("m,mab->ab", rows[1].conj(), bstack)
            r = t1 @ np.linalg.inv(t0)
            lam = np.sqrt(-np.linalg.det(r) + 0j)
            p = r / lam
            if (
                np.max(np.abs(p - p.conj().T)) > _TOL
                or np.max(np.abs(p @ p - I2)) > _TOL
                or abs(np.trace(p)) > _TOL
            ):
                raise ArithmeticError("success branch does not canonicalize")
            lams.append(lam)
            letters.append(p)
            ops[j] = np.array([[1, 0, 0], [0, 1, 0]], dtype=complex)
            success_sites.append(j)
            carry = t0
        else:
            w, idx = flavors[outcome - 1]
            carry = w * carry @ np.einsum("m,mab->ab", rows[idx].conj(), bstack)
            ops[j] = np.array([[0, 0, 1]], dtype=complex)
        steps.append(AdaptiveStep(j, outcome, prob, branch_probs))
    register = _contract_register(post, ops)
    corrections = _cluster_frame(lams, letters, beta, carry)
    corrected = register
    for site, k in enumerate(corrections):
        corrected = _apply_single(corrected, site, k)
    target = build_cluster_state(chain(len(success_sites) + 2))
    fid = abs(np.vdot(target.amps, corrected.amps))
    prob_total = float(np.prod([s.probability for s in steps]))
    return ReductionResult(
        register, corrected, target, corrections, steps, success_sites, fid, prob_total
    )


def reduce_modified_to_cluster(n: int, rng=None, forced=None) -> ReductionResult:
    """Adaptive reduction of the (H, X, Y) chain with exposed boundaries."""
    return reduce_adaptive_to_cluster(modified_aklt_mps_matrices(), n, rng=rng, forced=forced)


def enumerate_adaptive_branches(site_matrices, n: int, tol: float = 1e-9):
    """All outcome sequences with probability above ``tol``.

    The branching factor varies per site (zero-weight fail flavors are
    dropped), so the tree is walked by re-running the reduction with the
    forced prefix padded by most-likely outcomes and reading the branch
    probabilities recorded at the first unforced site.
    """
    results = []

    def extend(prefix):
        pad = list(prefix) + [None] * (n - len(prefix))
        res = reduce_adaptive_to_cluster(site_matrices, n, forced=pad)
        if len(prefix) == n:
            results.append((prefix, res))
            return
        for o, pr in enumerate(res.steps[len(prefix)].branch_probs):
            if pr > tol:
                extend(prefix + (o,))

    extend(())
    return results


def enumerate_modified_branches(n: int, tol: float = 1e-9):
    return enumerate_adaptive_branches(modified_aklt_mps_matrices(), n, tol=tol)
