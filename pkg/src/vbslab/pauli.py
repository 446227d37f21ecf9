"""Signed Pauli strings over string-labeled qubits, and stabilizer checks.

Labels are strings so that physical sites ("3") and virtual qubits
("v3:q1") share one algebra.  The phase group is the full {1, -1, i, -i}:
stabilizer elements used downstream have phase +-1, but products pass
through +-i transiently.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .qstate import PAULIS, QuditState, apply_gate

_PHASE_STR = {1: "", -1: "-", 1j: "i", -1j: "-i"}

# single-qubit products: (p, q) -> (phase, r) with p q = phase r
_TABLE = {
    ("X", "Y"): (1j, "Z"),
    ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("X", "Z"): (-1j, "Y"),
}


class PauliString:
    """phase * tensor product of single-qubit Paulis on labeled qubits."""

    __slots__ = ("phase", "factors")

    def __init__(self, factors: Mapping[str, str] | None = None, phase: complex = 1):
        if phase not in (1, -1, 1j, -1j):
            raise ValueError("phase must be one of 1, -1, i, -i")
        clean: dict[str, str] = {}
        for label, letter in (factors or {}).items():
            if letter == "I":
                continue
            if letter not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli letter {letter!r}")
            clean[str(label)] = letter
        self.phase = complex(phase)
        self.factors = clean

    def __mul__(self, other: "PauliString") -> "PauliString":
        phase = self.phase * other.phase
        factors = dict(self.factors)
        for label, q in other.factors.items():
            p = factors.pop(label, None)
            if p is None:
                factors[label] = q
            elif p == q:
                continue  # P P = I
            else:
                ph, r = _TABLE[(p, q)]
                phase *= ph
                factors[label] = r
        key = complex(round(phase.real), round(phase.imag))
        return PauliString(factors, key)

    def commutes_with(self, other: "PauliString") -> bool:
        anti = sum(
            1
            for label, p in self.factors.items()
            if other.factors.get(label, "I") not in ("I", p)
        )
        return anti % 2 == 0

    def weight(self) -> int:
        return len(self.factors)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.phase == other.phase
            and self.factors == other.factors
        )

    def __hash__(self):
        return hash((self.phase, frozenset(self.factors.items())))

    def __repr__(self) -> str:
        return f"PauliString({self})"

    def __str__(self) -> str:
        if not self.factors:
            return _PHASE_STR[self.phase] + "I"
        body = " ".join(
            f"{letter}{label}" for label, letter in sorted(self.factors.items())
        )
        return _PHASE_STR[self.phase] + body


def pauli_multiply(p: PauliString, q: PauliString) -> PauliString:
    return p * q


def apply_pauli(
    p: PauliString, psi: QuditState, labels: Sequence[str] | None = None
) -> QuditState:
    """Apply a Pauli string to a state; ``labels`` names each site in order."""
    n = psi.num_sites
    labels = [str(i) for i in range(n)] if labels is None else [str(x) for x in labels]
    if len(labels) != n:
        raise ValueError("one label per site required")
    index = {lab: i for i, lab in enumerate(labels)}
    out = psi
    for label, letter in p.factors.items():
        if label not in index:
            raise ValueError(f"label {label!r} does not name a site")
        site = index[label]
        if psi.dims[site] != 2:
            raise ValueError(f"label {label!r} refers to a non-qubit site")
        out = apply_gate(out, site, PAULIS[letter])
    if p.phase != 1:
        out = QuditState(out.dims, p.phase * out.amps)
    return out


def stabilizes(
    p: PauliString,
    psi: QuditState,
    labels: Sequence[str] | None = None,
    tol: float = 1e-10,
) -> bool:
    """True iff p|psi> = |psi> within tol (norm of the difference)."""
    moved = apply_pauli(p, psi, labels)
    return float(np.linalg.norm(moved.amps - psi.amps)) <= tol


class StabilizerSet:
    """A list of pairwise-commuting Pauli strings over shared labels."""

    def __init__(self, elements: Iterable[PauliString]):
        elements = list(elements)
        for i, p in enumerate(elements):
            for q in elements[i + 1 :]:
                if not p.commutes_with(q):
                    raise ValueError(f"non-commuting pair: {p} and {q}")
        self.elements = elements

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def all_stabilize(
        self,
        psi: QuditState,
        labels: Sequence[str] | None = None,
        tol: float = 1e-10,
    ) -> bool:
        return all(stabilizes(p, psi, labels, tol) for p in self.elements)


def cluster_stabilizer_generators(graph) -> StabilizerSet:
    """One generator X_j (x) Z_k over the neighbors k of each vertex j."""
    gens = []
    for v in graph.vertex_ids:
        factors = {v: "X"}
        for k in graph.neighbors(v):
            factors[k] = "Z"
        gens.append(PauliString(factors))
    return StabilizerSet(gens)
