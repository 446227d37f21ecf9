"""Cluster states from graphs, and the associated stabilizer Hamiltonian."""

from __future__ import annotations

import numpy as np

from .graphs import SiteGraph
from .hamiltonian import LocalHamiltonian
from .qstate import CZ, H, X, Z, QuditState, apply_gate, basis_state, kron_all


def build_cluster_state(graph: SiteGraph) -> QuditState:
    """|0...0> -> Hadamard on every site -> CZ on every edge.

    The CZ layer is applied in the graph's edge order; the result does not
    depend on it since the gates commute.
    """
    dims = graph.dims
    if any(d != 2 for d in dims):
        raise ValueError("cluster states need qubit sites")
    state = basis_state(dims, [0] * graph.num_vertices)
    for i in range(graph.num_vertices):
        state = apply_gate(state, i, H)
    for a, b in graph.edge_index_pairs():
        state = apply_gate(state, (a, b), CZ)
    return state.normalized()


def cluster_hamiltonian(graph: SiteGraph) -> LocalHamiltonian:
    """H_C = -sum_j X_j (x) Z over neighbors of j.

    The cluster state is the unique ground state, with energy -(number of
    vertices) since it is a +1 eigenstate of every generator.
    """
    if any(d != 2 for d in graph.dims):
        raise ValueError("cluster Hamiltonian needs qubit sites")
    terms = []
    for v in graph.vertex_ids:
        nbrs = graph.neighbors(v)
        support = (graph.index(v),) + tuple(graph.index(k) for k in nbrs)
        mat = -kron_all([X] + [Z] * len(nbrs))
        terms.append((support, mat))
    return LocalHamiltonian(graph.dims, terms)


def graph_state_overlap_check(graph: SiteGraph, state: QuditState, tol: float = 1e-10) -> bool:
    """Convenience: does ``state`` equal the graph's cluster state up to phase."""
    ref = build_cluster_state(graph)
    return abs(np.vdot(ref.amps, state.normalized().amps)) >= 1 - tol
