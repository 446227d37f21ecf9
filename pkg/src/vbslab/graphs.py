"""Site graphs and deterministic lattice builders.

A SiteGraph doubles as a physical lattice (vertices = spins, with an
optional A/B sublattice tag and a per-site dimension) and as a derived
domain graph.  Vertex order is the site order of any state built on the
graph.  Vertex ids are strings; the builders use row-major integer ids.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Sequence

import networkx as nx


class SiteGraph:
    def __init__(
        self,
        vertices: Sequence[str],
        edges: Iterable[tuple[str, str]],
        dims: Mapping[str, int] | int = 2,
        sublattice: Mapping[str, str] | None = None,
        coords: Mapping[str, tuple[float, float]] | None = None,
    ):
        self.vertex_ids = [str(v) for v in vertices]
        if len(set(self.vertex_ids)) != len(self.vertex_ids):
            raise ValueError("duplicate vertex id")
        self._index = {v: i for i, v in enumerate(self.vertex_ids)}
        if isinstance(dims, int):
            self._dims = {v: dims for v in self.vertex_ids}
        else:
            self._dims = {str(v): int(d) for v, d in dims.items()}
        seen = set()
        self.edges: list[tuple[str, str]] = []
        for a, b in edges:
            a, b = str(a), str(b)
            if a == b:
                raise ValueError(f"self-loop at {a}")
            if a not in self._index or b not in self._index:
                raise ValueError(f"edge ({a},{b}) references a missing vertex")
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            self.edges.append(key)
        self.sublattice = {str(v): s for v, s in (sublattice or {}).items()}
        self.coords = {str(v): tuple(c) for v, c in (coords or {}).items()}
        self._nbrs: dict[str, list[str]] = {v: [] for v in self.vertex_ids}
        for a, b in self.edges:
            self._nbrs[a].append(b)
            self._nbrs[b].append(a)
        for v in self._nbrs:
            self._nbrs[v].sort(key=self._index.__getitem__)

    # --- lookups ---------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_ids)

    def index(self, v: str) -> int:
        return self._index[str(v)]

    def dim(self, v: str) -> int:
        return self._dims[str(v)]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self._dims[v] for v in self.vertex_ids)

    def neighbors(self, v: str) -> list[str]:
        return list(self._nbrs[str(v)])

    def degree(self, v: str) -> int:
        return len(self._nbrs[str(v)])

    def edge_index_pairs(self) -> list[tuple[int, int]]:
        return [(self._index[a], self._index[b]) for a, b in self.edges]

    def with_dims(self, dims: Mapping[str, int] | int) -> "SiteGraph":
        return SiteGraph(self.vertex_ids, self.edges, dims, self.sublattice, self.coords)

    # --- serialization ---------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "vertices": [
                {
                    "id": v,
                    "sublattice": self.sublattice.get(v),
                    "dim": self._dims[v],
                }
                for v in self.vertex_ids
            ],
            "edges": [[a, b] for a, b in self.edges],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SiteGraph":
        payload = json.loads(text)
        vertices = [item["id"] for item in payload["vertices"]]
        dims = {item["id"]: item.get("dim", 2) for item in payload["vertices"]}
        sub = {
            item["id"]: item["sublattice"]
            for item in payload["vertices"]
            if item.get("sublattice")
        }
        return cls(vertices, [tuple(e) for e in payload["edges"]], dims, sub)

    def __repr__(self) -> str:
        return f"SiteGraph({self.num_vertices} vertices, {len(self.edges)} edges)"


# ---------------------------------------------------------------------------
# builders


def chain(n: int) -> SiteGraph:
    """Open chain of n qubit sites labeled left to right."""
    if n < 1:
        raise ValueError("chain needs at least one site")
    ids = [str(i) for i in range(n)]
    edges = [(str(i), str(i + 1)) for i in range(n - 1)]
    coords = {str(i): (float(i), 0.0) for i in range(n)}
    return SiteGraph(ids, edges, coords=coords)


def square_patch(w: int, h: int) -> SiteGraph:
    """w x h open square grid, row-major ids; w(h-1) + h(w-1) edges."""
    if w < 1 or h < 1:
        raise ValueError("patch sides must be positive")
    ids = [str(r * w + c) for r in range(h) for c in range(w)]
    edges = []
    for r in range(h):
        for c in range(w):
            here = str(r * w + c)
            if c + 1 < w:
                edges.append((here, str(r * w + c + 1)))
            if r + 1 < h:
                edges.append((here, str((r + 1) * w + c)))
    coords = {str(r * w + c): (float(c), float(r)) for r in range(h) for c in range(w)}
    return SiteGraph(ids, edges, coords=coords)


def honeycomb_patch(rows: int, cols: int) -> SiteGraph:
    """Open honeycomb patch of rows x cols hexagons with A/B sublattice tags.

    Interior vertices are 3-regular; the tags 2-color the lattice.
    """
    if rows < 1 or cols < 1:
        raise ValueError("patch sides must be positive")
    g = nx.hexagonal_lattice_graph(rows, cols)
    nodes = sorted(g.nodes())
    ids = {node: str(i) for i, node in enumerate(nodes)}
    color = nx.bipartite.color(g)
    anchor = color[nodes[0]]
    sub = {ids[nd]: ("A" if color[nd] == anchor else "B") for nd in nodes}
    pos = nx.get_node_attributes(g, "pos")
    coords = {ids[nd]: (float(pos[nd][0]), float(pos[nd][1])) for nd in nodes}
    edges = [(ids[a], ids[b]) for a, b in sorted(g.edges())]
    return SiteGraph([ids[nd] for nd in nodes], edges, sublattice=sub, coords=coords)
