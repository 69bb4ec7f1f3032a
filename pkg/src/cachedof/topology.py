"""Grid cellular topology and general bipartite user/BS graphs.

Users sit at odd/odd lattice coordinates, base stations at even/even ones;
each user talks to the four BSs on the corners of its cell.  General
topologies (opaque string ids, arbitrary adjacency) are supported for
converse analysis of non-grid networks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

GRID = "grid"
GENERAL = "general"

# residues (p mod 4, q mod 4) -> BS class, and (i mod 4, j mod 4) -> user class
_BS_CLASS = {(0, 0): 1, (2, 0): 2, (0, 2): 3, (2, 2): 4}
_USER_CLASS = {(1, 1): 1, (3, 1): 2, (1, 3): 3, (3, 3): 4}


class TopologyError(ValueError):
    """Malformed topology, document, or query."""


@dataclass(frozen=True)
class GridSpec:
    """Cell counts plus torus flag for a rectangular grid network.

    ``origin_cells`` shifts the lattice so small example networks can use
    the same coordinates as hand-worked derivations; wrap grids always use
    the canonical origin.
    """

    width_cells: int
    height_cells: int
    wrap: bool = True
    origin_cells: tuple = (0, 0)

    def __post_init__(self):
        if self.width_cells < 1 or self.height_cells < 1:
            raise TopologyError("grid needs at least one cell per axis")
        if self.wrap:
            # BS classes repeat with period 4, so the torus circumference 2W
            # must be divisible by 4; below 4 cells per axis distinct users
            # share identical neighbor sets.
            if self.width_cells % 2 or self.height_cells % 2:
                raise TopologyError("wrap grid needs even cell counts")
            if self.width_cells < 4 or self.height_cells < 4:
                raise TopologyError("wrap grid needs at least 4 cells per axis")
            if tuple(self.origin_cells) != (0, 0):
                raise TopologyError("wrap grid must use origin (0, 0)")

    @property
    def period(self):
        """Coordinate period (2W, 2H) of the torus."""
        return 2 * self.width_cells, 2 * self.height_cells


class Topology:
    """Immutable bipartite user-BS graph, queried but never mutated."""

    __slots__ = ("kind", "users", "bss", "grid", "_edges", "_redges")

    def __init__(self, kind, users, bss, edges, grid=None):
        users = frozenset(users)
        bss = frozenset(bss)
        fwd = {}
        rev = {b: set() for b in bss}
        for u, nbrs in edges.items():
            if u not in users:
                raise TopologyError(f"edge references unknown user {u!r}")
            nbrs = frozenset(nbrs)
            for b in nbrs:
                if b not in bss:
                    raise TopologyError(f"edge references unknown BS {b!r}")
                rev[b].add(u)
            fwd[u] = nbrs
        for u in users:
            if not fwd.get(u):
                raise TopologyError(f"user {u!r} has no serving BS")
        self.kind = kind
        self.users = users
        self.bss = bss
        self.grid = grid
        self._edges = fwd
        self._redges = {b: frozenset(v) for b, v in rev.items()}

    def neighbors_of_user(self, u):
        """BS set M_u serving user ``u``."""
        try:
            return self._edges[u]
        except KeyError:
            raise TopologyError(f"unknown user {u!r}") from None

    def users_of_bs(self, b):
        try:
            return self._redges[b]
        except KeyError:
            raise TopologyError(f"unknown BS {b!r}") from None

    def has_edge(self, u, b):
        return u in self._edges and b in self._edges[u]

    def edge_list(self):
        """All (user, bs) pairs in canonical order."""
        return [
            (u, b)
            for u in sorted(self.users, key=node_key)
            for b in sorted(self._edges[u], key=node_key)
        ]

    def reduce_user(self, coord):
        """Wrap a user coordinate onto the torus (identity off-torus)."""
        return self._reduce(coord)

    def reduce_bs(self, coord):
        return self._reduce(coord)

    def _reduce(self, coord):
        if self.kind == GRID and self.grid.wrap:
            px, py = self.grid.period
            return (coord[0] % px, coord[1] % py)
        return tuple(coord)

    def to_document(self):
        doc = {
            "users": [_encode(u) for u in sorted(self.users, key=node_key)],
            "bss": [_encode(b) for b in sorted(self.bss, key=node_key)],
            "edges": [[_encode(u), _encode(b)] for u, b in self.edge_list()],
        }
        if self.kind == GRID:
            doc["kind"] = GRID
            doc["width_cells"] = self.grid.width_cells
            doc["height_cells"] = self.grid.height_cells
            doc["wrap"] = self.grid.wrap
            if tuple(self.grid.origin_cells) != (0, 0):
                doc["origin_cells"] = list(self.grid.origin_cells)
        return doc

    def __repr__(self):
        return f"Topology({self.kind}, {len(self.users)} users, {len(self.bss)} BSs)"


def node_key(node):
    """Sort key usable for mixed coordinate/string node ids."""
    if isinstance(node, tuple):
        return (0, node)
    return (1, str(node))


def node_token(node):
    """Stable textual token for a node id (used in keys and reports)."""
    if isinstance(node, tuple):
        return f"({node[0]},{node[1]})"
    return str(node)


def _encode(node):
    return list(node) if isinstance(node, tuple) else node


def _decode(node):
    if isinstance(node, list):
        if len(node) != 2 or not all(isinstance(c, int) for c in node):
            raise TopologyError(f"bad coordinate node {node!r}")
        return tuple(node)
    if isinstance(node, str):
        return node
    raise TopologyError(f"bad node id {node!r}")


def make_grid(spec: GridSpec) -> Topology:
    """Build the square-lattice cellular network described by ``spec``.

    Users occupy the cell centers (odd coordinates) and are connected to the
    four corner BSs; with ``wrap`` the lattice closes into a torus and
    coordinates are reduced modulo (2W, 2H).
    """
    ox, oy = spec.origin_cells
    users = [
        (2 * (ox + cx) + 1, 2 * (oy + cy) + 1)
        for cx in range(spec.width_cells)
        for cy in range(spec.height_cells)
    ]
    if spec.wrap:
        px, py = spec.period
        bss = {(2 * cx, 2 * cy) for cx in range(spec.width_cells) for cy in range(spec.height_cells)}
        edges = {
            (i, j): {((i + di) % px, (j + dj) % py) for di in (-1, 1) for dj in (-1, 1)}
            for (i, j) in users
        }
    else:
        bss = {
            (2 * (ox + cx), 2 * (oy + cy))
            for cx in range(spec.width_cells + 1)
            for cy in range(spec.height_cells + 1)
        }
        edges = {
            (i, j): {(i + di, j + dj) for di in (-1, 1) for dj in (-1, 1)}
            for (i, j) in users
        }
    return Topology(GRID, users, bss, edges, grid=spec)


def bs_class(b) -> int:
    """BS class k in {1,2,3,4} from the coordinate residues mod 4."""
    p, q = b
    if p % 2 or q % 2:
        raise TopologyError(f"BS coordinate must be even/even, got {b!r}")
    return _BS_CLASS[(p % 4, q % 4)]


def user_class(u) -> int:
    """User class r in {1,2,3,4} from the coordinate residues mod 4."""
    i, j = u
    if i % 2 == 0 or j % 2 == 0:
        raise TopologyError(f"user coordinate must be odd/odd, got {u!r}")
    return _USER_CLASS[(i % 4, j % 4)]


def load_topology(document) -> Topology:
    """Decode a topology document (dict or JSON string).

    Grid documents are rebuilt through :func:`make_grid`; plain documents
    become general-kind topologies with opaque node ids.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TopologyError(f"invalid topology JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise TopologyError("topology document must be a JSON object")
    if document.get("kind") == GRID:
        try:
            spec = GridSpec(
                width_cells=document["width_cells"],
                height_cells=document["height_cells"],
                wrap=document["wrap"],
                origin_cells=tuple(document.get("origin_cells", (0, 0))),
            )
        except KeyError as exc:
            raise TopologyError(f"grid document missing key {exc}") from exc
        return make_grid(spec)
    try:
        users = [_decode(u) for u in document["users"]]
        bss = [_decode(b) for b in document["bss"]]
        raw_edges = document["edges"]
    except KeyError as exc:
        raise TopologyError(f"topology document missing key {exc}") from exc
    edges = {u: set() for u in users}
    for pair in raw_edges:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise TopologyError(f"bad edge entry {pair!r}")
        u, b = _decode(pair[0]), _decode(pair[1])
        if u not in edges:
            raise TopologyError(f"edge references unknown user {u!r}")
        edges[u].add(b)
    return Topology(GENERAL, users, bss, edges)
