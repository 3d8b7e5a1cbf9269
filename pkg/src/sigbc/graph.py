"""Graph data model: construction, special topologies, structural predicates, file IO.

Nodes are 0-based contiguous integers. A graph is undirected and unweighted,
with no self-edges. A subset of nodes ("zealots") carry fixed opinions; the
remaining ("persuadable") nodes evolve under the opinion dynamics.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import networkx as nx
import numpy as np


class GraphValidationError(ValueError):
    """Raised when graph construction inputs violate an invariant."""


class GraphParseError(ValueError):
    """Raised when an edge or zealot file cannot be parsed."""


def _normalize_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with a zealot subset carrying fixed opinions."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    zealots: dict[int, float]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.node_count == other.node_count
                and set(self.edges) == set(other.edges)
                and self.zealots == other.zealots)

    def __hash__(self):
        return hash((self.node_count, frozenset(self.edges),
                     frozenset(self.zealots.items())))

    @property
    def zealot_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.zealots))

    @property
    def persuadables(self) -> tuple[int, ...]:
        z = self.zealots
        return tuple(i for i in range(self.node_count) if i not in z)

    def adjacency(self) -> np.ndarray:
        """Dense {0,1} adjacency matrix (read-only)."""
        a = np.zeros((self.node_count, self.node_count))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        a.setflags(write=False)
        return a

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.node_count, dtype=int)
        for i, j in self.edges:
            d[i] += 1
            d[j] += 1
        return d

    def neighbors(self, i: int) -> tuple[int, ...]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return tuple(sorted(out))

    def pinned_state(self, fill: float = 0.0) -> np.ndarray:
        """Opinion vector with zealot entries pinned and `fill` elsewhere."""
        x = np.full(self.node_count, float(fill))
        for z, op in self.zealots.items():
            x[z] = op
        return x

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges)
        return g

    def to_json(self) -> str:
        payload = {
            "n": self.node_count,
            "edges": [list(e) for e in self.edges],
            "zealots": {str(k): v for k, v in sorted(self.zealots.items())},
        }
        return json.dumps(payload)

    @staticmethod
    def from_json(text: str) -> "Graph":
        payload = json.loads(text)
        return build_graph(
            payload["n"],
            [tuple(e) for e in payload["edges"]],
            {int(k): float(v) for k, v in payload["zealots"].items()},
        )


@dataclass(frozen=True)
class PersuadablePartition:
    """Connected components of the induced persuadable subgraph."""

    components: tuple[frozenset[int], ...]


@dataclass(frozen=True)
class PairedCliques:
    """Two matched cliques with two global zealots, plus a class partition.

    `classes` records the partition used for the two-variable reduction:
    `aligned` splits by clique, `unaligned` splits each clique in half so
    that every node has clique_size/2 neighbors in each class.
    """

    graph: Graph
    classes: tuple[tuple[int, ...], tuple[int, ...]]
    alignment: str
    clique_size: int


def build_graph(node_count, edge_list, zealot_assignments) -> Graph:
    """Validate and normalize a graph description.

    Duplicate undirected edges are collapsed. Self-edges, out-of-range
    endpoints, and duplicate zealot ids raise GraphValidationError naming
    the offender.
    """
    n = int(node_count)
    if n <= 0:
        raise GraphValidationError(f"node_count must be positive, got {node_count}")

    edges = set()
    for i, j in edge_list:
        i, j = int(i), int(j)
        if i == j:
            raise GraphValidationError(f"self-edge ({i}, {j}) is not allowed")
        for v in (i, j):
            if not (0 <= v < n):
                raise GraphValidationError(
                    f"edge ({i}, {j}) has out-of-range endpoint {v} (node_count={n})")
        edges.add(_normalize_edge(i, j))

    zealots: dict[int, float] = {}
    items = (zealot_assignments.items()
             if isinstance(zealot_assignments, dict) else zealot_assignments)
    for z, op in items:
        z = int(z)
        if z in zealots:
            raise GraphValidationError(f"duplicate zealot id {z}")
        if not (0 <= z < n):
            raise GraphValidationError(f"zealot id {z} out of range (node_count={n})")
        op = float(op)
        if not math.isfinite(op):
            raise GraphValidationError(f"zealot {z} has non-finite opinion {op}")
        zealots[z] = op

    return Graph(n, tuple(sorted(edges)), zealots)


def path_graph(n_persuadable: int) -> Graph:
    """Path with n+2 nodes: zealots at the ends holding -(n+1)/2 and +(n+1)/2.

    The n persuadable nodes sit between the zealots, so the harmonic state is
    the unit-gap ramp x_j = -(n+1)/2 + j.
    """
    n = int(n_persuadable)
    if n < 1:
        raise GraphValidationError("path_graph requires at least one persuadable node")
    total = n + 2
    edges = [(i, i + 1) for i in range(total - 1)]
    half = (n + 1) / 2.0
    return build_graph(total, edges, {0: -half, total - 1: half})


def paired_cliques(clique_size: int, alignment: str = "aligned") -> PairedCliques:
    """Two cliques of `clique_size`, a perfect matching between them, and two
    opposing zealots (-1, +1) adjacent to every persuadable node.

    The matching pairs node j of clique A with node j of clique B. For the
    `unaligned` partition each clique is split into its lower and upper half,
    which (with the same-index matching) gives every node exactly
    clique_size/2 neighbors in each class; `aligned` partitions by clique.
    """
    k = int(clique_size)
    if k < 2:
        raise GraphValidationError("clique_size must be >= 2")
    if alignment not in ("aligned", "unaligned"):
        raise GraphValidationError(f"unknown alignment {alignment!r}")
    if alignment == "unaligned" and k % 2 != 0:
        raise GraphValidationError(
            "unaligned partition requires an even clique_size (equal split per clique)")

    n = 2 * k + 2
    z_minus, z_plus = 2 * k, 2 * k + 1
    edges = []
    for base in (0, k):
        for a in range(k):
            for b in range(a + 1, k):
                edges.append((base + a, base + b))
    edges += [(j, k + j) for j in range(k)]
    edges += [(z, j) for z in (z_minus, z_plus) for j in range(2 * k)]
    graph = build_graph(n, edges, {z_minus: -1.0, z_plus: 1.0})

    if alignment == "aligned":
        classes = (tuple(range(k)), tuple(range(k, 2 * k)))
    else:
        half = k // 2
        classes = (tuple(range(half)) + tuple(range(k, k + half)),
                   tuple(range(half, k)) + tuple(range(k + half, 2 * k)))
    return PairedCliques(graph, classes, alignment, k)


def is_balanced_exposure(graph: Graph) -> bool:
    """True iff every persuadable node touches zero or two zealots.

    Defined for graphs with exactly two zealots.
    """
    if len(graph.zealots) != 2:
        raise GraphValidationError("balanced exposure is defined for exactly two zealots")
    zset = set(graph.zealots)
    counts = {i: 0 for i in graph.persuadables}
    for i, j in graph.edges:
        if i in zset and j in counts:
            counts[j] += 1
        elif j in zset and i in counts:
            counts[i] += 1
    return all(c in (0, 2) for c in counts.values())


def persuadable_components(graph: Graph) -> PersuadablePartition:
    g = graph.to_networkx().subgraph(graph.persuadables)
    comps = tuple(frozenset(c) for c in nx.connected_components(g))
    return PersuadablePartition(tuple(sorted(comps, key=min)))


def single_gateway_blocks(graph: Graph) -> list[tuple[int, frozenset[int]]]:
    """Maximal zealot-free node sets whose every path to a zealot passes
    through one fixed gateway node.

    Returns (gateway, block) pairs; blocks nested inside larger reported
    blocks are dropped. The gateway may itself be a zealot (e.g. the center
    of a star), in which case the block is predicted to sit at that zealot's
    opinion at any steady state.
    """
    g = graph.to_networkx()
    if graph.node_count > 1 and not nx.is_connected(g):
        raise GraphValidationError("single_gateway_blocks requires a connected graph")
    zset = set(graph.zealots)
    candidates: list[tuple[int, frozenset[int]]] = []
    for v in range(graph.node_count):
        h = g.copy()
        h.remove_node(v)
        for comp in nx.connected_components(h):
            if not (comp & zset):
                candidates.append((v, frozenset(comp)))
    maximal = []
    for gw, block in candidates:
        if any(block < other for _, other in candidates):
            continue
        maximal.append((gw, block))
    return sorted(maximal, key=lambda t: (t[0], min(t[1])))


_NODES_COMMENT = re.compile(r"#\s*nodes\s*:\s*(\d+)")


def load_graph(edge_path, zealot_path) -> Graph:
    """Read a graph from an edge file ("i j" per line) and a zealot file
    ("i opinion" per line). '#' starts a comment; a "# nodes: N" comment in
    the edge file pins the node count (needed for trailing isolated nodes).
    """
    edges = []
    min_nodes = 0
    with open(edge_path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            m = _NODES_COMMENT.search(raw)
            if m:
                min_nodes = max(min_nodes, int(m.group(1)))
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError(
                    f"{edge_path}:{lineno}: expected 'i j', got {raw.strip()!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise GraphParseError(
                    f"{edge_path}:{lineno}: non-integer endpoint in {raw.strip()!r}") from None

    zealots = []
    with open(zealot_path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError(
                    f"{zealot_path}:{lineno}: expected 'i opinion', got {raw.strip()!r}")
            try:
                zealots.append((int(parts[0]), float(parts[1])))
            except ValueError:
                raise GraphParseError(
                    f"{zealot_path}:{lineno}: bad id or opinion in {raw.strip()!r}") from None

    ids = [v for e in edges for v in e] + [z for z, _ in zealots]
    n = max(max(ids, default=-1) + 1, min_nodes)
    if n == 0:
        raise GraphParseError(f"{edge_path}: no nodes found")
    return build_graph(n, edges, zealots)


def save_graph(graph: Graph, edge_path, zealot_path) -> None:
    with open(edge_path, "w") as fh:
        fh.write(f"# nodes: {graph.node_count}\n")
        for i, j in graph.edges:
            fh.write(f"{i} {j}\n")
    with open(zealot_path, "w") as fh:
        for z in sorted(graph.zealots):
            fh.write(f"{z} {graph.zealots[z]!r}\n")


def karate_club(opinion_low: float = -1.0, opinion_high: float = 1.0) -> Graph:
    """Zachary's karate club (34 nodes, unweighted) with the two faction hubs
    (nodes 0 and 33) designated as opposing zealots.

    The hub choice is a reconstruction: it is the conventional pair of
    faction leaders, not a documented placement.
    """
    g = nx.karate_club_graph()
    edges = [(int(i), int(j)) for i, j in g.edges()]
    return build_graph(34, edges, {0: opinion_low, 33: opinion_high})


def gateway_demo_graph() -> Graph:
    """Reference 12-node topology exercising both decomposition results.

    Persuadable triangle A-B-C touches zealots through A and B (two distinct
    routes, so no node upstream of C gates the whole triangle); a second
    triangle {D, E, F} attaches to the rest only through C, so its
    steady-state opinions must equal C's. Chain G-H-I touches different
    zealots and forms a second persuadable component that evolves
    independently.

    Node ids: A=0 B=1 C=2 D=3 E=4 F=5 G=6 H=7 I=8, zealots 9 (-1), 10 (+1),
    11 (+0.5).
    """
    edges = [
        (9, 0), (10, 1), (0, 1), (0, 2), (1, 2),   # triangle A-B-C, two zealots
        (2, 3), (3, 4), (4, 5), (5, 3),            # gateway C -> triangle D,E,F
        (11, 6), (6, 7), (7, 8), (10, 6),          # second component G-H-I
    ]
    return build_graph(12, edges, {9: -1.0, 10: 1.0, 11: 0.5})
