"""Graph representation, parsing, shortest paths, and complete-digraph augmentation.

Graphs are simple, undirected, and connected; nodes are dense 0-based indices
so every downstream structure is a plain array. The augmentation step turns a
graph into the complete bidirectional digraph whose per-edge feature is the
hop distance between its endpoints, which is what the neural layout model
consumes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import errors
from ._rng import stream

SYNTHETIC_KINDS = ("path", "cycle", "grid", "random_tree", "random_connected")


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected connected graph.

    Attributes
    ----------
    n : int
        Node count; node ids are 0..n-1.
    edges : tuple of (int, int)
        Sorted unordered pairs, each with u < v, no duplicates, no loops.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    @staticmethod
    def from_edges(n: int, pairs) -> "Graph":
        """Build a validated graph from an iterable of (u, v) pairs."""
        if n < 1:
            raise errors.InvalidSize(f"node count must be >= 1, got {n}")
        seen = set()
        for u, v in pairs:
            if u == v:
                raise errors.SelfLoop(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise errors.UnknownNodeRef(f"edge ({u}, {v}) outside [0, {n})")
            seen.add((min(u, v), max(u, v)))
        g = Graph(n=n, edges=tuple(sorted(seen)))
        if not g.is_connected():
            raise errors.DisconnectedGraph(f"graph with {n} nodes is not connected")
        return g

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Adjacency lists, each sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.neighbors], dtype=np.int64)

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = [False] * self.n
        seen[0] = True
        queue = deque([0])
        reached = 1
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    reached += 1
                    queue.append(w)
        return reached == self.n


@dataclass(frozen=True)
class AugmentedGraph:
    """Complete bidirectional digraph with hop-distance edge features.

    Directed edges are stored destination-major (all edges into node 0 first,
    then node 1, ...), sources ascending within each destination, so each
    node's n-1 incoming edges form one contiguous block.

    Attributes
    ----------
    base : Graph
    src, dst : int64 arrays of length n(n-1)
    dist : float64 array, dist[k] = hop distance between src[k] and dst[k]
    is_real : bool array, True iff {src[k], dst[k]} is an edge of base
    """

    base: Graph
    src: np.ndarray
    dst: np.ndarray
    dist: np.ndarray
    is_real: np.ndarray

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])


def parse_edge_list(text: str) -> Graph:
    """Parse whitespace-separated "u v" lines into a graph.

    Lines starting with '#' and blank lines are ignored. Node count is
    1 + max id; duplicate edges (either direction) collapse to one.
    """
    edges = []
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise errors.MalformedLine(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise errors.MalformedLine(f"line {lineno}: non-integer id in {raw!r}") from None
        if u < 0 or v < 0:
            raise errors.MalformedLine(f"line {lineno}: negative id in {raw!r}")
        if u == v:
            raise errors.SelfLoop(f"line {lineno}: self-loop at node {u}")
        edges.append((u, v))
        max_id = max(max_id, u, v)
    if max_id < 0:
        raise errors.EmptyInput("no edges found in edge-list input")
    return Graph.from_edges(max_id + 1, edges)


def format_edge_list(g: Graph) -> str:
    """Canonical edge-list text: one "u v" line per edge, sorted."""
    return "".join(f"{u} {v}\n" for u, v in g.edges)


def parse_graphml(text: str) -> Graph:
    """Parse a minimal GraphML subset: <node id> and <edge source target>.

    External ids are mapped to dense indices in document order; attributes,
    keys, and directedness declarations are ignored.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise errors.XmlParseError(f"not well-formed XML: {exc}") from None

    def local(tag: str) -> str:
        return tag.rsplit("}", 1)[-1]

    graph_el = None
    for el in root.iter():
        if local(el.tag) == "graph":
            graph_el = el
            break
    if graph_el is None:
        raise errors.XmlParseError("document contains no <graph> element")

    index: dict[str, int] = {}
    edges = []
    for el in graph_el.iter():
        name = local(el.tag)
        if name == "node":
            node_id = el.get("id")
            if node_id is None:
                raise errors.XmlParseError("<node> without id attribute")
            if node_id not in index:
                index[node_id] = len(index)
        elif name == "edge":
            s, t = el.get("source"), el.get("target")
            if s is None or t is None:
                raise errors.XmlParseError("<edge> without source/target")
            for ref in (s, t):
                if ref not in index:
                    raise errors.UnknownNodeRef(f"edge references undeclared node {ref!r}")
            if s == t:
                raise errors.SelfLoop(f"self-loop at node {s!r}")
            edges.append((index[s], index[t]))
    if not index:
        raise errors.EmptyInput("GraphML document declares no nodes")
    return Graph.from_edges(len(index), edges)


def format_graphml(g: Graph) -> str:
    """Minimal GraphML document for the graph (nodes n0..n{n-1})."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <graph id="G" edgedefault="undirected">',
    ]
    lines += [f'    <node id="n{i}"/>' for i in range(g.n)]
    lines += [f'    <edge source="n{u}" target="n{v}"/>' for u, v in g.edges]
    lines += ["  </graph>", "</graphml>", ""]
    return "\n".join(lines)


def shortest_paths(g: Graph) -> np.ndarray:
    """All-pairs hop distances via one BFS per source node.

    Returns an n x n symmetric int64 matrix with zero diagonal; all entries
    are finite because graphs are connected by construction.
    """
    n = g.n
    adj = g.neighbors
    d = np.zeros((n, n), dtype=np.int64)
    for source in range(n):
        dist = d[source]
        seen = np.zeros(n, dtype=bool)
        seen[source] = True
        queue = deque([source])
        while queue:
            u = queue.popleft()
            du = dist[u]
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    dist[w] = du + 1
                    queue.append(w)
    return d


def augment(g: Graph, d: np.ndarray) -> AugmentedGraph:
    """Complete digraph over g's nodes with hop-distance edge features."""
    n = g.n
    d = np.asarray(d)
    if d.shape != (n, n):
        raise errors.DimensionMismatch(f"distance matrix {d.shape} for graph with n={n}")
    # destination-major ordering; each dst owns one contiguous block of n-1 rows
    dst = np.repeat(np.arange(n, dtype=np.int64), n - 1) if n > 1 else np.zeros(0, np.int64)
    src = np.concatenate(
        [np.delete(np.arange(n, dtype=np.int64), v) for v in range(n)]
    ) if n > 1 else np.zeros(0, np.int64)
    dist = d[src, dst].astype(np.float64)
    is_real = dist == 1.0
    return AugmentedGraph(base=g, src=src, dst=dst, dist=dist, is_real=is_real)


def generate_synthetic(kind: str, n: int, seed: int) -> Graph:
    """Deterministic synthetic connected graph of the requested family.

    Families: path, cycle, grid (rows = floor(sqrt(n)), row-major, possibly
    partial last row), random_tree (random recursive tree), random_connected
    (random tree plus floor(n/2) extra non-tree edges).
    """
    if n < 1:
        raise errors.InvalidSize(f"node count must be >= 1, got {n}")
    if kind not in SYNTHETIC_KINDS:
        raise errors.InvalidSize(f"unknown synthetic kind {kind!r}")
    rng = stream(seed, f"synthetic/{kind}")
    edges: list[tuple[int, int]] = []
    if kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        edges = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            edges.append((0, n - 1))
    elif kind == "grid":
        rows = max(1, int(np.sqrt(n)))
        cols = -(-n // rows)
        for i in range(n):
            if (i + 1) % cols != 0 and i + 1 < n:
                edges.append((i, i + 1))
            if i + cols < n:
                edges.append((i, i + cols))
    elif kind in ("random_tree", "random_connected"):
        for i in range(1, n):
            edges.append((int(rng.integers(0, i)), i))
        if kind == "random_connected" and n > 2:
            present = {(min(u, v), max(u, v)) for u, v in edges}
            for _ in range(n // 2):
                u = int(rng.integers(0, n))
                v = int(rng.integers(0, n))
                key = (min(u, v), max(u, v))
                if u != v and key not in present:
                    present.add(key)
                    edges.append(key)
    return Graph.from_edges(n, edges)


def synthetic_dataset(kinds, count: int, n_min: int, n_max: int, seed: int) -> list[Graph]:
    """Deterministic mixed dataset: graph i draws its family round-robin
    from `kinds` and its size uniformly from [n_min, n_max]."""
    kinds = tuple(kinds)
    if not kinds:
        raise errors.InvalidSize("need at least one synthetic kind")
    for kind in kinds:
        if kind not in SYNTHETIC_KINDS:
            raise errors.InvalidSize(f"unknown synthetic kind {kind!r}")
    if count < 1 or n_min < 1 or n_max < n_min:
        raise errors.InvalidSize("need count >= 1 and 1 <= n_min <= n_max")
    rng = stream(seed, "dataset")
    graphs = []
    for i in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        graphs.append(generate_synthetic(kinds[i % len(kinds)], n, seed=int(rng.integers(0, 2**31))))
    return graphs
