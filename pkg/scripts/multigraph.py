#!/usr/bin/env python3
"""
Undirected multigraph with creation-ordered vertices.
Vertices are the creation indices 1..n. Edges carry a multiplicity and never
join a vertex to itself. Graphs are immutable once built, so the same instance
can be shared between worker processes and experiments.
"""

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

Edge = Tuple[int, int]


class VertexRangeError(ValueError):
    """Vertex id outside 1..n"""


@dataclass(frozen=True)
class GraphMeta:
    model: str = 'custom'
    alpha: float = 0.0
    seed: Optional[int] = None


class Multigraph:
    """Immutable multigraph on vertices 1..n.

    ``targets`` optionally records, for every vertex v >= 2, the ordered tuple
    of older vertices its m edges were attached to. Generated graphs keep it so
    that intermediate degrees deg_n(k, i) and the nested prefixes G_1 ⊂ G_2 ⊂ ...
    can be recovered; hand-built graphs derive it from the edge set.
    """

    __slots__ = ('n', 'm', 'meta', '_edges', '_adj', '_targets')

    def __init__(self, n: int, edges: Mapping[Edge, int], m: int = 1,
                 meta: Optional[GraphMeta] = None,
                 targets: Optional[Sequence[Tuple[int, ...]]] = None):
        if n < 0:
            raise ValueError(f"vertex count must be nonnegative, got {n}")
        self.n = n
        self.m = m
        self.meta = meta or GraphMeta()
        self._edges: Dict[Edge, int] = {}
        self._adj: List[Dict[int, int]] = [dict() for _ in range(n + 1)]

        for (u, v), mult in edges.items():
            if mult < 1:
                raise ValueError(f"edge {u}-{v} has multiplicity {mult}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            a, b = (u, v) if u < v else (v, u)
            self._check_vertex(a)
            self._check_vertex(b)
            self._edges[(a, b)] = self._edges.get((a, b), 0) + mult
            self._adj[a][b] = self._adj[a].get(b, 0) + mult
            self._adj[b][a] = self._adj[b].get(a, 0) + mult

        if targets is not None:
            if len(targets) != n + 1:
                raise ValueError("targets must have one entry per vertex plus the unused slot 0")
            self._targets = tuple(tuple(t) for t in targets)
        else:
            self._targets = None

    @classmethod
    def from_targets(cls, targets: Sequence[Sequence[int]], m: int,
                     meta: Optional[GraphMeta] = None) -> 'Multigraph':
        """Build a grown graph from the attachment record targets[v] (v = 1..n)"""
        n = len(targets) - 1
        edges: Dict[Edge, int] = {}
        for v in range(2, n + 1):
            for t in targets[v]:
                if not 1 <= t < v:
                    raise ValueError(f"vertex {v} attached to {t}, outside [1, {v - 1}]")
                edges[(t, v)] = edges.get((t, v), 0) + 1
        return cls(n, edges, m=m, meta=meta, targets=targets)

    def _check_vertex(self, v: int):
        if not 1 <= v <= self.n:
            raise VertexRangeError(f"vertex {v} outside 1..{self.n}")

    # -- read access -------------------------------------------------------

    @property
    def edges(self) -> Dict[Edge, int]:
        return dict(self._edges)

    def edge_items(self) -> List[Tuple[int, int, int]]:
        """Edges as sorted (u, v, multiplicity) triples with u < v"""
        return [(u, v, mult) for (u, v), mult in sorted(self._edges.items())]

    def adjacency(self, v: int) -> Mapping[int, int]:
        self._check_vertex(v)
        return self._adj[v]

    def neighbors(self, v: int) -> List[int]:
        self._check_vertex(v)
        return sorted(self._adj[v])

    def multiplicity(self, u: int, v: int) -> int:
        self._check_vertex(u)
        self._check_vertex(v)
        return self._adj[u].get(v, 0)

    def vertices(self) -> range:
        return range(1, self.n + 1)

    @property
    def edge_count(self) -> int:
        return sum(self._edges.values())

    @property
    def has_history(self) -> bool:
        return self._targets is not None

    def targets(self, v: int) -> Tuple[int, ...]:
        """Older vertices that v attached to, in attachment order"""
        self._check_vertex(v)
        if self._targets is not None:
            return self._targets[v]
        older = []
        for u in sorted(self._adj[v]):
            if u < v:
                older.extend([u] * self._adj[v][u])
        return tuple(older)

    def attachment_array(self) -> np.ndarray:
        """(n-1, m) array of attachment targets for vertices 2..n"""
        if self._targets is None:
            raise ValueError("graph carries no attachment history")
        if self.n < 2:
            return np.zeros((0, self.m), dtype=np.int64)
        return np.asarray(self._targets[2:], dtype=np.int64).reshape(self.n - 1, self.m)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multigraph):
            return NotImplemented
        return (self.n, self.m, self.meta, self._edges) == (other.n, other.m, other.meta, other._edges)

    def __hash__(self) -> int:
        return hash((self.n, self.m, frozenset(self._edges.items())))

    def __repr__(self) -> str:
        return f"Multigraph(n={self.n}, m={self.m}, edges={self.edge_count}, model={self.meta.model})"


@dataclass(frozen=True)
class InducedBall:
    """Induced subgraph on all vertices within ``depth`` of a source set"""
    depth: int
    dist: Mapping[int, int]
    edges: Mapping[Edge, int]

    @property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(sorted(self.dist))

    def adjacency(self) -> Dict[int, Dict[int, int]]:
        adj: Dict[int, Dict[int, int]] = {v: {} for v in self.dist}
        for (u, v), mult in self.edges.items():
            adj[u][v] = mult
            adj[v][u] = mult
        return adj

    def to_multigraph(self) -> Tuple[Multigraph, Dict[int, int]]:
        """Relabel to 1..N in increasing vertex order; returns graph and old->new map"""
        relabel = {v: i for i, v in enumerate(self.vertices, start=1)}
        edges = {(relabel[u], relabel[v]): mult for (u, v), mult in self.edges.items()}
        return Multigraph(len(relabel), edges), relabel


@dataclass(frozen=True)
class RootedSubgraph(InducedBall):
    """B_r(v): the ball of radius ``depth`` around ``root``"""
    root: int = 0


@dataclass(frozen=True)
class Neighborhood(InducedBall):
    """B_r(S) for a vertex set S"""
    sources: FrozenSet[int] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Cycle:
    """Simple cycle in canonical orientation.

    ``vertices`` starts at the smallest vertex and continues towards the
    smaller of its two cycle neighbours. ``multiplicity`` is the edge
    multiplicity μ for a length-2 cycle and the product of edge
    multiplicities along the cycle otherwise.
    """
    vertices: Tuple[int, ...]
    multiplicity: int = 1

    @property
    def length(self) -> int:
        return len(self.vertices)

    @property
    def count(self) -> int:
        """Number of edge-distinct cycles on this vertex sequence"""
        if self.length == 2:
            return self.multiplicity * (self.multiplicity - 1) // 2
        return self.multiplicity


def degree(g: Multigraph, v: int, upto: Optional[Tuple[int, int]] = None) -> int:
    """Multiplicity-counted degree of v.

    With ``upto=(w, i)`` the degree is taken in the state just before the i-th
    edge of vertex w was assigned (deg_w(v, i) of the sequential rule).
    """
    g._check_vertex(v)
    if upto is None:
        return sum(g._adj[v].values())

    w, i = upto
    g._check_vertex(w)
    if i < 1:
        raise ValueError(f"edge index must be >= 1, got {i}")
    count = 0
    for x in range(2, w):
        placed = g.targets(x)
        count += placed.count(v)
        if x == v:
            count += len(placed)
    earlier = g.targets(w)[:i - 1]
    count += earlier.count(v)
    if v == w:
        count += len(earlier)
    return count


def degrees(g: Multigraph) -> List[int]:
    """Degrees of vertices 1..n (index 0 is vertex 1)"""
    return [sum(g._adj[v].values()) for v in g.vertices()]


def multiplicity(g: Multigraph, u: int, v: int) -> int:
    return g.multiplicity(u, v)


def neighbors(g: Multigraph, v: int) -> List[int]:
    return g.neighbors(v)


def _bfs(g: Multigraph, sources: Iterable[int], r: int) -> Dict[int, int]:
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    dist: Dict[int, int] = {}
    queue = deque()
    for s in sources:
        g._check_vertex(s)
        if s not in dist:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        d = dist[u]
        if d == r:
            continue
        for w in g._adj[u]:
            if w not in dist:
                dist[w] = d + 1
                queue.append(w)
    return dist


def bfs_distances(g: Multigraph, sources: Iterable[int], r: int) -> Dict[int, int]:
    """Distance from the nearest source for every vertex within r"""
    return _bfs(g, sources, r)


def _induced_edges(g: Multigraph, vertex_set: Mapping[int, int]) -> Dict[Edge, int]:
    edges: Dict[Edge, int] = {}
    for u in vertex_set:
        for w, mult in g._adj[u].items():
            if u < w and w in vertex_set:
                edges[(u, w)] = mult
    return edges


def ball(g: Multigraph, v: int, r: int) -> RootedSubgraph:
    """B_r(g, v) with distance labels; distances ignore multiplicity"""
    dist = _bfs(g, (v,), r)
    return RootedSubgraph(depth=r, dist=dist, edges=_induced_edges(g, dist), root=v)


def set_ball(g: Multigraph, sources: Iterable[int], r: int) -> Neighborhood:
    """B_r(g, S) = {u : d(u, s) <= r for some s in S}"""
    sources = frozenset(sources)
    dist = _bfs(g, sorted(sources), r)
    return Neighborhood(depth=r, dist=dist, edges=_induced_edges(g, dist), sources=sources)


def induced_subgraph(g: Multigraph, vertices: Iterable[int]) -> Multigraph:
    """Induced subgraph relabelled to 1..N in increasing vertex order"""
    keep = sorted(set(vertices))
    for v in keep:
        g._check_vertex(v)
    index = {v: i for i, v in enumerate(keep, start=1)}
    edges = {(index[u], index[w]): mult for (u, w), mult in g._edges.items()
             if u in index and w in index}
    return Multigraph(len(keep), edges, m=g.m, meta=g.meta)


def _canonical_rotation(cycle: Sequence[int]) -> Tuple[int, ...]:
    i = min(range(len(cycle)), key=cycle.__getitem__)
    rotated = list(cycle[i:]) + list(cycle[:i])
    if len(rotated) > 2 and rotated[1] > rotated[-1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return tuple(rotated)


def _cycle_multiplicity(g: Multigraph, cycle: Sequence[int]) -> int:
    product = 1
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        product *= g._adj[a][b]
    return product


def _paths_below(g: Multigraph, start: int, end: int, edges_needed: int,
                 bound: int) -> Iterator[List[int]]:
    """Simple paths start..end with ``edges_needed`` edges through vertices < bound"""
    adj = g._adj
    if edges_needed == 1:
        if end in adj[start]:
            yield [start, end]
        return
    if edges_needed == 2:
        small, large = (start, end) if len(adj[start]) <= len(adj[end]) else (end, start)
        for x in adj[small]:
            if x < bound and x != start and x != end and x in adj[large]:
                yield [start, x, end]
        return

    path = [start]
    on_path = {start, end}

    def extend(u: int, remaining: int):
        if remaining == 1:
            if end in adj[u]:
                yield path + [end]
            return
        for x in adj[u]:
            if x < bound and x not in on_path:
                path.append(x)
                on_path.add(x)
                yield from extend(x, remaining - 1)
                on_path.discard(x)
                path.pop()

    yield from extend(start, edges_needed)


def cycles_closed_at(g: Multigraph, v: int, length: int) -> List[Cycle]:
    """Cycles of exactly ``length`` whose largest vertex is v"""
    g._check_vertex(v)
    if length < 2:
        raise ValueError(f"cycle length must be >= 2, got {length}")
    adj = g._adj
    older = sorted(u for u in adj[v] if u < v)

    if length == 2:
        return [Cycle((u, v), adj[v][u]) for u in older if adj[v][u] >= 2]

    found = []
    for a, b in combinations(older, 2):
        if len(adj[a]) > len(adj[b]):
            start, end = b, a
        else:
            start, end = a, b
        for path in _paths_below(g, start, end, length - 2, v):
            vertices = _canonical_rotation([v] + path)
            found.append(Cycle(vertices, _cycle_multiplicity(g, vertices)))
    return sorted(found, key=lambda c: c.vertices)


def enumerate_cycles(g: Multigraph, max_len: int) -> List[Cycle]:
    """Every simple cycle of length <= max_len exactly once.

    Each cycle is found from its largest vertex, which fixes the rotation;
    the a < b ordering of the two older endpoints fixes the reflection.
    """
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    cycles = []
    for v in g.vertices():
        for length in range(2, max_len + 1):
            cycles.extend(cycles_closed_at(g, v, length))
    cycles.sort(key=lambda c: (c.length, c.vertices))
    return cycles


def prefix(g: Multigraph, n: int) -> Multigraph:
    """The grown graph G_n: vertices 1..n and the edges among them"""
    if not 0 <= n <= g.n:
        raise VertexRangeError(f"prefix size {n} outside 0..{g.n}")
    if n == g.n:
        return g
    if g.has_history:
        return Multigraph.from_targets(g._targets[:n + 1], g.m, g.meta)
    edges = {(u, v): mult for (u, v), mult in g._edges.items() if v <= n}
    return Multigraph(n, edges, m=g.m, meta=g.meta)


def relabel(g: Multigraph, perm: Mapping[int, int]) -> Multigraph:
    """Isomorphic copy with vertex v renamed perm[v]; perm must permute 1..n"""
    if sorted(perm) != list(g.vertices()) or sorted(perm.values()) != list(g.vertices()):
        raise ValueError("perm must be a permutation of 1..n")
    edges = {(perm[u], perm[v]): mult for (u, v), mult in g._edges.items()}
    return Multigraph(g.n, edges, m=g.m, meta=g.meta)


def to_networkx(g: Multigraph) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(g.vertices())
    for u, v, mult in g.edge_items():
        for _ in range(mult):
            graph.add_edge(u, v)
    return graph


# -- small constructors ------------------------------------------------------

def from_edges(n: int, edge_list: Iterable[Sequence[int]], m: int = 1,
               meta: Optional[GraphMeta] = None) -> Multigraph:
    """Edges given as (u, v) or (u, v, multiplicity); repeats add up"""
    edges: Dict[Edge, int] = {}
    for item in edge_list:
        u, v = item[0], item[1]
        mult = item[2] if len(item) > 2 else 1
        key = (u, v) if u < v else (v, u)
        edges[key] = edges.get(key, 0) + mult
    return Multigraph(n, edges, m=m, meta=meta)


def empty_graph(n: int) -> Multigraph:
    return Multigraph(n, {})


def path_graph(n: int) -> Multigraph:
    return from_edges(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Multigraph:
    if n < 3:
        raise ValueError("a simple cycle needs at least 3 vertices")
    return from_edges(n, [(i, i + 1) for i in range(1, n)] + [(1, n)])


def complete_graph(n: int) -> Multigraph:
    return from_edges(n, combinations(range(1, n + 1), 2))


def star_graph(leaves: int) -> Multigraph:
    """Centre 1 joined to vertices 2..leaves+1"""
    return from_edges(leaves + 1, [(1, i) for i in range(2, leaves + 2)])
