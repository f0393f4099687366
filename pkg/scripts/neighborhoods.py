#!/usr/bin/env python3
"""
Neighbourhood statistics behind the limit law.

- canonical codes of rooted (multi)trees, with edge multiplicities as labels
- cycle components: bounded cycles chained when they lie within distance r
- the cycle profile Λ(G), counting components per canonical class
- the census of vertices whose r-ball meets no bounded cycle
- the recursive infinite-face test on rooted trees
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ef_game import partition_by_equivalence
from multigraph import (Cycle, InducedBall, Multigraph, Neighborhood, RootedSubgraph, ball,
                        bfs_distances, enumerate_cycles, set_ball)

CanonicalCode = bytes
COMPONENT_PREFIX = b'C'


class CyclicNeighborhoodError(ValueError):
    """A tree was required but the neighbourhood contains a cycle"""


def _require_tree(t: InducedBall):
    # the ball is connected, so it is a tree iff it has |V| - 1 distinct edges
    if len(t.edges) != len(t.dist) - 1:
        raise CyclicNeighborhoodError(
            f"neighbourhood with {len(t.dist)} vertices and {len(t.edges)} edges is not a tree")


def _subtree_code(adj: Mapping[int, Mapping[int, int]], v: int, parent: Optional[int],
                  depth_left: Optional[int] = None, cap: Optional[int] = None,
                  skip: FrozenSet[int] = frozenset()) -> CanonicalCode:
    """AHU code of the tree hanging below v; each child entry is prefixed by its edge multiplicity"""
    entries = []
    if depth_left is None or depth_left > 0:
        below = None if depth_left is None else depth_left - 1
        for c, mult in adj[v].items():
            if c == parent or c in skip:
                continue
            entries.append(b"%d" % mult + _subtree_code(adj, c, v, below, cap, skip))
    entries.sort()
    if cap is not None:
        capped, seen = [], Counter()
        for entry in entries:
            seen[entry] += 1
            if seen[entry] <= cap:
                capped.append(entry)
        entries = capped
    return b"(" + b"".join(entries) + b")"


def canonical_rooted_tree(t: RootedSubgraph) -> CanonicalCode:
    """Code equal for two balls iff they are isomorphic as rooted multitrees"""
    _require_tree(t)
    return _subtree_code(t.adjacency(), t.root, None)


def truncated_code(t: RootedSubgraph, k: int) -> CanonicalCode:
    """Rooted code with identical child subtrees counted at most k times per vertex"""
    _require_tree(t)
    return _subtree_code(t.adjacency(), t.root, None, cap=k)


def radius_for_rank(k: int) -> int:
    """(3^k + 1) / 2, the neighbourhood depth that decides rank-k sentences"""
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    return (3 ** k + 1) // 2


# -- canonical labelling of small labelled multigraphs -------------------------

class _Canonizer:
    """Individualisation-refinement with automorphism pruning.

    The certificate is the lexicographically smallest (labels, edges)
    encoding over all discrete colourings reachable by refinement.
    """

    def __init__(self, adj: Mapping[int, Mapping[int, int]], labels: Mapping[int, Any]):
        vertices = sorted(adj)
        index = {v: i for i, v in enumerate(vertices)}
        self.size = len(vertices)
        self.labels = [labels[v] for v in vertices]
        self.neighbors = [[(index[u], mult) for u, mult in adj[v].items()] for v in vertices]
        self.best: Optional[Tuple[tuple, List[int]]] = None
        self.first: Optional[Tuple[tuple, List[int]]] = None
        self.automorphisms: List[List[int]] = []

    def certificate(self) -> tuple:
        ranking = {label: rank for rank, label in enumerate(sorted(set(self.labels)))}
        colors = self._refine([ranking[label] for label in self.labels])
        self._search(colors, [])
        return self.best[0]

    def _refine(self, colors: List[int]) -> List[int]:
        cells = len(set(colors))
        while True:
            signatures = [
                (colors[v], tuple(sorted((colors[u], mult) for u, mult in self.neighbors[v])))
                for v in range(self.size)
            ]
            ranking = {sig: rank for rank, sig in enumerate(sorted(set(signatures)))}
            colors = [ranking[sig] for sig in signatures]
            if len(ranking) == cells:
                return colors
            cells = len(ranking)

    def _target_cell(self, colors: List[int]) -> Optional[List[int]]:
        counts = Counter(colors)
        shared = [color for color, count in counts.items() if count > 1]
        if not shared:
            return None
        color = min(shared)
        return [v for v in range(self.size) if colors[v] == color]

    @staticmethod
    def _individualize(colors: List[int], v: int) -> List[int]:
        split = [2 * c + 1 for c in colors]
        split[v] = 2 * colors[v]
        return split

    def _leaf(self, colors: List[int]):
        order = sorted(range(self.size), key=colors.__getitem__)
        position = {v: i for i, v in enumerate(order)}
        edges = sorted(
            (min(position[v], position[u]), max(position[v], position[u]), mult)
            for v in range(self.size) for u, mult in self.neighbors[v] if v < u
        )
        cert = (tuple(self.labels[v] for v in order), tuple(edges))

        if self.first is None:
            self.first = (cert, order)
        elif cert == self.first[0]:
            self._record(self.first[1], order)
        if self.best is None or cert < self.best[0]:
            self.best = (cert, order)
        elif cert == self.best[0] and self.best[1] is not order:
            self._record(self.best[1], order)

    def _record(self, source: List[int], target: List[int]):
        mapping = [0] * self.size
        for s, t in zip(source, target):
            mapping[s] = t
        if any(mapping[v] != v for v in range(self.size)):
            self.automorphisms.append(mapping)

    def _same_orbit(self, v: int, explored: List[int], prefix: List[int]) -> bool:
        parent = list(range(self.size))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for gamma in self.automorphisms:
            if all(gamma[p] == p for p in prefix):
                for x in range(self.size):
                    rx, ry = find(x), find(gamma[x])
                    if rx != ry:
                        parent[rx] = ry
        root = find(v)
        return any(find(u) == root for u in explored)

    def _search(self, colors: List[int], prefix: List[int]):
        cell = self._target_cell(colors)
        if cell is None:
            self._leaf(colors)
            return
        explored: List[int] = []
        for v in cell:
            if explored and self._same_orbit(v, explored, prefix):
                continue
            explored.append(v)
            self._search(self._refine(self._individualize(colors, v)), prefix + [v])


def two_core(adj: Mapping[int, Mapping[int, int]]) -> FrozenSet[int]:
    """Vertices left after repeatedly deleting vertices of multiplicity-degree <= 1"""
    degree = {v: sum(nbrs.values()) for v, nbrs in adj.items()}
    removed = set()
    stack = [v for v, d in degree.items() if d <= 1]
    while stack:
        v = stack.pop()
        if v in removed:
            continue
        removed.add(v)
        for u, mult in adj[v].items():
            if u not in removed:
                degree[u] -= mult
                if degree[u] <= 1:
                    stack.append(u)
    return frozenset(v for v in adj if v not in removed)


def _neighborhood_code(nb: InducedBall, marked: FrozenSet[int]) -> CanonicalCode:
    adj = nb.adjacency()
    core = two_core(adj)
    if not core:
        raise ValueError("cycle neighbourhood has an empty 2-core")
    labels = {
        c: (1 if c in marked else 0, _subtree_code(adj, c, None, skip=core))
        for c in core
    }
    core_adj = {c: {d: mult for d, mult in adj[c].items() if d in core} for c in core}
    certificate = _Canonizer(core_adj, labels).certificate()
    return COMPONENT_PREFIX + repr(certificate).encode('ascii')


def canonical_cycle_tree(g: Multigraph, vertices, r: int) -> CanonicalCode:
    """Code of B_r(C) for the cycle vertex set C: its 2-core canonically labelled,
    each core vertex carrying its hanging tree and whether it lies on C"""
    marked = frozenset(vertices)
    return _neighborhood_code(set_ball(g, marked, r), marked)


# -- cycle components and the profile ------------------------------------------

@dataclass(frozen=True)
class CycleComponent:
    cycles: Tuple[Cycle, ...]
    vertices: FrozenSet[int]
    neighborhood: Neighborhood
    kind: str

    @property
    def size(self) -> int:
        return len(self.neighborhood.dist)

    def code(self) -> CanonicalCode:
        return _neighborhood_code(self.neighborhood, self.vertices)


def cycle_components(g: Multigraph, r: int) -> List[CycleComponent]:
    """Cycles of length <= 2r grouped by chains of pairwise distance <= r"""
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    cycles = enumerate_cycles(g, 2 * r)
    if not cycles:
        return []

    on_vertex: Dict[int, List[int]] = {}
    for index, cycle in enumerate(cycles):
        for v in cycle.vertices:
            on_vertex.setdefault(v, []).append(index)

    parent = list(range(len(cycles)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for index, cycle in enumerate(cycles):
        for v in bfs_distances(g, cycle.vertices, r):
            for other in on_vertex.get(v, ()):
                a, b = find(index), find(other)
                if a != b:
                    parent[a] = b

    groups: Dict[int, List[Cycle]] = {}
    for index, cycle in enumerate(cycles):
        groups.setdefault(find(index), []).append(cycle)

    components = []
    for members in groups.values():
        vertices = frozenset(v for cycle in members for v in cycle.vertices)
        components.append(CycleComponent(
            cycles=tuple(members),
            vertices=vertices,
            neighborhood=set_ball(g, vertices, r),
            kind='isolated' if len(members) == 1 else 'multicycle',
        ))
    components.sort(key=lambda comp: min(comp.vertices))
    return components


@dataclass
class CycleProfile:
    radius: int
    counts: Dict[CanonicalCode, int] = field(default_factory=dict)
    kinds: Dict[CanonicalCode, str] = field(default_factory=dict)
    sizes: Dict[CanonicalCode, int] = field(default_factory=dict)
    representatives: Dict[CanonicalCode, Multigraph] = field(default_factory=dict)
    acyclic_vertices: Optional[int] = None

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def multicycles(self) -> int:
        return sum(count for code, count in self.counts.items() if self.kinds[code] == 'multicycle')

    def same_as(self, other: 'CycleProfile') -> bool:
        return self.counts == other.counts

    def to_json(self) -> List[Dict[str, Any]]:
        return [
            {'code': code.decode('ascii'), 'count': self.counts[code],
             'kind': self.kinds[code], 'size': self.sizes[code]}
            for code in sorted(self.counts)
        ]


def cycle_profile(g: Multigraph, r: int, census_samples: Optional[int] = None,
                  seed: Optional[int] = None) -> CycleProfile:
    """Λ(G): number of cycle components per canonical class.

    With census_samples set, also counts how many sampled vertices (all when 0)
    have an r-ball free of bounded cycles.
    """
    profile = CycleProfile(radius=r)
    for component in cycle_components(g, r):
        code = component.code()
        profile.counts[code] = profile.counts.get(code, 0) + 1
        if code not in profile.kinds:
            profile.kinds[code] = component.kind
            profile.sizes[code] = component.size
            profile.representatives[code] = component.neighborhood.to_multigraph()[0]
    if census_samples is not None:
        profile.acyclic_vertices = acyclic_class_census(g, r, census_samples, seed).acyclic
    return profile


def coarsen_profile(profile: CycleProfile, k: int) -> Dict[CanonicalCode, int]:
    """Merge canonical classes whose neighbourhoods are ≡_k; keyed by the smallest code"""
    codes = sorted(profile.counts)
    classes = partition_by_equivalence([profile.representatives[c] for c in codes], k)
    merged = {}
    for members in classes:
        merged[codes[members[0]]] = sum(profile.counts[codes[i]] for i in members)
    return merged


# -- vertices away from cycles -------------------------------------------------

@dataclass
class AcyclicCensus:
    radius: int
    codes: Dict[CanonicalCode, int] = field(default_factory=dict)
    cyclic: int = 0

    @property
    def acyclic(self) -> int:
        return sum(self.codes.values())

    @property
    def sampled(self) -> int:
        return self.acyclic + self.cyclic


def acyclic_class_census(g: Multigraph, r: int, sample_size: int = 0, seed: Optional[int] = None,
                         rng: Optional[np.random.Generator] = None) -> AcyclicCensus:
    """Rooted-tree codes of B_r(v) for sampled vertices with no cycle of length <= 2r + 1
    within distance r.

    A ball that is not a tree holds a cycle of length at most 2r + 1, so every
    ball counted here is a tree.
    """
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    on_cycles = {v for cycle in enumerate_cycles(g, 2 * r + 1) for v in cycle.vertices}

    if sample_size == 0:
        vertices: Sequence[int] = list(g.vertices())
    else:
        rng = rng if rng is not None else np.random.default_rng(seed)
        vertices = [int(v) for v in rng.integers(1, g.n + 1, size=sample_size)]

    census = AcyclicCensus(radius=r)
    for v in vertices:
        b = ball(g, v, r)
        if any(u in on_cycles for u in b.dist):
            census.cyclic += 1
            continue
        code = canonical_rooted_tree(b)
        census.codes[code] = census.codes.get(code, 0) + 1
    return census


# -- infinite face -------------------------------------------------------------

def infinite_face_member(t: RootedSubgraph, s: int, k: int, threshold: str = 'at_least',
                         grouping: str = 'skeleton') -> bool:
    """Membership of the rooted tree t in the depth-s infinite face.

    Depth 1: the root has at least k child edges. Depth i: at least k children
    whose own subtrees are depth-(i-1) members. ``grouping='truncated'``
    instead asks for k members of every k-truncated class seen among those
    children; that variant is not monotone.
    """
    if s < 1:
        raise ValueError(f"depth must be >= 1, got {s}")
    if threshold not in ('at_least', 'more_than'):
        raise ValueError(f"unknown threshold {threshold!r}")
    if grouping not in ('skeleton', 'truncated'):
        raise ValueError(f"unknown grouping {grouping!r}")
    _require_tree(t)
    adj = t.adjacency()

    def enough(count: int) -> bool:
        return count >= k if threshold == 'at_least' else count > k

    def member(v: int, parent: Optional[int], level: int) -> bool:
        children = [(c, mult) for c, mult in adj[v].items() if c != parent]
        if level == 1:
            return enough(sum(mult for _, mult in children))
        face = [c for c, _ in children if member(c, v, level - 1)]
        if grouping == 'skeleton':
            return enough(len(face))
        classes = Counter(_subtree_code(adj, c, v, level - 1, cap=k) for c in face)
        return bool(classes) and all(enough(count) for count in classes.values())

    return member(t.root, None, s)
