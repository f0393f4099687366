#!/usr/bin/env python3
"""
Ehrenfeucht-Fraïssé games on finite multigraphs.
Duplicator wins the k-round game on (A, B) exactly when A and B agree on all
first-order sentences of quantifier rank <= k. Partial isomorphisms preserve
equality, adjacency and the exact edge multiplicity.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher, numerical_edge_match

from multigraph import Multigraph, degrees

Pair = Tuple[int, int]
SIDES = ('A', 'B')
AUTOMORPHISM_CAP = 16


def partial_isomorphism_check(A: Multigraph, B: Multigraph, pairs: Sequence[Pair]) -> bool:
    """True iff a_i -> b_i is a well-defined injective map preserving every relation"""
    for a, b in pairs:
        if not (1 <= a <= A.n and 1 <= b <= B.n):
            return False
    for i, (a1, b1) in enumerate(pairs):
        for a2, b2 in pairs[i + 1:]:
            if (a1 == a2) != (b1 == b2):
                return False
            if a1 != a2 and A.multiplicity(a1, a2) != B.multiplicity(b1, b2):
                return False
    return True


def _extends(A: Multigraph, B: Multigraph, pairs: FrozenSet[Pair], a: int, b: int) -> bool:
    """Whether adding (a, b) to a partial isomorphism keeps it one"""
    for a2, b2 in pairs:
        if (a == a2) != (b == b2):
            return False
        if a != a2 and A.multiplicity(a, a2) != B.multiplicity(b, b2):
            return False
    return True


def automorphisms(g: Multigraph, cap: int = AUTOMORPHISM_CAP) -> List[Tuple[int, ...]]:
    """Up to cap multiplicity-preserving automorphisms of g, identity first.

    Each is a tuple perm with perm[v] the image of v; slot 0 is unused.
    """
    graph = nx.Graph()
    graph.add_nodes_from(g.vertices())
    graph.add_weighted_edges_from(g.edge_items(), weight='mult')
    matcher = GraphMatcher(graph, graph, edge_match=numerical_edge_match('mult', 1))
    identity = tuple(range(g.n + 1))
    found = [identity]
    for mapping in matcher.isomorphisms_iter():
        if len(found) >= cap:
            break
        perm = (0,) + tuple(mapping[v] for v in g.vertices())
        if perm != identity:
            found.append(perm)
    return found


@dataclass
class SpoilerStrategy:
    """Spoiler's move and a continuation for every Duplicator reply that survives it.

    Replies missing from ``replies`` break the partial isomorphism and lose at once.
    """
    side: str
    vertex: int
    replies: Dict[int, 'SpoilerStrategy'] = field(default_factory=dict)

    def principal_line(self) -> List[Tuple[str, int]]:
        """One move sequence, following the smallest surviving reply each round"""
        line = [(self.side, self.vertex)]
        node = self
        while node.replies:
            node = node.replies[min(node.replies)]
            line.append((node.side, node.vertex))
        return line

    @property
    def rounds(self) -> int:
        return 1 + max((sub.rounds for sub in self.replies.values()), default=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'side': self.side,
            'vertex': self.vertex,
            'replies': {str(reply): sub.to_dict() for reply, sub in sorted(self.replies.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SpoilerStrategy':
        return cls(side=data['side'], vertex=int(data['vertex']),
                   replies={int(k): cls.from_dict(v) for k, v in data.get('replies', {}).items()})


class EFGame:
    """Minimax search memoized on rounds left and the chosen pairs up to automorphisms.

    Automorphisms of A and B map positions to positions of equal value, so the
    memo key is the smallest image of the pair set under the (capped) groups.
    """

    def __init__(self, A: Multigraph, B: Multigraph):
        if A.n == 0 or B.n == 0:
            raise ValueError("EF games need nonempty graphs")
        self.A = A
        self.B = B
        self.degrees = {'A': [0] + degrees(A), 'B': [0] + degrees(B)}
        self.automorphisms = {'A': automorphisms(A), 'B': automorphisms(B)}
        self.memo: Dict[Tuple[int, Tuple[Pair, ...]], bool] = {}

    def _graph(self, side: str) -> Multigraph:
        return self.A if side == 'A' else self.B

    def position_key(self, pairs: FrozenSet[Pair]) -> Tuple[Pair, ...]:
        if not pairs:
            return ()
        return min(
            tuple(sorted((sigma[a], tau[b]) for a, b in pairs))
            for sigma in self.automorphisms['A'] for tau in self.automorphisms['B']
        )

    def _pair(self, side: str, spoiler_vertex: int, reply: int) -> Pair:
        return (spoiler_vertex, reply) if side == 'A' else (reply, spoiler_vertex)

    def replies(self, pairs: FrozenSet[Pair], side: str, x: int) -> List[int]:
        """Duplicator answers to Spoiler's x that keep a partial isomorphism, most similar degree first"""
        other = 'B' if side == 'A' else 'A'
        target_degree = self.degrees[side][x]
        candidates = []
        for y in self._graph(other).vertices():
            a, b = self._pair(side, x, y)
            if _extends(self.A, self.B, pairs, a, b):
                candidates.append(y)
        candidates.sort(key=lambda y: (abs(self.degrees[other][y] - target_degree), y))
        return candidates

    def spoiler_moves(self, pairs: FrozenSet[Pair]) -> List[Tuple[str, int]]:
        # re-picking a chosen vertex only hands Duplicator a free round
        chosen = {'A': {a for a, _ in pairs}, 'B': {b for _, b in pairs}}
        return [(side, x) for side in SIDES for x in self._graph(side).vertices()
                if x not in chosen[side]]

    def duplicator_wins(self, pairs: FrozenSet[Pair], rounds_left: int) -> bool:
        if rounds_left == 0:
            return True
        key = (rounds_left, self.position_key(pairs))
        cached = self.memo.get(key)
        if cached is not None:
            return cached

        result = True
        for side, x in self.spoiler_moves(pairs):
            if not self.move_answered(pairs, rounds_left, side, x):
                result = False
                break
        self.memo[key] = result
        return result

    def move_answered(self, pairs: FrozenSet[Pair], rounds_left: int, side: str, x: int) -> bool:
        for y in self.replies(pairs, side, x):
            if self.duplicator_wins(pairs | {self._pair(side, x, y)}, rounds_left - 1):
                return True
        return False

    def winning_strategy(self, pairs: FrozenSet[Pair], rounds_left: int) -> Optional[SpoilerStrategy]:
        """Spoiler strategy from a position Duplicator loses, else None"""
        if rounds_left == 0 or self.duplicator_wins(pairs, rounds_left):
            return None
        for side, x in self.spoiler_moves(pairs):
            if self.move_answered(pairs, rounds_left, side, x):
                continue
            strategy = SpoilerStrategy(side=side, vertex=x)
            for y in self.replies(pairs, side, x):
                sub = self.winning_strategy(pairs | {self._pair(side, x, y)}, rounds_left - 1)
                strategy.replies[y] = sub
            return strategy
        return None


def _first_move_answered(args) -> bool:
    A, B, k, side, x = args
    return EFGame(A, B).move_answered(frozenset(), k, side, x)


def equivalent_k(A: Multigraph, B: Multigraph, k: int, workers: int = 1) -> bool:
    """A ≡_k B, decided by exhaustive game search; workers > 1 splits Spoiler's first move"""
    if k < 0:
        raise ValueError(f"rounds must be >= 0, got {k}")
    if k == 0:
        return True
    game = EFGame(A, B)
    if workers <= 1:
        return game.duplicator_wins(frozenset(), k)

    tasks = [(A, B, k, side, x) for side, x in game.spoiler_moves(frozenset())]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return all(executor.map(_first_move_answered, tasks))


def spoiler_witness(A: Multigraph, B: Multigraph, k: int) -> Optional[SpoilerStrategy]:
    """Adaptive Spoiler strategy winning within k rounds, or None when A ≡_k B"""
    if k <= 0:
        return None
    return EFGame(A, B).winning_strategy(frozenset(), k)


def replay_strategy(A: Multigraph, B: Multigraph, strategy: SpoilerStrategy, k: int) -> bool:
    """Check the strategy against every Duplicator reply without using the solver"""

    def spoiler_wins(pairs: FrozenSet[Pair], node: Optional[SpoilerStrategy], rounds_left: int) -> bool:
        if node is None or rounds_left == 0:
            return False
        other = B if node.side == 'A' else A
        for y in other.vertices():
            a, b = (node.vertex, y) if node.side == 'A' else (y, node.vertex)
            if not _extends(A, B, pairs, a, b):
                continue
            if not spoiler_wins(pairs | {(a, b)}, node.replies.get(y), rounds_left - 1):
                return False
        return True

    return spoiler_wins(frozenset(), strategy, k)


def partition_by_equivalence(graphs: Sequence[Multigraph], k: int) -> List[List[int]]:
    """Group graph indices into ≡_k classes (compared against one representative each)"""
    classes: List[List[int]] = []
    for index, g in enumerate(graphs):
        for members in classes:
            if equivalent_k(graphs[members[0]], g, k):
                members.append(index)
                break
        else:
            classes.append([index])
    return classes
