#!/usr/bin/env python3
"""
Samplers for the preferential attachment model with uniform mixing weight α.

- classical rule: the m endpoints of a new vertex are drawn independently from
  the frozen degree sequence (prob 1-α) or uniformly (prob α)
- sequential rule: endpoints attached one by one, degrees updated in between
- Pólya urn representation of the sequential rule (beta weights ψ)
- Pólya-point tree, the local limit around a uniform vertex
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from multigraph import GraphMeta, Multigraph, RootedSubgraph

MODEL_KINDS = ('classical', 'sequential')
POLYA_RULES = ('literal', 'parent-edge')


class ModelConfigError(ValueError):
    """Invalid model parameters"""


@dataclass(frozen=True)
class ModelConfig:
    kind: str = 'sequential'
    n: int = 2
    m: int = 1
    alpha: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelConfigError(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.n < 1:
            raise ModelConfigError(f"n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ModelConfigError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ModelConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.seed < 0:
            raise ModelConfigError(f"seed must be nonnegative, got {self.seed}")

    def with_n(self, n: int) -> 'ModelConfig':
        return replace(self, n=n)

    def meta(self) -> GraphMeta:
        return GraphMeta(model=self.kind, alpha=float(self.alpha), seed=self.seed)


@dataclass(frozen=True)
class ModelConstants:
    alpha: float
    u: float
    chi: float

    @property
    def exponent(self) -> float:
        """(1-χ)/χ, the power in the right-child intensity"""
        return (1.0 - self.chi) / self.chi


def model_constants(alpha: float) -> ModelConstants:
    """u = α/(1-α) and χ = (1+2u)/(2+2u); χ = 1 at α = 1"""
    if not 0.0 <= alpha <= 1.0:
        raise ModelConfigError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0:
        return ModelConstants(alpha=1.0, u=math.inf, chi=1.0)
    u = alpha / (1.0 - alpha)
    return ModelConstants(alpha=alpha, u=u, chi=(1.0 + 2.0 * u) / (2.0 + 2.0 * u))


def replica_rng(seed: int, replica: Optional[int] = None) -> np.random.Generator:
    """Independent stream per (seed, replica) regardless of how replicas are scheduled"""
    if replica is None:
        return np.random.default_rng(seed)
    return np.random.default_rng([seed, replica])


# -- graph models ------------------------------------------------------------

def generate_classical(cfg: ModelConfig, rng: Optional[np.random.Generator] = None) -> Multigraph:
    """Vertex v attaches its m endpoints to G_{v-1} with degrees frozen during the round"""
    if cfg.n < 2:
        raise ModelConfigError("the classical rule needs n >= 2")
    rng = rng if rng is not None else replica_rng(cfg.seed)
    n, m, alpha = cfg.n, cfg.m, cfg.alpha

    coins = rng.random((n + 1, m))
    picks = rng.random((n + 1, m))
    endpoints: List[int] = []
    targets: List[Tuple[int, ...]] = [(), ()]

    for new in range(2, n + 1):
        existing = new - 1
        if existing == 1:
            chosen = (1,) * m
        else:
            frozen = len(endpoints)
            chosen = tuple(
                1 + int(picks[new, j] * existing) if coins[new, j] < alpha
                else endpoints[int(picks[new, j] * frozen)]
                for j in range(m)
            )
        targets.append(chosen)
        endpoints.extend(chosen)
        endpoints.extend([new] * m)

    return Multigraph.from_targets(targets, m, cfg.meta())


def sequential_uniform_weight(alpha: float, m: int, n: int, i: int) -> float:
    """α_n(i): probability that edge i of vertex n is attached uniformly, clamped to [0, 1]"""
    denominator = 2 * m * (n - 2) + 2 * m * alpha + (1 - alpha) * (i - 1)
    if denominator <= 0:
        return 1.0
    return min(1.0, max(0.0, alpha * 2 * m * (n - 1) / denominator))


def generate_sequential(cfg: ModelConfig, rng: Optional[np.random.Generator] = None) -> Multigraph:
    """Edge i of vertex n: uniform on [n-1] with prob α_n(i), else ∝ deg_n(k, i)"""
    if cfg.n < 2:
        raise ModelConfigError("the sequential rule needs n >= 2")
    rng = rng if rng is not None else replica_rng(cfg.seed)
    n, m, alpha = cfg.n, cfg.m, cfg.alpha

    coins = rng.random((n + 1, m))
    picks = rng.random((n + 1, m))
    endpoints: List[int] = []
    targets: List[Tuple[int, ...]] = [(), ()]

    for new in range(2, n + 1):
        existing = new - 1
        chosen = []
        for j in range(m):
            if existing == 1:
                target = 1
            elif coins[new, j] < sequential_uniform_weight(alpha, m, new, j + 1):
                target = 1 + int(picks[new, j] * existing)
            else:
                # 2m(n-2) endpoints of G_{n-1} plus the j earlier targets of this round
                target = endpoints[int(picks[new, j] * len(endpoints))]
            chosen.append(target)
            endpoints.append(target)
        targets.append(tuple(chosen))
        endpoints.extend([new] * m)

    return Multigraph.from_targets(targets, m, cfg.meta())


def generate(cfg: ModelConfig, rng: Optional[np.random.Generator] = None) -> Multigraph:
    if cfg.kind == 'classical':
        return generate_classical(cfg, rng)
    return generate_sequential(cfg, rng)


# -- Pólya urn representation --------------------------------------------------

@dataclass(frozen=True)
class PolyaWeights:
    """ψ, φ and S indexed from vertex 1 (array position 0)"""
    psi: np.ndarray
    phi: np.ndarray
    S: np.ndarray
    alpha: float = 0.0
    m: int = 1

    @property
    def n(self) -> int:
        return len(self.psi)

    def compensated_prefix_sums(self) -> np.ndarray:
        """Kahan-summed Σ_{i<=l} φ_i, an independent check of S"""
        sums = np.empty_like(self.phi)
        total, carry = 0.0, 0.0
        for index, value in enumerate(self.phi):
            y = value - carry
            t = total + y
            carry = (t - total) - y
            total = t
            sums[index] = total
        return sums


def _weights_from_psi(psi: np.ndarray, alpha: float, m: int) -> PolyaWeights:
    # S_l = Π_{j>l} (1-ψ_j) because ψ_1 = 1; φ_l = ψ_l S_l
    one_minus = 1.0 - psi
    tail = np.ones_like(psi)
    if len(psi) > 1:
        tail[:-1] = np.cumprod(one_minus[:0:-1])[::-1]
    phi = psi * tail
    return PolyaWeights(psi=psi, phi=phi, S=tail, alpha=alpha, m=m)


def sample_polya_weights(cfg: ModelConfig, rng: Optional[np.random.Generator] = None) -> PolyaWeights:
    """ψ_1 = 1 and ψ_i ~ Beta(m + 2mu, (2i-3)m + 2mu(i-1)) for i >= 2"""
    if cfg.alpha >= 1.0:
        raise ModelConfigError("beta weights are undefined at alpha = 1; use uniform_weights(n)")
    if cfg.n < 2:
        raise ModelConfigError("urn weights need n >= 2")
    rng = rng if rng is not None else replica_rng(cfg.seed)
    u = model_constants(cfg.alpha).u
    m = cfg.m

    i = np.arange(2, cfg.n + 1, dtype=float)
    a = m + 2 * m * u
    b = (2 * i - 3) * m + 2 * m * u * (i - 1)
    psi = np.empty(cfg.n)
    psi[0] = 1.0
    psi[1:] = rng.beta(a, b)
    return _weights_from_psi(psi, cfg.alpha, m)


def uniform_weights(n: int, m: int = 1) -> PolyaWeights:
    """Degenerate weights φ_i = 1/n of uniform attachment (ψ_i = 1/i)"""
    psi = 1.0 / np.arange(1, n + 1, dtype=float)
    return _weights_from_psi(psi, 1.0, m)


def generate_from_weights(w: PolyaWeights, m: int, seed: Optional[int] = None,
                          rng: Optional[np.random.Generator] = None) -> Multigraph:
    """Vertex l attaches to j when U ~ Unif[0, S_{l-1}) falls in [S_{j-1}, S_j)"""
    n = w.n
    if rng is None:
        rng = replica_rng(seed if seed is not None else 0)
    targets: List[Tuple[int, ...]] = [(), ()]
    if n >= 2:
        scale = w.S[:-1][:, None]
        draws = rng.random((n - 1, m)) * scale
        chosen = np.searchsorted(w.S, draws, side='right') + 1
        # rounding at an interval end can only overshoot the last admissible vertex
        limits = np.arange(1, n)[:, None]
        chosen = np.minimum(chosen, limits)
        targets.extend(tuple(int(t) for t in row) for row in chosen)
    meta = GraphMeta(model='sequential', alpha=float(w.alpha), seed=seed)
    return Multigraph.from_targets(targets, m, meta)


def conditional_degree_mean(w: PolyaWeights, k: int, n: int, m: int) -> float:
    """E[D_n(k) | ψ] = m·1[k>=2] + m Σ_{l=k}^{n-1} ψ_k Π_{i=k+1}^{l} (1-ψ_i)"""
    if not 1 <= k <= n <= w.n:
        raise ValueError(f"need 1 <= k <= n <= {w.n}, got k={k}, n={n}")
    own = m if k >= 2 else 0
    if k == n:
        return float(own)
    survival = np.concatenate(([1.0], np.cumprod(1.0 - w.psi[k:n - 1])))
    return own + m * float(w.psi[k - 1] * survival.sum())


def product_moment_exact(m: int, alpha: float, s: int, n1: int, n2: int) -> float:
    """E[Π_{i=n1+1}^{n2} (1-ψ_i)^s] from the beta moments Π_r (b+r)/(a+b+r)"""
    if alpha >= 1.0:
        raise ModelConfigError("beta weights are undefined at alpha = 1")
    if n1 < 1:
        return 0.0 if n2 >= 1 else 1.0
    u = model_constants(alpha).u
    a = m + 2 * m * u
    log_moment = 0.0
    for i in range(n1 + 1, n2 + 1):
        b = (2 * i - 3) * m + 2 * m * u * (i - 1)
        for r in range(s):
            log_moment += math.log(b + r) - math.log(a + b + r)
    return math.exp(log_moment)


def product_moment_monte_carlo(m: int, alpha: float, s: int, n1: int, n2: int, draws: int,
                               rng: np.random.Generator) -> Tuple[float, float]:
    """Sample mean and standard error of Π_{i=n1+1}^{n2} (1-ψ_i)^s"""
    u = model_constants(alpha).u
    i = np.arange(max(n1 + 1, 2), n2 + 1, dtype=float)
    a = m + 2 * m * u
    b = (2 * i - 3) * m + 2 * m * u * (i - 1)
    psi = rng.beta(a, b, size=(draws, len(i)))
    values = np.prod((1.0 - psi) ** s, axis=1)
    if n1 < 1:
        values = np.zeros(draws)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(draws))


def prodbound_bracket(m: int, alpha: float, s: int, n1: int, n2: int) -> Tuple[float, float]:
    """Lower and upper bounds on E[Π_{i=n1+1}^{n2} (1-ψ_i)^s]"""
    c = model_constants(alpha)
    if math.isinf(c.u):
        raise ModelConfigError("the product bound needs alpha < 1")
    power = s * c.chi
    lower = ((n1 + 2 * c.u - 1 + 1 / (2 * m)) / (n2 + 2 * c.u - 1 + 1 / (2 * m))) ** power
    upper = ((n1 + 2 * c.u + s / (2 * m)) / (n2 + 2 * c.u + s / (2 * m))) ** power
    return lower, upper


# -- Pólya-point tree ----------------------------------------------------------

@dataclass
class PolyaNode:
    position: float
    tag: str
    label: Tuple[int, ...] = ()
    gamma: Optional[float] = None
    children: List['PolyaNode'] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'position': self.position, 'tag': self.tag}
        if self.gamma is not None:
            data['gamma'] = self.gamma
        data['children'] = [child.to_dict() for child in self.children]
        return data


@dataclass
class PolyaPointTree:
    root: PolyaNode
    m: int
    alpha: float
    depth: int
    rule: str = 'literal'

    def nodes(self) -> Iterator[Tuple[PolyaNode, int]]:
        """Breadth-first (node, depth) pairs"""
        layer = [self.root]
        level = 0
        while layer:
            for node in layer:
                yield node, level
            layer = [child for node in layer for child in node.children]
            level += 1

    @property
    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def to_dict(self) -> Dict[str, Any]:
        return {'m': self.m, 'alpha': self.alpha, 'depth': self.depth, 'rule': self.rule,
                'root': self.root.to_dict()}


def polya_right_mass(constants: ModelConstants, m: int, x: float, gamma: float = 1.0) -> float:
    """Total intensity of right children on [x, 1]: γ(x^{-(1-χ)/χ} - 1), or m log(1/x) at α = 1"""
    if x <= 0.0:
        raise ValueError("the right-child intensity diverges at position 0")
    if constants.chi == 1.0:
        return m * math.log(1.0 / x)
    return gamma * (x ** (-constants.exponent) - 1.0)


def polya_right_intensity(constants: ModelConstants, x_parent: float, x: float, gamma: float) -> float:
    """Density of right-child positions at x in [x_parent, 1] (α < 1)"""
    p = constants.exponent
    return p * gamma * x_parent ** (-p) * x ** ((1.0 - 2.0 * constants.chi) / constants.chi)


def _gamma_shape(constants: ModelConstants, m: int, tag: str, rule: str) -> float:
    # left-reached nodes carry one extra unit
    extra = 1 if tag == 'left' else 0
    if rule == 'parent-edge':
        return m + 2 * m * constants.u + extra
    return m + extra


def _right_children(constants: ModelConstants, m: int, node: PolyaNode, rule: str,
                    rng: np.random.Generator) -> List[float]:
    x = node.position
    if constants.chi == 1.0:
        count = rng.poisson(m * math.log(1.0 / x))
        return list(x ** (1.0 - rng.random(count)))
    node.gamma = float(rng.gamma(_gamma_shape(constants, m, node.tag, rule), 1.0))
    count = rng.poisson(polya_right_mass(constants, m, x, node.gamma))
    p = constants.exponent
    base = x ** p
    return list((base + rng.random(count) * (1.0 - base)) ** (1.0 / p))


def sample_polya_point_tree(constants: ModelConstants, m: int, r: int,
                            x0: Optional[float] = None, seed: Optional[int] = None,
                            rng: Optional[np.random.Generator] = None,
                            rule: str = 'literal') -> PolyaPointTree:
    """Depth-r Pólya-point tree; the root sits at Y^χ unless x0 is given.

    Right children follow the Poisson process on [x, 1] scaled by a per-node
    gamma weight. Under rule='literal' every node gets m left children uniform
    on [0, x] and the gamma shape is m + 1[left-reached]. Under
    rule='parent-edge' a right-reached node counts its parent as one older
    neighbour and gets m - 1 left children, and the shape becomes
    m + 2mu + 1[left-reached].
    """
    if rule not in POLYA_RULES:
        raise ValueError(f"tree rule must be one of {POLYA_RULES}, got {rule!r}")
    if r < 0:
        raise ValueError(f"depth must be >= 0, got {r}")
    if x0 is not None and not 0.0 < x0 <= 1.0:
        raise ValueError(f"root position must lie in (0, 1], got {x0}")
    if rng is None:
        rng = replica_rng(seed if seed is not None else 0)

    position = x0 if x0 is not None else float(rng.random() ** constants.chi)
    # a zero draw would put the root where the intensity diverges
    position = max(position, np.finfo(float).tiny)
    root = PolyaNode(position=position, tag='root')

    frontier = [root]
    for _ in range(r):
        next_frontier = []
        for node in frontier:
            left_count = m - 1 if rule == 'parent-edge' and node.tag == 'right' else m
            for index in range(left_count):
                child_position = max(float(rng.random()) * node.position, np.finfo(float).tiny)
                node.children.append(PolyaNode(child_position, 'left', node.label + (index + 1,)))
            for index, child_position in enumerate(_right_children(constants, m, node, rule, rng)):
                node.children.append(PolyaNode(float(child_position), 'right',
                                               node.label + (left_count + index + 1,)))
            next_frontier.extend(node.children)
        frontier = next_frontier

    return PolyaPointTree(root=root, m=m, alpha=constants.alpha, depth=r, rule=rule)


def tree_to_rooted_subgraph(tree: PolyaPointTree) -> RootedSubgraph:
    """Breadth-first numbering with the root as vertex 1"""
    dist: Dict[int, int] = {}
    edges: Dict[Tuple[int, int], int] = {}
    ids = {id(tree.root): 1}
    counter = 1
    for node, depth in tree.nodes():
        node_id = ids[id(node)]
        dist[node_id] = depth
        for child in node.children:
            counter += 1
            ids[id(child)] = counter
            edges[(node_id, counter)] = 1
    return RootedSubgraph(depth=tree.depth, dist=dist, edges=edges, root=1)
