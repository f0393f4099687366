#!/usr/bin/env python3
"""
Monte Carlo harness for the attachment lab.

Every experiment draws one graph G_N per replica (N = largest size in the
grid) and reads the smaller sizes off its prefixes, so all sizes of one
replica share a history. Replicas run on independent streams
numpy.random.default_rng([seed, replica]); the result table depends on the
seed only, never on the number of workers.
"""

import csv
import hashlib
import io
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from fo_logic import Formula, evaluate, formula_size, parse, quantifier_rank, to_text
from generators import (POLYA_RULES, ModelConfig, conditional_degree_mean, generate, model_constants,
                        replica_rng, sample_polya_point_tree, sample_polya_weights,
                        tree_to_rooted_subgraph, uniform_weights)
from lab_log import LabLog
from multigraph import Multigraph, ball, cycles_closed_at, induced_subgraph, prefix, set_ball
from neighborhoods import CyclicNeighborhoodError, canonical_rooted_tree, cycle_profile

CODE_VERSION = '1.0.0'
CSV_HEADER = ('n', 'stat', 'estimate', 'stderr', 'replicas')
EXPERIMENT_KINDS = ('sentence', 'cyclerate', 'degrees', 'locallimit', 'profile')

DEFAULT_MAX_COST = 2e8
CYCLE_WINDOW = 0.1
CLASS_MASS_FLOOR = 1e-3
BOOTSTRAP_ROUNDS = 100
CYCLIC_CODE = b'<cyclic>'
OTHER_CODE = b'<other>'
# stream index for the limit-tree side, disjoint from replica indices
POLYA_STREAM = 10 ** 9
BOOTSTRAP_STREAM = 2 * 10 ** 9


class ExperimentConfigError(ValueError):
    """Invalid experiment configuration"""


class FeasibilityError(ValueError):
    """Sentence evaluation would be too expensive at the requested sizes"""

    def __init__(self, cost: float, limit: float, detail: str = ''):
        self.cost = cost
        self.limit = limit
        message = f"estimated evaluation cost {cost:.3g} exceeds limit {limit:.3g}"
        super().__init__(f"{message} ({detail})" if detail else message)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    n_grid: Tuple[int, ...]
    replicas: int = 100
    workers: int = 1
    seed: int = 0
    params: Dict[str, Any] = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, 'n_grid', grid)
        if not grid:
            raise ExperimentConfigError("n_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ExperimentConfigError(f"n_grid must be strictly ascending, got {list(grid)}")
        if grid[0] < 2:
            raise ExperimentConfigError(f"graph sizes must be >= 2, got {grid[0]}")
        if self.replicas < 1:
            raise ExperimentConfigError(f"replicas must be >= 1, got {self.replicas}")
        if self.workers < 1:
            raise ExperimentConfigError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ExperimentConfigError(f"seed must be nonnegative, got {self.seed}")

    @property
    def max_n(self) -> int:
        return self.n_grid[-1]

    def echo(self) -> Dict[str, Any]:
        return {
            'model': asdict(self.model),
            'n_grid': list(self.n_grid),
            'replicas': self.replicas,
            'workers': self.workers,
            'seed': self.seed,
            'params': {key: _jsonable(value) for key, value in sorted(self.params.items())},
        }

    @classmethod
    def from_settings(cls, settings: Dict[str, Any]) -> 'ExperimentConfig':
        """Build from the flat settings produced by the config layer"""
        model = ModelConfig(kind=settings.get('model', 'sequential'),
                            n=2,
                            m=int(settings.get('m', 1)),
                            alpha=float(settings.get('alpha', 0.0)),
                            seed=int(settings.get('seed', 0)))
        return cls(model=model,
                   n_grid=tuple(settings.get('ngrid', (1000,))),
                   replicas=int(settings.get('replicas', 100)),
                   workers=int(settings.get('workers', 1)),
                   seed=int(settings.get('seed', 0)),
                   params=dict(settings.get('params', {})))


def _jsonable(value: Any) -> Any:
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


# -- result tables -------------------------------------------------------------

@dataclass(frozen=True)
class EstimateRow:
    n: int
    stat: str
    estimate: float
    stderr: float
    replicas: int


def _format_float(value: float) -> str:
    return format(float(value), '.17g')


@dataclass
class EstimateTable:
    rows: List[EstimateRow] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add(self, n: int, stat: str, estimate: float, stderr: float, replicas: int):
        if not stderr >= 0.0:
            raise ValueError(f"standard error must be nonnegative, got {stderr} for {stat} at n={n}")
        self.rows.append(EstimateRow(int(n), stat, float(estimate), float(stderr), int(replicas)))

    def get(self, n: int, stat: str) -> EstimateRow:
        for row in self.rows:
            if row.n == n and row.stat == stat:
                return row
        raise KeyError(f"no row for stat {stat!r} at n={n}")

    def series(self, stat: str) -> List[EstimateRow]:
        return [row for row in self.rows if row.stat == stat]

    @property
    def stats(self) -> List[str]:
        seen: Dict[str, None] = {}
        for row in self.rows:
            seen.setdefault(row.stat, None)
        return list(seen)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([row.n, row.stat, _format_float(row.estimate),
                             _format_float(row.stderr), row.replicas])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> 'EstimateTable':
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"expected CSV header {','.join(CSV_HEADER)}, got {header}")
        table = cls()
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(CSV_HEADER):
                raise ValueError(f"line {line_no}: expected {len(CSV_HEADER)} fields, got {len(record)}")
            n, stat, estimate, stderr, replicas = record
            table.add(int(n), stat, float(estimate), float(stderr), int(replicas))
        return table

    def to_json(self) -> Dict[str, Any]:
        return {'metadata': self.metadata, 'rows': [asdict(row) for row in self.rows]}

    def save(self, out: Union[str, Path]) -> Tuple[Path, Path]:
        """Write <out>.csv and the JSON mirror <out>.json"""
        base = Path(out)
        if base.suffix in ('.csv', '.json'):
            base = base.with_suffix('')
        base.parent.mkdir(parents=True, exist_ok=True)
        csv_path = base.with_suffix('.csv')
        json_path = base.with_suffix('.json')
        csv_path.write_text(self.to_csv(), encoding='utf-8')
        json_path.write_text(json.dumps(self.to_json(), indent=2, ensure_ascii=False), encoding='utf-8')
        return csv_path, json_path


def _mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    data = np.asarray(values, dtype=float)
    if len(data) < 2:
        return float(data.mean()), 0.0
    return float(data.mean()), float(data.std(ddof=1) / math.sqrt(len(data)))


def _new_table(kind: str, cfg: ExperimentConfig, **extra) -> EstimateTable:
    metadata = {'experiment': kind, 'code_version': CODE_VERSION, 'config': cfg.echo()}
    metadata.update(extra)
    return EstimateTable(metadata=metadata)


# -- replica scheduling --------------------------------------------------------

def run_replicas(cfg: ExperimentConfig, task: Callable[[int], Any]) -> List[Any]:
    """Results of task(replica) in replica order; the task must be picklable for workers > 1"""
    indices = range(cfg.replicas)
    if cfg.workers <= 1 or cfg.replicas == 1:
        return [task(i) for i in indices]
    chunksize = max(1, cfg.replicas // (4 * cfg.workers))
    with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
        return list(executor.map(task, indices, chunksize=chunksize))


def replica_graph(cfg: ExperimentConfig, replica: int) -> Tuple[Multigraph, np.random.Generator]:
    """G_N of one replica and the generator it was drawn from, for any follow-up sampling"""
    rng = replica_rng(cfg.seed, replica)
    model = ModelConfig(kind=cfg.model.kind, n=cfg.max_n, m=cfg.model.m,
                        alpha=cfg.model.alpha, seed=cfg.seed)
    return generate(model, rng), rng


# -- sentence probabilities ----------------------------------------------------

def sentence_cost(sentence: Formula, n: int) -> float:
    return float(n) ** quantifier_rank(sentence) * formula_size(sentence)


def _sentence_replica(cfg: ExperimentConfig, sentence: Formula, locality: Optional[Tuple[int, int]],
                      replica: int) -> List[bool]:
    g, rng = replica_graph(cfg, replica)
    outcomes = []
    for n in cfg.n_grid:
        g_n = prefix(g, n)
        if locality is not None:
            radius, samples = locality
            roots = rng.integers(1, n + 1, size=samples)
            neighborhood = set_ball(g_n, (int(v) for v in roots), radius)
            g_n = induced_subgraph(g_n, neighborhood.vertices)
        outcomes.append(evaluate(g_n, sentence))
    return outcomes


def estimate_sentence_probability(cfg: ExperimentConfig, sentence: Union[str, Formula],
                                  locality_radius: Optional[int] = None, locality_samples: int = 10,
                                  max_cost: float = DEFAULT_MAX_COST,
                                  log: Optional[LabLog] = None) -> EstimateTable:
    """Fraction of replicas with G_n ⊨ sentence, binomial standard errors.

    locality_radius switches to evaluation on the union of locality_samples
    sampled r-balls; the table metadata marks such runs as approximate.
    """
    formula = parse(sentence) if isinstance(sentence, str) else sentence
    locality = None
    size_bound = cfg.max_n
    if locality_radius is not None:
        if locality_radius < 0 or locality_samples < 1:
            raise ExperimentConfigError("locality mode needs radius >= 0 and samples >= 1")
        locality = (int(locality_radius), int(locality_samples))
        # rough size of the union of balls; degrees are unbounded so this is only an estimate
        size_bound = min(cfg.max_n, locality_samples * (2 * cfg.model.m + 1) ** locality_radius)
    cost = sentence_cost(formula, size_bound)
    if cost > max_cost:
        raise FeasibilityError(cost, max_cost,
                               f"quantifier rank {quantifier_rank(formula)}, size {formula_size(formula)}, "
                               f"n={size_bound}")

    if log:
        log.log(f"📊 Sentence experiment: {cfg.replicas} replicas, n up to {cfg.max_n}", 'sentence')
    started = time.time()
    results = run_replicas(cfg, partial(_sentence_replica, cfg, formula, locality))

    table = _new_table('sentence', cfg, sentence=to_text(formula),
                       locality={'radius': locality[0], 'samples': locality[1], 'approximate': True}
                       if locality else None,
                       cost_estimate=cost)
    R = cfg.replicas
    for index, n in enumerate(cfg.n_grid):
        hits = sum(1 for outcome in results if outcome[index])
        p = hits / R
        table.add(n, 'p_hat', p, math.sqrt(p * (1.0 - p) / R), R)
    table.metadata['wall_time'] = time.time() - started
    if log:
        log.log("✅ Sentence experiment done", 'sentence')
    return table


# -- cycle creation rates ------------------------------------------------------

def cycle_window(n: int, delta: float = CYCLE_WINDOW) -> int:
    return max(1, int(math.floor(delta * n)))


def _cycle_rate_replica(cfg: ExperimentConfig, length: int, delta: float, replica: int) -> List[float]:
    g, _ = replica_graph(cfg, replica)
    rates = []
    for n in cfg.n_grid:
        width = cycle_window(n, delta)
        created = 0
        for v in range(max(2, n - width + 1), n + 1):
            created += sum(cycle.count for cycle in cycles_closed_at(g, v, length))
        rates.append(created / width)
    return rates


def estimate_cycle_rate(cfg: ExperimentConfig, length: int, delta: float = CYCLE_WINDOW,
                        log: Optional[LabLog] = None) -> EstimateTable:
    """Cycles of the given length closed per step over the window (n(1-δ), n].

    Reported raw (rho), times n (n_rho) and times n/log n (n_over_log_n_rho).
    """
    if length < 2:
        raise ExperimentConfigError(f"cycle length must be >= 2, got {length}")
    if not 0.0 < delta <= 1.0:
        raise ExperimentConfigError(f"window fraction must lie in (0, 1], got {delta}")
    if log:
        log.log(f"📊 Cycle-rate experiment: l={length}, {cfg.replicas} replicas", 'cyclerate')
    started = time.time()
    results = run_replicas(cfg, partial(_cycle_rate_replica, cfg, length, delta))

    table = _new_table('cyclerate', cfg, cycle_length=length, window_fraction=delta)
    R = cfg.replicas
    for index, n in enumerate(cfg.n_grid):
        mean, se = _mean_and_stderr([rates[index] for rates in results])
        scale_log = n / math.log(n)
        table.add(n, 'rho', mean, se, R)
        table.add(n, 'n_rho', n * mean, n * se, R)
        table.add(n, 'n_over_log_n_rho', scale_log * mean, scale_log * se, R)
    table.metadata['wall_time'] = time.time() - started
    if log:
        log.log("✅ Cycle-rate experiment done", 'cyclerate')
    return table


# -- degree profile ------------------------------------------------------------

def harmonic(n: int) -> float:
    return math.fsum(1.0 / j for j in range(1, n + 1))


def degree_lower_bound(m: int, n: int, k: int) -> float:
    """m(√(n/k) - 1)(1 - 1/k), the α = 0 bound on the incoming degree"""
    return m * (math.sqrt(n / k) - 1.0) * (1.0 - 1.0 / k)


def degree_variance_shape(n: int, k: int) -> float:
    return n / k ** 2 + math.sqrt(n / k)


def uniform_degree_mean(m: int, n: int, k: int) -> float:
    """E D_n(k) under uniform attachment: m·1[k>=2] + m(H_{n-1} - H_{k-1})"""
    return (m if k >= 2 else 0) + m * (harmonic(n - 1) - harmonic(k - 1))


def _degree_replica(cfg: ExperimentConfig, ks: Tuple[int, ...], replica: int) -> Dict[str, List[float]]:
    g, rng = replica_graph(cfg, replica)
    m = cfg.model.m
    targets = g.attachment_array()
    if cfg.model.alpha >= 1.0:
        weights = uniform_weights(cfg.max_n, m)
    else:
        model = ModelConfig(kind='sequential', n=cfg.max_n, m=m, alpha=cfg.model.alpha, seed=cfg.seed)
        weights = sample_polya_weights(model, rng)

    degrees, incoming, urn = [], [], []
    for n in cfg.n_grid:
        hits = np.bincount(targets[:n - 1].ravel(), minlength=n + 1)
        incoming.append([float(hits[k]) for k in ks])
        degrees.append([float(hits[k] + (m if k >= 2 else 0)) for k in ks])
        urn.append([conditional_degree_mean(weights, k, n, m) for k in ks])
    return {'degree': degrees, 'incoming': incoming, 'urn': urn}


def degree_profile(cfg: ExperimentConfig, ks: Sequence[int], log: Optional[LabLog] = None) -> EstimateTable:
    """Mean and variance of D_n(k), the incoming part D'_n(k), and reference values.

    At α = 0 the lower bound and the variance shape n/k² + √(n/k) are added;
    at α = 1 the exact uniform-attachment mean. urn_mean averages the
    conditional mean given the urn weights ψ over replicas.
    """
    ks = tuple(int(k) for k in ks)
    if not ks:
        raise ExperimentConfigError("degree profile needs at least one vertex")
    if min(ks) < 1 or max(ks) > cfg.n_grid[0]:
        raise ExperimentConfigError(f"vertices must lie in 1..{cfg.n_grid[0]}, got {list(ks)}")
    if log:
        log.log(f"📊 Degree experiment: k in {list(ks)}, {cfg.replicas} replicas", 'degrees')
    started = time.time()
    results = run_replicas(cfg, partial(_degree_replica, cfg, ks))

    m, alpha, R = cfg.model.m, cfg.model.alpha, cfg.replicas
    table = _new_table('degrees', cfg, ks=list(ks))
    for index, n in enumerate(cfg.n_grid):
        for position, k in enumerate(ks):
            values = np.array([res['degree'][index][position] for res in results])
            mean, se = _mean_and_stderr(values)
            table.add(n, f'mean_D[k={k}]', mean, se, R)
            variance = float(values.var(ddof=1)) if R > 1 else 0.0
            table.add(n, f'var_D[k={k}]', variance, variance * math.sqrt(2.0 / (R - 1)) if R > 1 else 0.0, R)
            mean, se = _mean_and_stderr([res['incoming'][index][position] for res in results])
            table.add(n, f'mean_Dshift[k={k}]', mean, se, R)
            mean, se = _mean_and_stderr([res['urn'][index][position] for res in results])
            table.add(n, f'urn_mean[k={k}]', mean, se, R)
            if alpha == 0.0:
                table.add(n, f'lower_bound[k={k}]', degree_lower_bound(m, n, k), 0.0, R)
                table.add(n, f'var_shape[k={k}]', degree_variance_shape(n, k), 0.0, R)
            if alpha == 1.0:
                table.add(n, f'uniform_mean[k={k}]', uniform_degree_mean(m, n, k), 0.0, R)
    table.metadata['wall_time'] = time.time() - started
    if log:
        log.log("✅ Degree experiment done", 'degrees')
    return table


# -- local limit -----------------------------------------------------------------

def ball_code(g: Multigraph, v: int, r: int) -> bytes:
    try:
        return canonical_rooted_tree(ball(g, v, r))
    except CyclicNeighborhoodError:
        return CYCLIC_CODE


def _local_replica(cfg: ExperimentConfig, r: int, samples: int, replica: int) -> List[Counter]:
    g, rng = replica_graph(cfg, replica)
    per_size = []
    for n in cfg.n_grid:
        g_n = prefix(g, n)
        roots = rng.integers(1, n + 1, size=samples)
        per_size.append(Counter(ball_code(g_n, int(v), r) for v in roots))
    return per_size


def polya_code_counts(cfg: ExperimentConfig, r: int, draws: int, rule: str = 'literal') -> Counter:
    """Codes of depth-r Pólya-point trees on a stream disjoint from the graph replicas"""
    rng = replica_rng(cfg.seed, POLYA_STREAM)
    constants = model_constants(cfg.model.alpha)
    counts: Counter = Counter()
    for _ in range(draws):
        tree = sample_polya_point_tree(constants, cfg.model.m, r, rng=rng, rule=rule)
        counts[canonical_rooted_tree(tree_to_rooted_subgraph(tree))] += 1
    return counts


def merged_distributions(left: Counter, right: Counter,
                         floor: float = CLASS_MASS_FLOOR) -> Tuple[List[bytes], np.ndarray, np.ndarray]:
    """Class frequencies on both sides; classes below the floor on both sides go to <other>"""
    left_total = sum(left.values())
    right_total = sum(right.values())
    kept, rest = [], []
    for code in sorted(set(left) | set(right)):
        if max(left[code] / left_total, right[code] / right_total) >= floor:
            kept.append(code)
        else:
            rest.append(code)
    labels = kept + ([OTHER_CODE] if rest else [])
    p = np.array([left[c] for c in kept] + ([sum(left[c] for c in rest)] if rest else []), dtype=float)
    q = np.array([right[c] for c in kept] + ([sum(right[c] for c in rest)] if rest else []), dtype=float)
    return labels, p / left_total, q / right_total


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def bootstrap_tv_stderr(p: np.ndarray, q: np.ndarray, n_left: int, n_right: int,
                        rng: np.random.Generator, rounds: int = BOOTSTRAP_ROUNDS) -> float:
    if len(p) <= 1:
        return 0.0
    values = [
        total_variation(rng.multinomial(n_left, p) / n_left, rng.multinomial(n_right, q) / n_right)
        for _ in range(rounds)
    ]
    return float(np.std(values, ddof=1))


def local_limit_check(cfg: ExperimentConfig, r: int, samples: int, tree_rule: str = 'literal',
                      log: Optional[LabLog] = None) -> EstimateTable:
    """TV between r-ball codes of uniform vertices of G_n and of Pólya-point trees.

    Each replica contributes `samples` roots per size; the tree side draws the
    same pooled number of trees once, built under tree_rule.
    """
    if r < 0:
        raise ExperimentConfigError(f"radius must be >= 0, got {r}")
    if samples < 1:
        raise ExperimentConfigError(f"samples must be >= 1, got {samples}")
    if tree_rule not in POLYA_RULES:
        raise ExperimentConfigError(f"tree rule must be one of {POLYA_RULES}, got {tree_rule!r}")
    if log:
        log.log(f"📊 Local-limit experiment: r={r}, {samples} roots x {cfg.replicas} replicas", 'locallimit')
    started = time.time()
    results = run_replicas(cfg, partial(_local_replica, cfg, r, samples))
    pooled = cfg.replicas * samples
    tree_counts = polya_code_counts(cfg, r, pooled, tree_rule)
    boot_rng = replica_rng(cfg.seed, BOOTSTRAP_STREAM)

    table = _new_table('locallimit', cfg, radius=r, samples=samples, tree_rule=tree_rule,
                       mass_floor=CLASS_MASS_FLOOR, bootstrap_rounds=BOOTSTRAP_ROUNDS)
    classes = {}
    for index, n in enumerate(cfg.n_grid):
        graph_counts: Counter = Counter()
        for per_size in results:
            graph_counts.update(per_size[index])
        labels, p, q = merged_distributions(graph_counts, tree_counts)
        tv = total_variation(p, q)
        table.add(n, 'tv', tv, bootstrap_tv_stderr(p, q, pooled, pooled, boot_rng), cfg.replicas)
        cyclic = graph_counts[CYCLIC_CODE] / pooled
        table.add(n, 'cyclic_fraction', cyclic, math.sqrt(cyclic * (1.0 - cyclic) / pooled), cfg.replicas)
        classes[str(n)] = len(labels)
    table.metadata['classes'] = classes
    table.metadata['wall_time'] = time.time() - started
    if log:
        log.log("✅ Local-limit experiment done", 'locallimit')
    return table


# -- cycle profile census ------------------------------------------------------

def class_label(code: bytes) -> str:
    return 'class:' + hashlib.sha1(code).hexdigest()[:12]


def _profile_replica(cfg: ExperimentConfig, r: int, replica: int) -> List[Dict[str, Any]]:
    g, _ = replica_graph(cfg, replica)
    per_size = []
    for n in cfg.n_grid:
        profile = cycle_profile(prefix(g, n), r)
        per_size.append({
            'counts': dict(profile.counts),
            'kinds': dict(profile.kinds),
            'total': profile.total,
            'multicycles': profile.multicycles,
        })
    return per_size


def classify_growth(n_grid: Sequence[int], means: Sequence[float], stderr: Sequence[float]) -> Dict[str, Any]:
    """Slope of the mean count against log n; diverging when positive at three standard errors"""
    if len(n_grid) < 3:
        return {'flag': 'undetermined', 'slope': None, 'slope_stderr': None}
    fit = stats.linregress(np.log(np.asarray(n_grid, dtype=float)), np.asarray(means, dtype=float))
    slope = float(fit.slope)
    slope_se = float(fit.stderr) if math.isfinite(fit.stderr) else 0.0
    # regression noise alone misses replica noise on a flat mean
    slope_se = max(slope_se, float(np.max(stderr)) / max(1e-12, math.log(n_grid[-1] / n_grid[0])))
    flag = 'diverging' if slope - 3.0 * slope_se > 0 else 'stationary-candidate'
    return {'flag': flag, 'slope': slope, 'slope_stderr': slope_se}


def growth_fit(n_grid: Sequence[int], means: Sequence[float]) -> Dict[str, Any]:
    """R² of the mean total against log n and against (log n)²"""
    if len(n_grid) < 3:
        return {'preferred': 'undetermined'}
    log_n = np.log(np.asarray(n_grid, dtype=float))
    y = np.asarray(means, dtype=float)
    if np.ptp(y) == 0:
        return {'preferred': 'undetermined', 'linear_r2': 0.0, 'quadratic_r2': 0.0}
    linear = stats.linregress(log_n, y)
    quadratic = stats.linregress(log_n ** 2, y)
    r2_linear = float(linear.rvalue ** 2)
    r2_quadratic = float(quadratic.rvalue ** 2)
    return {
        'linear_r2': r2_linear,
        'linear_coefficients': [float(linear.slope), float(linear.intercept)],
        'quadratic_r2': r2_quadratic,
        'quadratic_coefficients': [float(quadratic.slope), float(quadratic.intercept)],
        'preferred': 'quadratic' if r2_quadratic > r2_linear else 'linear',
    }


def cycle_profile_census(cfg: ExperimentConfig, r: int, log: Optional[LabLog] = None) -> EstimateTable:
    """Mean number of cycle components per canonical class, per size.

    Rows: total, multicycles and one class:<hash> row per class seen in any
    replica. Metadata flags each class and fits the growth of the total.
    """
    if r < 1:
        raise ExperimentConfigError(f"radius must be >= 1, got {r}")
    if log:
        log.log(f"📊 Cycle-profile census: r={r}, {cfg.replicas} replicas", 'profile')
    started = time.time()
    results = run_replicas(cfg, partial(_profile_replica, cfg, r))

    kinds: Dict[bytes, str] = {}
    for per_size in results:
        for entry in per_size:
            kinds.update(entry['kinds'])
    codes = sorted(kinds, key=class_label)

    table = _new_table('profile', cfg, radius=r)
    R = cfg.replicas
    series: Dict[str, Tuple[List[float], List[float]]] = {}
    for index, n in enumerate(cfg.n_grid):
        def record(stat: str, values: List[float]):
            mean, se = _mean_and_stderr(values)
            table.add(n, stat, mean, se, R)
            means, errors = series.setdefault(stat, ([], []))
            means.append(mean)
            errors.append(se)

        record('total', [res[index]['total'] for res in results])
        record('multicycles', [res[index]['multicycles'] for res in results])
        for code in codes:
            record(class_label(code), [res[index]['counts'].get(code, 0) for res in results])

    table.metadata['classes'] = {
        class_label(code): dict(kind=kinds[code], code=code.decode('ascii', 'replace'),
                                **classify_growth(cfg.n_grid, *series[class_label(code)]))
        for code in codes
    }
    table.metadata['growth_fit'] = growth_fit(cfg.n_grid, series['total'][0])
    table.metadata['wall_time'] = time.time() - started
    if log:
        log.log("✅ Cycle-profile census done", 'profile')
    return table


# -- config-driven runner --------------------------------------------------------

class ExperimentSuite:
    """Runs one experiment kind from merged settings and stores the table"""

    def __init__(self, log: Optional[LabLog] = None):
        self.log = log or LabLog()
        self.results: Dict[str, EstimateTable] = {}

    def run(self, kind: str, cfg: ExperimentConfig) -> EstimateTable:
        if kind not in EXPERIMENT_KINDS:
            raise ExperimentConfigError(f"unknown experiment {kind!r}; choose from {EXPERIMENT_KINDS}")
        self.log.log(f"🚀 Running {kind}: model={cfg.model.kind} m={cfg.model.m} "
                     f"alpha={cfg.model.alpha} n_grid={list(cfg.n_grid)}")
        handler = getattr(self, f'handle_{kind}')
        table = handler(cfg)
        self.results[kind] = table
        return table

    def handle_sentence(self, cfg: ExperimentConfig) -> EstimateTable:
        params = cfg.params
        if 'sentence' not in params:
            raise ExperimentConfigError("the sentence experiment needs a 'sentence' parameter")
        radius = params.get('locality_radius')
        return estimate_sentence_probability(
            cfg, params['sentence'],
            locality_radius=None if radius is None else int(radius),
            locality_samples=int(params.get('locality_samples', 10)),
            max_cost=float(params.get('max_cost', DEFAULT_MAX_COST)),
            log=self.log)

    def handle_cyclerate(self, cfg: ExperimentConfig) -> EstimateTable:
        return estimate_cycle_rate(cfg, int(cfg.params.get('l', 3)),
                                   float(cfg.params.get('window', CYCLE_WINDOW)), log=self.log)

    def handle_degrees(self, cfg: ExperimentConfig) -> EstimateTable:
        ks = cfg.params.get('ks', [1, 2, 10])
        if isinstance(ks, str):
            ks = [int(k) for k in ks.split(',') if k.strip()]
        return degree_profile(cfg, ks, log=self.log)

    def handle_locallimit(self, cfg: ExperimentConfig) -> EstimateTable:
        return local_limit_check(cfg, int(cfg.params.get('r', 1)), int(cfg.params.get('samples', 100)),
                                 tree_rule=str(cfg.params.get('tree_rule', 'literal')), log=self.log)

    def handle_profile(self, cfg: ExperimentConfig) -> EstimateTable:
        return cycle_profile_census(cfg, int(cfg.params.get('r', 2)), log=self.log)

    def save_results(self, table: EstimateTable, out: Union[str, Path]) -> Tuple[Path, Path]:
        csv_path, json_path = table.save(out)
        self.log.log(f"💾 Results: {csv_path} (+ {json_path.name})")
        return csv_path, json_path

    def print_summary(self, table: EstimateTable, max_rows: int = 40):
        title = f"{table.metadata.get('experiment', 'experiment')} estimates"
        rows = [(row.n, row.stat, row.estimate, row.stderr, row.replicas) for row in table.rows[:max_rows]]
        self.log.print_table(title, CSV_HEADER, rows)
        if len(table.rows) > max_rows:
            self.log.log(f"   ... {len(table.rows) - max_rows} more rows in the CSV")
