#!/usr/bin/env python3
"""
Inhomogeneous processes used by the limit-law argument:
the ±1/−m martingale counter, the slow birth-death chain with its stationary
law, and the two-state chain whose transition matrices tend to I while the
state distribution keeps oscillating.
"""

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import stats
from scipy.special import gammaln

Number = Union[float, np.ndarray]


class ProbabilityOverflowError(ValueError):
    """Transition probabilities of a step add up to more than 1"""

    def __init__(self, step: int, total: float):
        self.step = step
        self.total = total
        super().__init__(f"transition probabilities sum to {total:.6g} > 1 at step n={step}")


class NormalizationError(ValueError):
    """A distribution could not be normalised"""


# -- rate expressions ----------------------------------------------------------

_NUMBER = r'[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?'
_CONSTANT = re.compile(rf'^({_NUMBER})$')
_POWER = re.compile(rf'^(?:({_NUMBER})\*)?n\^-({_NUMBER})$')
_HARMONIC = re.compile(rf'^(?:({_NUMBER})\*)?\(1\+1/n\)$')


@dataclass(frozen=True)
class RateFunction:
    """c, c*n^-a or c*(1+1/n)"""
    kind: str
    c: float
    a: float = 0.0

    def __call__(self, n: Number) -> Number:
        if self.kind == 'constant':
            return self.c + 0.0 * np.asarray(n, dtype=float) if isinstance(n, np.ndarray) else self.c
        if self.kind == 'power':
            return self.c * np.power(n, -self.a, dtype=float)
        return self.c * (1.0 + 1.0 / np.asarray(n, dtype=float)) if isinstance(n, np.ndarray) \
            else self.c * (1.0 + 1.0 / n)

    @property
    def limit(self) -> float:
        if self.kind == 'power' and self.a > 0:
            return 0.0
        return self.c

    def __str__(self) -> str:
        if self.kind == 'constant':
            return f"{self.c:g}"
        if self.kind == 'power':
            return f"{self.c:g}*n^-{self.a:g}"
        return f"{self.c:g}*(1+1/n)"


def parse_rate(expr: str) -> RateFunction:
    text = expr.replace(' ', '')
    match = _CONSTANT.match(text)
    if match:
        return RateFunction('constant', float(match.group(1)))
    match = _POWER.match(text)
    if match:
        return RateFunction('power', float(match.group(1) or 1.0), float(match.group(2)))
    match = _HARMONIC.match(text)
    if match:
        return RateFunction('harmonic', float(match.group(1) or 1.0))
    raise ValueError(f"unsupported rate expression {expr!r}; use c, c*n^-a or c*(1+1/n)")


# -- martingale counter --------------------------------------------------------

@dataclass(frozen=True)
class MartingaleConfig:
    p: RateFunction
    K: int = 1
    m: int = 1
    steps: int = 1000
    seed: int = 0
    n0: int = 1
    m0: int = 0

    def __post_init__(self):
        if self.K < 1 or self.m < 1:
            raise ValueError("K and m must be positive integers")
        if self.steps < 0 or self.n0 < 0 or self.m0 < 0:
            raise ValueError("steps, n0 and m0 must be nonnegative")

    @property
    def s(self) -> int:
        return self.K * self.m


def falling_factorial(n: float, k: int) -> float:
    """(n)_k = n(n-1)...(n-k+1)"""
    result = 1.0
    for j in range(k):
        result *= n - j
    return result


@dataclass
class MartingaleTrajectory:
    n: np.ndarray
    M: np.ndarray
    mu: np.ndarray

    def martingale(self, s: int) -> np.ndarray:
        """Z_{n+1} = (n+1)_s M_{n+1} - μ_{n+1} along the path (one entry per step)"""
        index = self.n[1:].astype(float)
        scale = np.array([falling_factorial(x, s) for x in index])
        return scale * self.M[1:] - self.mu[1:]


def _rate_values(cfg: MartingaleConfig) -> np.ndarray:
    n = np.arange(cfg.n0, cfg.n0 + cfg.steps, dtype=float)
    with np.errstate(divide='ignore'):
        return np.broadcast_to(np.asarray(cfg.p(n), dtype=float), n.shape).copy()


def simulate_martingale(cfg: MartingaleConfig,
                        rng: Optional[np.random.Generator] = None) -> MartingaleTrajectory:
    """M_{n+1} = M_n + 1 w.p. p(n), - m w.p. K M_n/(n+1), + 0 otherwise"""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    p = _rate_values(cfg)
    draws = rng.random(cfg.steps)
    M = np.empty(cfg.steps + 1, dtype=np.int64)
    mu = np.empty(cfg.steps + 1)
    M[0] = cfg.m0
    mu[0] = 0.0
    current = cfg.m0

    for t in range(cfg.steps):
        n = cfg.n0 + t
        up = p[t]
        down = cfg.K * current / (n + 1)
        if up + down > 1.0 + 1e-12 or up < 0:
            raise ProbabilityOverflowError(n, up + down)
        if draws[t] < up:
            current += 1
        elif draws[t] < up + down:
            current -= cfg.m
        M[t + 1] = current
        mu[t + 1] = mu[t] + falling_factorial(n + 1, cfg.s) * up

    return MartingaleTrajectory(np.arange(cfg.n0, cfg.n0 + cfg.steps + 1), M, mu)


@dataclass
class MartingaleEnsemble:
    n: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    replicas: int
    final: np.ndarray

    def log_slope(self, start: Optional[int] = None) -> Tuple[float, float]:
        """Least-squares slope of log E[M_n] against log n, with its standard error"""
        mask = self.mean > 0
        if start is not None:
            mask &= self.n >= start
        fit = stats.linregress(np.log(self.n[mask]), np.log(self.mean[mask]))
        return float(fit.slope), float(fit.stderr)


def simulate_martingale_ensemble(cfg: MartingaleConfig, replicas: int, checkpoints: int = 200,
                                 rng: Optional[np.random.Generator] = None,
                                 record_increments: bool = False):
    """Replica-vectorised simulation; means at log-spaced checkpoints.

    With record_increments, also returns (M_n, D) pairs where
    D = M_{n+1} - (1 - s/(n+1)) M_n - p(n) has conditional mean zero.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    p = _rate_values(cfg)
    current = np.full(replicas, cfg.m0, dtype=np.int64)
    marks = np.unique(np.geomspace(1, cfg.steps, num=min(checkpoints, cfg.steps)).astype(int))
    mark_set = set(int(x) for x in marks)
    n_values, means, errors = [], [], []
    states, increments = [], []

    for t in range(cfg.steps):
        n = cfg.n0 + t
        up = p[t]
        down = cfg.K * current / (n + 1)
        worst = up + float(down.max(initial=0.0))
        if worst > 1.0 + 1e-12 or up < 0:
            raise ProbabilityOverflowError(n, worst)
        u = rng.random(replicas)
        step = np.where(u < up, 1, np.where(u < up + down, -cfg.m, 0))
        following = current + step
        if record_increments:
            states.append(current.copy())
            increments.append(following - (1.0 - cfg.s / (n + 1)) * current - up)
        current = following
        if t + 1 in mark_set:
            n_values.append(n + 1)
            means.append(current.mean())
            errors.append(current.std(ddof=1) / math.sqrt(replicas) if replicas > 1 else 0.0)

    ensemble = MartingaleEnsemble(np.array(n_values), np.array(means), np.array(errors),
                                  replicas, current.copy())
    if record_increments:
        return ensemble, np.concatenate(states) if states else np.array([]), \
            np.concatenate(increments) if increments else np.array([])
    return ensemble


def martingale_increment_check(states: np.ndarray, increments: np.ndarray,
                               buckets: int = 5) -> List[Dict[str, float]]:
    """Mean normalised increment per quantile bucket of M_n, with standard errors"""
    edges = np.unique(np.quantile(states, np.linspace(0, 1, buckets + 1)))
    report = []
    for low, high in zip(edges[:-1], edges[1:]):
        last = high == edges[-1]
        mask = (states >= low) & ((states <= high) if last else (states < high))
        values = increments[mask]
        if len(values) < 2:
            continue
        report.append({
            'low': float(low), 'high': float(high), 'count': int(len(values)),
            'mean': float(values.mean()),
            'stderr': float(values.std(ddof=1) / math.sqrt(len(values))),
        })
    return report


# -- slow birth-death chain ----------------------------------------------------

@dataclass(frozen=True)
class SlowChainConfig:
    rho: RateFunction
    tau: RateFunction
    steps: int = 100000
    seed: int = 0
    suffix_fraction: float = 0.5
    start_state: int = 0

    def __post_init__(self):
        if not 0.0 < self.suffix_fraction <= 1.0:
            raise ValueError(f"suffix fraction must lie in (0, 1], got {self.suffix_fraction}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass
class Occupancy:
    frequencies: Dict[int, float]
    suffix_fraction: float
    steps: int

    def as_array(self, size: Optional[int] = None) -> np.ndarray:
        size = size or (max(self.frequencies) + 1)
        values = np.zeros(size)
        for state, freq in self.frequencies.items():
            if state < size:
                values[state] = freq
        return values

    def tv_to(self, distribution: np.ndarray) -> float:
        size = max(len(distribution), max(self.frequencies) + 1)
        target = np.zeros(size)
        target[:len(distribution)] = distribution
        return 0.5 * float(np.abs(self.as_array(size) - target).sum())


def simulate_slow_chain(cfg: SlowChainConfig, rng: Optional[np.random.Generator] = None) -> Occupancy:
    """Run W_n from start_state and record visit frequencies over the final suffix"""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    times = np.arange(1, cfg.steps + 1, dtype=float)
    rho = np.broadcast_to(np.asarray(cfg.rho(times), dtype=float), times.shape)
    tau = np.broadcast_to(np.asarray(cfg.tau(times), dtype=float), times.shape)
    draws = rng.random(cfg.steps)
    first_counted = cfg.steps - max(1, int(round(cfg.steps * cfg.suffix_fraction)))

    counts: Dict[int, int] = {}
    state = cfg.start_state
    for t in range(cfg.steps):
        if state == 0:
            state = 1
        else:
            down = tau[t] * state / (tau[t] * state + rho[t])
            state = state - 1 if draws[t] < down else state + 1
        if t >= first_counted:
            counts[state] = counts.get(state, 0) + 1

    total = sum(counts.values())
    return Occupancy({s: c / total for s, c in sorted(counts.items())}, cfg.suffix_fraction, cfg.steps)


@dataclass
class StationaryReport:
    lam: float
    numeric: np.ndarray
    closed_form: np.ndarray
    tv_gap: float
    balance_residual: float
    pi0_numeric: float
    pi0_closed_form: float
    pi0_recurrence: float

    def max_relative_error(self, start: int = 1) -> float:
        """Largest relative gap between closed form and numeric solution for states >= start"""
        numeric = self.numeric[start:]
        mask = numeric > 1e-300
        return float(np.max(np.abs(self.closed_form[start:][mask] - numeric[mask]) / numeric[mask]))

    def to_dict(self) -> Dict[str, object]:
        return {
            'lambda': self.lam,
            'numeric': self.numeric.tolist(),
            'closed_form': self.closed_form.tolist(),
            'tv_gap': self.tv_gap,
            'balance_residual': self.balance_residual,
            'pi0': {'numeric': self.pi0_numeric, 'closed_form': self.pi0_closed_form,
                    'recurrence': self.pi0_recurrence},
        }


def birth_death_transition_matrix(lam: float, cutoff: int) -> np.ndarray:
    """Limit chain on 0..cutoff: 0 -> 1 surely; i -> i+1 w.p. λ/(i+λ), i -> i-1 w.p. i/(i+λ)"""
    W = np.zeros((cutoff + 1, cutoff + 1))
    W[0, 1 if cutoff >= 1 else 0] = 1.0
    for i in range(1, cutoff + 1):
        down = i / (i + lam)
        W[i, i - 1] = down
        # the truncated top state keeps its upward mass
        W[i, min(i + 1, cutoff)] += 1.0 - down
    return W


def stationary_closed_form(lam: float, states: np.ndarray) -> np.ndarray:
    """π_n = (n+λ) λ^{n-1} / (2 e^λ n!)"""
    states = np.asarray(states, dtype=float)
    return np.exp(np.log(states + lam) + (states - 1) * math.log(lam) - lam
                  - math.log(2.0) - gammaln(states + 1))


def stationary_birth_death(rho: float, tau: float, cutoff: Optional[int] = None,
                           tail_tolerance: float = 1e-12, max_cutoff: int = 100000) -> StationaryReport:
    """Stationary law of the limit slow chain from the balance recursion π_{i+1} q_{i+1} = π_i p_i"""
    if rho <= 0 or tau <= 0:
        raise ValueError("rates must be positive")
    lam = rho / tau

    weights = [1.0]
    i = 0
    while True:
        up = 1.0 if i == 0 else lam / (i + lam)
        down_next = (i + 1) / (i + 1 + lam)
        weights.append(weights[-1] * up / down_next)
        i += 1
        if cutoff is not None:
            if i >= cutoff:
                break
        elif weights[-1] < tail_tolerance * 1e-3 * sum(weights) and i > lam:
            break
        if i >= max_cutoff or not math.isfinite(weights[-1]):
            raise NormalizationError(f"stationary weights did not settle by state {i} for λ={lam}")

    weights = np.array(weights)
    total = math.fsum(weights)
    if not math.isfinite(total) or total <= 0:
        raise NormalizationError(f"cannot normalise stationary weights for λ={lam}")
    numeric = weights / total
    if numeric[-1] > tail_tolerance:
        raise NormalizationError(f"tail mass {numeric[-1]:.3g} at cutoff {len(numeric) - 1} exceeds tolerance")

    states = np.arange(len(numeric))
    closed = stationary_closed_form(lam, states)
    W = birth_death_transition_matrix(lam, len(numeric) - 1)
    residual = float(np.max(np.abs(numeric @ W - numeric)))

    return StationaryReport(
        lam=lam,
        numeric=numeric,
        closed_form=closed,
        tv_gap=0.5 * float(np.abs(numeric - closed).sum()),
        balance_residual=residual,
        pi0_numeric=float(numeric[0]),
        pi0_closed_form=1.0 / (2.0 * math.exp(lam)),
        pi0_recurrence=1.0 / (1.0 + lam),
    )


# -- oscillating two-state chain -----------------------------------------------

def oscillator_matrix(n: int) -> Tuple[Tuple[Fraction, Fraction], Tuple[Fraction, Fraction]]:
    """P_n for n >= 2: block b = ceil(log2 n); even blocks move mass 1 -> 2 at rate 1/n, odd blocks 2 -> 1"""
    if n < 2:
        raise ValueError("the oscillator starts at n = 2")
    block = (n - 1).bit_length()
    step = Fraction(1, n)
    if block % 2 == 0:
        return ((1 - step, step), (Fraction(0), Fraction(1)))
    return ((Fraction(1), Fraction(0)), (step, 1 - step))


@dataclass
class OscillatorTrace:
    block_ends: List[Tuple[int, Fraction, Fraction]]
    norms: List[Tuple[int, Fraction, Fraction]]
    rows_stochastic: bool
    sampled_states: List[int] = field(default_factory=list)

    def mass_at(self, n: int) -> Fraction:
        for end, first, _ in self.block_ends:
            if end == n:
                return first
        raise KeyError(f"no block ends at n={n}")

    def to_dict(self) -> Dict[str, object]:
        return {
            'block_ends': [{'n': n, 'state1': str(a), 'state2': str(b), 'state1_float': float(a)}
                           for n, a, b in self.block_ends],
            'rows_stochastic': self.rows_stochastic,
            'max_norm_times_n': max((float(lit * n) for n, lit, _ in self.norms), default=0.0),
            'max_abs_norm_times_n': max((float(ab * n) for n, _, ab in self.norms), default=0.0),
        }


def oscillator_demo(steps: int, seed: Optional[int] = None) -> OscillatorTrace:
    """Exact state distribution through P_2..P_steps, recorded at every dyadic block end.

    Norms of P_n - I are reported as sup_i Σ_j a_ij and as sup_i Σ_j |a_ij|.
    A seeded sample path of the chain is recorded alongside.
    """
    if steps < 4:
        raise ValueError("steps must be >= 4")
    rng = np.random.default_rng(seed)
    x = (Fraction(1), Fraction(0))
    state = 0
    block_ends: List[Tuple[int, Fraction, Fraction]] = []
    norms: List[Tuple[int, Fraction, Fraction]] = []
    stochastic = True
    sampled = []

    for n in range(2, steps + 1):
        P = oscillator_matrix(n)
        stochastic &= all(row[0] + row[1] == 1 for row in P)
        diff = [[P[i][j] - (1 if i == j else 0) for j in range(2)] for i in range(2)]
        norms.append((n, max(sum(row) for row in diff), max(abs(a) + abs(b) for a, b in diff)))

        x = (x[0] * P[0][0] + x[1] * P[1][0], x[0] * P[0][1] + x[1] * P[1][1])
        state = int(rng.random() >= float(P[state][0]))
        sampled.append(state)
        if n & (n - 1) == 0:
            block_ends.append((n, x[0], x[1]))

    return OscillatorTrace(block_ends, norms, stochastic, sampled)
