#!/usr/bin/env python3
"""
First-order sentences over the multigraph signature.

Grammar (lowest to highest precedence):
    formula := forall VAR . formula | exists VAR . formula | iff
    iff     := iff <-> implies           (left associative)
    implies := disj -> implies           (right associative)
    disj    := disj | conj
    conj    := conj & neg
    neg     := ! neg | atom
    atom    := ( formula ) | VAR = VAR | adj(VAR, VAR) | adjk(VAR, VAR, INT) | adjN(VAR, VAR)

adj(x, y) holds when x and y are joined by at least one edge, adjk(x, y, j)
when they are joined by at least j parallel edges.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from multigraph import Multigraph

GRAMMAR = r'''
    ?start: formula

    ?formula: quantified
            | iff

    quantified: QUANT VAR "." formula

    ?iff: implies
        | iff "<->" implies

    ?implies: disj
            | disj "->" implies

    ?disj: conj
         | disj "|" conj

    ?conj: neg
         | conj "&" neg

    ?neg: atom
        | "!" neg -> negation

    ?atom: "(" formula ")"
         | VAR "=" VAR -> equal
         | "adj" "(" VAR "," VAR ")" -> adjacency
         | "adjk" "(" VAR "," VAR "," INT ")" -> adjacency_k
         | ADJN "(" VAR "," VAR ")" -> adjacency_n

    QUANT: "forall" | "exists"
    ADJN.2: /adj[1-9][0-9]*(?![A-Za-z0-9_])/
    VAR: /(?!(forall|exists|adjk|adj)\b)[A-Za-z_][A-Za-z0-9_]*/
    INT: /[0-9]+/

    %import common.WS
    %ignore WS
'''

_PARSER = Lark(GRAMMAR, parser='lalr', start='start', maybe_placeholders=False)


class FormulaSyntaxError(ValueError):
    """Text does not follow the formula grammar"""

    def __init__(self, message: str, line: int = -1, column: int = -1):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line > 0 else ""
        super().__init__(f"{message}{where}")


class UnboundVariableError(ValueError):
    """Free variables where a sentence or a complete assignment is required"""

    def __init__(self, variables):
        self.variables = tuple(sorted(variables))
        super().__init__(f"unbound variables: {', '.join(self.variables)}")


# -- abstract syntax -----------------------------------------------------------

@dataclass(frozen=True)
class Equal:
    left: str
    right: str


@dataclass(frozen=True)
class Adj:
    left: str
    right: str
    mult: int = 1


@dataclass(frozen=True)
class Not:
    body: 'Formula'


@dataclass(frozen=True)
class And:
    left: 'Formula'
    right: 'Formula'


@dataclass(frozen=True)
class Or:
    left: 'Formula'
    right: 'Formula'


@dataclass(frozen=True)
class Implies:
    left: 'Formula'
    right: 'Formula'


@dataclass(frozen=True)
class Iff:
    left: 'Formula'
    right: 'Formula'


@dataclass(frozen=True)
class Forall:
    var: str
    body: 'Formula'


@dataclass(frozen=True)
class Exists:
    var: str
    body: 'Formula'


Formula = Union[Equal, Adj, Not, And, Or, Implies, Iff, Forall, Exists]
ATOMS = (Equal, Adj)
BINARY = (And, Or, Implies, Iff)
QUANTIFIERS = (Forall, Exists)


@v_args(inline=True)
class _AstBuilder(Transformer):
    def quantified(self, quant, var, body):
        node = Forall if str(quant) == 'forall' else Exists
        return node(str(var), body)

    def iff(self, left, right):
        return Iff(left, right)

    def implies(self, left, right):
        return Implies(left, right)

    def disj(self, left, right):
        return Or(left, right)

    def conj(self, left, right):
        return And(left, right)

    def negation(self, body):
        return Not(body)

    def equal(self, left, right):
        return Equal(str(left), str(right))

    def adjacency(self, left, right):
        return Adj(str(left), str(right))

    def adjacency_k(self, left, right, mult):
        return Adj(str(left), str(right), _multiplicity(mult))

    def adjacency_n(self, name, left, right):
        return Adj(str(left), str(right), _multiplicity(str(name)[3:], name))


def _multiplicity(token, where=None) -> int:
    value = int(str(token))
    if value < 1:
        anchor = where if where is not None else token
        raise FormulaSyntaxError(f"edge multiplicity must be >= 1, got {value}",
                                 getattr(anchor, 'line', -1) or -1,
                                 getattr(anchor, 'column', -1) or -1)
    return value


def parse(text: str, allow_free: bool = False) -> Formula:
    """Parse formula text; sentences (no free variables) unless allow_free"""
    try:
        tree = _PARSER.parse(text)
        formula = _AstBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, FormulaSyntaxError):
            raise e.orig_exc
        raise
    except UnexpectedInput as e:
        line = getattr(e, 'line', -1)
        column = getattr(e, 'column', -1)
        raise FormulaSyntaxError(f"unexpected input {_describe(e)}", line, column) from None

    if not allow_free:
        free = free_variables(formula)
        if free:
            raise UnboundVariableError(free)
    return formula


def _describe(error: UnexpectedInput) -> str:
    token = getattr(error, 'token', None)
    if token is not None:
        return repr(str(token)) if str(token) else 'end of input'
    char = getattr(error, 'char', None)
    if char is not None:
        return repr(char)
    return 'end of input'


# -- printing ------------------------------------------------------------------

_PRECEDENCE = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}
_SYMBOL = {Iff: '<->', Implies: '->', Or: '|', And: '&'}


def _precedence(f: Formula) -> int:
    if isinstance(f, QUANTIFIERS):
        return 0
    if isinstance(f, ATOMS):
        return 6
    return _PRECEDENCE[type(f)]


def _operand_levels(f: Formula) -> Tuple[int, int]:
    level = _PRECEDENCE[type(f)]
    if isinstance(f, Implies):
        return level + 1, level
    return level, level + 1


def _print(f: Formula, required: int) -> str:
    if isinstance(f, Equal):
        text = f"{f.left} = {f.right}"
    elif isinstance(f, Adj):
        text = f"adj({f.left}, {f.right})" if f.mult == 1 else f"adjk({f.left}, {f.right}, {f.mult})"
    elif isinstance(f, Not):
        text = "!" + _print(f.body, _PRECEDENCE[Not])
    elif isinstance(f, BINARY):
        left_level, right_level = _operand_levels(f)
        text = f"{_print(f.left, left_level)} {_SYMBOL[type(f)]} {_print(f.right, right_level)}"
    elif isinstance(f, QUANTIFIERS):
        word = 'forall' if isinstance(f, Forall) else 'exists'
        text = f"{word} {f.var}. {_print(f.body, 0)}"
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({text})" if _precedence(f) < required else text


def to_text(f: Formula) -> str:
    """Concrete syntax that parses back to the same tree"""
    return _print(f, 0)


# -- structural measures -------------------------------------------------------

def quantifier_rank(f: Formula) -> int:
    if isinstance(f, ATOMS):
        return 0
    if isinstance(f, Not):
        return quantifier_rank(f.body)
    if isinstance(f, BINARY):
        return max(quantifier_rank(f.left), quantifier_rank(f.right))
    return quantifier_rank(f.body) + 1


def free_variables(f: Formula) -> FrozenSet[str]:
    if isinstance(f, ATOMS):
        return frozenset((f.left, f.right))
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, BINARY):
        return free_variables(f.left) | free_variables(f.right)
    return free_variables(f.body) - {f.var}


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


def formula_size(f: Formula) -> int:
    """Number of AST nodes"""
    if isinstance(f, ATOMS):
        return 1
    if isinstance(f, Not) or isinstance(f, QUANTIFIERS):
        return 1 + formula_size(f.body)
    return 1 + formula_size(f.left) + formula_size(f.right)


# -- evaluation ----------------------------------------------------------------

class _Evaluator:
    """Backtracking model checker memoized on (subformula, values of its free variables)"""

    def __init__(self, g: Multigraph, f: Formula):
        self.g = g
        self.domain = range(1, g.n + 1)
        self.nodes: List[tuple] = []
        self.free: List[Tuple[str, ...]] = []
        self.memo: Dict[tuple, bool] = {}
        self.root = self._compile(f)

    def _compile(self, f: Formula) -> int:
        if isinstance(f, Equal):
            node = ('eq', f.left, f.right)
        elif isinstance(f, Adj):
            node = ('adj', f.left, f.right, f.mult)
        elif isinstance(f, Not):
            node = ('not', self._compile(f.body))
        elif isinstance(f, BINARY):
            node = (type(f).__name__.lower(), self._compile(f.left), self._compile(f.right))
        else:
            node = ('forall' if isinstance(f, Forall) else 'exists', f.var, self._compile(f.body))
        self.nodes.append(node)
        self.free.append(tuple(sorted(free_variables(f))))
        return len(self.nodes) - 1

    def holds(self, index: int, env: Dict[str, int]) -> bool:
        node = self.nodes[index]
        kind = node[0]
        if kind == 'eq':
            return env[node[1]] == env[node[2]]
        if kind == 'adj':
            u, v = env[node[1]], env[node[2]]
            return u != v and self.g.multiplicity(u, v) >= node[3]

        key = (index,) + tuple(env[v] for v in self.free[index])
        cached = self.memo.get(key)
        if cached is not None:
            return cached

        if kind == 'not':
            result = not self.holds(node[1], env)
        elif kind == 'and':
            result = self.holds(node[1], env) and self.holds(node[2], env)
        elif kind == 'or':
            result = self.holds(node[1], env) or self.holds(node[2], env)
        elif kind == 'implies':
            result = (not self.holds(node[1], env)) or self.holds(node[2], env)
        elif kind == 'iff':
            result = self.holds(node[1], env) == self.holds(node[2], env)
        else:
            result = self._quantify(kind == 'forall', node[1], node[2], env)

        self.memo[key] = result
        return result

    def _quantify(self, universal: bool, var: str, body: int, env: Dict[str, int]) -> bool:
        saved = env.get(var)
        try:
            for x in self.domain:
                env[var] = x
                if self.holds(body, env) != universal:
                    return not universal
            return universal
        finally:
            if saved is None:
                env.pop(var, None)
            else:
                env[var] = saved


def evaluate(g: Multigraph, s: Formula, assignment: Optional[Dict[str, int]] = None) -> bool:
    """Truth of s in g; free variables must be covered by assignment"""
    env = dict(assignment or {})
    missing = free_variables(s) - set(env)
    if missing:
        raise UnboundVariableError(missing)
    for var, value in env.items():
        if not 1 <= value <= g.n:
            raise ValueError(f"variable {var} assigned to {value}, outside 1..{g.n}")
    evaluator = _Evaluator(g, s)
    return evaluator.holds(evaluator.root, env)


# -- random sentences ----------------------------------------------------------

_VARIABLE_NAMES = ('x', 'y', 'z', 'w', 'v', 'u')


def _variable_for_depth(depth: int) -> str:
    if depth < len(_VARIABLE_NAMES):
        return _VARIABLE_NAMES[depth]
    return f"x{depth}"


class _SentenceSampler:
    def __init__(self, rng: np.random.Generator, max_mult: int = 2):
        self.rng = rng
        self.max_mult = max_mult

    @staticmethod
    def feasible(bound: Tuple[str, ...], qr_left: int, budget: int) -> bool:
        if bound:
            return budget >= 1
        return qr_left >= 1 and budget >= 2

    def sample(self, bound: Tuple[str, ...], qr_left: int, budget: int) -> Formula:
        options = []
        if bound:
            options.append(('atom', 3.0))
        if budget >= 2 and self.feasible(bound, qr_left, budget - 1):
            options.append(('not', 1.0))
        if budget >= 3 and self._split(bound, qr_left, budget - 1) is not None:
            options.append(('binary', 2.0))
        if qr_left >= 1 and budget >= 2:
            options.append(('quant', 3.0 if not bound else 2.0))

        names = [name for name, _ in options]
        weights = np.array([weight for _, weight in options])
        choice = names[int(self.rng.choice(len(names), p=weights / weights.sum()))]

        if choice == 'atom':
            return self._atom(bound)
        if choice == 'not':
            return Not(self.sample(bound, qr_left, budget - 1))
        if choice == 'quant':
            var = _variable_for_depth(len(bound))
            node = Forall if self.rng.random() < 0.5 else Exists
            return node(var, self.sample(bound + (var,), qr_left - 1, budget - 1))

        left_budget = self._split(bound, qr_left, budget - 1)
        right_budget = budget - 1 - left_budget
        node = (And, Or, Implies, Iff)[int(self.rng.integers(4))]
        return node(self.sample(bound, qr_left, left_budget),
                    self.sample(bound, qr_left, right_budget))

    def _split(self, bound: Tuple[str, ...], qr_left: int, total: int) -> Optional[int]:
        splits = [left for left in range(1, total)
                  if self.feasible(bound, qr_left, left) and self.feasible(bound, qr_left, total - left)]
        if not splits:
            return None
        return splits[int(self.rng.integers(len(splits)))]

    def _atom(self, bound: Tuple[str, ...]) -> Formula:
        left = bound[int(self.rng.integers(len(bound)))]
        right = bound[int(self.rng.integers(len(bound)))]
        if self.rng.random() < 0.3:
            return Equal(left, right)
        mult = 1 if self.rng.random() < 0.7 else int(self.rng.integers(2, self.max_mult + 1))
        return Adj(left, right, mult)


def sample_sentence(max_qr: int, max_size: int, seed: Optional[int] = None,
                    rng: Optional[np.random.Generator] = None) -> Formula:
    """Random closed sentence with rank <= max_qr and at most max_size AST nodes"""
    if max_qr < 1:
        raise ValueError(f"max_qr must be >= 1, got {max_qr}")
    if max_size < 2:
        raise ValueError(f"max_size must be >= 2 (a quantifier and an atom), got {max_size}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    size = int(rng.integers(2, max_size + 1))
    return _SentenceSampler(rng).sample((), max_qr, size)
