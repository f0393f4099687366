#!/usr/bin/env python3
"""
Unit tests for fo_logic.py
Parsing, printing, quantifier rank, evaluation and the sentence sampler.
"""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'scripts'))

from fo_logic import (Adj, And, Equal, Exists, Forall, FormulaSyntaxError, Implies, Not,
                      UnboundVariableError, evaluate, formula_size, free_variables, is_sentence,
                      parse, quantifier_rank, sample_sentence, to_text)
from lab_test_config import FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON, fixture_graphs, run_suite
from multigraph import complete_graph, from_edges, path_graph, relabel

LOOPLESS = "forall u. forall v. (u = v -> !adj(u,v))"
COMPLETE = "forall v. forall u. (!(u=v) -> adj(u,v))"
TRIANGLE = "exists x. exists y. exists z. (adj(x,y) & adj(y,z) & adj(x,z))"
SYMMETRIC = "forall x. forall y. (adj(x,y) <-> adj(y,x))"


class TestParsing(unittest.TestCase):

    def test_looplessness_ast(self):
        expected = Forall('u', Forall('v', Implies(Equal('u', 'v'), Not(Adj('u', 'v')))))
        self.assertEqual(parse(LOOPLESS), expected)

    def test_trivial_sentence(self):
        self.assertEqual(parse("exists x. x = x"), Exists('x', Equal('x', 'x')))

    def test_free_variables_rejected(self):
        with self.assertRaises(UnboundVariableError) as ctx:
            parse("adj(x,y)")
        self.assertEqual(ctx.exception.variables, ('x', 'y'))

    def test_allow_free(self):
        f = parse("adj(x,y) & (exists z. adj(y,z))", allow_free=True)
        self.assertEqual(free_variables(f), frozenset({'x', 'y'}))
        self.assertFalse(is_sentence(f))

    def test_multiplicity_atoms(self):
        self.assertEqual(parse("exists x. exists y. adjk(x,y,3)"),
                         Exists('x', Exists('y', Adj('x', 'y', 3))))
        self.assertEqual(parse("exists x. exists y. adj2(x,y)"),
                         Exists('x', Exists('y', Adj('x', 'y', 2))))
        self.assertEqual(parse("exists x. exists y. adjk(x,y,1)"),
                         parse("exists x. exists y. adj(x,y)"))

    def test_zero_multiplicity_rejected(self):
        with self.assertRaises(FormulaSyntaxError):
            parse("exists x. exists y. adjk(x,y,0)")

    def test_syntax_error_position(self):
        with self.assertRaises(FormulaSyntaxError) as ctx:
            parse("forall x. x = = x")
        self.assertEqual(ctx.exception.line, 1)
        self.assertEqual(ctx.exception.column, 15)

    def test_syntax_error_second_line(self):
        with self.assertRaises(FormulaSyntaxError) as ctx:
            parse("forall x.\n  x & x")
        self.assertEqual(ctx.exception.line, 2)
        self.assertEqual(ctx.exception.column, 5)

    def test_implication_is_right_associative(self):
        f = parse("exists x. x = x -> adj(x,x) -> x = x")
        self.assertEqual(f, Exists('x', Implies(Equal('x', 'x'),
                                                Implies(Adj('x', 'x'), Equal('x', 'x')))))

    def test_conjunction_binds_tighter_than_disjunction(self):
        f = parse("exists x. x = x | adj(x,x) & x = x", allow_free=True)
        self.assertEqual(f.body.right, And(Adj('x', 'x'), Equal('x', 'x')))


class TestPrinting(unittest.TestCase):

    def test_canonical_text(self):
        self.assertEqual(to_text(parse(LOOPLESS)), "forall u. forall v. u = v -> !adj(u, v)")
        self.assertEqual(to_text(Adj('x', 'y', 2)), "adjk(x, y, 2)")

    def test_left_nested_implication_parenthesized(self):
        a, b, c = Equal('x', 'x'), Adj('x', 'y'), Equal('y', 'y')
        self.assertEqual(to_text(Implies(Implies(a, b), c)), "(x = x -> adj(x, y)) -> y = y")
        self.assertEqual(to_text(Implies(a, Implies(b, c))), "x = x -> adj(x, y) -> y = y")

    def test_quantifier_inside_binary(self):
        f = And(Exists('x', Equal('x', 'x')), Not(Forall('y', Equal('y', 'y'))))
        text = to_text(f)
        self.assertEqual(text, "(exists x. x = x) & !(forall y. y = y)")
        self.assertEqual(parse(text), f)

    def test_reparse_fixed_sentences(self):
        for text in (LOOPLESS, COMPLETE, TRIANGLE, SYMMETRIC):
            f = parse(text)
            self.assertEqual(parse(to_text(f)), f)


class TestMeasures(unittest.TestCase):

    def test_atomic_rank(self):
        self.assertEqual(quantifier_rank(parse("adj(x,y)", allow_free=True)), 0)

    def test_nested_rank(self):
        self.assertEqual(quantifier_rank(parse("forall x. exists y. adj(x,y)")), 2)

    def test_rank_of_conjunction_is_max(self):
        one = parse("exists x. x = x")
        three = parse(TRIANGLE)
        self.assertEqual(quantifier_rank(And(one, three)), 3)

    def test_formula_size(self):
        self.assertEqual(formula_size(parse("exists x. x = x")), 2)
        self.assertEqual(formula_size(parse(LOOPLESS)), 6)


class TestEvaluation(unittest.TestCase):

    def setUp(self):
        self.graphs = fixture_graphs()

    def test_complete_graph(self):
        self.assertTrue(evaluate(complete_graph(3), parse(COMPLETE)))
        self.assertFalse(evaluate(path_graph(3), parse(COMPLETE)))

    def test_single_vertex(self):
        self.assertTrue(evaluate(from_edges(1, []), parse("exists x. x = x")))

    def test_path_has_no_triangle(self):
        self.assertFalse(evaluate(path_graph(3), parse(TRIANGLE)))
        self.assertTrue(evaluate(self.graphs['lollipop'], parse(TRIANGLE)))

    def test_loopless_and_symmetric_everywhere(self):
        for name, g in self.graphs.items():
            self.assertTrue(evaluate(g, parse(LOOPLESS)), name)
            self.assertTrue(evaluate(g, parse(SYMMETRIC)), name)

    def test_parallel_edges(self):
        double = parse("exists x. exists y. adj2(x,y)")
        triple = parse("exists x. exists y. adjk(x,y,3)")
        self.assertTrue(evaluate(self.graphs['double_edge'], double))
        self.assertFalse(evaluate(self.graphs['double_edge'], triple))
        self.assertTrue(evaluate(self.graphs['triple_edge'], triple))
        self.assertFalse(evaluate(self.graphs['path4'], double))

    def test_assignment(self):
        f = parse("adj(x,y)", allow_free=True)
        self.assertTrue(evaluate(self.graphs['path4'], f, {'x': 1, 'y': 2}))
        self.assertFalse(evaluate(self.graphs['path4'], f, {'x': 1, 'y': 3}))
        with self.assertRaises(UnboundVariableError):
            evaluate(self.graphs['path4'], f, {'x': 1})
        with self.assertRaises(ValueError):
            evaluate(self.graphs['path4'], f, {'x': 1, 'y': 9})

    def test_isomorphism_invariance(self):
        rng = np.random.default_rng(21)
        sentences = [sample_sentence(3, 10, rng=rng) for _ in range(40)]
        for name, g in self.graphs.items():
            perm = rng.permutation(g.n) + 1
            image = relabel(g, {v: int(perm[v - 1]) for v in g.vertices()})
            for s in sentences:
                self.assertEqual(evaluate(g, s), evaluate(image, s), f"{name}: {to_text(s)}")


class TestSampler(unittest.TestCase):

    def test_bounds_and_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            s = sample_sentence(2, 12, rng=rng)
            self.assertTrue(is_sentence(s))
            self.assertLessEqual(quantifier_rank(s), 2)
            self.assertGreaterEqual(quantifier_rank(s), 1)
            self.assertLessEqual(formula_size(s), 12)
            self.assertEqual(parse(to_text(s)), s)

    def test_rank_one_small(self):
        for seed in range(50):
            s = sample_sentence(1, 3, seed=seed)
            self.assertEqual(quantifier_rank(s), 1)
            self.assertLessEqual(formula_size(s), 3)

    def test_seeded_sampler_is_deterministic(self):
        self.assertEqual(sample_sentence(3, 15, seed=8), sample_sentence(3, 15, seed=8))

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            sample_sentence(0, 5, seed=1)
        with self.assertRaises(ValueError):
            sample_sentence(2, 1, seed=1)

    @unittest.skipUnless(FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON)
    def test_ten_thousand_samples(self):
        rng = np.random.default_rng(10)
        for _ in range(10000):
            s = sample_sentence(2, 20, rng=rng)
            self.assertLessEqual(quantifier_rank(s), 2)
            self.assertEqual(parse(to_text(s)), s)


def run_tests():
    return run_suite("FO Logic", [TestParsing, TestPrinting, TestMeasures, TestEvaluation, TestSampler])


if __name__ == "__main__":
    sys.exit(0 if run_tests() else 1)
