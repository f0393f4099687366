#!/usr/bin/env python3
"""
Unit tests for chains.py
Rate expressions, the martingale counter, the slow chain, its stationary law
and the oscillating two-state chain.
"""

import math
import os
import sys
import unittest
from fractions import Fraction

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'scripts'))

from chains import (MartingaleConfig, NormalizationError, ProbabilityOverflowError, SlowChainConfig,
                    birth_death_transition_matrix, falling_factorial, martingale_increment_check,
                    oscillator_demo, oscillator_matrix, parse_rate, simulate_martingale,
                    simulate_martingale_ensemble, simulate_slow_chain, stationary_birth_death,
                    stationary_closed_form)
from lab_test_config import FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON, run_suite


class TestRates(unittest.TestCase):

    def test_forms(self):
        constant = parse_rate("2")
        self.assertEqual((constant.kind, constant.c), ('constant', 2.0))
        power = parse_rate("3*n^-0.5")
        self.assertEqual((power.kind, power.c, power.a), ('power', 3.0, 0.5))
        self.assertEqual(parse_rate("n^-1").c, 1.0)
        harmonic = parse_rate("0.5 * (1+1/n)")
        self.assertEqual((harmonic.kind, harmonic.c), ('harmonic', 0.5))

    def test_values_and_limits(self):
        self.assertAlmostEqual(parse_rate("2*n^-1")(4), 0.5)
        self.assertAlmostEqual(parse_rate("(1+1/n)")(4), 1.25)
        self.assertEqual(parse_rate("2*n^-1").limit, 0.0)
        self.assertEqual(parse_rate("2*(1+1/n)").limit, 2.0)
        values = parse_rate("3")(np.arange(1, 5, dtype=float))
        self.assertEqual(values.tolist(), [3.0] * 4)

    def test_printing(self):
        for text in ("2", "3*n^-0.5", "0.5*(1+1/n)"):
            self.assertEqual(str(parse_rate(text)), text)

    def test_rejects_other_forms(self):
        for text in ("1 + n", "exp(-n)", "n^2", ""):
            with self.assertRaises(ValueError):
                parse_rate(text)


class TestMartingale(unittest.TestCase):

    def test_falling_factorial(self):
        self.assertEqual(falling_factorial(5, 2), 20.0)
        self.assertEqual(falling_factorial(5, 0), 1.0)

    def test_zero_rate_stays_at_zero(self):
        traj = simulate_martingale(MartingaleConfig(p=parse_rate("0"), steps=500, seed=1))
        self.assertTrue(np.all(traj.M == 0))
        self.assertTrue(np.all(traj.mu == 0))
        self.assertTrue(np.all(traj.martingale(1) == 0))
        self.assertEqual(len(traj.n), 501)

    def test_compensator(self):
        cfg = MartingaleConfig(p=parse_rate("0.25"), K=1, m=2, steps=3, n0=4)
        traj = simulate_martingale(cfg)
        # (n+1)_2 * 0.25 for n = 4, 5, 6
        self.assertEqual(traj.mu.tolist(), [0.0, 5.0, 12.5, 23.0])

    def test_overflow_reports_step(self):
        cfg = MartingaleConfig(p=parse_rate("1"), K=1, m=1, steps=10, m0=5)
        with self.assertRaises(ProbabilityOverflowError) as ctx:
            simulate_martingale(cfg)
        self.assertEqual(ctx.exception.step, 1)
        with self.assertRaises(ProbabilityOverflowError):
            simulate_martingale_ensemble(cfg, replicas=4)

    def test_bad_config(self):
        with self.assertRaises(ValueError):
            MartingaleConfig(p=parse_rate("0.1"), K=0)

    def test_seeded_runs_repeat(self):
        cfg = MartingaleConfig(p=parse_rate("n^-0.5"), steps=2000, n0=16, seed=4)
        self.assertEqual(simulate_martingale(cfg).M.tolist(), simulate_martingale(cfg).M.tolist())

    def test_square_root_growth(self):
        cfg = MartingaleConfig(p=parse_rate("n^-0.5"), K=1, m=1, steps=20000, n0=16, seed=7)
        ensemble = simulate_martingale_ensemble(cfg, replicas=200)
        slope, _ = ensemble.log_slope(start=1000)
        self.assertAlmostEqual(slope, 0.5, delta=0.05)
        self.assertEqual(len(ensemble.final), 200)

    def test_increments_have_zero_conditional_mean(self):
        cfg = MartingaleConfig(p=parse_rate("n^-0.5"), K=2, m=1, steps=2000, n0=16, seed=9)
        _, states, increments = simulate_martingale_ensemble(cfg, replicas=100, record_increments=True)
        self.assertEqual(states.shape, increments.shape)
        report = martingale_increment_check(states, increments, buckets=5)
        self.assertGreater(len(report), 0)
        for row in report:
            self.assertLess(abs(row['mean']), 4 * row['stderr'] + 1e-12, row)


class TestSlowChain(unittest.TestCase):

    def test_balanced_rates_reach_stationary_law(self):
        cfg = SlowChainConfig(rho=parse_rate("1"), tau=parse_rate("1"), steps=200000, seed=3)
        occupancy = simulate_slow_chain(cfg)
        report = stationary_birth_death(1.0, 1.0)
        self.assertAlmostEqual(sum(occupancy.frequencies.values()), 1.0)
        self.assertTrue(all(state >= 0 for state in occupancy.frequencies))
        self.assertLess(occupancy.tv_to(report.numeric), 0.02)
        self.assertAlmostEqual(occupancy.frequencies[0], report.pi0_numeric, delta=0.02)

    def test_strong_death_rate_stays_low(self):
        cfg = SlowChainConfig(rho=parse_rate("1"), tau=parse_rate("100"), steps=20000, seed=5)
        occupancy = simulate_slow_chain(cfg)
        self.assertGreater(occupancy.frequencies.get(0, 0) + occupancy.frequencies.get(1, 0), 0.98)

    def test_converging_rates(self):
        cfg = SlowChainConfig(rho=parse_rate("(1+1/n)"), tau=parse_rate("2*(1+1/n)"),
                              steps=200000, seed=6)
        occupancy = simulate_slow_chain(cfg)
        self.assertLess(occupancy.tv_to(stationary_birth_death(1.0, 2.0).numeric), 0.03)

    def test_suffix_validation(self):
        with self.assertRaises(ValueError):
            SlowChainConfig(rho=parse_rate("1"), tau=parse_rate("1"), suffix_fraction=0.0)

    @unittest.skipUnless(FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON)
    def test_million_steps(self):
        target = stationary_birth_death(1.0, 1.0).numeric
        short = simulate_slow_chain(SlowChainConfig(parse_rate("1"), parse_rate("1"), steps=10 ** 4, seed=1))
        long = simulate_slow_chain(SlowChainConfig(parse_rate("1"), parse_rate("1"), steps=10 ** 6, seed=1))
        self.assertLess(long.tv_to(target), 0.02)
        self.assertLess(long.tv_to(target), short.tv_to(target))
        harmonic = simulate_slow_chain(SlowChainConfig(parse_rate("(1+1/n)"), parse_rate("(1+1/n)"),
                                                       steps=10 ** 6, seed=2))
        self.assertLess(harmonic.tv_to(target), 0.03)


class TestStationaryLaw(unittest.TestCase):

    def test_unit_ratio(self):
        report = stationary_birth_death(1.0, 1.0)
        self.assertAlmostEqual(report.numeric[1], 1.0 / math.e, delta=1e-10)
        self.assertAlmostEqual(report.numeric.sum(), 1.0, delta=1e-12)

    def test_closed_form_agrees(self):
        for lam in (0.5, 1.0, 2.0):
            report = stationary_birth_death(lam, 1.0)
            self.assertLess(report.max_relative_error(start=1), 1e-8)
            self.assertLess(report.balance_residual, 1e-10)
            self.assertLess(report.tv_gap, 1e-8)

    def test_both_pi0_candidates_reported(self):
        report = stationary_birth_death(2.0, 1.0)
        self.assertAlmostEqual(report.pi0_closed_form, 1.0 / (2.0 * math.exp(2.0)))
        self.assertAlmostEqual(report.pi0_recurrence, 1.0 / 3.0)
        self.assertAlmostEqual(report.pi0_numeric, report.pi0_closed_form, delta=1e-10)
        self.assertEqual(report.to_dict()['pi0']['recurrence'], report.pi0_recurrence)

    def test_small_ratio_concentrates(self):
        report = stationary_birth_death(0.01, 1.0)
        self.assertGreater(report.numeric[0] + report.numeric[1], 0.99)

    def test_closed_form_sums_to_one(self):
        values = stationary_closed_form(3.0, np.arange(60))
        self.assertAlmostEqual(values.sum(), 1.0, places=12)

    def test_transition_matrix_is_stochastic(self):
        W = birth_death_transition_matrix(1.5, 10)
        np.testing.assert_allclose(W.sum(axis=1), np.ones(11))
        self.assertEqual(W[0, 1], 1.0)

    def test_errors(self):
        with self.assertRaises(ValueError):
            stationary_birth_death(0.0, 1.0)
        with self.assertRaises(NormalizationError):
            stationary_birth_death(1.0, 1.0, max_cutoff=3)
        with self.assertRaises(NormalizationError):
            stationary_birth_death(1.0, 1.0, cutoff=2)


class TestOscillator(unittest.TestCase):

    def setUp(self):
        self.trace = oscillator_demo(128, seed=2)

    def test_exact_block_masses(self):
        expected = {4: Fraction(1, 2), 8: Fraction(3, 4), 16: Fraction(3, 8),
                    32: Fraction(11, 16), 64: Fraction(11, 32), 128: Fraction(43, 64)}
        for n, mass in expected.items():
            self.assertEqual(self.trace.mass_at(n), mass)

    def test_oscillation_gap(self):
        ends = [(n, first) for n, first, _ in self.trace.block_ends if n >= 8]
        for (_, a), (_, b) in zip(ends, ends[1:]):
            self.assertGreaterEqual(abs(a - b), Fraction(3, 10))

    def test_matrices_approach_identity(self):
        self.assertTrue(self.trace.rows_stochastic)
        for n, literal, absolute in self.trace.norms:
            self.assertLessEqual(literal, Fraction(1, n))
            self.assertEqual(absolute, Fraction(2, n))
        self.assertEqual(self.trace.to_dict()['max_abs_norm_times_n'], 2.0)

    def test_matrix_blocks(self):
        self.assertEqual(oscillator_matrix(3)[0], (Fraction(2, 3), Fraction(1, 3)))
        self.assertEqual(oscillator_matrix(5)[1], (Fraction(1, 5), Fraction(4, 5)))
        with self.assertRaises(ValueError):
            oscillator_matrix(1)

    def test_sample_path(self):
        self.assertEqual(len(self.trace.sampled_states), 127)
        self.assertTrue(set(self.trace.sampled_states) <= {0, 1})
        with self.assertRaises(KeyError):
            self.trace.mass_at(100)
        with self.assertRaises(ValueError):
            oscillator_demo(3)


def run_tests():
    return run_suite("Chains", [TestRates, TestMartingale, TestSlowChain, TestStationaryLaw, TestOscillator])


if __name__ == "__main__":
    sys.exit(0 if run_tests() else 1)
