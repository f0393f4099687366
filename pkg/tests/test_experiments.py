#!/usr/bin/env python3
"""
Unit tests for experiments.py
Result tables, replica scheduling and the five experiment kinds at toy scale.
"""

import io
import json
import math
import os
import sys
import unittest
from collections import Counter

import numpy as np
from rich.console import Console

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'scripts'))

from experiments import (CSV_HEADER, OTHER_CODE, EstimateTable, ExperimentConfig, ExperimentConfigError,
                         ExperimentSuite, FeasibilityError, class_label, classify_growth, cycle_profile_census,
                         degree_lower_bound, degree_profile, estimate_cycle_rate,
                         estimate_sentence_probability, growth_fit, harmonic, local_limit_check,
                         merged_distributions, total_variation, uniform_degree_mean)
from generators import ModelConfig
from lab_log import LabLog
from lab_test_config import FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON, LabTestHelper, run_suite

TRIANGLE = "exists x. exists y. exists z. (adj(x,y) & adj(y,z) & adj(x,z))"


def quiet_log():
    return LabLog(console=Console(file=io.StringIO(), markup=False, highlight=False))


def config(m=2, alpha=0.0, n_grid=(20, 40), replicas=4, workers=1, seed=3, **params):
    return ExperimentConfig(model=ModelConfig(kind='sequential', m=m, alpha=alpha),
                            n_grid=n_grid, replicas=replicas, workers=workers, seed=seed, params=params)


class TestExperimentConfig(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ExperimentConfigError):
            config(n_grid=(40, 20))
        with self.assertRaises(ExperimentConfigError):
            config(n_grid=(1, 20))
        with self.assertRaises(ExperimentConfigError):
            config(n_grid=())
        with self.assertRaises(ExperimentConfigError):
            config(replicas=0)
        with self.assertRaises(ExperimentConfigError):
            config(workers=0)

    def test_from_settings(self):
        cfg = ExperimentConfig.from_settings({'model': 'classical', 'm': 3, 'alpha': 0.5, 'seed': 9,
                                              'ngrid': [100, 200], 'replicas': 5, 'params': {'l': 4}})
        self.assertEqual(cfg.model.kind, 'classical')
        self.assertEqual(cfg.model.m, 3)
        self.assertEqual(cfg.n_grid, (100, 200))
        self.assertEqual(cfg.max_n, 200)
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.params, {'l': 4})

    def test_echo_is_json(self):
        echo = config(l=3).echo()
        self.assertEqual(json.loads(json.dumps(echo))['n_grid'], [20, 40])
        self.assertEqual(echo['model']['m'], 2)


class TestEstimateTable(unittest.TestCase):

    def setUp(self):
        self.table = EstimateTable(metadata={'experiment': 'test'})
        self.table.add(100, 'p_hat', 0.25, 0.5, 100)
        self.table.add(1000, 'p_hat', 1.0 / 3.0, 0.0471, 100)

    def test_csv_text(self):
        text = self.table.to_csv()
        lines = text.split('\n')
        self.assertEqual(lines[0], ','.join(CSV_HEADER))
        self.assertEqual(lines[1], '100,p_hat,0.25,0.5,100')
        self.assertTrue(text.endswith('\n'))

    def test_csv_reload(self):
        again = EstimateTable.from_csv(self.table.to_csv())
        self.assertEqual(again.rows, self.table.rows)

    def test_bad_header(self):
        with self.assertRaises(ValueError):
            EstimateTable.from_csv("n,stat,value\n1,x,2\n")

    def test_negative_or_nan_stderr(self):
        with self.assertRaises(ValueError):
            self.table.add(10, 'x', 0.5, -0.1, 3)
        with self.assertRaises(ValueError):
            self.table.add(10, 'x', 0.5, float('nan'), 3)

    def test_lookup(self):
        self.assertEqual(self.table.get(100, 'p_hat').estimate, 0.25)
        self.assertEqual([row.n for row in self.table.series('p_hat')], [100, 1000])
        self.assertEqual(self.table.stats, ['p_hat'])
        with self.assertRaises(KeyError):
            self.table.get(10, 'p_hat')

    def test_save_writes_both_files(self):
        with LabTestHelper() as helper:
            directory = helper.create_temp_dir()
            csv_path, json_path = self.table.save(directory / 'run' / 'out.csv')
            self.assertEqual(csv_path.name, 'out.csv')
            self.assertEqual(json_path.name, 'out.json')
            self.assertEqual(csv_path.read_text(encoding='utf-8'), self.table.to_csv())
            data = json.loads(json_path.read_text(encoding='utf-8'))
            self.assertEqual(data['metadata']['experiment'], 'test')
            self.assertEqual(len(data['rows']), 2)


class TestSentenceExperiment(unittest.TestCase):

    def test_tautology_and_contradiction(self):
        cfg = config()
        yes = estimate_sentence_probability(cfg, "forall x. x = x")
        no = estimate_sentence_probability(cfg, "exists x. !(x = x)")
        for n in cfg.n_grid:
            self.assertEqual(yes.get(n, 'p_hat').estimate, 1.0)
            self.assertEqual(yes.get(n, 'p_hat').stderr, 0.0)
            self.assertEqual(no.get(n, 'p_hat').estimate, 0.0)

    def test_trees_have_no_triangles(self):
        table = estimate_sentence_probability(config(m=1, n_grid=(30, 60)), TRIANGLE)
        self.assertEqual([row.estimate for row in table.series('p_hat')], [0.0, 0.0])
        self.assertEqual(table.metadata['sentence'],
                         "exists x. exists y. exists z. adj(x, y) & adj(y, z) & adj(x, z)")

    def test_worker_count_does_not_change_results(self):
        sentence = "exists x. exists y. adj2(x,y)"
        serial = estimate_sentence_probability(config(replicas=6), sentence)
        parallel = estimate_sentence_probability(config(replicas=6, workers=2), sentence)
        self.assertEqual(serial.to_csv(), parallel.to_csv())

    def test_infeasible_sentence(self):
        with self.assertRaises(FeasibilityError) as ctx:
            estimate_sentence_probability(config(n_grid=(100, 10000)), TRIANGLE)
        self.assertGreater(ctx.exception.cost, ctx.exception.limit)

    def test_locality_mode_is_marked(self):
        table = estimate_sentence_probability(config(), "exists x. exists y. adj(x,y)",
                                              locality_radius=1, locality_samples=3)
        self.assertTrue(table.metadata['locality']['approximate'])
        self.assertEqual(table.get(40, 'p_hat').estimate, 1.0)


class TestCycleRate(unittest.TestCase):

    def test_trees_close_no_cycles(self):
        table = estimate_cycle_rate(config(m=1, n_grid=(50, 100)), 3)
        for row in table.rows:
            self.assertEqual(row.estimate, 0.0)

    def test_scaled_rows(self):
        table = estimate_cycle_rate(config(n_grid=(50, 100), replicas=5), 2)
        for n in (50, 100):
            rho = table.get(n, 'rho')
            self.assertAlmostEqual(table.get(n, 'n_rho').estimate, n * rho.estimate)
            self.assertAlmostEqual(table.get(n, 'n_over_log_n_rho').estimate, n / math.log(n) * rho.estimate)
        self.assertEqual(table.metadata['cycle_length'], 2)

    def test_bad_length(self):
        with self.assertRaises(ExperimentConfigError):
            estimate_cycle_rate(config(), 1)


class TestDegreeProfile(unittest.TestCase):

    def test_newest_vertex_has_out_degree_only(self):
        table = degree_profile(config(n_grid=(30, 60)), [1, 30])
        self.assertEqual(table.get(30, 'mean_D[k=30]').estimate, 2.0)
        self.assertEqual(table.get(30, 'mean_D[k=30]').stderr, 0.0)
        self.assertEqual(table.get(30, 'mean_Dshift[k=30]').estimate, 0.0)
        self.assertEqual(table.get(60, 'lower_bound[k=1]').estimate, degree_lower_bound(2, 60, 1))
        self.assertIn('var_shape[k=30]', table.stats)

    def test_uniform_reference_mean(self):
        table = degree_profile(config(alpha=1.0, n_grid=(20, 80)), [2, 5])
        for n in (20, 80):
            for k in (2, 5):
                expected = uniform_degree_mean(2, n, k)
                self.assertAlmostEqual(table.get(n, f'urn_mean[k={k}]').estimate, expected)
                self.assertEqual(table.get(n, f'uniform_mean[k={k}]').estimate, expected)

    def test_vertex_range(self):
        with self.assertRaises(ExperimentConfigError):
            degree_profile(config(n_grid=(30, 60)), [31])
        with self.assertRaises(ExperimentConfigError):
            degree_profile(config(), [])

    def test_helpers(self):
        self.assertAlmostEqual(harmonic(4), 25.0 / 12.0)
        self.assertEqual(degree_lower_bound(2, 100, 1), 0.0)
        self.assertAlmostEqual(uniform_degree_mean(1, 3, 1), 1.5)

    def test_preferential_mean_above_lower_bound(self):
        table = degree_profile(config(n_grid=(400,), replicas=40, seed=8), [10, 40])
        for k in (10, 40):
            mean = table.get(400, f'mean_D[k={k}]')
            bound = table.get(400, f'lower_bound[k={k}]').estimate
            self.assertGreater(bound, 0.0)
            self.assertGreaterEqual(mean.estimate + 3.0 * mean.stderr, bound)

    @unittest.skipUnless(FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON)
    def test_desk_scale_degree_lower_bound(self):
        n = 100000
        for m in (1, 2):
            table = degree_profile(config(m=m, n_grid=(n,), replicas=200, workers=8, seed=30 + m), [10, 100])
            for k in (10, 100):
                mean = table.get(n, f'mean_D[k={k}]')
                self.assertGreaterEqual(mean.estimate + 3.0 * mean.stderr, degree_lower_bound(m, n, k))
                self.assertLessEqual(table.get(n, f'var_D[k={k}]').estimate,
                                     10.0 * table.get(n, f'var_shape[k={k}]').estimate)



class TestLocalLimit(unittest.TestCase):

    def test_radius_zero_is_exact(self):
        table = local_limit_check(config(replicas=3), 0, 10)
        for row in table.series('tv'):
            self.assertEqual(row.estimate, 0.0)
            self.assertEqual(row.stderr, 0.0)
        for row in table.series('cyclic_fraction'):
            self.assertEqual(row.estimate, 0.0)

    def test_radius_one_runs(self):
        table = local_limit_check(config(m=1, n_grid=(50, 100), replicas=3), 1, 20)
        for row in table.series('tv'):
            self.assertGreaterEqual(row.estimate, 0.0)
            self.assertLessEqual(row.estimate, 1.0)
        self.assertEqual(table.metadata['radius'], 1)
        self.assertEqual(table.metadata['tree_rule'], 'literal')

    def test_tree_rule_choice(self):
        cfg = config(m=2, alpha=0.5, n_grid=(40,), replicas=2)
        table = local_limit_check(cfg, 2, 10, tree_rule='parent-edge')
        self.assertEqual(table.metadata['tree_rule'], 'parent-edge')
        with self.assertRaises(ExperimentConfigError):
            local_limit_check(config(), 1, 10, tree_rule='bbcs')

    @unittest.skipUnless(FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON)
    def test_desk_scale_local_limit(self):
        grid = (1000, 10000, 100000)
        for alpha in (0.0, 1.0):
            table = local_limit_check(config(m=1, alpha=alpha, n_grid=grid, replicas=10, workers=8, seed=40),
                                      1, 10000)
            rows = table.series('tv')
            self.assertLess(rows[-1].estimate, 0.05)
            for before, after in zip(rows, rows[1:]):
                slack = 2.0 * math.hypot(before.stderr, after.stderr)
                self.assertLessEqual(after.estimate, before.estimate + slack)


    def test_rare_classes_pooled(self):
        labels, p, q = merged_distributions(Counter({b'a': 99, b'b': 1}), Counter({b'a': 100}), floor=0.05)
        self.assertEqual(labels, [b'a', OTHER_CODE])
        np.testing.assert_allclose(p, [0.99, 0.01])
        np.testing.assert_allclose(q, [1.0, 0.0])
        self.assertAlmostEqual(total_variation(p, q), 0.01)

    def test_bad_arguments(self):
        with self.assertRaises(ExperimentConfigError):
            local_limit_check(config(), -1, 10)
        with self.assertRaises(ExperimentConfigError):
            local_limit_check(config(), 1, 0)


class TestProfileCensus(unittest.TestCase):

    def test_trees_have_empty_profile(self):
        table = cycle_profile_census(config(m=1, n_grid=(20, 40, 60), replicas=3), 2)
        self.assertEqual([row.estimate for row in table.series('total')], [0.0, 0.0, 0.0])
        self.assertEqual(table.metadata['classes'], {})
        self.assertEqual(table.metadata['growth_fit']['preferred'], 'undetermined')

    def test_multigraph_classes(self):
        table = cycle_profile_census(config(n_grid=(20, 40, 80), replicas=5), 1)
        for n in (20, 40, 80):
            self.assertGreaterEqual(table.get(n, 'total').estimate, table.get(n, 'multicycles').estimate)
        for label, info in table.metadata['classes'].items():
            self.assertTrue(label.startswith('class:'))
            self.assertIn(info['flag'], ('diverging', 'stationary-candidate'))
            self.assertIn(label, table.stats)

    def test_growth_flags(self):
        grid = [10, 100, 1000]
        rising = classify_growth(grid, [1.0, 2.0, 3.0], [0.01, 0.01, 0.01])
        self.assertEqual(rising['flag'], 'diverging')
        flat = classify_growth(grid, [2.0, 2.01, 1.99], [0.1, 0.1, 0.1])
        self.assertEqual(flat['flag'], 'stationary-candidate')
        self.assertEqual(classify_growth(grid[:2], [1.0, 2.0], [0.1, 0.1])['flag'], 'undetermined')

    def test_growth_fit(self):
        grid = [10, 100, 1000, 10000]
        logs = [math.log(n) for n in grid]
        self.assertEqual(growth_fit(grid, [x ** 2 for x in logs])['preferred'], 'quadratic')
        self.assertEqual(growth_fit(grid, [3 * x + 1 for x in logs])['preferred'], 'linear')

    def test_class_label(self):
        self.assertEqual(class_label(b'C(abc)'), class_label(b'C(abc)'))
        self.assertEqual(len(class_label(b'x')), len('class:') + 12)

    def test_bad_radius(self):
        with self.assertRaises(ExperimentConfigError):
            cycle_profile_census(config(), 0)


class TestExperimentSuite(unittest.TestCase):

    def setUp(self):
        self.suite = ExperimentSuite(log=quiet_log())
        self.helper = LabTestHelper()

    def tearDown(self):
        self.helper.cleanup_all()

    def test_run_and_save(self):
        table = self.suite.run('cyclerate', config(m=1, n_grid=(20, 40), l=3))
        self.assertIs(self.suite.results['cyclerate'], table)
        directory = self.helper.create_temp_dir()
        csv_path, json_path = self.suite.save_results(table, directory / 'cyclerate')
        self.assertTrue(csv_path.exists())
        self.assertTrue(json_path.exists())

    def test_degree_ks_from_text(self):
        table = self.suite.run('degrees', config(n_grid=(30,), ks='1,30'))
        self.assertEqual(table.metadata['ks'], [1, 30])

    def test_unknown_kind(self):
        with self.assertRaises(ExperimentConfigError):
            self.suite.run('spectrum', config())

    def test_sentence_parameter_required(self):
        with self.assertRaises(ExperimentConfigError):
            self.suite.run('sentence', config())

    def test_summary_printed_to_log(self):
        buffer = io.StringIO()
        suite = ExperimentSuite(log=LabLog(console=Console(file=buffer, markup=False, width=120)))
        table = suite.run('sentence', config(sentence="forall x. x = x"))
        suite.print_summary(table)
        self.assertIn('sentence estimates', buffer.getvalue())

    @unittest.skipUnless(FULL_ACCEPTANCE, FULL_ACCEPTANCE_REASON)
    def test_desk_scale_cycle_rate(self):
        table = estimate_cycle_rate(config(alpha=1.0, n_grid=(1000, 10000, 100000), replicas=200,
                                           workers=8), 3)
        scaled = [row.estimate for row in table.series('n_rho')]
        self.assertGreater(min(scaled), 0.0)
        self.assertLess(max(scaled) / min(scaled), 2.0)


def run_tests():
    return run_suite("Experiments", [TestExperimentConfig, TestEstimateTable, TestSentenceExperiment,
                                     TestCycleRate, TestDegreeProfile, TestLocalLimit, TestProfileCensus,
                                     TestExperimentSuite])


if __name__ == "__main__":
    sys.exit(0 if run_tests() else 1)
