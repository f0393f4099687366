#!/usr/bin/env python3
"""
Test suite for the lab configuration system
"""

import io
import json
import os
import sys
import unittest

import yaml
from rich.console import Console

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'scripts'))

from experiments import ExperimentConfig
from lab_config import (DEFAULT_CONFIG_DIR, LabConfigError, LabConfigManager, create_experiment_configs,
                        default_experiment_configs, load_flag_file, load_model_presets, parse_ngrid)
from lab_log import LabLog
from lab_test_config import FLAG_FILE_TEXT, LabTestHelper, run_suite


def quiet_log():
    return LabLog(console=Console(file=io.StringIO(), markup=False, highlight=False))


class TestParsing(unittest.TestCase):

    def setUp(self):
        self.helper = LabTestHelper()

    def tearDown(self):
        self.helper.cleanup_all()

    def test_ngrid(self):
        self.assertEqual(parse_ngrid('1e3,1e4,1e5'), [1000, 10000, 100000])
        self.assertEqual(parse_ngrid('200, 400'), [200, 400])
        self.assertEqual(parse_ngrid([10, 20]), [10, 20])
        with self.assertRaises(LabConfigError):
            parse_ngrid('1.5e0')
        with self.assertRaises(LabConfigError):
            parse_ngrid('')

    def test_flag_file(self):
        settings = load_flag_file(self.helper.create_test_file(FLAG_FILE_TEXT, suffix='.conf'))
        self.assertEqual(settings, {'model': 'uniform', 'm': 2, 'ngrid': [100, 200], 'replicas': 3,
                                    'seed': 11, 'l': 3})

    def test_flag_file_accepts_dashes(self):
        settings = load_flag_file(self.helper.create_test_file("--locality-radius = 2\n", suffix='.conf'))
        self.assertEqual(settings, {'locality_radius': 2})

    def test_yaml_flag_file(self):
        path = self.helper.create_test_file("alpha: 0.5\nngrid: 1e2,1e3\n", suffix='.yaml')
        self.assertEqual(load_flag_file(path), {'alpha': 0.5, 'ngrid': [100, 1000]})

    def test_bad_flag_files(self):
        with self.assertRaises(LabConfigError):
            load_flag_file('/nonexistent/lab.conf')
        with self.assertRaises(LabConfigError):
            load_flag_file(self.helper.create_test_file("replicas 3\n", suffix='.conf'))
        with self.assertRaises(LabConfigError):
            load_flag_file(self.helper.create_test_file("replicas = many\n", suffix='.conf'))


class TestPresets(unittest.TestCase):

    def test_builtin_and_file_presets(self):
        presets = load_model_presets()
        self.assertEqual(presets['uniform']['alpha'], 1.0)
        self.assertEqual(presets['ba-classical']['kind'], 'classical')

    def test_missing_preset_file(self):
        presets = load_model_presets('/nonexistent/presets.json')
        self.assertEqual(sorted(presets), ['ba', 'mixed', 'uniform'])


class TestLabConfigManager(unittest.TestCase):

    def setUp(self):
        self.helper = LabTestHelper()
        self.config_dir = self.helper.create_temp_dir() / 'experiments'
        create_experiment_configs(self.config_dir, log=quiet_log())
        self.manager = LabConfigManager(config_dir=self.config_dir, log=quiet_log())

    def tearDown(self):
        self.helper.cleanup_all()

    def test_generated_files(self):
        self.assertEqual(self.manager.kinds, sorted(default_experiment_configs()))
        with open(self.config_dir / 'index.yaml', encoding='utf-8') as f:
            index = yaml.safe_load(f)
        self.assertEqual(index['available_experiments'], list(default_experiment_configs()))

    def test_shipped_configs_match_defaults(self):
        defaults = default_experiment_configs()
        for kind, expected in defaults.items():
            with open(DEFAULT_CONFIG_DIR / f'{kind}.yaml', encoding='utf-8') as f:
                self.assertEqual(yaml.safe_load(f), expected, kind)

    def test_yaml_defaults(self):
        settings = self.manager.settings_for('cyclerate')
        self.assertEqual(settings['model'], 'sequential')
        self.assertEqual(settings['alpha'], 1.0)
        self.assertEqual(settings['m'], 2)
        self.assertEqual(settings['ngrid'], [1000, 10000, 100000])
        self.assertEqual(settings['params'], {'l': 3, 'window': 0.1})

    def test_precedence(self):
        flag_file = self.helper.create_test_file(FLAG_FILE_TEXT, suffix='.conf')
        settings = self.manager.settings_for('cyclerate', config_file=flag_file,
                                             overrides={'replicas': 7, 'alpha': '0.25', 'seed': None})
        self.assertEqual(settings['replicas'], 7)
        self.assertEqual(settings['seed'], 11)
        self.assertEqual(settings['ngrid'], [100, 200])
        self.assertEqual(settings['model'], 'sequential')
        self.assertEqual(settings['alpha'], 0.25)
        self.assertEqual(settings['params'], {'l': 3, 'window': 0.1})

    def test_preset_sets_alpha(self):
        flag_file = self.helper.create_test_file(FLAG_FILE_TEXT, suffix='.conf')
        settings = self.manager.settings_for('sentence', config_file=flag_file)
        self.assertEqual(settings['alpha'], 1.0)
        cfg = ExperimentConfig.from_settings(settings)
        self.assertEqual(cfg.model.alpha, 1.0)
        self.assertEqual(cfg.n_grid, (100, 200))
        self.assertEqual(cfg.params['l'], 3)

    def test_classical_preset(self):
        settings = self.manager.settings_for('degrees', overrides={'model': 'ba-classical'})
        self.assertEqual(settings['model'], 'classical')
        self.assertEqual(settings['alpha'], 0.0)

    def test_params_are_copied(self):
        self.manager.settings_for('cyclerate', overrides={'l': 5})
        self.assertEqual(self.manager.get_params('cyclerate')['l'], 3)

    def test_missing_directory_uses_defaults(self):
        manager = LabConfigManager(config_dir=self.config_dir / 'missing', log=quiet_log())
        self.assertEqual(manager.kinds, [])
        self.assertEqual(manager.get_config('degrees'), default_experiment_configs()['degrees'])
        self.assertEqual(manager.get_run_config('unknown')['replicas'], 20)

    def test_presets_path_is_honoured(self):
        presets = self.helper.create_test_file(json.dumps({'tiny': {'kind': 'classical', 'alpha': 0.3}}),
                                               suffix='.json')
        manager = LabConfigManager(config_dir=self.config_dir, presets_path=presets, log=quiet_log())
        settings = manager.settings_for('profile', overrides={'model': 'tiny'})
        self.assertEqual((settings['model'], settings['alpha']), ('classical', 0.3))


def run_tests():
    return run_suite("Lab Config", [TestParsing, TestPresets, TestLabConfigManager])


if __name__ == "__main__":
    sys.exit(0 if run_tests() else 1)
