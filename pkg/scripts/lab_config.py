#!/usr/bin/env python3
"""
Experiment Configuration System for the attachment lab
Per-experiment YAML sections (model, run, params), model presets, and flat
key=value override files mirroring the command-line flags
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import yaml

from lab_log import LabLog

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG_DIR = REPO_ROOT / 'config' / 'experiments'
DEFAULT_PRESETS = REPO_ROOT / 'config' / 'model_presets.json'

INT_KEYS = {'m', 'replicas', 'seed', 'workers', 'l', 'r', 'samples', 'locality_radius',
            'locality_samples', 'steps', 'K', 'n0', 'm0'}
FLOAT_KEYS = {'alpha', 'max_cost', 'window', 'suffix_fraction'}
RUN_KEYS = ('ngrid', 'replicas', 'workers', 'seed', 'out')
MODEL_KEYS = ('model', 'alpha', 'm')

BUILTIN_PRESETS = {
    'ba': {'kind': 'sequential', 'alpha': 0.0},
    'mixed': {'kind': 'sequential', 'alpha': 0.5},
    'uniform': {'kind': 'sequential', 'alpha': 1.0},
}


class LabConfigError(ValueError):
    """Unreadable or inconsistent configuration"""


def parse_ngrid(text: Any) -> List[int]:
    """'1e3,1e4' -> [1000, 10000]; lists pass through"""
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [item for item in str(text).split(',') if item.strip()]
    grid = []
    for item in items:
        value = float(item)
        if value != int(value):
            raise LabConfigError(f"graph size {item!r} is not an integer")
        grid.append(int(value))
    if not grid:
        raise LabConfigError("empty n grid")
    return grid


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    if key == 'ngrid':
        return parse_ngrid(value)
    if key == 'ks':
        return parse_ngrid(value)
    try:
        if key in INT_KEYS:
            return int(float(value)) if isinstance(value, str) else int(value)
        if key in FLOAT_KEYS:
            return float(value)
    except (TypeError, ValueError):
        raise LabConfigError(f"{key}={value!r} is not a number")
    return value


def load_flag_file(path) -> Dict[str, Any]:
    """Read a key=value file (or YAML for .yaml/.yml); '#' starts a comment"""
    path = Path(path)
    if not path.exists():
        raise LabConfigError(f"config file not found: {path}")
    if path.suffix in ('.yaml', '.yml'):
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise LabConfigError(f"{path}: expected a mapping at top level")
        return {str(k): _coerce(str(k), v) for k, v in data.items()}

    settings = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise LabConfigError(f"{path}:{line_no}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            key = key.lstrip('-').replace('-', '_')
            settings[key] = _coerce(key, value)
    return settings


def load_model_presets(path=DEFAULT_PRESETS) -> Dict[str, Dict[str, Any]]:
    presets = {name: dict(values) for name, values in BUILTIN_PRESETS.items()}
    path = Path(path)
    if path.exists():
        with open(path, 'r', encoding='utf-8') as f:
            presets.update(json.load(f))
    return presets


def resolve_model(settings: Dict[str, Any], presets: Dict[str, Dict[str, Any]],
                  explicit: Iterable[str] = ()) -> Dict[str, Any]:
    """Turn a preset name in settings['model'] into kind + alpha; explicit keys win over the preset"""
    name = settings.get('model')
    if name in presets:
        preset = presets[name]
        settings['model'] = preset.get('kind', 'sequential')
        for key in ('alpha', 'm'):
            if key in preset and key not in explicit:
                settings[key] = preset[key]
    return settings


class LabConfigManager:
    def __init__(self, config_dir=DEFAULT_CONFIG_DIR, presets_path=DEFAULT_PRESETS,
                 log: Optional[LabLog] = None):
        self.config_dir = Path(config_dir)
        self.presets_path = Path(presets_path)
        self.log = log or LabLog()
        self._configs: Dict[str, Dict[str, Any]] = {}
        self._load_all_configs()

    def _load_all_configs(self):
        """Load every experiment YAML file (index.yaml excluded)"""
        if not self.config_dir.exists():
            self.log.warning(f"Config directory {self.config_dir} not found, using built-in defaults")
            return
        for config_file in sorted(self.config_dir.glob('*.yaml')):
            if config_file.stem == 'index':
                continue
            try:
                with open(config_file, 'r', encoding='utf-8') as f:
                    self._configs[config_file.stem] = yaml.safe_load(f) or {}
                self.log.detail(f"Loaded config for {config_file.stem}")
            except (OSError, yaml.YAMLError) as e:
                self.log.warning(f"Error loading {config_file}: {e}")

    @property
    def kinds(self) -> List[str]:
        return sorted(self._configs)

    def get_config(self, kind: str) -> Dict[str, Any]:
        if kind not in self._configs:
            self.log.warning(f"No config found for {kind}, using defaults")
            return self._get_default_config(kind)
        return self._configs[kind]

    def get_model_config(self, kind: str) -> Dict[str, Any]:
        return self.get_config(kind).get('model', {})

    def get_run_config(self, kind: str) -> Dict[str, Any]:
        return self.get_config(kind).get('run', {})

    def get_params(self, kind: str) -> Dict[str, Any]:
        return self.get_config(kind).get('params', {})

    def _get_default_config(self, kind: str) -> Dict[str, Any]:
        defaults = default_experiment_configs()
        return defaults.get(kind, {
            'model': {'kind': 'sequential', 'm': 2, 'alpha': 0.0},
            'run': {'n_grid': [100, 1000], 'replicas': 20, 'workers': 1, 'seed': 0},
            'params': {},
        })

    def settings_for(self, kind: str, config_file=None,
                     overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Flat settings: defaults < experiment YAML < config file < flags.

        Keys outside the model and run sections end up in settings['params'].
        """
        model = self.get_model_config(kind)
        run = self.get_run_config(kind)
        settings: Dict[str, Any] = {
            'model': model.get('kind', 'sequential'),
            'alpha': float(model.get('alpha', 0.0)),
            'm': int(model.get('m', 1)),
            'ngrid': parse_ngrid(run.get('n_grid', [1000])),
            'replicas': int(run.get('replicas', 100)),
            'workers': int(run.get('workers', 1)),
            'seed': int(run.get('seed', 0)),
            'params': dict(self.get_params(kind)),
        }

        explicit = set()
        layers = []
        if config_file is not None:
            layers.append(load_flag_file(config_file))
        if overrides:
            layers.append({k: _coerce(k, v) for k, v in overrides.items() if v is not None})
        for layer in layers:
            for key, value in layer.items():
                if key in MODEL_KEYS or key in RUN_KEYS:
                    settings[key] = value
                    if key != 'model':
                        explicit.add(key)
                    elif value not in load_model_presets(self.presets_path):
                        explicit.add(key)
                else:
                    settings['params'][key] = value
        return resolve_model(settings, load_model_presets(self.presets_path), explicit)


def default_experiment_configs() -> Dict[str, Dict[str, Any]]:
    return {
        'sentence': {
            'name': 'Sentence probabilities',
            'description': 'Fraction of replicas whose G_n satisfies a first-order sentence',
            'model': {'kind': 'sequential', 'm': 2, 'alpha': 0.0},
            'run': {'n_grid': [10, 20, 40], 'replicas': 200, 'workers': 1, 'seed': 1},
            'params': {
                'sentence': 'exists x. exists y. exists z. adj(x,y) & adj(y,z) & adj(x,z)',
                'max_cost': 2.0e8,
            },
        },
        'cyclerate': {
            'name': 'Cycle creation rate',
            'description': 'Cycles of length l closed per step, raw and scaled by n and n/log n',
            'model': {'kind': 'sequential', 'm': 2, 'alpha': 1.0},
            'run': {'n_grid': [1000, 10000, 100000], 'replicas': 200, 'workers': 4, 'seed': 2},
            'params': {'l': 3, 'window': 0.1},
        },
        'degrees': {
            'name': 'Degree profile',
            'description': 'Mean and variance of D_n(k) with the reference bounds',
            'model': {'kind': 'sequential', 'm': 2, 'alpha': 0.0},
            'run': {'n_grid': [100000], 'replicas': 200, 'workers': 4, 'seed': 3},
            'params': {'ks': [10, 100]},
        },
        'locallimit': {
            'name': 'Local limit',
            'description': 'TV distance between r-ball codes of G_n and of Pólya-point trees',
            'model': {'kind': 'sequential', 'm': 1, 'alpha': 1.0},
            'run': {'n_grid': [1000, 10000, 100000], 'replicas': 10, 'workers': 4, 'seed': 4},
            'params': {'r': 1, 'samples': 10000},
        },
        'profile': {
            'name': 'Cycle profile census',
            'description': 'Cycle components per canonical class with growth flags',
            'model': {'kind': 'sequential', 'm': 2, 'alpha': 1.0},
            'run': {'n_grid': [1000, 3000, 10000, 30000], 'replicas': 50, 'workers': 4, 'seed': 5},
            'params': {'r': 2},
        },
    }


def create_experiment_configs(config_dir=DEFAULT_CONFIG_DIR, log: Optional[LabLog] = None) -> List[Path]:
    """Write one YAML file per experiment kind plus index.yaml"""
    log = log or LabLog()
    config_dir = Path(config_dir)
    config_dir.mkdir(parents=True, exist_ok=True)
    configs = default_experiment_configs()
    written = []

    for kind, config in configs.items():
        config_file = config_dir / f'{kind}.yaml'
        with open(config_file, 'w', encoding='utf-8') as f:
            yaml.dump(config, f, default_flow_style=False, allow_unicode=True, sort_keys=False)
        written.append(config_file)
        log.log(f"✅ Created {config_file}")

    index_file = config_dir / 'index.yaml'
    index_data = {
        'available_experiments': list(configs.keys()),
        'config_version': '1.0',
        'description': 'Attachment lab experiment configurations',
    }
    with open(index_file, 'w', encoding='utf-8') as f:
        yaml.dump(index_data, f, default_flow_style=False, sort_keys=False)
    written.append(index_file)
    log.log(f"✅ Created {index_file}")
    return written
