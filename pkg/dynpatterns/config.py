"""
Pipeline configuration: an explicit default tree, presets for the benchmark systems, deep merging of
user files and validation before any computation.

A configuration is a nested plain dictionary. Every key the pipeline reads appears in DEFAULTS, so
`config dump-defaults` shows the complete set of knobs.

"""

import copy
import json
import math
import os

from dynpatterns.dynpatterns_core import ValidationError, DataError
from dynpatterns import flow_zoo

OUTPUT_DIR_ENV = 'DYNPATTERNS_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = './dynpatterns_out'


def default_output_dir():
    return os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


DEFAULTS = {
    'source': 'flow',          # 'flow' or 'ingest'
    'flow': {
        'kind': 'TorusModelI',
        'params': {},
        'initial_state': None,       # None keeps the flow's default
        'dt': None,                  # None keeps the flow's default (torus models use samples_per_period)
        'samples_per_period': flow_zoo.TORUS_SAMPLES_PER_PERIOD,
        'n_samples': 2000,
        'n_presamples': None,        # None means R, so windows at index 0 are full
        'n_transient': None,
        'n_substeps': 10,
        'observation': {'kind': 'TorusEmbed3D', 'selected_components': [0, 1], 'params': {}},
    },
    'ingest': {
        'path': None,
        'columns': None,
        'delimiter': 'auto',
        'skip_header': 0,
        'dt': 1.0,
        'expected_rows': None,       # a mismatch is logged as a warning
    },
    'window': {'R': 40},
    'grid': {'construction': 'tensor', 'Q': 50, 'Q_total': None, 'margin': 0.1, 'seed': 0},
    'kde': {'bandwidth': 'scott', 'renormalize': False},
    'geometry': {'metric': 'hellinger', 'knn': 500, 'scan_k': [], 'n_anchors': 5, 'bins': 50},
    'kernel': {'epsilon': 1.0, 'convention': 'main'},
    'spectral': {'M': 25, 'dense_max_n': 4000},
    'reconstruct': {'moments': [1, 2, 3, 4], 'mode': 'statistics', 'truncations': [5, 15, 25],
                    'normalize': False, 'max_order': 6},
    'extension': {'lam_floor': 1e-10, 'prefactor': 'nystrom'},
    'output': {'directory': None, 'formats': ['binary', 'csv']},
    'seed': 0,
    'threads': 1,
}

# Parameter values of the benchmark experiments; n_samples is reduced to desk scale.
PRESETS = {
    'torus-model-1': {
        'flow': {'kind': 'TorusModelI', 'params': {'beta': 0.5, 'zeta': math.sqrt(30.0)},
                 'samples_per_period': 500, 'n_samples': 4000,
                 'observation': {'kind': 'TorusEmbed3D', 'selected_components': [0, 1]}},
        'window': {'R': 40},
        'geometry': {'knn': 500},
        'kernel': {'epsilon': 1.0},
    },
    'torus-model-2': {
        'flow': {'kind': 'TorusModelII', 'params': {'beta': 0.5, 'zeta': 1.0 / math.sqrt(30.0)},
                 'samples_per_period': 500, 'n_samples': 8000,
                 'observation': {'kind': 'TorusEmbed3D', 'selected_components': [0, 1]}},
        'window': {'R': 80},
        'geometry': {'knn': 7000},
        'kernel': {'epsilon': 0.18},
    },
    'oxtoby': {
        'flow': {'kind': 'OxtobyTorus', 'params': {'zeta': math.sqrt(20.0)}, 'dt': 0.01,
                 'n_samples': 6000,
                 'observation': {'kind': 'TorusFlatEmbed4D', 'selected_components': [0, 1]}},
        'window': {'R': 40},
        'geometry': {'knn': 3000},
        'kernel': {'epsilon': 1.0},
    },
    'lorenz': {
        'flow': {'kind': 'Lorenz63', 'dt': 0.0075, 'n_samples': 6000, 'n_transient': 150,
                 'observation': {'kind': 'LorenzIdentity3D', 'selected_components': [0, 1]}},
        'window': {'R': 30},
        # figure files say eps0.4; the text value is used
        'geometry': {'knn': 2000},
        'kernel': {'epsilon': 0.32},
    },
    'rmm': {
        'source': 'ingest',
        # Sept 1983 - June 2006 daily; current archives may differ by a few rows
        'ingest': {'columns': [0, 1], 'dt': 1.0, 'expected_rows': 8337},
        'window': {'R': 60},
        'geometry': {'knn': 100},
        'kernel': {'epsilon': 0.02},
        'spectral': {'M': 50},
        'reconstruct': {'truncations': [5, 15, 50], 'normalize': True},
    },
}


def deep_merge(base, override):
    """Return a copy of base with override applied recursively; dictionaries merge, the rest replaces."""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def make_config(preset=None, overrides=None):
    """DEFAULTS, then the preset, then overrides. Not validated."""
    config = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}.")
        config = deep_merge(config, PRESETS[preset])
    config = deep_merge(config, overrides)
    if config['output']['directory'] is None:
        config['output']['directory'] = default_output_dir()
    return config


def load_config(path=None, preset=None, overrides=None):
    """
    Read a JSON configuration file and merge it over DEFAULTS (and a preset, if the file or the
    caller names one). The result is validated.
    """
    user = {}
    if path is not None:
        if not os.path.exists(path):
            raise DataError(f"Configuration file {path} does not exist.")
        with open(path, 'r') as f:
            try:
                user = json.load(f)
            except json.JSONDecodeError as err:
                raise ValidationError(f"{path}: invalid JSON ({err}).") from err
        if not isinstance(user, dict):
            raise ValidationError(f"{path}: the top level must be an object.")
    preset = user.pop('preset', None) if preset is None else preset
    config = make_config(preset, deep_merge(user, overrides))
    validate(config)
    return config


def _fail(key, message):
    raise ValidationError(f"config.{key}: {message}")


def _int(config, key, lo=None, hi=None, allow_none=False):
    section, _, name = key.rpartition('.')
    node = config
    for part in section.split('.') if section else []:
        node = node[part]
    value = node.get(name)
    if value is None:
        if allow_none:
            return None
        _fail(key, "is required.")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        _fail(key, f"must be an integer, got {value!r}.")
    if lo is not None and value < lo:
        _fail(key, f"must be >= {lo}, got {value}.")
    if hi is not None and value > hi:
        _fail(key, f"must be <= {hi}, got {value}.")
    return int(value)


def _positive(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0 \
            or not math.isfinite(value):
        _fail(key, f"must be a positive number, got {value!r}.")


def _choice(value, key, choices):
    if value not in choices:
        _fail(key, f"must be one of {list(choices)}, got {value!r}.")


def expected_samples(config):
    """N if it is known before any data is read, else None."""
    if config['source'] == 'flow':
        return config['flow']['n_samples']
    rows = config['ingest'].get('expected_rows')
    return None if rows is None else rows - config['window']['R']


def validate(config):
    """
    Check every parameter the pipeline reads. Raises ValidationError naming the key path.
    """
    unknown = set(config) - set(DEFAULTS)
    if unknown:
        _fail(sorted(unknown)[0], "unknown section.")
    _choice(config['source'], 'source', ('flow', 'ingest'))
    R = _int(config, 'window.R', lo=1)

    if config['source'] == 'flow':
        flow = config['flow']
        _choice(flow['kind'], 'flow.kind', sorted(flow_zoo.FLOWS))
        _choice(flow['observation']['kind'], 'flow.observation.kind', sorted(flow_zoo.OBSERVATIONS))
        _int(config, 'flow.n_samples', lo=2)
        _int(config, 'flow.n_presamples', lo=R - 1, allow_none=True)
        _int(config, 'flow.n_transient', lo=0, allow_none=True)
        _int(config, 'flow.n_substeps', lo=1)
        _int(config, 'flow.samples_per_period', lo=1)
        if flow['dt'] is not None:
            _positive(flow['dt'], 'flow.dt')
        comps = flow['observation']['selected_components']
        if not comps or len(set(comps)) != len(comps):
            _fail('flow.observation.selected_components', f"must be distinct indices, got {comps}.")
    else:
        ingest = config['ingest']
        if not ingest['path']:
            _fail('ingest.path', "is required when source is 'ingest'.")
        _positive(ingest['dt'], 'ingest.dt')
        _int(config, 'ingest.skip_header', lo=0)
        _int(config, 'ingest.expected_rows', lo=R + 1, allow_none=True)

    grid = config['grid']
    _choice(grid['construction'], 'grid.construction', ('tensor', 'subsample'))
    if grid['construction'] == 'tensor':
        _int(config, 'grid.Q', lo=2)
        if not grid['margin'] >= 0:
            _fail('grid.margin', f"must be >= 0, got {grid['margin']}.")
    else:
        _int(config, 'grid.Q_total', lo=2)
    _int(config, 'grid.seed', lo=0)

    bw = config['kde']['bandwidth']
    if isinstance(bw, str):
        _choice(bw, 'kde.bandwidth', ('scott', 'scott_isotropic'))
    else:
        for h in (bw if isinstance(bw, (list, tuple)) else [bw]):
            _positive(h, 'kde.bandwidth')

    N = expected_samples(config)
    geometry = config['geometry']
    _choice(geometry['metric'], 'geometry.metric', ('hellinger', 'euclidean'))
    k_hi = None if N is None else N - 1
    _int(config, 'geometry.knn', lo=1, hi=k_hi, allow_none=True)
    for k in geometry['scan_k']:
        if isinstance(k, bool) or int(k) != k or k < 1 or (k_hi is not None and k > k_hi):
            _fail('geometry.scan_k', f"candidates must be integers in [1, {k_hi}], got {k}.")
    _int(config, 'geometry.n_anchors', lo=1)
    _int(config, 'geometry.bins', lo=1)

    _positive(config['kernel']['epsilon'], 'kernel.epsilon')
    _choice(config['kernel']['convention'], 'kernel.convention', ('main', 'appendix'))

    M = _int(config, 'spectral.M', lo=1, hi=N)
    _int(config, 'spectral.dense_max_n', lo=1)

    rec = config['reconstruct']
    max_order = _int(config, 'reconstruct.max_order', lo=1)
    _choice(rec['mode'], 'reconstruct.mode', ('statistics', 'raw'))
    hi = 4 if rec['mode'] == 'statistics' else max_order
    for n in rec['moments']:
        if isinstance(n, bool) or int(n) != n or n < 1 or n > hi:
            _fail('reconstruct.moments', f"orders must be integers in [1, {hi}], got {n}.")
    for m in rec['truncations']:
        if isinstance(m, bool) or int(m) != m or m < 0 or m > M:
            _fail('reconstruct.truncations', f"must be integers in [0, {M}], got {m}.")
    if not isinstance(rec['normalize'], bool):
        _fail('reconstruct.normalize', "must be true or false.")

    _positive(config['extension']['lam_floor'], 'extension.lam_floor')
    _choice(config['extension']['prefactor'], 'extension.prefactor', ('nystrom', 'literal'))

    for fmt in config['output']['formats']:
        _choice(fmt, 'output.formats', ('binary', 'csv'))
    _int(config, 'seed', lo=0)
    _int(config, 'threads', lo=1)
    return config


def dump_defaults(preset=None):
    """The merged default tree (optionally with a preset applied) as indented JSON."""
    return json.dumps(make_config(preset), indent=2, sort_keys=True)
