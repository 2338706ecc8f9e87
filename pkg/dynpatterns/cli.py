"""
Command line interface.

    dynpatterns <subcommand> [--config file.json] [--preset name] [--output_dir dir] [flags]

Subcommands: generate, ingest, densities, distances, diagnose, spectra, reconstruct, extend,
plot-data, run, config dump-defaults.

Exit codes: 0 success, 2 invalid parameters, 3 missing or malformed data, 4 numerical failure.

"""

import json
import os
import sys
import numpy as np
from absl import app
from absl import flags
from absl import logging

from dynpatterns.dynpatterns_core import ValidationError, DataError, NumericalError, StageError
from dynpatterns import config as config_lib
from dynpatterns import extension, flows, measures, pipeline, utils

FLAGS = flags.FLAGS

flags.DEFINE_string('config', None, 'JSON configuration file merged over the defaults.')
flags.DEFINE_string('preset', None, f'One of {sorted(config_lib.PRESETS)}.')
flags.DEFINE_string('output_dir', None,
                    f'Output directory (default: ${config_lib.OUTPUT_DIR_ENV} or {config_lib.DEFAULT_OUTPUT_DIR}).')
flags.DEFINE_multi_string('set', [], 'Override a configuration value, e.g. --set window.R=40 '
                                     '(the value is parsed as JSON when possible).')
flags.DEFINE_boolean('force', False, 'Recompute every stage regardless of stored hashes.')
flags.DEFINE_integer('threads', None, 'Worker threads for density estimation and extension.')
flags.DEFINE_boolean('ambient', False, 'Use Euclidean distances between raw observations instead of '
                                       'Hellinger distances between window measures.')
flags.DEFINE_string('input', None, 'CSV file for ingest and extend.')
flags.DEFINE_string('columns', None, 'Zero-based column indices to read, e.g. 0,1.')
flags.DEFINE_float('dt', None, 'Sampling interval of ingested data.')
flags.DEFINE_integer('skip_header', None, 'Header lines to skip in ingested files.')
flags.DEFINE_string('knn', None, 'Neighbours kept per window, or "dense" for no truncation.')
flags.DEFINE_string('scan_k', None, 'Candidate k for the skewness scan of diagnose, e.g. 100,500,1000.')
flags.DEFINE_alias('scan-k', 'scan_k')
flags.DEFINE_string('moments', None, 'Moments to reconstruct, e.g. 1,2,3,4.')
flags.DEFINE_string('truncations', None, "Truncation levels M' of the reconstruction, e.g. 5,15,50.")
flags.DEFINE_boolean('normalize', None, 'Report RMSE on unit-norm target columns.')
flags.DEFINE_string('kind', 'all', 'Plot data kind(s), comma separated, or "all".')
flags.DEFINE_string('context', None, 'Output directory of a completed run, used by extend.')
flags.DEFINE_string('eigenfunctions', None, 'Eigenfunctions to extend, e.g. 1..10.')
flags.DEFINE_boolean('reconstruct', False, 'extend: also evaluate the moment reconstruction.')
flags.DEFINE_integer('truncation', None, "extend: M' for the reconstruction (default: largest "
                                         "configured truncation).")

COMMANDS = ['generate', 'ingest', 'densities', 'distances', 'diagnose', 'spectra', 'reconstruct',
            'extend', 'plot-data', 'run', 'config']

_UNTIL = {'generate': 'trajectory', 'ingest': 'trajectory', 'densities': 'densities',
          'distances': 'distances', 'diagnose': 'distances', 'spectra': 'basis',
          'reconstruct': 'reconstruction', 'run': 'reconstruction'}


def exit_code(err):
    if isinstance(err, StageError):
        err = err.error
    if isinstance(err, ValidationError):
        return 2
    if isinstance(err, DataError):
        return 3
    if isinstance(err, NumericalError):
        return 4
    return 1


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_path(tree, dotted, value):
    keys = dotted.split('.')
    node = tree
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _int_list(name, text):
    try:
        return utils.parse_int_list(text)
    except ValueError:
        raise ValidationError(f"--{name} expects integers like 1,2,3 or 1..4, got '{text}'.") from None


def overrides_from_flags(command):
    overrides = {}
    for item in FLAGS.set:
        if '=' not in item:
            raise ValidationError(f"--set expects key=value, got '{item}'.")
        key, value = item.split('=', 1)
        _set_path(overrides, key.strip(), _parse_value(value))
    if FLAGS.threads is not None:
        overrides['threads'] = FLAGS.threads
    if FLAGS.ambient:
        _set_path(overrides, 'geometry.metric', 'euclidean')
    if FLAGS.output_dir is not None:
        _set_path(overrides, 'output.directory', FLAGS.output_dir)
    if command == 'ingest':
        if FLAGS.input is None:
            raise ValidationError("ingest needs --input.")
        overrides['source'] = 'ingest'
        _set_path(overrides, 'ingest.path', FLAGS.input)
    if FLAGS.input is not None and command != 'extend':
        _set_path(overrides, 'ingest.path', FLAGS.input)
    if FLAGS.columns is not None:
        _set_path(overrides, 'ingest.columns', utils.parse_int_list(FLAGS.columns))
    if FLAGS.dt is not None:
        _set_path(overrides, 'ingest.dt', FLAGS.dt)
    if FLAGS.skip_header is not None:
        _set_path(overrides, 'ingest.skip_header', FLAGS.skip_header)
    if FLAGS.knn is not None:
        knn = FLAGS.knn.strip().lower()
        if knn in ('dense', 'none'):
            _set_path(overrides, 'geometry.knn', None)
        else:
            try:
                _set_path(overrides, 'geometry.knn', int(knn))
            except ValueError:
                raise ValidationError(f"--knn expects an integer or 'dense', got '{FLAGS.knn}'.") from None
    if FLAGS.scan_k is not None:
        _set_path(overrides, 'geometry.scan_k', _int_list('scan_k', FLAGS.scan_k))
    if FLAGS.moments is not None:
        _set_path(overrides, 'reconstruct.moments', _int_list('moments', FLAGS.moments))
    if FLAGS.truncations is not None:
        _set_path(overrides, 'reconstruct.truncations', _int_list('truncations', FLAGS.truncations))
    if FLAGS.normalize is not None:
        _set_path(overrides, 'reconstruct.normalize', FLAGS.normalize)
    return overrides


def extend_command(context_dir, input_path):
    """Extend the eigenfunctions (and optionally the reconstruction) to the windows of a new series."""
    if context_dir is None or input_path is None:
        raise ValidationError("extend needs --context and --input.")
    ctx = pipeline.load_extension_context(context_dir)
    manifest = pipeline.RunManifest.load(context_dir)
    config = manifest.config
    R = ctx.field.window.R
    columns = utils.parse_int_list(FLAGS.columns) if FLAGS.columns else config['ingest']['columns']
    traj = flows.ingest_csv(input_path, columns, FLAGS.dt or 1.0, window_length=R,
                            skip_header=FLAGS.skip_header or 0)
    windows = measures.build_windows(traj, measures.WindowSpec(R))
    rows = extension.extend_density(np.asarray(windows), ctx)
    ls = utils.parse_int_list(FLAGS.eigenfunctions) if FLAGS.eigenfunctions \
        else list(range(1, ctx.basis.M + 1))
    threads = FLAGS.threads or config['threads']
    values = extension.extend_eigenfunctions(rows, ctx, ls, threads=threads)
    folder = os.path.join(context_dir, 'extension')
    os.makedirs(folder, exist_ok=True)
    path = os.path.join(folder, 'eigenfunctions.csv')
    utils.write_csv(path, [np.arange(rows.shape[0])] + [values[:, j] for j in range(len(ls))],
                    ['i'] + [f'phi_{l}' for l in ls])
    written = [path]
    if FLAGS.reconstruct:
        manifest.require('reconstruction')
        c = utils.load_matrix(manifest.path('reconstruction', 'coefficients.bin'))
        labels = utils.read_sidecar(manifest.path('reconstruction', 'reconstruction.json'))['labels']
        truncations = config['reconstruct']['truncations']
        M_prime = FLAGS.truncation if FLAGS.truncation is not None else max(truncations)
        recon = extension.extend_reconstruction(rows, ctx, c, M_prime)
        path = os.path.join(folder, f'reconstruction_M{M_prime}.csv')
        utils.write_csv(path, [np.arange(rows.shape[0])] + [recon[:, j] for j in range(recon.shape[1])],
                        ['i'] + labels)
        written.append(path)
    return written


def dispatch(argv):
    if len(argv) < 2 or argv[1] not in COMMANDS:
        raise ValidationError(f"Expected a subcommand, one of {COMMANDS}.")
    command = argv[1]

    if command == 'config':
        if len(argv) < 3 or argv[2] != 'dump-defaults':
            raise ValidationError("Usage: dynpatterns config dump-defaults [--preset name].")
        print(config_lib.dump_defaults(FLAGS.preset))
        return

    if command == 'extend':
        for path in extend_command(FLAGS.context, FLAGS.input):
            print(path)
        return

    config = config_lib.load_config(FLAGS.config, FLAGS.preset, overrides_from_flags(command))
    output_dir = config['output']['directory']

    if command == 'plot-data':
        manifest = pipeline.RunManifest.load(output_dir)
        kinds = pipeline.PLOT_KINDS if FLAGS.kind == 'all' else FLAGS.kind.split(',')
        for kind in kinds:
            for path in pipeline.emit_plot_data(manifest, kind.strip()):
                print(path)
        return

    manifest = pipeline.run_pipeline(config, until=_UNTIL[command], output_dir=output_dir,
                                     force=FLAGS.force)
    if command == 'diagnose':
        diag = pipeline.run_diagnostics(manifest)
        print(json.dumps(diag.summary()))
        return
    print(manifest.path('manifest.json'))


def main(argv):
    try:
        dispatch(argv)
    except (ValidationError, DataError, NumericalError, StageError) as err:
        logging.error('%s', err)
        print(f'error: {err}', file=sys.stderr)
        return exit_code(err)
    return 0


def run():
    app.run(main)


if __name__ == '__main__':
    run()
