"""
The staged pipeline: trajectory -> densities -> distances -> kernel -> basis -> reconstruction.

Each stage persists its artifacts under the output directory together with a JSON sidecar holding a
SHA-256 hash of its configuration subsection and of the upstream stage hash. A stage whose stored
hash matches is loaded instead of recomputed, so interrupted runs resume and changing a downstream
parameter recomputes only the stages below it.

Output layout:

    <out>/manifest.json
    <out>/trajectory/   samples.bin|csv, samples.json
    <out>/densities/    densities.bin, grid.bin, densities.json
    <out>/distances/    d2.bin, [adjacency.bin, radii.bin, knn_triplets.csv], distances.json
    <out>/kernel/       q.bin, v.bin, kernel.json
    <out>/basis/        eigenvalues.bin, psi.bin, phi.bin, v.bin, q.bin, eigenvalues.csv,
                        eigenvectors.csv, basis.json
    <out>/reconstruction/  coefficients.bin, targets.csv, rmse.csv, recon_M<M'>.csv, reconstruction.json
    <out>/plots/        plot-ready CSV files

"""

import os
import time
import numpy as np
from absl import logging

from dynpatterns.dynpatterns_core import ValidationError, DataError, NumericalError, StageError
from dynpatterns import config as config_lib
from dynpatterns import extension, flow_zoo, flows, geometry, measures, reconstruct, spectral, utils

TOOL_VERSION = '0.1.0'

STAGES = ['trajectory', 'densities', 'distances', 'kernel', 'basis', 'reconstruction']

PLOT_KINDS = ['eigenvector-timeseries', 'eigenvector-scatter', 'distance-histogram',
              'kernel-decay', 'rmse-vs-M', 'coefficient-magnitudes']


class RunManifest():
    """
    Record of a pipeline run.

    # Attributes:
    # 1: config:  the validated configuration snapshot.
    # 2. output_dir:  root of all artifacts.
    # 3. hashes:  stage -> SHA-256 of its inputs.
    # 4. timings:  stage -> seconds spent (0 when loaded from disk).
    # 5. artifacts:  stage -> list of files relative to output_dir.
    # 6. version:  version of the tool that wrote the run.
    """

    def __init__(self, config, output_dir, hashes=None, timings=None, artifacts=None,
                 version=TOOL_VERSION):
        self.config = config
        self.output_dir = output_dir
        self.hashes = dict(hashes or {})
        self.timings = dict(timings or {})
        self.artifacts = dict(artifacts or {})
        self.version = version

    def path(self, *parts):
        return os.path.join(self.output_dir, *parts)

    def completed(self, stage):
        return stage in self.hashes

    def require(self, stage):
        if not self.completed(stage):
            raise DataError(f"Stage '{stage}' has not been run in {self.output_dir}.")

    def save(self):
        utils.write_sidecar(self.path('manifest.json'),
                            {'config': self.config, 'hashes': self.hashes, 'timings': self.timings,
                             'artifacts': self.artifacts, 'version': self.version})

    @classmethod
    def load(cls, output_dir):
        meta = utils.read_sidecar(os.path.join(output_dir, 'manifest.json'))
        return cls(meta['config'], output_dir, meta['hashes'], meta['timings'], meta['artifacts'],
                   meta.get('version', TOOL_VERSION))


# ---------------------------------------------------------------------------------------------
# Building blocks from a configuration.

def stage_inputs(config):
    """The configuration subsection each stage depends on, in stage order."""
    source = config['source']
    return {'trajectory': {'source': source, source: config[source], 'R': config['window']['R']},
            'densities': {'grid': config['grid'], 'kde': config['kde']},
            'distances': {'metric': config['geometry']['metric'], 'knn': config['geometry']['knn']},
            'kernel': config['kernel'],
            'basis': config['spectral'],
            'reconstruction': config['reconstruct']}


def stage_hashes(config):
    hashes, upstream = {}, ''
    inputs = stage_inputs(config)
    for stage in STAGES:
        upstream = utils.stable_hash(upstream, stage, inputs[stage])
        hashes[stage] = upstream
    return hashes


def build_flow(flow_cfg, R):
    kind = flow_cfg['kind']
    sampling = {'n_samples': flow_cfg['n_samples'],
                'n_presamples': R if flow_cfg['n_presamples'] is None else flow_cfg['n_presamples'],
                'n_transient': flow_cfg['n_transient'],
                'n_substeps': flow_cfg['n_substeps'],
                'initial_state': flow_cfg['initial_state']}
    torus = issubclass(flow_zoo.FLOWS.get(kind, object), flow_zoo.TorusModel)
    if torus:
        sampling['samples_per_period'] = flow_cfg['samples_per_period']
    else:
        sampling['dt'] = flow_cfg['dt']
    flow = flow_zoo.make_flow(kind, flow_cfg['params'], **sampling)
    if torus and flow_cfg['dt'] is not None:
        flow.set_sampling(dt=flow_cfg['dt'])
    return flow


def build_trajectory(config):
    R = config['window']['R']
    if config['source'] == 'flow':
        flow_cfg = config['flow']
        flow = build_flow(flow_cfg, R)
        obs_cfg = flow_cfg['observation']
        obs = flow_zoo.make_observation(obs_cfg['kind'], obs_cfg['selected_components'],
                                        obs_cfg.get('params'))
        return flows.observe(flows.integrate_flow(flow), obs, flow=flow)
    ingest = config['ingest']
    traj = flows.ingest_csv(ingest['path'], ingest['columns'], ingest['dt'], window_length=R,
                            skip_header=ingest['skip_header'], delimiter=ingest['delimiter'])
    expected = ingest.get('expected_rows')
    if expected is not None and traj.samples.shape[0] != expected:
        logging.warning('%s has %d rows, %d were expected; continuing with the rows present.',
                        ingest['path'], traj.samples.shape[0], expected)
    return traj


def kde_spec(config):
    return measures.KdeSpec(config['kde']['bandwidth'], config['kde']['renormalize'])


def kernel_spec(config):
    return spectral.KernelSpec(config['kernel']['epsilon'], config['kernel']['convention'])


def build_grid(traj, config):
    grid = config['grid']
    return measures.make_grid(traj, grid['construction'], Q=grid['Q'], margin=grid['margin'],
                              Q_total=grid['Q_total'], seed=grid['seed'])


# ---------------------------------------------------------------------------------------------
# Persistence of stage artifacts.

def _stage_dir(output_dir, stage):
    path = os.path.join(output_dir, stage)
    os.makedirs(path, exist_ok=True)
    return path


def _stored_hash(output_dir, stage, files):
    folder = os.path.join(output_dir, stage)
    meta_path = os.path.join(folder, stage + '.json')
    if not os.path.exists(meta_path) or \
            not all(os.path.exists(os.path.join(folder, f)) for f in files):
        return None
    return utils.read_sidecar(meta_path).get('hash')


def save_field(folder, field, stage_hash=None):
    utils.save_matrix(os.path.join(folder, 'densities.bin'), field.densities)
    utils.save_matrix(os.path.join(folder, 'grid.bin'), field.grid.points)
    meta = field.describe()
    meta.update({'hash': stage_hash, 'fingerprint': field.fingerprint()})
    utils.write_sidecar(os.path.join(folder, 'densities.json'), meta)


def load_field(folder, mmap=False):
    meta = utils.read_sidecar(os.path.join(folder, 'densities.json'))
    grid = measures.EvaluationGrid(utils.load_matrix(os.path.join(folder, 'grid.bin')), meta['grid'])
    kde = measures.KdeSpec(meta['kde']['bandwidth'], meta['kde']['renormalize'])
    densities = utils.load_matrix(os.path.join(folder, 'densities.bin'), mmap=mmap)
    return measures.WindowDensityField(densities, grid, measures.WindowSpec(meta['window']['R']), kde,
                                       meta['bandwidth'])


def save_distances(folder, dm, stage_hash=None, csv=False):
    utils.save_matrix(os.path.join(folder, 'd2.bin'), dm.d2)
    if dm.adjacency is not None:
        utils.save_matrix(os.path.join(folder, 'adjacency.bin'), dm.adjacency.astype(np.uint8))
        utils.save_matrix(os.path.join(folder, 'radii.bin'), dm.radii)
        if csv:
            t = dm.triplets()
            utils.write_csv(os.path.join(folder, 'knn_triplets.csv'), [t[:, 0], t[:, 1], t[:, 2]],
                            ['i', 'j', 'd2'])
    utils.write_sidecar(os.path.join(folder, 'distances.json'),
                        {'hash': stage_hash, 'N': dm.N, 'sparsity': dm.sparsity, 'k': dm.k,
                         'metric': dm.metric, 'fingerprint': dm.fingerprint()})


def load_distances(folder):
    meta = utils.read_sidecar(os.path.join(folder, 'distances.json'))
    d2 = utils.load_matrix(os.path.join(folder, 'd2.bin'))
    if meta['sparsity'] == 'knn':
        adjacency = utils.load_matrix(os.path.join(folder, 'adjacency.bin')).astype(bool)
        radii = utils.load_matrix(os.path.join(folder, 'radii.bin'))
        return geometry.DistanceMatrix(d2, 'knn', meta['k'], adjacency, radii, meta['metric'])
    return geometry.DistanceMatrix(d2, metric=meta['metric'])


def save_basis(folder, basis, stage_hash=None, csv=True):
    for name in ('eigenvalues', 'psi', 'phi', 'v', 'q'):
        utils.save_matrix(os.path.join(folder, name + '.bin'), getattr(basis, name))
    if csv:
        utils.write_csv(os.path.join(folder, 'eigenvalues.csv'),
                        [np.arange(1, basis.M + 1), basis.eigenvalues], ['l', 'lambda'])
        utils.write_csv(os.path.join(folder, 'eigenvectors.csv'),
                        [np.arange(basis.N)] + [basis.phi[:, l] for l in range(basis.M)],
                        ['i'] + [f'phi_{l + 1}' for l in range(basis.M)])
    meta = basis.describe()
    meta['hash'] = stage_hash
    utils.write_sidecar(os.path.join(folder, 'basis.json'), meta)


def load_basis(folder):
    meta = utils.read_sidecar(os.path.join(folder, 'basis.json'))
    arrays = {name: utils.load_matrix(os.path.join(folder, name + '.bin'))
              for name in ('eigenvalues', 'psi', 'phi', 'v', 'q')}
    kernel = None if meta['kernel'] is None else \
        spectral.KernelSpec(meta['kernel']['value'], meta['kernel']['convention'])
    return spectral.SpectralBasis(arrays['eigenvalues'], arrays['psi'], arrays['phi'], arrays['v'],
                                  arrays['q'], kernel, meta['distance_hash'])


def load_extension_context(output_dir, lam_floor=None, prefactor=None):
    """The frozen training state of a completed run, ready for out-of-sample extension."""
    manifest = RunManifest.load(output_dir)
    manifest.require('basis')
    ext_cfg = manifest.config.get('extension', config_lib.DEFAULTS['extension'])
    field = load_field(manifest.path('densities'))
    dm = load_distances(manifest.path('distances'))
    if dm.metric != 'hellinger':
        raise ValidationError("Out-of-sample extension needs a basis built on Hellinger distances.")
    basis = load_basis(manifest.path('basis'))
    ctx = extension.ExtensionContext(field, basis, basis.kernel, dm,
                                     ext_cfg['lam_floor'] if lam_floor is None else lam_floor,
                                     ext_cfg['prefactor'] if prefactor is None else prefactor)
    # the rebuilt field must carry the grid and KDE settings the run stored
    ctx.check(utils.read_sidecar(manifest.path('densities', 'densities.json')).get('fingerprint'))
    return ctx


# ---------------------------------------------------------------------------------------------
# The staged run.

class _Run():
    """In-memory artifacts of a run, loaded from disk on first use when a stage was skipped."""

    def __init__(self, manifest):
        self.manifest = manifest
        self.config = manifest.config
        self.cache = {}

    def get(self, name):
        if name not in self.cache:
            path = self.manifest.path
            if name == 'trajectory':
                self.cache[name] = flows.load_trajectory(path('trajectory', 'samples'))
            elif name == 'densities':
                self.cache[name] = load_field(path('densities'))
            elif name == 'distances':
                self.cache[name] = load_distances(path('distances'))
            elif name == 'basis':
                self.cache[name] = load_basis(path('basis'))
            elif name == 'window':
                self.cache[name] = measures.WindowSpec(self.config['window']['R'])
        return self.cache[name]


def _trajectory_stage(run, folder, stage_hash):
    traj = build_trajectory(run.config)
    fmt = 'csv' if run.config['output']['formats'] == ['csv'] else 'binary'
    flows.save_trajectory(traj, os.path.join(folder, 'samples'), fmt)
    meta = utils.read_sidecar(os.path.join(folder, 'samples.json'))
    meta['hash'] = stage_hash
    utils.write_sidecar(os.path.join(folder, 'trajectory.json'), meta)
    run.cache['trajectory'] = traj
    return ['trajectory/samples.' + ('csv' if fmt == 'csv' else 'bin'), 'trajectory/samples.json']


def _densities_stage(run, folder, stage_hash):
    traj = run.get('trajectory')
    window = run.get('window')
    grid = build_grid(traj, run.config)
    field = measures.estimate_densities(measures.build_windows(traj, window), grid, kde_spec(run.config),
                                        window, threads=run.config['threads'])
    save_field(folder, field, stage_hash)
    run.cache['densities'] = field
    return ['densities/densities.bin', 'densities/grid.bin', 'densities/densities.json']


def _distances_stage(run, folder, stage_hash):
    geo = run.config['geometry']
    if geo['metric'] == 'euclidean':
        dm = geometry.euclidean_distances(run.get('trajectory'))
    else:
        dm = geometry.pairwise_distances(run.get('densities'))
    if geo['knn'] is not None:
        dm = geometry.knn_truncate(dm, geo['knn'])
    save_distances(folder, dm, stage_hash, csv='csv' in run.config['output']['formats'])
    run.cache['distances'] = dm
    files = ['distances/d2.bin', 'distances/distances.json']
    if dm.adjacency is not None:
        files += ['distances/adjacency.bin', 'distances/radii.bin']
    return files


def _kernel_stage(run, folder, stage_hash):
    dm = run.get('distances')
    spec = kernel_spec(run.config)
    sparse = dm.adjacency is not None and dm.N > run.config['spectral']['dense_max_n']
    normalized = spectral.normalize(spectral.kernel_matrix(dm, spec, sparse=sparse))
    utils.save_matrix(os.path.join(folder, 'q.bin'), normalized.q)
    utils.save_matrix(os.path.join(folder, 'v.bin'), normalized.v)
    utils.write_sidecar(os.path.join(folder, 'kernel.json'),
                        {'hash': stage_hash, 'kernel': spec.describe(), 'sparse': sparse,
                         'min_v': float(normalized.v.min()), 'max_v': float(normalized.v.max())})
    run.cache['normalized'] = normalized
    return ['kernel/q.bin', 'kernel/v.bin', 'kernel/kernel.json']


def _basis_stage(run, folder, stage_hash):
    dm = run.get('distances')
    spec = kernel_spec(run.config)
    dense_max_n = run.config['spectral']['dense_max_n']
    normalized = run.cache.get('normalized')
    if normalized is None:
        sparse = dm.adjacency is not None and dm.N > dense_max_n
        normalized = spectral.normalize(spectral.kernel_matrix(dm, spec, sparse=sparse))
    basis = spectral.eigendecompose(normalized, run.config['spectral']['M'], dense_max_n, kernel=spec,
                                    distance_hash=dm.fingerprint())
    save_basis(folder, basis, stage_hash, csv='csv' in run.config['output']['formats'])
    run.cache['basis'] = basis
    return ['basis/' + f for f in ('eigenvalues.bin', 'psi.bin', 'phi.bin', 'v.bin', 'q.bin',
                                   'basis.json')]


def _reconstruction_stage(run, folder, stage_hash):
    rec = run.config['reconstruct']
    basis = run.get('basis')
    traj = run.get('trajectory')
    targets, labels = reconstruct.window_targets(traj, run.get('window'), rec['moments'], rec['mode'],
                                                 rec['max_order'])
    result = reconstruct.reconstruct_moments(basis, targets, rec['truncations'], rec['normalize'], labels)
    utils.save_matrix(os.path.join(folder, 'coefficients.bin'), result.coefficients)
    utils.write_csv(os.path.join(folder, 'targets.csv'), [targets[:, j] for j in range(targets.shape[1])],
                    labels)
    for Mp in result.truncations:
        recon = result.reconstructions[Mp]
        utils.write_csv(os.path.join(folder, f'recon_M{Mp}.csv'),
                        [recon[:, j] for j in range(recon.shape[1])], labels)
    Ms = result.truncations
    utils.write_csv(os.path.join(folder, 'rmse.csv'),
                    [Ms] + [[result.rmse[Mp][j] for Mp in Ms] for j in range(len(labels))],
                    ['M_prime'] + labels)
    utils.write_sidecar(os.path.join(folder, 'reconstruction.json'),
                        {'hash': stage_hash, 'labels': labels, 'mode': rec['mode'],
                         'normalized': rec['normalize'], 'truncations': Ms})
    run.cache['reconstruction'] = result
    return ['reconstruction/coefficients.bin', 'reconstruction/targets.csv', 'reconstruction/rmse.csv',
            'reconstruction/reconstruction.json']


_STAGE_FUNCTIONS = {'trajectory': _trajectory_stage,
                    'densities': _densities_stage,
                    'distances': _distances_stage,
                    'kernel': _kernel_stage,
                    'basis': _basis_stage,
                    'reconstruction': _reconstruction_stage}

# files whose presence a skipped stage requires
_REQUIRED = {'trajectory': ['trajectory.json', 'samples.json'],
             'densities': ['densities.bin', 'grid.bin'],
             'distances': ['d2.bin'],
             'kernel': ['q.bin', 'v.bin'],
             'basis': ['eigenvalues.bin', 'psi.bin', 'phi.bin'],
             'reconstruction': ['coefficients.bin', 'rmse.csv']}


def _required_files(stage, config):
    files = list(_REQUIRED[stage])
    if stage == 'trajectory':
        files.append('samples.csv' if config['output']['formats'] == ['csv'] else 'samples.bin')
    elif stage == 'distances' and config['geometry']['knn'] is not None:
        files += ['adjacency.bin', 'radii.bin']
    return files


def run_pipeline(config, until='reconstruction', output_dir=None, force=False):
    """
    Run the stages in order up to and including `until`, persisting each.

    :param config: a configuration dictionary; it is validated before any computation.
    :param output_dir: overrides config['output']['directory'].
    :param force: recompute every stage regardless of stored hashes.
    :return: RunManifest.
    """
    if until not in STAGES:
        raise ValidationError(f"Unknown stage '{until}', expected one of {STAGES}.")
    config = config_lib.validate(config_lib.deep_merge(config_lib.DEFAULTS, config))
    output_dir = output_dir or config['output']['directory'] or config_lib.default_output_dir()
    config['output']['directory'] = output_dir
    os.makedirs(output_dir, exist_ok=True)

    manifest = RunManifest(config, output_dir)
    run = _Run(manifest)
    hashes = stage_hashes(config)
    recompute = force
    for stage in STAGES[:STAGES.index(until) + 1]:
        folder = _stage_dir(output_dir, stage)
        stored = _stored_hash(output_dir, stage, _required_files(stage, config))
        if not recompute and stored == hashes[stage]:
            logging.info('Stage %s is up to date; skipping.', stage)
            manifest.hashes[stage] = hashes[stage]
            manifest.timings[stage] = 0.0
            manifest.artifacts[stage] = sorted(stage + '/' + f for f in os.listdir(folder))
            continue
        # everything below a recomputed stage is recomputed too
        recompute = True
        start = time.time()
        try:
            files = _STAGE_FUNCTIONS[stage](run, folder, hashes[stage])
        except (ValidationError, DataError, NumericalError) as err:
            manifest.save()
            raise StageError(stage, err) from err
        manifest.timings[stage] = time.time() - start
        manifest.hashes[stage] = hashes[stage]
        manifest.artifacts[stage] = files
        manifest.save()
        logging.debug('Stage %s took %.3f s.', stage, manifest.timings[stage])
    manifest.save()
    manifest.run = run
    return manifest


def _loaded(manifest):
    run = getattr(manifest, 'run', None)
    if run is None:
        run = _Run(manifest)
        manifest.run = run
    return run


def run_diagnostics(manifest, k_candidates=None):
    """Skewness scan over candidate k on the dense distances of a run; writes diagnostics/skewness.csv."""
    manifest.require('distances')
    run = _loaded(manifest)
    dm = run.get('distances')
    dense = geometry.DistanceMatrix(dm.d2, metric=dm.metric)
    ks = k_candidates or manifest.config['geometry']['scan_k']
    if not ks:
        raise ValidationError("No candidate k given for the skewness scan (geometry.scan_k).")
    diag = geometry.skewness_scan(dense, ks)
    folder = _stage_dir(manifest.output_dir, 'diagnostics')
    utils.write_csv(os.path.join(folder, 'skewness.csv'), [diag.k_candidates, diag.skewness],
                    ['k', 'skewness'])
    utils.write_sidecar(os.path.join(folder, 'skewness.json'), diag.summary())
    return diag


def emit_plot_data(manifest, kind, ks=None, n_anchors=None, eigenvectors=None):
    """
    Write plot-ready CSV files of one kind into <out>/plots/ and return their paths.

    kinds: eigenvector-timeseries, eigenvector-scatter, distance-histogram, kernel-decay, rmse-vs-M,
        coefficient-magnitudes.
    """
    if kind not in PLOT_KINDS:
        raise ValidationError(f"Unknown plot kind '{kind}', expected one of {PLOT_KINDS}.")
    run = _loaded(manifest)
    config = manifest.config
    folder = _stage_dir(manifest.output_dir, 'plots')
    written = []

    if kind in ('eigenvector-timeseries', 'eigenvector-scatter'):
        manifest.require('basis')
        basis = run.get('basis')
        ls = list(eigenvectors or range(1, basis.M + 1))
        for l in ls:
            if l < 1 or l > basis.M:
                raise ValidationError(f"Eigenvector index {l} outside [1, {basis.M}].")
        columns = [basis.phi[:, l - 1] for l in ls]
        header = [f'phi_{l}' for l in ls]
        traj = run.get('trajectory')
        if kind == 'eigenvector-timeseries':
            path = os.path.join(folder, 'eigenvector_timeseries.csv')
            utils.write_csv(path, [np.arange(basis.N) * traj.dt] + columns, ['t'] + header)
        else:
            y = traj.indexed()
            path = os.path.join(folder, 'eigenvector_scatter.csv')
            utils.write_csv(path, [y[:, j] for j in range(y.shape[1])] + columns,
                            [f'y{j + 1}' for j in range(y.shape[1])] + header)
        written.append(path)

    elif kind == 'distance-histogram':
        manifest.require('distances')
        dm = run.get('distances')
        dense = geometry.DistanceMatrix(dm.d2, metric=dm.metric)
        ks = ks or config['geometry']['scan_k'] or [config['geometry']['knn']]
        ks = [k for k in ks if k is not None]
        if not ks:
            raise ValidationError("distance-histogram needs at least one k.")
        summary = []
        for k in ks:
            counts, edges, skew = geometry.distance_histogram(dense, k, config['geometry']['bins'])
            path = os.path.join(folder, f'distance_histogram_k{k}.csv')
            utils.write_csv(path, [edges[:-1], edges[1:], counts], ['bin_lo', 'bin_hi', 'count'])
            written.append(path)
            summary.append((k, skew))
        path = os.path.join(folder, 'distance_histogram_skewness.csv')
        utils.write_csv(path, [[k for k, _ in summary], [s for _, s in summary]], ['k', 'skewness'])
        written.append(path)

    elif kind == 'kernel-decay':
        manifest.require('distances')
        dm = run.get('distances')
        n_anchors = n_anchors or config['geometry']['n_anchors']
        anchors, curves = geometry.kernel_decay(dm, kernel_spec(config).epsilon, n_anchors, config['seed'])
        path = os.path.join(folder, 'kernel_decay.csv')
        utils.write_csv(path, [np.arange(1, dm.N + 1)] + [c for c in curves],
                        ['rank'] + [f'anchor_{p}' for p in anchors])
        written.append(path)

    elif kind in ('rmse-vs-M', 'coefficient-magnitudes'):
        manifest.require('reconstruction')
        meta = utils.read_sidecar(manifest.path('reconstruction', 'reconstruction.json'))
        labels = meta['labels']
        if kind == 'rmse-vs-M':
            table = np.loadtxt(manifest.path('reconstruction', 'rmse.csv'), delimiter=',', skiprows=1,
                               ndmin=2)
            Ms, moment, value = [], [], []
            for row in table:
                for j in range(len(labels)):
                    Ms.append(row[0])
                    moment.append(j)
                    value.append(row[j + 1])
            path = os.path.join(folder, 'rmse_vs_M.csv')
            utils.write_csv(path, [Ms, moment, value], ['M_prime', 'target', 'rmse'])
        else:
            c = utils.load_matrix(manifest.path('reconstruction', 'coefficients.bin'))
            path = os.path.join(folder, 'coefficient_magnitudes.csv')
            utils.write_csv(path, [np.arange(1, c.shape[0] + 1)] + [np.abs(c[:, j]) for j in range(c.shape[1])],
                            ['l'] + labels)
        written.append(path)

    logging.info('Wrote %s plot data: %s.', kind, ', '.join(written))
    return written


def refinement_study(base_config, ladder, output_dir=None):
    """
    Run the basis for a ladder of (N, R) at a fixed window duration R * dt and report lambda_2.

    The base configuration fixes the duration (its dt times its R); every rung samples a window of
    that duration with dt = duration / R.
    Refining should make successive changes of lambda_2 shrink.

    :param ladder: list of (N, R) pairs, e.g. [(1000, 20), (2000, 40), (4000, 80)].
    :return: dict with 'rungs', 'lambda2', 'changes' and 'shrinking'.
    """
    if len(ladder) < 2:
        raise ValidationError("A refinement study needs at least two rungs.")
    base = config_lib.deep_merge(config_lib.DEFAULTS, base_config)
    if base['source'] != 'flow':
        raise ValidationError("A refinement study needs a flow source to resample.")
    base['spectral']['M'] = max(2, min(base['spectral']['M'], min(N for N, _ in ladder)))
    base['reconstruct']['truncations'] = []
    flow = build_flow(base['flow'], base['window']['R'])
    duration = flow.dt * base['window']['R']
    root = output_dir or base['output']['directory'] or config_lib.default_output_dir()

    lambda2 = []
    for idx, (N, R) in enumerate(ladder):
        cfg = config_lib.deep_merge(base, {'window': {'R': int(R)},
                                           'flow': {'n_samples': int(N), 'dt': duration / R}})
        if cfg['geometry']['knn'] is not None:
            cfg['geometry']['knn'] = min(cfg['geometry']['knn'], int(N) - 1)
        manifest = run_pipeline(cfg, until='basis', output_dir=os.path.join(root, f'rung_{idx}'))
        basis = manifest.run.get('basis')
        lambda2.append(float(basis.eigenvalues[1]))
        logging.info('Refinement rung N=%d, R=%d, dt=%.4g: lambda_2=%.6g.', N, R, duration / R, lambda2[-1])
    changes = np.abs(np.diff(lambda2)).tolist()
    shrinking = all(b <= a for a, b in zip(changes, changes[1:]))
    return {'rungs': [list(r) for r in ladder], 'duration': duration, 'lambda2': lambda2,
            'changes': changes, 'shrinking': shrinking}
