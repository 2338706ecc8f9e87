"""
Generating, observing, ingesting and persisting trajectories.

integrate_flow --- fixed-step RK4 integration of a Flow, transient dropped, torus states wrapped.
observe --- apply an ObservationMap to integrated states.
ingest_csv --- read an observed trajectory from a delimited text file.

"""

import os
import numpy as np
from absl import logging

from dynpatterns.dynpatterns_core import ObservedTrajectory, ValidationError, DataError, NumericalError
from dynpatterns import flow_bank, utils


def integrate_flow(flow):
    """
    Integrate a flow and return n_presamples + n_samples states spaced dt apart.

    The first n_transient states (counted from the initial state) are integrated and discarded.
    Each sampling interval is split into n_substeps RK4 steps.

    :param flow: a Flow object.
    :return: array of shape (n_presamples + n_samples, state_dim).
    """
    flow.validate()
    n_keep = flow.n_presamples + flow.n_samples
    n_total = flow.n_transient + n_keep
    h = flow.dt / flow.n_substeps
    fun = flow.vector_field

    state = np.array(flow.initial_state, dtype=float)
    if flow.periodic:
        state = utils.wrap_angle(state)
    out = np.empty((n_keep, flow.state_dim))
    for i in range(n_total):
        if i > 0:
            for _ in range(flow.n_substeps):
                state = flow_bank.rk4_step(fun, state, h)
            if not np.all(np.isfinite(state)):
                raise NumericalError(f"Integration of '{flow.name}' diverged at sample step {i} "
                                     f"(dt={flow.dt}, n_substeps={flow.n_substeps}).")
            if flow.periodic:
                state = utils.wrap_angle(state)
        j = i - flow.n_transient
        if j >= 0:
            out[j] = state
    logging.info('Integrated %s: %d samples (%d pre-samples, %d transient dropped), dt=%g.',
                 flow.name, n_keep, flow.n_presamples, flow.n_transient, flow.dt)
    return out


def observe(states, obs_map, flow=None, dt=None, n_presamples=None):
    """
    Apply the full embedding and keep the selected components: y_i = f(Psi_{i dt} x_0).

    Sampling metadata is taken from `flow` when given, otherwise from dt / n_presamples.
    """
    states = np.asarray(states, dtype=float)
    if states.size == 0:
        raise ValidationError("observe: no states given.")
    samples = obs_map(states)
    if flow is not None:
        dt = flow.dt if dt is None else dt
        n_presamples = flow.n_presamples if n_presamples is None else n_presamples
        provenance = {'flow': flow.describe(), 'observation': obs_map.describe()}
    else:
        provenance = {'observation': obs_map.describe()}
    dt = 1.0 if dt is None else dt
    n_presamples = 0 if n_presamples is None else n_presamples
    return ObservedTrajectory(samples, dt, n_presamples, provenance=provenance)


def _detect_delimiter(path, skip_header):
    with open(path, 'r') as f:
        for lineno, line in enumerate(f, start=1):
            if lineno <= skip_header:
                continue
            if line.strip() == '' or line.lstrip().startswith('#'):
                continue
            return ',' if ',' in line else None
    return None


def ingest_csv(path, columns=None, dt=1.0, window_length=1, skip_header=0, delimiter='auto'):
    """
    Read an observed trajectory from a comma- or whitespace-delimited file.

    The first `window_length` rows become pre-samples, so that every delay window is full.
    dt is never inferred from the data.

    Args:
        path: file name.
        columns: list of zero-based column indices to use (all columns if None).
        dt: sampling interval in time units.
        window_length: R, the number of delay samples per window.
        skip_header: number of header lines to skip.
        delimiter: ',', None (whitespace) or 'auto'.
    """
    if not os.path.exists(path):
        raise DataError(f"Input file {path} does not exist.")
    if delimiter == 'auto':
        delimiter = _detect_delimiter(path, skip_header)
    rows = []
    with open(path, 'r') as f:
        for lineno, line in enumerate(f, start=1):
            if lineno <= skip_header:
                continue
            stripped = line.strip()
            if stripped == '' or stripped.startswith('#'):
                continue
            fields = [s.strip() for s in (stripped.split(delimiter) if delimiter else stripped.split())]
            cols = range(len(fields)) if columns is None else columns
            try:
                values = [float(fields[c]) for c in cols]
            except IndexError:
                raise DataError(f"{path}, line {lineno}: expected columns {list(cols)}, "
                                f"found {len(fields)} fields.")
            except ValueError:
                raise DataError(f"{path}, line {lineno}: non-numeric value in selected columns.")
            if not np.all(np.isfinite(values)):
                raise DataError(f"{path}, line {lineno}: non-finite value in selected columns.")
            if rows and len(values) != len(rows[0]):
                raise DataError(f"{path}, line {lineno}: expected {len(rows[0])} fields, "
                                f"found {len(values)}.")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows.")
    if len(rows) < window_length + 1:
        raise DataError(f"{path}: {len(rows)} rows, but a window of R={window_length} needs at "
                        f"least {window_length + 1}.")
    samples = np.asarray(rows, dtype=float)
    logging.info('Ingested %s: %d rows, d=%d, dt=%g.', path, samples.shape[0], samples.shape[1], dt)
    return ObservedTrajectory(samples, dt, n_presamples=window_length,
                              provenance={'ingested': os.path.abspath(path),
                                          'columns': None if columns is None else list(columns)})


def save_trajectory(traj, prefix, fmt='binary'):
    """Write `prefix.bin` (or `prefix.csv`) and the sidecar `prefix.json`."""
    if fmt == 'binary':
        utils.save_matrix(prefix + '.bin', traj.samples)
    elif fmt == 'csv':
        np.savetxt(prefix + '.csv', traj.samples, delimiter=',', fmt='%.17g')
    else:
        raise ValidationError(f"Unknown trajectory format '{fmt}'.")
    utils.write_sidecar(prefix + '.json', {'dt': traj.dt, 'd': traj.observation_dim,
                                           'n_presamples': traj.n_presamples, 'format': fmt,
                                           'provenance': traj.provenance})


def load_trajectory(prefix):
    meta = utils.read_sidecar(prefix + '.json')
    if meta.get('format', 'binary') == 'binary':
        samples = utils.load_matrix(prefix + '.bin')
    else:
        samples = np.loadtxt(prefix + '.csv', delimiter=',', ndmin=2)
    return ObservedTrajectory(samples, meta['dt'], meta['n_presamples'],
                              provenance=meta['provenance'])
