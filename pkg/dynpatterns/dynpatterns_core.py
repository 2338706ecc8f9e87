"""
Core classes for dynpatterns:

Flow --- A `flow' describes a deterministic continuous-time dynamical system together with how it is
                sampled (initial state, sampling interval, number of samples).
                All flows (e.g., those in the `flow_zoo' module) inherit this class.

ObservationMap ---  An observation map takes states of a flow and outputs (partial) observations in
                a data space R^d. It is a callable object, like a transformer: the full embedding
                is applied first, then the selected components are kept.

ObservedTrajectory --- The time-ordered observations y_i = f(Psi_{i dt} x_0), i = -n_presamples, ..., N-1,
                either generated from a flow or ingested from a file.

The error classes at the bottom are raised throughout the package; the command line maps them to
exit codes.

"""

import numpy as np


class Flow():
    """
     The base flow. A flow is described by its vector field and the sampling metadata needed to
     turn it into a time series.

    # Attributes:
    # 1: vector_field:  velocity as a function of the state (a numpy vector).
    # 2. params:  named real parameters of the vector field, e.g. {'beta': 0.5, 'zeta': 30**0.5}.
    # 3. initial_state:  state at the start of integration (before the transient).
    # 4. dt:  sampling interval in time units.
    # 5. n_samples:  number of samples indexed 0..N-1.
    # 6. n_presamples:  extra leading samples so that delay windows at index 0 are full.
    # 7. n_transient:  warm-up samples that are integrated and discarded.
    # 8. n_substeps:  fixed RK4 substeps per sampling interval.
    # 9. periodic:  if True the state lives on a torus and is wrapped modulo 2*pi.
    """

    def __init__(self):
        def vector_field(state):
            return np.zeros_like(state)

        self.name = 'generic_flow'
        self.kind = None
        self.params = {}
        self.vector_field = vector_field
        self.state_dim = 0
        self.initial_state = None
        self.dt = 1.0
        self.n_samples = 1
        self.n_presamples = 0
        self.n_transient = 0
        self.n_substeps = 10
        self.periodic = False

    def get_velocity(self, state):
        return self.vector_field(state)

    def set_sampling(self, dt=None, n_samples=None, n_presamples=None, n_transient=None,
                     n_substeps=None):
        """Overwrite the sampling metadata; arguments left as None keep their value."""
        if dt is not None:
            self.dt = float(dt)
        if n_samples is not None:
            self.n_samples = int(n_samples)
        if n_presamples is not None:
            self.n_presamples = int(n_presamples)
        if n_transient is not None:
            self.n_transient = int(n_transient)
        if n_substeps is not None:
            self.n_substeps = int(n_substeps)
        return self

    def validate(self):
        if not self.dt > 0:
            raise ValidationError(f"Flow '{self.name}': dt must be positive, got {self.dt}.")
        if self.n_samples < 1:
            raise ValidationError(f"Flow '{self.name}': n_samples must be >= 1, got {self.n_samples}.")
        if self.n_presamples < 0 or self.n_transient < 0:
            raise ValidationError(f"Flow '{self.name}': n_presamples and n_transient must be >= 0.")
        if self.n_substeps < 1:
            raise ValidationError(f"Flow '{self.name}': n_substeps must be >= 1, got {self.n_substeps}.")
        state = np.asarray(self.initial_state, dtype=float)
        if state.shape != (self.state_dim,):
            raise ValidationError(f"Flow '{self.name}': initial_state must have {self.state_dim} "
                                  f"components, got shape {state.shape}.")
        if not np.all(np.isfinite(state)):
            raise ValidationError(f"Flow '{self.name}': initial_state must be finite.")

    def describe(self):
        # A serializable description, used as trajectory provenance and in config snapshots.
        return {'name': self.name, 'kind': self.kind, 'params': dict(self.params),
                'initial_state': [float(s) for s in self.initial_state],
                'dt': self.dt, 'n_samples': self.n_samples, 'n_presamples': self.n_presamples,
                'n_transient': self.n_transient, 'n_substeps': self.n_substeps}


class ObservationMap():
    """
    An observation map is a callable object that takes an array of states (n_states x state_dim)
    and returns the observations (n_states x len(selected_components)).
    """

    def __init__(self):
        self.name = 'generic_observation'
        self.kind = None
        self.state_dim = 0
        self.full_dim = 0   # dimension of the full embedding F
        self.selected_components = []  # zero-based indices into F; (f^1, f^2) is [0, 1]
        self.params = {}
        self.embed = lambda states: states

    def validate(self):
        comps = list(self.selected_components)
        if len(comps) == 0:
            raise ValidationError(f"Observation '{self.name}': no component selected.")
        if len(set(comps)) != len(comps):
            raise ValidationError(f"Observation '{self.name}': selected components {comps} "
                                  f"are not distinct.")
        for c in comps:
            if c < 0 or c >= self.full_dim:
                raise ValidationError(f"Observation '{self.name}': component index {c} out of range "
                                      f"for a {self.full_dim}-dimensional embedding.")

    def __call__(self, states):
        self.validate()
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.state_dim:
            raise ValidationError(f"Observation '{self.name}' expects {self.state_dim}-dimensional "
                                  f"states, got {states.shape[1]}.")
        full = self.embed(states)
        return full[:, list(self.selected_components)]

    def describe(self):
        return {'name': self.name, 'kind': self.kind, 'params': dict(self.params),
                'selected_components': [int(c) for c in self.selected_components]}


class ObservedTrajectory():
    """
    Time series of observations. Row j of `samples` is y_{j - n_presamples}, so that sample index
    i in {-n_presamples, ..., n_samples-1} lives at row i + n_presamples.
    """

    def __init__(self, samples, dt, n_presamples=0, provenance=None):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise ValidationError(f"Trajectory samples must be a nonempty 2d array, got shape "
                                  f"{samples.shape}.")
        if not np.all(np.isfinite(samples)):
            raise DataError("Trajectory contains non-finite samples.")
        if not dt > 0:
            raise ValidationError(f"Trajectory dt must be positive, got {dt}.")
        if n_presamples < 0 or n_presamples >= samples.shape[0]:
            raise ValidationError(f"n_presamples={n_presamples} incompatible with "
                                  f"{samples.shape[0]} samples.")
        self.samples = samples
        self.dt = float(dt)
        self.n_presamples = int(n_presamples)
        self.provenance = provenance if provenance is not None else 'ingested'

    @property
    def n_samples(self):
        return self.samples.shape[0] - self.n_presamples

    @property
    def observation_dim(self):
        return self.samples.shape[1]

    def sample(self, i):
        # y_i with the signed index convention
        return self.samples[i + self.n_presamples]

    def indexed(self):
        """The samples y_0, ..., y_{N-1} (pre-samples excluded)."""
        return self.samples[self.n_presamples:]

    def transform(self, rotation=None, translation=None):
        """Return the trajectory under y -> rotation @ y + translation."""
        samples = self.samples
        if rotation is not None:
            samples = samples @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            samples = samples + np.asarray(translation, dtype=float)
        return ObservedTrajectory(samples, self.dt, self.n_presamples,
                                  provenance={'transformed_from': self.provenance})


class ValidationError(ValueError):
    """Bad parameters, shape mismatches and contract violations."""


class DataError(ValueError):
    """Missing or malformed input data, or a missing stage artifact."""


class NumericalError(RuntimeError):
    """A numerical routine failed: divergence, isolated vertex, no convergence."""


class StageError(RuntimeError):
    """An error raised inside a pipeline stage. The original error is kept as __cause__."""

    def __init__(self, stage, error):
        RuntimeError.__init__(self, f"stage '{stage}' failed: {error}")
        self.stage = stage
        self.error = error
