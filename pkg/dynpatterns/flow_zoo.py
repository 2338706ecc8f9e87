"""
'flow_zoo' module implements the benchmark dynamical systems and their observation maps.

Flows: TorusModelI, TorusModelII, OxtobyTorus, Lorenz63 (all inherit Flow).
Observation maps: TorusEmbed3D, TorusFlatEmbed4D, LorenzIdentity3D (all inherit ObservationMap).

"""
import math
import numpy as np
from dynpatterns.dynpatterns_core import Flow, ObservationMap, ValidationError
from dynpatterns import flow_bank


# Samples per quasi-period of the torus models, dt = 2*pi/S.
TORUS_SAMPLES_PER_PERIOD = 500


class TorusModel(Flow):
    """
    The integrable flow on the 2-torus. Model I and Model II differ only in zeta.
    """
    def __init__(self, beta=0.5, zeta=math.sqrt(30.0), initial_state=(0.0, 0.0),
                 samples_per_period=TORUS_SAMPLES_PER_PERIOD, n_samples=64000, n_presamples=0,
                 n_transient=0, n_substeps=10, name='TorusModel'):
        """
        beta: speed variation parameter in (0, 1].
        zeta: angular frequency along the polar angle.
        samples_per_period: S, the sampling interval is dt = 2*pi/S.
        """
        Flow.__init__(self)

        if not 0 < beta <= 1:
            raise ValidationError(f"TorusModel: beta must lie in (0, 1], got {beta}.")
        self.name = name
        self.kind = 'TorusModelI'
        self.params = {'beta': beta, 'zeta': zeta}
        self.state_dim = 2
        self.periodic = True
        self.initial_state = np.asarray(initial_state, dtype=float)
        self.vector_field = lambda x: flow_bank.torus_model(self.params, x)
        self.set_sampling(dt=2.0 * math.pi / samples_per_period, n_samples=n_samples,
                          n_presamples=n_presamples, n_transient=n_transient, n_substeps=n_substeps)


class TorusModelI(TorusModel):
    def __init__(self, beta=0.5, zeta=math.sqrt(30.0), name='TorusModelI', **kwargs):
        TorusModel.__init__(self, beta=beta, zeta=zeta, name=name, **kwargs)
        self.kind = 'TorusModelI'


class TorusModelII(TorusModel):
    def __init__(self, beta=0.5, zeta=1.0 / math.sqrt(30.0), name='TorusModelII', **kwargs):
        TorusModel.__init__(self, beta=beta, zeta=zeta, name=name, **kwargs)
        self.kind = 'TorusModelII'


class OxtobyTorus(Flow):
    """
    Flow on the 2-torus with a fixed point at the origin. Trajectories pass arbitrarily close to the
    fixed point.
    """
    def __init__(self, zeta=math.sqrt(20.0), initial_state=(0.5, 0.5), dt=0.01, n_samples=64000,
                 n_presamples=0, n_transient=0, n_substeps=10, name='OxtobyTorus'):
        Flow.__init__(self)

        self.name = name
        self.kind = 'OxtobyTorus'
        self.params = {'zeta': zeta}
        self.state_dim = 2
        self.periodic = True
        self.initial_state = np.asarray(initial_state, dtype=float)
        self.vector_field = lambda x: flow_bank.oxtoby_torus(self.params, x)
        self.set_sampling(dt=dt, n_samples=n_samples, n_presamples=n_presamples,
                          n_transient=n_transient, n_substeps=n_substeps)


class Lorenz63(Flow):
    """
    The Lorenz 63 system with the standard parameters sigma=10, rho=28, beta=8/3.
    """
    def __init__(self, sigma=10.0, rho=28.0, beta=8.0 / 3.0, initial_state=(0.0, 1.0, 1.05),
                 dt=0.0075, n_samples=66828, n_presamples=0, n_transient=150, n_substeps=10,
                 name='Lorenz63'):
        """
        dt: 66,828 retained samples over the time interval [0, 500] correspond to dt ~ 0.0075.
        n_transient: the first 150 samples are discarded.
        """
        Flow.__init__(self)

        self.name = name
        self.kind = 'Lorenz63'
        self.params = {'sigma': sigma, 'rho': rho, 'beta': beta}
        self.state_dim = 3
        self.periodic = False
        self.initial_state = np.asarray(initial_state, dtype=float)
        self.vector_field = lambda x: flow_bank.lorenz63(self.params, x)
        self.set_sampling(dt=dt, n_samples=n_samples, n_presamples=n_presamples,
                          n_transient=n_transient, n_substeps=n_substeps)


class TorusEmbed3D(ObservationMap):
    """Standard embedding of the 2-torus in R^3."""
    def __init__(self, selected_components=(0, 1), r1=0.5, r2=0.5, name='TorusEmbed3D'):
        ObservationMap.__init__(self)

        self.name = name
        self.kind = 'TorusEmbed3D'
        self.state_dim = 2
        self.full_dim = 3
        self.selected_components = list(selected_components)
        self.params = {'r1': r1, 'r2': r2}
        self.embed = lambda states: flow_bank.torus_embed_3d(self.params, states)


class TorusFlatEmbed4D(ObservationMap):
    """Flat embedding of the 2-torus in R^4."""
    def __init__(self, selected_components=(0, 1), name='TorusFlatEmbed4D'):
        ObservationMap.__init__(self)

        self.name = name
        self.kind = 'TorusFlatEmbed4D'
        self.state_dim = 2
        self.full_dim = 4
        self.selected_components = list(selected_components)
        self.embed = lambda states: flow_bank.torus_flat_embed_4d(self.params, states)


class LorenzIdentity3D(ObservationMap):
    """The Lorenz state itself, F = (w^1, w^2, w^3)."""
    def __init__(self, selected_components=(0, 1), name='LorenzIdentity3D'):
        ObservationMap.__init__(self)

        self.name = name
        self.kind = 'LorenzIdentity3D'
        self.state_dim = 3
        self.full_dim = 3
        self.selected_components = list(selected_components)
        self.embed = lambda states: flow_bank.lorenz_identity_3d(self.params, states)


FLOWS = {'TorusModelI': TorusModelI,
         'TorusModelII': TorusModelII,
         'OxtobyTorus': OxtobyTorus,
         'Lorenz63': Lorenz63}

OBSERVATIONS = {'TorusEmbed3D': TorusEmbed3D,
                'TorusFlatEmbed4D': TorusFlatEmbed4D,
                'LorenzIdentity3D': LorenzIdentity3D}


def make_flow(kind, params=None, **sampling):
    """Instantiate a flow of the given kind with keyword parameters and sampling metadata."""
    if kind not in FLOWS:
        raise ValidationError(f"Unknown flow kind '{kind}', expected one of {sorted(FLOWS)}.")
    kwargs = dict(params or {})
    kwargs.update({k: v for k, v in sampling.items() if v is not None})
    try:
        return FLOWS[kind](**kwargs)
    except TypeError as err:
        raise ValidationError(f"Invalid parameters for flow '{kind}': {err}") from err


def make_observation(kind, selected_components=(0, 1), params=None):
    if kind not in OBSERVATIONS:
        raise ValidationError(f"Unknown observation kind '{kind}', expected one of "
                              f"{sorted(OBSERVATIONS)}.")
    try:
        return OBSERVATIONS[kind](selected_components=selected_components, **(params or {}))
    except TypeError as err:
        raise ValidationError(f"Invalid parameters for observation '{kind}': {err}") from err
