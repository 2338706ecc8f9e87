"""
A registry of pointwise observables gamma: R^d -> R^m.

Every entry takes a dictionary of parameters and an array of samples (L x d) and returns an array
(L x m). Time-averaging an entry over delay windows gives the corresponding statistic of the window
measures; time-averaging `power` with n gives the n-th raw moment.

TO CONTRIBUTORS:  entries must be deterministic and serializable through their params, so that a
    configuration file fully specifies the observable.

"""

import numpy as np


def identity(params, y):
    return np.array(y, dtype=float, copy=True)


def power(params, y):
    """Raise each component to the power n."""
    n = params['n']
    assert(n >= 1)
    return np.asarray(y, dtype=float) ** n


def cosine(params, y):
    omega = params.get('omega', 1.0)
    return np.cos(omega * np.asarray(y, dtype=float))


def sine(params, y):
    omega = params.get('omega', 1.0)
    return np.sin(omega * np.asarray(y, dtype=float))


def polynomial(params, y):
    """
    Componentwise polynomial c_0 + c_1 y + c_2 y^2 + ...

    Args:
        coefficients: list of coefficients in increasing degree.
    """
    coefficients = params['coefficients']
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    # Horner
    for c in reversed(coefficients):
        out = out * y + c
    return out


REGISTRY = {'identity': identity,
            'power': power,
            'cosine': cosine,
            'sine': sine,
            'polynomial': polynomial}
