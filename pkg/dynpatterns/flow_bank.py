"""
A collection of vector fields and observation embeddings for the benchmark dynamical systems.
All vector fields take a dictionary of parameters and a state vector and return the velocity.
All embeddings take a dictionary of parameters and an array of states (n x state_dim) and return
the full embedding (n x full_dim).

TO CONTRIBUTORS:  any new addition to the flow_bank should state the equations it implements and the
    coordinate convention (angles in radians, periodic coordinates wrapped by the caller).

"""

import numpy as np


def torus_model(params, state):
    """
    Integrable ergodic flow on the 2-torus, with speed variations controlled by beta.

    v^1 = 1 + (1-beta)^{1/2} cos(theta^1),  v^2 = zeta (1 - (1-beta)^{1/2} sin(theta^2))

    Args:
        beta: speed variation parameter in (0, 1]; beta = 1 is the uniform linear flow.
        zeta: angular frequency along theta^2.
        state: (theta^1, theta^2)
    """
    beta = params['beta']
    zeta = params['zeta']
    assert(0 < beta <= 1)
    a = np.sqrt(1.0 - beta)
    return np.array([1.0 + a * np.cos(state[0]),
                     zeta * (1.0 - a * np.sin(state[1]))])


def oxtoby_torus(params, state):
    """
    Flow on the 2-torus with a fixed point at the origin.

    v^1 = v^2 + (1-zeta)(1 - cos(theta^2)),  v^2 = zeta (1 - cos(theta^1 - theta^2))
    """
    zeta = params['zeta']
    v2 = zeta * (1.0 - np.cos(state[0] - state[1]))
    v1 = v2 + (1.0 - zeta) * (1.0 - np.cos(state[1]))
    return np.array([v1, v2])


def lorenz63(params, state):
    """
    Lorenz 63 system.

    dw1/dt = sigma (w2 - w1),  dw2/dt = w1 (rho - w3) - w2,  dw3/dt = w1 w2 - beta w3
    """
    sigma = params['sigma']
    rho = params['rho']
    beta = params['beta']
    w1, w2, w3 = state
    return np.array([sigma * (w2 - w1),
                     w1 * (rho - w3) - w2,
                     w1 * w2 - beta * w3])


def torus_embed_3d(params, states):
    """
    Standard embedding of the 2-torus in R^3 with azimuthal radius r1 and polar radius r2.

    f^1 = (1 + r1 cos theta^2) cos theta^1,  f^2 = (1 + r1 cos theta^2) sin theta^1,  f^3 = r2 sin theta^2
    """
    r1 = params['r1']
    r2 = params['r2']
    t1 = states[:, 0]
    t2 = states[:, 1]
    ring = 1.0 + r1 * np.cos(t2)
    return np.column_stack([ring * np.cos(t1), ring * np.sin(t1), r2 * np.sin(t2)])


def torus_flat_embed_4d(params, states):
    """
    Flat embedding of the 2-torus in R^4: (cos theta^1, sin theta^1, cos theta^2, sin theta^2).
    """
    t1 = states[:, 0]
    t2 = states[:, 1]
    return np.column_stack([np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)])


def lorenz_identity_3d(params, states):
    # f^i(x) = w^i(x)
    return np.array(states, dtype=float, copy=True)


def rk4_step(fun, state, h):
    """One classical fourth-order Runge-Kutta step of size h for the autonomous system y' = fun(y)."""
    k1 = fun(state)
    k2 = fun(state + 0.5 * h * k1)
    k3 = fun(state + 0.5 * h * k2)
    k4 = fun(state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
