"""Shared builders for protocol and simulation tests."""

import numpy as np

from formctl import synthesis
from formctl.formation import ZeroFormation, make_harmonic_spec
from formctl.graph import build_topology
from formctl.protocols import ProtocolState, Regime


class FixedOffsets:
    """Formation stub pinning h to a constant matrix (point evaluations)."""

    def __init__(self, h):
        self.h = np.atleast_2d(np.asarray(h, dtype=float))
        self.n_followers, self.n = self.h.shape
        self.k1 = None

    @property
    def switch_times(self):
        return []

    @property
    def t_end(self):
        return np.inf

    def piece_index(self, t):
        return 0

    def offsets(self, t, piece=None):
        return self.h

    def offsets_dot(self, t, piece=None):
        return np.zeros_like(self.h)


def scalar_model():
    return synthesis.LtiModel([[0.0]], [[1.0]], [[1.0]])


def planar_model():
    """Double integrator with position output."""
    return synthesis.LtiModel([[0.0, 1.0], [0.0, 0.0]],
                              [[0.0], [1.0]], [[1.0, 0.0]])


def planar_spec(m, r=1.0, w=1.0, t_final=np.inf):
    k1 = np.array([[-w ** 2, 0.0]])
    return make_harmonic_spec(2, m, r=r, w=w, component_map=[(1.0, 0.0)],
                              k1=k1, t_final=t_final)


def zero_spec(n, m, k1=None):
    k1 = np.zeros((1, n)) if k1 is None else np.asarray(k1, dtype=float)
    return ZeroFormation(n=n, n_followers=m, k1=k1)


def make_gains(model, regime, k1=None, poles=None, beta=None, bound=None):
    poles = [-1.0 - i for i in range(model.n)] if poles is None else poles
    k1 = np.zeros((model.p, model.n)) if k1 is None else k1
    return synthesis.synth_for_regime(model, regime, k1=k1, k2_poles=poles,
                                      leader_bound=bound, beta=beta)


def line_topology(n, pinned=(0,), symmetric=False):
    a = np.zeros((n, n))
    for i in range(1, n):
        a[i, i - 1] = 1.0
        if symmetric:
            a[i - 1, i] = 1.0
    d = np.zeros(n)
    for i in pinned:
        d[i] = 1.0
    return build_topology(a, d, directed=not symmetric)


def cycle_topology(n):
    a = np.zeros((n, n))
    for i in range(n):
        a[i, (i - 1) % n] = 1.0
    return build_topology(a, np.zeros(n))


def random_state(rng, n, n_followers, regime):
    regime = Regime(regime)
    state = ProtocolState(
        x=rng.uniform(-5, 5, (n_followers + 1, n)),
        v=rng.uniform(-5, 5, (n_followers, n)))
    if regime.has_local_observer:
        state.w = rng.uniform(-5, 5, (n_followers, n))
        state.w0 = rng.uniform(-5, 5, n)
    if regime.has_edge_weights:
        raw = rng.uniform(1, 3, (n_followers, n_followers))
        state.c_edge = 0.5 * (raw + raw.T)
    if regime.has_node_weights:
        state.c_node = rng.uniform(1, 3, n_followers)
    return state
