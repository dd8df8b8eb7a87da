"""The adaptive distributed controller regimes as ODE right-hand sides.

Row conventions: states are stacked one agent per row, so the plant map
x -> A x becomes X @ A.T.  Neighbor aggregates are per-node sums expressed
through adjacency rows,

    psi_i    = sum_j a_ij (v_i - v_j) + d_i (v_i - v_0),   v_0 = 0
    eta_i    = sum_j a_ij (s_i - s_j) + d_i (s_i - s_0)
    varrho_i = psi_i - eta_i

where s is the quantity the regime's observer tracks (x - h for the
stabilization regimes, the local observer w for the tracking-observer
regimes).  Adaptive weights grow by measurement-innovation quadratic forms:
c' = g' Gamma g for the innovation g the regime can measure, which keeps
every rule free of global topology information.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ProtocolError
from .graph import has_spanning_tree_from_leader, is_strongly_connected


class Regime(Enum):
    UNDIRECTED_TRACKING = "undirected_tracking"
    UNDIRECTED_STABILIZATION = "undirected_stabilization"
    DIRECTED_TRACKING_FULL_ACCESS = "directed_tracking_full_access"
    DIRECTED_STABILIZATION = "directed_stabilization"
    DIRECTED_STABILIZATION_STATE = "directed_stabilization_state"
    DIRECTED_TRACKING_OBSERVER = "directed_tracking_observer"
    DIRECTED_TRACKING_OBSERVER_STATE = "directed_tracking_observer_state"
    DIRECTED_TRACKING_BOUNDED_INPUT = "directed_tracking_bounded_input"

    @property
    def is_tracking(self):
        return self not in (Regime.UNDIRECTED_STABILIZATION,
                            Regime.DIRECTED_STABILIZATION,
                            Regime.DIRECTED_STABILIZATION_STATE)

    @property
    def has_local_observer(self):
        return self in (Regime.DIRECTED_TRACKING_OBSERVER,
                        Regime.DIRECTED_TRACKING_OBSERVER_STATE,
                        Regime.DIRECTED_TRACKING_BOUNDED_INPUT)

    @property
    def has_edge_weights(self):
        return self in (Regime.UNDIRECTED_TRACKING,
                        Regime.UNDIRECTED_STABILIZATION)

    @property
    def has_node_weights(self):
        return self is not Regime.UNDIRECTED_STABILIZATION

    @property
    def uses_relative_state(self):
        return self in (Regime.DIRECTED_STABILIZATION_STATE,
                        Regime.DIRECTED_TRACKING_OBSERVER_STATE)


@dataclass
class RegimeOptions:
    """Protocol knobs; defaults follow the baseline protocol forms."""

    smooth_z: bool = False
    delta: float = 1e-3
    leak_eps: float | np.ndarray = 0.0
    k_edge: np.ndarray | None = None
    k_pin: np.ndarray | None = None

    def __post_init__(self):
        if self.delta <= 0:
            raise ProtocolError("smoothing width delta must be positive")
        if self.k_edge is not None:
            k = np.asarray(self.k_edge, dtype=float)
            if np.any(k != k.T) or np.any(k <= 0):
                raise ProtocolError("k_edge must be symmetric positive")
            self.k_edge = k
        if self.k_pin is not None:
            k = np.asarray(self.k_pin, dtype=float)
            if np.any(k <= 0):
                raise ProtocolError("k_pin must be positive")
            self.k_pin = k


@dataclass
class LeaderInput:
    """Leader input profile with a certified sup-norm bound."""

    func: object
    bound: float

    @classmethod
    def certify(cls, func, t_final, samples=4001):
        """Bound ||u0|| by dense sampling over [0, t_final]."""
        grid = np.linspace(0.0, t_final, samples)
        worst = max(float(np.linalg.norm(func(t))) for t in grid)
        return cls(func=func, bound=worst)

    def __call__(self, t):
        return np.asarray(self.func(t), dtype=float)


def z_hard(x):
    """Unit vector along x; zero at the origin."""
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > 0 else np.zeros_like(x)


def z_smooth(x, delta):
    """Continuous saturation: x/||x|| outside the delta ball, x/delta inside."""
    if delta <= 0:
        raise ProtocolError("delta must be positive")
    x = np.asarray(x, dtype=float)
    return x / max(np.linalg.norm(x), delta)


def _z_rows_hard(m):
    nrm = np.sqrt((m * m).sum(axis=1))
    safe = np.where(nrm > 0, nrm, 1.0)
    return m / safe[:, None]


def _z_rows_smooth(m, delta):
    nrm = np.maximum(np.sqrt((m * m).sum(axis=1)), delta)
    return m / nrm[:, None]


class StateLayout:
    """Slice map between the stacked state blocks and one flat vector."""

    def __init__(self, n, n_followers, regime):
        self.n = n
        self.n_followers = n_followers
        self.regime = regime
        big_n = n_followers
        pos = 0

        def take(count):
            nonlocal pos
            sl = slice(pos, pos + count)
            pos += count
            return sl

        self.sl_x = take((big_n + 1) * n)
        self.sl_v = take(big_n * n)
        self.sl_w = take(big_n * n) if regime.has_local_observer else None
        self.sl_w0 = take(n) if regime.has_local_observer else None
        self.sl_c_edge = take(big_n * big_n) if regime.has_edge_weights else None
        self.sl_c_node = take(big_n) if regime.has_node_weights else None
        self.size = pos

    def views(self, y):
        n, big_n = self.n, self.n_followers
        x = y[self.sl_x].reshape(big_n + 1, n)
        v = y[self.sl_v].reshape(big_n, n)
        w = y[self.sl_w].reshape(big_n, n) if self.sl_w else None
        w0 = y[self.sl_w0] if self.sl_w0 else None
        ce = y[self.sl_c_edge].reshape(big_n, big_n) if self.sl_c_edge else None
        cn = y[self.sl_c_node] if self.sl_c_node else None
        return x, v, w, w0, ce, cn

    def pack(self, state):
        y = np.zeros(self.size)
        x, v, w, w0, ce, cn = self.views(y)
        x[:] = state.x
        v[:] = state.v
        if w is not None:
            w[:] = state.w
        if w0 is not None:
            w0[:] = state.w0
        if ce is not None:
            ce[:] = state.c_edge
        if cn is not None:
            cn[:] = state.c_node
        return y

    def unpack(self, y):
        x, v, w, w0, ce, cn = self.views(np.asarray(y, dtype=float))
        return ProtocolState(
            x=x.copy(), v=v.copy(),
            w=None if w is None else w.copy(),
            w0=None if w0 is None else w0.copy(),
            c_edge=None if ce is None else ce.copy(),
            c_node=None if cn is None else cn.copy())


@dataclass
class ProtocolState:
    """Stacked agent states, observers and adaptive weights (row 0 = leader)."""

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray | None = None
    w0: np.ndarray | None = None
    c_edge: np.ndarray | None = None
    c_node: np.ndarray | None = None


def validate_regime_topology(regime, topo, leader_input):
    symmetric = np.array_equal(topo.adjacency, topo.adjacency.T)
    if regime is Regime.UNDIRECTED_TRACKING:
        if not symmetric:
            raise ProtocolError("undirected tracking needs a symmetric "
                                "follower graph")
        if not has_spanning_tree_from_leader(topo):
            raise ProtocolError("leader must root a spanning tree")
    elif regime is Regime.UNDIRECTED_STABILIZATION:
        if not symmetric:
            raise ProtocolError("undirected stabilization needs a symmetric "
                                "graph")
        if topo.has_leader:
            raise ProtocolError("stabilization regimes are leaderless")
        if not is_strongly_connected(topo):
            raise ProtocolError("graph must be connected")
    elif regime is Regime.DIRECTED_TRACKING_FULL_ACCESS:
        if np.any(topo.pinning <= 0):
            raise ProtocolError("full-access regime requires every follower "
                                "pinned to the leader")
    elif regime in (Regime.DIRECTED_STABILIZATION,
                    Regime.DIRECTED_STABILIZATION_STATE):
        if topo.has_leader:
            raise ProtocolError("stabilization regimes are leaderless")
        if not is_strongly_connected(topo):
            raise ProtocolError("graph must be strongly connected")
    else:
        if not has_spanning_tree_from_leader(topo):
            raise ProtocolError("leader must root a spanning tree")
    if regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
        if leader_input is None:
            raise ProtocolError("bounded-input regime needs a LeaderInput")
    elif leader_input is not None and leader_input.bound > 0:
        raise ProtocolError(f"regime {regime.value} assumes a zero-input "
                            "leader")


def _require_gains(gains, names, regime):
    for name in names:
        if getattr(gains, name) is None:
            raise ProtocolError(f"regime {regime.value} needs gain "
                                f"'{name}'")


class ProtocolContext:
    """Precomputed constants and the assembled RHS for one scenario."""

    def __init__(self, model, gains, topo, regime, options=None,
                 leader_input=None):
        regime = Regime(regime)
        options = options or RegimeOptions()
        validate_regime_topology(regime, topo, leader_input)
        needed = ["k1", "k2"]
        if regime.uses_relative_state:
            needed += ["q_tilde", "f_tilde", "gamma_tilde"]
        else:
            needed += ["q_mat", "f", "gamma"]
        if regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
            needed += ["s_mat"]
            if gains.beta is None:
                raise ProtocolError("bounded-input regime needs beta")
            if leader_input is not None and gains.beta < leader_input.bound:
                raise ProtocolError(
                    f"beta = {gains.beta} below certified input bound "
                    f"{leader_input.bound}")
        _require_gains(gains, needed, regime)

        self.model = model
        self.gains = gains
        self.topo = topo
        self.regime = regime
        self.options = options
        self.leader_input = leader_input
        self.layout = StateLayout(model.n, topo.n_followers, regime)

        n_f = topo.n_followers
        self.adj = topo.adjacency
        self.deg = self.adj.sum(axis=1)
        self.pin = topo.pinning
        self.a_mat = model.a
        self.at = model.a.T
        self.bt = model.b.T
        self.ct = model.c.T
        self.k1t = gains.k1.T
        self.k2t = gains.k2.T
        self.acl_t = (model.a + model.b @ gains.k2).T
        if regime.uses_relative_state:
            self.inj_t = (model.b @ gains.f_tilde).T       # state injection
            self.rho_mat = np.linalg.inv(gains.q_tilde)    # rho = r' Qt^-1 r
            # gamma_tilde = f_tilde' f_tilde, so the rate is |f_tilde r|^2
            self.adapt_proj = gains.f_tilde.T
            self.adapt_quad = None
        else:
            self.ft = gains.f.T
            self.ctft = self.ct @ self.ft                  # maps rows by F C
            self.rho_mat = gains.q_mat
            self.adapt_proj = self.ct
            self.adapt_quad = (None if np.array_equal(
                gains.gamma, np.eye(model.q)) else gains.gamma)
        self.coup_t = self.inj_t if regime.uses_relative_state else self.ctft
        if regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
            self.sb = gains.s_mat @ model.b
            self.qb = gains.q_mat @ model.b
            self.beta = gains.beta
        self.k_edge = (np.ones((n_f, n_f)) if options.k_edge is None
                       else options.k_edge)
        self.k_pin = (np.ones(n_f) if options.k_pin is None
                      else options.k_pin)
        self.leak = np.broadcast_to(
            np.asarray(options.leak_eps, dtype=float), (n_f,)).copy()
        if np.any(self.leak < 0):
            raise ProtocolError("leak_eps must be nonnegative")
        self._z_rows = ((lambda m: _z_rows_smooth(m, options.delta))
                        if options.smooth_z else _z_rows_hard)

    # -- shared sub-assemblies -------------------------------------------

    def _neighbor_diff(self, rows, pinned_ref=None):
        """Rows of sum_j a_ij (rows_i - rows_j) [+ d_i (rows_i - ref)]."""
        out = self.deg[:, None] * rows - self.adj @ rows
        if pinned_ref is not None:
            out += self.pin[:, None] * (rows - pinned_ref)
        return out

    def _quad_rows(self, rows, mat):
        return ((rows @ mat) * rows).sum(axis=1)

    def _adapt_rate(self, varrho):
        """Innovation quadratic form driving the node weights; exactly
        nonnegative when the weighting is the identity."""
        p = varrho @ self.adapt_proj
        if self.adapt_quad is None:
            return (p * p).sum(axis=1)
        return ((p @ self.adapt_quad) * p).sum(axis=1)

    def controls(self, t, y, h):
        """Control inputs U (one follower per row) at the given state."""
        _, v, w, w0, _, _ = self.layout.views(np.asarray(y, dtype=float))
        u = h @ self.k1t + v @ self.k2t
        if self.regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
            eta = self._neighbor_diff(w, pinned_ref=w0)
            u = u - self.beta * self._z_rows(eta @ self.sb)
        return u

    # -- rhs assembly ----------------------------------------------------

    def rhs_with_controls(self, t, y, h):
        """(derivative, follower controls) in one pass."""
        return self._assemble(t, y, h, want_controls=True)

    def rhs(self, t, y, h):
        """Time derivative of the flat state; h holds the offsets at t."""
        return self._assemble(t, y, h, want_controls=False)

    def _assemble(self, t, y, h, want_controls):
        x, v, w, w0, c_edge, c_node = self.layout.views(y)
        out = np.zeros(self.layout.size)
        dx, dv, dw, dw0, dc_edge, dc_node = self.layout.views(out)
        regime = self.regime
        x0 = x[0]
        followers = x[1:]

        u = h @ self.k1t + v @ self.k2t

        if regime.has_edge_weights:
            # innovations from relative outputs: D_i - D_j and D_i + y0;
            # differences are formed before the quadratic form so the rates
            # stay accurate (and exactly symmetric) near consensus
            d_rows = (v + h) @ self.ct - followers @ self.ct
            y0 = x0 @ self.ct
            diff = d_rows[:, None, :] - d_rows[None, :, :]
            if self.adapt_quad is None:
                pair_quad = (diff * diff).sum(axis=2)
            else:
                pair_quad = np.einsum("ijk,kl,ijl->ij", diff,
                                      self.gains.gamma, diff)
            weights = self.adj * c_edge
            coupling = weights.sum(axis=1)[:, None] * d_rows - weights @ d_rows
            dc_edge[:] = self.k_edge * self.adj * pair_quad
            if regime is Regime.UNDIRECTED_TRACKING:
                pin_rows = d_rows + y0
                pinw = self.pin * c_node
                coupling = coupling + pinw[:, None] * pin_rows
                dc_node[:] = self.k_pin * self.pin * self._quad_rows(
                    pin_rows, self.gains.gamma)
            dv[:] = v @ self.acl_t + coupling @ self.ft
            dx[1:] = followers @ self.at + u @ self.bt
            dx[0] = x0 @ self.at
            return (out, u) if want_controls else out

        if regime is Regime.DIRECTED_TRACKING_FULL_ACCESS:
            d_rows = (v + h) @ self.ct - followers @ self.ct
            y0 = x0 @ self.ct
            pin_rows = d_rows + y0
            inn = self._neighbor_diff(d_rows) + self.pin[:, None] * pin_rows
            err = followers - h - x0 - v
            rho = self._quad_rows(err, self.rho_mat)
            gain = (c_node + rho)[:, None]
            dv[:] = v @ self.acl_t + (gain * inn) @ self.ft
            dc_node[:] = self._quad_rows(pin_rows, self.gains.gamma)
            dx[1:] = followers @ self.at + u @ self.bt
            dx[0] = x0 @ self.at
            return (out, u) if want_controls else out

        if regime in (Regime.DIRECTED_STABILIZATION,
                      Regime.DIRECTED_STABILIZATION_STATE):
            xbar = followers - h
            varrho = self._neighbor_diff(v - xbar)
            rho = self._quad_rows(varrho, self.rho_mat)
            gain = (c_node + rho)[:, None]
            dv[:] = v @ self.acl_t + (gain * varrho) @ self.coup_t
            dc_node[:] = self._adapt_rate(varrho)
            dx[1:] = followers @ self.at + u @ self.bt
            dx[0] = x0 @ self.at
            return (out, u) if want_controls else out

        # tracking regimes with local observers (w, w0)
        xbar = followers - h
        # psi - eta collapses to one aggregate of (v - w) pinned against -w0
        varrho = self._neighbor_diff(v - w, pinned_ref=-w0)
        rho = self._quad_rows(varrho, self.rho_mat)
        gain = (c_node + rho)[:, None]
        hk1 = h @ self.k1t

        if regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
            eta = self._neighbor_diff(w, pinned_ref=w0)
            u = u - self.beta * self._z_rows(eta @ self.sb)
            u_obs = u - self.beta * self._z_rows(varrho @ self.qb)
            u0 = self.leader_input(t)
            dx[0] = x0 @ self.at + u0 @ self.bt
        else:
            u_obs = u
            u0 = None
            dx[0] = x0 @ self.at

        # observer innovation and the adaptive coupling share one injection
        ow = (w - xbar) @ self.coup_t
        coupling = (gain * varrho) @ self.coup_t
        if regime is Regime.DIRECTED_TRACKING_OBSERVER_STATE:
            dw0[:] = w0 @ self.at + (w0 - x0) @ self.inj_t
        else:
            dw0[:] = w0 @ self.at + (w0 - x0) @ self.ctft
            if u0 is not None:
                dw0 += u0 @ self.bt

        feed = (u - hk1) @ self.bt
        feed_obs = (u_obs - hk1) @ self.bt
        dw[:] = w @ self.at + feed + ow
        dv[:] = v @ self.at + feed_obs + coupling + ow
        dc_node[:] = self._adapt_rate(varrho) - self.leak * (c_node - 1.0)
        dx[1:] = followers @ self.at + u @ self.bt
        return (out, u) if want_controls else out


def build_context(model, gains, topo, regime, options=None, leader_input=None):
    return ProtocolContext(model, gains, topo, regime, options=options,
                           leader_input=leader_input)


def _call_rhs(state, t, model, gains, topo, spec, regime, options=None,
              leader_input=None):
    ctx = build_context(model, gains, topo, regime, options=options,
                        leader_input=leader_input)
    y = ctx.layout.pack(state)
    dy = ctx.rhs(t, y, spec.offsets(t))
    return ctx.layout.unpack(dy)


def rhs_undirected_tracking(state, t, model, gains, topo, spec, options=None):
    return _call_rhs(state, t, model, gains, topo, spec,
                     Regime.UNDIRECTED_TRACKING, options)


def rhs_undirected_stabilization(state, t, model, gains, topo, spec,
                                 options=None):
    return _call_rhs(state, t, model, gains, topo, spec,
                     Regime.UNDIRECTED_STABILIZATION, options)


def rhs_directed_full_access(state, t, model, gains, topo, spec, options=None):
    return _call_rhs(state, t, model, gains, topo, spec,
                     Regime.DIRECTED_TRACKING_FULL_ACCESS, options)


def rhs_directed_stabilization(state, t, model, gains, topo, spec,
                               options=None, state_feedback=False):
    regime = (Regime.DIRECTED_STABILIZATION_STATE if state_feedback
              else Regime.DIRECTED_STABILIZATION)
    return _call_rhs(state, t, model, gains, topo, spec, regime, options)


def rhs_directed_tracking_observer(state, t, model, gains, topo, spec,
                                   options=None, state_feedback=False):
    regime = (Regime.DIRECTED_TRACKING_OBSERVER_STATE if state_feedback
              else Regime.DIRECTED_TRACKING_OBSERVER)
    return _call_rhs(state, t, model, gains, topo, spec, regime, options)


def rhs_bounded_input(state, t, model, gains, topo, spec, leader_input,
                      options=None):
    return _call_rhs(state, t, model, gains, topo, spec,
                     Regime.DIRECTED_TRACKING_BOUNDED_INPUT, options,
                     leader_input=leader_input)


@dataclass
class MetricSample:
    """Error norms at one instant (entries None where not defined)."""

    t: float
    track_err: np.ndarray | None = None
    stab_err: np.ndarray | None = None
    w0_err: float | None = None
    w_err: np.ndarray | None = None
    e_err: np.ndarray | None = None
    c_node: np.ndarray | None = None
    c_edge: np.ndarray | None = None


def metrics(state, t, model, topo, spec, regime):
    """Tracking/stabilization/observer error norms at time t."""
    regime = Regime(regime)
    h = spec.offsets(t)
    c = model.c
    x0 = state.x[0]
    followers = state.x[1:]
    y = followers @ c.T
    y0 = x0 @ c.T
    ch = h @ c.T
    sample = MetricSample(t=float(t), c_node=None if state.c_node is None
                          else state.c_node.copy(),
                          c_edge=None if state.c_edge is None
                          else state.c_edge.copy())
    if regime.is_tracking:
        sample.track_err = np.linalg.norm(y - y0 - ch, axis=1)
        sample.e_err = np.linalg.norm(followers - h - x0 - state.v, axis=1)
    else:
        rel = y - ch
        diff = rel[:, None, :] - rel[None, :, :]
        sample.stab_err = np.linalg.norm(diff, axis=2)
    if regime.has_local_observer:
        sample.w0_err = float(np.linalg.norm(state.w0 - x0))
        sample.w_err = np.linalg.norm(state.w - (followers - h), axis=1)
    return sample
