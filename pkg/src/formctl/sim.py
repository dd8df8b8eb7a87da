"""Deterministic fixed-step simulation, metric recording and export.

Classical RK4 on a fixed grid t_i = i dt.  Integration restarts at every
formation switch time so each step sees a single constant shape piece; the
offsets are evaluated right-continuously at segment starts.  Identical
scenario + seed gives bitwise-identical output files.
"""

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import protocols
from .errors import DivergenceError, ScenarioError
from .graph import left_null_vector, lambda2_symmetrized, laplacian
from .protocols import Regime, build_context, metrics
from .synthesis import verify_gainset

DIVERGENCE_LIMIT = 1e9


@dataclass
class InitSpec:
    """Initial conditions; None fields are drawn or zeroed at integrate time.

    Draw order with the scenario rng: agent states (leader row first), then
    node weights, then edge weights.  Observers default to zero.
    """

    x: np.ndarray | None = None
    v: np.ndarray | None = None
    w: np.ndarray | None = None
    w0: np.ndarray | None = None
    c_edge: np.ndarray | None = None
    c_node: np.ndarray | None = None
    leader_x: np.ndarray | None = None   # vehicle runs only
    x_range: tuple = (-5.0, 5.0)
    c_range: tuple = (1.0, 3.0)


@dataclass
class Scenario:
    """Everything integrate() needs for one reproducible run."""

    name: str
    model: object
    topology: object
    gains: object
    spec: object
    regime: Regime
    options: protocols.RegimeOptions | None = None
    leader_input: protocols.LeaderInput | None = None
    t_final: float = 10.0
    dt: float = 1e-3
    seed: int = 0
    record_stride: int = 100
    init: InitSpec = field(default_factory=InitSpec)
    position_components: tuple = (0, 1)
    vehicle: object = None

    def __post_init__(self):
        self.regime = Regime(self.regime)
        if self.dt <= 0 or self.t_final <= 0:
            raise ScenarioError("dt and t_final must be positive")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ScenarioError("t_final must be an integer number of steps")
        for s in self.spec.switch_times:
            k = s / self.dt
            if abs(k - round(k)) > 1e-6:
                raise ScenarioError(
                    f"switch time {s} is not an integer multiple of dt")


@dataclass
class SimResult:
    """Recorded trajectories, per-sample metrics and a summary block."""

    scenario_name: str
    regime: Regime
    dt: float
    seed: int
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray | None
    w0: np.ndarray | None
    c_edge: np.ndarray | None
    c_node: np.ndarray | None
    track_err: np.ndarray | None
    stab_err: np.ndarray | None
    w0_err: np.ndarray | None
    w_err: np.ndarray | None
    e_err: np.ndarray | None
    record_stride: int
    wall_clock: float = 0.0
    summary: dict = field(default_factory=dict)
    aborted: bool = False
    abort_time: float | None = None
    poses: np.ndarray | None = None    # vehicle runs: (T, N, 5) raw poses


def rk4(f, y0, t0, t1, dt):
    """Plain fixed-step RK4 for y' = f(t, y); integrator self-test hook."""
    steps = int(round((t1 - t0) / dt))
    y = np.asarray(y0, dtype=float)
    for i in range(steps):
        t = t0 + i * dt
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt / 2 * k1)
        k3 = f(t + dt / 2, y + dt / 2 * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def draw_initial_state(scenario, layout):
    """Initial flat state per the scenario's InitSpec and seed."""
    rng = np.random.default_rng(scenario.seed)
    init = scenario.init
    n = layout.n
    n_f = layout.n_followers
    lo, hi = init.x_range
    x = (rng.uniform(lo, hi, (n_f + 1, n)) if init.x is None
         else np.asarray(init.x, dtype=float))
    if x.shape != (n_f + 1, n):
        raise ScenarioError(f"initial x must have shape {(n_f + 1, n)}")
    state = protocols.ProtocolState(
        x=x, v=np.zeros((n_f, n)) if init.v is None
        else np.asarray(init.v, dtype=float))
    if layout.regime.has_local_observer:
        state.w = (np.zeros((n_f, n)) if init.w is None
                   else np.asarray(init.w, dtype=float))
        state.w0 = (np.zeros(n) if init.w0 is None
                    else np.asarray(init.w0, dtype=float))
    c_lo, c_hi = init.c_range
    if layout.regime.has_node_weights:
        state.c_node = (rng.uniform(c_lo, c_hi, n_f) if init.c_node is None
                        else np.asarray(init.c_node, dtype=float))
    if layout.regime.has_edge_weights:
        if init.c_edge is None:
            raw = rng.uniform(c_lo, c_hi, (n_f, n_f))
            state.c_edge = 0.5 * (raw + raw.T)
        else:
            state.c_edge = np.asarray(init.c_edge, dtype=float)
            if np.abs(state.c_edge - state.c_edge.T).max() > 0:
                raise ScenarioError("initial edge weights must be symmetric")
    if (layout.regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT
            and np.any(state.c_node < 1.0)):
        raise ScenarioError("bounded-input regime needs c_i(0) >= 1")
    return layout.pack(state)


def _segments(scenario):
    """(start_step, end_step, piece_index) triples covering [0, t_final]."""
    dt = scenario.dt
    total = int(round(scenario.t_final / dt))
    bounds = [0]
    for s in scenario.spec.switch_times:
        k = int(round(s / dt))
        if 0 < k < total:
            bounds.append(k)
    bounds.append(total)
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        piece = scenario.spec.piece_index(a * dt)
        out.append((a, b, piece))
    return out


def run_loop(stage_fn, y0, scenario):
    """Shared RK4 driver: stage_fn(t, y, piece) -> dy on the global grid.

    Returns (records, wall_clock, aborted_at) with records a list of
    (step index, state copy) pairs.
    """
    spec = scenario.spec
    dt = scenario.dt
    stride = scenario.record_stride
    total = int(round(scenario.t_final / dt))
    y = y0
    records = [(0, y.copy())]
    started = time.perf_counter()
    aborted_at = None
    for a, b, piece in _segments(scenario):
        if aborted_at is not None:
            break
        for i in range(a, b):
            t = i * dt
            k1 = stage_fn(t, y, piece)
            k2 = stage_fn(t + dt / 2, y + (dt / 2) * k1, piece)
            k3 = stage_fn(t + dt / 2, y + (dt / 2) * k2, piece)
            k4 = stage_fn(t + dt, y + dt * k3, piece)
            y = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            worst = np.abs(y).max()
            if not np.isfinite(worst) or worst > DIVERGENCE_LIMIT:
                aborted_at = (i + 1) * dt
                break
            if (i + 1) % stride == 0 or i + 1 == total:
                records.append((i + 1, y.copy()))
    return records, time.perf_counter() - started, aborted_at


def check_scenario_certificates(scenario):
    bound = (scenario.leader_input.bound
             if scenario.leader_input is not None else None)
    report = verify_gainset(scenario.model, scenario.gains, scenario.regime,
                            leader_bound=bound)
    if not report.passed:
        raise ScenarioError(f"gain certificates failed: {report.failures()}")


def integrate(scenario, check_certificates=True):
    """Run the scenario start to finish; raises DivergenceError on blowup."""
    if scenario.vehicle is not None:
        from .vehicle import run_vehicle_scenario
        return run_vehicle_scenario(scenario,
                                    check_certificates=check_certificates)
    if check_certificates:
        check_scenario_certificates(scenario)
    ctx = build_context(scenario.model, scenario.gains, scenario.topology,
                        scenario.regime, options=scenario.options,
                        leader_input=scenario.leader_input)
    spec = scenario.spec
    y0 = draw_initial_state(scenario, ctx.layout)
    memo = [None, None, None]   # consecutive RK4 stages share midpoints

    def stage(t, y, piece):
        if memo[0] != t or memo[1] != piece:
            memo[0], memo[1], memo[2] = t, piece, spec.offsets(t, piece)
        return ctx.rhs(t, y, memo[2])

    records, wall, aborted_at = run_loop(stage, y0, scenario)
    result = assemble_result(scenario, ctx.layout, records, wall,
                             aborted_at=aborted_at)
    if aborted_at is not None:
        raise DivergenceError(
            f"state diverged at t = {aborted_at:.6g}", t_abort=aborted_at,
            partial=result)
    result.summary = summarize(result, scenario)
    return result


def assemble_result(scenario, layout, records, wall, aborted_at=None):
    spec = scenario.spec
    steps = np.array([s for s, _ in records])
    times = steps * scenario.dt
    states = [layout.unpack(y) for _, y in records]
    samples = [metrics(st, t, scenario.model, scenario.topology, spec,
                       scenario.regime)
               for st, t in zip(states, times)]

    def stack(attr):
        vals = [getattr(s, attr) for s in samples]
        return None if vals[0] is None else np.stack(vals)

    result = SimResult(
        scenario_name=scenario.name, regime=scenario.regime, dt=scenario.dt,
        seed=scenario.seed, times=times,
        x=np.stack([s.x for s in states]),
        v=np.stack([s.v for s in states]),
        w=None if states[0].w is None else np.stack([s.w for s in states]),
        w0=None if states[0].w0 is None
        else np.stack([s.w0 for s in states]),
        c_edge=None if states[0].c_edge is None
        else np.stack([s.c_edge for s in states]),
        c_node=None if states[0].c_node is None
        else np.stack([s.c_node for s in states]),
        track_err=stack("track_err"), stab_err=stack("stab_err"),
        w0_err=None if samples[0].w0_err is None
        else np.array([s.w0_err for s in samples]),
        w_err=stack("w_err"), e_err=stack("e_err"),
        record_stride=scenario.record_stride, wall_clock=wall,
        aborted=aborted_at is not None, abort_time=aborted_at)
    return result


def _window_bounds(scenario):
    spec = scenario.spec
    edges = [0.0] + [s for s in spec.switch_times if s < scenario.t_final]
    edges.append(scenario.t_final)
    return list(zip(edges[:-1], edges[1:]))


def _per_sample_error(result):
    if result.track_err is not None:
        return result.track_err.max(axis=1)
    return result.stab_err.max(axis=(1, 2))


def summarize(result, scenario):
    """Per-window error statistics, weight monotonicity and final errors."""
    err = _per_sample_error(result)
    times = result.times
    windows = []
    for (a, b) in _window_bounds(scenario):
        inside = (times >= a) & (times <= b)
        if not inside.any():
            windows.append({"start": a, "end": b, "empty": True})
            continue
        w_err = err[inside]
        w_t = times[inside]
        tail = w_err[w_t >= b - 5.0]
        windows.append({
            "start": a, "end": b, "empty": False,
            "initial_error": float(w_err[0]),
            "final_error": float(w_err[-1]),
            "max_error": float(w_err.max()),
            "last5s_max_error": float(tail.max()) if tail.size else None,
        })
    violations = 0
    delta_tail = None
    if result.c_node is not None:
        series = [result.c_node]
    else:
        series = []
    if result.c_edge is not None:
        n_f = result.c_edge.shape[1]
        iu = np.triu_indices(n_f, k=1)
        series.append(result.c_edge[:, iu[0], iu[1]])
    if series:
        allc = np.hstack(series)
        diffs = np.diff(allc, axis=0)
        violations = int((diffs < -1e-9 * result.record_stride).sum())
        tail_start = np.searchsorted(times, 0.9 * times[-1])
        delta_tail = float(
            (allc[-1] - allc[min(tail_start, len(times) - 1)]).max())
    out = {
        "scenario": result.scenario_name,
        "regime": result.regime.value,
        "seed": result.seed,
        "dt": result.dt,
        "t_final": float(times[-1]),
        "aborted": result.aborted,
        "abort_time": result.abort_time,
        "windows": windows,
        "final_error": float(err[-1]),
        "max_error": float(err.max()),
        "c_monotonicity_violations": violations,
        "c_delta_final_10pct": delta_tail,
        "wall_clock_s": float(result.wall_clock),
    }
    if result.w0_err is not None:
        out["final_w0_err"] = float(result.w0_err[-1])
    return out


def lyapunov_diagnostic(result, scenario, alpha=None):
    """Energy-style decrease check for the strongly-connected stabilization
    regime.

    Evaluates V = 0.5 sum_i r_i (2 c_i + rho_i) rho_i
                + 0.5 sum_i r_i (c_i - alpha)^2
    along the recorded samples with alpha at its guaranteed level
    5 N lambda_max(R) / (2 lambda_2) unless overridden, and reports any
    increases beyond integration tolerance.
    """
    if Regime(result.regime) is not Regime.DIRECTED_STABILIZATION:
        raise ScenarioError("diagnostic applies to the directed "
                            "stabilization regime")
    topo = scenario.topology
    r = left_null_vector(topo)
    lam2 = lambda2_symmetrized(topo, r)
    n_f = topo.n_followers
    alpha_bound = 5.0 * n_f * r.max() / (2.0 * lam2)
    alpha_used = alpha_bound if alpha is None else float(alpha)
    q_mat = scenario.gains.q_mat
    lap = laplacian(topo)
    values = []
    for k, t in enumerate(result.times):
        h = scenario.spec.offsets(t)
        z = result.v[k] - (result.x[k, 1:] - h)
        varrho = np.kron(lap, np.eye(scenario.model.n)) @ z.reshape(-1)
        varrho = varrho.reshape(n_f, scenario.model.n)
        rho = np.einsum("ij,jk,ik->i", varrho, q_mat, varrho)
        c = result.c_node[k]
        values.append(0.5 * float(r @ ((2 * c + rho) * rho))
                      + 0.5 * float(r @ (c - alpha_used) ** 2))
    values = np.asarray(values)
    increases = np.diff(values)
    bad = int((increases > 1e-6 * np.maximum(1.0, values[:-1])).sum())
    return {
        "values": values,
        "alpha": alpha_used,
        "alpha_bound": alpha_bound,
        "alpha_ok": alpha_used >= alpha_bound - 1e-12,
        "increase_count": bad,
        "increase_fraction": bad / max(1, len(increases)),
    }


def _fmt(v):
    return repr(float(v))


def _csv_columns(result):
    """Ordered (header, series) pairs; the stable export schema."""
    cols = [("t", result.times)]
    n_agents, n = result.x.shape[1:]
    for a in range(n_agents):
        for j in range(n):
            cols.append((f"x{a}_{j}", result.x[:, a, j]))
    for i in range(result.v.shape[1]):
        for j in range(n):
            cols.append((f"v{i + 1}_{j}", result.v[:, i, j]))
    if result.w is not None:
        for i in range(result.w.shape[1]):
            for j in range(n):
                cols.append((f"w{i + 1}_{j}", result.w[:, i, j]))
        for j in range(n):
            cols.append((f"w0_{j}", result.w0[:, j]))
    if result.c_node is not None:
        for i in range(result.c_node.shape[1]):
            cols.append((f"c{i + 1}", result.c_node[:, i]))
    if result.c_edge is not None:
        n_f = result.c_edge.shape[1]
        for i in range(n_f):
            for j in range(i + 1, n_f):
                cols.append((f"cedge{i + 1}_{j + 1}",
                             result.c_edge[:, i, j]))
    if result.track_err is not None:
        for i in range(result.track_err.shape[1]):
            cols.append((f"track_err{i + 1}", result.track_err[:, i]))
    if result.stab_err is not None:
        cols.append(("stab_err_max", result.stab_err.max(axis=(1, 2))))
    if result.w0_err is not None:
        cols.append(("w0_err", result.w0_err))
        for i in range(result.w_err.shape[1]):
            cols.append((f"w_err{i + 1}", result.w_err[:, i]))
    if result.e_err is not None:
        for i in range(result.e_err.shape[1]):
            cols.append((f"e_err{i + 1}", result.e_err[:, i]))
    return cols


def export(result, out_dir, formats=("csv", "json"), plots=False,
           snapshot_times=(), position_components=(0, 1)):
    """Write `<name>.timeseries.csv`, `<name>.summary.json` and optional
    SVG plots into out_dir; returns the list of written paths."""
    from pathlib import Path

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(f"cannot create output dir: {exc}") from exc
    name = result.scenario_name
    written = []
    try:
        if "csv" in formats:
            path = out_dir / f"{name}.timeseries.csv"
            cols = _csv_columns(result)
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow([h for h, _ in cols])
                for k in range(len(result.times)):
                    writer.writerow([_fmt(series[k]) for _, series in cols])
            written.append(path)
        if "json" in formats:
            path = out_dir / f"{name}.summary.json"
            with open(path, "w") as fh:
                json.dump(result.summary, fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(path)
    except OSError as exc:
        raise ScenarioError(f"export failed: {exc}") from exc
    if plots or snapshot_times:
        written.extend(_export_plots(result, out_dir, plots, snapshot_times,
                                     position_components))
    return written


def load_summary(path):
    with open(path) as fh:
        return json.load(fh)


def _export_plots(result, out_dir, error_plot, snapshot_times,
                  position_components):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    name = result.scenario_name
    if error_plot:
        fig, ax = plt.subplots(figsize=(7, 4))
        err = (result.track_err if result.track_err is not None
               else result.stab_err.max(axis=2))
        for i in range(err.shape[1]):
            ax.plot(result.times, err[:, i], lw=0.8, label=f"agent {i + 1}")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("error norm")
        ax.set_yscale("log")
        ax.legend(fontsize=7)
        path = out_dir / f"{name}.errors.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    px, py = position_components
    for t_snap in snapshot_times:
        k = int(np.argmin(np.abs(result.times - t_snap)))
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.scatter(result.x[k, 1:, px], result.x[k, 1:, py], marker="o",
                   label="followers")
        ax.scatter(result.x[k, 0, px], result.x[k, 0, py], marker="*", s=120,
                   label="leader")
        order = list(range(1, result.x.shape[1])) + [1]
        ax.plot(result.x[k, order, px], result.x[k, order, py], lw=0.5,
                alpha=0.5)
        ax.set_title(f"t = {result.times[k]:.1f} s")
        ax.set_aspect("equal")
        ax.legend(fontsize=7)
        path = out_dir / f"{name}.snapshot_t{t_snap:g}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
