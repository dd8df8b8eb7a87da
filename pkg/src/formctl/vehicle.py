"""Nonholonomic unicycle layer: hand-position feedback linearization.

The vehicle pose is (r_x, r_y, theta, speed, spin) driven by force F and
torque tau.  The hand point sits a distance L ahead of the axle center;
its position/velocity pair obeys an exact double integrator under

    (F, tau) = M(theta)^(-1) [u - coriolis(pose)],
    M(theta) = [[cos/m, -L sin/J], [sin/m, L cos/J]],

so the linear protocols drive u and the vehicles follow exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ScenarioError
from .protocols import build_context
from .sim import (assemble_result, check_scenario_certificates, run_loop,
                  summarize)

POSE_DIM = 5


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 10.1
    inertia: float = 0.13
    hand_offset: float = 0.12

    def __post_init__(self):
        if min(self.mass, self.inertia, self.hand_offset) <= 0:
            raise ScenarioError("vehicle parameters must be positive")


@dataclass
class VehiclePose:
    rx: float
    ry: float
    theta: float
    speed: float = 0.0
    spin: float = 0.0

    def as_array(self):
        return np.array([self.rx, self.ry, self.theta, self.speed,
                         self.spin])


def hand_position(pose, hand_offset):
    """Point a distance L along the heading from the axle center."""
    rx, ry, theta = pose[0], pose[1], pose[2]
    return np.array([rx + hand_offset * np.cos(theta),
                     ry + hand_offset * np.sin(theta)])


def hand_states(poses, hand_offset):
    """(N, 4) stacked [x, y, xdot, ydot] of the hand points."""
    poses = np.atleast_2d(poses)
    rx, ry, theta = poses[:, 0], poses[:, 1], poses[:, 2]
    speed, spin = poses[:, 3], poses[:, 4]
    cos, sin = np.cos(theta), np.sin(theta)
    return np.stack([
        rx + hand_offset * cos,
        ry + hand_offset * sin,
        speed * cos - hand_offset * spin * sin,
        speed * sin + hand_offset * spin * cos], axis=1)


def _coriolis(theta, speed, spin, hand_offset):
    cos, sin = np.cos(theta), np.sin(theta)
    return np.stack([-speed * spin * sin - hand_offset * spin ** 2 * cos,
                     speed * spin * cos - hand_offset * spin ** 2 * sin],
                    axis=-1)


def feedback_linearize(pose, u, params):
    """Force/torque giving the hand point the acceleration u exactly."""
    pose = np.asarray(pose, dtype=float)
    theta, speed, spin = pose[2], pose[3], pose[4]
    rest = np.asarray(u, dtype=float) - _coriolis(theta, speed, spin,
                                                  params.hand_offset)
    cos, sin = np.cos(theta), np.sin(theta)
    force = params.mass * (cos * rest[0] + sin * rest[1])
    torque = (params.inertia / params.hand_offset) * (-sin * rest[0]
                                                      + cos * rest[1])
    return force, torque


def feedback_linearize_rows(poses, u_rows, params):
    theta, speed, spin = poses[:, 2], poses[:, 3], poses[:, 4]
    rest = u_rows - _coriolis(theta, speed, spin, params.hand_offset)
    cos, sin = np.cos(theta), np.sin(theta)
    force = params.mass * (cos * rest[:, 0] + sin * rest[:, 1])
    torque = (params.inertia / params.hand_offset) * (
        -sin * rest[:, 0] + cos * rest[:, 1])
    return force, torque


def vehicle_derivative(pose, force, torque, params):
    """Pose rate under applied force and torque."""
    pose = np.asarray(pose, dtype=float)
    theta, speed, spin = pose[2], pose[3], pose[4]
    return np.array([speed * np.cos(theta), speed * np.sin(theta), spin,
                     force / params.mass, torque / params.inertia])


def _vehicle_derivative_rows(poses, force, torque, params):
    theta, speed, spin = poses[:, 2], poses[:, 3], poses[:, 4]
    out = np.empty_like(poses)
    out[:, 0] = speed * np.cos(theta)
    out[:, 1] = speed * np.sin(theta)
    out[:, 2] = spin
    out[:, 3] = force / params.mass
    out[:, 4] = torque / params.inertia
    return out


def draw_initial_poses(scenario, n_followers):
    """Random axle positions and headings, vehicles at rest.

    Draw order: positions (N, 2), headings (N,), leader state (n,), then
    node weights (N,).
    """
    rng = np.random.default_rng(scenario.seed)
    init = scenario.init
    lo, hi = init.x_range
    poses = np.zeros((n_followers, POSE_DIM))
    poses[:, :2] = rng.uniform(lo, hi, (n_followers, 2))
    poses[:, 2] = rng.uniform(-np.pi, np.pi, n_followers)
    x0 = rng.uniform(lo, hi, scenario.model.n)
    c_lo, c_hi = init.c_range
    c_node = rng.uniform(c_lo, c_hi, n_followers)
    if init.x is not None:
        poses = np.asarray(init.x, dtype=float)
        if poses.shape != (n_followers, POSE_DIM):
            raise ScenarioError(
                f"vehicle init.x must be poses of shape "
                f"{(n_followers, POSE_DIM)}")
    if init.leader_x is not None:
        x0 = np.asarray(init.leader_x, dtype=float)
    if init.c_node is not None:
        c_node = np.asarray(init.c_node, dtype=float)
    return poses, x0, c_node


def run_vehicle_scenario(scenario, check_certificates=True):
    """Integrate the nonlinear vehicles under the linear protocol.

    The protocol sees the hand states as the follower states; the leader
    stays a linear agent.  Observer and weight dynamics are untouched.
    """
    model = scenario.model
    params = scenario.vehicle
    if not isinstance(params, VehicleParams):
        raise ScenarioError("scenario.vehicle must be VehicleParams")
    if model.n != 4 or model.p != 2:
        raise ScenarioError("vehicle layer needs the 4-state planar "
                            "double-integrator model with 2 inputs")
    if check_certificates:
        check_scenario_certificates(scenario)
    ctx = build_context(model, scenario.gains, scenario.topology,
                        scenario.regime, options=scenario.options,
                        leader_input=scenario.leader_input)
    layout = ctx.layout
    n_f = layout.n_followers
    n = model.n
    spec = scenario.spec
    pose_size = n_f * POSE_DIM
    lin_size = layout.size

    poses0, x0, c_node0 = draw_initial_poses(scenario, n_f)
    lin0 = np.zeros(lin_size)
    xv, vv, wv, w0v, cev, cnv = layout.views(lin0)
    xv[0] = x0
    xv[1:] = hand_states(poses0, params.hand_offset)
    if cnv is not None:
        cnv[:] = c_node0
    if scenario.regime.value == "directed_tracking_bounded_input" and \
            np.any(c_node0 < 1.0):
        raise ScenarioError("bounded-input regime needs c_i(0) >= 1")
    y0 = np.concatenate([poses0.reshape(-1), lin0])

    def to_linear(y):
        poses = y[:pose_size].reshape(n_f, POSE_DIM)
        lin = y[pose_size:].copy()
        x = lin[layout.sl_x].reshape(n_f + 1, n)
        x[1:] = hand_states(poses, params.hand_offset)
        return poses, lin

    memo = [None, None, None]

    def stage(t, y, piece):
        poses, lin = to_linear(y)
        if memo[0] != t or memo[1] != piece:
            memo[0], memo[1], memo[2] = t, piece, spec.offsets(t, piece)
        dlin, u = ctx.rhs_with_controls(t, lin, memo[2])
        force, torque = feedback_linearize_rows(poses, u, params)
        dposes = _vehicle_derivative_rows(poses, force, torque, params)
        dy = np.concatenate([dposes.reshape(-1), dlin])
        # follower hand rows are derived from poses, not integrated
        dy[pose_size + n: pose_size + (n_f + 1) * n] = 0.0
        return dy

    records, wall, aborted_at = run_loop(stage, y0, scenario)
    lin_records = []
    pose_records = []
    for step, y in records:
        poses, lin = to_linear(y)
        lin_records.append((step, lin))
        pose_records.append(poses)
    result = assemble_result(scenario, layout, lin_records, wall,
                             aborted_at=aborted_at)
    result.poses = np.stack(pose_records)
    if aborted_at is not None:
        raise DivergenceError(
            f"vehicle state diverged at t = {aborted_at:.6g}",
            t_abort=aborted_at, partial=result)
    result.summary = summarize(result, scenario)
    return result
