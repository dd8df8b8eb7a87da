import numpy as np
import pytest

from formctl import presets
from formctl.errors import ScenarioError
from formctl.protocols import LeaderInput, Regime, RegimeOptions
from formctl.sim import Scenario, integrate, rk4
from formctl.vehicle import (VehicleParams, VehiclePose, feedback_linearize,
                             hand_position, hand_states, vehicle_derivative)

import helpers

PARAMS = VehicleParams(mass=10.1, inertia=0.13, hand_offset=0.12)


class TestHandPosition:
    def test_facing_east(self):
        pose = VehiclePose(0.0, 0.0, 0.0).as_array()
        assert np.allclose(hand_position(pose, 0.12), [0.12, 0.0])

    def test_facing_north(self):
        pose = VehiclePose(1.0, 2.0, np.pi / 2).as_array()
        assert np.allclose(hand_position(pose, 0.12), [1.0, 2.12])

    def test_zero_offset_is_center(self):
        pose = VehiclePose(3.0, -1.0, 0.7).as_array()
        assert np.allclose(hand_position(pose, 0.0), [3.0, -1.0])


class TestFeedbackLinearize:
    def test_rest_pure_surge(self):
        pose = VehiclePose(0.0, 0.0, 0.0).as_array()
        force, torque = feedback_linearize(pose, [1.0, 0.0], PARAMS)
        assert force == pytest.approx(PARAMS.mass)
        assert torque == pytest.approx(0.0, abs=1e-12)

    def test_rest_pure_sway(self):
        pose = VehiclePose(0.0, 0.0, 0.0).as_array()
        force, torque = feedback_linearize(pose, [0.0, 1.0], PARAMS)
        assert force == pytest.approx(0.0, abs=1e-12)
        assert torque == pytest.approx(PARAMS.inertia / PARAMS.hand_offset)

    def test_hand_acceleration_roundtrip(self):
        # micro-step finite differences of the hand velocity recover u
        rng = np.random.default_rng(2)
        for _ in range(20):
            pose = rng.uniform(-1, 1, 5)
            u = rng.uniform(-2, 2, 2)
            force, torque = feedback_linearize(pose, u, PARAMS)

            def f(t, y):
                return vehicle_derivative(y, force, torque, PARAMS)

            d = 1e-6
            plus = rk4(f, pose, 0.0, d, d)
            minus = rk4(f, pose, 0.0, -d, -d)
            v_plus = hand_states(plus, PARAMS.hand_offset)[0, 2:]
            v_minus = hand_states(minus, PARAMS.hand_offset)[0, 2:]
            accel = (v_plus - v_minus) / (2 * d)
            assert np.allclose(accel, u, atol=1e-7)


class TestVehicleDerivative:
    def test_rest_is_stationary(self):
        pose = VehiclePose(1.0, 2.0, 0.3).as_array()
        assert not vehicle_derivative(pose, 0.0, 0.0, PARAMS).any()

    def test_forward_motion(self):
        pose = VehiclePose(0.0, 0.0, 0.0, speed=1.0).as_array()
        d = vehicle_derivative(pose, 0.0, 0.0, PARAMS)
        assert np.allclose(d[:2], [1.0, 0.0])

    def test_force_accelerates(self):
        pose = VehiclePose(0.0, 0.0, 0.0).as_array()
        d = vehicle_derivative(pose, PARAMS.mass, 0.0, PARAMS)
        assert d[3] == pytest.approx(1.0)

    def test_coasting_preserves_speeds(self):
        # no force or torque: linear and angular speed are constant
        pose = np.array([0.0, 0.0, 0.2, 1.5, 0.4])
        end = rk4(lambda t, y: vehicle_derivative(y, 0.0, 0.0, PARAMS),
                  pose, 0.0, 2.0, 1e-3)
        assert end[3] == pytest.approx(1.5, abs=1e-12)
        assert end[4] == pytest.approx(0.4, abs=1e-12)


class TestExactLinearization:
    def test_matches_double_integrator_over_one_second(self):
        # identical u drives the nonlinear vehicle's hand state and the
        # flat double integrator to the same trajectory
        def u_of(t):
            return np.array([np.sin(t), np.cos(2.0 * t)])

        pose0 = np.array([0.3, -0.2, 0.8, 0.5, -0.3])

        def vehicle_rhs(t, y):
            force, torque = feedback_linearize(y, u_of(t), PARAMS)
            return vehicle_derivative(y, force, torque, PARAMS)

        def flat_rhs(t, y):
            return np.array([y[2], y[3], *u_of(t)])

        s0 = hand_states(pose0, PARAMS.hand_offset)[0]
        pose_end = rk4(vehicle_rhs, pose0, 0.0, 1.0, 1e-3)
        flat_end = rk4(flat_rhs, s0, 0.0, 1.0, 1e-3)
        hand_end = hand_states(pose_end, PARAMS.hand_offset)[0]
        assert np.abs(hand_end - flat_end).max() < 1e-6


class TestVehicleScenario:
    def small_scenario(self, n=3, t_final=5.0):
        from formctl.formation import make_harmonic_spec

        model = presets.example2_model()
        lead = LeaderInput(func=lambda t: np.array([0.3 * np.exp(-t), 0.2]),
                           bound=0.4)
        gains = helpers.make_gains(
            model, Regime.DIRECTED_TRACKING_BOUNDED_INPUT,
            k1=presets.example2_k1(), poles=presets.EXAMPLE2_POLES,
            beta=1.0, bound=0.4)
        topo = presets.ring_topology(n, pinned=tuple(range(n)),
                                     pin_weight=2.0)
        spec = make_harmonic_spec(4, n, r=2.0, w=0.5,
                                  component_map=[(-1, 1), (0, 2)],
                                  k1=presets.example2_k1(), t_final=t_final)
        return Scenario(name="veh", model=model, topology=topo, gains=gains,
                        spec=spec,
                        regime=Regime.DIRECTED_TRACKING_BOUNDED_INPUT,
                        options=RegimeOptions(smooth_z=True, delta=1e-3),
                        leader_input=lead, t_final=t_final, dt=2e-3, seed=6,
                        record_stride=100, vehicle=PARAMS)

    def test_run_records_poses_and_reduces_error(self):
        sc = self.small_scenario(n=10, t_final=8.0)
        res = integrate(sc)
        assert res.poses is not None
        assert res.poses.shape[1:] == (10, 5)
        # hand rows of the linear state equal the pose-derived hand states
        for k in (0, len(res.times) // 2, -1):
            hs = hand_states(res.poses[k], PARAMS.hand_offset)
            assert np.allclose(res.x[k, 1:], hs, atol=1e-12)
        assert res.track_err[-1].max() < 0.5 * res.track_err[0].max()

    def test_wrong_model_shape_rejected(self):
        sc = self.small_scenario()
        sc.model = helpers.planar_model()
        with pytest.raises(ScenarioError):
            integrate(sc, check_certificates=False)

    def test_bad_params_rejected(self):
        with pytest.raises(ScenarioError):
            VehicleParams(mass=0.0)
