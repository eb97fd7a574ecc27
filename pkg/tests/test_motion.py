import numpy as np
import pytest

from cmhe.errors import InvalidArgumentError
from cmhe.experiments import generate_trajectory
from cmhe.kinematics import measurement, position_jacobian, tip_position
from cmhe.models import Measurement, RobotState, ShapeParams, TrajectorySpec, VelocityInput
from cmhe.motion import propagate, reconstruct_inputs, state_derivative, step
from cmhe.utils.numerics import moving_average, wrap_angle


def test_zero_input_is_a_fixed_point():
    x = RobotState(0.1, -0.2, 0.9, 0.4, 1.2)
    np.testing.assert_array_equal(state_derivative(x, VelocityInput(0.0, 0.0)), np.zeros(5))
    assert step(x, VelocityInput(0.0, 0.0), 0.05) == x


def test_state_derivative_blocks():
    x = RobotState(0.0, 0.0, 0.0, 0.7, -0.5)
    u = np.array([0.3, -0.8])
    derivative = state_derivative(x, u, s=1.5)
    J = position_jacobian(ShapeParams(0.7, -0.5, 1.5))
    np.testing.assert_allclose(derivative[:3], J @ u, atol=1e-12)
    np.testing.assert_array_equal(derivative[3:], u)


def test_step_is_forward_euler():
    x = np.array([0.1, 0.2, 0.8, 0.5, 0.3])
    u = np.array([0.2, 0.1])
    expected = x + 0.05 * state_derivative(x, u)
    np.testing.assert_allclose(step(x, u, 0.05).as_array(), expected, atol=1e-15)


def test_step_rejects_non_positive_dt():
    with pytest.raises(InvalidArgumentError):
        step(RobotState(0, 0, 1, 0, 0), VelocityInput(0.1, 0.1), 0.0)


def test_propagate_matches_step(rng):
    states = np.column_stack([rng.normal(size=(20, 3)), rng.uniform(0.1, 1.4, 20), rng.uniform(-3, 3, 20)])
    inputs = rng.normal(size=(20, 2))
    batch = propagate(states, inputs, 0.05, 1.2)
    for k in range(20):
        np.testing.assert_allclose(batch[k], step(states[k], inputs[k], 0.05, 1.2).as_array(), atol=1e-15)


def test_reconstruct_constant_rates():
    dt = 0.05
    t = np.arange(40) * dt
    theta, phi = 0.3 + 0.2 * t, -1.0 + 0.3 * t
    rates = reconstruct_inputs(measurement(theta, phi), dt)
    assert rates.shape == (39, 2)
    np.testing.assert_allclose(rates, np.tile([0.2, 0.3], (39, 1)), atol=1e-8)


def test_reconstruct_wraps_bend_plane():
    dt = 0.1
    phi = wrap_angle(3.0 + 0.05 * np.arange(10))
    z = [Measurement(*row) for row in measurement(np.full(10, 0.5), phi)]
    rates = reconstruct_inputs(z, dt)
    np.testing.assert_allclose(rates[:, 1], 0.5, atol=1e-8)
    np.testing.assert_allclose(rates[:, 0], 0.0, atol=1e-8)


def test_reconstruct_with_moving_average_keeps_ramps():
    dt = 0.05
    t = np.arange(30) * dt
    z = measurement(0.4 + 0.5 * t, 0.2 + 0.1 * t)
    rates = reconstruct_inputs(z, dt, window=3)
    np.testing.assert_allclose(rates[1:-1], np.tile([0.5, 0.1], (27, 1)), atol=1e-8)


def test_reconstruct_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        reconstruct_inputs(np.zeros((1, 2)), 0.05)
    with pytest.raises(InvalidArgumentError):
        reconstruct_inputs(np.zeros((3, 2)), -0.05)
    with pytest.raises(InvalidArgumentError):
        reconstruct_inputs(np.array([[0.0, 0.1], [np.nan, 0.1]]), 0.05)


def test_state_derivative_is_linear_in_input(rng):
    for _ in range(20):
        x = np.concatenate([rng.normal(size=3), [rng.uniform(0.0, 1.5), rng.uniform(-3, 3)]])
        u1, u2 = rng.normal(size=2), rng.normal(size=2)
        a, b = rng.normal(size=2)
        combined = state_derivative(x, a * u1 + b * u2)
        np.testing.assert_allclose(combined, a * state_derivative(x, u1) + b * state_derivative(x, u2), atol=1e-9)


def _integrate(x0, u, dt, steps):
    x = np.asarray(x0, dtype=float)
    for _ in range(steps):
        x = step(x, u, dt).as_array()
    return x


def test_euler_endpoint_converges_with_step_size():
    x0 = np.concatenate([tip_position(0.5, 0.3, 1.0), [0.5, 0.3]])
    u = np.array([0.2, 0.4])
    dt = 0.05
    coarse = _integrate(x0, u, dt, 100)
    half = _integrate(x0, u, dt / 2, 200)
    fine = _integrate(x0, u, dt / 100, 10_000)

    coarse_error = np.linalg.norm(coarse[:3] - fine[:3])
    half_error = np.linalg.norm(half[:3] - fine[:3])
    assert coarse_error < dt
    assert 1.5 < coarse_error / half_error < 2.5
    np.testing.assert_allclose(coarse[3:], fine[3:], atol=1e-9)


def test_integrating_reconstructed_inputs_retracks_truth():
    dt = 0.05
    trajectory = generate_trajectory(TrajectorySpec(), 100, dt)
    rates = reconstruct_inputs(trajectory.measurements, dt)

    states = [trajectory.states[0]]
    for u in rates:
        states.append(step(states[-1], u, dt).as_array())
    states = np.array(states)

    np.testing.assert_allclose(states[:, 3], trajectory.states[:, 3], atol=1e-8)
    np.testing.assert_allclose(wrap_angle(states[:, 4] - trajectory.states[:, 4]), 0.0, atol=1e-8)
    assert np.max(np.linalg.norm(states[:, :3] - trajectory.states[:, :3], axis=1)) < 2 * dt


def test_moving_average_shrinks_window_at_ends():
    series = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    np.testing.assert_allclose(moving_average(series, 3), [1.5, 2.0, 3.0, 4.0, 4.5])
    np.testing.assert_allclose(moving_average(series, 4), [2.0, 2.5, 3.0, 3.5, 4.0])
    np.testing.assert_array_equal(moving_average(series, 1), series)

    columns = np.column_stack([series, 10.0 * series])
    smoothed = moving_average(columns, 3)
    assert smoothed.shape == (5, 2)
    np.testing.assert_allclose(smoothed[:, 1], 10.0 * smoothed[:, 0])
