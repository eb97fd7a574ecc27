import numpy as np
import pytest

from cmhe.config import EkfSettings, EstimatorConfig
from cmhe.ekf import EkfState, kalman_update, predict, run_filter, transition_jacobian, update
from cmhe.errors import NumericFailureError
from cmhe.kinematics import measurement, tip_position
from cmhe.models import Measurement
from cmhe.motion import step
from cmhe.utils.numerics import numerical_jacobian


def make_state(theta=0.7, phi=0.4, variance=1e-2):
    mean = np.concatenate([tip_position(theta, phi, 1.0), [theta, phi]])
    return EkfState(mean=mean, covariance=variance * np.eye(5))


def assert_psd(P):
    np.testing.assert_allclose(P, P.T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(P)) >= -1e-12


def test_predict_without_input_or_noise():
    state = make_state()
    predicted = predict(state, np.zeros(2), 0.05, np.zeros((5, 5)))
    np.testing.assert_array_equal(predicted.mean, state.mean)
    np.testing.assert_allclose(predicted.covariance, state.covariance, atol=1e-12)


def test_predict_adds_process_noise():
    state = make_state(theta=0.0, phi=0.0)
    predicted = predict(state, np.zeros(2), 0.05, 3e-4 * np.eye(5))
    np.testing.assert_allclose(predicted.covariance, state.covariance + 3e-4 * np.eye(5), atol=1e-12)


def test_transition_jacobian_matches_step(rng):
    for _ in range(20):
        x = np.concatenate([rng.normal(size=3), [rng.uniform(0.1, 1.4), rng.uniform(-3, 3)]])
        u = rng.normal(size=2)
        numeric = numerical_jacobian(lambda v: step(v, u, 0.05).as_array(), x, 1e-4)
        np.testing.assert_allclose(transition_jacobian(x, u, 0.05), numeric, atol=1e-5)


def test_uninformative_measurement_leaves_prior():
    state = make_state()
    posterior = update(state, Measurement(0.1, 0.9), 1e12 * np.eye(2))
    np.testing.assert_allclose(posterior.mean, state.mean, atol=1e-6)
    np.testing.assert_allclose(posterior.covariance, state.covariance, atol=1e-6)


def test_confident_prior_keeps_mean():
    state = EkfState(mean=make_state().mean, covariance=np.zeros((5, 5)))
    posterior = update(state, Measurement(0.1, 0.9), 1e-3 * np.eye(2))
    np.testing.assert_array_equal(posterior.mean, state.mean)


@pytest.mark.parametrize("p, r", [(1.0, 1.0), (0.3, 2.0), (1e-3, 1e-5)])
def test_scalar_gain_matches_closed_form(p, r):
    posterior = kalman_update(np.array([0.0]), np.array([[p]]), np.array([1.0]), np.array([[1.0]]), np.array([[r]]))
    assert posterior.mean[0] == pytest.approx(p / (p + r), abs=1e-9)
    assert posterior.covariance[0, 0] == pytest.approx(p * r / (p + r), abs=1e-9)


def test_embedded_scalar_gain():
    # In the plane phi = pi/2, d gamma / d theta = 0 and d beta / d theta = 1
    p, r = 0.02, 0.005
    mean = np.concatenate([tip_position(0.6, np.pi / 2, 1.0), [0.6, np.pi / 2]])
    P = np.zeros((5, 5))
    P[3, 3] = p
    z = measurement(0.65, np.pi / 2)

    posterior = update(EkfState(mean=mean, covariance=P), z, r * np.eye(2))
    innovation = z[1] - 0.6
    assert posterior.mean[3] - 0.6 == pytest.approx(p / (p + r) * innovation, abs=1e-9)


def test_singular_innovation_covariance_raises():
    state = EkfState(mean=make_state().mean, covariance=np.zeros((5, 5)))
    with pytest.raises(NumericFailureError):
        update(state, Measurement(0.1, 0.9), np.zeros((2, 2)))


def test_tracks_noiseless_euler_truth():
    cfg = EstimatorConfig(ekf=EkfSettings(q_diag=[1e-8] * 5, r_diag=[1e-6] * 2))
    M = 100
    u = np.tile([0.2, -0.3], (M - 1, 1))
    truth = np.empty((M, 5))
    truth[0] = make_state(0.5, 1.0).mean
    for k in range(M - 1):
        truth[k + 1] = step(truth[k], u[k], cfg.dt).as_array()
    z = measurement(truth[:, 3], truth[:, 4])

    result = run_filter(z, cfg, inputs=u, initial=EkfState(truth[0], 1e-8 * np.eye(5)))

    position_rmse = np.sqrt(np.mean(np.sum((result.estimates[:, :3] - truth[:, :3]) ** 2, axis=1)))
    assert position_rmse < 1e-3
    np.testing.assert_allclose(result.estimates[:, 3:], truth[:, 3:], atol=1e-6)


def test_constant_measurements_converge_to_shape():
    cfg = EstimatorConfig()
    z = np.tile(measurement(0.7, 0.4), (500, 1))
    result = run_filter(z, cfg)
    assert result.estimates[-1, 3] == pytest.approx(0.7, abs=1e-4)
    assert result.estimates[-1, 4] == pytest.approx(0.4, abs=1e-4)


def test_covariance_stays_psd_on_noisy_data(rng):
    cfg = EstimatorConfig()
    t = np.arange(200) * cfg.dt
    z = measurement(0.6 + 0.3 * np.sin(t), 1.0 + 0.5 * np.cos(t)) + rng.normal(scale=0.02, size=(200, 2))
    result = run_filter(z, cfg)
    for P in result.covariances:
        assert_psd(P)


@pytest.mark.slow
def test_covariance_bounded_over_long_runs():
    cfg = EstimatorConfig()
    M = 10_000
    z = np.tile(measurement(0.7, 0.4), (M, 1))
    result = run_filter(z, cfg)

    shape_block = result.covariances[:, 3:5, 3:5]
    assert np.all(np.trace(shape_block, axis1=1, axis2=2) < np.trace(cfg.ekf.P0[3:5, 3:5]))
    # Position is unobservable: its variance grows at most by Q per step
    bound = np.trace(cfg.ekf.P0) + M * np.trace(cfg.ekf.Q) * 1.01
    assert np.all(np.trace(result.covariances, axis1=1, axis2=2) <= bound)


def test_single_sample_run():
    result = run_filter(np.array([[0.1, 0.5]]), EstimatorConfig())
    assert result.estimates.shape == (1, 5)
    assert np.all(np.isfinite(result.estimates))
