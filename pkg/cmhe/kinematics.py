"""
Closed-form constant-curvature geometry for a one-section continuum robot.

Tip position, tip rotation, the position Jacobian with respect to the shape
angles, the IMU roll/pitch measurement map and its inverse. The array-level
helpers (``tip_position``, ``shape_jacobian``, ``measurement``,
``measurement_jacobian``, ``invert``) broadcast over numpy arrays so the
estimators can evaluate whole horizon windows at once; the ShapeParams-level
operations wrap them for single configurations.
"""

from typing import Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import InvalidArgumentError
from .models import Measurement, Rotation3, ShapeParams

EPS_SINGULAR = 1e-6   # rad; series branch below this bend angle
FD_STEP = 1e-6        # rad; central-difference step for the position Jacobian


def _require_finite(*values) -> None:
    for value in values:
        if not np.all(np.isfinite(value)):
            raise InvalidArgumentError(f"non-finite argument: {value!r}")


def _require_length(s: float) -> None:
    if not np.isfinite(s) or s <= 0:
        raise InvalidArgumentError(f"arc length must be positive, got {s!r}")


def tip_position(theta, phi, s: float) -> np.ndarray:
    """
    Tip position of the arc, broadcasting over ``theta`` and ``phi``.

    Returns:
        Array of shape ``broadcast(theta, phi).shape + (3,)``
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    small = np.abs(theta) < EPS_SINGULAR
    safe = np.where(small, 1.0, theta)

    # (cos(theta) - 1) / theta written without cancellation
    bend = np.where(small, -theta / 2.0, -2.0 * np.sin(safe / 2.0) ** 2 / safe)
    axial = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)

    return s * np.stack([np.cos(phi) * bend, np.sin(phi) * bend, axial], axis=-1)


def shape_jacobian(theta, phi, s: float) -> np.ndarray:
    """
    Central-difference Jacobian of ``tip_position`` with respect to (theta, phi).

    Below the singular threshold the analytic series derivatives are used.

    Returns:
        Array of shape ``broadcast(theta, phi).shape + (3, 2)``
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    h = FD_STEP

    d_theta = (tip_position(theta + h, phi, s) - tip_position(theta - h, phi, s)) / (2 * h)
    d_phi = (tip_position(theta, phi + h, s) - tip_position(theta, phi - h, s)) / (2 * h)

    small = np.abs(theta) < EPS_SINGULAR
    if np.any(small):
        c, sn = np.cos(phi), np.sin(phi)
        bend = -theta / 2.0 + theta**3 / 24.0
        d_bend = -0.5 + theta**2 / 8.0
        series_theta = s * np.stack([c * d_bend, sn * d_bend, -theta / 3.0], axis=-1)
        series_phi = s * np.stack([-sn * bend, c * bend, np.zeros_like(theta)], axis=-1)
        d_theta = np.where(small[..., None], series_theta, d_theta)
        d_phi = np.where(small[..., None], series_phi, d_phi)

    return np.stack([d_theta, d_phi], axis=-1)


def measurement(theta, phi) -> np.ndarray:
    """
    Roll/pitch seen by a tip-mounted IMU, broadcasting over the angles.

    gamma = asin(-cos(phi) sin(theta)); beta is the quadrant-aware
    atan2(sin(phi) sin(theta), cos(theta)), equal to atan(sin(phi) tan(theta))
    for |theta| < pi/2 and continuous through theta = pi/2.

    Returns:
        Array of shape ``broadcast(theta, phi).shape + (2,)`` with (gamma, beta)
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sin_t = np.sin(theta)
    gamma = np.arcsin(np.clip(-np.cos(phi) * sin_t, -1.0, 1.0))
    beta = np.arctan2(np.sin(phi) * sin_t, np.cos(theta))
    return np.stack(np.broadcast_arrays(gamma, beta), axis=-1)


def measurement_jacobian(theta, phi, floor: float = 1e-12) -> np.ndarray:
    """
    Analytic derivative of ``measurement`` with respect to (theta, phi).

    Args:
        theta: Bend angle(s)
        phi: Bend-plane angle(s)
        floor: Lower clamp for the denominators at the gimbal configuration

    Returns:
        Array of shape ``broadcast(theta, phi).shape + (2, 2)``
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)

    root = np.sqrt(np.maximum(1.0 - (cp * st) ** 2, floor**2))
    dgamma_dtheta = -cp * ct / root
    dgamma_dphi = sp * st / root

    # atan2(A, B) with A = sp*st, B = ct and A^2 + B^2 = 1 - (cp*st)^2
    denom = np.maximum(ct**2 + (sp * st) ** 2, floor)
    dbeta_dtheta = (ct * sp * ct + sp * st * st) / denom
    dbeta_dphi = ct * cp * st / denom

    top = np.stack([dgamma_dtheta, dgamma_dphi], axis=-1)
    bottom = np.stack([dbeta_dtheta, dbeta_dphi], axis=-1)
    return np.stack([top, bottom], axis=-2)


def invert(gamma, beta) -> Tuple[np.ndarray, np.ndarray]:
    """
    Shape angles reproducing a roll/pitch pair, broadcasting over the inputs.

    Uses the branch theta in [0, pi]; for |beta| <= pi/2 this is theta in
    [0, pi/2]. Where theta vanishes phi is unobservable and 0 is returned.

    Returns:
        Tuple (theta, phi) of arrays
    """
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a = -np.sin(gamma) + 0.0
    cos_g = np.cos(gamma)
    lateral = cos_g * np.sin(beta)
    radial = np.hypot(a, lateral)
    theta = np.arctan2(radial, cos_g * np.cos(beta))
    phi = np.where(radial > 1e-15, np.arctan2(lateral, a), 0.0)
    return theta, phi


def forward_position(shape: ShapeParams) -> np.ndarray:
    """
    Tip position for a constant-curvature shape.

    Args:
        shape: Bend angle, bend-plane angle and arc length

    Returns:
        3-vector (x, y, z) in the units of ``shape.s``

    Raises:
        InvalidArgumentError: On non-finite angles or non-positive length
    """
    _require_finite(shape.theta, shape.phi)
    _require_length(shape.s)
    return tip_position(shape.theta, shape.phi, shape.s)


def rotation_from_shape(shape: ShapeParams) -> Rotation3:
    """
    Base-to-tip rotation of the arc.

    Entry (2,2) is sin^2(phi)(cos(theta)-1)+1, which keeps the matrix
    orthonormal; the other entries follow the usual constant-curvature form.
    """
    _require_finite(shape.theta, shape.phi)
    st, ct = np.sin(shape.theta), np.cos(shape.theta)
    sp, cp = np.sin(shape.phi), np.cos(shape.phi)
    vers = ct - 1.0
    return np.array([
        [cp**2 * vers + 1.0, sp * cp * vers, -cp * st],
        [sp * cp * vers, sp**2 * vers + 1.0, -sp * st],
        [cp * st, sp * st, ct],
    ])


def measurement_map(shape: ShapeParams) -> Measurement:
    """
    Expected IMU roll/pitch for a shape (the h(x) of both estimators).

    Raises:
        InvalidArgumentError: On non-finite angles
    """
    _require_finite(shape.theta, shape.phi)
    gamma, beta = measurement(shape.theta, shape.phi)
    return Measurement(gamma=float(gamma), beta=float(beta))


def invert_measurement(z: Measurement, extended: bool = False) -> ShapeParams:
    """
    Recover (theta, phi) from a roll/pitch pair.

    Args:
        z: Measurement in radians
        extended: Accept |beta| up to pi (theta up to pi) instead of the
            principal range |beta| <= pi/2

    Returns:
        ShapeParams with unit arc length; callers supply their own ``s``

    Raises:
        InvalidArgumentError: On non-finite input or angles outside the accepted ranges
    """
    _require_finite(z.gamma, z.beta)
    beta_limit = np.pi if extended else np.pi / 2
    if abs(z.gamma) > np.pi / 2 or abs(z.beta) > beta_limit:
        raise InvalidArgumentError(
            f"measurement ({z.gamma}, {z.beta}) outside |gamma| <= pi/2, |beta| <= {beta_limit:.6f}"
        )
    theta, phi = invert(z.gamma, z.beta)
    return ShapeParams(theta=float(theta), phi=float(phi))


def position_jacobian(shape: ShapeParams) -> np.ndarray:
    """
    Numerical Jacobian of the tip position with respect to (theta, phi).

    Returns:
        3x2 matrix, meters per radian
    """
    _require_finite(shape.theta, shape.phi)
    _require_length(shape.s)
    return shape_jacobian(shape.theta, shape.phi, shape.s)


def rpy_rotation(gamma: float, beta: float, alpha: float) -> Rotation3:
    """Yaw-pitch-roll rotation Rz(alpha) Ry(beta) Rx(gamma)."""
    _require_finite(gamma, beta, alpha)
    return Rotation.from_euler("ZYX", [alpha, beta, gamma]).as_matrix()
