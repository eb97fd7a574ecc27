"""
Continuum-robot Moving Horizon Estimation

Constrained sliding-window state estimation for one-section
constant-curvature continuum robots from tip-mounted IMU roll/pitch
readings, with an extended Kalman filter baseline and experiment tooling.
"""

__version__ = "0.1.0"
