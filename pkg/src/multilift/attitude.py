"""Quadrotor attitude inner loop.

Each quadrotor can only produce thrust along its body ``-e3`` axis, so the
ideal force ``u_i`` from the outer loop is realized by tilting: the
commanded attitude ``R_c`` points the thrust axis along ``-u_i/|u_i|`` while
a heading reference ``b1`` fixes the remaining yaw freedom.  A high-gain
PD law (gains scaled by ``1/eps**2`` and ``1/eps``) tracks ``R_c``; as
``eps`` shrinks the realized force converges to ``u_i`` on a fast boundary
layer.

Setpoint rates come from discrete differencing: ``W_c`` by the rotation
log-map between consecutive setpoints, ``dW_c`` by a backward difference,
both zero-initialized.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from multilift.controller import ControlTick, PayloadController
from multilift.dynamics import ControlInput
from multilift.errors import CollinearHeadingError, DegenerateThrustError
from multilift.geom import log_so3
from multilift.system import GainSet, SystemParams, SystemState

__all__ = [
    "AttitudeSetpoint",
    "AttitudeHistory",
    "RotorCommand",
    "attitude_frame",
    "attitude_setpoint",
    "rotor_command",
    "realized_force",
    "AttitudeTracker",
    "FullModelController",
]

logger = logging.getLogger("multilift.attitude")

_E1 = np.array([1.0, 0.0, 0.0])


@dataclass
class AttitudeSetpoint:
    """Commanded attitude and rates for one quadrotor at one tick."""

    R_c: np.ndarray
    W_c: np.ndarray
    dW_c: np.ndarray


@dataclass
class RotorCommand:
    """Scalar thrust and body moment for one quadrotor."""

    f: float
    M: np.ndarray


class AttitudeHistory:
    """Per-agent memory for setpoint rate differencing."""

    def __init__(self):
        self.prev_R_c: Optional[np.ndarray] = None
        self.prev_W_c: Optional[np.ndarray] = None
        self.last_setpoint: Optional[AttitudeSetpoint] = None

    def reset(self):
        self.prev_R_c = None
        self.prev_W_c = None
        self.last_setpoint = None


def attitude_frame(u, b1, u_min: float = 1e-6) -> np.ndarray:
    """Rotation matrix whose third column is the unit thrust direction.

    Columns: heading projected normal to the thrust axis, its complement,
    and ``b3 = -u/|u|``.
    """
    u = np.asarray(u, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    u_norm = float(np.linalg.norm(u))
    if u_norm < u_min:
        raise DegenerateThrustError(
            f"ideal force magnitude {u_norm:.3e} N is below {u_min:.1e} N; "
            "thrust direction undefined"
        )
    b3 = -u / u_norm
    c = np.cross(b3, b1)
    c_norm = float(np.linalg.norm(c))
    if c_norm < 1e-6:
        raise CollinearHeadingError(
            "heading reference is collinear with the thrust axis; "
            "choose a different b1"
        )
    col2 = c / c_norm
    col1 = -np.cross(b3, c) / c_norm
    return np.column_stack([col1, col2, b3])


def attitude_setpoint(u, b1, history: AttitudeHistory, dt: float,
                      u_min: float = 1e-6) -> AttitudeSetpoint:
    """Attitude setpoint with finite-difference rates (mutates ``history``)."""
    R_c = attitude_frame(u, b1, u_min=u_min)
    if history.prev_R_c is None:
        W_c = np.zeros(3)
    else:
        W_c = log_so3(history.prev_R_c.T @ R_c) / dt
    if history.prev_W_c is None:
        dW_c = np.zeros(3)
    else:
        dW_c = (W_c - history.prev_W_c) / dt
    history.prev_R_c = R_c.copy()
    history.prev_W_c = W_c.copy()
    sp = AttitudeSetpoint(R_c=R_c, W_c=W_c, dW_c=dW_c)
    history.last_setpoint = sp
    return sp


def rotor_command(R, W, setpoint: AttitudeSetpoint, gains: GainSet, J, u) -> RotorCommand:
    """Thrust along the current body axis plus the attitude-tracking moment."""
    R = np.asarray(R, dtype=float)
    W = np.asarray(W, dtype=float)
    J = np.asarray(J, dtype=float)
    u = np.asarray(u, dtype=float)
    f = -float(np.dot(u, R[:, 2]))
    A = setpoint.R_c.T @ R
    e_R = np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]]) / 2.0
    Q = R.T @ setpoint.R_c
    e_W = W - Q @ setpoint.W_c
    eps = gains.eps
    M = (
        -(gains.k_R / eps**2) * e_R
        - (gains.k_W / eps) * e_W
        + np.cross(W, J @ W)
        - J @ (np.cross(W, Q @ setpoint.W_c) - Q @ setpoint.dW_c)
    )
    return RotorCommand(f=f, M=M)


def realized_force(f: float, R) -> np.ndarray:
    """Inertial force actually produced by thrust ``f`` at attitude ``R``."""
    return -float(f) * np.asarray(R, dtype=float)[:, 2]


class AttitudeTracker:
    """Stateful per-agent inner loop.

    Degenerate thrust mid-flight holds the previous setpoint with zero rates
    (flagged and logged); on the very first tick there is nothing to hold and
    the error propagates.
    """

    def __init__(self, gains: GainSet, J, dt: float, b1=None, u_min: float = 1e-6):
        self.gains = gains
        self.J = np.asarray(J, dtype=float)
        self.dt = float(dt)
        self.b1 = _E1.copy() if b1 is None else np.asarray(b1, dtype=float) / np.linalg.norm(b1)
        self.u_min = float(u_min)
        self.history = AttitudeHistory()

    def tick(self, R, W, u) -> tuple:
        """Returns ``(RotorCommand, AttitudeSetpoint, held_flag)``."""
        held = False
        try:
            sp = attitude_setpoint(u, self.b1, self.history, self.dt, u_min=self.u_min)
        except DegenerateThrustError:
            if self.history.last_setpoint is None:
                raise
            prev = self.history.last_setpoint
            sp = AttitudeSetpoint(R_c=prev.R_c.copy(), W_c=np.zeros(3), dW_c=np.zeros(3))
            held = True
            logger.warning("thrust magnitude below %.1e N; holding attitude setpoint", self.u_min)
        cmd = rotor_command(R, W, sp, self.gains, self.J, u)
        return cmd, sp, held


class FullModelController:
    """Outer loop + per-agent inner loops producing rotor commands."""

    def __init__(self, params: SystemParams, gains: GainSet, command, dt: float,
                 headings: Optional[Sequence] = None, mu_min: float = 1e-6,
                 u_min: float = 1e-6, clamp_thrust: bool = False,
                 use_desired_mu_in_accel: bool = False):
        self.params = params
        self.gains = gains
        self.clamp_thrust = bool(clamp_thrust)
        self.outer = PayloadController(
            params, gains, command, dt, mu_min=mu_min,
            use_desired_mu_in_accel=use_desired_mu_in_accel,
        )
        if headings is None:
            headings = [None] * params.n
        self.trackers = [
            AttitudeTracker(gains, params.J[i], dt, b1=headings[i], u_min=u_min)
            for i in range(params.n)
        ]

    def tick(self, state: SystemState, t: float) -> ControlTick:
        outer_tick = self.outer.tick(state, t)
        u = outer_tick.u_ideal
        n = self.params.n
        f = np.empty(n)
        M = np.empty((n, 3))
        R_c = np.empty((n, 3, 3))
        for i in range(n):
            cmd, sp, _ = self.trackers[i].tick(state.R[i], state.W[i], u[i])
            f[i] = cmd.f
            M[i] = cmd.M
            R_c[i] = sp.R_c
        if self.clamp_thrust:
            f = np.maximum(f, 0.0)
        return ControlTick(
            control=ControlInput.rotor(f, M),
            u_ideal=u,
            alloc=outer_tick.alloc,
            errors=outer_tick.errors,
            R_c=R_c,
        )
