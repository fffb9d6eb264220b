"""Payload trajectory commands.

A command is a callable ``t -> CommandSample`` bundling the desired payload
position (with exact derivatives up to acceleration), attitude, body
angular velocity, and body angular acceleration.  Position commands are
sums of sinusoids per axis plus an offset, so every derivative is closed
form.  Three attitude modes are supported:

- ``tangent``: first axis along the horizontal velocity direction, second
  completing a right-handed frame with the vertical; requires a horizontal
  (constant-altitude) path with nonvanishing speed.  Rates are exact.
- ``constant``: fixed rotation, zero rates.
- ``explicit``: ``R(t) = R_e expm(t * hat(W_e))``, constant body rate.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from multilift.errors import DegenerateCommandError
from multilift.geom import exp_so3, hat, rotation_defect, unit_vector_derivatives

__all__ = [
    "CommandSample",
    "SinusoidAxis",
    "PayloadCommand",
    "tangent_frame",
    "hover_command",
    "audit_command",
]

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class CommandSample:
    """Desired payload state at one instant."""

    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    R: np.ndarray
    W: np.ndarray
    dW: np.ndarray


@dataclass(frozen=True)
class SinusoidAxis:
    """``offset + sum_k amp_k * sin(omega_k * t + phase_k)`` on one axis."""

    offset: float = 0.0
    terms: tuple = ()  # tuple of (amp, omega, phase)

    def derivatives(self, t: float, order: int = 3) -> np.ndarray:
        """Value and first ``order`` derivatives at ``t``."""
        out = np.zeros(order + 1)
        out[0] = self.offset
        for amp, omega, phase in self.terms:
            for k in range(order + 1):
                out[k] += amp * omega**k * np.sin(omega * t + phase + k * np.pi / 2.0)
        return out


def tangent_frame(v, a, j) -> tuple:
    """Attitude frame aligned with the velocity direction, with exact rates.

    Columns: unit velocity, unit ``e3 x v``, and ``e3``.  Valid only when
    the path is horizontal (``v`` and ``a`` normal to ``e3``) and the speed
    never vanishes; otherwise the frame is not a rotation and
    :class:`DegenerateCommandError` is raised.
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    j = np.asarray(j, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed < 1e-6:
        raise DegenerateCommandError(
            f"commanded speed {speed:.3e} m/s is too small for a tangent frame"
        )
    if float(np.hypot(v[0], v[1])) < 1e-6:
        raise DegenerateCommandError(
            "commanded velocity has no horizontal component; tangent frame undefined"
        )
    b1, db1, ddb1 = unit_vector_derivatives(v, a, j)
    w = np.cross(_E3, v)
    b2, db2, ddb2 = unit_vector_derivatives(w, np.cross(_E3, a), np.cross(_E3, j))
    R = np.column_stack([b1, b2, _E3])
    defect = rotation_defect(R)
    if defect > 1e-8:
        raise DegenerateCommandError(
            f"tangent frame is not a rotation (defect {defect:.3e}); "
            "the commanded path must stay at constant altitude"
        )
    dR = np.column_stack([db1, db2, np.zeros(3)])
    ddR = np.column_stack([ddb1, ddb2, np.zeros(3)])
    S = R.T @ dR
    W = np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]]) / 2.0
    Sd = dR.T @ dR + R.T @ ddR
    dW = np.array([Sd[2, 1] - Sd[1, 2], Sd[0, 2] - Sd[2, 0], Sd[1, 0] - Sd[0, 1]]) / 2.0
    return R, W, dW


@dataclass
class PayloadCommand:
    """Callable payload command: position sinusoids + attitude mode."""

    axes: tuple  # three SinusoidAxis
    attitude_mode: str = "tangent"
    R_e: Optional[np.ndarray] = None        # constant / explicit base rotation
    W_e: Optional[np.ndarray] = None        # explicit constant body rate
    name: str = "command"

    def __post_init__(self):
        if len(self.axes) != 3:
            raise DegenerateCommandError("a position command needs exactly 3 axes")
        if self.attitude_mode not in ("tangent", "constant", "explicit"):
            raise DegenerateCommandError(
                f"unknown attitude mode {self.attitude_mode!r}; "
                "expected tangent, constant, or explicit"
            )
        if self.attitude_mode in ("constant", "explicit"):
            R = np.eye(3) if self.R_e is None else np.asarray(self.R_e, dtype=float)
            if rotation_defect(R) > 1e-8:
                raise DegenerateCommandError("attitude base matrix is not a rotation")
            object.__setattr__(self, "R_e", R)
        if self.attitude_mode == "explicit":
            W = np.zeros(3) if self.W_e is None else np.asarray(self.W_e, dtype=float)
            object.__setattr__(self, "W_e", W)

    def position_derivatives(self, t: float, order: int = 3) -> np.ndarray:
        """(order+1, 3) array: position and its time derivatives."""
        out = np.empty((order + 1, 3))
        for k in range(3):
            out[:, k] = self.axes[k].derivatives(t, order)
        return out

    def __call__(self, t: float) -> CommandSample:
        d = self.position_derivatives(t, order=3)
        if self.attitude_mode == "tangent":
            R, W, dW = tangent_frame(d[1], d[2], d[3])
        elif self.attitude_mode == "constant":
            R, W, dW = self.R_e, np.zeros(3), np.zeros(3)
        else:
            R = self.R_e @ exp_so3(t * self.W_e)
            W, dW = self.W_e, np.zeros(3)
        return CommandSample(x=d[0], v=d[1], a=d[2], R=R, W=W, dW=dW)


def hover_command(x, R=None) -> PayloadCommand:
    """Constant position and attitude (useful for regulation tests)."""
    x = np.asarray(x, dtype=float)
    axes = tuple(SinusoidAxis(offset=float(x[k])) for k in range(3))
    return PayloadCommand(axes=axes, attitude_mode="constant", R_e=R, name="hover")


def audit_command(command: PayloadCommand, times: Sequence, h: float = 1e-6) -> dict:
    """Central-finite-difference consistency check of a command's derivatives.

    Verifies ``v = dx/dt``, ``a = dv/dt``, and ``dR/dt = R hat(W)``,
    ``dW/dt`` against numerical differencing at the given times.  Returns the
    maximum defects; used at scenario load to reject inconsistent commands.
    """
    worst = {"v": 0.0, "a": 0.0, "R": 0.0, "dW": 0.0}
    for t in times:
        sm = command(t - h)
        s0 = command(t)
        sp = command(t + h)
        worst["v"] = max(worst["v"], float(np.max(np.abs((sp.x - sm.x) / (2 * h) - s0.v))))
        worst["a"] = max(worst["a"], float(np.max(np.abs((sp.v - sm.v) / (2 * h) - s0.a))))
        dR = (sp.R - sm.R) / (2 * h)
        worst["R"] = max(worst["R"], float(np.max(np.abs(dR - s0.R @ hat(s0.W)))))
        worst["dW"] = max(worst["dW"], float(np.max(np.abs((sp.W - sm.W) / (2 * h) - s0.dW))))
    return worst
