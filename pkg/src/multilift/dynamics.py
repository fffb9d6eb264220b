"""Equations of motion of the payload + links + quadrotors assembly.

Two algebraically equivalent formulations are exposed:

- :func:`assemble_matrix_form` / :func:`solve_accelerations`: the full
  symmetric mass matrix over ``(xdd0, Wdot0, wdot_1..n)``;
- :func:`accel_eliminated`: the reduced 6x6 payload system with the link
  accelerations eliminated and recovered afterwards.

Their agreement on random states is the central correctness oracle of the
whole package.  Gravity points along ``+e3`` (so altitude is ``-x0[2]``).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from multilift import kernels
from multilift.errors import NonFiniteError, SingularMassError, ValidationError
from multilift.system import SystemParams, SystemState, pack_state, unpack_state

__all__ = [
    "ControlInput",
    "Accelerations",
    "assemble_matrix_form",
    "solve_accelerations",
    "accel_eliminated",
    "quadrotor_attitude_accel",
    "step",
    "total_energy",
    "total_linear_momentum",
    "quadrotor_positions",
]

_COND_LIMIT = 1e12


@dataclass
class ControlInput:
    """Held actuation for one integrator step.

    Exactly one of two modes:

    - ideal-force mode: ``u`` is the (n, 3) inertial force applied at each
      quadrotor (the attitude loop is bypassed; ``M`` optional, default 0);
    - rotor mode: ``f`` (n,) thrust magnitudes along each quadrotor's
      ``-R_i e3`` axis plus body moments ``M`` (n, 3).
    """

    u: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    M: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.u is not None and self.f is not None:
            raise ValidationError("give either ideal forces u or thrusts f, not both")
        if self.u is not None:
            self.u = np.asarray(self.u, dtype=float).reshape(-1, 3).copy()
        if self.f is not None:
            self.f = np.asarray(self.f, dtype=float).reshape(-1).copy()
        if self.M is not None:
            self.M = np.asarray(self.M, dtype=float).reshape(-1, 3).copy()
        for arr in (self.u, self.f, self.M):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValidationError("control input contains non-finite entries")

    @property
    def rotor_mode(self) -> bool:
        return self.f is not None

    @staticmethod
    def zero(n: int) -> "ControlInput":
        return ControlInput(u=np.zeros((n, 3)))

    @staticmethod
    def ideal(u) -> "ControlInput":
        return ControlInput(u=u)

    @staticmethod
    def rotor(f, M) -> "ControlInput":
        return ControlInput(f=f, M=M)

    def arrays(self, n: int):
        """(u, f, M, rotor_mode) with zero placeholders, for the kernels."""
        u = np.zeros((n, 3)) if self.u is None else self.u
        f = np.zeros(n) if self.f is None else self.f
        M = np.zeros((n, 3)) if self.M is None else self.M
        if u.shape[0] != n or f.shape[0] != n or M.shape[0] != n:
            raise ValidationError(f"control input sized for {u.shape[0]} agents, expected {n}")
        return u, f, M, self.rotor_mode

    def forces(self, state: SystemState) -> np.ndarray:
        """Resolved inertial force per agent at the given state."""
        if self.rotor_mode:
            return -self.f[:, None] * state.R[:, :, 2]
        return self.u.copy()


@dataclass
class Accelerations:
    """Second-order state derivatives at one instant."""

    xdd0: np.ndarray
    dW0: np.ndarray
    dw: np.ndarray
    dW: Optional[np.ndarray] = None


def _param_arrays(params: SystemParams):
    return params.m0, params.J0, params.m, params.J, params.l, params.rho, params.g


def assemble_matrix_form(params: SystemParams, state: SystemState, u) -> tuple:
    """Symmetric mass matrix and right-hand side over all accelerations."""
    u = np.asarray(u, dtype=float).reshape(params.n, 3)
    A, b = kernels.assemble_eom(
        params.m0, params.J0, params.m, params.l, params.rho, params.g,
        state.R0, state.W0, state.q, state.w, u,
    )
    return np.asarray(A), np.asarray(b)


def solve_accelerations(A, rhs, params: Optional[SystemParams] = None,
                        state: Optional[SystemState] = None,
                        M_rotor=None) -> Accelerations:
    """Solve the assembled system; optionally append quadrotor attitude accels.

    Raises :class:`SingularMassError` when the matrix condition number
    exceeds 1e12.  When ``params``/``state`` (and optionally per-agent
    moments ``M_rotor``) are supplied, the decoupled quadrotor angular
    accelerations are filled in as well.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = (rhs.shape[0] - 6) // 3
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularMassError(f"mass matrix condition number {cond:.3e} exceeds {_COND_LIMIT:.0e}")
    acc = np.linalg.solve(A, rhs)
    dW = None
    if params is not None and state is not None:
        M_rotor = np.zeros((params.n, 3)) if M_rotor is None else np.asarray(M_rotor, dtype=float)
        dW = np.vstack([
            quadrotor_attitude_accel(params.J[i], state.W[i], M_rotor[i])
            for i in range(params.n)
        ])
    return Accelerations(
        xdd0=acc[0:3].copy(),
        dW0=acc[3:6].copy(),
        dw=acc[6:].reshape(n, 3).copy(),
        dW=dW,
    )


def accel_eliminated(params: SystemParams, state: SystemState, u) -> Accelerations:
    """Accelerations via the reduced payload system (no full matrix solve)."""
    u = np.asarray(u, dtype=float).reshape(params.n, 3)
    try:
        xdd0, dW0, dw = kernels.eliminated_accel(
            params.m0, params.J0, params.m, params.l, params.rho, params.g,
            state.R0, state.W0, state.q, state.w, u,
        )
    except np.linalg.LinAlgError as exc:
        raise SingularMassError(str(exc)) from exc
    return Accelerations(xdd0=np.asarray(xdd0), dW0=np.asarray(dW0), dw=np.asarray(dw))


def quadrotor_attitude_accel(J, W, M) -> np.ndarray:
    """Rigid-body angular acceleration ``J^-1 (M - W x J W)``."""
    J = np.asarray(J, dtype=float)
    W = np.asarray(W, dtype=float)
    M = np.asarray(M, dtype=float)
    return np.linalg.solve(J, M - np.cross(W, J @ W))


def step(params: SystemParams, state: SystemState, control: ControlInput, dt: float) -> SystemState:
    """One RK4 step of ``dt`` seconds under held control, with reprojection.

    Raises :class:`NonFiniteError` if the propagated state left the finite
    range (the caller decides whether to abort or shrink the step).
    """
    if not 0.0 < dt <= 0.05:
        raise ValidationError(f"dt must lie in (0, 0.05], got {dt}")
    n = params.n
    u, f, M, rotor_mode = control.arrays(n)
    y = pack_state(state)
    m0, J0, m, J, l, rho, g = _param_arrays(params)
    y_next = kernels.rk4_step_flat(y, n, dt, m0, J0, m, J, l, rho, g, u, f, M, rotor_mode)
    y_next = np.asarray(y_next)
    if not np.all(np.isfinite(y_next)):
        raise NonFiniteError("state became non-finite during integration", t=state.t + dt)
    return unpack_state(y_next, n, t=state.t + dt)


def total_energy(params: SystemParams, state: SystemState) -> tuple:
    """Kinetic, potential and total mechanical energy ``(T, U, E)``."""
    m0, J0, m, J, l, rho, g = _param_arrays(params)
    T, U = kernels.energy_flat(pack_state(state), params.n, m0, J0, m, J, l, rho, g)
    return float(T), float(U), float(T + U)


def total_linear_momentum(params: SystemParams, state: SystemState) -> np.ndarray:
    """Momentum of payload plus quadrotors (links are massless)."""
    p = kernels.momentum_flat(pack_state(state), params.n, params.m0, params.m, params.l, params.rho)
    return np.asarray(p)


def quadrotor_positions(params: SystemParams, state: SystemState) -> np.ndarray:
    """Inertial position of each quadrotor."""
    return state.quadrotor_positions(params)
