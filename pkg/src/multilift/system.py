"""Parameter, state and gain containers plus flat-vector packing.

State layout for the integrator (ambient coordinates, length ``15 + 15 n``):

====================  ================  =========================
slice                 shape             meaning
====================  ================  =========================
``y[0:3]``            (3,)              payload position ``x0``
``y[3:6]``            (3,)              payload velocity ``v0``
``y[6:15]``           (3, 3) row-major  payload rotation ``R0``
``y[15:18]``          (3,)              payload body rate ``W0``
per link ``i``:
``y[18+9i : +3]``     (3,)              link direction ``q_i``
``y[.. : +3]``        (3,)              link angular rate ``w_i``
``y[.. : +3]``        (3,)              reserved interleave: see below
====================  ================  =========================

Concretely the per-agent block order is ``q`` for all agents, then ``w`` for
all agents, then row-major ``R_i`` and ``W_i`` for all agents; see
:func:`pack_state`.
"""

from dataclasses import dataclass, replace

import numpy as np

from multilift.errors import ValidationError
from multilift.geom import rotation_defect

__all__ = [
    "SystemParams",
    "SystemState",
    "GainSet",
    "pack_state",
    "unpack_state",
    "state_size",
    "box_inertia",
]

_E3 = np.array([0.0, 0.0, 1.0])


def _as_matrix(name, value, shape):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def _readonly(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def box_inertia(mass, length, width, height):
    """Inertia matrix of a uniform solid cuboid about its center of mass."""
    if min(mass, length, width, height) <= 0.0:
        raise ValidationError("box mass and dimensions must be positive")
    c = mass / 12.0
    return np.diag(
        [
            c * (width**2 + height**2),
            c * (length**2 + height**2),
            c * (length**2 + width**2),
        ]
    )


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the payload + n quadrotors + rigid links system.

    ``rho[i]`` is the attachment point of link ``i`` in the payload body
    frame; ``l[i]`` the link length; quadrotor ``i`` sits at
    ``x0 + R0 rho_i - l_i q_i``.
    """

    m0: float
    J0: np.ndarray
    m: np.ndarray
    J: np.ndarray
    l: np.ndarray
    rho: np.ndarray
    g: float = 9.81

    def __post_init__(self):
        n = np.asarray(self.m).shape[0] if np.ndim(self.m) else 0
        if n < 1:
            raise ValidationError("need at least one quadrotor")
        object.__setattr__(self, "m0", float(self.m0))
        object.__setattr__(self, "g", float(self.g))
        object.__setattr__(self, "J0", _readonly(_as_matrix("J0", self.J0, (3, 3))))
        object.__setattr__(self, "m", _readonly(np.asarray(self.m, dtype=float)))
        object.__setattr__(self, "J", _readonly(_as_matrix("J", self.J, (n, 3, 3))))
        object.__setattr__(self, "l", _readonly(_as_matrix("l", self.l, (n,))))
        object.__setattr__(self, "rho", _readonly(_as_matrix("rho", self.rho, (n, 3))))
        if self.m0 <= 0.0 or np.any(self.m <= 0.0):
            raise ValidationError("all masses must be positive")
        if np.any(self.l <= 0.0):
            raise ValidationError("all link lengths must be positive")
        for name, mat in [("J0", self.J0)] + [(f"J[{i}]", self.J[i]) for i in range(n)]:
            if np.max(np.abs(mat - mat.T)) > 1e-12:
                raise ValidationError(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(mat)) <= 0.0:
                raise ValidationError(f"{name} must be positive definite")
        if np.min(np.linalg.eigvalsh(self.J0_bar)) <= 0.0:
            raise ValidationError("effective payload inertia J0_bar must be positive definite")

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def m_total(self) -> float:
        """Total transported mass ``m0 + sum(m_i)``."""
        return self.m0 + float(np.sum(self.m))

    @property
    def J0_bar(self) -> np.ndarray:
        """Effective payload inertia ``J0 - sum_i m_i hat(rho_i)^2``."""
        out = np.array(self.J0)
        for i in range(self.n):
            r = self.rho[i]
            H = np.array(
                [
                    [0.0, -r[2], r[1]],
                    [r[2], 0.0, -r[0]],
                    [-r[1], r[0], 0.0],
                ]
            )
            out -= self.m[i] * (H @ H)
        return out


@dataclass
class SystemState:
    """Full configuration + velocity of the coupled system at one instant."""

    x0: np.ndarray
    v0: np.ndarray
    R0: np.ndarray
    W0: np.ndarray
    q: np.ndarray
    w: np.ndarray
    R: np.ndarray
    W: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.q, dtype=float).reshape(-1, 3).shape[0]
        self.x0 = np.asarray(self.x0, dtype=float).reshape(3).copy()
        self.v0 = np.asarray(self.v0, dtype=float).reshape(3).copy()
        self.R0 = np.asarray(self.R0, dtype=float).reshape(3, 3).copy()
        self.W0 = np.asarray(self.W0, dtype=float).reshape(3).copy()
        self.q = np.asarray(self.q, dtype=float).reshape(n, 3).copy()
        self.w = np.asarray(self.w, dtype=float).reshape(n, 3).copy()
        self.R = np.asarray(self.R, dtype=float).reshape(n, 3, 3).copy()
        self.W = np.asarray(self.W, dtype=float).reshape(n, 3).copy()
        self.t = float(self.t)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def copy(self) -> "SystemState":
        return SystemState(self.x0, self.v0, self.R0, self.W0, self.q, self.w, self.R, self.W, self.t)

    def quadrotor_positions(self, params: SystemParams) -> np.ndarray:
        """Inertial positions ``x0 + R0 rho_i - l_i q_i`` of all quadrotors."""
        return self.x0 + self.q0_attach(params) - self.l_times_q(params)

    # small helpers kept separate so the formula reads like the model
    def q0_attach(self, params: SystemParams) -> np.ndarray:
        return (self.R0 @ params.rho.T).T

    def l_times_q(self, params: SystemParams) -> np.ndarray:
        return params.l[:, None] * self.q

    @staticmethod
    def rest(params: SystemParams, x0=(0.0, 0.0, 0.0)) -> "SystemState":
        """All-zero-rate state: identity rotations, links pointing along +e3."""
        n = params.n
        return SystemState(
            x0=np.asarray(x0, dtype=float),
            v0=np.zeros(3),
            R0=np.eye(3),
            W0=np.zeros(3),
            q=np.tile(_E3, (n, 1)),
            w=np.zeros((n, 3)),
            R=np.tile(np.eye(3), (n, 1, 1)),
            W=np.zeros((n, 3)),
        )

    def validate(self, params: SystemParams, tol_rot=1e-6, tol_unit=1e-8, tol_perp=1e-8):
        """Check manifold membership; raises :class:`ValidationError`."""
        if self.n != params.n:
            raise ValidationError(f"state has {self.n} links, params expect {params.n}")
        if not np.all(np.isfinite(pack_state(self))):
            raise ValidationError("state contains non-finite entries")
        if rotation_defect(self.R0) > tol_rot:
            raise ValidationError("R0 is not orthonormal within tolerance")
        if abs(np.linalg.det(self.R0) - 1.0) > 10 * tol_rot:
            raise ValidationError("R0 must have determinant +1")
        for i in range(self.n):
            if rotation_defect(self.R[i]) > tol_rot:
                raise ValidationError(f"R[{i}] is not orthonormal within tolerance")
            if abs(np.linalg.norm(self.q[i]) - 1.0) > tol_unit:
                raise ValidationError(f"q[{i}] is not a unit vector within tolerance")
            if abs(float(np.dot(self.q[i], self.w[i]))) > tol_perp:
                raise ValidationError(f"w[{i}] is not orthogonal to q[{i}] within tolerance")
        return self


@dataclass(frozen=True)
class GainSet:
    """Controller gains; outer loop (payload + links) and attitude inner loop.

    ``eps`` is the inner-loop time-scale parameter: the attitude loop runs
    with effective gains ``k_R / eps^2`` and ``k_W / eps``.
    """

    k_x0: float = 8.0
    k_v0: float = 4.0
    k_R0: float = 20.0
    k_W0: float = 4.0
    k_q: float = 40.0
    k_w: float = 8.0
    k_R: float = 1.0
    k_W: float = 0.5
    eps: float = 0.1

    def __post_init__(self):
        for name in ("k_x0", "k_v0", "k_R0", "k_W0", "k_q", "k_w", "k_R", "k_W"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if val < 0.0:
                raise ValidationError(f"gain {name} must be nonnegative")
        object.__setattr__(self, "eps", float(self.eps))
        if not 0.0 < self.eps <= 1.0:
            raise ValidationError("eps must lie in (0, 1]")

    def with_updates(self, **kwargs) -> "GainSet":
        return replace(self, **kwargs)


def state_size(n: int) -> int:
    return 18 + 18 * n


def pack_state(state: SystemState) -> np.ndarray:
    """Flatten to the integrator layout (see module docstring)."""
    n = state.n
    y = np.empty(state_size(n))
    y[0:3] = state.x0
    y[3:6] = state.v0
    y[6:15] = state.R0.reshape(9)
    y[15:18] = state.W0
    base = 18
    y[base : base + 3 * n] = state.q.reshape(-1)
    base += 3 * n
    y[base : base + 3 * n] = state.w.reshape(-1)
    base += 3 * n
    y[base : base + 9 * n] = state.R.reshape(-1)
    base += 9 * n
    y[base : base + 3 * n] = state.W.reshape(-1)
    return y


def unpack_state(y: np.ndarray, n: int, t: float = 0.0) -> SystemState:
    """Inverse of :func:`pack_state`."""
    y = np.asarray(y, dtype=float)
    if y.shape != (state_size(n),):
        raise ValidationError(f"flat state must have shape ({state_size(n)},), got {y.shape}")
    base = 18
    q = y[base : base + 3 * n].reshape(n, 3)
    base += 3 * n
    w = y[base : base + 3 * n].reshape(n, 3)
    base += 3 * n
    R = y[base : base + 9 * n].reshape(n, 3, 3)
    base += 9 * n
    W = y[base : base + 3 * n].reshape(n, 3)
    return SystemState(
        x0=y[0:3],
        v0=y[3:6],
        R0=y[6:15].reshape(3, 3),
        W0=y[15:18],
        q=q,
        w=w,
        R=R,
        W=W,
        t=t,
    )
