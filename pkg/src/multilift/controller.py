"""Payload outer loop: desired wrench, tension allocation, link tracking.

The controller treats each quadrotor as a force source (ideal-force model).
Pipeline per tick:

1. payload pose errors -> desired wrench ``(F_d, M_d)``;
2. minimum-norm allocation of the wrench into per-link desired tensions
   ``mu_id`` (the spare degrees of freedom minimize the total squared
   tension);
3. desired link directions ``q_id = -mu_id/|mu_id|`` with finite-difference
   rates;
4. per-link parallel/normal force decomposition producing the ideal force
   ``u_i`` for each quadrotor.

The attitude inner loop (:mod:`multilift.attitude`) converts ``u_i`` into
thrust/moment commands for the full model.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from multilift.dynamics import ControlInput
from multilift.errors import DegenerateTensionError, RankDeficientError
from multilift.geom import hat, link_error
from multilift.system import GainSet, SystemParams, SystemState

__all__ = [
    "PayloadErrors",
    "LinkSetpoints",
    "AllocationResult",
    "ControlTick",
    "LinkHistory",
    "build_P",
    "payload_errors",
    "desired_wrench",
    "allocate_min_norm",
    "link_attachment_accel",
    "link_setpoints",
    "control_parallel",
    "control_normal",
    "ideal_forces",
    "PayloadController",
]

logger = logging.getLogger("multilift.controller")

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class PayloadErrors:
    """Tracking errors of the payload pose at one instant."""

    e_x: np.ndarray
    e_v: np.ndarray
    e_R: np.ndarray
    e_W: np.ndarray
    psi_R: float


@dataclass
class LinkSetpoints:
    """Desired link directions and rates for all agents at one tick."""

    q_d: np.ndarray
    dq_d: np.ndarray
    w_d: np.ndarray
    dw_d: np.ndarray
    held: np.ndarray  # bool per agent: degenerate tension, value held


@dataclass
class AllocationResult:
    """Everything the allocation/link stage produced for one tick."""

    F_d: np.ndarray
    M_d: np.ndarray
    mu_d: np.ndarray
    mu: np.ndarray
    q_d: np.ndarray
    w_d: np.ndarray
    dw_d: np.ndarray
    a: np.ndarray
    held: np.ndarray


@dataclass
class ControlTick:
    """Output of one controller evaluation."""

    control: ControlInput
    u_ideal: np.ndarray
    alloc: AllocationResult
    errors: PayloadErrors
    R_c: Optional[np.ndarray] = None  # per-agent attitude setpoints (full model)


class LinkHistory:
    """Finite-difference memory for the link setpoint rates.

    Keeps the last two emitted ``(q_d, w_d)`` samples per agent plus the tick
    counter; the first two ticks emit zero rates by policy.
    """

    def __init__(self, n: int):
        self.n = n
        self.q_hist: deque = deque(maxlen=2)
        self.w_hist: deque = deque(maxlen=2)
        self.tick = 0
        self.last_q: Optional[np.ndarray] = None

    def reset(self):
        self.q_hist.clear()
        self.w_hist.clear()
        self.tick = 0
        self.last_q = None


def build_P(rho) -> tuple:
    """Wrench map ``[I ... I; hat(rho_1) ... hat(rho_n)]`` and its rank."""
    rho = np.asarray(rho, dtype=float).reshape(-1, 3)
    n = rho.shape[0]
    P = np.zeros((6, 3 * n))
    for i in range(n):
        P[0:3, 3 * i : 3 * i + 3] = np.eye(3)
        P[3:6, 3 * i : 3 * i + 3] = hat(rho[i])
    s = np.linalg.svd(P, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0])) if s[0] > 0.0 else 0
    return P, rank


def payload_errors(state: SystemState, command, t: float) -> PayloadErrors:
    """Position/velocity/attitude/rate errors of the payload vs the command."""
    sample = command(t)
    A = sample.R.T @ state.R0
    e_R = np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]]) / 2.0
    psi_R = (3.0 - np.trace(A)) / 2.0
    e_W = state.W0 - state.R0.T @ sample.R @ sample.W
    return PayloadErrors(
        e_x=state.x0 - sample.x,
        e_v=state.v0 - sample.v,
        e_R=e_R,
        e_W=e_W,
        psi_R=float(psi_R),
    )


def desired_wrench(errors: PayloadErrors, sample, params: SystemParams,
                   gains: GainSet, R0) -> tuple:
    """PD-plus-feedforward resultant force and moment for the payload."""
    F_d = params.m0 * (
        -gains.k_x0 * errors.e_x
        - gains.k_v0 * errors.e_v
        + sample.a
        - params.g * _E3
    )
    Q = np.asarray(R0).T @ sample.R
    W_d = Q @ sample.W
    M_d = (
        -gains.k_R0 * errors.e_R
        - gains.k_W0 * errors.e_W
        + np.cross(W_d, params.J0 @ W_d)
        + params.J0 @ (Q @ sample.dW)
    )
    return F_d, M_d


def allocate_min_norm(P, R0, F_d, M_d) -> np.ndarray:
    """Minimum-norm per-link desired tensions realizing the wrench exactly.

    Solves ``P [R0^T mu_1; ...] = [R0^T F_d; M_d]`` through the right
    pseudo-inverse.  Raises :class:`RankDeficientError` when the attachment
    geometry spans fewer than 6 wrench directions.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[1] // 3
    s = np.linalg.svd(P, compute_uv=False)
    if s[0] == 0.0 or np.sum(s > 1e-10 * s[0]) < 6:
        raise RankDeficientError(
            "attachment geometry cannot realize arbitrary wrenches (rank < 6); "
            "at least three non-collinear attachment points are required"
        )
    R0 = np.asarray(R0, dtype=float)
    wrench = np.concatenate([R0.T @ np.asarray(F_d, dtype=float), np.asarray(M_d, dtype=float)])
    y = P.T @ np.linalg.solve(P @ P.T, wrench)
    return (R0 @ y.reshape(n, 3).T).T


def link_attachment_accel(state: SystemState, mu, params: SystemParams) -> np.ndarray:
    """Gravity-relative acceleration of each attachment point under tensions ``mu``."""
    mu = np.asarray(mu, dtype=float).reshape(params.n, 3)
    R0 = state.R0
    total = mu.sum(axis=0)
    moment = np.zeros(3)
    for j in range(params.n):
        moment += np.cross(params.rho[j], R0.T @ mu[j])
    gyro = np.cross(state.W0, params.J0 @ state.W0)
    core = np.linalg.solve(params.J0, gyro - moment)
    a = np.empty((params.n, 3))
    for i in range(params.n):
        cent = R0 @ np.cross(state.W0, np.cross(state.W0, params.rho[i]))
        a[i] = total / params.m0 + cent + R0 @ np.cross(params.rho[i], core)
    return a


def link_setpoints(mu_d, history: LinkHistory, dt: float, mu_min: float = 1e-6) -> LinkSetpoints:
    """Desired link directions and finite-difference rates for one tick.

    ``q_d = -mu_d/|mu_d|`` per link.  Rates use a lagged central difference
    ``(x_k - x_{k-2}) / (2 dt)``: unlike a backward stencil it has zero gain
    at the tick-rate alternation frequency, which keeps the feedforward path
    from amplifying its own closed-loop response into an instability.  The
    stencils are staggered at startup so they never mix real samples with
    initialization zeros (which would inject a rate spike of order
    ``1/dt``): ``w_d`` stays zero for the first two ticks while the
    direction history fills, ``dw_d`` for the first four while the rate
    history fills.
    A link whose desired tension magnitude falls below ``mu_min`` holds its
    previous direction with zero rates (flagged and logged); if that happens
    on the very first tick there is nothing to hold and
    :class:`DegenerateTensionError` is raised.
    """
    mu_d = np.asarray(mu_d, dtype=float)
    n = mu_d.shape[0]
    norms = np.linalg.norm(mu_d, axis=1)
    held = norms < mu_min

    q_d = np.empty((n, 3))
    for i in range(n):
        if held[i]:
            if history.last_q is None:
                raise DegenerateTensionError(
                    f"desired tension for link {i} is {norms[i]:.3e} N at the first tick"
                )
            q_d[i] = history.last_q[i]
            logger.warning("link %d desired tension %.3e N below %.1e N; holding setpoint",
                           i, norms[i], mu_min)
        else:
            q_d[i] = -mu_d[i] / norms[i]

    if history.tick < 2:
        dq_d = np.zeros((n, 3))
        w_d = np.zeros((n, 3))
        dw_d = np.zeros((n, 3))
    else:
        q_m2 = history.q_hist[-2]
        dq_d = (q_d - q_m2) / (2.0 * dt)
        w_d = np.cross(q_d, dq_d)
        if history.tick < 4:
            dw_d = np.zeros((n, 3))
        else:
            w_m2 = history.w_hist[-2]
            dw_d = (w_d - w_m2) / (2.0 * dt)
        for i in range(n):
            if held[i]:
                dq_d[i] = 0.0
                w_d[i] = 0.0
                dw_d[i] = 0.0

    history.q_hist.append(q_d.copy())
    history.w_hist.append(w_d.copy())
    history.last_q = q_d.copy()
    history.tick += 1
    return LinkSetpoints(q_d=q_d, dq_d=dq_d, w_d=w_d, dw_d=dw_d, held=held)


def control_parallel(q, w, mu_i, a_i, m_i: float, l_i: float) -> np.ndarray:
    """Force component along the link: tension + centrifugal + feedforward."""
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    w2 = float(np.dot(w, w))
    return np.asarray(mu_i, dtype=float) + m_i * l_i * w2 * q + m_i * q * float(np.dot(q, a_i))


def control_normal(q, w, setpoint_q, setpoint_w, setpoint_dw, a_i,
                   gains: GainSet, m_i: float, l_i: float) -> np.ndarray:
    """Force component normal to the link, tracking the desired direction."""
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    e_q, e_w, _ = link_error(q, setpoint_q, w, setpoint_w)
    qdot = np.cross(w, q)
    braces = (
        -gains.k_q * e_q
        - gains.k_w * e_w
        - float(np.dot(q, setpoint_w)) * qdot
        - np.cross(q, np.cross(q, setpoint_dw))
    )
    return m_i * l_i * np.cross(q, braces) - m_i * np.cross(q, np.cross(q, np.asarray(a_i, dtype=float)))


def ideal_forces(params: SystemParams, state: SystemState, command, gains: GainSet,
                 history: LinkHistory, t: float, dt: float, P=None,
                 mu_min: float = 1e-6, use_desired_mu_in_accel: bool = False) -> tuple:
    """Full outer-loop pipeline; returns ``(u, AllocationResult, PayloadErrors)``."""
    if P is None:
        P, _ = build_P(params.rho)
    errors = payload_errors(state, command, t)
    sample = command(t)
    F_d, M_d = desired_wrench(errors, sample, params, gains, state.R0)
    mu_d = allocate_min_norm(P, state.R0, F_d, M_d)
    sp = link_setpoints(mu_d, history, dt, mu_min=mu_min)
    mu = (np.sum(state.q * mu_d, axis=1)[:, None]) * state.q
    a = link_attachment_accel(state, mu_d if use_desired_mu_in_accel else mu, params)
    u = np.empty((params.n, 3))
    for i in range(params.n):
        u_par = control_parallel(state.q[i], state.w[i], mu[i], a[i], params.m[i], params.l[i])
        u_perp = control_normal(state.q[i], state.w[i], sp.q_d[i], sp.w_d[i], sp.dw_d[i],
                                a[i], gains, params.m[i], params.l[i])
        u[i] = u_par + u_perp
    alloc = AllocationResult(F_d=F_d, M_d=M_d, mu_d=mu_d, mu=mu, q_d=sp.q_d,
                             w_d=sp.w_d, dw_d=sp.dw_d, a=a, held=sp.held)
    return u, alloc, errors


class PayloadController:
    """Stateful outer-loop controller (one instance per simulation).

    ``dt`` is the controller tick period (simulation dt times the control
    divisor).  The attachment geometry is rank-checked once at construction.
    """

    def __init__(self, params: SystemParams, gains: GainSet, command, dt: float,
                 mu_min: float = 1e-6, use_desired_mu_in_accel: bool = False):
        self.params = params
        self.gains = gains
        self.command = command
        self.dt = float(dt)
        self.mu_min = float(mu_min)
        self.use_desired_mu_in_accel = bool(use_desired_mu_in_accel)
        self.P, rank = build_P(params.rho)
        if rank < 6:
            raise RankDeficientError(
                f"attachment geometry has wrench rank {rank} < 6; "
                "cannot allocate arbitrary payload wrenches"
            )
        self.history = LinkHistory(params.n)

    def tick(self, state: SystemState, t: float) -> ControlTick:
        u, alloc, errors = ideal_forces(
            self.params, state, self.command, self.gains, self.history, t, self.dt,
            P=self.P, mu_min=self.mu_min,
            use_desired_mu_in_accel=self.use_desired_mu_in_accel,
        )
        return ControlTick(control=ControlInput.ideal(u), u_ideal=u, alloc=alloc, errors=errors)
