"""Numerical hot paths: EOM assembly, accelerations, RK4 stepping, energy.

Every function here is written in nopython-compatible numpy so the whole
module runs either jitted (default) or as plain Python when
``MULTILIFT_NUMBA=0`` — see :mod:`multilift.backend`.  Only flat ndarrays and
scalars cross these boundaries; the dataclass-facing wrappers live in
:mod:`multilift.dynamics`.

Flat state layout (length ``18 + 18 n``): ``x0, v0, R0 (row-major), W0``
then the stacked link directions ``q``, link rates ``w``, quadrotor
rotations ``R`` (row-major) and body rates ``W``.
"""

import numpy as np

from multilift.backend import maybe_njit

__all__ = [
    "assemble_eom",
    "eliminated_accel",
    "deriv_flat",
    "rk4_step_flat",
    "reproject_flat",
    "energy_flat",
    "momentum_flat",
]


@maybe_njit(cache=True)
def _hat(v):
    H = np.zeros((3, 3))
    H[0, 1] = -v[2]
    H[0, 2] = v[1]
    H[1, 0] = v[2]
    H[1, 2] = -v[0]
    H[2, 0] = -v[1]
    H[2, 1] = v[0]
    return H


@maybe_njit(cache=True)
def _outer(a, b):
    M = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            M[r, c] = a[r] * b[c]
    return M


@maybe_njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@maybe_njit(cache=True)
def assemble_eom(m0, J0, m, l, rho, g, R0, W0, q, w, u):
    """Full-coordinate mass matrix and right-hand side.

    Unknown ordering: payload acceleration (3), payload angular acceleration
    (3), then the link angular accelerations (3 each).  The matrix is
    symmetric; gravity points along +e3.
    """
    n = m.shape[0]
    N = 6 + 3 * n
    A = np.zeros((N, N))
    b = np.zeros(N)

    mT = m0
    for i in range(n):
        mT += m[i]

    Jbar = J0.copy()
    Srho = np.zeros((3, 3))
    for i in range(n):
        H = _hat(rho[i])
        Jbar -= m[i] * (H @ H)
        Srho += m[i] * H

    for r in range(3):
        A[r, r] = mT
    A[0:3, 3:6] = -(R0 @ Srho)
    A[3:6, 0:3] = Srho @ R0.T
    A[3:6, 3:6] = Jbar

    W0h = _hat(W0)
    W0h2 = W0h @ W0h

    b[0:3] = mT * g * np.array([0.0, 0.0, 1.0])
    b[3:6] = -(W0h @ (Jbar @ W0))

    ge3 = np.array([0.0, 0.0, g])
    for i in range(n):
        k = 6 + 3 * i
        qi = q[i].copy()
        qh = _hat(qi)
        rh = _hat(rho[i])
        rhRT = rh @ R0.T
        ml = m[i] * l[i]

        A[0:3, k : k + 3] = ml * qh
        A[3:6, k : k + 3] = ml * (rhRT @ qh)
        A[k : k + 3, 0:3] = -ml * qh
        A[k : k + 3, 3:6] = ml * (qh @ (R0 @ rh))
        for r in range(3):
            A[k + r, k + r] = ml * l[i]

        w2 = w[i, 0] * w[i, 0] + w[i, 1] * w[i, 1] + w[i, 2] * w[i, 2]
        cent = R0 @ (W0h2 @ rho[i].copy())
        ui = u[i].copy()
        b[0:3] += ui - m[i] * cent - ml * w2 * qi
        b[3:6] += rhRT @ (ui + m[i] * ge3) - ml * w2 * (rhRT @ qi)
        b[k : k + 3] = ml * (qh @ cent) - l[i] * (qh @ (ui + m[i] * ge3))
    return A, b


@maybe_njit(cache=True)
def eliminated_accel(m0, J0, m, l, rho, g, R0, W0, q, w, u):
    """Accelerations from the reduced 6x6 payload system plus link updates.

    Solves for (xdd0 - g e3, Wdot0) with the link accelerations eliminated,
    then recovers each link's angular acceleration.  Algebraically identical
    to solving :func:`assemble_eom`.
    """
    n = m.shape[0]
    e3 = np.array([0.0, 0.0, 1.0])
    ge3 = g * e3
    W0h = _hat(W0)
    W0h2 = W0h @ W0h

    Mq = np.zeros((3, 3))
    for r in range(3):
        Mq[r, r] = m0
    G = np.zeros((3, 3))
    K = J0.copy()
    c1 = np.zeros(3)
    c2 = np.zeros(3)

    for i in range(n):
        qi = q[i].copy()
        qq = _outer(qi, qi)
        rh = _hat(rho[i])
        R0rh = R0 @ rh
        Mq += m[i] * qq
        G += m[i] * (qq @ R0rh)
        K -= m[i] * (rh @ (R0.T @ (qq @ R0rh)))
        w2 = w[i, 0] * w[i, 0] + w[i, 1] * w[i, 1] + w[i, 2] * w[i, 2]
        cent = R0 @ (W0h2 @ rho[i].copy())
        si = qq @ u[i].copy() - m[i] * l[i] * w2 * qi - m[i] * (qq @ cent)
        c1 += si
        c2 += rh @ (R0.T @ si)

    A6 = np.zeros((6, 6))
    A6[0:3, 0:3] = Mq
    A6[0:3, 3:6] = -G
    A6[3:6, 0:3] = -G.T
    A6[3:6, 3:6] = K
    b6 = np.empty(6)
    b6[0:3] = c1
    b6[3:6] = c2 - W0h @ (J0 @ W0)
    sol = np.linalg.solve(A6, b6)

    xdd0 = sol[0:3] + ge3
    dW0 = sol[3:6].copy()
    dw = np.empty((n, 3))
    for i in range(n):
        qh = _hat(q[i].copy())
        rh = _hat(rho[i])
        cent = R0 @ (W0h2 @ rho[i].copy())
        rel = sol[0:3] - R0 @ (rh @ dW0) + cent
        dw[i] = (qh @ rel) / l[i] - (qh @ u[i].copy()) / (m[i] * l[i])
    return xdd0, dW0, dw


@maybe_njit(cache=True)
def deriv_flat(y, n, m0, J0, m, J, l, rho, g, u_in, f, M_in, rotor_mode):
    """Time derivative of the flat state under held control.

    ``rotor_mode`` selects the thrust model: each agent's force is
    ``-f_i R_i e3`` (recomputed from the instantaneous attitude) when true,
    or the given inertial force ``u_in[i]`` when false.  ``M_in`` drives the
    quadrotor attitude dynamics in either mode.
    """
    v0 = y[3:6]
    R0 = y[6:15].copy().reshape(3, 3)
    W0 = y[15:18].copy()
    base = 18
    q = y[base : base + 3 * n].copy().reshape(n, 3)
    base += 3 * n
    w = y[base : base + 3 * n].copy().reshape(n, 3)
    base += 3 * n
    R = y[base : base + 9 * n].copy().reshape(n, 3, 3)
    base += 9 * n
    W = y[base : base + 3 * n].copy().reshape(n, 3)

    u = np.empty((n, 3))
    for i in range(n):
        if rotor_mode:
            u[i, 0] = -f[i] * R[i, 0, 2]
            u[i, 1] = -f[i] * R[i, 1, 2]
            u[i, 2] = -f[i] * R[i, 2, 2]
        else:
            u[i] = u_in[i]

    A, b = assemble_eom(m0, J0, m, l, rho, g, R0, W0, q, w, u)
    acc = np.linalg.solve(A, b)

    dy = np.empty_like(y)
    dy[0:3] = v0
    dy[3:6] = acc[0:3]
    dy[6:15] = (R0 @ _hat(W0)).copy().reshape(9)
    dy[15:18] = acc[3:6]
    base = 18
    for i in range(n):
        dy[base + 3 * i : base + 3 * i + 3] = _cross(w[i].copy(), q[i].copy())
    base += 3 * n
    for i in range(n):
        dy[base + 3 * i : base + 3 * i + 3] = acc[6 + 3 * i : 9 + 3 * i]
    base += 3 * n
    for i in range(n):
        dy[base + 9 * i : base + 9 * i + 9] = (R[i].copy() @ _hat(W[i].copy())).copy().reshape(9)
    base += 9 * n
    for i in range(n):
        Wi = W[i].copy()
        JW = J[i].copy() @ Wi
        rhs = M_in[i].copy() - _cross(Wi, JW)
        dy[base + 3 * i : base + 3 * i + 3] = np.linalg.solve(J[i].copy(), rhs)
    return dy


@maybe_njit(cache=True)
def _polar_rotation(Rm):
    U, s, Vt = np.linalg.svd(Rm)
    P = U @ Vt
    if np.linalg.det(P) < 0.0:
        D = np.eye(3)
        D[2, 2] = -1.0
        P = (U @ D) @ Vt
    return P


@maybe_njit(cache=True)
def reproject_flat(y, n):
    """Project rotations/links/rates back onto their manifolds, in place."""
    R0 = y[6:15].copy().reshape(3, 3)
    y[6:15] = _polar_rotation(R0).copy().reshape(9)
    base = 18
    wbase = base + 3 * n
    for i in range(n):
        qi = y[base + 3 * i : base + 3 * i + 3].copy()
        nrm = np.sqrt(qi[0] * qi[0] + qi[1] * qi[1] + qi[2] * qi[2])
        qi /= nrm
        y[base + 3 * i : base + 3 * i + 3] = qi
        wi = y[wbase + 3 * i : wbase + 3 * i + 3].copy()
        dot = wi[0] * qi[0] + wi[1] * qi[1] + wi[2] * qi[2]
        y[wbase + 3 * i : wbase + 3 * i + 3] = wi - dot * qi
    rbase = base + 6 * n
    for i in range(n):
        Ri = y[rbase + 9 * i : rbase + 9 * i + 9].copy().reshape(3, 3)
        y[rbase + 9 * i : rbase + 9 * i + 9] = _polar_rotation(Ri).copy().reshape(9)


@maybe_njit(cache=True)
def rk4_step_flat(y, n, dt, m0, J0, m, J, l, rho, g, u_in, f, M_in, rotor_mode):
    """One classical RK4 step with held control, then manifold reprojection."""
    k1 = deriv_flat(y, n, m0, J0, m, J, l, rho, g, u_in, f, M_in, rotor_mode)
    k2 = deriv_flat(y + (0.5 * dt) * k1, n, m0, J0, m, J, l, rho, g, u_in, f, M_in, rotor_mode)
    k3 = deriv_flat(y + (0.5 * dt) * k2, n, m0, J0, m, J, l, rho, g, u_in, f, M_in, rotor_mode)
    k4 = deriv_flat(y + dt * k3, n, m0, J0, m, J, l, rho, g, u_in, f, M_in, rotor_mode)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    reproject_flat(out, n)
    return out


@maybe_njit(cache=True)
def energy_flat(y, n, m0, J0, m, J, l, rho, g):
    """Kinetic and potential energy of the assembly; returns ``(T, U)``."""
    v0 = y[3:6].copy()
    R0 = y[6:15].copy().reshape(3, 3)
    W0 = y[15:18].copy()
    base = 18
    q = y[base : base + 3 * n].copy().reshape(n, 3)
    base += 3 * n
    w = y[base : base + 3 * n].copy().reshape(n, 3)
    wqbase = base + 3 * n + 9 * n
    W = y[wqbase : wqbase + 3 * n].copy().reshape(n, 3)
    x0 = y[0:3].copy()

    T = 0.5 * m0 * (v0[0] * v0[0] + v0[1] * v0[1] + v0[2] * v0[2])
    T += 0.5 * np.dot(W0, J0 @ W0)
    U = -m0 * g * x0[2]
    for i in range(n):
        qdot = _cross(w[i].copy(), q[i].copy())
        xi_dot = v0 + R0 @ (_cross(W0, rho[i].copy())) - l[i] * qdot
        T += 0.5 * m[i] * np.dot(xi_dot, xi_dot)
        Wi = W[i].copy()
        T += 0.5 * np.dot(Wi, J[i].copy() @ Wi)
        xi = x0 + R0 @ rho[i].copy() - l[i] * q[i].copy()
        U -= m[i] * g * xi[2]
    return T, U


@maybe_njit(cache=True)
def momentum_flat(y, n, m0, m, l, rho):
    """Total linear momentum ``m0 v0 + sum_i m_i xdot_i``."""
    v0 = y[3:6].copy()
    R0 = y[6:15].copy().reshape(3, 3)
    W0 = y[15:18].copy()
    base = 18
    q = y[base : base + 3 * n].copy().reshape(n, 3)
    base += 3 * n
    w = y[base : base + 3 * n].copy().reshape(n, 3)

    p = m0 * v0
    for i in range(n):
        qdot = _cross(w[i].copy(), q[i].copy())
        p = p + m[i] * (v0 + R0 @ (_cross(W0, rho[i].copy())) - l[i] * qdot)
    return p
