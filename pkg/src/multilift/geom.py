"""Primitives on SO(3) and the unit sphere.

Conventions: rotation matrices map body coordinates to inertial coordinates;
``W`` denotes a body-frame angular velocity so that ``Rdot = R @ hat(W)``.
Link directions ``q`` are unit vectors with rates ``w`` satisfying
``qdot = w x q`` and ``w . q = 0``.
"""

import numpy as np

from multilift.errors import DegenerateRotationError, DimensionMismatchError, NotSkewError

__all__ = [
    "hat",
    "vee",
    "exp_so3",
    "log_so3",
    "attitude_error",
    "angular_velocity_error",
    "link_error",
    "reproject_rotation",
    "reproject_unit",
    "project_perp",
    "rotation_defect",
    "unit_vector_derivatives",
]


def hat(v):
    """Skew-symmetric matrix of a 3-vector: ``hat(v) @ u == cross(v, u)``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise DimensionMismatchError(f"hat expects shape (3,), got {v.shape}")
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(M, tol=1e-8):
    """Inverse of :func:`hat`.

    Raises :class:`NotSkewError` if ``M + M.T`` deviates from zero by more
    than ``tol`` in max-abs norm.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise DimensionMismatchError(f"vee expects shape (3, 3), got {M.shape}")
    defect = np.max(np.abs(M + M.T))
    if defect > tol:
        raise NotSkewError(f"matrix is not skew-symmetric: |M + M.T| = {defect:.3e} > {tol:.3e}")
    return np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]]) / 2.0


def exp_so3(v):
    """Rodrigues formula: matrix exponential of ``hat(v)``."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v)
    K = hat(v)
    if theta < 1e-12:
        # second-order series keeps the result orthonormal to machine precision
        return np.eye(3) + K + 0.5 * (K @ K)
    return np.eye(3) + (np.sin(theta) / theta) * K + ((1.0 - np.cos(theta)) / theta**2) * (K @ K)


def log_so3(R):
    """Rotation vector ``v`` with ``exp_so3(v) == R``; angle in [0, pi].

    Robust for small angles; near pi the axis is recovered from the diagonal.
    """
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    cos_theta = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    skew = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    if theta < 1e-8:
        return skew  # sin(theta)/theta ~ 1 to machine precision here
    if theta > np.pi - 1e-6:
        # axis from the symmetric part: R ~ 2 n n^T - I at theta = pi
        d = (np.diag(R) + 1.0) / 2.0
        axis = np.sqrt(np.maximum(d, 0.0))
        k = int(np.argmax(axis))
        if axis[k] > 0.0:
            axis[(k + 1) % 3] = R[(k + 1) % 3, k] / (2.0 * axis[k])
            axis[(k + 2) % 3] = R[(k + 2) % 3, k] / (2.0 * axis[k])
        axis /= np.linalg.norm(axis)
        if np.dot(axis, skew) < 0.0:
            axis = -axis
        return theta * axis
    return theta / np.sin(theta) * skew


def attitude_error(R, R_d):
    """Rotation tracking error on SO(3).

    Returns ``(e_R, psi)`` with ``e_R = vee(R_d.T R - R.T R_d) / 2`` and the
    configuration error ``psi = tr(I - R_d.T R) / 2`` in [0, 2].  The identity
    ``|e_R|^2 == psi (2 - psi)`` holds exactly.
    """
    R = np.asarray(R, dtype=float)
    R_d = np.asarray(R_d, dtype=float)
    A = R_d.T @ R
    e_R = np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]]) / 2.0
    psi = (3.0 - np.trace(A)) / 2.0
    return e_R, psi


def angular_velocity_error(R, R_d, W, W_d):
    """Body-frame angular velocity error ``e_W = W - R.T R_d W_d``."""
    return np.asarray(W, dtype=float) - np.asarray(R).T @ np.asarray(R_d) @ np.asarray(W_d, dtype=float)


def link_error(q, q_d, w, w_d):
    """Direction tracking error on the unit sphere.

    Returns ``(e_q, e_w, psi_q)`` with ``e_q = q_d x q``,
    ``e_w = w + hat(q)^2 w_d`` and ``psi_q = 1 - q_d . q`` in [0, 2].
    """
    q = np.asarray(q, dtype=float)
    q_d = np.asarray(q_d, dtype=float)
    w = np.asarray(w, dtype=float)
    w_d = np.asarray(w_d, dtype=float)
    e_q = np.cross(q_d, q)
    e_w = w + np.cross(q, np.cross(q, w_d))
    psi_q = 1.0 - float(np.dot(q_d, q))
    return e_q, e_w, psi_q


def reproject_rotation(R, tol=1e-6):
    """Closest rotation to ``R`` (polar factor with determinant +1).

    Raises :class:`DegenerateRotationError` when ``R`` is too close to
    singular for the projection to be meaningful.
    """
    R = np.asarray(R, dtype=float)
    U, s, Vt = np.linalg.svd(R)
    if s[-1] < tol:
        raise DegenerateRotationError(f"singular values {s} too small for reprojection")
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(U @ Vt))
    if D[2, 2] == 0.0:  # pragma: no cover - excluded by the singular-value gate
        raise DegenerateRotationError("projection produced a zero determinant")
    out = U @ D @ Vt
    if np.linalg.det(out) < 0.0:
        raise DegenerateRotationError("projection produced a reflection")
    return out


def reproject_unit(q, tol=1e-8):
    """Normalize ``q`` to the unit sphere; degenerate below ``tol``."""
    q = np.asarray(q, dtype=float)
    nrm = np.linalg.norm(q)
    if nrm < tol:
        raise DegenerateRotationError(f"cannot normalize near-zero vector (norm {nrm:.3e})")
    return q / nrm


def project_perp(w, q):
    """Component of ``w`` orthogonal to the unit vector ``q``."""
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    return w - q * float(np.dot(q, w))


def rotation_defect(R):
    """Max-abs deviation of ``R`` from orthonormality, ``|R.T R - I|_max``."""
    R = np.asarray(R, dtype=float)
    return float(np.max(np.abs(R.T @ R - np.eye(3))))


def unit_vector_derivatives(w, w_dot, w_ddot):
    """First and second time derivatives of ``u = w / |w|``.

    Given a curve ``w(t)`` with derivatives ``w_dot``, ``w_ddot`` and
    ``|w| > 0``, returns ``(u, u_dot, u_ddot)``.  Used to differentiate
    frame columns built from normalized vectors in closed form.
    """
    w = np.asarray(w, dtype=float)
    w_dot = np.asarray(w_dot, dtype=float)
    w_ddot = np.asarray(w_ddot, dtype=float)
    n = np.linalg.norm(w)
    if n < 1e-12:
        raise DegenerateRotationError("cannot differentiate the direction of a zero vector")
    u = w / n
    n_dot = float(np.dot(u, w_dot))
    u_dot = (w_dot - u * n_dot) / n
    n_ddot = float(np.dot(u_dot, w_dot) + np.dot(u, w_ddot))
    u_ddot = (w_ddot - u_dot * 2.0 * n_dot - u * n_ddot) / n
    return u, u_dot, u_ddot
