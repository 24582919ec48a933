"""Axis-angle SU(2) algebra.

A lossless polarization transformation (single-qubit gate) is stored as a
rotation angle theta in [0, pi] together with a unit axis n; the matrix form
in the circular basis (|L>, |R>) is

    U = [[cos(t) - i sin(t) nz,  -i sin(t) (nx - i ny)],
         [-i sin(t) (nx + i ny), cos(t) + i sin(t) nz ]].

U and -U produce identical projective intensities, which shows up here as the
gauge pair (theta, n) ~ (pi - theta, -n). Internally this is the quaternion
sign ambiguity: q = (cos t, n sin t) and -q describe the same process. The
canonical representative puts the axis in the nz > 0 hemisphere (ties broken
lexicographically on the nz = 0 circle), with the degenerate theta in {0, pi}
gates mapped to (0, (0, 0, 1)).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMatrixError, InvalidParameterError

# theta closer than this to {0, pi} counts as a direction-degenerate gate
DEGENERATE_THETA_TOL = 1e-12

_Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass
class GateParams:
    """Axis-angle parameters of an SU(2) gate."""

    theta: float
    n: np.ndarray = field(default_factory=lambda: _Z_AXIS.copy())

    def __post_init__(self):
        self.theta = float(self.theta)
        self.n = np.asarray(self.n, dtype=float).reshape(3).copy()

    def as_vector(self):
        """Genes (theta, nx, ny, nz) as a flat length-4 array."""
        return np.concatenate(([self.theta], self.n))


def validate_params(p, tol=1e-12):
    """Raise InvalidParameterError unless p satisfies its invariants."""
    if not np.isfinite(p.theta) or not np.all(np.isfinite(p.n)):
        raise InvalidParameterError("non-finite gate parameters")
    if p.theta < -tol or p.theta > np.pi + tol:
        raise InvalidParameterError(f"theta={p.theta} outside [0, pi]")
    norm = float(np.linalg.norm(p.n))
    if abs(norm - 1.0) > tol:
        raise InvalidParameterError(f"|n|={norm} deviates from 1 beyond {tol}")


def gauge_flip(p):
    """The other representative of the same process: (pi - theta, -n)."""
    return GateParams(np.pi - p.theta, -p.n)


def canonicalize(p):
    """Deterministic gauge representative; idempotent.

    Keeps the axis in the nz > 0 hemisphere, breaking nz = 0 ties by nx > 0,
    then ny > 0. Gates with theta in {0, pi} carry no direction information
    (the matrix is +-identity) and both collapse to (0, (0, 0, 1)) so that the
    two gauge partners of the identity share one representative.
    """
    validate_params(p)
    theta = min(max(p.theta, 0.0), np.pi)
    if theta < DEGENERATE_THETA_TOL or theta > np.pi - DEGENERATE_THETA_TOL:
        return GateParams(0.0, _Z_AXIS.copy())
    nx, ny, nz = p.n
    if nz > 0:
        keep = True
    elif nz < 0:
        keep = False
    elif nx != 0:
        keep = nx > 0
    else:
        keep = ny > 0
    if keep:
        return GateParams(theta, p.n.copy())
    return GateParams(np.pi - theta, -p.n)


def gate_matrix(p):
    """2x2 SU(2) matrix of the axis-angle parameters (circular basis)."""
    validate_params(p)
    c = np.cos(p.theta)
    s = np.sin(p.theta)
    nx, ny, nz = p.n
    return np.array(
        [
            [c - 1j * s * nz, -1j * s * nx - s * ny],
            [-1j * s * nx + s * ny, c + 1j * s * nz],
        ]
    )


def check_unitary(U, tol=1e-9):
    """Raise InvalidMatrixError unless U is unitary with det 1 within tol."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise InvalidMatrixError(f"expected a 2x2 matrix, got shape {U.shape}")
    dev = np.abs(U.conj().T @ U - np.eye(2)).max()
    if dev > tol:
        raise InvalidMatrixError(f"not unitary: max deviation {dev:.3e}")
    det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
    if abs(det - 1.0) > tol:
        raise InvalidMatrixError(f"determinant {det} deviates from 1")
    return U


def matrix_to_quat(U):
    """Quaternion (q0, qx, qy, qz) of an SU(2) matrix, up to overall sign."""
    q0 = (U[0, 0].real + U[1, 1].real) / 2.0
    qx = -(U[0, 1].imag + U[1, 0].imag) / 2.0
    qy = (U[1, 0].real - U[0, 1].real) / 2.0
    qz = (U[1, 1].imag - U[0, 0].imag) / 2.0
    return np.array([q0, qx, qy, qz])


def params_from_matrix(U, tol=1e-9):
    """Canonical axis-angle parameters of a unitary, inverse of gate_matrix.

    gate_matrix(params_from_matrix(U)) equals U up to the overall sign.
    """
    U = check_unitary(U, tol=tol)
    return quat_to_params(matrix_to_quat(U))


def compose(a, b):
    """Matrix product a.b; b acts first (optical traversal order)."""
    a = check_unitary(a)
    b = check_unitary(b)
    return a @ b


def fidelity(a, b):
    """|Tr(a^dag b)| / 2; symmetric, blind to the overall sign."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    f = abs(np.trace(a.conj().T @ b)) / 2.0
    return float(min(f, 1.0))


def params_to_quat(p):
    """Unit quaternion (cos t, n sin t) of the axis-angle parameters."""
    s = np.sin(p.theta)
    return np.concatenate(([np.cos(p.theta)], s * p.n))


def quat_to_params(q):
    """Canonical GateParams of a unit quaternion (either sign)."""
    q = np.asarray(q, dtype=float).reshape(4)
    vec_norm = float(np.linalg.norm(q[1:]))
    theta = float(np.arctan2(vec_norm, q[0]))
    if vec_norm < DEGENERATE_THETA_TOL:
        return GateParams(0.0, _Z_AXIS.copy())
    return canonicalize(GateParams(theta, q[1:] / vec_norm))


def canonicalize_quats(q):
    """Flip quaternion signs onto the canonical hemisphere, vectorized.

    The first nonzero component of (qz, qx, qy) is made positive; pure-scalar
    quaternions get q0 > 0. Exact (sign flips only), shape (..., 4).
    """
    q = np.asarray(q, dtype=float)
    q0, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    key = np.where(
        qz != 0.0, np.sign(qz),
        np.where(qx != 0.0, np.sign(qx),
                 np.where(qy != 0.0, np.sign(qy), np.sign(q0))),
    )
    key = np.where(key == 0.0, 1.0, key)
    return q * key[..., None]


def quats_to_theta_axis(q):
    """Split quaternions (..., 4) into theta (...,) and unit axes (..., 3).

    Degenerate (near-scalar) quaternions get the conventional (0, 0, 1) axis.
    """
    q = np.asarray(q, dtype=float)
    vec = q[..., 1:]
    vec_norm = np.linalg.norm(vec, axis=-1)
    theta = np.arctan2(vec_norm, q[..., 0])
    safe = np.where(vec_norm < DEGENERATE_THETA_TOL, 1.0, vec_norm)
    axis = vec / safe[..., None]
    axis = np.where(
        (vec_norm < DEGENERATE_THETA_TOL)[..., None], _Z_AXIS, axis
    )
    return theta, axis


def theta_axis_to_quats(theta, axis):
    """Quaternions (..., 4) from theta (...,) and axes (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    axis = np.asarray(axis, dtype=float)
    s = np.sin(theta)
    return np.concatenate(
        [np.cos(theta)[..., None], s[..., None] * axis], axis=-1
    )


def quat_matrices(q):
    """SU(2) matrices (..., 2, 2) of quaternions (..., 4), vectorized."""
    q = np.asarray(q, dtype=float)
    q0, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    U = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0] = q0 - 1j * qz
    U[..., 0, 1] = -1j * qx - qy
    U[..., 1, 0] = -1j * qx + qy
    U[..., 1, 1] = q0 + 1j * qz
    return U


def quat_fidelity(qa, qb):
    """Gate fidelity |qa . qb| from unit quaternions, vectorized."""
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    return np.minimum(np.abs(np.sum(qa * qb, axis=-1)), 1.0)


def sample_haar_quats(rng, count):
    """Canonical unit quaternions of `count` Haar-uniform SU(2) gates.

    A normalized 4-component Gaussian vector is uniform on the 3-sphere,
    which is the invariant measure of SU(2).
    """
    v = rng.normal(size=(count, 4))
    norms = np.linalg.norm(v, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        v[bad] = rng.normal(size=(int(bad.sum()), 4))
        norms = np.linalg.norm(v, axis=1)
    return canonicalize_quats(v / norms[:, None])


def sample_haar(rng):
    """One Haar-uniform gate as canonical GateParams."""
    return quat_to_params(sample_haar_quats(rng, 1)[0])
