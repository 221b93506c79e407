"""Quaternion arithmetic and the flat hyper-Kaehler structure of H^{n+1}.

Real layout of a quaternionic vector: ``c[4*a + m]`` with ``m`` running over
(t, x, y, z) for the quaternion ``t + i x + j y + k z`` in slot ``a``.
Quaternionic matrices are numpy arrays of shape ``(rows, cols, 4)`` acting on
column vectors from the left.  The complex structures J_1, J_2, J_3 are right
multiplication by -i, -j, -k; they commute with every left matrix action.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, NotJInvariant

UNITS = np.eye(4)


def qmul_arr(a, b):
    """Hamilton product on arrays with trailing axis of length 4 (broadcasting)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    at, ax, ay, az = np.moveaxis(a, -1, 0)
    bt, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            at * bt - ax * bx - ay * by - az * bz,
            at * bx + ax * bt + ay * bz - az * by,
            at * by - ax * bz + ay * bt + az * bx,
            at * bz + ax * by - ay * bx + az * bt,
        ],
        axis=-1,
    )


def qconj_arr(a):
    a = np.array(a, dtype=float)
    a[..., 1:] *= -1.0
    return a


@dataclass(frozen=True)
class Quaternion:
    t: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a):
        return cls(*(float(c) for c in a))

    def as_array(self):
        return np.array([self.t, self.x, self.y, self.z])

    def conj(self):
        return Quaternion(self.t, -self.x, -self.y, -self.z)

    def norm(self):
        return float(np.sqrt(self.t**2 + self.x**2 + self.y**2 + self.z**2))

    def inverse(self):
        n2 = self.t**2 + self.x**2 + self.y**2 + self.z**2
        if n2 == 0.0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        c = self.conj()
        return Quaternion(c.t / n2, c.x / n2, c.y / n2, c.z / n2)

    def __add__(self, other):
        return Quaternion.from_array(self.as_array() + _as_qarray(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Quaternion.from_array(self.as_array() - _as_qarray(other))

    def __rsub__(self, other):
        return Quaternion.from_array(_as_qarray(other) - self.as_array())

    def __neg__(self):
        return Quaternion(-self.t, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        return Quaternion.from_array(qmul_arr(self.as_array(), _as_qarray(other)))

    def __rmul__(self, other):
        return Quaternion.from_array(qmul_arr(_as_qarray(other), self.as_array()))

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion.from_array(self.as_array() / other)
        return self * _as_quaternion(other).inverse()


def _as_qarray(v):
    if isinstance(v, Quaternion):
        return v.as_array()
    if isinstance(v, (int, float, np.floating, np.integer)):
        return np.array([float(v), 0.0, 0.0, 0.0])
    return np.asarray(v, dtype=float)


def _as_quaternion(v):
    return v if isinstance(v, Quaternion) else Quaternion.from_array(_as_qarray(v))


def qmul(a, b):
    """Hamilton product of two quaternions."""
    return _as_quaternion(a) * _as_quaternion(b)


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


# --- quaternionic vectors -------------------------------------------------


def qvector(quats):
    """Pack a sequence of quaternions (or 4-arrays) into the real layout."""
    return np.concatenate([_as_qarray(q) for q in quats])


def slots(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 4:
        raise DimensionMismatch(f"length {v.shape[-1]} is not a multiple of 4")
    return v.reshape(v.shape[:-1] + (v.shape[-1] // 4, 4))


def unit_vector(dim, slot, component=0):
    e = np.zeros(dim)
    e[4 * slot + component] = 1.0
    return e


def _j_block(s):
    """4x4 block of J_s: x -> x * (-e_s)."""
    if s not in (1, 2, 3):
        raise ValueError(f"complex structure index must be 1, 2 or 3, got {s}")
    return _J_BLOCKS[s - 1]


def apply_J(s, v):
    """J_s v: every slot multiplied on the right by -e_s."""
    v = np.asarray(v, dtype=float)
    return (slots(v) @ _j_block(s).T).reshape(v.shape)


@lru_cache(maxsize=None)
def _J_matrix_cached(s, dim):
    M = np.kron(np.eye(dim // 4), _j_block(s))
    M.flags.writeable = False
    return M


def J_matrix(s, dim):
    """Real matrix of J_s on R^dim (dim = 4(n+1)); read-only and shared."""
    if dim % 4:
        raise DimensionMismatch(f"length {dim} is not a multiple of 4")
    return _J_matrix_cached(s, dim)


def flat_inner(v, w):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise DimensionMismatch(f"shapes {v.shape} and {w.shape} differ")
    return float(v @ w)


def quaternionic_span(v):
    """Rows v, J_1 v, J_2 v, J_3 v."""
    return np.stack([v] + [apply_J(s, v) for s in (1, 2, 3)])


# --- quaternionic matrices --------------------------------------------------


_J_BLOCKS = tuple(qmul_arr(UNITS, -UNITS[s]).T for s in (1, 2, 3))


def left_mult_matrix(h):
    """4x4 real matrix of x -> h x."""
    return qmul_arr(_as_qarray(h), UNITS).T


def right_mult_matrix(h):
    """4x4 real matrix of x -> x h."""
    return qmul_arr(UNITS, _as_qarray(h)).T


def qmat_identity(n):
    A = np.zeros((n, n, 4))
    A[np.arange(n), np.arange(n), 0] = 1.0
    return A


def qmat_mul(A, B):
    return qmul_arr(A[:, :, None, :], B[None, :, :, :]).sum(axis=1)


def qmat_adjoint(A):
    return qconj_arr(np.swapaxes(A, 0, 1))


def qmat_vec(A, v):
    q = slots(v)
    return qmul_arr(A, q[None, :, :]).sum(axis=1).reshape(-1)


def real_form(A):
    """Real (4r x 4c) matrix of the left action of a quaternionic matrix."""
    A = np.asarray(A, dtype=float)
    r, c = A.shape[:2]
    R = np.zeros((4 * r, 4 * c))
    for a in range(r):
        for b in range(c):
            R[4 * a:4 * a + 4, 4 * b:4 * b + 4] = left_mult_matrix(A[a, b])
    return R


def from_real_form(R):
    """Inverse of ``real_form`` for a real matrix commuting with every J_s.

    Entry (a, b) is read off as the image of the quaternion 1 in slot b.
    """
    R = np.asarray(R, dtype=float)
    r, c = R.shape[0] // 4, R.shape[1] // 4
    A = np.zeros((r, c, 4))
    for a in range(r):
        for b in range(c):
            A[a, b] = R[4 * a:4 * a + 4, 4 * b]
    return A


def qmat_inverse(A):
    return from_real_form(np.linalg.inv(real_form(A)))


def j_commutator_residual(M):
    """max_s |M J_s - J_s M|_F / |M|_F (0 for the zero matrix)."""
    M = np.asarray(M, dtype=float)
    scale = np.linalg.norm(M)
    if scale == 0.0:
        return 0.0
    dim = M.shape[0]
    res = 0.0
    for s in (1, 2, 3):
        Js = J_matrix(s, dim)
        res = max(res, np.linalg.norm(M @ Js - Js @ M) / scale)
    return float(res)


# --- affine maps ------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """x -> A x conj(omega) + q0."""

    A: np.ndarray
    omega: Quaternion
    q0: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        q0 = np.asarray(self.q0, dtype=float)
        if A.ndim != 3 or A.shape[0] != A.shape[1] or A.shape[2] != 4:
            raise DimensionMismatch(f"bad quaternionic matrix shape {A.shape}")
        if q0.shape != (4 * A.shape[0],):
            raise DimensionMismatch("translation does not match matrix size")
        cond = np.linalg.cond(real_form(A))
        if not np.isfinite(cond) or cond > 1e14:
            raise ValueError(f"linear part is not invertible (cond {cond:.3g})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "omega", _as_quaternion(self.omega))

    @classmethod
    def identity(cls, n_plus_1):
        return cls(qmat_identity(n_plus_1), ONE, np.zeros(4 * n_plus_1))

    @property
    def dim(self):
        return 4 * self.A.shape[0]

    def linear_real(self):
        """Real matrix L with F(x) = L x + q0."""
        n1 = self.A.shape[0]
        right = np.kron(np.eye(n1), right_mult_matrix(self.omega.conj()))
        return right @ real_form(self.A)

    def __call__(self, x):
        return affine_apply(self, x)

    def compose(self, inner):
        """self o inner."""
        A = qmat_mul(self.A, inner.A)
        omega = self.omega * inner.omega
        q0 = self.linear_real() @ inner.q0 + self.q0
        return AffineMap(A, omega, q0)

    def inverse(self):
        Ainv = qmat_inverse(self.A)
        shifted = qmat_vec(Ainv, self.q0)
        q0 = -qmul_arr(slots(shifted), self.omega.as_array()).reshape(-1)
        return AffineMap(Ainv, self.omega.conj(), q0)


def random_affine_map(rng, n_plus_1, entry_range=2.0, cond_cap=1e3, shift_range=1.0):
    """Random quaternionic affine map: entries of A uniform in
    [-entry_range, entry_range] (redrawn until cond <= cond_cap), a uniformly
    random unit omega and a translation uniform in [-shift_range, shift_range]."""
    while True:
        A = rng.uniform(-entry_range, entry_range, size=(n_plus_1, n_plus_1, 4))
        if np.linalg.cond(real_form(A)) <= cond_cap:
            break
    w = rng.normal(size=4)
    omega = Quaternion.from_array(w / np.linalg.norm(w))
    q0 = rng.uniform(-shift_range, shift_range, size=4 * n_plus_1)
    return AffineMap(A, omega, q0)


def affine_apply(F, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != F.dim:
        raise DimensionMismatch(f"point of length {x.shape[-1]} for map on R^{F.dim}")
    return x @ F.linear_real().T + F.q0


# --- symmetric / Hermitian linear algebra ------------------------------------


def sym_eigen(M, max_sweeps=100):
    """Cyclic Jacobi eigensolver.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("sym_eigen needs a square matrix")
    norm = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-12 * max(norm, 1e-300):
        raise ValueError("sym_eigen needs a symmetric matrix")
    n = M.shape[0]
    A = 0.5 * (M + M.T)
    V = np.eye(n)
    tol = 1e-14 * norm
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass(frozen=True)
class QHermitian:
    entries: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.entries, dtype=float)
        if np.abs(H - qmat_adjoint(H)).max(initial=0.0) > 1e-12 * max(np.abs(H).max(initial=0.0), 1.0):
            raise ValueError("matrix is not quaternionic Hermitian")
        object.__setattr__(self, "entries", H)

    @property
    def size(self):
        return self.entries.shape[0]

    def real_symmetric(self):
        return real_form(self.entries)


def to_quat_hermitian(delta, tol=1e-10):
    delta = np.asarray(delta, dtype=float)
    res = j_commutator_residual(delta)
    if res > tol:
        raise NotJInvariant(f"form does not commute with J_s (residual {res:.3e})",
                            {"j_residual": res})
    H = from_real_form(delta)
    return QHermitian(0.5 * (H + qmat_adjoint(H)))


def congruence_diagonalize(H, eps_rank=1e-8):
    """Quaternionic symmetric Gaussian elimination with diagonal pivoting.

    Returns ``(A, (p, m, z))`` with ``A* H A = diag(+1 x p, -1 x m, 0 x z)``.
    When every remaining diagonal entry is negligible but an off-diagonal one
    is not, the pivot column is mixed with its partner to create a diagonal
    entry 2|H_ij| (the 2x2 hyperbolic-block case).
    """
    W = np.array(H.entries if isinstance(H, QHermitian) else H, dtype=float)
    n = W.shape[0]
    A = qmat_identity(n)
    thresh = eps_rank * np.linalg.norm(W, axis=-1).max(initial=0.0)
    signs = np.zeros(n)
    for k in range(n):
        diag = W[np.arange(k, n), np.arange(k, n), 0]
        # largest diagonal pivot; near-ties go to the lowest index so that
        # already-diagonal forms are left in place
        mag = np.abs(diag)
        p = k + int(np.flatnonzero(mag >= (1.0 - 1e-8) * mag.max())[0])
        sub = np.linalg.norm(W[k:, k:], axis=-1)
        if sub.max(initial=0.0) <= thresh:
            break
        if abs(W[p, p, 0]) < 0.1 * sub.max():
            i, j = np.unravel_index(np.argmax(sub), sub.shape)
            i += k
            j += k
            # column i <- column i + column j * lam, lam = +-conj(W_ij)/|W_ij|;
            # the sign avoids cancellation against W_ii + W_jj.
            sgn = 1.0 if W[i, i, 0] + W[j, j, 0] >= 0.0 else -1.0
            lam = sgn * qconj_arr(W[i, j]) / np.linalg.norm(W[i, j])
            T = qmat_identity(n)
            T[j, i] = lam
            W = qmat_mul(qmat_mul(qmat_adjoint(T), W), T)
            A = qmat_mul(A, T)
            p = i
        if p != k:
            W[[k, p]] = W[[p, k]]
            W[:, [k, p]] = W[:, [p, k]]
            A[:, [k, p]] = A[:, [p, k]]
        pivot = W[k, k, 0]
        T = qmat_identity(n)
        for j in range(k + 1, n):
            T[k, j] = -W[k, j] / pivot
        W = qmat_mul(qmat_mul(qmat_adjoint(T), W), T)
        A = qmat_mul(A, T)
        A[:, k] /= np.sqrt(abs(pivot))
        signs[k] = np.sign(pivot)
        W[k, :] = 0.0
        W[:, k] = 0.0
    order = np.concatenate([np.flatnonzero(signs > 0), np.flatnonzero(signs < 0),
                            np.flatnonzero(signs == 0)])
    A = A[:, order]
    inertia = (int(np.sum(signs > 0)), int(np.sum(signs < 0)), int(np.sum(signs == 0)))
    return A, inertia
