"""The parallel form Delta, its quaternionic inertia, and reduction of a
qc-hypersurface of H^{n+1} to one of the three model hyperquadrics."""

from dataclasses import dataclass, field

import numpy as np

from .calibration import calibrate
from .errors import (
    DegenerateLinearPart,
    InconsistentClassification,
    NotDegenerate,
    NotJInvariant,
    NotParallel,
    ProjectionNotTangent,
    QuadrupleViolation,
    RankDeficientFit,
)
from .frame import DEFAULT_TOL_SP1, hat_structure
from .quat import (
    ONE,
    AffineMap,
    apply_J,
    congruence_diagonalize,
    j_commutator_residual,
    qconj_arr,
    qmat_inverse,
    qmul_arr,
    slots,
    sym_eigen,
    to_quat_hermitian,
)
from .surface import sample_points

PARABOLIC = "Parabolic"
SPHERE = "Sphere"
HYPERBOLOID = "Hyperboloid"

DEFAULT_EPS_RANK = 1e-8
DEFAULT_TOL_CONST = 1e-6
J_TOL = 1e-8


def expected_inertia(label, n_plus_1):
    n = n_plus_1 - 1
    return {SPHERE: (n + 1, 0, 0), HYPERBOLOID: (n, 1, 0), PARABOLIC: (n, 0, 1)}[label]


def model_equation(label, x):
    """Left-hand side of the model quadric, vanishing on the model."""
    q = slots(np.atleast_2d(x))
    sq = np.sum(q**2, axis=-1)
    if label == SPHERE:
        return sq.sum(axis=-1) - 1.0
    if label == HYPERBOLOID:
        return sq[:, :-1].sum(axis=-1) - sq[:, -1] + 1.0
    return sq[:, :-1].sum(axis=-1) + q[:, -1, 0]


def assemble_delta(cf):
    """Delta(v, w) = -f II(v', w') + (S/2) lambda(v) lambda(w) on the ambient
    coordinate basis, where lambda = f <N, .>, xi = N/f + r and
    v' = v - lambda(v) xi is tangent."""
    b = cf.base
    N = b.N
    f = cf.f
    xi = N / f + cf.r
    P = np.eye(b.dim) - f * np.outer(xi, N)  # columns v'
    tangency = float(np.abs(N @ P).max())
    if tangency > 1e-10:
        raise ProjectionNotTangent(f"projected vectors leave TM ({tangency:.3e})")
    II = -b.sigma * b.hess / b.grad_norm
    D = -f * (P.T @ II @ P) + 0.5 * cf.S * f * f * np.outer(N, N)
    return 0.5 * (D + D.T)


@dataclass(frozen=True)
class DeltaForm:
    matrix: np.ndarray
    constancy_dev: float
    j_residual: float
    samples: int = 1


def delta_form(matrices, tol_const=DEFAULT_TOL_CONST):
    """Mean of pointwise Delta matrices, with constancy and J-invariance."""
    mats = np.array(matrices)
    mean = mats.mean(axis=0)
    scale = float(np.abs(mean).max())
    dev = float(np.abs(mats - mean).max()) / scale
    jres = j_commutator_residual(mean)
    form = DeltaForm(mean, dev, jres, len(mats))
    if dev > tol_const:
        raise NotParallel(f"Delta varies along the surface (deviation {dev:.3e})",
                          {"constancy_dev": dev, "j_residual": jres})
    return form


def delta_constancy(spec, points, tol_const=DEFAULT_TOL_CONST, tol_sp1=DEFAULT_TOL_SP1):
    """Assemble Delta at every point and check that it is one constant matrix.

    ``spec`` may also be a sequence of specs, one per point.
    """
    if len(points) < 2:
        raise ValueError("need at least two points")
    specs = spec if isinstance(spec, (list, tuple)) else [spec] * len(points)
    mats = [assemble_delta(calibrate(hat_structure(s, p, tol_sp1))) for s, p in zip(specs, points)]
    return delta_form(mats, tol_const)


def _matrix_of(delta):
    return delta.matrix if isinstance(delta, DeltaForm) else np.asarray(delta, dtype=float)


def signature(delta, eps_rank=DEFAULT_EPS_RANK, cluster_tol=1e-8):
    """Quaternionic inertia (p, m, z), counted in quadruples of eigenvalues."""
    D = _matrix_of(delta)
    jres = j_commutator_residual(D)
    if jres > J_TOL:
        raise NotJInvariant(f"Delta does not commute with J_s ({jres:.3e})", {"j_residual": jres})
    w, _ = sym_eigen(D)
    scale = float(np.abs(w).max())
    quads = w.reshape(-1, 4)
    spread = float((quads.max(axis=1) - quads.min(axis=1)).max()) / scale
    if spread > cluster_tol:
        raise QuadrupleViolation(f"eigenvalues do not group in fours (spread {spread:.3e})",
                                 {"quadruple_spread": spread})
    zero = np.abs(w) < eps_rank * scale
    counts = (int(np.sum((w > 0) & ~zero)), int(np.sum((w < 0) & ~zero)), int(np.sum(zero)))
    if any(c % 4 for c in counts):
        raise QuadrupleViolation(f"inertia counts {counts} are not multiples of 4")
    return tuple(c // 4 for c in counts)


@dataclass(frozen=True)
class QuadricFit:
    b: np.ndarray
    c: float
    residual: float
    bound: float

    @property
    def accepted(self):
        return self.residual < self.bound


def fit_quadric(delta, points):
    """Least-squares b, c with <Delta x, x> + <b, x> + c = 0 on the points."""
    D = _matrix_of(delta)
    X = np.array(points)
    dim = D.shape[0]
    if len(X) < dim + 2:
        raise RankDeficientFit(f"need at least {dim + 2} points, got {len(X)}")
    lhs = np.hstack([X, np.ones((len(X), 1))])
    rhs = -np.einsum("pi,ij,pj->p", X, D, X)
    sol, _, rank, _ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if rank < dim + 1:
        raise RankDeficientFit(f"fit matrix has rank {rank} < {dim + 1}")
    b = sol[:dim]
    c = float(sol[dim])
    resid = float(np.abs(lhs @ sol - rhs).max())
    xmax = float(np.abs(X).max())
    bound = 1e-6 * (1.0 + np.linalg.norm(D, 2) * xmax**2)
    return QuadricFit(b, c, resid, bound)


def _kernel_basis(D, eps_rank):
    w, V = sym_eigen(D)
    scale = np.abs(w).max()
    zero = np.abs(w) < eps_rank * scale
    return w, V, zero


def pseudo_inverse(D, eps_rank=DEFAULT_EPS_RANK):
    """Inverse on the image, zero on the kernel quadruple."""
    w, V, zero = _kernel_basis(D, eps_rank)
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, w))
    return (V * inv) @ V.T


def _qinner(u, v):
    """Quaternion u* v = sum_a conj(u_a) v_a."""
    return qmul_arr(qconj_arr(slots(u)), slots(v)).sum(axis=0)


def normalize_affine(delta, b, c, inertia, eps_rank=DEFAULT_EPS_RANK):
    """Quaternionic affine map taking the fitted quadric onto its model."""
    D = _matrix_of(delta)
    b = np.asarray(b, dtype=float)
    dim = D.shape[0]
    n1 = dim // 4
    n = n1 - 1
    H = to_quat_hermitian(D, tol=J_TOL)
    A, inertia2 = congruence_diagonalize(H, eps_rank)
    if tuple(inertia2) != tuple(inertia):
        raise InconsistentClassification(
            f"congruence inertia {inertia2} disagrees with eigenvalue inertia {inertia}")
    if tuple(inertia) in ((n + 1, 0, 0), (n, 1, 0)):
        O = -0.5 * np.linalg.solve(D, b)
        level = float(O @ D @ O - c)
        sphere = tuple(inertia) == (n + 1, 0, 0)
        if (sphere and level <= 0) or (not sphere and level >= 0):
            raise InconsistentClassification(
                f"level {level:.6g} has the wrong sign for inertia {tuple(inertia)}",
                {"level": level})
        M = qmat_inverse(A) / np.sqrt(abs(level))
        return _map_from(M, O)
    if tuple(inertia) != (n, 0, 1):
        raise InconsistentClassification(f"inertia {tuple(inertia)} matches no model quadric")
    w, V, zero = _kernel_basis(D, eps_rank)
    K = V[:, zero]
    bK = K @ (K.T @ b)
    nbK = float(np.linalg.norm(bK))
    if nbK <= 1e-10 * max(np.linalg.norm(b), np.linalg.norm(D)):
        raise DegenerateLinearPart("linear part of the quadric vanishes on ker Delta")
    v0 = bK / nbK
    b_perp = b - bK
    O = -0.5 * pseudo_inverse(D, eps_rank) @ b_perp
    c_shift = c - float(O @ D @ O)
    center = O - (c_shift / nbK) * v0
    # columns: positive part of the congruence, made orthogonal to the
    # quaternionic line of v0, then v0 itself
    cols = []
    v0q = slots(v0)
    for a in range(n):
        u = A[:, a, :]
        coef = _qinner(v0, u.reshape(-1))
        cols.append(u - qmul_arr(v0q, coef))
    cols.append(v0q)
    Ahat = np.stack(cols, axis=1)
    M = qmat_inverse(Ahat)
    M[-1] *= nbK
    return _map_from(M, center)


def _map_from(M, center):
    """x -> M (x - center)."""
    F = AffineMap(M, ONE, np.zeros(4 * M.shape[0]))
    return AffineMap(M, ONE, -F(center))


@dataclass
class Classification:
    label: str
    inertia: tuple
    normalizer: AffineMap
    residual: float
    delta: DeltaForm
    fit: QuadricFit
    points: list = field(repr=False, default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def label_for(inertia, n_plus_1):
    for label in (SPHERE, HYPERBOLOID, PARABOLIC):
        if tuple(inertia) == expected_inertia(label, n_plus_1):
            return label
    raise InconsistentClassification(f"inertia {tuple(inertia)} matches no model quadric")


def classify(spec, samples=32, rng_seed=1, tol_sp1=DEFAULT_TOL_SP1,
             tol_const=DEFAULT_TOL_CONST, eps_rank=DEFAULT_EPS_RANK, points=None):
    """sample -> frames -> calibrate -> Delta -> inertia -> fit -> normalize."""
    if points is None:
        points = sample_points(spec, samples, rng_seed)
    frames = [calibrate(hat_structure(spec, p, tol_sp1)) for p in points]
    diagnostics = {
        "sp1_residual": max(cf.base.diagnostics.sp1_residual for cf in frames),
        "S_mean": float(np.mean([cf.S for cf in frames])),
        "S_spread": max(cf.S_spread for cf in frames),
        "S_variation": float(np.ptp([cf.S for cf in frames])),
    }
    delta = delta_form([assemble_delta(cf) for cf in frames], tol_const)
    diagnostics["constancy_dev"] = delta.constancy_dev
    diagnostics["j_residual"] = delta.j_residual
    inertia = signature(delta, eps_rank)
    label = label_for(inertia, spec.n_plus_1)
    fit = fit_quadric(delta, points)
    diagnostics["fit_residual"] = fit.residual
    if not fit.accepted:
        raise InconsistentClassification(
            f"quadric fit residual {fit.residual:.3e} exceeds {fit.bound:.3e}", diagnostics)
    F = normalize_affine(delta, fit.b, fit.c, inertia, eps_rank)
    residual = float(np.abs(model_equation(label, F(np.array(points)))).max())
    diagnostics["model_residual"] = residual
    return Classification(label, tuple(inertia), F, residual, delta, fit, list(points), diagnostics)


def heisenberg_invariants(spec, points, delta, eps_rank=DEFAULT_EPS_RANK, tol_sp1=DEFAULT_TOL_SP1):
    """Degenerate-case potentials: f l_0 is constant and f^2 h is affine in
    the kernel coordinates t_0..t_3."""
    D = _matrix_of(delta)
    inertia = signature(D, eps_rank)
    n = D.shape[0] // 4 - 1
    if tuple(inertia) != (n, 0, 1):
        raise NotDegenerate(f"inertia {inertia} is not degenerate")
    w, V, zero = _kernel_basis(D, eps_rank)
    K = V[:, zero]
    Dp = pseudo_inverse(D, eps_rank)
    frames = [calibrate(hat_structure(spec, p, tol_sp1)) for p in points]
    NK = K @ (K.T @ frames[0].base.N)
    v0 = NK / np.linalg.norm(NK)
    kernel_frame = np.stack([v0] + [apply_J(s, v0) for s in (1, 2, 3)])
    fl0 = np.array([cf.f * (v0 @ cf.base.N) for cf in frames])
    f2h = np.array([cf.f**2 * (cf.base.N @ Dp @ cf.base.N) for cf in frames])
    t = np.array([kernel_frame @ p for p in points])
    lhs = np.hstack([np.ones((len(points), 1)), t])
    coef = np.linalg.lstsq(lhs, f2h, rcond=None)[0]
    fit_res = float(np.abs(lhs @ coef - f2h).max() / max(np.abs(f2h).max(), 1e-300))
    fl0_dev = float(np.ptp(fl0) / np.abs(fl0).max())
    return {"fl0_dev": fl0_dev, "potential_fit_residual": fit_res,
            "C0": float(fl0.mean()), "coefficients": coef}
