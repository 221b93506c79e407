"""Induced qc-structure of a hypersurface of H^{n+1} at a single point.

Forms are always evaluated through the flat metric: the contact form eta_s
is represented by the ambient vector J_s N, so eta_s(A) = <J_s N, A>.
Matrices "on h_basis" are taken in the (flat-)orthonormal horizontal basis.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    LinearSolveFailure,
    NotConformallyRelated,
    NotOnSurface,
    NotQCHypersurface,
    NotSameHorizontal,
    NotTangent,
    VanishingGradient,
)
from .quat import J_matrix, apply_J
from .surface import eval_jet2, on_surface_tolerance

NEGATIVE = "NegativeDefinite"
POSITIVE = "PositiveDefinite"
INDEFINITE = "Indefinite"

DEFAULT_TOL_SP1 = 1e-8


def orthonormal_complement(fixed, dim, drop=1e-10):
    """Gram-Schmidt of the coordinate directions, in index order, against the
    rows of ``fixed`` (assumed orthonormal).  Two projection passes per vector;
    vectors whose residual falls below ``drop`` are skipped."""
    basis = [np.asarray(f, dtype=float) for f in fixed]
    out = []
    for i in range(dim):
        v = np.zeros(dim)
        v[i] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv < drop:
            continue
        v = v / nv
        basis.append(v)
        out.append(v)
    return np.array(out)


def reeb_directions(N):
    return np.stack([apply_J(s, N) for s in (1, 2, 3)])


def horizontal_basis(N):
    """Orthonormal basis of the orthogonal complement of span{N, J_s N}."""
    N = np.asarray(N, dtype=float)
    return orthonormal_complement(np.vstack([N, reeb_directions(N)]), N.size)


@dataclass(frozen=True)
class QCDiagnostics:
    definiteness: str
    sp1_residual: float
    min_abs_eigenvalue: float
    passed: bool

    def as_dict(self):
        return {
            "definiteness": self.definiteness,
            "sp1_residual": self.sp1_residual,
            "min_abs_eigenvalue": self.min_abs_eigenvalue,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class PartialFrame:
    """Normal from the raw gradient and the horizontal space, before the
    orientation of N has been fixed."""

    p: np.ndarray
    jet: object
    normal: np.ndarray
    grad_norm: float
    h_basis: np.ndarray

    def ii_h(self):
        """II on h_basis for N = grad/|grad|."""
        E = self.h_basis
        return -(E @ self.jet.hess @ E.T) / self.grad_norm


def partial_frame(jet, p=None):
    g = jet.grad
    gn = float(np.linalg.norm(g))
    if gn <= 1e-12:
        raise VanishingGradient(f"|grad rho| = {gn:.3e}")
    N = g / gn
    return PartialFrame(None if p is None else np.asarray(p, float), jet, N, gn,
                        horizontal_basis(N))


def check_qc(frame, tol=DEFAULT_TOL_SP1):
    """Definiteness and Sp(1)-invariance of II restricted to H."""
    E = frame.h_basis
    K = frame.ii_h()
    eig = np.linalg.eigvalsh(K)
    scale = float(np.abs(eig).max(initial=0.0))
    min_abs = float(np.abs(eig).min()) if eig.size else 0.0
    if scale > 0 and eig.max() < -1e-12 * scale:
        definiteness = NEGATIVE
    elif scale > 0 and eig.min() > 1e-12 * scale:
        definiteness = POSITIVE
    else:
        definiteness = INDEFINITE
    dim = E.shape[1]
    res = 0.0
    for s in (1, 2, 3):
        JE = J_matrix(s, dim) @ E.T
        Ks = -(JE.T @ frame.jet.hess @ JE) / frame.grad_norm
        res = max(res, float(np.abs(Ks - K).max(initial=0.0)))
    sp1 = res / scale if scale > 0 else float("inf")
    passed = definiteness != INDEFINITE and sp1 < tol
    return QCDiagnostics(definiteness, sp1, min_abs, passed)


def unit_normal(jet):
    """grad/|grad|, flipped when that makes II on H negative definite."""
    pf = partial_frame(jet)
    if check_qc(pf, tol=np.inf).definiteness == POSITIVE:
        return -pf.normal
    return pf.normal


def second_fundamental(jet, N, A, B, tol=1e-10):
    """-Hess(A, B)/|grad| with the sign following the orientation of N."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    gn = float(np.linalg.norm(jet.grad))
    for v in (A, B):
        if abs(N @ v) > tol * max(1.0, np.linalg.norm(v)):
            raise NotTangent(f"<N, v> = {N @ v:.3e}")
    sigma = 1.0 if N @ jet.grad >= 0 else -1.0
    return float(-sigma * (A @ jet.hess @ B) / gn)


@dataclass(frozen=True)
class QCStructure:
    """A qc-structure at a point, relative to a fixed horizontal space.

    ``metric`` and ``complex`` (three endomorphisms, columns are images) are
    in coordinates of ``h_basis``; ``eta`` holds the ambient representers of
    the three contact forms."""

    point: np.ndarray
    h_basis: np.ndarray
    metric: np.ndarray
    complex: np.ndarray
    eta: np.ndarray


@dataclass(frozen=True)
class HatFrame:
    p: np.ndarray
    N: np.ndarray
    sigma: float  # N = sigma * grad / |grad|
    grad_norm: float
    hess: np.ndarray
    tangent_basis: np.ndarray  # rows: J_1N, J_2N, J_3N, then h_basis
    h_basis: np.ndarray
    II: np.ndarray  # on tangent_basis
    ghat: np.ndarray
    rhat: np.ndarray  # (3, dim)
    alpha_hat: np.ndarray  # (3, 4n), covectors on h_basis
    diagnostics: QCDiagnostics

    @property
    def dim(self):
        return self.p.size

    @property
    def n(self):
        return self.dim // 4 - 1

    @property
    def reeb_dirs(self):
        """J_1 N, J_2 N, J_3 N."""
        return self.tangent_basis[:3]

    def ii(self, A, B):
        """II for ambient vectors already known to be tangent (no check)."""
        return float(-self.sigma * (np.asarray(A) @ self.hess @ np.asarray(B)) / self.grad_norm)

    def ii_matrix(self, vectors_a, vectors_b=None):
        Va = np.atleast_2d(vectors_a)
        Vb = Va if vectors_b is None else np.atleast_2d(vectors_b)
        return -self.sigma * (Va @ self.hess @ Vb.T) / self.grad_norm

    def eta_hat(self, A):
        return self.reeb_dirs @ np.asarray(A, dtype=float)

    def complex_structures(self):
        """I_s on h_basis coordinates: I_s[a, b] = <e_a, J_s e_b>."""
        E = self.h_basis
        return np.stack([E @ J_matrix(s, self.dim) @ E.T for s in (1, 2, 3)])

    def qc_structure(self):
        return QCStructure(self.p, self.h_basis, self.ghat, self.complex_structures(),
                           self.reeb_dirs.copy())

    def hat_reeb(self):
        """Reeb fields of the hat structure, J_s N + r_hat_s."""
        return self.reeb_dirs + self.rhat


def diagnose(spec, p, tol=DEFAULT_TOL_SP1):
    jet = eval_jet2(spec, p)
    return check_qc(partial_frame(jet, p), tol)


def hat_structure(spec, p, tol_sp1=DEFAULT_TOL_SP1, on_surface=1e-10):
    p = np.asarray(p, dtype=float)
    jet = eval_jet2(spec, p)
    if abs(jet.value) > on_surface_tolerance(jet, p, on_surface):
        raise NotOnSurface(f"|rho(p)| = {abs(jet.value):.3e}")
    pf = partial_frame(jet, p)
    diag = check_qc(pf, tol_sp1)
    if not diag.passed:
        raise NotQCHypersurface(
            f"II on H is {diag.definiteness} with Sp(1) residual {diag.sp1_residual:.3e}",
            diag.as_dict())
    sigma = -1.0 if diag.definiteness == POSITIVE else 1.0
    N = sigma * pf.normal
    E = horizontal_basis(N)
    tangent = np.vstack([reeb_directions(N), E])
    II = -sigma * (tangent @ jet.hess @ tangent.T) / pf.grad_norm
    II = 0.5 * (II + II.T)
    ghat = -II[3:, 3:]
    mixed = II[:3, 3:]  # II(J_s N, e_a)
    try:
        # 2 II(r_s, X) = -II(J_s N, X)  <=>  (-2 ghat) c_s = -mixed_s
        coeffs = np.linalg.solve(-2.0 * ghat, -mixed.T).T
    except np.linalg.LinAlgError as exc:
        raise LinearSolveFailure(str(exc)) from None
    if not np.all(np.isfinite(coeffs)):
        raise LinearSolveFailure("non-finite Reeb correction")
    rhat = coeffs @ E
    return HatFrame(p, N, sigma, pf.grad_norm, jet.hess, tangent, E, II, ghat, rhat,
                    mixed.copy(), diag)


# --- conformal pairs ------------------------------------------------------------


class ConformalPair(NamedTuple):
    F: float
    A: np.ndarray
    residual: float


def _as_structure(frame):
    if isinstance(frame, QCStructure):
        return frame
    return frame.qc_structure()


def transform_structure(structure, F, A):
    """(eta', I', g') = (F eta A, I A, F g) for F > 0 and A in SO(3)."""
    st = _as_structure(structure)
    A = np.asarray(A, dtype=float)
    complex_ = np.einsum("sab,st->tab", st.complex, A)
    eta = F * np.einsum("sd,st->td", st.eta, A)
    return QCStructure(st.point, st.h_basis, F * st.metric, complex_, eta)


def recover_conformal_pair(frame1, frame2, tol=1e-8):
    """Recover F > 0 and A in SO(3) with eta' = F eta A, I' = I A, g' = F g."""
    s1 = _as_structure(frame1)
    s2 = _as_structure(frame2)
    if np.linalg.norm(np.asarray(s1.point) - np.asarray(s2.point)) > 1e-10 * (1 + np.linalg.norm(s1.point)):
        raise NotSameHorizontal("frames are attached to different points")
    E1 = s1.h_basis
    E2 = s2.h_basis
    if E1.shape != E2.shape:
        raise NotSameHorizontal("horizontal spaces have different dimensions")
    # coordinates of the second basis in the first: e2_b = sum_a T[a, b] e1_a
    T = np.linalg.lstsq(E1.T, E2.T, rcond=None)[0]
    span_res = np.linalg.norm(E1.T @ T - E2.T) / max(np.linalg.norm(E2), 1e-300)
    if span_res > 1e-10:
        raise NotSameHorizontal(f"horizontal spans differ (residual {span_res:.3e})")
    Tinv = np.linalg.inv(T)
    g2 = Tinv.T @ s2.metric @ Tinv
    I2 = np.einsum("ab,sbc,cd->sad", T, s2.complex, Tinv)
    m = E1.shape[0]
    F = float(np.trace(np.linalg.solve(s1.metric, g2)) / m)
    A = -np.einsum("sab,tba->st", s1.complex, I2) / m
    res_g = np.linalg.norm(g2 - F * s1.metric) / np.linalg.norm(g2)
    res_I = np.linalg.norm(I2 - np.einsum("sab,st->tab", s1.complex, A)) / np.sqrt(3 * m)
    eta_pred = F * np.einsum("sd,st->td", s1.eta, A)
    res_eta = np.linalg.norm(s2.eta - eta_pred) / max(np.linalg.norm(s2.eta), 1e-300)
    res_orth = np.linalg.norm(A.T @ A - np.eye(3))
    residual = float(max(res_g, res_I, res_eta, res_orth))
    if F <= 0 or np.linalg.det(A) <= 0 or residual > tol:
        raise NotConformallyRelated(
            f"structures are not conformally related (residual {residual:.3e})",
            {"residual": residual, "F": F})
    return ConformalPair(F, A, residual)
