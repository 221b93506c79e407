"""Calibration of the induced qc-structure to its qc-Einstein representative.

The calibration factor mu compares the n-th powers of the (2,0)-forms built
from the flat metric and from ghat on H.  It is computed as a ratio of
Pfaffians and cross-checked against a determinant formula.  The conformal
factor is f = mu^(1/(n+2)); the calibrated horizontal metric is g = f ghat.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    InconsistentCalibration,
    NonPositiveMu,
    NotTangent,
    PfaffianSingular,
)
from .frame import QCStructure, hat_structure
from .quat import apply_J
from .surface import eval_jet2, project_to_surface

MU_AXIS_TOL = 1e-10


def pfaffian(A):
    """Pfaffian of a (complex or real) skew-symmetric matrix.

    Skew-symmetric Gaussian elimination (Parlett-Reid style) with partial
    pivoting on the subdiagonal column.
    """
    A = np.array(A, dtype=complex if np.iscomplexobj(A) else float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("pfaffian needs a square matrix")
    if n % 2:
        return A.dtype.type(0)
    pf = A.dtype.type(1)
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return A.dtype.type(0)
        pf = pf * A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1].copy()
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def _complex_basis(I_s, tol=1e-8):
    """2n C-independent vectors e_a - i I_s e_a (coordinates on h_basis),
    selected greedily in index order."""
    m = I_s.shape[0]
    candidates = np.eye(m) - 1j * I_s
    chosen = []
    ortho = []
    for a in range(m):
        v = candidates[:, a]
        w = v.copy()
        for _ in range(2):
            for u in ortho:
                w = w - (u.conj() @ w) * u
        nw = np.linalg.norm(w)
        if nw < tol * np.linalg.norm(v):
            continue
        ortho.append(w / nw)
        chosen.append(v)
        if len(chosen) == m // 2:
            break
    return np.array(chosen).T


def mu_by_axis(frame):
    """The Pfaffian ratio Pf(Gamma_s)/Pf(gammahat_s) for s = 1, 2, 3."""
    Is = frame.complex_structures()
    ghat = frame.ghat
    out = []
    for s in range(3):
        j, k = (s + 1) % 3, (s + 2) % 3
        Z = _complex_basis(Is[s])
        # Gamma_s(X, Y) = G(J_j X, Y) + i G(J_k X, Y); h_basis is G-orthonormal
        flat = Is[j].T + 1j * Is[k].T
        hat = Is[j].T @ ghat + 1j * Is[k].T @ ghat
        P_flat = Z.T @ flat @ Z
        P_hat = Z.T @ hat @ Z
        pf_hat = pfaffian(0.5 * (P_hat - P_hat.T))
        if abs(pf_hat) == 0.0:
            raise PfaffianSingular("Pfaffian of the induced (2,0)-form vanishes")
        out.append(pfaffian(0.5 * (P_flat - P_flat.T)) / pf_hat)
    return np.array(out)


def compute_mu(frame, tol=MU_AXIS_TOL):
    ratios = mu_by_axis(frame)
    mu = ratios[0]
    scale = abs(mu)
    if abs(mu.imag) > tol * scale or mu.real <= 0:
        raise NonPositiveMu(f"calibration factor {mu:.6g} is not a positive real")
    spread = np.abs(ratios - mu).max() / scale
    if spread > tol:
        raise InconsistentCalibration(
            f"calibration factor depends on the axis (spread {spread:.3e})",
            {"mu_axis_spread": float(spread)})
    return float(mu.real)


def mu_determinant_oracle(frame):
    """det(G|_H)^(1/4) in a ghat-orthonormal basis of H."""
    E = frame.h_basis
    sign_g, logdet_g = np.linalg.slogdet(E @ E.T)
    sign_h, logdet_h = np.linalg.slogdet(frame.ghat)
    return float(np.exp(0.25 * (logdet_g - logdet_h)))


@dataclass(frozen=True)
class CalibratedFrame:
    base: object
    mu: float
    f: float
    g: np.ndarray
    r: np.ndarray
    S: float
    xi: np.ndarray
    S_by_axis: np.ndarray
    r_cross_dev: float
    cross_term: float

    @property
    def S_spread(self):
        return float(self.S_by_axis.max() - self.S_by_axis.min())

    @property
    def r_coords(self):
        return self.base.h_basis @ self.r

    def eta(self, A):
        return self.f * self.base.eta_hat(A)

    def qc_structure(self):
        b = self.base
        return QCStructure(b.p, b.h_basis, self.g, b.complex_structures(), self.f * b.reeb_dirs)


def calibrate(frame, tol=1e-8):
    n = frame.n
    mu = compute_mu(frame)
    f = mu ** (1.0 / (n + 2))
    g = f * frame.ghat
    E = frame.h_basis
    JN = frame.reeb_dirs
    ii_norm = float(np.abs(np.linalg.eigvalsh(frame.II)).max())
    coords = []
    for s in (1, 2, 3):
        JE = np.stack([apply_J(s, e) for e in E])
        rhs = frame.ii_matrix(JN[s - 1], JE)[0]  # II(J_s N, J_s e_a)
        coords.append(np.linalg.solve(g, rhs))
    lam_min = float(np.linalg.eigvalsh(g).min())
    scale_r = max(float(np.linalg.norm(coords[0])), ii_norm / lam_min)
    r_dev = max(float(np.linalg.norm(c - coords[0])) for c in coords) / scale_r
    r = coords[0] @ E
    grr = float(coords[0] @ g @ coords[0])
    IIJN = frame.II[:3, :3]
    S_axes = -2.0 * np.diag(IIJN) / f - 2.0 * grr
    off = IIJN - np.diag(np.diag(IIJN))
    cross = float(np.abs(off).max()) / ii_norm
    diagnostics = {"r_cross_dev": r_dev, "cross_term": cross,
                   "S_spread": float(S_axes.max() - S_axes.min())}
    if r_dev > tol:
        raise InconsistentCalibration(f"the three r candidates disagree ({r_dev:.3e})", diagnostics)
    if cross > tol:
        raise InconsistentCalibration(f"II(J_sN, J_tN) off-diagonal {cross:.3e}", diagnostics)
    if diagnostics["S_spread"] > tol * max(1.0, abs(S_axes.mean())):
        raise InconsistentCalibration(f"S depends on the axis ({diagnostics['S_spread']:.3e})",
                                      diagnostics)
    xi = np.stack([JN[s - 1] / f + apply_J(s, r) for s in (1, 2, 3)])
    return CalibratedFrame(frame, mu, f, g, r, float(S_axes.mean()), xi, S_axes, r_dev, cross)


def calibrated_frame(spec, p, tol_sp1=1e-8):
    return calibrate(hat_structure(spec, p, tol_sp1))


def f_at(spec, p):
    return calibrated_frame(spec, p).f


def f_ratio_check(spec, points, reference):
    """max_p |f(p)/ref(p) - c| / c with c the ratio at the first point."""
    ratios = np.array([f_at(spec, p) / reference(p) for p in points])
    c = ratios[0]
    return float(np.abs(ratios - c).max() / abs(c))


# --- finite differences along the surface -------------------------------------------


def _richardson(fun, h):
    """Central difference with one Richardson level; ``fun`` may be array-valued."""
    def central(step):
        return (fun(step) - fun(-step)) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def _check_step(h):
    if not 1e-4 <= h <= 1e-2:
        raise ValueError(f"finite-difference step {h} outside [1e-4, 1e-2]")


def _check_tangent(spec, p, X):
    jet = eval_jet2(spec, p)
    gn = np.linalg.norm(jet.grad)
    if abs(jet.grad @ X) > 1e-8 * gn * max(1.0, np.linalg.norm(X)):
        raise NotTangent("direction is not tangent to the surface")


def df_along(spec, p, X, h=1e-3):
    """Derivative of the calibrated conformal factor along a tangent vector,
    following the curve p + tX projected back onto the surface."""
    _check_step(h)
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_tangent(spec, p, X)
    return float(_richardson(lambda t: f_at(spec, project_to_surface(spec, p + t * X)), h))


def contact_forms(spec, p, calibrated=True):
    """Ambient representers (3, dim) of eta_s (or eta_hat_s) at p."""
    cf = calibrated_frame(spec, p)
    scale = cf.f if calibrated else 1.0
    return scale * cf.base.reeb_dirs


def d_eta(spec, p, vectors, calibrated=True, h=1e-3):
    """Finite-difference exterior derivative of the contact forms.

    Returns D with D[s, i, j] = d eta_s(v_i, v_j) for the given tangent
    vectors.  The forms are extended off the surface by composing with the
    projection, which leaves their pullback unchanged.
    """
    _check_step(h)
    p = np.asarray(p, dtype=float)
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    for v in V:
        _check_tangent(spec, p, v)
    derivs = []
    for v in V:
        derivs.append(_richardson(
            lambda t, v=v: contact_forms(spec, project_to_surface(spec, p + t * v), calibrated), h))
    # (D_v eta_s)(w) for all pairs
    Dvw = np.einsum("isd,jd->sij", np.array(derivs), V)
    return Dvw - np.swapaxes(Dvw, 1, 2)
