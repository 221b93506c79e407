"""Numerical verification batteries for the calibrated structure of a
qc-hypersurface.

Each battery evaluates a family of identities at sample points and returns a
:class:`BatteryResult` listing every check with its worst value and the
tolerance it is held to.  Derivatives of f and of the contact forms are taken
by finite differences along the surface, independently of the closed-form
quantities they are compared with.
"""

from dataclasses import dataclass, field

import numpy as np

from .calibration import calibrate, d_eta, df_along, mu_by_axis, mu_determinant_oracle
from .classify import (
    assemble_delta,
    delta_form,
    heisenberg_invariants,
    signature,
)
from .errors import NotJInvariant, QuadrupleViolation
from .frame import DEFAULT_TOL_SP1, hat_structure
from .quat import apply_J

FD_TOL = 1e-5
REEB_FD_TOL = 1e-4


@dataclass
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return bool(self.value < self.tol)


@dataclass
class BatteryResult:
    name: str
    checks: list = field(default_factory=list)
    skipped: bool = False
    note: str = ""

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def worst(self):
        """Largest residual among the checks (0 when skipped)."""
        return max((c.value for c in self.checks), default=0.0)

    def add(self, name, value, tol):
        self.checks.append(Check(name, float(value), tol))


def _frames(spec, points, tol_sp1):
    return [calibrate(hat_structure(spec, p, tol_sp1)) for p in points]


def mu_battery(spec, points, tol_sp1=DEFAULT_TOL_SP1, frames=None):
    """Pfaffian ratio vs determinant oracle, and independence of the axis."""
    frames = frames or _frames(spec, points, tol_sp1)
    res = BatteryResult("mu")
    oracle_dev = axis_dev = 0.0
    for cf in frames:
        oracle = mu_determinant_oracle(cf.base)
        oracle_dev = max(oracle_dev, abs(cf.mu - oracle) / oracle)
        ratios = mu_by_axis(cf.base)
        axis_dev = max(axis_dev, float(np.abs(ratios - ratios[0]).max() / abs(ratios[0])))
    res.add("mu_vs_determinant", oracle_dev, 1e-10)
    res.add("mu_axis_spread", axis_dev, 1e-10)
    return res


def einstein_battery(spec, points, tol_sp1=DEFAULT_TOL_SP1, frames=None, h=1e-3):
    """Identities (i)-(iv) for the second fundamental form and f, plus the
    calibrated metric relation on the whole tangent space."""
    frames = frames or _frames(spec, points, tol_sp1)
    delta = delta_form([assemble_delta(cf) for cf in frames], tol_const=np.inf).matrix
    res = BatteryResult("einstein")
    ii_h = delta_tm = ii_form = df_h = s_spread = cross = df_reeb = 0.0
    for p, cf in zip(points, frames):
        b = cf.base
        T = b.tangent_basis
        II = b.II
        f = cf.f
        # (i) II = -g/f on H, and Delta restricted to TM equals -f II
        ii_h = max(ii_h, float(np.abs(II[3:, 3:] + cf.g / f).max()))
        delta_tm = max(delta_tm, float(np.abs(T @ delta @ T.T + f * II).max()))
        # g(A_H, B_H) = -f II(A, B) - (S/2) sum eta_s(A) eta_s(B) on TM
        eta = f * (T @ b.reeb_dirs.T)  # eta_s(T_i)
        TH = (T - eta @ cf.xi) @ b.h_basis.T  # A_H = A - sum eta_s(A) xi_s on h_basis
        G_H = TH @ cf.g @ TH.T
        ii_form = max(ii_form, float(np.abs(G_H + f * II + 0.5 * cf.S * eta @ eta.T).max()))
        # (ii) df(X) = -f II(J_s N, J_s X) for X in H
        for X in b.h_basis:
            df = df_along(spec, p, X, h)
            for s in (1, 2, 3):
                pred = -f * b.ii(b.reeb_dirs[s - 1], apply_J(s, X))
                df_h = max(df_h, abs(df - pred))
        # (iii)
        s_spread = max(s_spread, cf.S_spread)
        IIJN = II[:3, :3]
        cross = max(cross, float(np.abs(IIJN - np.diag(np.diag(IIJN))).max()))
        # (iv) df vanishes on the vertical directions
        for s in (1, 2, 3):
            df_reeb = max(df_reeb, abs(df_along(spec, p, b.reeb_dirs[s - 1], h)),
                          abs(df_along(spec, p, cf.xi[s - 1], h)))
    res.add("(i) II_H + g/f", ii_h, 1e-8)
    res.add("(i) Delta_TM + f II", delta_tm, 1e-8)
    res.add("calibrated metric relation", ii_form, 1e-8)
    res.add("(ii) df(X) + f II(J_sN, J_sX)", df_h, FD_TOL)
    res.add("(iii) S spread over s", s_spread, 1e-8)
    res.add("(iii) II(J_sN, J_tN), s != t", cross, 1e-8)
    res.add("(iv) df(J_sN), df(xi_s)", df_reeb, FD_TOL)
    return res


def delta_battery(spec, points, tol_sp1=DEFAULT_TOL_SP1, frames=None, h=1e-3):
    """Constancy, J-invariance and quadruple structure of Delta, and the
    gradient identity Delta(N, A) = df(A)."""
    frames = frames or _frames(spec, points, tol_sp1)
    form = delta_form([assemble_delta(cf) for cf in frames], tol_const=np.inf)
    res = BatteryResult("delta")
    res.add("constancy_dev", form.constancy_dev, 1e-6)
    res.add("j_residual", form.j_residual, 1e-8)
    try:
        signature(form)
        res.add("quadruple_violation", 0.0, 0.5)
    except (QuadrupleViolation, NotJInvariant) as exc:  # report rather than abort
        res.add("quadruple_violation", 1.0, 0.5)
        res.note = str(exc)
    grad = 0.0
    for p, cf in zip(points, frames):
        b = cf.base
        for A in b.tangent_basis:
            grad = max(grad, abs(b.N @ form.matrix @ A - df_along(spec, p, A, h)))
    res.add("Delta(N, A) - df(A)", grad, FD_TOL)
    return res


def reeb_battery(spec, points, tol_sp1=DEFAULT_TOL_SP1, frames=None, h=1e-3):
    """(bi1): eta_t(xi_s) = delta_ts, (xi_s _| d eta_s)|_H = 0 and
    (xi_s _| d eta_t)|_H = -(xi_t _| d eta_s)|_H; also d eta_s = 2 g(I_s ., .) on H."""
    frames = frames or _frames(spec, points, tol_sp1)
    res = BatteryResult("reeb")
    duality = diag = anti = struct = 0.0
    for p, cf in zip(points, frames):
        b = cf.base
        pair = cf.f * (b.reeb_dirs @ cf.xi.T)  # [t, s] = eta_t(xi_s)
        duality = max(duality, float(np.abs(pair - np.eye(3)).max()))
        vecs = np.vstack([cf.xi, b.h_basis])
        D = d_eta(spec, p, vecs, calibrated=True, h=h)  # D[s, i, j]
        XiH = D[:, :3, 3:]  # d eta_s(xi_t, e_a) as [s, t, a]
        for s in range(3):
            diag = max(diag, float(np.abs(XiH[s, s]).max()))
            for t in range(3):
                if t != s:
                    anti = max(anti, float(np.abs(XiH[t, s] + XiH[s, t]).max()))
        Is = b.complex_structures()
        for s in range(3):
            omega = 2.0 * (Is[s].T @ cf.g)  # 2 g(I_s e_a, e_b)
            struct = max(struct, float(np.abs(D[s, 3:, 3:] - omega).max()))
    res.add("eta_t(xi_s) - delta_ts", duality, 1e-10)
    res.add("(xi_s _| d eta_s)|_H", diag, REEB_FD_TOL)
    res.add("(xi_s _| d eta_t + xi_t _| d eta_s)|_H", anti, REEB_FD_TOL)
    res.add("d eta_s - 2 omega_s on H", struct, REEB_FD_TOL)
    return res


def potentials_battery(spec, points, tol_sp1=DEFAULT_TOL_SP1, frames=None):
    """Degenerate case only: f l_0 constant and f^2 h affine in t_0..t_3."""
    frames = frames or _frames(spec, points, tol_sp1)
    form = delta_form([assemble_delta(cf) for cf in frames], tol_const=np.inf)
    res = BatteryResult("potentials")
    n = spec.n
    if signature(form) != (n, 0, 1):
        res.skipped = True
        res.note = "Delta is not degenerate"
        return res
    inv = heisenberg_invariants(spec, points, form, tol_sp1=tol_sp1)
    res.add("fl0_dev", inv["fl0_dev"], 1e-6)
    res.add("potential_fit_residual", inv["potential_fit_residual"], 1e-6)
    return res


BATTERIES = {
    "mu": mu_battery,
    "einstein": einstein_battery,
    "delta": delta_battery,
    "reeb": reeb_battery,
    "potentials": potentials_battery,
}


def run_batteries(spec, points, names=("all",), tol_sp1=DEFAULT_TOL_SP1):
    """Run the named batteries (or all) sharing one set of calibrated frames."""
    if "all" in names:
        names = tuple(BATTERIES)
    unknown = [n for n in names if n not in BATTERIES]
    if unknown:
        raise KeyError(f"unknown battery {unknown[0]!r}; choose from {', '.join(BATTERIES)} or all")
    frames = _frames(spec, points, tol_sp1)
    return [BATTERIES[n](spec, points, tol_sp1, frames=frames) for n in names]
