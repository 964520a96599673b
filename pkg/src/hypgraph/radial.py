"""Rotationally symmetric solutions on a ball: a two-point boundary value problem.

For u = u(r) the principal curvatures are

    kappa_1 = u u'' / w^3 + 1/w            (profile direction)
    kappa_t = u u' / (r w) + 1/w            (n - 1 tangential directions)

with w = sqrt(1 + u'^2); at r = 0, u'/r is replaced by u''(0).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .barrier import cap_through
from .curvfunc import CurvatureFamily, eval_f, grad_f, in_cone
from .errors import NewtonDiverged, NoCapInitializer, NotInCone

__all__ = ["RadialProfile", "radial_curvatures", "radial_residual", "solve_radial", "read_profile_csv"]


def radial_curvatures(u, up, upp, r):
    """(kappa_1, kappa_t) for scalar or array arguments."""
    u, up, upp, r = (np.asarray(v, dtype=float) for v in (u, up, upp, r))
    w = np.sqrt(1.0 + up * up)
    k1 = u * upp / w**3 + 1.0 / w
    with np.errstate(divide="ignore", invalid="ignore"):
        slope_over_r = np.where(r > 0, up / np.where(r > 0, r, 1.0), upp)
    kt = u * slope_over_r / w + 1.0 / w
    return k1, kt


def _kappa_vector(k1, kt, n):
    k1 = np.asarray(k1, dtype=float)
    kt = np.asarray(kt, dtype=float)
    return np.concatenate([k1[..., None], np.repeat(kt[..., None], n - 1, axis=-1)], axis=-1)


def radial_residual(u, up, upp, r, family: CurvatureFamily, sigma, n=None):
    """f(kappa_1, kappa_t, ..., kappa_t) - sigma."""
    n = family.n if n is None else n
    if n != family.n:
        raise ValueError("family dimension does not match n")
    k1, kt = radial_curvatures(u, up, upp, r)
    lam = _kappa_vector(k1, kt, n)
    if not np.all(in_cone(family, lam)):
        raise NotInCone(f"radial curvatures {lam} outside the cone")
    val = eval_f(family, lam) - sigma
    return float(val) if np.ndim(val) == 0 else val


@dataclass
class RadialProfile:
    r_nodes: np.ndarray
    u_values: np.ndarray
    sigma: float
    eps: float
    family: CurvatureFamily
    n: int
    history: list = field(default_factory=list)
    converged: bool = False

    @property
    def h(self):
        return float(self.r_nodes[1] - self.r_nodes[0])

    def slopes(self):
        """u' at the nodes: central inside, 0 at r = 0, one-sided 3-point at r_b."""
        u, h = self.u_values, self.h
        up = np.empty_like(u)
        up[0] = 0.0
        up[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        up[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
        return up

    def w(self):
        return np.sqrt(1.0 + self.slopes() ** 2)

    def boundary_nu(self):
        """1/w at r_b from a one-sided cubic through the last four nodes."""
        u, h = self.u_values, self.h
        up = (11 * u[-1] - 18 * u[-2] + 9 * u[-3] - 2 * u[-4]) / (6 * h)
        return 1.0 / math.sqrt(1.0 + up * up)

    def curvatures(self):
        u, h = self.u_values, self.h
        upp = np.empty_like(u)
        upp[0] = 2 * (u[1] - u[0]) / h**2
        upp[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        upp[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
        k1, kt = radial_curvatures(u, self.slopes(), upp, self.r_nodes)
        return _kappa_vector(k1, kt, self.n)

    def __call__(self, r):
        return np.interp(np.abs(r), self.r_nodes, self.u_values)

    def to_csv(self):
        header = {
            "sigma": self.sigma,
            "eps": self.eps,
            "family": self.family.label(),
            "n": self.n,
            "r_b": float(self.r_nodes[-1]),
            "mesh_size": len(self.r_nodes) - 1,
            "converged": self.converged,
        }
        buf = io.StringIO()
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        buf.write("r,u\n")
        for r, u in zip(self.r_nodes, self.u_values):
            buf.write(f"{r:.17g},{u:.17g}\n")
        return buf.getvalue()


def read_profile_csv(text):
    """Parse ``RadialProfile.to_csv`` output into (header dict, r array, u array)."""
    lines = text.splitlines()
    header = json.loads(lines[0][2:])
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[2:] if ln.strip()])
    return header, data[:, 0], data[:, 1]


def _discrete_derivs(U, eps, h):
    """u', u'' at nodes 0..m-1 with ghost u_{-1} = u_1 and u_m = eps."""
    full = np.append(U, eps)
    up = np.empty_like(U)
    upp = np.empty_like(U)
    up[0] = 0.0
    upp[0] = 2 * (full[1] - full[0]) / h**2
    up[1:] = (full[2:] - full[:-2]) / (2 * h)
    upp[1:] = (full[2:] - 2 * full[1:-1] + full[:-2]) / h**2
    return up, upp


def _residual_and_jacobian(U, eps, r, h, family, sig):
    n = family.n
    up, upp = _discrete_derivs(U, eps, h)
    k1, kt = radial_curvatures(U, up, upp, r)
    lam = _kappa_vector(k1, kt, n)
    ok = in_cone(family, lam) & (U > 0)
    if not np.all(ok):
        return None, None, lam
    F = eval_f(family, lam, check=False) - sig
    g = grad_f(family, lam, check=False)
    f1 = g[:, 0]
    ft = g[:, 1:].sum(axis=1)
    w = np.sqrt(1 + up * up)
    # partials of kappa_1 and kappa_t in (u, u', u'')
    k1_u = upp / w**3
    k1_p = -3 * U * upp * up / w**5 - up / w**3
    k1_pp = U / w**3
    rr = np.where(r > 0, r, 1.0)
    kt_u = np.where(r > 0, up / (rr * w), upp)
    kt_p = np.where(r > 0, U / (rr * w**3) - up / w**3, 0.0)
    kt_pp = np.where(r > 0, 0.0, U)
    d_u = f1 * k1_u + ft * kt_u
    d_p = f1 * k1_p + ft * kt_p
    d_pp = f1 * k1_pp + ft * kt_pp
    m = len(U)
    # banded storage: row 0 super-diagonal, row 1 diagonal, row 2 sub-diagonal
    ab = np.zeros((3, m))
    diag = d_u - 2 * d_pp / h**2
    lower = -d_p / (2 * h) + d_pp / h**2  # coefficient of u_{i-1}
    upper = d_p / (2 * h) + d_pp / h**2  # coefficient of u_{i+1}
    # node 0: u'' = 2 (u_1 - u_0)/h^2, u' = 0
    upper[0] = 2 * d_pp[0] / h**2
    ab[1] = diag
    ab[0, 1:] = upper[:-1]
    ab[2, :-1] = lower[1:]
    return F, ab, lam


def solve_radial(
    family: CurvatureFamily,
    sigma,
    eps,
    r_b=1.0,
    n=None,
    mesh_size=512,
    tol=1e-10,
    max_iter=50,
    sigma_fn=None,
    init=None,
):
    """Collocation + damped Newton for the radial problem, started from the cap.

    ``sigma_fn(r)`` optionally replaces the constant right-hand side
    (experimental forcing ramp for cross-validation runs).
    """
    n = family.n if n is None else n
    if n != family.n:
        raise ValueError("family dimension does not match n")
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if not eps > 0 or not r_b > 0:
        raise NoCapInitializer("need eps > 0 and r_b > 0 for the cap initializer")
    cap = cap_through(sigma, eps, r_b, center=(0.0,))
    if not cap.footprint_radius() > r_b:
        raise NoCapInitializer("cap initializer does not cover the ball")
    r = np.linspace(0.0, r_b, mesh_size + 1)
    h = r[1]
    U = cap.height(r[:-1, None]) if init is None else np.asarray(init(r[:-1]), dtype=float)
    sig = sigma if sigma_fn is None else np.asarray(sigma_fn(r[:-1]), dtype=float)
    history = []
    F, ab, lam = _residual_and_jacobian(U, eps, r[:-1], h, family, sig)
    if F is None:
        raise NewtonDiverged("initial profile is not admissible", history)
    res = float(np.max(np.abs(F)))
    history.append({"iteration": 0, "residual": res, "step": 0.0})
    it = 0
    while res > tol:
        it += 1
        if it > max_iter:
            raise NewtonDiverged(f"no convergence in {max_iter} iterations", history)
        delta = solve_banded((1, 1), ab, -F)
        # below ~1e3 ulp the residual is dominated by rounding in u'' (scale 1/h^2)
        if np.max(np.abs(delta)) <= 1e3 * np.finfo(float).eps * np.max(np.abs(U)):
            history[-1]["roundoff_floor"] = True
            break
        step = 1.0
        while True:
            Un = U + step * delta
            Fn, abn, _ = _residual_and_jacobian(Un, eps, r[:-1], h, family, sig)
            if Fn is not None and np.linalg.norm(Fn) < np.linalg.norm(F):
                break
            step *= 0.5
            if step < 2.0**-30:
                raise NewtonDiverged("line search failed", history)
        U, F, ab = Un, Fn, abn
        res = float(np.max(np.abs(F)))
        history.append({"iteration": it, "residual": res, "step": step})
    prof = RadialProfile(r, np.append(U, eps), sigma, eps, family, n, history, True)
    return prof
