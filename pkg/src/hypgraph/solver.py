"""Finite-difference continuation solver for G(D2u, Du, u) = sigma, u = eps on the boundary.

The homotopy sigma_t = t sigma + (1 - t) starts from the horosphere
u = eps (an exact solution at t = 0) and is advanced by damped Newton
steps with admissibility backtracking.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import scalars
from .barrier import sphere_radii
from .curvfunc import CurvatureFamily
from .errors import ConeViolation, ContinuationStalled, LineSearchStalled, SingularJacobian
from .grid import GridDomain
from .linop import linearize_batch
from .shape import principal_curvatures

__all__ = [
    "ScalarField",
    "StepRecord",
    "ContinuationReport",
    "NewtonOptions",
    "assemble_residual",
    "assemble_jacobian",
    "newton_step",
    "newton_solve",
    "continue_in_t",
    "continue_in_eps",
    "field_diagnostics",
    "boundary_nu",
]

log = logging.getLogger(__name__)

CONE_MARGIN = 1e-8


@dataclass
class ScalarField:
    dom: GridDomain
    values: np.ndarray
    eps: float
    converged: bool = False

    def copy(self):
        return ScalarField(self.dom, self.values.copy(), self.eps, self.converged)

    def derivatives(self):
        return self.dom.derivatives(self.values, self.eps)


@dataclass
class NewtonOptions:
    tol: float = 1e-8
    max_iter: int = 30
    min_step: float = 2.0**-20
    cone_margin: float = CONE_MARGIN


@dataclass
class StepRecord:
    t: float
    sigma_t: float
    eps: float
    newton_iterations: int
    residual: float
    min_cone_margin: float
    max_w: float
    max_u_hess: float
    nu_boundary_min: float
    nu_boundary_max: float
    kappa_max: float
    M0: float


@dataclass
class ContinuationReport:
    family: str
    sigma: float
    eps: float
    domain: dict
    steps: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    success: bool = False
    message: str = ""

    @property
    def t_values(self):
        return [s.t for s in self.steps]

    @property
    def final(self):
        return self.steps[-1] if self.steps else None

    def to_dict(self):
        return {
            "family": self.family,
            "sigma": self.sigma,
            "eps": self.eps,
            "domain": self.domain,
            "success": self.success,
            "message": self.message,
            "steps": [asdict(s) for s in self.steps],
            "rejected": list(self.rejected),
        }


def _evaluate(U, dom, family, eps):
    Du, D2u = dom.derivatives(U, eps)
    with np.errstate(invalid="ignore", divide="ignore"):
        return linearize_batch(family, U, Du, D2u, check=False), Du, D2u


def _margin(family, e):
    k = family.cone_order
    n = family.n
    scale = np.array([math.comb(n, j) for j in range(1, k + 1)], dtype=float)
    return np.min(e[:, 1 : k + 1] / scale, axis=1)


def assemble_residual(u: ScalarField, dom: GridDomain, family: CurvatureFamily, sigma_t, check=True):
    """G at every unknown node minus sigma_t; raises ConeViolation on inadmissible nodes."""
    lin, _, _ = _evaluate(u.values, dom, family, u.eps)
    if check:
        bad = np.nonzero(~lin["cone_ok"] | ~(u.values > 0))[0]
        if len(bad):
            raise ConeViolation(f"{len(bad)} node(s) inadmissible", nodes=bad)
    return lin["G"] - sigma_t


def _jacobian_from(lin, dom):
    o = dom.ops
    Gst, Gs = lin["Gst"], lin["Gs"]
    J = (
        sp.diags(Gst[:, 0, 0]) @ o["xx"]
        + sp.diags(2.0 * Gst[:, 0, 1]) @ o["xy"]
        + sp.diags(Gst[:, 1, 1]) @ o["yy"]
        + sp.diags(Gs[:, 0]) @ o["x"]
        + sp.diags(Gs[:, 1]) @ o["y"]
        + sp.diags(lin["Gu"])
    )
    return J.tocsc()


def assemble_jacobian(u: ScalarField, dom: GridDomain, family: CurvatureFamily, check=True):
    """Sparse discretization of Gst d_s d_t + Gs d_s + Gu with the residual's stencils."""
    lin, _, _ = _evaluate(u.values, dom, family, u.eps)
    if check:
        bad = np.nonzero(~lin["cone_ok"])[0]
        if len(bad):
            raise ConeViolation(f"{len(bad)} node(s) outside the cone", nodes=bad)
    return _jacobian_from(lin, dom)


def _admissible(U, lin, family, margin):
    if not np.all(U > 0) or not np.all(lin["cone_ok"]):
        return False, -np.inf
    m = float(np.min(_margin(family, lin["e"])))
    return m >= margin, m


def newton_step(u: ScalarField, dom: GridDomain, family: CurvatureFamily, sigma_t, opts=None):
    """One damped Newton step; returns (u_next, report dict)."""
    opts = opts or NewtonOptions()
    lin, _, _ = _evaluate(u.values, dom, family, u.eps)
    ok, _ = _admissible(u.values, lin, family, 0.0)
    if not ok:
        raise ConeViolation("Newton step started from an inadmissible field")
    R = lin["G"] - sigma_t
    r0 = float(np.linalg.norm(R))
    J = _jacobian_from(lin, dom)
    try:
        with np.errstate(all="ignore"):
            delta = spla.splu(J).solve(-R)
    except RuntimeError as exc:
        raise SingularJacobian(str(exc)) from exc
    if not np.all(np.isfinite(delta)):
        raise SingularJacobian("non-finite Newton direction")
    step = 1.0
    while step >= opts.min_step:
        Un = u.values + step * delta
        lin_n, _, _ = _evaluate(Un, dom, family, u.eps)
        ok, margin = _admissible(Un, lin_n, family, opts.cone_margin)
        if ok:
            Rn = lin_n["G"] - sigma_t
            rn = float(np.linalg.norm(Rn))
            if rn < r0 or rn == 0.0:
                nxt = ScalarField(dom, Un, u.eps)
                return nxt, {
                    "step": step,
                    "residual_before": float(np.max(np.abs(R))),
                    "residual": float(np.max(np.abs(Rn))),
                    "step_norm": float(np.max(np.abs(step * delta))),
                    "min_cone_margin": margin,
                }
        step *= 0.5
    raise LineSearchStalled(f"no acceptable step down to {opts.min_step:g}")


def newton_solve(u: ScalarField, dom, family, sigma_t, opts=None):
    """Iterate newton_step until the residual max-norm drops below opts.tol."""
    opts = opts or NewtonOptions()
    cur = u
    history = []
    R = assemble_residual(cur, dom, family, sigma_t, check=False)
    res = float(np.max(np.abs(R)))
    if res <= opts.tol:
        cur = cur.copy()
        cur.converged = True
        return cur, history
    for _ in range(opts.max_iter):
        cur, rep = newton_step(cur, dom, family, sigma_t, opts)
        history.append(rep)
        if rep["residual"] <= opts.tol:
            cur.converged = True
            return cur, history
    raise LineSearchStalled(
        f"Newton did not reach {opts.tol:g} in {opts.max_iter} iterations "
        f"(residual {history[-1]['residual']:.3e})"
    )


# ---------------------------------------------------------------------------
# diagnostics


def _line_fit_derivative(s, v):
    """Derivative at s = 0 of the interpolating polynomial through (s_k, v_k)."""
    c = np.polyfit(s, v, len(s) - 1)
    return np.polyval(np.polyder(c), 0.0)


def boundary_nu(field: ScalarField, order=4):
    """Vertical normal component 1/w extrapolated to boundary intersection points.

    Along each axis arm cut by the boundary a one-sided polynomial through
    the boundary point (value eps) and ``order`` grid values gives the
    derivative along the arm; since u is constant on the boundary the
    gradient is normal, so |Du| = |d_arm u| / |n . arm|. Only arms within
    45 degrees of the normal are used.
    """
    dom = field.dom
    rows, dirs, pts = dom.boundary_arms()
    from .grid import _DIRS

    nrm = dom.shape.normal(pts)
    arm = _DIRS[dirs].astype(float)
    cosang = np.abs(np.sum(nrm * arm, axis=1))
    keep = cosang >= math.sqrt(0.5) - 1e-12
    out_pts, out_nu = [], []
    ix = dom.index
    for r, d, p, c in zip(rows[keep], dirs[keep], pts[keep], cosang[keep]):
        th = dom.theta[r, d] * dom.h
        i, j = dom.ij[r]
        di, dj = _DIRS[d]
        s = [0.0]
        vals = [field.eps]
        for m in range(order):
            ii, jj = i - m * dj, j - m * di
            if ii < 0 or jj < 0 or ii >= ix.shape[0] or jj >= ix.shape[1] or ix[ii, jj] < 0:
                break
            s.append(-(th + m * dom.h))
            vals.append(field.values[ix[ii, jj]])
        if len(s) < 2:
            continue
        der = _line_fit_derivative(np.array(s), np.array(vals))
        grad = abs(der) / c
        out_pts.append(p)
        out_nu.append(1.0 / math.sqrt(1.0 + grad * grad))
    return np.array(out_pts).reshape(-1, 2), np.array(out_nu)


def field_diagnostics(field: ScalarField, family: CurvatureFamily, sigma_t, sigma=None):
    """Estimate quantities on a field: w, u|D2u|, boundary nu, kappa_max, M0."""
    dom = field.dom
    lin, Du, D2u = _evaluate(field.values, dom, family, field.eps)
    w = lin["w"]
    kappa = principal_curvatures(lin["A"])
    hess_norm = np.max(np.abs(principal_curvatures(D2u)), axis=1)
    _, nu_b = boundary_nu(field)
    sig = sigma if sigma is not None else sigma_t
    s0 = scalars.sigma0()
    a = s0 + (sig - s0) / 2.0
    eta = 1.0 / w
    with np.errstate(divide="ignore"):
        ratio = kappa[:, -1] / (eta - a)
    iw = int(np.argmax(w))
    return {
        "residual": float(np.max(np.abs(lin["G"] - sigma_t))),
        "min_cone_margin": float(np.min(_margin(family, lin["e"]))),
        "max_w": float(w[iw]),
        "argmax_w_point": dom.points[iw].tolist(),
        "argmax_w_boundary_distance": float(-dom.shape.sdf(dom.points[iw])),
        "Gu_max": float(np.max(lin["Gu"])),
        "max_u_hess": float(np.max(field.values * hess_norm)),
        "nu_boundary_min": float(np.min(nu_b)) if len(nu_b) else float("nan"),
        "nu_boundary_max": float(np.max(nu_b)) if len(nu_b) else float("nan"),
        "kappa_max": float(np.max(kappa[:, -1])),
        "kappa_min": float(np.min(kappa[:, 0])),
        "M0": float(np.max(ratio)),
        "M0_a": a,
        "min_u": float(np.min(field.values)),
        "w": w,
        "kappa": kappa,
        "Du": Du,
    }


def _record(t, sigma_t, eps, iters, diag):
    return StepRecord(
        t=t,
        sigma_t=sigma_t,
        eps=eps,
        newton_iterations=iters,
        residual=diag["residual"],
        min_cone_margin=diag["min_cone_margin"],
        max_w=diag["max_w"],
        max_u_hess=diag["max_u_hess"],
        nu_boundary_min=diag["nu_boundary_min"],
        nu_boundary_max=diag["nu_boundary_max"],
        kappa_max=diag["kappa_max"],
        M0=diag["M0"],
    )


# ---------------------------------------------------------------------------
# continuation


def _check_sigma_eps(dom, sigma, eps):
    if not 0 < sigma < 1:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    # the inscribed equidistant sphere must exist
    sphere_radii(sigma, eps, dom.shape.r1, dom.shape.r2)


def continue_in_t(
    dom: GridDomain,
    family: CurvatureFamily,
    sigma,
    eps,
    dt0=0.1,
    dt_min=1e-4,
    opts=None,
    start=None,
):
    """March t from 0 to 1; returns (ScalarField, ContinuationReport)."""
    _check_sigma_eps(dom, sigma, eps)
    opts = opts or NewtonOptions()
    report = ContinuationReport(family.label(), sigma, eps, dom.describe())
    u = start if start is not None else ScalarField(dom, np.full(dom.size, float(eps)), eps, True)
    t, dt = 0.0, dt0
    easy = 0
    while t < 1.0:
        t_try = min(1.0, t + dt)
        sig_t = t_try * sigma + (1.0 - t_try)
        try:
            u_new, hist = newton_solve(u, dom, family, sig_t, opts)
        except (LineSearchStalled, SingularJacobian, ConeViolation) as exc:
            report.rejected.append({"t": t_try, "dt": dt, "reason": str(exc)})
            log.debug("rejected t=%.5f (dt=%.2e): %s", t_try, dt, exc)
            dt *= 0.5
            easy = 0
            if dt < dt_min:
                report.message = f"continuation stalled at t={t:.6f}"
                raise ContinuationStalled(report.message, report=report, field=u)
            continue
        t, u = t_try, u_new
        diag = field_diagnostics(u, family, sig_t, sigma)
        report.steps.append(_record(t, sig_t, eps, len(hist), diag))
        easy = easy + 1 if len(hist) <= 5 else 0
        if easy >= 2:
            dt = min(2 * dt, 1.0)
            easy = 0
    report.success = True
    report.message = "converged"
    return u, report


def continue_in_eps(dom, family, sigma, eps_schedule=None, opts=None, **kw):
    """Solve along a decreasing eps schedule, warm-starting each stage.

    Returns a list of (ScalarField, ContinuationReport); a failing stage
    ends the sequence (the partial list is returned, and the failure is in
    the last report's message).
    """
    if eps_schedule is None:
        eps_schedule = [0.04 * 2.0**-j for j in range(5)]
    eps_schedule = [float(e) for e in eps_schedule]
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    s0 = scalars.sigma0()
    if sigma <= s0:
        log.warning(
            "sigma=%.4f <= sigma0=%.6f: outside the range where uniform curvature bounds are known",
            sigma,
            s0,
        )
    out = []
    prev = None
    for eps in eps_schedule:
        try:
            if prev is None:
                u, rep = continue_in_t(dom, family, sigma, eps, opts=opts, **kw)
            else:
                u, rep = _warm_solve(dom, family, sigma, eps, prev, opts)
        except ContinuationStalled as exc:
            rep = exc.report
            rep.success = False
            out.append((exc.field, rep))
            break
        out.append((u, rep))
        prev = u
    return out


def _warm_solve(dom, family, sigma, eps, prev: ScalarField, opts):
    """Newton at t = 1 from the previous stage shifted to the new boundary value."""
    shifted = np.maximum(prev.values - (prev.eps - eps), 0.5 * eps)
    start = ScalarField(dom, shifted, eps)
    report = ContinuationReport(family.label(), sigma, eps, dom.describe())
    try:
        u, hist = newton_solve(start, dom, family, sigma, opts)
    except (LineSearchStalled, SingularJacobian, ConeViolation) as exc:
        report.rejected.append({"t": 1.0, "dt": 0.0, "reason": f"warm start: {exc}"})
        u, rep = continue_in_t(dom, family, sigma, eps, opts=opts)
        rep.rejected = report.rejected + rep.rejected
        return u, rep
    diag = field_diagnostics(u, family, sigma, sigma)
    report.steps.append(_record(1.0, sigma, eps, len(hist), diag))
    report.success = True
    report.message = "converged (warm start)"
    return u, report
