"""Pointwise geometry of a graph x_{n+1} = u(x) in the half-space model.

Functions accept batched inputs: ``Du`` of shape (..., n) and ``D2u`` of
shape (..., n, n). ``GraphPointState`` is the single-point bundle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonpositiveHeight

__all__ = [
    "GraphPointState",
    "gamma_upper",
    "gamma_lower",
    "euclidean_shape",
    "hyperbolic_shape_matrix",
    "hyperbolic_shape",
    "principal_curvatures",
    "jacobi_eigh",
    "split_pm",
    "symmetrize",
]


def symmetrize(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def _w(Du):
    Du = np.asarray(Du, dtype=float)
    return np.sqrt(1.0 + np.sum(Du * Du, axis=-1))


def gamma_upper(Du):
    """gamma^{ij} = delta_ij - u_i u_j / (w (1 + w))."""
    Du = np.asarray(Du, dtype=float)
    n = Du.shape[-1]
    w = _w(Du)[..., None, None]
    return np.eye(n) - Du[..., :, None] * Du[..., None, :] / (w * (1.0 + w))


def gamma_lower(Du):
    """gamma_{ij} = delta_ij + u_i u_j / (1 + w), the square root of g^e."""
    Du = np.asarray(Du, dtype=float)
    n = Du.shape[-1]
    w = _w(Du)[..., None, None]
    return np.eye(n) + Du[..., :, None] * Du[..., None, :] / (1.0 + w)


def euclidean_shape(Du, D2u):
    """A^e = (1/w) gamma^{ik} u_kl gamma^{lj}."""
    g = gamma_upper(Du)
    w = _w(Du)[..., None, None]
    return symmetrize(g @ np.asarray(D2u, dtype=float) @ g / w)


def hyperbolic_shape_matrix(u, Du, D2u):
    """Return (w, gamma^{ij}, A^e, A) with A = (I + u gamma D2u gamma) / w, batched."""
    u = np.asarray(u, dtype=float)
    Du = np.asarray(Du, dtype=float)
    n = Du.shape[-1]
    w = _w(Du)
    g = gamma_upper(Du)
    ae = symmetrize(g @ np.asarray(D2u, dtype=float) @ g / w[..., None, None])
    a = symmetrize(np.eye(n) / w[..., None, None] + u[..., None, None] * ae)
    return w, g, ae, a


# ---------------------------------------------------------------------------
# symmetric eigen-solvers


def _eig2(a):
    """Closed-form ascending eigenvalues of batched symmetric 2x2 matrices."""
    p, q, r = a[..., 0, 0], a[..., 0, 1], a[..., 1, 1]
    m = 0.5 * (p + r)
    rho = np.hypot(0.5 * (p - r), q)
    det = p * r - q * q
    big = np.where(m >= 0, m + rho, m - rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(big != 0, det / np.where(big != 0, big, 1.0), 0.0)
    lo = np.where(m >= 0, other, big)
    hi = np.where(m >= 0, big, other)
    # det/big can land one ulp past big at a double eigenvalue
    return np.stack([np.minimum(lo, hi), np.maximum(lo, hi)], axis=-1)


def jacobi_eigh(a, tol=None, max_sweeps=50):
    """Cyclic Jacobi eigen-decomposition of batched symmetric matrices.

    Returns ``(evals, evecs)`` with eigenvalues ascending and eigenvectors
    in the columns of ``evecs``.
    """
    a = symmetrize(a).copy()
    n = a.shape[-1]
    batch = a.shape[:-2]
    a = a.reshape((-1, n, n))
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    scale = np.maximum(np.sqrt(np.sum(a * a, axis=(-1, -2))), np.finfo(float).tiny)
    tol = np.finfo(float).eps if tol is None else tol
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2, axis=(-1, -2)))
        if np.all(off <= tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = np.abs(apq) > 0.1 * tol * scale
                if not np.any(active):
                    continue
                app, aqq = a[:, p, p], a[:, q, q]
                with np.errstate(divide="ignore", invalid="ignore"):
                    theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate columns p, q then rows p, q
                ap = a[:, :, p].copy()
                aq = a[:, :, q].copy()
                a[:, :, p] = c[:, None] * ap - s[:, None] * aq
                a[:, :, q] = s[:, None] * ap + c[:, None] * aq
                ap = a[:, p, :].copy()
                aq = a[:, q, :].copy()
                a[:, p, :] = c[:, None] * ap - s[:, None] * aq
                a[:, q, :] = s[:, None] * ap + c[:, None] * aq
                vp = v[:, :, p].copy()
                vq = v[:, :, q].copy()
                v[:, :, p] = c[:, None] * vp - s[:, None] * vq
                v[:, :, q] = s[:, None] * vp + c[:, None] * vq
    evals = np.diagonal(a, axis1=-2, axis2=-1).copy()
    order = np.argsort(evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return evals.reshape(batch + (n,)), v.reshape(batch + (n, n))


def principal_curvatures(a):
    """Ascending eigenvalues of symmetric matrices: closed form for n=2, Jacobi otherwise."""
    a = symmetrize(a)
    if a.shape[-1] == 1:
        return a[..., 0].copy()
    if a.shape[-1] == 2:
        return _eig2(a)
    return jacobi_eigh(a)[0]


def split_pm(a):
    """Return (|A|, A+, A-) with A = A+ - A-, from an eigen-decomposition with clamping."""
    a = symmetrize(a)
    lam, v = jacobi_eigh(a)
    vt = np.swapaxes(v, -1, -2)

    def rebuild(d):
        return symmetrize((v * d[..., None, :]) @ vt)

    return rebuild(np.abs(lam)), rebuild(np.maximum(lam, 0.0)), rebuild(np.maximum(-lam, 0.0))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphPointState:
    u: float
    Du: np.ndarray
    D2u: np.ndarray
    w: float
    gamma: np.ndarray
    A_e: np.ndarray
    A: np.ndarray
    kappa: np.ndarray
    kappa_e: np.ndarray = field(repr=False)

    @property
    def n(self):
        return len(self.Du)

    @property
    def nu_vertical(self):
        """Vertical component of the upward Euclidean unit normal, 1/w."""
        return 1.0 / self.w

    def first_fundamental_form(self):
        """g_ij = (delta_ij + u_i u_j) / u^2 (hyperbolic metric on the graph)."""
        return (np.eye(self.n) + np.outer(self.Du, self.Du)) / self.u**2

    def second_fundamental_form(self):
        """h_ij = (delta_ij + u_i u_j + u u_ij) / (u^2 w)."""
        return (np.eye(self.n) + np.outer(self.Du, self.Du) + self.u * self.D2u) / (
            self.u**2 * self.w
        )


def hyperbolic_shape(u, Du, D2u) -> GraphPointState:
    u = float(u)
    if not u > 0:
        raise NonpositiveHeight(f"height must be positive, got {u}")
    Du = np.asarray(Du, dtype=float).copy()
    D2u = symmetrize(np.asarray(D2u, dtype=float))
    w, g, ae, a = hyperbolic_shape_matrix(np.array(u), Du, D2u)
    return GraphPointState(
        u=u,
        Du=Du,
        D2u=D2u,
        w=float(w),
        gamma=g,
        A_e=ae,
        A=a,
        kappa=principal_curvatures(a),
        kappa_e=principal_curvatures(ae),
    )
