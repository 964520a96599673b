"""The operator G(D2u, Du, u) = F(A[u]) and its linearization.

``F^{ij}`` is built from Newton tensors T_{j-1}(A) = d e_j / dA, which are
polynomials in A and therefore smooth through repeated eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvfunc import CurvatureFamily
from .errors import NotInCone
from .shape import GraphPointState, hyperbolic_shape_matrix, principal_curvatures, symmetrize

__all__ = [
    "LinearizationAtPoint",
    "matrix_elementary_symmetric",
    "newton_tensors",
    "eval_F",
    "dF",
    "eval_G",
    "linearize",
    "linearize_batch",
    "eigen_sandwich_check",
]


def matrix_elementary_symmetric(a):
    """e_0..e_n of the eigenvalues of A via Newton's identities on tr(A^j)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    e = np.zeros(a.shape[:-2] + (n + 1,))
    e[..., 0] = 1.0
    p = np.zeros(a.shape[:-2] + (n + 1,))
    ak = np.broadcast_to(np.eye(n), a.shape).copy()
    for k in range(1, n + 1):
        ak = ak @ a
        p[..., k] = np.trace(ak, axis1=-2, axis2=-1)
    for k in range(1, n + 1):
        acc = np.zeros(a.shape[:-2])
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * e[..., k - i] * p[..., i]
        e[..., k] = acc / k
    return e


def newton_tensors(a, e=None):
    """T_0..T_{n-1} with T_j = sum_i (-1)^i e_{j-i} A^i; shape (..., n, n, n)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    if e is None:
        e = matrix_elementary_symmetric(a)
    eye = np.broadcast_to(np.eye(n), a.shape)
    t = np.zeros(a.shape[:-2] + (n, n, n))
    t[..., 0, :, :] = eye
    for j in range(1, n):
        # T_j = e_j I - A T_{j-1}
        t[..., j, :, :] = e[..., j, None, None] * eye - a @ t[..., j - 1, :, :]
    return t


def _cone_ok(fam, e):
    return np.all(e[..., 1 : fam.cone_order + 1] > 0, axis=-1)


def eval_F(fam: CurvatureFamily, a, check=True):
    """F(A) = f(eigenvalues(A))."""
    e = matrix_elementary_symmetric(symmetrize(a))
    if check and not np.all(_cone_ok(fam, e)):
        raise NotInCone(f"{fam.label()}: spectrum of A outside the cone")
    val = fam.phi(e)
    return float(val) if np.ndim(val) == 0 else val


def dF(fam: CurvatureFamily, a, check=True):
    """F^{ij}(A) = dF/da_ij, from the chain rule through Newton tensors."""
    a = symmetrize(a)
    e = matrix_elementary_symmetric(a)
    if check and not np.all(_cone_ok(fam, e)):
        raise NotInCone(f"{fam.label()}: spectrum of A outside the cone")
    t = newton_tensors(a, e)
    coeff = fam.dphi(e)[..., 1:]
    return symmetrize(np.einsum("...j,...jab->...ab", coeff, t))


@dataclass(frozen=True)
class LinearizationAtPoint:
    Gst: np.ndarray
    Gs: np.ndarray
    Gu: float
    Fij: np.ndarray

    def apply(self, d2v, dv, v):
        """Action of the linearized operator on a perturbation (D2v, Dv, v)."""
        return float(np.sum(self.Gst * d2v) + self.Gs @ dv + self.Gu * v)


def linearize_batch(fam: CurvatureFamily, u, Du, D2u, check=True):
    """Batched G, Gst, Gs, Gu, F^{ij} and the shape data at many points.

    Returns a dict of arrays; ``cone_ok`` flags points whose spectrum lies
    in the cone (values at other points are not meaningful).
    """
    u = np.asarray(u, dtype=float)
    Du = np.asarray(Du, dtype=float)
    w, g, ae, a = hyperbolic_shape_matrix(u, Du, D2u)
    e = matrix_elementary_symmetric(a)
    ok = _cone_ok(fam, e)
    if check and not np.all(ok):
        raise NotInCone(f"{fam.label()}: {np.count_nonzero(~ok)} point(s) outside the cone")
    with np.errstate(invalid="ignore", divide="ignore"):
        G = fam.phi(e)
        t = newton_tensors(a, e)
        Fij = symmetrize(np.einsum("...j,...jab->...ab", fam.dphi(e)[..., 1:], t))
    wb = w[..., None, None]
    Gst = symmetrize(u[..., None, None] / wb * (g @ Fij @ g))
    FA = np.sum(Fij * a, axis=(-1, -2))
    trF = np.trace(Fij, axis1=-2, axis2=-1)
    Gu = (FA - trF / w) / u

    # Gs: three-term formula
    #   -u_s/w^2 F:A - (2/w) F^{ij} a_ik (w u_k g^{sj} + u_j g^{ks}) / (1+w)
    #   + (2/w^2) F^{ij} u_i g^{sj}
    FAm = Fij @ a  # (FA)_{jk} = F^{ji} a_ik (F, A symmetric)
    t1 = -Du / (w * w)[..., None] * FA[..., None]
    # sum_{ijk} F_ij a_ik u_k g_sj = (g F A Du)_s
    part_a = np.einsum("...sj,...jk,...k->...s", g, FAm, Du)
    # sum_{ijk} F_ij a_ik u_j g_ks = (g (FA)^T Du)_s = (g A F Du)_s
    part_b = np.einsum("...ks,...jk,...j->...s", g, FAm, Du)
    t2 = -(2.0 / w)[..., None] * (w[..., None] * part_a + part_b) / (1.0 + w)[..., None]
    t3 = (2.0 / (w * w))[..., None] * np.einsum("...ij,...i,...sj->...s", Fij, Du, g)
    Gs = t1 + t2 + t3
    return {
        "G": G,
        "Gst": Gst,
        "Gs": Gs,
        "Gu": Gu,
        "Fij": Fij,
        "w": w,
        "A": a,
        "e": e,
        "cone_ok": ok,
    }


def eval_G(fam: CurvatureFamily, state: GraphPointState) -> float:
    return eval_F(fam, state.A)


def linearize(fam: CurvatureFamily, state: GraphPointState) -> LinearizationAtPoint:
    d = linearize_batch(fam, np.array(state.u), state.Du, state.D2u)
    return LinearizationAtPoint(Gst=d["Gst"], Gs=d["Gs"], Gu=float(d["Gu"]), Fij=d["Fij"])


def eigen_sandwich_check(fam: CurvatureFamily, state: GraphPointState):
    """Slacks of w mu_k <= u f_k <= w^3 mu_k (mu: eigenvalues of Gst, f: of F^{ij})."""
    lin = linearize(fam, state)
    mu = principal_curvatures(lin.Gst)
    fk = principal_curvatures(lin.Fij)
    uf = state.u * fk
    lower = float(np.min(uf - state.w * mu))
    upper = float(np.min(state.w**3 * mu - uf))
    return lower, upper
