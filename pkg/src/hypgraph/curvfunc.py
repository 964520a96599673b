"""Admissible curvature functions f(lambda) and their structure conditions.

Every family here is a smooth function of the elementary symmetric
polynomials e_1..e_n of its argument. That lets the same code evaluate
f on a curvature vector and F(A) = f(eigenvalues(A)) on a symmetric
matrix without an eigen-solve: only the derivatives of e_j change
(restricted polynomials for vectors, Newton tensors for matrices).

Arrays are batched: a curvature vector argument may have shape (..., n).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import NotInCone, PreconditionViolated

__all__ = [
    "CurvatureFamily",
    "HkRoot",
    "Quotient",
    "Composite",
    "Mean",
    "parse_family",
    "elementary_symmetric",
    "elementary_symmetric_partials",
    "eval_f",
    "grad_f",
    "in_cone",
    "cone_margin",
    "concavity_gap",
    "weak_concavity_gap",
    "limit_condition",
]


def elementary_symmetric(lam, kmax=None):
    """Return e_0..e_kmax of the last axis of ``lam``, shape (..., kmax+1).

    Built one variable at a time: e_j <- e_j + x * e_{j-1}.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    kmax = n if kmax is None else kmax
    e = np.zeros(lam.shape[:-1] + (kmax + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i]
        for j in range(min(i + 1, kmax), 0, -1):
            e[..., j] = e[..., j] + x * e[..., j - 1]
    return e


def elementary_symmetric_partials(lam, kmax=None):
    """d e_j / d lam_i = e_{j-1}(lam with entry i removed); shape (..., n, kmax+1)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    kmax = n if kmax is None else kmax
    out = np.zeros(lam.shape[:-1] + (n, kmax + 1))
    for i in range(n):
        rest = np.delete(lam, i, axis=-1)
        e_rest = elementary_symmetric(rest, kmax)
        out[..., i, 1:] = e_rest[..., :kmax]
    return out


class CurvatureFamily:
    """A normalized, degree-one homogeneous, concave symmetric function.

    Subclasses define ``phi(e)`` and ``dphi(e)`` in terms of the
    elementary symmetric polynomials ``e`` (shape (..., n+1)).
    """

    n: int
    #: the cone is Gamma_k with k = cone_order
    cone_order: int

    def phi(self, e):
        raise NotImplementedError

    def dphi(self, e):
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.label()

    # convenience wrappers
    def __call__(self, lam):
        return eval_f(self, lam)

    def gradient(self, lam):
        return grad_f(self, lam)

    def contains(self, lam):
        return in_cone(self, lam)


def _check_n(n):
    if int(n) != n or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n!r}")


@dataclass(frozen=True, repr=False)
class HkRoot(CurvatureFamily):
    """f = H_k^(1/k), H_k = e_k / C(n, k)."""

    k: int
    n: int

    def __post_init__(self):
        _check_n(self.n)
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def cone_order(self):
        return self.k

    def phi(self, e):
        h = e[..., self.k] / comb(self.n, self.k)
        if self.k == 1:
            return h
        with np.errstate(invalid="ignore"):
            return np.power(h, 1.0 / self.k)

    def dphi(self, e):
        c = comb(self.n, self.k)
        h = e[..., self.k] / c
        out = np.zeros_like(e)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[..., self.k] = np.power(h, 1.0 / self.k - 1.0) / (self.k * c)
        return out

    def label(self):
        return "mean" if self.k == 1 else f"H{self.k}"

    def __repr__(self):
        return f"HkRoot(k={self.k}, n={self.n})"


def Mean(n):
    return HkRoot(1, n)


@dataclass(frozen=True, repr=False)
class Quotient(CurvatureFamily):
    """f = (H_k / H_l)^(1/(k-l)) with k > l >= 1."""

    k: int
    l: int  # noqa: E741
    n: int

    def __post_init__(self):
        _check_n(self.n)
        if not 1 <= self.l < self.k <= self.n:
            raise ValueError(
                f"need 1 <= l < k <= n, got k={self.k}, l={self.l}, n={self.n}"
            )

    @property
    def cone_order(self):
        return self.k

    def phi(self, e):
        q = (e[..., self.k] / comb(self.n, self.k)) / (e[..., self.l] / comb(self.n, self.l))
        with np.errstate(invalid="ignore"):
            return np.power(q, 1.0 / (self.k - self.l))

    def dphi(self, e):
        f = self.phi(e)
        d = self.k - self.l
        out = np.zeros_like(e)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[..., self.k] = f / (d * e[..., self.k])
            out[..., self.l] = -f / (d * e[..., self.l])
        return out

    def label(self):
        return f"H{self.k}/H{self.l}"

    def __repr__(self):
        return f"Quotient(k={self.k}, l={self.l}, n={self.n})"


@dataclass(frozen=True, repr=False)
class Composite(CurvatureFamily):
    """Weighted arithmetic mean of member families (weights normalized to sum 1)."""

    members: tuple
    weights: tuple = ()

    def __post_init__(self):
        if not self.members:
            raise ValueError("Composite needs at least one member")
        ns = {m.n for m in self.members}
        if len(ns) != 1:
            raise ValueError(f"members disagree on n: {sorted(ns)}")
        w = self.weights or (1.0,) * len(self.members)
        if len(w) != len(self.members) or min(w) <= 0:
            raise ValueError("weights must be positive, one per member")
        total = float(sum(w))
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "weights", tuple(float(x) / total for x in w))

    @property
    def n(self):
        return self.members[0].n

    @property
    def cone_order(self):
        return max(m.cone_order for m in self.members)

    def phi(self, e):
        return sum(wt * m.phi(e) for wt, m in zip(self.weights, self.members))

    def dphi(self, e):
        return sum(wt * m.dphi(e) for wt, m in zip(self.weights, self.members))

    def label(self):
        return "avg(" + ",".join(m.label() for m in self.members) + ")"

    def __repr__(self):
        return f"Composite({list(self.members)!r}, weights={self.weights})"


_ATOM = re.compile(r"^(?:H(\d+)(?:/H(\d+))?|mean)$", re.IGNORECASE)


def parse_family(text: str, n: int) -> CurvatureFamily:
    """Parse the compact CLI grammar: ``H2``, ``H2/H1``, ``mean``, ``avg(H1,H2/H1)``."""
    s = text.replace(" ", "")
    m = re.fullmatch(r"avg\((.*)\)", s, flags=re.IGNORECASE)
    if m:
        parts = [p for p in m.group(1).split(",") if p]
        if not parts:
            raise ValueError(f"empty composite in {text!r}")
        return Composite(tuple(parse_family(p, n) for p in parts))
    m = _ATOM.match(s)
    if not m:
        raise ValueError(f"cannot parse curvature family {text!r}")
    if s.lower() == "mean":
        return Mean(n)
    k = int(m.group(1))
    if m.group(2) is None:
        return HkRoot(k, n)
    return Quotient(k, int(m.group(2)), n)


def _as_lam(fam, lam):
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != fam.n:
        raise ValueError(f"expected {fam.n} curvatures, got shape {lam.shape}")
    return lam


def in_cone(fam: CurvatureFamily, lam):
    """Strict membership in the Garding cone Gamma_k (no tolerance)."""
    lam = _as_lam(fam, lam)
    e = elementary_symmetric(lam, fam.cone_order)
    return np.all(e[..., 1:] > 0, axis=-1)


def cone_margin(fam: CurvatureFamily, lam):
    """min_j e_j(lam) / C(n, j) over j <= k; positive iff strictly inside."""
    lam = _as_lam(fam, lam)
    k = fam.cone_order
    e = elementary_symmetric(lam, k)
    scale = np.array([comb(fam.n, j) for j in range(1, k + 1)], dtype=float)
    return np.min(e[..., 1:] / scale, axis=-1)


def _require_cone(fam, lam):
    ok = in_cone(fam, lam)
    if not np.all(ok):
        bad = np.asarray(lam)[~np.asarray(ok)] if np.ndim(ok) else np.asarray(lam)
        raise NotInCone(f"{fam.label()}: curvature vector outside cone, e.g. {bad.reshape(-1, fam.n)[0]}")


def eval_f(fam: CurvatureFamily, lam, check=True):
    lam = _as_lam(fam, lam)
    if check:
        _require_cone(fam, lam)
    e = elementary_symmetric(lam)
    val = fam.phi(e)
    return float(val) if np.ndim(val) == 0 else val


def grad_f(fam: CurvatureFamily, lam, check=True):
    """Analytic gradient (f_1, ..., f_n) via the chain rule through e_j."""
    lam = _as_lam(fam, lam)
    if check:
        _require_cone(fam, lam)
    e = elementary_symmetric(lam)
    de = elementary_symmetric_partials(lam)
    return np.einsum("...j,...ij->...i", fam.dphi(e), de)


def concavity_gap(fam: CurvatureFamily, lam, r: int) -> float:
    """sum_{i!=r} f_i lam_i^2 - (2 f |lam_r| + f_r lam_r^2) / (n-1) for lam_r < 0.

    ``r`` is a 0-based index.
    """
    lam = _as_lam(fam, lam)
    if lam.ndim != 1:
        raise ValueError("concavity_gap takes a single curvature vector")
    if not lam[r] < 0:
        raise PreconditionViolated(f"need lam[{r}] < 0, got {lam[r]}")
    f = eval_f(fam, lam)
    fi = grad_f(fam, lam)
    lhs = np.sum(np.delete(fi * lam**2, r))
    rhs = (2.0 * f * abs(lam[r]) + fi[r] * lam[r] ** 2) / (fam.n - 1)
    return float(lhs - rhs)


def weak_concavity_gap(fam: CurvatureFamily, lam, r: int) -> float:
    """sum_{i!=r} f_i lam_i^2 - (1/n) sum_i f_i lam_i^2 for lam_r < 0."""
    lam = _as_lam(fam, lam)
    if not lam[r] < 0:
        raise PreconditionViolated(f"need lam[{r}] < 0, got {lam[r]}")
    fi = grad_f(fam, lam)
    q = fi * lam**2
    return float(np.sum(np.delete(q, r)) - np.sum(q) / fam.n)


def limit_condition(fam: CurvatureFamily, delta: float, R: float) -> float:
    """min of f(lam_1, ..., lam_n + R) over the centre of B_delta(1) and its 2n axis points."""
    if not 0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 0.5)")
    if R < 0:
        raise ValueError("R must be nonnegative")
    n = fam.n
    pts = [np.ones(n)]
    if delta > 0:
        for i in range(n):
            for sgn in (1.0, -1.0):
                p = np.ones(n)
                p[i] += sgn * delta
                pts.append(p)
    pts = np.array(pts)
    pts[:, -1] += R
    return float(np.min(eval_f(fam, pts)))
