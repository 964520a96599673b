"""Planar domains and their Cartesian-grid discretization (n = 2).

A ``GridDomain`` holds the node classification, Shortley-Weller arm
offsets and the sparse difference operators. Every derivative is an
affine function of the unknown values: ``D @ U + b * eps``, where the
boundary vector ``b`` collects weights of boundary intersection points
(on which u = eps).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
import math

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Shape",
    "Disk",
    "Ellipse",
    "Stadium",
    "shape_from_spec",
    "NodeClass",
    "GridDomain",
    "build_grid",
]


def _bisect_segment(fn, p, q, iters=64):
    """Vectorized bisection for fn(p + s (q - p)) = 0, s in [0, 1]; fn(p) < 0 <= fn(q)."""
    lo = np.zeros(len(p))
    hi = np.ones(len(p))
    d = q - p
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        val = fn(p + mid[:, None] * d)
        inside = val < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


class Shape:
    """A bounded smooth planar domain given by a signed distance function."""

    #: maximal radius of interior touching circles
    r1: float
    #: maximal radius of exterior touching circles (inf for convex shapes)
    r2: float = math.inf

    def sdf(self, pts):
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def circumscribed(self):
        """(centre, radius) of a circle containing the closure of the domain."""
        raise NotImplementedError

    def boundary_points(self, m):
        """m points on the boundary and their outward unit normals."""
        raise NotImplementedError

    def normal(self, pts, step=1e-7):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        g = np.empty_like(pts)
        for k in range(2):
            e = np.zeros(2)
            e[k] = step
            g[:, k] = (self.sdf(pts + e) - self.sdf(pts - e)) / (2 * step)
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def boundary_curvature(self, m=256, step=1e-4):
        """Curvature of the boundary, div(grad sdf), sampled at m boundary points."""
        pts, _ = self.boundary_points(m)
        lap = -4.0 * self.sdf(pts)
        for e in (np.array([step, 0.0]), np.array([0.0, step])):
            lap = lap + self.sdf(pts + e) + self.sdf(pts - e)
        return lap / step**2

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Disk(Shape):
    radius: float = 1.0
    center: tuple = (0.0, 0.0)

    @property
    def r1(self):
        return self.radius

    def sdf(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.hypot(pts[..., 0] - self.center[0], pts[..., 1] - self.center[1]) - self.radius

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)

    def circumscribed(self):
        return np.array(self.center, dtype=float), self.radius

    def boundary_points(self, m):
        t = 2 * np.pi * np.arange(m) / m
        nrm = np.stack([np.cos(t), np.sin(t)], axis=1)
        return np.array(self.center) + self.radius * nrm, nrm

    def to_dict(self):
        return {"shape": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Ellipse(Shape):
    """Axis-aligned ellipse with semi-axes a (x) and b (y)."""

    a: float = 1.3
    b: float = 0.8
    center: tuple = (0.0, 0.0)

    @property
    def r1(self):
        lo, hi = sorted((self.a, self.b))
        return lo * lo / hi

    def sdf(self, pts):
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        x = np.abs(pts[..., 0] - self.center[0]).ravel()
        y = np.abs(pts[..., 1] - self.center[1]).ravel()
        a, b = self.a, self.b
        # closest point (a cos t, b sin t), t in [0, pi/2]; inside the evolute the
        # foot equation has several roots, so run Newton from a few starts and keep the nearest
        starts = np.concatenate([np.arctan2(a * y, b * x)[None], np.linspace(0.0, np.pi / 2, 7)[:, None] + 0 * x])
        t = starts
        for _ in range(40):
            c, s = np.cos(t), np.sin(t)
            g = (b * b - a * a) * c * s + a * x * s - b * y * c
            dg = (b * b - a * a) * (c * c - s * s) + a * x * c + b * y * s
            dg = np.where(np.abs(dg) < 1e-300, 1e-300, dg)
            t = np.clip(t - g / dg, 0.0, np.pi / 2)
        dist = np.min(np.hypot(x - a * np.cos(t), y - b * np.sin(t)), axis=0)
        inside = (x / a) ** 2 + (y / b) ** 2 < 1.0
        return np.where(inside, -dist, dist).reshape(shape)

    def bbox(self):
        cx, cy = self.center
        return (cx - self.a, cx + self.a, cy - self.b, cy + self.b)

    def circumscribed(self):
        return np.array(self.center, dtype=float), max(self.a, self.b)

    def boundary_points(self, m):
        t = 2 * np.pi * np.arange(m) / m
        pts = np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=1)
        nrm = np.stack([self.b * np.cos(t), self.a * np.sin(t)], axis=1)
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        return pts + np.array(self.center), nrm

    def to_dict(self):
        return {"shape": "ellipse", "a": self.a, "b": self.b, "center": list(self.center)}


@dataclass(frozen=True)
class Stadium(Shape):
    """Points within ``radius`` of the segment [-half_length, half_length] x {0}."""

    half_length: float = 0.5
    radius: float = 0.6
    center: tuple = (0.0, 0.0)

    @property
    def r1(self):
        return self.radius

    def sdf(self, pts):
        pts = np.asarray(pts, dtype=float)
        x = pts[..., 0] - self.center[0]
        y = pts[..., 1] - self.center[1]
        xc = np.clip(x, -self.half_length, self.half_length)
        return np.hypot(x - xc, y) - self.radius

    def bbox(self):
        cx, cy = self.center
        L, r = self.half_length, self.radius
        return (cx - L - r, cx + L + r, cy - r, cy + r)

    def circumscribed(self):
        return np.array(self.center, dtype=float), self.half_length + self.radius

    def boundary_points(self, m):
        L, r = self.half_length, self.radius
        perim = 4 * L + 2 * np.pi * r
        s = perim * np.arange(m) / m
        pts = np.zeros((m, 2))
        nrm = np.zeros((m, 2))
        for i, si in enumerate(s):
            if si < 2 * L:
                pts[i] = (-L + si, r)
                nrm[i] = (0, 1)
            elif si < 2 * L + np.pi * r:
                t = np.pi / 2 - (si - 2 * L) / r
                nrm[i] = (np.cos(t), np.sin(t))
                pts[i] = (L, 0) + r * nrm[i]
            elif si < 4 * L + np.pi * r:
                pts[i] = (L - (si - 2 * L - np.pi * r), -r)
                nrm[i] = (0, -1)
            else:
                t = -np.pi / 2 - (si - 4 * L - np.pi * r) / r
                nrm[i] = (np.cos(t), np.sin(t))
                pts[i] = (-L, 0) + r * nrm[i]
        return pts + np.array(self.center), nrm

    def to_dict(self):
        return {
            "shape": "stadium",
            "half_length": self.half_length,
            "radius": self.radius,
            "center": list(self.center),
        }


def shape_from_spec(spec: dict) -> Shape:
    spec = dict(spec)
    kind = spec.pop("shape", "disk").lower()
    if "center" in spec:
        spec["center"] = tuple(float(c) for c in spec["center"])
    cls = {"disk": Disk, "ellipse": Ellipse, "stadium": Stadium}.get(kind)
    if cls is None:
        raise ValueError(f"unknown domain shape {kind!r}")
    return cls(**spec)


class NodeClass(IntEnum):
    EXTERIOR = 0
    INTERIOR = 1
    BOUNDARY_ADJACENT = 2


# neighbour directions: E, W, N, S, NE, NW, SE, SW
_DIRS = np.array([(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)])


@dataclass
class GridDomain:
    shape: Shape
    h: float
    xs: np.ndarray
    ys: np.ndarray
    node_class: np.ndarray  # (ny, nx) of NodeClass
    index: np.ndarray  # (ny, nx) unknown index or -1
    ij: np.ndarray  # (N, 2) grid (row, col) of each unknown
    points: np.ndarray  # (N, 2)
    # per unknown and direction: fraction theta in (0, 1] of the arm length
    theta: np.ndarray  # (N, 8)
    neighbor: np.ndarray  # (N, 8) unknown index of neighbour, -1 for boundary point
    ops: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.points)

    @property
    def boundary_adjacent(self):
        return self.node_class[self.ij[:, 0], self.ij[:, 1]] == NodeClass.BOUNDARY_ADJACENT

    def derivatives(self, U, eps):
        """Du (N, 2) and D2u (N, 2, 2) of the unknown vector U with boundary value eps."""
        o = self.ops
        ux = o["x"] @ U + o["bx"] * eps
        uy = o["y"] @ U + o["by"] * eps
        uxx = o["xx"] @ U + o["bxx"] * eps
        uyy = o["yy"] @ U + o["byy"] * eps
        uxy = o["xy"] @ U + o["bxy"] * eps
        Du = np.stack([ux, uy], axis=1)
        D2u = np.empty((len(U), 2, 2))
        D2u[:, 0, 0] = uxx
        D2u[:, 1, 1] = uyy
        D2u[:, 0, 1] = D2u[:, 1, 0] = uxy
        return Du, D2u

    def boundary_arms(self):
        """(unknown index, direction index, boundary point) for axis arms cut by the boundary."""
        rows, dirs = np.nonzero((self.neighbor[:, :4] < 0))
        pts = self.points[rows] + (self.theta[rows, dirs] * self.h)[:, None] * _DIRS[dirs]
        return rows, dirs, pts

    def to_grid(self, U, fill=np.nan):
        out = np.full(self.node_class.shape, fill, dtype=float)
        out[self.ij[:, 0], self.ij[:, 1]] = U
        return out

    def mean_convexity(self, m=256):
        k = self.shape.boundary_curvature(m)
        return {"min_boundary_curvature": float(np.min(k)), "mean_convex": bool(np.min(k) >= -1e-6)}

    def describe(self):
        return {
            "domain": self.shape.to_dict(),
            "h": self.h,
            "unknowns": int(self.size),
            "boundary_adjacent": int(np.count_nonzero(self.boundary_adjacent)),
            "r1": self.shape.r1,
            "r2": self.shape.r2,
            **self.mean_convexity(),
        }


def build_grid(shape: Shape, h: float, inside_tol=1e-12) -> GridDomain:
    """Classify nodes of the lattice h Z^2 and assemble the difference operators."""
    x0, x1, y0, y1 = shape.bbox()
    i0, i1 = math.floor(x0 / h) - 1, math.ceil(x1 / h) + 1
    j0, j1 = math.floor(y0 / h) - 1, math.ceil(y1 / h) + 1
    xs = h * np.arange(i0, i1 + 1)
    ys = h * np.arange(j0, j1 + 1)
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X, Y], axis=-1)
    inside = shape.sdf(pts) < -inside_tol * h
    ny, nx = inside.shape
    cls = np.zeros((ny, nx), dtype=np.int8)
    index = -np.ones((ny, nx), dtype=np.int64)
    ij = np.argwhere(inside)
    index[ij[:, 0], ij[:, 1]] = np.arange(len(ij))
    N = len(ij)

    nb = -np.ones((N, 8), dtype=np.int64)
    theta = np.ones((N, 8))
    for d, (di, dj) in enumerate(_DIRS):
        # grid rows are y, columns x
        r = ij[:, 0] + dj
        c = ij[:, 1] + di
        inn = inside[r, c]
        nb[inn, d] = index[r[inn], c[inn]]
        cut = ~inn
        if np.any(cut):
            p = pts[ij[cut, 0], ij[cut, 1]]
            q = pts[r[cut], c[cut]]
            theta[cut, d] = _bisect_segment(shape.sdf, p, q)
    ba = np.any(nb < 0, axis=1)
    cls[ij[:, 0], ij[:, 1]] = np.where(ba, NodeClass.BOUNDARY_ADJACENT, NodeClass.INTERIOR)

    dom = GridDomain(
        shape=shape,
        h=h,
        xs=xs,
        ys=ys,
        node_class=cls,
        index=index,
        ij=ij,
        points=pts[ij[:, 0], ij[:, 1]],
        theta=theta,
        neighbor=nb,
    )
    dom.ops = _assemble_operators(dom)
    return dom


class _Builder:
    def __init__(self, N):
        self.N = N
        self.rows, self.cols, self.vals = [], [], []
        self.b = np.zeros(N)

    def add(self, rows, nbrs, vals):
        """Add weight ``vals`` of neighbour ``nbrs`` (boundary point if -1) to ``rows``."""
        rows = np.asarray(rows)
        nbrs = np.asarray(nbrs)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape)
        m = nbrs >= 0
        self.rows.append(rows[m])
        self.cols.append(nbrs[m])
        self.vals.append(vals[m])
        np.add.at(self.b, rows[~m], vals[~m])

    def matrix(self):
        r = np.concatenate(self.rows) if self.rows else np.zeros(0, int)
        c = np.concatenate(self.cols) if self.cols else np.zeros(0, int)
        v = np.concatenate(self.vals) if self.vals else np.zeros(0)
        return sp.csr_matrix((v, (r, c)), shape=(self.N, self.N))


def _lagrange_weights(offs):
    """First and second derivative weights at 0 for nodes at ``offs`` (M, k)."""
    M, k = offs.shape
    V = offs[:, None, :] ** np.arange(k)[None, :, None]  # (M, k, k): V[p, j] = x_j^p
    rhs1 = np.zeros((M, k))
    rhs1[:, 1] = 1.0
    rhs2 = np.zeros((M, k))
    rhs2[:, 2] = 2.0
    return np.linalg.solve(V, rhs1[..., None])[..., 0], np.linalg.solve(V, rhs2[..., None])[..., 0]


def _assemble_operators(dom: GridDomain) -> dict:
    N, h = dom.size, dom.h
    rows = np.arange(N)
    ops = {}
    # pure derivatives along each axis: central on full arms; on a cut arm a
    # Lagrange stencil through the boundary point, P and two nodes behind P
    # (three points when the second node is missing)
    for name, (dp, dm) in {"x": (0, 1), "y": (2, 3)}.items():
        first, second = _Builder(N), _Builder(N)
        for fwd, bwd in ((dp, dm), (dm, dp)):
            # rows whose `fwd` arm is cut (count each row once: prefer the shorter arm)
            cut_f = dom.neighbor[:, fwd] < 0
            cut_b = dom.neighbor[:, bwd] < 0
            if fwd == dm:
                sel = cut_f & (~cut_b | (dom.theta[:, fwd] < dom.theta[:, bwd]))
            else:
                sel = cut_f & (~cut_b | (dom.theta[:, fwd] <= dom.theta[:, bwd]))
            r = rows[sel]
            sgn = 1.0 if fwd == dp else -1.0
            a = dom.theta[r, fwd] * h
            b = dom.theta[r, bwd] * h
            nb1 = dom.neighbor[r, bwd]
            nb2 = np.where(nb1 >= 0, dom.neighbor[np.maximum(nb1, 0), bwd], -1)
            four = (nb1 >= 0) & (nb2 >= 0)
            for use4 in (True, False):
                m = four if use4 else ~four
                if not np.any(m):
                    continue
                offs = [a[m], np.zeros(m.sum()), -b[m]]
                ids = [np.full(m.sum(), -1), r[m], nb1[m]]
                if use4:
                    offs.append(-b[m] - h)
                    ids.append(nb2[m])
                offs = sgn * np.stack(offs, axis=1)
                w1, w2 = _lagrange_weights(offs)
                for k in range(offs.shape[1]):
                    first.add(r[m], ids[k], w1[:, k])
                    second.add(r[m], ids[k], w2[:, k])
        full = rows[(dom.neighbor[:, dp] >= 0) & (dom.neighbor[:, dm] >= 0)]
        first.add(full, dom.neighbor[full, dp], 0.5 / h)
        first.add(full, dom.neighbor[full, dm], -0.5 / h)
        second.add(full, dom.neighbor[full, dp], 1.0 / h**2)
        second.add(full, dom.neighbor[full, dm], 1.0 / h**2)
        second.add(full, full, -2.0 / h**2)
        ops[name], ops["b" + name] = first.matrix(), first.b
        ops[name * 2], ops["b" + name * 2] = second.matrix(), second.b

    # mixed derivative: 4-corner formula, cubic least-squares Taylor fit on cut stencils
    xy = _Builder(N)
    full = np.all(dom.neighbor >= 0, axis=1)
    fr = rows[full]
    for d, sgn in ((4, 1.0), (5, -1.0), (6, -1.0), (7, 1.0)):
        xy.add(fr, dom.neighbor[fr, d], sgn / (4 * h * h))
    cut = rows[~full]
    if len(cut):
        # cubic Taylor fit over the 5x5 block: the arm points (nodes or
        # boundary points) plus second-ring nodes; second order in h
        offs, ids = [], []
        for d in range(8):
            offs.append(dom.theta[cut, d][:, None] * _DIRS[d] * h)
            ids.append(dom.neighbor[cut, d])
        ring = [(di, dj) for di in range(-2, 3) for dj in range(-2, 3) if max(abs(di), abs(dj)) == 2]
        for di, dj in ring:
            r = dom.ij[cut, 0] + dj
            c = dom.ij[cut, 1] + di
            ok = (r >= 0) & (c >= 0) & (r < dom.index.shape[0]) & (c < dom.index.shape[1])
            idx = np.where(ok, dom.index[np.clip(r, 0, dom.index.shape[0] - 1), np.clip(c, 0, dom.index.shape[1] - 1)], -1)
            offs.append(np.broadcast_to(np.array([di, dj], dtype=float) * h, (len(cut), 2)))
            # -2 marks a missing sample (outside the domain, not a boundary point)
            ids.append(np.where(idx >= 0, idx, -2))
        off = np.stack(offs, axis=1)  # (M, 24, 2)
        ids = np.stack(ids, axis=1)
        dx, dy = off[..., 0] / h, off[..., 1] / h
        V = np.stack([dx, dy, dx * dx / 2, dx * dy, dy * dy / 2, dx**3, dx * dx * dy, dx * dy * dy, dy**3], axis=-1)
        V = np.where((ids == -2)[..., None], 0.0, V)
        wts = np.linalg.pinv(V)[:, 3, :] / (h * h)  # u_xy row, (M, 24)
        wts = np.where(ids == -2, 0.0, wts)
        for k in range(off.shape[1]):
            use = ids[:, k] != -2
            xy.add(cut[use], ids[use, k], wts[use, k])
        xy.add(cut, cut, -wts.sum(axis=1))
    ops["xy"], ops["bxy"] = xy.matrix(), xy.b
    return ops
