"""Equidistant spheres: exact constant-curvature graphs used as barriers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import OutsideFootprint

__all__ = [
    "Orientation",
    "EquidistantSphere",
    "cap_through",
    "cap_height",
    "sphere_radii",
    "reciprocal_radii",
    "angle_bounds",
    "barrier_audit",
]


class Orientation(Enum):
    LOWER = "lower"  # centre at height -sigma R, curvature w.r.t. the outward normal
    UPPER = "upper"  # centre at height +sigma R, curvature w.r.t. the inward normal


@dataclass(frozen=True)
class EquidistantSphere:
    center_horizontal: tuple
    R: float
    sigma: float
    orientation: Orientation = Orientation.LOWER

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")

    @property
    def center_height(self):
        s = -1.0 if self.orientation is Orientation.LOWER else 1.0
        return s * self.sigma * self.R

    @property
    def center(self):
        return np.append(np.asarray(self.center_horizontal, dtype=float), self.center_height)

    def footprint_radius(self):
        """Radius where the graph meets the ideal boundary x_{n+1} = 0."""
        return self.R * math.sqrt(1.0 - self.sigma**2)

    def slice_radius(self, height):
        """Radius of the n-ball cut out of the sphere by {x_{n+1} = height}."""
        d = height - self.center_height
        return math.sqrt(max(self.R**2 - d * d, 0.0))

    def height(self, x):
        return cap_height(self, x)

    def derivatives(self, x):
        """Analytic (u, Du, D2u) of the graph at horizontal points x, shape (..., n)."""
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.center_horizontal, dtype=float)
        rho2 = np.sum(d * d, axis=-1)
        s = np.sqrt(self.R**2 - rho2)
        n = d.shape[-1]
        if self.orientation is Orientation.LOWER:
            u = s - self.sigma * self.R
            sign = -1.0
        else:
            u = self.sigma * self.R - s
            sign = 1.0
        Du = sign * d / s[..., None]
        D2u = sign * (
            np.eye(n) / s[..., None, None] + d[..., :, None] * d[..., None, :] / (s**3)[..., None, None]
        )
        return u, Du, D2u

    def distance_slack(self, points):
        """|X - centre| - R for points X in R^{n+1}; negative means inside the ball."""
        p = np.asarray(points, dtype=float)
        return np.linalg.norm(p - self.center, axis=-1) - self.R


def cap_height(s: EquidistantSphere, x):
    """Height of the equidistant graph over x (lower branch for LOWER, as a graph for UPPER)."""
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(s.center_horizontal, dtype=float)
    rho2 = np.sum(d * d, axis=-1)
    foot2 = s.R**2 * (1.0 - s.sigma**2)
    if s.orientation is Orientation.LOWER:
        if np.any(rho2 >= foot2):
            raise OutsideFootprint("point outside the cap footprint")
        val = np.sqrt(s.R**2 - rho2) - s.sigma * s.R
    else:
        if np.any((rho2 <= foot2) | (rho2 > s.R**2)):
            raise OutsideFootprint("point outside the graph region of the upper sphere")
        val = s.sigma * s.R - np.sqrt(s.R**2 - rho2)
    return float(val) if np.ndim(val) == 0 else val


def cap_through(sigma, eps, radius, center=(0.0, 0.0)):
    """The LOWER cap with u = eps on the circle |x - center| = radius."""
    R = sphere_radii(sigma, eps, radius, math.inf)[0]
    return EquidistantSphere(tuple(center), R, sigma, Orientation.LOWER)


def sphere_radii(sigma, eps, r1, r2):
    """Positive roots of R1^2 = r1^2 + (R1 sigma + eps)^2, R2^2 = r2^2 + (R2 sigma - eps)^2."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if eps < 0 or not r1 > 0 or not r2 > 0:
        raise ValueError("need eps >= 0, r1 > 0, r2 > 0")
    c = 1.0 - sigma * sigma
    R1 = (sigma * eps + math.sqrt((sigma * eps) ** 2 + c * (r1 * r1 + eps * eps))) / c
    if math.isinf(r2):
        R2 = math.inf
    else:
        R2 = (-sigma * eps + math.sqrt((sigma * eps) ** 2 + c * (r2 * r2 + eps * eps))) / c
    return R1, R2


def reciprocal_radii(sigma, eps, r1, r2):
    """1/R1 and 1/R2 in the rationalized form; 1/R2 = 0 when r2 is infinite."""
    inv1 = (math.sqrt((1 - sigma**2) * r1**2 + eps**2) - eps * sigma) / (r1**2 + eps**2)
    if math.isinf(r2):
        inv2 = 0.0
    else:
        inv2 = (math.sqrt((1 - sigma**2) * r2**2 + eps**2) + eps * sigma) / (r2**2 + eps**2)
    return inv1, inv2


def angle_bounds(sigma, eps, r1, r2):
    """Envelope (lower, upper) for nu^{n+1} - sigma on the boundary."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    root = math.sqrt(1.0 - sigma * sigma)
    inv1 = 1.0 / r1
    inv2 = 0.0 if math.isinf(r2) else 1.0 / r2
    lower = -eps * root * inv2 - eps * eps * (1.0 + sigma) * inv2 * inv2
    upper = eps * root * inv1 + eps * eps * (1.0 - sigma) * inv1 * inv1
    return lower, upper


def barrier_audit(solution, dom, sigma, eps, m_boundary=64):
    """Height floor and sphere inclusion/exclusion checks at grid nodes.

    ``solution`` is a solver ScalarField (or anything with ``values``,
    ``converged``). Slacks are >= 0 when the check holds.
    """
    U = np.asarray(solution.values, dtype=float)
    pts = np.column_stack([dom.points, U])
    report = {"converged": bool(getattr(solution, "converged", False))}

    # (i) height floor
    report["height_floor_slack"] = float(np.min(U) - eps)

    # (ii) inclusion in the circumscribed sphere through the boundary circle at height eps
    c, rc = dom.shape.circumscribed()
    outer = cap_through(sigma, eps, rc, c)
    report["circumscribed_R"] = outer.R
    report["circumscribed_slack"] = float(-np.max(outer.distance_slack(pts)))

    # (iii) inscribed spheres at sampled boundary points are disjoint from the graph
    bp, nrm = dom.shape.boundary_points(m_boundary)
    r1, r2 = dom.shape.r1, dom.shape.r2
    R1, R2 = sphere_radii(sigma, eps, r1, r2)
    worst_in = math.inf
    for p, nv in zip(bp, nrm):
        s = EquidistantSphere(tuple(p - r1 * nv), R1, sigma, Orientation.LOWER)
        worst_in = min(worst_in, float(np.min(s.distance_slack(pts))))
    report["inscribed_slack"] = worst_in

    # (iv) exterior spheres; vacuous for convex domains
    if math.isinf(r2):
        report["exterior_slack"] = None
    else:
        worst_out = math.inf
        for p, nv in zip(bp, nrm):
            s = EquidistantSphere(tuple(p + r2 * nv), R2, sigma, Orientation.UPPER)
            worst_out = min(worst_out, float(np.min(s.distance_slack(pts))))
        report["exterior_slack"] = worst_out
    return report
