"""Closed-form scalar functions behind the uniform curvature bound.

phi(a) decides the admissible sigma range; gamma_y and phi_theta are the
coefficients whose positivity drives the interior curvature estimate.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import bisect

from .errors import BracketFailure, DomainError

__all__ = [
    "phi",
    "dphi",
    "sigma0",
    "gamma_y",
    "gamma_lower_bound",
    "phi_theta",
    "largest_theta",
    "verification_table",
]

SIGMA0_XTOL = 1e-14


def phi(a):
    a = np.asarray(a, dtype=float)
    val = 8.0 / 3.0 * a + 22.0 / 27.0 * a**3 - 5.0 / 27.0 * (a * a + 3.0) ** 1.5
    return float(val) if val.ndim == 0 else val


def dphi(a):
    a = np.asarray(a, dtype=float)
    val = 8.0 / 3.0 + 22.0 / 9.0 * a**2 - 5.0 / 9.0 * a * np.sqrt(a * a + 3.0)
    return float(val) if val.ndim == 0 else val


def sigma0(xtol=SIGMA0_XTOL) -> float:
    """The unique zero of phi in (0, 1), by bisection."""
    lo, hi = phi(0.0), phi(1.0)
    if not (lo < 0 < hi):
        raise BracketFailure(f"phi(0)={lo}, phi(1)={hi} do not bracket a root")
    return float(bisect(phi, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))


def _check_a(a):
    if not 0 < a < 1:
        raise DomainError(f"a must lie in (0, 1), got {a}")


def _check_y(y, a, closed=True):
    y = np.asarray(y, dtype=float)
    ok = (y > a) & ((y <= 1) if closed else (y < 1))
    if not np.all(ok):
        raise DomainError(f"y must lie in ({a}, 1], got {y[~ok].ravel()[:3]}")
    return y


def gamma_y(y, a):
    """gamma(y) = a - 2 (1 - y^2)(y - a) for y in (a, 1]."""
    _check_a(a)
    y = _check_y(y, a)
    val = a - 2.0 * (1.0 - y * y) * (y - a)
    return float(val) if val.ndim == 0 else val


def gamma_lower_bound(a):
    """(7/3) a - (4/27) a^3 - (4/27)(a^2+3)^(3/2), the minimum of gamma over y."""
    a = np.asarray(a, dtype=float)
    val = 7.0 / 3.0 * a - 4.0 / 27.0 * a**3 - 4.0 / 27.0 * (a * a + 3.0) ** 1.5
    return float(val) if val.ndim == 0 else val


def phi_theta(y, a, theta):
    """gamma(y) - (a - gamma(y)) / (4 (1 - theta)) + a^3."""
    if not 0 <= theta < 1:
        raise DomainError(f"theta must lie in [0, 1), got {theta}")
    g = np.asarray(gamma_y(y, a))
    val = g - (a - g) / (4.0 * (1.0 - theta)) + a**3
    return float(val) if val.ndim == 0 else val


def _y_grid(a, m):
    # open interval (a, 1)
    return a + (1.0 - a) * (np.arange(1, m + 1) / (m + 1))


def largest_theta(a, m=2000, tol=1e-12):
    """Largest theta in [0, 1) with min_y phi_theta(y) > 0 on a y-grid, or None.

    phi_theta decreases in theta, so the admissible set is an interval
    [0, theta*); theta* is found by bisection.
    """
    _check_a(a)
    ys = _y_grid(a, m)

    def worst(theta):
        return float(np.min(phi_theta(ys, a, theta)))

    if worst(0.0) <= 0:
        return None
    hi = 1.0 - 1e-12
    if worst(hi) > 0:
        return hi
    return float(bisect(worst, 0.0, hi, xtol=tol))


def verification_table(a_values=None, m_y=1000, m_a=10, theta_m=2000):
    """Grid checks of the scalar inequalities; returns a JSON-ready dict."""
    s0 = sigma0()
    if a_values is None:
        a_values = [s0 + 0.05, 0.6, 0.8]
    rows = []
    for a in a_values:
        ys = _y_grid(a, m_y)
        g = gamma_y(ys, a)
        lb = gamma_lower_bound(a)
        ph0 = phi_theta(ys, a, 0.0)
        th = largest_theta(a, m=theta_m)
        rows.append(
            {
                "a": a,
                "gamma_min_minus_bound": float(np.min(g) - lb),
                "bound_positive": bool(lb > 0) if a * a > 0.125 else None,
                "phi0_min_minus_phi_a": float(np.min(ph0) - phi(a)),
                "largest_theta": th,
            }
        )
    a_grid = np.linspace(np.sqrt(0.125) + 1e-6, 1.0 - 1e-9, m_a)
    slack = min(float(np.min(gamma_y(_y_grid(a, m_y), a) - gamma_lower_bound(a))) for a in a_grid)
    da = np.linspace(0.0, 1.0, 1001)
    return {
        "sigma0": s0,
        "phi_at_0": phi(0.0),
        "phi_at_1": phi(1.0),
        "dphi_min_on_unit_interval": float(np.min(dphi(da))),
        "gamma_bound_worst_slack": slack,
        "rows": rows,
    }
