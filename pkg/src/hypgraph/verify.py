"""Seeded property suite for the pointwise modules (curvfunc, shape, linop).

Every check draws its own SplitMix64 stream, derived from the run seed and
the check name, so adding or reordering checks never shifts another
check's samples. Results are plain dicts with ``worst`` (the extreme value
of the checked quantity), ``tol`` and ``pass``; the report is stable
byte-for-byte for a fixed seed.
"""

from __future__ import annotations

import json
import zlib

import numpy as np

from .curvfunc import (
    CurvatureFamily,
    elementary_symmetric,
    eval_f,
    grad_f,
    parse_family,
)
from .barrier import EquidistantSphere
from .linop import eval_F, linearize_batch
from .rng import SplitMix64, mix64
from .shape import (
    gamma_lower,
    gamma_upper,
    hyperbolic_shape_matrix,
    principal_curvatures,
    split_pm,
    symmetrize,
)

__all__ = ["shipped_families", "run_suite", "failures", "report_json", "sample_cone", "sample_states", "DEFAULT_SAMPLES"]

DEFAULT_SAMPLES = 10_000

_FAMILY_TEXT = {
    2: ["mean", "H2", "H2/H1", "avg(H1,H2/H1)"],
    3: ["mean", "H2", "H3", "H2/H1", "H3/H1", "H3/H2", "avg(H1,H2/H1)"],
    4: ["H2", "H3", "H4", "H3/H1", "H4/H2", "avg(H2,H3/H1)"],
}


def shipped_families():
    return [parse_family(t, n) for n, texts in _FAMILY_TEXT.items() for t in texts]


def _stream(seed, tag):
    return SplitMix64(int(mix64(np.uint64((seed + zlib.crc32(tag.encode())) & (2**64 - 1)))))


def _margin_ok(fam, lam):
    """min_j e_j(lam) >= 1e-3 (1 + |lam|^j) for j <= cone order."""
    k = fam.cone_order
    e = elementary_symmetric(lam, k)
    norm = np.linalg.norm(lam, axis=-1)
    need = 1e-3 * (1.0 + norm[..., None] ** np.arange(1, k + 1))
    return np.all(e[..., 1:] >= need, axis=-1)


def sample_cone(fam: CurvatureFamily, rng: SplitMix64, count, need_negative=False):
    """``count`` curvature vectors inside the cone with margin (rejection sampling)."""
    n = fam.n
    out = []
    got = 0
    while got < count:
        m = 4 * count
        lam = 2.0 * rng.normal((m, n)) + rng.uniform(0.0, 3.0, (m, 1))
        ok = _margin_ok(fam, lam)
        if need_negative:
            ok &= np.any(lam < 0, axis=-1)
        acc = lam[ok]
        out.append(acc)
        got += len(acc)
        if got == 0 and len(out) > 20:
            raise RuntimeError(f"{fam.label()}: cone sampler found no points")
    return np.concatenate(out)[:count]


def sample_states(fam: CurvatureFamily, rng: SplitMix64, count, grad_scale=0.8):
    """Admissible (u, Du, D2u) triples whose curvatures clear the margin."""
    n = fam.n
    us, dus, d2us = [], [], []
    got = 0
    while got < count:
        m = 4 * count
        u = rng.uniform(0.2, 2.0, m)
        Du = grad_scale * rng.normal((m, n))
        P = rng.normal((m, n, n))
        D2u = 0.5 * (P + np.swapaxes(P, -1, -2)) + rng.uniform(0.0, 2.0, (m, 1, 1)) * np.eye(n)
        D2u = D2u / u[:, None, None]
        _, _, _, a = hyperbolic_shape_matrix(u, Du, D2u)
        kap = principal_curvatures(a)
        ok = _margin_ok(fam, kap)
        us.append(u[ok])
        dus.append(Du[ok])
        d2us.append(D2u[ok])
        got += int(np.count_nonzero(ok))
    return (
        np.concatenate(us)[:count],
        np.concatenate(dus)[:count],
        np.concatenate(d2us)[:count],
    )


def _result(worst, tol, passed, samples, **extra):
    out = {"worst": float(worst), "tol": float(tol), "pass": bool(passed), "samples": int(samples)}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# curvature-function checks (on curvature vectors)


def check_family(fam: CurvatureFamily, seed, samples):
    tag = fam.label() + f"/n{fam.n}"
    res = {}
    n = fam.n

    ones = np.ones(n)
    val = eval_f(fam, ones)
    res["normalization"] = _result(abs(val - 1.0), 1e-14, abs(val - 1.0) <= 1e-14, 1)

    lam = sample_cone(fam, _stream(seed, tag + "/lam"), samples)
    f = eval_f(fam, lam)
    g = grad_f(fam, lam)

    res["monotonicity"] = _result(np.min(g), 0.0, np.min(g) > 0, samples)

    worst = 0.0
    for c in (0.5, 2.0, 10.0):
        rel = np.abs(eval_f(fam, c * lam) - c * f) / np.abs(c * f)
        worst = max(worst, float(np.max(rel)))
    res["homogeneity"] = _result(worst, 1e-12, worst <= 1e-12, samples)

    mu = sample_cone(fam, _stream(seed, tag + "/mu"), samples)
    gap = eval_f(fam, 0.5 * (lam + mu)) - 0.5 * (f + eval_f(fam, mu))
    res["midpoint_concavity"] = _result(np.min(gap), -1e-12, np.min(gap) >= -1e-12, samples)

    gap = np.mean(lam, axis=-1) - f
    res["f_below_mean"] = _result(np.min(gap), -1e-12, np.min(gap) >= -1e-12, samples)

    gap = np.sum(g, axis=-1) - 1.0
    res["gradient_sum_at_least_one"] = _result(np.min(gap), -1e-12, np.min(gap) >= -1e-12, samples)

    # central differences, step 1e-6, relative to |grad|
    step = 1e-6
    fd = np.empty_like(g)
    for i in range(n):
        d = np.zeros(n)
        d[i] = step
        fd[:, i] = (eval_f(fam, lam + d, check=False) - eval_f(fam, lam - d, check=False)) / (2 * step)
    rel = np.max(np.abs(fd - g), axis=-1) / np.linalg.norm(g, axis=-1)
    res["gradient_vs_fd"] = _result(np.max(rel), 1e-7, np.max(rel) <= 1e-7, samples)

    res["concavity_gap"] = _concavity_gap_check(fam, seed, samples, tag)
    return res


def _concavity_gap_check(fam, seed, samples, tag):
    if fam.cone_order >= fam.n:
        # the cone is the positive cone: the hypothesis lam_r < 0 is never met
        return {"worst": None, "tol": -1e-12, "pass": True, "samples": 0, "vacuous": True}
    lam = sample_cone(fam, _stream(seed, tag + "/neg"), samples, need_negative=True)
    n = fam.n
    f = eval_f(fam, lam)
    g = grad_f(fam, lam)
    q = g * lam**2
    total = np.sum(q, axis=-1)
    worst = np.inf
    weak = np.inf
    for r in range(n):
        neg = lam[:, r] < 0
        if not np.any(neg):
            continue
        lhs = total[neg] - q[neg, r]
        rhs = (2.0 * f[neg] * np.abs(lam[neg, r]) + q[neg, r]) / (n - 1)
        worst = min(worst, float(np.min(lhs - rhs)))
        weak = min(weak, float(np.min(lhs - total[neg] / n)))
    return _result(worst, -1e-12, worst >= -1e-12 and weak >= -1e-12, samples, weak_worst=weak)


# ---------------------------------------------------------------------------
# geometry checks (on graph states)


def check_geometry(seed, samples):
    res = {}
    rng = _stream(seed, "gamma")
    worst = 0.0
    for n in (2, 3, 4):
        Du = rng.normal((samples, n))
        Du *= (10.0 * rng.random((samples, 1))) / np.linalg.norm(Du, axis=-1, keepdims=True)
        prod = gamma_upper(Du) @ gamma_lower(Du)
        worst = max(worst, float(np.max(np.abs(prod - np.eye(n)))))
    res["gamma_inverse"] = _result(worst, 1e-12, worst <= 1e-12, samples)

    rng = _stream(seed, "split")
    worst = 0.0
    for n in (2, 3, 4):
        P = rng.normal((samples, n, n))
        A = symmetrize(P)
        absA, Ap, Am = split_pm(A)
        worst = max(
            worst,
            float(np.max(np.abs(Ap @ Am))),
            float(np.max(np.abs(A - Ap + Am))),
            float(np.max(np.abs(Ap + Am - absA))),
        )
    res["split_pm"] = _result(worst, 1e-12, worst <= 1e-12, samples)

    rng = _stream(seed, "cap")
    worst = 0.0
    for sigma in (0.3, 0.5, 0.8):
        s = EquidistantSphere((0.0, 0.0), 1.0, sigma)
        rad = 0.98 * s.footprint_radius() * np.sqrt(rng.random(100))
        ang = 2 * np.pi * rng.random(100)
        x = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        u, Du, D2u = s.derivatives(x)
        _, _, _, a = hyperbolic_shape_matrix(u, Du, D2u)
        worst = max(worst, float(np.max(np.abs(principal_curvatures(a) - sigma))))
    res["cap_umbilic"] = _result(worst, 1e-9, worst <= 1e-9, 300)
    return res


def check_states(fam: CurvatureFamily, seed, samples):
    tag = fam.label() + f"/n{fam.n}"
    u, Du, D2u = sample_states(fam, _stream(seed, tag + "/states"), samples)
    n = fam.n
    res = {}
    w, g, ae, a = hyperbolic_shape_matrix(u, Du, D2u)
    kap = principal_curvatures(a)
    kap_e = principal_curvatures(ae)
    err = np.max(np.abs(kap - (u[:, None] * kap_e + 1.0 / w[:, None])))
    res["curvature_relation"] = _result(err, 1e-11, err <= 1e-11, samples)

    comm = np.max(np.abs(a @ ae - ae @ a))
    res["shape_commute"] = _result(comm, 1e-12, comm <= 1e-12, samples)

    # curvatures are the eigenvalues of g^{-1} h for the hyperbolic fundamental forms
    pp = Du[:, :, None] * Du[:, None, :]
    gff = (np.eye(n) + pp) / (u**2)[:, None, None]
    hff = (np.eye(n) + pp + u[:, None, None] * D2u) / (u**2 * w)[:, None, None]
    weing = np.sort(np.linalg.eigvals(np.linalg.solve(gff, hff)).real, axis=-1)
    err = np.max(np.abs(weing - kap))
    res["fundamental_forms"] = _result(err, 1e-11, err <= 1e-11, samples)

    lin = linearize_batch(fam, u, Du, D2u)
    Gst, Gs, Gu, F = lin["Gst"], lin["Gs"], lin["Gu"], lin["Fij"]
    mu = principal_curvatures(Gst)
    fk = principal_curvatures(F)
    lower = np.min(u[:, None] * fk - w[:, None] * mu)
    upper = np.min(w[:, None] ** 3 * mu - u[:, None] * fk)
    worst = min(lower, upper)
    res["eigen_sandwich"] = _result(worst, -1e-10, worst >= -1e-10, samples, lower=float(lower), upper=float(upper))

    res["ellipticity"] = _result(np.min(mu), 0.0, np.min(mu) > 0, samples)

    tr = np.sum(Gst * D2u, axis=(-1, -2)) - u * Gu
    err = np.max(np.abs(tr))
    res["trace_identity"] = _result(err, 1e-10, err <= 1e-10, samples)

    fi = grad_f(fam, kap)
    lhs1 = np.sum(F * a, axis=(-1, -2)) - np.sum(fi * kap, axis=-1)
    lhs2 = np.sum(F * (a @ a), axis=(-1, -2)) - np.sum(fi * kap**2, axis=-1)
    err = max(float(np.max(np.abs(lhs1))), float(np.max(np.abs(lhs2))))
    res["dF_contractions"] = _result(err, 1e-10, err <= 1e-10, samples)

    # |Gs| <= G/w + (2/w) tr F + 2 sum f_i |kappa_i|
    bound = lin["G"] / w + 2.0 / w * np.trace(F, axis1=-2, axis2=-1) + 2.0 * np.sum(fi * np.abs(kap), axis=-1)
    slack = np.min(bound - np.linalg.norm(Gs, axis=-1))
    res["first_order_bound"] = _result(slack, 0.0, slack >= 0.0, samples)

    # directional finite difference of G in (D2u, Du, u)
    rng = _stream(seed, tag + "/dir")
    P = rng.normal((samples, n, n))
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    q = rng.normal((samples, n))
    r = rng.normal(samples)
    s = 1e-6

    def G_at(t):
        return linearize_batch(fam, u + t * r, Du + t * q, D2u + t * P, check=False)["G"]

    fd = (G_at(s) - G_at(-s)) / (2 * s)
    pred = np.sum(Gst * P, axis=(-1, -2)) + np.sum(Gs * q, axis=-1) + Gu * r
    scale = (
        np.linalg.norm(Gst, axis=(-1, -2)) * np.linalg.norm(P, axis=(-1, -2))
        + np.linalg.norm(Gs, axis=-1) * np.linalg.norm(q, axis=-1)
        + np.abs(Gu * r)
    )
    rel = np.max(np.abs(fd - pred) / scale)
    res["linearization_vs_fd"] = _result(rel, 1e-5, rel <= 1e-5, samples)

    # F^{ij} against finite differences of F along symmetric unit directions
    fd = np.empty_like(F)
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            d = (eval_F(fam, a + s * E, check=False) - eval_F(fam, a - s * E, check=False)) / (2 * s)
            if i != j:
                d = 0.5 * d
            fd[:, i, j] = fd[:, j, i] = d
    rel = np.max(np.abs(fd - F), axis=(-1, -2)) / np.linalg.norm(F, axis=(-1, -2))
    res["dF_vs_fd"] = _result(np.max(rel), 1e-6, np.max(rel) <= 1e-6, samples)

    # s -> G(D2u + s P) has nonpositive second difference
    hstep = 1e-3
    g0 = lin["G"]
    gp = linearize_batch(fam, u, Du, D2u + hstep * P, check=False)["G"]
    gm = linearize_batch(fam, u, Du, D2u - hstep * P, check=False)["G"]
    sec = (gp - 2 * g0 + gm) / hstep**2 / np.sum(P * P, axis=(-1, -2))
    valid = np.isfinite(sec)
    worst = float(np.max(sec[valid]))
    res["concavity_in_hessian"] = _result(worst, 1e-6, worst <= 1e-6, int(np.count_nonzero(valid)))
    return res


# ---------------------------------------------------------------------------


def run_suite(seed=42, samples=DEFAULT_SAMPLES, families=None):
    """Run every check; returns a nested dict with an overall ``pass`` flag."""
    families = shipped_families() if families is None else families
    report = {"seed": int(seed), "samples": int(samples), "families": {}, "geometry": check_geometry(seed, samples)}
    for fam in families:
        key = f"n{fam.n}:{fam.label()}"
        entry = check_family(fam, seed, samples)
        entry.update(check_states(fam, seed, samples))
        report["families"][key] = entry
    ok = all(c["pass"] for c in report["geometry"].values())
    ok &= all(c["pass"] for e in report["families"].values() for c in e.values())
    report["pass"] = bool(ok)
    return report


def failures(report):
    out = [f"geometry.{k}" for k, c in report["geometry"].items() if not c["pass"]]
    for fam, e in report["families"].items():
        out += [f"{fam}.{k}" for k, c in e.items() if not c["pass"]]
    return out


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"

