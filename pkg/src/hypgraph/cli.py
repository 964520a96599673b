"""Command-line front end.

    hypgraph sigma0
    hypgraph verify --seed 42 --out runs/verify
    hypgraph solve --config configs/disk_mean.yaml --out runs/disk
    hypgraph radial --config configs/radial_h2.yaml
    hypgraph barriers --config configs/ellipse_h2.yaml

Exit status: 0 when every enabled check passes, 1 on a numerical failure
or a failed check (artifacts written so far are kept), 2 on a bad config.
Timestamps and the command line go to ``metadata.json``; every other
artifact is a deterministic function of the config and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, scalars
from .barrier import angle_bounds, barrier_audit, reciprocal_radii, sphere_radii
from .curvfunc import parse_family
from .errors import ConfigError, HypGraphError
from .grid import build_grid, shape_from_spec
from .radial import solve_radial
from .solver import ContinuationStalled, NewtonOptions, continue_in_eps, continue_in_t, field_diagnostics
from .verify import failures, report_json, run_suite

log = logging.getLogger("hypgraph")

COMMANDS = ("solve", "radial", "verify", "sigma0", "barriers")
CSV_COLUMNS = ("x", "y", "u", "w", "kappa1", "kappa2", "nu3")


@dataclass
class RunConfig:
    command: str = "solve"
    domain: dict = field(default_factory=lambda: {"shape": "disk", "radius": 1.0})
    family: str = "mean"
    n: int = 2
    sigma: float = 0.6
    eps: float = 0.02
    eps_schedule: list | None = None
    h: float = 1.0 / 64
    mesh_size: int = 2048
    r_b: float = 1.0
    tolerances: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    samples: int = 10_000
    seed: int = 42
    out: str | None = None

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if not 0 < self.sigma < 1:
            raise ConfigError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.eps_schedule is not None:
            sched = [float(e) for e in self.eps_schedule]
            if not sched or any(e <= 0 for e in sched):
                raise ConfigError("eps_schedule must be a nonempty list of positive values")
            if any(b >= a for a, b in zip(sched, sched[1:])):
                raise ConfigError("eps_schedule must be strictly decreasing")
            self.eps_schedule = sched
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.command == "solve" and self.n != 2:
            raise ConfigError("the grid solver is two-dimensional; use n = 2 or the radial command")
        if self.mesh_size < 8 or self.samples < 1:
            raise ConfigError("mesh_size must be >= 8 and samples >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            self.family_obj()
            shape_from_spec(self.domain)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def family_obj(self):
        return parse_family(self.family, self.n)

    def newton_options(self):
        t = self.tolerances
        return NewtonOptions(
            tol=float(t.get("newton", 1e-8)),
            max_iter=int(t.get("max_iter", 30)),
            cone_margin=float(t.get("cone_margin", 1e-8)),
        )


def load_config(path) -> dict:
    """Read a YAML (or JSON, a YAML subset) mapping."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return data


def make_config(command, raw: dict, seed=None, out=None) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    raw = dict(raw)
    if raw.get("command", command) != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
    raw["command"] = command
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out"] = out
    try:
        cfg = RunConfig(**raw)
        for name in ("sigma", "eps", "h", "r_b"):
            setattr(cfg, name, float(getattr(cfg, name)))
        for name in ("n", "mesh_size", "samples", "seed"):
            setattr(cfg, name, int(getattr(cfg, name)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


# ---------------------------------------------------------------------------
# artifact writers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(out: Path | None, name, text):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def field_csv(field_, family, sigma) -> str:
    """Rows x, y, u, w, kappa1, kappa2, nu3 at every unknown node."""
    diag = field_diagnostics(field_, family, sigma, sigma)
    w = diag["w"]
    k = diag["kappa"]
    pts = field_.dom.points
    lines = [",".join(CSV_COLUMNS)]
    for p, u, wi, (k1, k2) in zip(pts, field_.values, w, k):
        lines.append(f"{p[0]:.17g},{p[1]:.17g},{u:.17g},{wi:.17g},{k1:.17g},{k2:.17g},{1.0 / wi:.17g}")
    return "\n".join(lines) + "\n"


def _check(value, bound, ok, asserted=True, **extra):
    out = {"value": value, "bound": bound, "pass": bool(ok), "asserted": bool(asserted)}
    out.update(extra)
    return out


def solve_estimates(field_, dom, family, sigma, eps, checks=None):
    """Estimate checks for one converged field."""
    checks = checks or {}
    diag = field_diagnostics(field_, family, sigma, sigma)
    audit = barrier_audit(field_, dom, sigma, eps)
    lo, hi = angle_bounds(sigma, eps, dom.shape.r1, dom.shape.r2)
    dev_lo = diag["nu_boundary_min"] - sigma
    dev_hi = diag["nu_boundary_max"] - sigma
    ba = dom.boundary_adjacent
    iw = int(np.argmax(diag["w"]))
    gu_ok = diag["Gu_max"] <= 1e-12
    near = bool(ba[iw]) or diag["argmax_w_boundary_distance"] <= 2 * dom.h
    out = {
        "converged": audit["converged"],
        "gradient_bound": _check(diag["max_w"], (1.0 / sigma) * (1 + 1e-6), diag["max_w"] <= (1.0 / sigma) * (1 + 1e-6)),
        "height_floor": _check(diag["min_u"], eps - 1e-10, diag["min_u"] >= eps - 1e-10),
        "circumscribed_inclusion": _check(audit["circumscribed_slack"], -1e-9, audit["circumscribed_slack"] >= -1e-9),
        "inscribed_disjointness": _check(
            audit["inscribed_slack"], -1e-9, audit["inscribed_slack"] >= -1e-9, asserted=False
        ),
        "boundary_angle": _check(
            [dev_lo, dev_hi],
            [lo, hi],
            lo - 1e-12 <= dev_lo and dev_hi <= hi + 1e-12,
            asserted=bool(checks.get("boundary_angle", False)),
        ),
        "max_w_at_boundary": _check(
            diag["argmax_w_boundary_distance"], 2 * dom.h, near or not gu_ok, asserted=False, Gu_max=diag["Gu_max"]
        ),
        "kappa_max": diag["kappa_max"],
        "M0": diag["M0"],
        "M0_a": diag["M0_a"],
        "max_u_hess": diag["max_u_hess"],
        "residual": diag["residual"],
    }
    if audit["exterior_slack"] is not None:
        out["exterior_disjointness"] = _check(audit["exterior_slack"], -1e-9, audit["exterior_slack"] >= -1e-9, asserted=False)
    return out


def _all_pass(block):
    ok = True
    for v in block.values():
        if isinstance(v, dict) and "asserted" in v and v["asserted"]:
            ok &= v["pass"]
    return bool(ok)


# ---------------------------------------------------------------------------
# commands


def cmd_sigma0(cfg: RunConfig, out, quiet):
    s0 = scalars.sigma0()
    table = scalars.verification_table()
    bracket = 0.3703 < s0 < 0.3704
    rows_ok = all(
        r["phi0_min_minus_phi_a"] > 0 and r["largest_theta"] is not None and r["largest_theta"] > 0
        for r in table["rows"]
    )
    ok = bracket and rows_ok and table["gamma_bound_worst_slack"] > -1e-12
    table["pass"] = bool(ok)
    print(f"sigma0 {s0:.12f}")
    text = dumps(table)
    if not quiet:
        sys.stdout.write(text)
    _write(out, "sigma0.json", text)
    return 0 if ok else 1


def cmd_verify(cfg: RunConfig, out, quiet):
    report = run_suite(seed=cfg.seed, samples=cfg.samples)
    text = report_json(report)
    _write(out, "verify_report.json", text)
    bad = failures(report)
    if not quiet:
        print(f"verify seed={cfg.seed} samples={cfg.samples}: {'PASS' if report['pass'] else 'FAIL'}")
        for name in bad:
            print(f"  failed: {name}")
    if out is None and not quiet:
        sys.stdout.write(text)
    return 0 if report["pass"] else 1


def cmd_barriers(cfg: RunConfig, out, quiet):
    shape = shape_from_spec(cfg.domain)
    sigma = cfg.sigma
    schedule = cfg.eps_schedule or [cfg.eps]
    rows = []
    for eps in schedule:
        R1, R2 = sphere_radii(sigma, eps, shape.r1, shape.r2)
        inv1, inv2 = reciprocal_radii(sigma, eps, shape.r1, shape.r2)
        lo, hi = angle_bounds(sigma, eps, shape.r1, shape.r2)
        c, rc = shape.circumscribed()
        Rc = sphere_radii(sigma, eps, rc, math.inf)[0]
        rows.append(
            {
                "eps": eps,
                "R1": R1,
                "R2": R2,
                "reciprocal_mismatch_1": abs(1.0 / R1 - inv1),
                "reciprocal_mismatch_2": abs((0.0 if math.isinf(R2) else 1.0 / R2) - inv2),
                "angle_lower": lo,
                "angle_upper": hi,
                "circumscribed_center": list(c),
                "circumscribed_r": rc,
                "circumscribed_R": Rc,
            }
        )
    ok = all(r["reciprocal_mismatch_1"] <= 1e-12 and r["reciprocal_mismatch_2"] <= 1e-12 for r in rows)
    doc = {"domain": shape.to_dict(), "r1": shape.r1, "r2": shape.r2, "sigma": sigma, "rows": rows, "pass": ok}
    text = dumps(doc)
    _write(out, "barriers.json", text)
    if not quiet:
        sys.stdout.write(text)
    return 0 if ok else 1


def cmd_radial(cfg: RunConfig, out, quiet):
    fam = cfg.family_obj()
    schedule = cfg.eps_schedule or [cfg.eps]
    stages = []
    status = 0
    for j, eps in enumerate(schedule):
        try:
            prof = solve_radial(fam, cfg.sigma, eps, r_b=cfg.r_b, mesh_size=cfg.mesh_size, tol=float(cfg.tolerances.get("radial", 1e-10)))
        except HypGraphError as exc:
            stages.append({"eps": eps, "converged": False, "message": str(exc)})
            status = 1
            break
        w = prof.w()
        lo, hi = angle_bounds(cfg.sigma, eps, cfg.r_b, math.inf)
        nu = prof.boundary_nu()
        entry = {
            "eps": eps,
            "converged": prof.converged,
            "newton": prof.history,
            "max_w": float(np.max(w)),
            "min_u": float(np.min(prof.u_values)),
            "boundary_nu": nu,
            "gradient_bound": _check(float(np.max(w)), (1 / cfg.sigma) * (1 + 1e-8), np.max(w) <= (1 / cfg.sigma) * (1 + 1e-8)),
            "height_floor": _check(float(np.min(prof.u_values)), eps - 1e-10, np.min(prof.u_values) >= eps - 1e-10),
            "boundary_angle": _check(nu - cfg.sigma, [lo, hi], lo - 1e-12 <= nu - cfg.sigma <= hi + 1e-12, asserted=False),
        }
        stages.append(entry)
        name = "profile.csv" if len(schedule) == 1 else f"profile_{j}.csv"
        _write(out, name, prof.to_csv())
        if not _all_pass(entry):
            status = 1
    doc = {"family": fam.label(), "n": cfg.n, "sigma": cfg.sigma, "stages": stages, "pass": status == 0}
    text = dumps(doc)
    _write(out, "report.json", text)
    if not quiet:
        for s in stages:
            print(f"eps={s['eps']:.6g} converged={s['converged']} max_w={s.get('max_w', float('nan')):.10f}")
    return status


def cmd_solve(cfg: RunConfig, out, quiet):
    fam = cfg.family_obj()
    dom = build_grid(shape_from_spec(cfg.domain), cfg.h)
    opts = cfg.newton_options()
    status = 0
    if cfg.eps_schedule is None:
        try:
            fields = [continue_in_t(dom, fam, cfg.sigma, cfg.eps, opts=opts)]
        except ContinuationStalled as exc:
            exc.report.success = False
            fields = [(exc.field, exc.report)]
    else:
        fields = continue_in_eps(dom, fam, cfg.sigma, cfg.eps_schedule, opts=opts)
    reports, estimates = [], []
    for j, (u, rep) in enumerate(fields):
        reports.append(rep.to_dict())
        if not rep.success:
            status = 1
            continue
        u.converged = True
        est = solve_estimates(u, dom, fam, cfg.sigma, rep.eps, cfg.checks)
        est["eps"] = rep.eps
        est["pass"] = _all_pass(est)
        estimates.append(est)
        if not est["pass"]:
            status = 1
        name = "solution.csv" if len(fields) == 1 else f"solution_{j}.csv"
        _write(out, name, field_csv(u, fam, cfg.sigma))
    if cfg.eps_schedule is not None and len(fields) < len(cfg.eps_schedule):
        status = 1
    block = {"family": fam.label(), "sigma": cfg.sigma, "domain": dom.describe(), "stages": estimates}
    s0 = scalars.sigma0()
    if len(estimates) > 1:
        m0 = [e["M0"] for e in estimates]
        growth = [b / a for a, b in zip(m0, m0[1:])]
        asserted = cfg.sigma > s0 and bool(cfg.checks.get("m0_trend", True))
        block["M0_table"] = [{"eps": e["eps"], "M0": e["M0"], "kappa_max": e["kappa_max"]} for e in estimates]
        block["M0_trend"] = _check(max(growth), 1.1, max(growth) <= 1.1, asserted=asserted, growth=growth)
        if asserted and not block["M0_trend"]["pass"]:
            status = 1
    block["pass"] = status == 0
    _write(out, "report.json", dumps({"runs": reports}))
    _write(out, "estimates.json", dumps(block))
    if not quiet:
        for e in estimates:
            print(
                f"eps={e['eps']:.6g} max_w={e['gradient_bound']['value']:.8f} (<= {1 / cfg.sigma:.8f}) "
                f"min_u={e['height_floor']['value']:.6g} M0={e['M0']:.4f} pass={e['pass']}"
            )
        for r in reports:
            if not r["success"]:
                print(f"eps={r['eps']:.6g} FAILED: {r['message']}")
    return status


_DISPATCH = {
    "solve": cmd_solve,
    "radial": cmd_radial,
    "verify": cmd_verify,
    "sigma0": cmd_sigma0,
    "barriers": cmd_barriers,
}


def build_parser():
    p = argparse.ArgumentParser(prog="hypgraph", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="YAML or JSON run config")
    p.add_argument("--seed", type=int, metavar="U64", help="RNG seed for the property suite")
    p.add_argument("--out", metavar="DIR", help="output directory for artifacts")
    p.add_argument("--quiet", action="store_true", help="print only essential lines")
    return p


def run(cfg: RunConfig, quiet=False, argv=None) -> int:
    out = Path(cfg.out) if cfg.out else None
    if out is not None:
        meta = {
            "version": __version__,
            "started": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "argv": list(argv) if argv is not None else None,
            "config": dataclasses.asdict(cfg),
        }
        _write(out, "metadata.json", dumps(meta))
    try:
        return _DISPATCH[cfg.command](cfg, out, quiet)
    except HypGraphError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = make_config(args.command, raw, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, quiet=args.quiet, argv=argv)


if __name__ == "__main__":
    sys.exit(main())
