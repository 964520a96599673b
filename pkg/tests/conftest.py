"""Shared solves (expensive, so computed once per session) and the acceptance summary."""

import numpy as np
import pytest

from hypgraph.barrier import cap_through
from hypgraph.curvfunc import Mean, parse_family
from hypgraph.grid import Disk, Ellipse, build_grid
from hypgraph.solver import continue_in_eps, continue_in_t

ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


class _Cache:
    def __init__(self):
        self.store = {}

    def get(self, key, fn):
        if key not in self.store:
            self.store[key] = fn()
        return self.store[key]


@pytest.fixture(scope="session")
def solves():
    return _Cache()


def disk_solve(cache, sigma, eps, h, family="mean"):
    def run():
        dom = build_grid(Disk(1.0), h)
        u, rep = continue_in_t(dom, parse_family(family, 2), sigma, eps)
        return dom, u, rep

    return cache.get(("disk", family, sigma, eps, h), run)


def disk_schedule(cache, sigma, schedule, h):
    def run():
        dom = build_grid(Disk(1.0), h)
        return dom, continue_in_eps(dom, Mean(2), sigma, schedule)

    return cache.get(("schedule", sigma, tuple(schedule), h), run)


def ellipse_solve(cache, family, sigma=0.6, eps=0.02, h=1 / 32):
    def run():
        dom = build_grid(Ellipse(1.3, 0.8), h)
        u, rep = continue_in_t(dom, parse_family(family, 2), sigma, eps)
        return dom, u, rep

    return cache.get(("ellipse", family, sigma, eps, h), run)


def cap_error(dom, u, sigma, eps):
    cap = cap_through(sigma, eps, 1.0)
    return float(np.max(np.abs(u.values - cap.height(dom.points))))
