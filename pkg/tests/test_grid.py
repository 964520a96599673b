import math

import numpy as np
import pytest

from hypgraph.grid import _DIRS, Disk, Ellipse, NodeClass, Stadium, build_grid, shape_from_spec

SHAPES = [Disk(1.0), Disk(0.7, (0.1, -0.2)), Ellipse(1.3, 0.8), Stadium(0.5, 0.6)]


def brute_sdf(shape, pts, m=20000):
    """Oracle: distance to a dense boundary sample, signed by the implicit inside test."""
    bp, _ = shape.boundary_points(m)
    d = np.min(np.linalg.norm(pts[:, None, :] - bp[None, :, :], axis=-1), axis=1)
    return np.where(shape.sdf(pts) < 0, -d, d)


class TestShapes:
    @pytest.mark.parametrize("shape", SHAPES, ids=repr)
    def test_sdf_against_dense_boundary(self, shape):
        x0, x1, y0, y1 = shape.bbox()
        rng = np.random.default_rng(0)
        pts = np.column_stack([rng.uniform(x0 - 0.2, x1 + 0.2, 300), rng.uniform(y0 - 0.2, y1 + 0.2, 300)])
        np.testing.assert_allclose(shape.sdf(pts), brute_sdf(shape, pts), atol=5e-4)

    @pytest.mark.parametrize("shape", SHAPES, ids=repr)
    def test_boundary_points_and_normals(self, shape):
        pts, nrm = shape.boundary_points(64)
        np.testing.assert_allclose(shape.sdf(pts), 0.0, atol=1e-10)
        np.testing.assert_allclose(shape.normal(pts), nrm, atol=1e-6)

    def test_disk_curvature_and_radii(self):
        d = Disk(0.5)
        np.testing.assert_allclose(d.boundary_curvature(32), 2.0, rtol=1e-5)
        assert d.r1 == 0.5 and math.isinf(d.r2)

    def test_ellipse_curvature(self):
        e = Ellipse(1.3, 0.8)
        k = e.boundary_curvature(400)
        # extreme curvatures of an ellipse: b/a^2 and a/b^2
        assert k.min() == pytest.approx(0.8 / 1.3**2, rel=1e-4)
        assert k.max() == pytest.approx(1.3 / 0.8**2, rel=1e-4)
        assert e.r1 == pytest.approx(0.8**2 / 1.3)

    def test_stadium_sdf(self):
        s = Stadium(0.5, 0.6)
        assert s.sdf(np.array([0.0, 0.0])) == pytest.approx(-0.6)
        assert s.sdf(np.array([1.1, 0.0])) == pytest.approx(0.0)
        assert s.sdf(np.array([0.3, 1.0])) == pytest.approx(0.4)

    def test_from_spec(self):
        for s in SHAPES:
            assert shape_from_spec(s.to_dict()) == s
        with pytest.raises(ValueError):
            shape_from_spec({"shape": "triangle"})


class TestGridDomain:
    @pytest.mark.parametrize("shape", SHAPES, ids=repr)
    def test_classification(self, shape):
        dom = build_grid(shape, 1 / 16)
        cls = dom.node_class[dom.ij[:, 0], dom.ij[:, 1]]
        interior = cls == NodeClass.INTERIOR
        # interior 9-point stencils stay within unknowns
        assert np.all(dom.neighbor[interior] >= 0)
        assert np.all(np.any(dom.neighbor[~interior] < 0, axis=1))
        assert np.all(shape.sdf(dom.points) < 0)
        assert np.all((dom.theta > 0) & (dom.theta <= 1))
        assert np.all(dom.theta[dom.neighbor >= 0] == 1)

    @pytest.mark.parametrize("shape", SHAPES, ids=repr)
    def test_cut_points_on_boundary(self, shape):
        dom = build_grid(shape, 1 / 16)
        rows, dirs = np.nonzero(dom.neighbor < 0)
        p = dom.points[rows] + (dom.theta[rows, dirs] * dom.h)[:, None] * _DIRS[dirs]
        np.testing.assert_allclose(shape.sdf(p), 0.0, atol=1e-12)

    def test_exterior_nodes_not_unknowns(self):
        dom = build_grid(Disk(1.0), 1 / 8)
        ext = dom.node_class == NodeClass.EXTERIOR
        assert np.all(dom.index[ext] == -1)
        assert dom.size == np.count_nonzero(~ext)

    @pytest.mark.parametrize("shape", [Disk(1.0), Ellipse(1.3, 0.8)], ids=repr)
    def test_quadratic_exactness(self, shape):
        # g vanishes on the boundary, so the boundary value is 0
        dom = build_grid(shape, 1 / 32)
        x, y = dom.points.T
        if isinstance(shape, Disk):
            a2, b2 = 1.0, 1.0
        else:
            a2, b2 = 1.3**2, 0.8**2
        U = 1 - x**2 / a2 - y**2 / b2
        Du, D2u = dom.derivatives(U, 0.0)
        np.testing.assert_allclose(Du, np.column_stack([-2 * x / a2, -2 * y / b2]), atol=1e-10)
        np.testing.assert_allclose(D2u[:, 0, 0], -2 / a2, atol=1e-8)
        np.testing.assert_allclose(D2u[:, 1, 1], -2 / b2, atol=1e-8)
        np.testing.assert_allclose(D2u[:, 0, 1], 0.0, atol=1e-8)

    def test_cut_cross_derivative_exact_on_cubics(self):
        dom = build_grid(Disk(1.0), 1 / 32)
        x, y = dom.points.T
        # (1 - x^2 - y^2)(x + 2y) vanishes on the circle; u_xy = -4x - 2y
        U = (1 - x * x - y * y) * (x + 2 * y)
        _, D2u = dom.derivatives(U, 0.0)
        ba = dom.boundary_adjacent
        np.testing.assert_allclose(D2u[ba, 0, 1], (-4 * x - 2 * y)[ba], atol=1e-7)

    def test_truncation_orders(self):
        errs = []
        for h in (1 / 16, 1 / 32, 1 / 64):
            dom = build_grid(Disk(1.0), h)
            x, y = dom.points.T
            g = 1 - x**2 - y**2
            e = np.exp(0.5 * x + 0.3 * y)
            Du, D2u = dom.derivatives(g * e, 0.0)
            ux = (-2 * x + 0.5 * g) * e
            uxx = (-2 - 2 * x + 0.25 * g) * e
            uxy = (-2 * y * 0.5 - 2 * x * 0.3 + 0.15 * g) * e
            ba = dom.boundary_adjacent
            errs.append(
                (
                    np.abs(Du[:, 0] - ux).max(),
                    np.abs(D2u[:, 0, 0] - uxx)[~ba].max(),
                    np.abs(D2u[:, 0, 1] - uxy)[~ba].max(),
                    np.abs(D2u[:, 0, 1] - uxy)[ba].max(),
                )
            )
        errs = np.array(errs)
        ratios = errs[:-1] / errs[1:]
        # second order everywhere, including the cubic fit for u_xy on cut stencils
        assert np.all(ratios[:, :3] > 3.5)
        assert np.all(ratios[:, 3] > 3.0)

    def test_describe_and_mean_convexity(self):
        dom = build_grid(Ellipse(1.3, 0.8), 1 / 16)
        d = dom.describe()
        assert d["mean_convex"] and d["unknowns"] == dom.size
        assert d["boundary_adjacent"] == int(np.count_nonzero(dom.boundary_adjacent))

    def test_to_grid(self):
        dom = build_grid(Disk(1.0), 1 / 8)
        g = dom.to_grid(np.arange(dom.size, dtype=float))
        assert np.nansum(g) == pytest.approx(dom.size * (dom.size - 1) / 2)
        assert np.isnan(g[0, 0])
