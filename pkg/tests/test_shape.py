import numpy as np
import pytest

from mems3d.fem.shape import FACE_NODES, NODE_REF_COORDS, face_rule, gauss_legendre, hex_rule, shape_eval, shape_functions


class TestShapeFunctions:
    def test_partition_of_unity(self, rng):
        pts = rng.uniform(-1, 1, (200, 3))
        n, dn = shape_functions(pts)
        assert np.abs(n.sum(axis=1) - 1).max() < 1e-14
        assert np.abs(dn.sum(axis=1)).max() < 1e-13

    def test_kronecker(self):
        n, _ = shape_functions(NODE_REF_COORDS)
        assert np.array_equal(n, np.eye(20))

    def test_gradients_match_differences(self, rng):
        xi = rng.uniform(-0.9, 0.9, 3)
        _, dn = shape_eval(xi)
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (shape_eval(xi + e)[0] - shape_eval(xi - e)[0]) / (2 * h)
            assert np.abs(fd - dn[:, j]).max() < 1e-9

    def test_reproduces_quadratics(self, rng):
        # serendipity space contains all complete quadratics
        coef = rng.normal(size=10)

        def f(p):
            x, y, z = p.T
            return coef @ np.array([np.ones_like(x), x, y, z, x * x, y * y, z * z, x * y, y * z, x * z])

        pts = rng.uniform(-1, 1, (50, 3))
        n, _ = shape_functions(pts)
        assert np.abs(n @ f(NODE_REF_COORDS) - f(pts)).max() < 1e-13


class TestQuadrature:
    def test_gauss_exact(self):
        x, w = gauss_legendre(3)
        assert w.sum() == pytest.approx(2.0)
        assert np.sum(w * x**4) == pytest.approx(2 / 5)

    def test_hex_volume(self):
        pts, w = hex_rule(3)
        assert len(pts) == 27 and w.sum() == pytest.approx(8.0)

    def test_face_rule_on_face(self):
        for f, nodes in enumerate(FACE_NODES):
            pts, w, _ = face_rule(f, 3)
            assert w.sum() == pytest.approx(4.0)
            axis = f // 2
            assert np.allclose(pts[:, axis], NODE_REF_COORDS[list(nodes), axis][0])
            assert len(nodes) == 8
