"""Grid construction, quadrature, differentiation and parity machinery."""

import numpy as np
import pytest

from dualmink.sphere import (
    build_grid,
    differentiate,
    fd_weights,
    get_operators,
    integrate,
    is_even,
    project_even,
    reduce_even_matrix,
)


class TestBuildGrid:
    def test_circle_nodes_and_weights(self, circle64):
        assert circle64.n_nodes == 64
        assert np.allclose(circle64.weights, 2 * np.pi / 64)
        theta = 2 * np.pi * np.arange(64) / 64
        assert np.allclose(circle64.nodes[:, 0], np.cos(theta), atol=1e-15)
        assert np.allclose(circle64.nodes[:, 1], np.sin(theta), atol=1e-15)

    def test_sphere_node_count_and_measure(self, sphere16):
        assert sphere16.n_nodes == 512
        assert abs(sphere16.weights.sum() - 4 * np.pi) <= 1e-12 * 4 * np.pi

    def test_weight_sums(self, circle64, sphere32):
        assert abs(circle64.weights.sum() - 2 * np.pi) <= 1e-12 * 2 * np.pi
        assert abs(sphere32.weights.sum() - 4 * np.pi) <= 1e-12 * 4 * np.pi

    @pytest.mark.parametrize("grid_name", ["circle64", "sphere16", "sphere32"])
    def test_antipode_involution_exact(self, grid_name, request):
        grid = request.getfixturevalue(grid_name)
        idx = np.arange(grid.n_nodes)
        assert np.all(grid.antipode[grid.antipode] == idx)
        assert np.all(grid.antipode != idx)
        # bit-exact negation by construction
        assert np.all(grid.nodes[grid.antipode] == -grid.nodes)

    def test_rejects_odd_circle(self):
        with pytest.raises(ValueError, match="even"):
            build_grid(1, 15)

    def test_rejects_small_resolutions(self):
        with pytest.raises(ValueError):
            build_grid(1, 8)
        with pytest.raises(ValueError):
            build_grid(2, (4, 32))
        with pytest.raises(ValueError):
            build_grid(2, (16, 31))

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            build_grid(3, 64)

    def test_deterministic(self):
        a = build_grid(2, (16, 32))
        b = build_grid(2, (16, 32))
        assert np.all(a.nodes == b.nodes) and np.all(a.weights == b.weights)


class TestIntegrate:
    def test_constant(self, circle64):
        assert abs(integrate(circle64, np.ones(64)) - 2 * np.pi) <= 1e-12

    def test_odd_mode_vanishes(self, circle64):
        assert abs(integrate(circle64, circle64.nodes[:, 0])) <= 1e-12

    def test_trig_polynomial_exactness(self, circle64, rng):
        # trapezoid on the periodic grid integrates degree <= N-1 exactly
        coeffs = rng.standard_normal(64)
        vals = np.full(64, coeffs[0])
        for k in range(1, 64):
            vals = vals + coeffs[k] * np.cos(k * circle64.theta + 0.3 * k)
        assert abs(integrate(circle64, vals) - 2 * np.pi * coeffs[0]) <= 1e-12 * max(
            1.0, abs(coeffs[0]))

    def test_second_moment_sphere(self, sphere16, sphere32):
        # closed-form moment of S^2, checked under refinement
        for grid in (sphere16, sphere32):
            val = integrate(grid, grid.nodes[:, 2] ** 2)
            assert abs(val - 4 * np.pi / 3) <= 1e-10

    def test_length_mismatch(self, circle64):
        with pytest.raises(ValueError):
            integrate(circle64, np.ones(63))


class TestDifferentiate:
    def test_constant_exactly_zero(self, circle64, sphere16):
        for grid in (circle64, sphere16):
            grad, hess, lap = differentiate(grid, np.ones(grid.n_nodes))
            assert np.all(grad == 0.0)
            assert np.all(hess == 0.0)
            assert np.all(lap == 0.0)

    @pytest.mark.parametrize("k", [1, 2, 7, 15])
    def test_circle_eigenfunctions(self, circle64, k):
        f = np.cos(k * circle64.theta)
        _, _, lap = differentiate(circle64, f)
        assert np.abs(lap + k**2 * f).max() <= 1e-9

    @pytest.mark.parametrize("l,expect", [(2, 6.0), (4, 20.0)])
    def test_sphere_eigenfunctions(self, sphere32, l, expect):
        from numpy.polynomial import legendre

        c = np.zeros(l + 1)
        c[l] = 1.0
        f = legendre.legval(np.cos(sphere32.theta), c)
        _, _, lap = differentiate(sphere32, f)
        assert np.abs(lap + expect * f).max() <= 1e-5

    def test_sphere_eigen_refinement_order(self, sphere16, sphere32):
        from numpy.polynomial import legendre

        errs = []
        for grid in (sphere16, sphere32):
            c = np.zeros(7)
            c[6] = 1.0
            f = legendre.legval(np.cos(grid.theta), c)
            _, _, lap = differentiate(grid, f)
            errs.append(np.abs(lap + 42.0 * f).max())
        order = np.log2(errs[0] / errs[1])
        assert order >= 2.0

    def test_circle_superalgebraic(self):
        errs = []
        for n in (16, 32):
            g = build_grid(1, n)
            f = np.exp(np.cos(g.theta))
            _, _, lap = differentiate(g, f)
            exact = (np.sin(g.theta) ** 2 - np.cos(g.theta)) * f
            errs.append(np.abs(lap - exact).max())
        assert errs[1] <= errs[0] / 16.0

    def test_laplacian_is_trace(self, sphere16, rng):
        v = rng.standard_normal(sphere16.n_nodes)
        _, hess, lap = differentiate(sphere16, v)
        assert np.all(lap == hess[:, 0, 0] + hess[:, 1, 1])

    def test_mixed_hessian_nonzonal(self, sphere32):
        # b_ij = h_ij + h d_ij vanishes identically on linear functions
        for axis in (0, 2):
            f = sphere32.nodes[:, axis]
            _, hess, _ = differentiate(sphere32, f)
            b = hess + f[:, None, None] * np.eye(2)
            assert np.abs(b).max() <= 1e-9

    def test_length_mismatch(self, circle64):
        with pytest.raises(ValueError):
            differentiate(circle64, np.ones(10))


class TestProjectEven:
    def test_odd_function_killed(self, circle64):
        out = project_even(circle64, circle64.nodes[:, 0])
        assert np.abs(out).max() <= 1e-16

    def test_even_function_unchanged(self, circle64):
        f = np.cos(2 * circle64.theta)
        f = project_even(circle64, f)
        assert np.all(project_even(circle64, f) == f)

    def test_linearity(self, circle64):
        t = circle64.theta
        out = project_even(circle64, 1.0 + np.cos(t) + np.cos(2 * t))
        expect = project_even(circle64, 1.0 + np.cos(2 * t))
        assert np.abs(out - expect).max() <= 1e-15

    def test_idempotent_bitwise(self, sphere16, rng):
        v = rng.standard_normal(sphere16.n_nodes)
        once = project_even(sphere16, v)
        assert np.all(project_even(sphere16, once) == once)
        assert is_even(sphere16, once)

    def test_antipodal_coherence(self, circle64, sphere16, rng):
        # differentiate-then-project agrees with project-then-differentiate
        for grid in (circle64, sphere16):
            v = rng.standard_normal(grid.n_nodes)
            _, _, lap_raw = differentiate(grid, v)
            a = project_even(grid, lap_raw)
            _, _, b = differentiate(grid, project_even(grid, v))
            assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(v).max())


class TestIntegrationByParts:
    def test_circle(self, circle64, rng):
        u = np.cos(2 * circle64.theta) + 0.3 * np.sin(5 * circle64.theta)
        v = np.sin(3 * circle64.theta) + 0.1
        gu, _, _ = differentiate(circle64, u)
        gv, _, lv = differentiate(circle64, v)
        lhs = integrate(circle64, u * lv)
        rhs = -integrate(circle64, np.sum(gu * gv, axis=1))
        assert abs(lhs - rhs) <= 1e-10

    def test_sphere(self, sphere32):
        x = sphere32.nodes
        u = x[:, 0] * x[:, 2] + 0.5 * x[:, 1] ** 2
        v = x[:, 2] ** 2 - x[:, 0] * x[:, 1]
        gu, _, _ = differentiate(sphere32, u)
        gv, _, lv = differentiate(sphere32, v)
        lhs = integrate(sphere32, u * lv)
        rhs = -integrate(sphere32, np.sum(gu * gv, axis=1))
        assert abs(lhs - rhs) <= 1e-6


class TestFdWeights:
    def test_uniform_second_order(self):
        w = fd_weights(np.array([-1.0, 0.0, 1.0]), 0.0, 2)
        assert np.allclose(w[1], [-0.5, 0.0, 0.5])
        assert np.allclose(w[2], [1.0, -2.0, 1.0])

    def test_polynomial_exactness(self, rng):
        x = np.sort(rng.standard_normal(7))
        w = fd_weights(x, x[3], 2)
        for p in range(5):
            vals = x**p
            d1 = p * x[3] ** (p - 1) if p >= 1 else 0.0
            d2 = p * (p - 1) * x[3] ** (p - 2) if p >= 2 else 0.0
            assert abs(w[1] @ vals - d1) <= 1e-9
            assert abs(w[2] @ vals - d2) <= 1e-8


class TestEvenReduction:
    def test_identity_reduces_to_identity(self, circle64):
        red = reduce_even_matrix(circle64, np.eye(64))
        assert np.allclose(red, np.eye(32))

    def test_spectrum_on_even_subspace(self, circle64):
        # eigenvalues of the reduced Laplacian are -k^2 for even k
        ops = get_operators(circle64)
        red = reduce_even_matrix(circle64, ops.hess_mats[(0, 0)])
        ev = np.sort(np.real(np.linalg.eigvals(red)))[::-1]
        for rank, k in enumerate([0, 2, 2, 4, 4]):
            assert abs(ev[rank] + k**2) <= 1e-8
