"""Geometry derivation, distances, normalization and reference bodies."""

import numpy as np
import pytest

from dualmink.body import (
    AnalyticBody,
    SupportFunction,
    analytic_support,
    diameter_union,
    evaluate_geometry,
    hausdorff_distance,
    l2_distance,
    normalize_body,
    radial_support_roundtrip,
)
from dualmink.io import body_from_doc, body_to_doc
from dualmink.sphere import build_grid, is_even


def unit_ball(grid):
    return SupportFunction(grid, np.ones(grid.n_nodes), even=True)


class TestSupportFunction:
    def test_rejects_nonpositive(self, circle64):
        vals = np.ones(64)
        vals[3] = -0.1
        with pytest.raises(ValueError, match="positive"):
            SupportFunction(circle64, vals)

    def test_rejects_false_even_flag(self, circle64):
        vals = 1.0 + 0.1 * circle64.nodes[:, 0]
        with pytest.raises(ValueError, match="even"):
            SupportFunction(circle64, vals, even=True)

    def test_length_check(self, circle64):
        with pytest.raises(ValueError):
            SupportFunction(circle64, np.ones(10))


class TestEvaluateGeometry:
    def test_unit_ball(self, circle64, sphere16):
        for grid in (circle64, sphere16):
            geom = evaluate_geometry(unit_ball(grid))
            assert geom.valid
            assert np.abs(geom.boundary - grid.nodes).max() <= 1e-14
            assert np.abs(geom.rho_at_normal - 1.0).max() <= 1e-14
            eye = np.eye(grid.dim)
            assert np.abs(geom.b - eye).max() <= 1e-12
            assert np.abs(geom.kappa - 1.0).max() <= 1e-12

    def test_translated_ball_curvature(self, circle256, sphere32):
        # translation h -> h + <x, v> leaves curvature untouched
        for grid, v in ((circle256, [0.3, 0.0]), (sphere32, [0.2, 0.1, 0.15])):
            shift = grid.nodes @ np.asarray(v)
            geom = evaluate_geometry(SupportFunction(grid, 1.0 + shift))
            assert geom.valid
            assert np.abs(geom.kappa - 1.0).max() <= 1e-8

    def test_ellipse_curvature_identity(self, circle64):
        # radius of curvature of the ellipse: h'' + h = a^2 b^2 / h^3
        a, b = 1.2, 1.0
        h = analytic_support(AnalyticBody.ellipsoid(a, b), circle64)
        geom = evaluate_geometry(h)
        assert np.abs(geom.sigma_n - (a * b) ** 2 / h.values**3).max() <= 1e-10

    def test_sigma_consistency(self, sphere16, rng):
        from dualmink.verify import random_even_body

        geom = evaluate_geometry(random_even_body(sphere16, rng, 0.15))
        assert np.abs(geom.sigma1 - geom.radii.sum(axis=1)).max() <= 1e-10
        assert np.abs(geom.sigma_n - geom.radii.prod(axis=1)).max() <= \
            1e-10 * np.abs(geom.sigma_n).max()

    def test_nonconvex_flagged_not_raised(self, circle64):
        h = SupportFunction(circle64, 1.0 + 0.6 * np.cos(2 * circle64.theta))
        geom = evaluate_geometry(h)
        assert not geom.valid
        assert geom.min_radius <= 0.0

    def test_radial_sandwich(self, circle64, sphere16, sphere32):
        # node-sampled extremes carry O(spacing^2) slack when the continuum
        # extremum of h falls between nodes
        ell1 = analytic_support(AnalyticBody.ellipsoid(1.3, 1.0), circle64)
        geom = evaluate_geometry(ell1)
        assert geom.rho_at_normal.min() >= geom.h.min() - 1e-10
        assert geom.rho_at_normal.max() <= geom.h.max() + 1e-10
        slack = []
        for grid in (sphere16, sphere32):
            geom = evaluate_geometry(
                analytic_support(AnalyticBody.ellipsoid(1.3, 1.0, 0.9), grid))
            tol = (np.pi / grid.resolution[0]) ** 2
            assert geom.rho_at_normal.min() >= geom.h.min() - tol
            assert geom.rho_at_normal.max() <= geom.h.max() + tol
            slack.append(max(geom.rho_at_normal.max() - geom.h.max(), 0.0))
        assert slack[1] <= slack[0]

    def test_scaling_covariance(self, circle64, sphere16, rng):
        from dualmink.verify import random_even_body

        for grid in (circle64, sphere16):
            n = grid.dim
            lam = 1.7
            h = random_even_body(grid, rng, 0.1)
            g1 = evaluate_geometry(h)
            g2 = evaluate_geometry(SupportFunction(grid, lam * h.values, even=True))
            assert np.abs(g2.rho_at_normal - lam * g1.rho_at_normal).max() <= 1e-13 * lam
            assert np.abs(g2.b - lam * g1.b).max() <= 1e-12 * lam
            assert np.abs(g2.sigma_n - lam**n * g1.sigma_n).max() <= 1e-12 * lam**n
            assert np.abs(g2.kappa - g1.kappa / lam**n).max() <= 1e-12

    def test_evenness_propagation(self, sphere16, rng):
        from dualmink.verify import random_even_body

        geom = evaluate_geometry(random_even_body(sphere16, rng, 0.12))
        a = sphere16.antipode
        for fld in (geom.rho_at_normal, geom.sigma_n, geom.kappa):
            assert np.abs(fld - fld[a]).max() <= 1e-10 * np.abs(fld).max()


class TestRoundtrip:
    def test_unit_ball_exact(self, circle64, sphere16):
        for grid in (circle64, sphere16):
            out = radial_support_roundtrip(unit_ball(grid))
            assert out.sup <= 1e-12

    def test_ellipse_refines(self):
        sups = []
        for n in (64, 128):
            grid = build_grid(1, n)
            h = analytic_support(AnalyticBody.ellipsoid(1.2, 1.0), grid)
            sups.append(radial_support_roundtrip(h).sup)
        assert sups[1] < sups[0]

    def test_ellipsoid_refines(self):
        sups = []
        for res in ((16, 32), (32, 64)):
            grid = build_grid(2, res)
            h = analytic_support(AnalyticBody.ellipsoid(1.05, 1.0, 1.0), grid)
            sups.append(radial_support_roundtrip(h).sup)
        assert sups[1] < sups[0]

    def test_nonconvex_rejected(self, circle64):
        h = SupportFunction(circle64, 1.0 + 0.6 * np.cos(2 * circle64.theta))
        with pytest.raises(ValueError):
            radial_support_roundtrip(h)


class TestDistances:
    def test_zero_on_equal(self, circle64):
        h = unit_ball(circle64)
        assert l2_distance(h, h) == 0.0
        assert hausdorff_distance(h, h) == 0.0

    def test_single_mode_l2(self, circle64):
        eps = 0.01
        h1 = unit_ball(circle64)
        h2 = SupportFunction(circle64, 1.0 + eps * np.cos(2 * circle64.theta))
        assert abs(l2_distance(h1, h2) - eps / np.sqrt(2)) <= 1e-10

    def test_l2_against_fine_quadrature(self):
        # independent oracle: same integrand on an 8x finer grid
        vals = []
        for n in (64, 512):
            grid = build_grid(1, n)
            ell = normalize_body(analytic_support(AnalyticBody.ellipsoid(1.2, 1.0), grid))
            vals.append(l2_distance(ell, unit_ball(grid)))
        assert abs(vals[0] - vals[1]) <= 1e-8

    def test_homothety_pair(self, circle64, sphere16):
        for grid in (circle64, sphere16):
            b1 = unit_ball(grid)
            b2 = SupportFunction(grid, np.full(grid.n_nodes, 1.5), even=True)
            assert abs(l2_distance(b1, b2) - 0.5) <= 1e-12
            assert hausdorff_distance(b1, b2) == 0.5
            assert abs(diameter_union(b1, b2) - 3.0) <= 1e-12

    def test_ellipse_hausdorff(self, circle256):
        ell = analytic_support(AnalyticBody.ellipsoid(1.2, 1.0), circle256)
        assert abs(hausdorff_distance(ell, unit_ball(circle256)) - 0.2) <= 1e-3

    def test_l2_dominated_by_hausdorff(self, circle64, rng):
        from dualmink.verify import random_even_body

        for _ in range(10):
            h1 = random_even_body(circle64, rng, 0.2)
            h2 = random_even_body(circle64, rng, 0.2)
            assert l2_distance(h1, h2) <= hausdorff_distance(h1, h2) + 1e-14

    def test_grid_mismatch(self, circle64, circle256):
        with pytest.raises(ValueError):
            l2_distance(unit_ball(circle64), unit_ball(circle256))


class TestNormalize:
    def test_constant(self, circle64):
        h = SupportFunction(circle64, np.full(64, 2.7), even=True)
        assert np.abs(normalize_body(h).values - 1.0).max() <= 1e-14

    def test_mean_one(self, circle64):
        ell = analytic_support(AnalyticBody.ellipsoid(1.2, 1.0), circle64)
        hbar = normalize_body(ell)
        mean = (circle64.weights @ hbar.values) / circle64.weights.sum()
        assert abs(mean - 1.0) <= 1e-12

    def test_idempotent(self, circle64):
        ell = analytic_support(AnalyticBody.ellipsoid(1.2, 1.0), circle64)
        once = normalize_body(ell)
        twice = normalize_body(once)
        assert np.abs(twice.values - once.values).max() <= 1e-14


class TestAnalyticSupport:
    def test_ball(self, circle64):
        h = analytic_support(AnalyticBody.ball(2.0), circle64)
        assert np.all(h.values == 2.0)

    def test_round_ellipsoid_is_ball(self, sphere16):
        h = analytic_support(AnalyticBody.ellipsoid(1.0, 1.0, 1.0), sphere16)
        assert np.abs(h.values - 1.0).max() <= 1e-14

    def test_ellipsoid_even_exact(self, sphere16):
        h = analytic_support(AnalyticBody.ellipsoid(1.2, 0.9, 1.0), sphere16)
        assert h.even and is_even(sphere16, h.values)

    def test_overlarge_perturbation_rejected(self, circle64):
        # 1 + 0.6 cos(2t) has h'' + h = 1 - 1.8 cos(2t), which changes sign
        with pytest.raises(ValueError, match="convex"):
            analytic_support(AnalyticBody.perturbed_ball(0.6, 2), circle64)

    def test_valid_perturbation(self, circle64):
        h = analytic_support(AnalyticBody.perturbed_ball(0.1, 2), circle64)
        assert evaluate_geometry(h).valid

    def test_odd_mode_rejected(self, circle64):
        with pytest.raises(ValueError, match="even"):
            analytic_support(AnalyticBody.perturbed_ball(0.1, 3), circle64)

    def test_axis_count_check(self, sphere16):
        with pytest.raises(ValueError):
            analytic_support(AnalyticBody.ellipsoid(1.2, 1.0), sphere16)


class TestSerialization:
    def test_bit_exact_roundtrip(self, sphere16, rng):
        from dualmink.verify import random_even_body

        h = random_even_body(sphere16, rng, 0.15)
        doc = body_to_doc(h)
        back = body_from_doc(doc)
        assert np.all(back.values == h.values)
        assert back.even == h.even
        assert back.grid.resolution == h.grid.resolution

    def test_file_roundtrip(self, circle64, tmp_path, rng):
        import json

        from dualmink.io import load_body, save_body

        h = analytic_support(AnalyticBody.ellipsoid(1.3, 0.8), circle64)
        path = save_body(tmp_path / "body.json", h)
        again = load_body(path)
        assert np.all(again.values == h.values)
        # on-disk decimals are shortest round-trip (up to 17 significant digits)
        doc = json.loads(path.read_text())
        assert doc["values"][0] == h.values[0]
