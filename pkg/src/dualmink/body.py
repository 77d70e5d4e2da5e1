"""Convex-body geometry derived from support functions on a sphere grid.

Everything a smooth, strictly convex body knows about itself is computed here
from node samples of its support function h: the boundary embedding
F = grad h + h x, the radial length |Dh|, the curvature matrix
b_ij = h_ij + h delta_ij with its principal radii, and the Gauss curvature
1/det(b).  Distances (normalized L^2 and Hausdorff), mean-width
normalization, the radial/support round trip, and closed-form reference
bodies (balls, ellipsoids, trig-perturbed balls) live here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dualmink import sphere
from dualmink.sphere import SphereGrid, integrate, project_even


@dataclass
class SupportFunction:
    """Node samples of a support function; the solver's primary unknown."""

    grid: SphereGrid
    values: np.ndarray
    even: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"expected {self.grid.n_nodes} values, got shape {self.values.shape}")
        if np.min(self.values) <= 0.0:
            raise ValueError("support function must be positive (origin interior)")
        if self.even and not sphere.is_even(self.grid, self.values):
            raise ValueError("even flag set but values are not antipodally equal")


def even_support(grid: SphereGrid, values) -> SupportFunction:
    """Build a SupportFunction with exact evenness enforced by projection."""
    return SupportFunction(grid, project_even(grid, np.asarray(values, float)), even=True)


@dataclass
class BodyGeometry:
    """All derived pointwise geometry of a body given by its support function."""

    grid: SphereGrid
    h: np.ndarray                  # support values
    grad: np.ndarray               # (N, n) tangential gradient in the local frame
    boundary: np.ndarray           # (N, n+1) F = grad h + h x
    rho_at_normal: np.ndarray      # |Dh| = sqrt(h^2 + |grad h|^2)
    b: np.ndarray                  # (N, n, n) curvature matrix h_ij + h delta_ij
    sigma1: np.ndarray             # trace of b
    sigma_n: np.ndarray            # det of b
    kappa: np.ndarray              # Gauss curvature 1/sigma_n
    radii: np.ndarray              # (N, n) principal radii, ascending
    valid: bool = True             # strict convexity certificate min radii > 0

    @property
    def min_radius(self) -> float:
        return float(self.radii.min())

    @property
    def max_radius(self) -> float:
        return float(self.radii.max())


@dataclass(frozen=True)
class AnalyticBody:
    """Closed-form reference body: ball, ellipsoid, or trig-perturbed ball."""

    kind: str                      # "ball" | "ellipsoid" | "perturbed_ball"
    params: tuple

    @classmethod
    def ball(cls, radius: float) -> "AnalyticBody":
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        return cls("ball", (float(radius),))

    @classmethod
    def ellipsoid(cls, *semi_axes: float) -> "AnalyticBody":
        if any(a <= 0 for a in semi_axes):
            raise ValueError("ellipsoid semi-axes must be positive")
        return cls("ellipsoid", tuple(float(a) for a in semi_axes))

    @classmethod
    def perturbed_ball(cls, amplitude: float, mode: int) -> "AnalyticBody":
        return cls("perturbed_ball", (float(amplitude), int(mode)))


def frame_vectors(grid: SphereGrid) -> np.ndarray:
    """Fixed orthonormal tangent frame, shape (N, n, n+1).

    S^1: the counterclockwise tangent.  S^2: (theta-hat, phi-hat), which is
    smooth away from the poles; grid latitudes never touch the poles.
    """
    if grid.dim == 1:
        e = np.empty((grid.n_nodes, 1, 2))
        e[:, 0, 0] = -grid.nodes[:, 1]
        e[:, 0, 1] = grid.nodes[:, 0]
        return e
    st, ct = np.sin(grid.theta), np.cos(grid.theta)
    sp_, cp = np.sin(grid.phi), np.cos(grid.phi)
    e = np.empty((grid.n_nodes, 2, 3))
    e[:, 0, 0] = ct * cp
    e[:, 0, 1] = ct * sp_
    e[:, 0, 2] = -st
    e[:, 1, 0] = -sp_
    e[:, 1, 1] = cp
    e[:, 1, 2] = 0.0
    return e


def evaluate_geometry(h: SupportFunction) -> BodyGeometry:
    """Derive the full pointwise geometry; flags validity from min radii > 0."""
    grid = h.grid
    n = grid.dim
    vals = h.values
    grad, hess, _ = sphere.differentiate(grid, vals)
    b = hess + vals[:, None, None] * np.eye(n)
    sigma1 = np.trace(b, axis1=1, axis2=2)
    if n == 1:
        sigma_n = b[:, 0, 0]
        radii = b[:, :, 0].copy()
    else:
        sigma_n = b[:, 0, 0] * b[:, 1, 1] - b[:, 0, 1] ** 2
        half_tr = 0.5 * sigma1
        disc = np.sqrt(np.maximum(half_tr**2 - sigma_n, 0.0))
        radii = np.stack([half_tr - disc, half_tr + disc], axis=1)
    with np.errstate(divide="ignore"):
        kappa = 1.0 / sigma_n
    frame = frame_vectors(grid)
    boundary = vals[:, None] * grid.nodes + np.einsum("ia,iak->ik", grad, frame)
    rho = np.sqrt(vals**2 + np.sum(grad**2, axis=1))
    valid = bool(radii.min() > 0.0)
    return BodyGeometry(grid, vals, grad, boundary, rho, b, sigma1, sigma_n,
                        kappa, radii, valid)


@dataclass
class RoundtripResult:
    residuals: np.ndarray
    sup: float
    rms: float


def radial_support_roundtrip(h: SupportFunction) -> RoundtripResult:
    """Resample the radial description and reconstruct h from it.

    Pushes rho through the normal map u = Dh/|Dh| onto the grid, then
    evaluates h = rho^2 / sqrt(|grad rho|^2 + rho^2) and reports the
    pointwise mismatch against the original support values.
    """
    geom = evaluate_geometry(h)
    if not geom.valid:
        raise ValueError("round trip needs a strictly convex body (normal map injective)")
    grid = h.grid
    dirs = geom.boundary / geom.rho_at_normal[:, None]
    if grid.dim == 1:
        rho = _resample_circle(grid, dirs, geom.rho_at_normal)
    else:
        rho = _resample_sphere(grid, dirs, geom.rho_at_normal)
    grad_rho, _, _ = sphere.differentiate(grid, rho)
    h_rec = rho**2 / np.sqrt(np.sum(grad_rho**2, axis=1) + rho**2)
    res = np.abs(h_rec - h.values)
    return RoundtripResult(res, float(res.max()), float(np.sqrt(np.mean(res**2))))


def _resample_circle(grid, dirs, rho):
    """Periodic linear interpolation in angle from the scattered normal image."""
    ang = np.arctan2(dirs[:, 1], dirs[:, 0]) % (2.0 * np.pi)
    order = np.argsort(ang)
    ang_s, rho_s = ang[order], rho[order]
    if np.any(np.diff(ang_s) <= 0.0):
        raise ValueError("normal map not injective on the grid")
    ang_ext = np.concatenate([ang_s - 2.0 * np.pi, ang_s, ang_s + 2.0 * np.pi])
    rho_ext = np.tile(rho_s, 3)
    return np.interp(grid.theta, ang_ext, rho_ext)


def _resample_sphere(grid, dirs, rho, neighbors: int = 12):
    """Moving least-squares linear fit in the tangent plane of each query node."""
    out = np.empty(grid.n_nodes)
    frame = frame_vectors(grid)
    chunk = 512
    for start in range(0, grid.n_nodes, chunk):
        stop = min(start + chunk, grid.n_nodes)
        dots = dirs @ grid.nodes[start:stop].T        # (N_samples, chunk)
        idx = np.argpartition(-dots, neighbors, axis=0)[:neighbors]
        for c, i in enumerate(range(start, stop)):
            samp = dirs[idx[:, c]]
            tang = samp @ frame[i].T                  # (k, 2) tangent coordinates
            a = np.column_stack([np.ones(neighbors), tang])
            coef, *_ = np.linalg.lstsq(a, rho[idx[:, c]], rcond=None)
            out[i] = coef[0]
    return out


def _check_same_grid(h1: SupportFunction, h2: SupportFunction):
    if (h1.grid.dim, h1.grid.resolution) != (h2.grid.dim, h2.grid.resolution):
        raise ValueError("support functions live on different grids")


def l2_distance(h1: SupportFunction, h2: SupportFunction) -> float:
    """Normalized L^2 distance, sqrt(mean of |h1 - h2|^2 over the sphere)."""
    _check_same_grid(h1, h2)
    w = h1.grid.weights
    diff = h1.values - h2.values
    return float(np.sqrt((w @ diff**2) / w.sum()))


def hausdorff_distance(h1: SupportFunction, h2: SupportFunction) -> float:
    _check_same_grid(h1, h2)
    return float(np.max(np.abs(h1.values - h2.values)))


def diameter_union(h1: SupportFunction, h2: SupportFunction) -> float:
    """Diameter of the union via support arithmetic: max of H(x) + H(-x)."""
    _check_same_grid(h1, h2)
    hmax = np.maximum(h1.values, h2.values)
    return float(np.max(hmax + hmax[h1.grid.antipode]))


def normalize_body(h: SupportFunction) -> SupportFunction:
    """Rescale so the support function has mean 1 over the sphere."""
    mean = integrate(h.grid, h.values) / h.grid.weights.sum()
    return SupportFunction(h.grid, h.values / mean, even=h.even)


def analytic_support(body: AnalyticBody, grid: SphereGrid) -> SupportFunction:
    """Sample a closed-form support function on the grid.

    Perturbed balls are rejected when the perturbation destroys strict
    convexity or positivity; ellipsoids and balls are always valid.
    """
    if body.kind == "ball":
        vals = np.full(grid.n_nodes, body.params[0])
        return SupportFunction(grid, vals, even=True)
    if body.kind == "ellipsoid":
        axes = np.asarray(body.params)
        if axes.shape != (grid.dim + 1,):
            raise ValueError(
                f"ellipsoid needs {grid.dim + 1} semi-axes for dim={grid.dim}")
        # nodes * nodes (not **2) keeps antipodal samples bit-identical
        vals = np.sqrt((grid.nodes * grid.nodes) @ axes**2)
        return SupportFunction(grid, vals, even=True)
    if body.kind == "perturbed_ball":
        amp, mode = body.params
        if mode % 2 != 0 or mode == 0:
            raise ValueError(f"perturbation mode must be even and nonzero, got {mode}")
        vals = 1.0 + amp * np.cos(mode * grid.theta)
        h = even_support(grid, vals)
        geom = evaluate_geometry(h)
        if not geom.valid:
            raise ValueError(
                f"perturbed ball amp={amp} mode={mode} is not strictly convex "
                f"(min principal radius {geom.min_radius:.3g})")
        return h
    raise ValueError(f"unknown analytic body kind {body.kind!r}")
