"""Density of the dual curvature measure and numerical inequality certification.

Every inequality the theory guarantees for smooth, origin-symmetric, strictly
convex bodies is checked here by quadrature: the stability bound on the
normalized body, the spectral form of the local Aleksandrov-Fenchel
inequality, the weighted radial-moment inequality, the Dirichlet-energy
comparison it implies, the Poincare step, and the L^2/Hausdorff comparison.
Pass means lhs <= rhs + max(1e-10, 1e-8 |rhs|), so discretization noise
cannot flip a true inequality at the working resolutions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from dualmink import sphere
from dualmink.body import (
    BodyGeometry,
    SupportFunction,
    diameter_union,
    evaluate_geometry,
    hausdorff_distance,
    l2_distance,
    normalize_body,
)
from dualmink.sphere import SphereGrid, integrate


def inequality_tolerance(rhs: float) -> float:
    return max(1e-10, 1e-8 * abs(rhs))


@dataclass
class DualDensity:
    """Per-node density g = h sigma_n |Dh|^(q-n-1) of the dual curvature measure."""

    q: float
    values: np.ndarray
    max: float
    min: float

    @property
    def ratio(self) -> float:
        return self.max / self.min


def dual_density(geom: BodyGeometry, q: float) -> DualDensity:
    if not geom.valid:
        raise ValueError("dual density needs a strictly convex body")
    n = geom.grid.dim
    g = geom.h * geom.sigma_n * geom.rho_at_normal ** (q - (n + 1))
    return DualDensity(q, g, float(g.max()), float(g.min()))


def compute_beta(dim: int) -> tuple[float, float]:
    """Closed-form cap constant c1 and stability constant beta = 1/(c1 sqrt(n+1)).

    c1 is the measure of the cap {<x,w> >= 1/2} over twice the total measure:
    arc length 2pi/3 over 4pi on the circle, cap area pi over 8pi on the
    sphere, giving c1 = 1/6 and 1/8.
    """
    if dim == 1:
        c1 = 1.0 / 6.0
    elif dim == 2:
        c1 = 1.0 / 8.0
    else:
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    beta = 1.0 / (c1 * math.sqrt(dim + 1.0))
    return c1, beta


def _require_even(h: SupportFunction, what: str):
    if not (h.even and sphere.is_even(h.grid, h.values)):
        raise ValueError(f"{what} requires an origin-symmetric (even) body")


def q_in_stability_range(dim: int, q: float) -> bool:
    return dim - 3 <= q <= dim + 1


@dataclass
class StabilityReport:
    """Everything the stability certificate records for one body and index q."""

    q: float
    ratio: float                 # M/m of the density
    eps: float                   # M/m - 1
    delta2: float                # L2 distance of the normalized body to the unit ball
    delta_h: float               # Hausdorff distance of same
    c1: float
    beta: float
    bound: float                 # beta sqrt(eps)
    passed: bool
    distance_ratio: float        # delta2^2 diam^n / delta_h^(n+2) vs the unit ball
    q_in_range: bool


def check_stability(h: SupportFunction, q: float) -> StabilityReport:
    """Certify delta_2(normalized body, unit ball) <= beta sqrt(M/m - 1)."""
    _require_even(h, "the stability bound")
    n = h.grid.dim
    if not q_in_stability_range(n, q):
        warnings.warn(f"index q={q} outside the hypothesis range [{n - 3}, {n + 1}]; "
                      "the bound is not guaranteed", stacklevel=2)
    geom = evaluate_geometry(h)
    if not geom.valid:
        raise ValueError("stability check needs a strictly convex body")
    dens = dual_density(geom, q)
    hbar = normalize_body(h)
    ball = SupportFunction(h.grid, np.ones(h.grid.n_nodes), even=True)
    d2 = l2_distance(hbar, ball)
    dh = hausdorff_distance(hbar, ball)
    c1, beta = compute_beta(h.grid.dim)
    eps = dens.ratio - 1.0
    bound = beta * math.sqrt(max(eps, 0.0))
    return StabilityReport(
        q=q, ratio=dens.ratio, eps=eps, delta2=d2, delta_h=dh, c1=c1, beta=beta,
        bound=bound, passed=bool(d2 <= bound + 1e-10),
        distance_ratio=check_distance_comparison(hbar, ball),
        q_in_range=q_in_stability_range(h.grid.dim, q))


@dataclass
class InequalityCheck:
    lhs: float
    rhs: float
    passed: bool


def check_spectral_inequality(h: SupportFunction, f_test) -> InequalityCheck:
    """Spectral local Aleksandrov-Fenchel check at top order k = n.

    The test function is first orthogonalized against the measure h sigma_n
    dsigma; then n * int f^2 h sigma_n <= int h^2 adj(b)(grad f, grad f).
    """
    geom = evaluate_geometry(h)
    if not geom.valid:
        raise ValueError("spectral inequality needs a strictly convex body")
    grid = h.grid
    n = grid.dim
    f = np.asarray(f_test, dtype=float)
    wmeas = geom.h * geom.sigma_n
    f = f - integrate(grid, f * wmeas) / integrate(grid, wmeas)
    grad_f, _, _ = sphere.differentiate(grid, f)
    adj = _adjugate(geom.b)
    quad = np.einsum("iab,ia,ib->i", adj, grad_f, grad_f)
    lhs = n * integrate(grid, f**2 * wmeas)
    rhs = integrate(grid, geom.h**2 * quad)
    return InequalityCheck(lhs, rhs, bool(lhs <= rhs + inequality_tolerance(rhs)))


def _adjugate(b: np.ndarray) -> np.ndarray:
    """Adjugate of the curvature matrix: sigma_n b^{-1}, exact for 1x1 and 2x2."""
    n = b.shape[1]
    if n == 1:
        return np.ones_like(b)
    adj = np.empty_like(b)
    adj[:, 0, 0] = b[:, 1, 1]
    adj[:, 1, 1] = b[:, 0, 0]
    adj[:, 0, 1] = -b[:, 0, 1]
    adj[:, 1, 0] = -b[:, 1, 0]
    return adj


def check_radial_moment_inequality(h: SupportFunction, alpha: float) -> InequalityCheck:
    """Weighted radial-moment inequality for the boundary map X = Dh.

    n int |X|^(a+2) dV <= n |int |X|^(a/2) X dV|^2 / int dV
      + int |X|^a h (lap h + n h) dV + (a^2/4 + a) int |X|^(a-1) h <grad h, grad |X|> dV,
    with dV = h sigma_n dsigma.  |X| = rho >= h > 0, so no regularization is
    needed anywhere (asserted).
    """
    geom = evaluate_geometry(h)
    if not geom.valid:
        raise ValueError("radial-moment inequality needs a strictly convex body")
    grid = h.grid
    n = grid.dim
    rho = geom.rho_at_normal
    assert rho.min() > 0.0, "radial length must stay positive"
    dv = geom.h * geom.sigma_n * grid.weights
    lhs = n * float(dv @ rho ** (alpha + 2.0))
    vec = (rho ** (alpha / 2.0) * dv)[:, None] * geom.boundary
    first = n * float(np.sum(vec.sum(axis=0) ** 2)) / float(dv.sum())
    second = float(dv @ (rho**alpha * geom.h * geom.sigma1))
    grad_rho, _, _ = sphere.differentiate(grid, rho)
    pairing = np.einsum("ia,ia->i", geom.grad, grad_rho)
    third = (alpha**2 / 4.0 + alpha) * float(dv @ (rho ** (alpha - 1.0) * geom.h * pairing))
    rhs = first + second + third
    return InequalityCheck(lhs, rhs, bool(lhs <= rhs + inequality_tolerance(rhs)))


def check_dirichlet_comparison(h: SupportFunction, q: float) -> InequalityCheck:
    """Dirichlet-energy comparison n int |Dh|^2 <= (M/m) int h (lap h + n h)."""
    _require_even(h, "the Dirichlet-energy comparison")
    n = h.grid.dim
    if not q_in_stability_range(n, q):
        raise ValueError(f"index q={q} outside the hypothesis range [{n-3}, {n+1}]")
    geom = evaluate_geometry(h)
    if not geom.valid:
        raise ValueError("Dirichlet-energy comparison needs a strictly convex body")
    dens = dual_density(geom, q)
    lhs = n * integrate(h.grid, geom.rho_at_normal**2)
    rhs = dens.ratio * integrate(h.grid, geom.h * geom.sigma1)
    return InequalityCheck(lhs, rhs, bool(lhs <= rhs + inequality_tolerance(rhs)))


def check_distance_comparison(h1: SupportFunction, h2: SupportFunction) -> float:
    """Diagnostic ratio delta_2^2 diam^n / delta_H^(n+2).

    For convex bodies this ratio is bounded below by a dimensional constant;
    the suite records the empirical infimum over the corpus rather than
    asserting a specific value.  Returns +inf when the bodies coincide.
    """
    d_h = hausdorff_distance(h1, h2)
    if d_h == 0.0:
        return math.inf
    n = h1.grid.dim
    d2 = l2_distance(h1, h2)
    diam = diameter_union(h1, h2)
    return d2**2 * diam**n / d_h ** (n + 2)


def poincare_check(grid: SphereGrid, u) -> InequalityCheck:
    """Poincare step on even fields: n int (u - mean u)^2 <= int |grad u|^2."""
    u = sphere.project_even(grid, u)
    u = u - integrate(grid, u) / grid.weights.sum()
    grad_u, _, _ = sphere.differentiate(grid, u)
    lhs = grid.dim * integrate(grid, u**2)
    rhs = integrate(grid, np.sum(grad_u**2, axis=1))
    return InequalityCheck(lhs, rhs, bool(lhs <= rhs + inequality_tolerance(rhs)))


@dataclass
class BoundsReport:
    """Monitoring quantities for the sup-norm and gradient estimates."""

    q: float
    h_min: float
    h_max: float
    h_ratio: float
    grad_max: float
    radius_min: float
    radius_max: float


def c0_c1_report(h: SupportFunction, q: float) -> BoundsReport:
    geom = evaluate_geometry(h)
    grad_norm = np.sqrt(np.sum(geom.grad**2, axis=1))
    return BoundsReport(
        q=q,
        h_min=float(geom.h.min()),
        h_max=float(geom.h.max()),
        h_ratio=float(geom.h.max() / geom.h.min()),
        grad_max=float(grad_norm.max()),
        radius_min=geom.min_radius,
        radius_max=geom.max_radius,
    )


# ---------------------------------------------------------------------------
# reproducible random even fields and bodies for batteries and corpus sweeps
# ---------------------------------------------------------------------------

def _even_monomials(dim: int, max_degree: int):
    if dim == 1:
        combos = [(2, 0), (0, 2), (1, 1), (4, 0), (3, 1), (2, 2), (1, 3), (0, 4)]
    else:
        combos = [
            (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1),
            (4, 0, 0), (0, 4, 0), (0, 0, 4), (2, 2, 0), (2, 0, 2), (0, 2, 2),
            (3, 1, 0), (1, 3, 0), (3, 0, 1), (1, 0, 3), (0, 3, 1), (0, 1, 3),
            (2, 1, 1), (1, 2, 1), (1, 1, 2),
        ]
    return [c for c in combos if sum(c) <= max_degree]


def random_even_field(grid: SphereGrid, rng: np.random.Generator,
                      max_degree: int = 4) -> np.ndarray:
    """Random smooth even field: even polynomial in the coordinates.

    Monomials are built from plain multiplies (never the pow ufunc, whose
    rounding is position dependent), so even monomials evaluate bit-identically
    at antipodal nodes and the field is exactly even.  Coefficients decay with
    degree for smoothness.
    """
    combos = _even_monomials(grid.dim, max_degree)
    out = np.zeros(grid.n_nodes)
    for powers in combos:
        coeff = rng.standard_normal() * 0.5 ** sum(powers)
        mono = np.ones(grid.n_nodes)
        for axis, p in enumerate(powers):
            for _ in range(p):
                mono = mono * grid.nodes[:, axis]
        out += coeff * mono
    return out


def random_even_body(grid: SphereGrid, rng: np.random.Generator,
                     amplitude: float = 0.1) -> SupportFunction:
    """Random even, strictly convex body near the unit ball."""
    bump = random_even_field(grid, rng)
    bump = bump - bump.mean()
    scale = np.abs(bump).max()
    if scale > 0:
        bump = bump / scale
    amp = amplitude
    for _ in range(40):
        h = SupportFunction(grid, 1.0 + amp * bump, even=True)
        if evaluate_geometry(h).valid:
            return h
        amp *= 0.5
    raise RuntimeError("could not build a convex random body")
