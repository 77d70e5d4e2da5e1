"""Grids, quadrature and tangential calculus on the unit circle and unit sphere.

The circle (dim=1) uses a uniform periodic grid with trapezoid weights and
Fourier-collocation differentiation matrices, so derivatives of smooth
functions are accurate to machine precision below the Nyquist mode.

The sphere (dim=2) uses a latitude-longitude grid with Gauss-Legendre
latitudes (nodes never touch the poles) and uniform longitudes.  Derivatives
are 9-point finite-difference stencils in both angles; latitude stencils
follow the meridian great circle across the poles, picking up values from the
opposite longitude, so no one-sided differences are ever needed.  Covariant
Hessians are assembled from the angular derivatives plus the round-metric
connection terms in the fixed orthonormal frame (theta-hat, phi-hat).

Both grids are built antipodally symmetric: node[antipode[i]] == -node[i]
holds bit for bit, which lets the even projection be exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SURFACE_MEASURE = {1: 2.0 * np.pi, 2: 4.0 * np.pi}

# stencil width for the lat-lon grid; 9 points ~ 8th order on smooth fields
STENCIL = 9


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Discretized S^n (n = 1 or 2) with quadrature weights and antipodal pairing."""

    dim: int
    resolution: tuple          # (N,) for dim=1, (N_lat, N_lon) for dim=2
    nodes: np.ndarray          # (n_nodes, dim+1) unit vectors
    weights: np.ndarray        # (n_nodes,) positive quadrature weights
    antipode: np.ndarray       # (n_nodes,) index permutation, an involution
    theta: np.ndarray          # angle on S^1 / colatitude on S^2, per node
    phi: np.ndarray | None     # longitude per node (dim=2 only)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def shape(self) -> tuple:
        """Logical (N_lat, N_lon) shape for dim=2, (N,) for dim=1."""
        return self.resolution

    def cache_key(self):
        return (self.dim, self.resolution)


class DiffOperators:
    """Per-node tangential gradient, covariant Hessian and Laplacian.

    All three are realized as linear maps (matrices) from node values to node
    values; the Hessian is stored componentwise in the fixed orthonormal
    frame.  Constants map to exactly zero: every derivative matrix has its
    diagonal adjusted so rows sum to zero bit-exactly.
    """

    def __init__(self, grid, grad_mats, hess_mats):
        self.grid = grid
        self.grad_mats = grad_mats      # tuple of n matrices
        self.hess_mats = hess_mats      # dict {(a,b): matrix}, a <= b

    def gradient(self, values):
        n = self.grid.dim
        shifted = values - values[0]    # constants map to exactly zero
        out = np.empty((self.grid.n_nodes, n))
        for a in range(n):
            out[:, a] = self.grad_mats[a] @ shifted
        return out

    def hessian(self, values):
        n = self.grid.dim
        shifted = values - values[0]
        out = np.empty((self.grid.n_nodes, n, n))
        for (a, b), mat in self.hess_mats.items():
            hab = mat @ shifted
            out[:, a, b] = hab
            out[:, b, a] = hab
        return out

    def laplacian(self, values):
        hess = self.hessian(values)
        return np.trace(hess, axis1=1, axis2=2)


def build_grid(dim: int, resolution) -> SphereGrid:
    """Construct an antipodally symmetric grid on S^1 or S^2.

    dim=1 expects an even N >= 16; dim=2 expects (N_lat, N_lon) with
    N_lat >= 8 and even N_lon >= 16.
    """
    if dim == 1:
        return _build_circle(resolution)
    if dim == 2:
        return _build_sphere(resolution)
    raise ValueError(f"dim must be 1 or 2, got {dim}")


def _build_circle(resolution) -> SphereGrid:
    n = int(resolution) if np.isscalar(resolution) else int(resolution[0])
    if n % 2 != 0:
        raise ValueError(f"circle grid needs even N for antipodal pairing, got {n}")
    if n < 16:
        raise ValueError(f"circle grid needs N >= 16, got {n}")
    theta = 2.0 * np.pi * np.arange(n) / n
    half = n // 2
    nodes = np.empty((n, 2))
    nodes[:half, 0] = np.cos(theta[:half])
    nodes[:half, 1] = np.sin(theta[:half])
    nodes[half:] = -nodes[:half]                  # exact antipodal pairing
    weights = np.full(n, 2.0 * np.pi / n)
    antipode = (np.arange(n) + half) % n
    return SphereGrid(1, (n,), nodes, weights, antipode, theta, None)


def _build_sphere(resolution) -> SphereGrid:
    nlat, nlon = int(resolution[0]), int(resolution[1])
    if nlat < 8:
        raise ValueError(f"sphere grid needs N_lat >= 8, got {nlat}")
    if nlon < 16 or nlon % 2 != 0:
        raise ValueError(f"sphere grid needs even N_lon >= 16, got {nlon}")

    mu, wmu = np.polynomial.legendre.leggauss(nlat)
    order = np.argsort(-mu)                       # north (mu = +1) first
    mu, wmu = mu[order], wmu[order]
    # enforce exact mirror symmetry of latitudes and weights
    half = nlat // 2
    mu_half = 0.5 * (mu[:half] - mu[::-1][:half])
    w_half = 0.5 * (wmu[:half] + wmu[::-1][:half])
    theta_lat = np.empty(nlat)
    wlat = np.empty(nlat)
    theta_lat[:half] = np.arccos(mu_half)
    theta_lat[nlat - half:] = (np.pi - np.arccos(mu_half))[::-1]
    wlat[:half] = w_half
    wlat[nlat - half:] = w_half[::-1]
    if nlat % 2 == 1:
        theta_lat[half] = 0.5 * np.pi
        wlat[half] = wmu[half]

    phi_lon = 2.0 * np.pi * np.arange(nlon) / nlon
    n_nodes = nlat * nlon
    ii, jj = np.divmod(np.arange(n_nodes), nlon)
    theta = theta_lat[ii]
    phi = phi_lon[jj]

    anti = (nlat - 1 - ii) * nlon + (jj + nlon // 2) % nlon
    nodes = np.empty((n_nodes, 3))
    st, ct = np.sin(theta), np.cos(theta)
    nodes[:, 0] = st * np.cos(phi)
    nodes[:, 1] = st * np.sin(phi)
    nodes[:, 2] = ct
    rep = np.arange(n_nodes) < anti
    nodes[anti[rep]] = -nodes[rep]                # exact antipodal pairing

    weights = wlat[ii] * (2.0 * np.pi / nlon)
    return SphereGrid(2, (nlat, nlon), nodes, weights, anti, theta, phi)


def integrate(grid: SphereGrid, values) -> float:
    """Quadrature of a node field over the whole sphere/circle."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} node values, got shape {values.shape}")
    return float(grid.weights @ values)


def project_even(grid: SphereGrid, values) -> np.ndarray:
    """Antipodal symmetrization (v(x) + v(-x))/2; exact and idempotent."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} node values, got shape {values.shape}")
    return 0.5 * (values + values[grid.antipode])


def is_even(grid: SphereGrid, values, tol: float = 0.0) -> bool:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values - values[grid.antipode]))) <= tol


def differentiate(grid: SphereGrid, values):
    """Gradient, covariant Hessian and Laplacian of a node field.

    Returns (gradient (N,n), hessian (N,n,n), laplacian (N,)); the Laplacian
    is the trace of the Hessian by construction.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} node values, got shape {values.shape}")
    ops = get_operators(grid)
    grad = ops.gradient(values)
    hess = ops.hessian(values)
    lap = np.trace(hess, axis1=1, axis2=2)
    return grad, hess, lap


# ---------------------------------------------------------------------------
# operator construction
# ---------------------------------------------------------------------------

_OPS_CACHE: dict = {}


def get_operators(grid: SphereGrid) -> DiffOperators:
    key = grid.cache_key()
    ops = _OPS_CACHE.get(key)
    if ops is None:
        ops = _build_circle_ops(grid) if grid.dim == 1 else _build_sphere_ops(grid)
        _OPS_CACHE[key] = ops
    return ops


def _zero_row_sums(mat, center=None):
    """Force rows to sum to zero exactly so constants differentiate to 0."""
    if center is None:
        mat[np.diag_indices_from(mat)] -= mat.sum(axis=1)
    return mat


def _build_circle_ops(grid: SphereGrid) -> DiffOperators:
    n = grid.n_nodes
    h = 2.0 * np.pi / n
    k = np.arange(n)
    diff = (k[:, None] - k[None, :])              # index offsets, circulant
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    with np.errstate(divide="ignore"):
        d1 = 0.5 * sign / np.tan(0.5 * h * diff)
        d2 = -0.5 * sign / np.sin(0.5 * h * diff) ** 2
    np.fill_diagonal(d1, 0.0)
    np.fill_diagonal(d2, 0.0)
    _zero_row_sums(d1)
    _zero_row_sums(d2)
    return DiffOperators(grid, (d1,), {(0, 0): d2})


def fd_weights(x, x0, m):
    """Fornberg weights for derivatives 0..m at x0 on arbitrary nodes x."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.zeros((m + 1, n))
    w[0, 0] = 1.0
    c1, c4 = 1.0, x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for kk in range(mn, 0, -1):
                    w[kk, i] = c1 * (kk * w[kk - 1, i - 1] - c5 * w[kk, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for kk in range(mn, 0, -1):
                w[kk, j] = (c4 * w[kk, j] - kk * w[kk - 1, j]) / c3
            w[0, j] = c4 * w[0, j] / c3
        c1 = c2
    return w


def _meridian_stencils(theta_lat):
    """Latitude stencils following the meridian circle across the poles.

    For each latitude i returns (latitudes, lon_shift_flags, w1, w2): stencil
    member latitudes, whether each member sits on the opposite longitude, and
    Fornberg weights for the first and second colatitude derivative.
    """
    nlat = len(theta_lat)
    width = min(STENCIL, 2 * nlat - 1)
    out = []
    for i in range(nlat):
        cand_t, cand_lat, cand_opp = [], [], []
        for ip in range(nlat):
            cand_t.append(theta_lat[ip] - theta_lat[i])
            cand_lat.append(ip)
            cand_opp.append(False)
            # same physical point reachable over either pole; keep nearer route
            t_north = -(theta_lat[i] + theta_lat[ip])
            t_south = 2.0 * np.pi - theta_lat[i] - theta_lat[ip]
            cand_t.append(t_north if abs(t_north) <= abs(t_south) else t_south)
            cand_lat.append(ip)
            cand_opp.append(True)
        cand_t = np.array(cand_t)
        pick = np.argsort(np.abs(cand_t), kind="stable")[:width]
        pick = pick[np.argsort(cand_t[pick], kind="stable")]
        t = cand_t[pick]
        w = fd_weights(t, 0.0, 2)
        center = int(np.nonzero(t == 0.0)[0][0])
        for order in (1, 2):
            w[order, center] -= w[order].sum()    # constants -> exactly zero
        out.append((np.array([cand_lat[p] for p in pick]),
                    np.array([cand_opp[p] for p in pick]),
                    w[1].copy(), w[2].copy()))
    return out


def _periodic_weights(n, h, width):
    """Uniform periodic stencil offsets and Fornberg weights (orders 1, 2)."""
    halfw = width // 2
    offs = np.arange(-halfw, halfw + 1)
    w = fd_weights(offs * h, 0.0, 2)
    for order in (1, 2):
        w[order, halfw] -= w[order].sum()
    return offs, w[1], w[2]


def _build_sphere_ops(grid: SphereGrid) -> DiffOperators:
    nlat, nlon = grid.resolution
    n_nodes = grid.n_nodes
    theta_lat = grid.theta.reshape(nlat, nlon)[:, 0]

    # longitude derivatives: periodic uniform stencils, kron over latitudes
    width = min(STENCIL, nlon - 1)
    if width % 2 == 0:
        width -= 1
    offs, w1, w2 = _periodic_weights(nlon, 2.0 * np.pi / nlon, width)
    cols = (np.arange(nlon)[:, None] + offs[None, :]) % nlon
    rows = np.repeat(np.arange(nlon), width)
    c1 = sp.csr_matrix((np.tile(w1, nlon), (rows, cols.ravel())), shape=(nlon, nlon))
    c2 = sp.csr_matrix((np.tile(w2, nlon), (rows, cols.ravel())), shape=(nlon, nlon))
    dphi1 = sp.kron(sp.identity(nlat, format="csr"), c1, format="csr")
    dphi2 = sp.kron(sp.identity(nlat, format="csr"), c2, format="csr")

    # latitude derivatives: meridian-circle stencils across the poles
    stencils = _meridian_stencils(theta_lat)
    swidth = len(stencils[0][2])
    rows, cols, v1, v2 = [], [], [], []
    jj = np.arange(nlon)
    for i, (lats, opp, wt1, wt2) in enumerate(stencils):
        base = i * nlon + jj
        for lat_ip, is_opp, a1, a2 in zip(lats, opp, wt1, wt2):
            col = lat_ip * nlon + ((jj + nlon // 2) % nlon if is_opp else jj)
            rows.append(base)
            cols.append(col)
            v1.append(np.full(nlon, a1))
            v2.append(np.full(nlon, a2))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    dth1 = sp.csr_matrix((np.concatenate(v1), (rows, cols)), shape=(n_nodes, n_nodes))
    dth2 = sp.csr_matrix((np.concatenate(v2), (rows, cols)), shape=(n_nodes, n_nodes))

    st = np.sin(grid.theta)
    ct = np.cos(grid.theta)
    inv_s = sp.diags(1.0 / st)
    # orthonormal-frame gradient (e_theta, e_phi) and covariant Hessian on the
    # round sphere: h_22 and h_12 pick up the metric connection terms
    g1 = dth1
    g2 = (inv_s @ dphi1).tocsr()
    h11 = dth2
    h12 = (inv_s @ (dth1 @ dphi1) - sp.diags(ct / st**2) @ dphi1).tocsr()
    h22 = (sp.diags(1.0 / st**2) @ dphi2 + sp.diags(ct / st) @ dth1).tocsr()
    return DiffOperators(grid, (g1, g2), {(0, 0): h11, (0, 1): h12, (1, 1): h22})


# ---------------------------------------------------------------------------
# even-subspace reduction
# ---------------------------------------------------------------------------

def even_representatives(grid: SphereGrid) -> np.ndarray:
    """Indices i with i < antipode[i]; one per antipodal pair."""
    idx = np.arange(grid.n_nodes)
    return idx[idx < grid.antipode]


def reduce_even_matrix(grid: SphereGrid, mat):
    """Compress a node-space operator to the even subspace, (1/2) E^T M E.

    E embeds an even-pair vector by duplicating each value onto both nodes of
    the pair; the result's spectrum is the operator's spectrum on even inputs.
    """
    reps = even_representatives(grid)
    anti = grid.antipode[reps]
    if sp.issparse(mat):
        m = mat.tocsr()
        combined = m[reps] + m[anti]
        combined = combined.tocsc()
        return 0.5 * (combined[:, reps] + combined[:, anti]).toarray()
    rows = mat[reps] + mat[anti]
    return 0.5 * (rows[:, reps] + rows[:, anti])


def reduce_even_matrix_sparse(grid: SphereGrid, mat) -> sp.csr_matrix:
    reps = even_representatives(grid)
    anti = grid.antipode[reps]
    m = mat.tocsr() if sp.issparse(mat) else sp.csr_matrix(mat)
    combined = (m[reps] + m[anti]).tocsc()
    return (0.5 * (combined[:, reps] + combined[:, anti])).tocsr()


def reduce_even_vector(grid: SphereGrid, values) -> np.ndarray:
    reps = even_representatives(grid)
    return 0.5 * (values[reps] + values[grid.antipode[reps]])


def expand_even_vector(grid: SphereGrid, reduced) -> np.ndarray:
    reps = even_representatives(grid)
    out = np.empty(grid.n_nodes)
    out[reps] = reduced
    out[grid.antipode[reps]] = reduced
    return out
