"""Homotopy continuation with a damped Newton corrector for the density equation.

The root problem is written in log form,

    G(h) = log sigma_n + log h + (q - n - 1) log |Dh| - log f,

whose roots coincide with those of the polynomial form since every factor is
positive on strictly convex bodies.  The linearization of G at the unit ball
is exactly the Laplacian plus q, which is invertible on even functions for
0 < q <= n; the continuation path (1-t) + t f starts from the isotropic
problem whose unique even solution is the unit ball.

Every accepted iterate is projected onto the even subspace (bit-exact) and is
certified strictly convex; the line search never accepts a step that
increases the residual 2-norm.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from dualmink.body import SupportFunction, evaluate_geometry, hausdorff_distance
from dualmink.sphere import (
    SphereGrid,
    expand_even_vector,
    get_operators,
    project_even,
    reduce_even_matrix,
    reduce_even_vector,
)


@dataclass
class SolverConfig:
    homotopy_steps: int = 10
    newton_tol: float | None = None  # residual sup-norm; None = per-grid default
    max_newton_iters: int = 30
    shrink: float = 0.5              # line-search backtracking factor
    min_step: float = 1e-6
    convexity_floor: float = 1e-8    # min principal radius > floor * mean(h)
    override_q_range: bool = False
    max_bisections: int = 10

    def __post_init__(self):
        if self.homotopy_steps < 1:
            raise ValueError("homotopy_steps must be >= 1")
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink factor must lie in (0, 1)")
        tols = [self.min_step, self.convexity_floor]
        if self.newton_tol is not None:
            tols.append(self.newton_tol)
        if min(tols) <= 0.0:
            raise ValueError("tolerances must be positive")

    def resolved_newton_tol(self, grid) -> float:
        """Residual target, kept above the grid's rounding floor.

        On the lat-lon sphere grid the 1/sin^2(theta) factors near the poles
        amplify roundoff in the longitude second derivatives, so the
        attainable sup-residual grows like eps * (N_lat N_lon)^2; the default
        sits an order of magnitude above that floor.
        """
        if self.newton_tol is not None:
            return self.newton_tol
        if grid.dim == 1:
            return 1e-10
        return max(1e-10, 2.0e-17 * float(grid.n_nodes) ** 2)


@dataclass
class SolveResult:
    h: SupportFunction
    residual_sup: float
    converged: bool
    newton_log: list                 # per-iteration dicts
    homotopy: list = field(default_factory=list)   # per-stage dicts
    failure_reason: str = ""
    wall_time: float = 0.0
    q: float = 0.0
    newton_tol: float = 1e-10        # resolved residual target of the run


def residual(h: SupportFunction, f, q: float) -> np.ndarray:
    """Per-node log-form residual; +inf entries flag a non-convex iterate."""
    g, _ = _residual_geometry(h.grid, h.values, np.asarray(f, float), q)
    return g


def _residual_geometry(grid, values, f, q):
    n = grid.dim
    h = SupportFunction.__new__(SupportFunction)   # skip validation on trials
    h.grid = grid
    h.values = values
    h.even = True
    geom = evaluate_geometry(h)
    bad = (geom.sigma_n <= 0.0) | (values <= 0.0) | (f <= 0.0)
    if np.any(bad):
        out = np.full(grid.n_nodes, np.inf)
        good = ~bad
        with np.errstate(all="ignore"):
            out[good] = (np.log(geom.sigma_n[good]) + np.log(values[good])
                         + (q - n - 1.0) * np.log(geom.rho_at_normal[good])
                         - np.log(f[good]))
        return out, geom
    g = (np.log(geom.sigma_n) + np.log(values)
         + (q - n - 1.0) * np.log(geom.rho_at_normal) - np.log(f))
    return g, geom


class LinearizedOperator:
    """Derivative of the log-form residual at a strictly convex iterate.

    full: matrix on all node values (dense for S^1, sparse for S^2);
    reduced: the even-subspace compression used for the Newton solve.
    """

    def __init__(self, grid, full):
        self.grid = grid
        self.full = full
        self._reduced = None

    @property
    def reduced(self) -> np.ndarray:
        if self._reduced is None:
            self._reduced = reduce_even_matrix(self.grid, self.full)
        return self._reduced

    def apply(self, eta: np.ndarray) -> np.ndarray:
        return self.full @ eta

    def solve_even(self, rhs: np.ndarray) -> np.ndarray:
        """Solve L eta = rhs on the even subspace; returns a full node vector."""
        eta_red = np.linalg.solve(self.reduced, reduce_even_vector(self.grid, rhs))
        return expand_even_vector(self.grid, eta_red)


def linearize(h: SupportFunction, q: float) -> LinearizedOperator:
    """Assemble L eta = b^ij (eta_ij + eta d_ij) + eta/h + (q-n-1)(h eta + <grad h, grad eta>)/rho^2."""
    grid = h.grid
    n = grid.dim
    geom = evaluate_geometry(h)
    if not geom.valid:
        raise ValueError("linearization needs a strictly convex iterate")
    ops = get_operators(grid)
    if n == 1:
        binv = 1.0 / geom.b[:, 0, 0]
        binv_fields = {(0, 0): binv}
        trace_binv = binv
    else:
        binv_fields = {
            (0, 0): geom.b[:, 1, 1] / geom.sigma_n,
            (0, 1): -2.0 * geom.b[:, 0, 1] / geom.sigma_n,
            (1, 1): geom.b[:, 0, 0] / geom.sigma_n,
        }
        trace_binv = binv_fields[(0, 0)] + binv_fields[(1, 1)]
    rho2 = geom.rho_at_normal**2
    diag = trace_binv + 1.0 / geom.h + (q - n - 1.0) * geom.h / rho2
    grad_coef = (q - n - 1.0) * geom.grad / rho2[:, None]

    def rowscale(c, m):
        return sp.diags(c) @ m if sp.issparse(m) else c[:, None] * m

    terms = [rowscale(binv_fields[ab], ops.hess_mats[ab]) for ab in ops.hess_mats]
    terms += [rowscale(grad_coef[:, a], ops.grad_mats[a]) for a in range(n)]
    if sp.issparse(terms[0]):
        full = terms[0]
        for t in terms[1:]:
            full = full + t
        full = (full + sp.diags(diag)).tocsr()
    else:
        full = np.add.reduce(terms)
        full[np.diag_indices_from(full)] += diag
    return LinearizedOperator(grid, full)


def newton_solve(h0: SupportFunction, f, q: float, cfg: SolverConfig) -> SolveResult:
    """Damped Newton on the log-form residual, staying even and strictly convex."""
    grid = h0.grid
    f = np.asarray(f, dtype=float)
    tol = cfg.resolved_newton_tol(grid)
    start = time.perf_counter()
    h = project_even(grid, h0.values)
    g, geom = _residual_geometry(grid, h, f, q)
    if not geom.valid or h.min() <= 0.0:
        raise ValueError("initial iterate must be positive and strictly convex")
    log = []
    reason = ""
    converged = False
    for it in range(cfg.max_newton_iters + 1):
        res_sup = float(np.max(np.abs(g)))
        res_l2 = float(np.linalg.norm(g))
        log.append({"iter": it, "residual_sup": res_sup, "residual_l2": res_l2,
                    "min_radius": float(geom.radii.min()), "step": None})
        if res_sup <= tol:
            converged = True
            break
        if it == cfg.max_newton_iters:
            reason = "newton iteration limit reached"
            break
        op = linearize(_wrap(grid, h), q)
        try:
            eta = op.solve_even(-g)
        except np.linalg.LinAlgError:
            reason = "singular linearization (index q outside the invertible regime?)"
            break
        if not np.all(np.isfinite(eta)) or np.abs(eta).max() > 1e10 * max(1.0, h.max()):
            reason = "ill-conditioned linearization: Newton step blew up"
            break
        step = 1.0
        accepted = False
        while step >= cfg.min_step:
            trial = project_even(grid, h + step * eta)
            if trial.min() > 0.0:
                g_t, geom_t = _residual_geometry(grid, trial, f, q)
                floor = cfg.convexity_floor * float(trial.mean())
                if (geom_t.radii.min() > floor
                        and float(np.linalg.norm(g_t)) < res_l2):
                    h, g, geom = trial, g_t, geom_t
                    log[-1]["step"] = step
                    accepted = True
                    break
            step *= cfg.shrink
        if not accepted:
            reason = "line search stalled: no admissible decreasing step"
            break
    hs = _wrap(grid, h)
    return SolveResult(h=hs, residual_sup=float(np.max(np.abs(g))),
                       converged=converged and evaluate_geometry(hs).valid,
                       newton_log=log, failure_reason=reason,
                       wall_time=time.perf_counter() - start, q=q,
                       newton_tol=tol)


def _wrap(grid, values) -> SupportFunction:
    return SupportFunction(grid, values, even=True)


def _check_f(grid, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_nodes,):
        raise ValueError(f"f must have one value per node, got shape {f.shape}")
    if f.min() <= 0.0:
        raise ValueError("density f must be positive")
    dev = float(np.max(np.abs(f - f[grid.antipode])))
    if dev > 1e-13 * float(np.max(np.abs(f))):
        raise ValueError(f"density f must be even; antipodal deviation {dev:.3g}")
    return project_even(grid, f)


def check_q_range(grid, q, cfg):
    if not (0.0 < q <= grid.dim):
        if not cfg.override_q_range:
            raise ValueError(
                f"index q={q} outside the invertible regime (0, {grid.dim}]; "
                "pass override_q_range to explore anyway")
        warnings.warn(f"index q={q} outside (0, {grid.dim}]; the linearization "
                      "may be singular along the path", stacklevel=2)


def solve_homotopy(grid: SphereGrid, f, q: float, cfg: SolverConfig | None = None) -> SolveResult:
    """March (1-t) + t f from the unit ball at t=0 to the target density at t=1.

    Uniform t-increments with bisection on corrector failure; the t=0 problem
    has the unit ball as its unique even solution, which seeds the path.
    """
    cfg = cfg or SolverConfig()
    f = _check_f(grid, f)
    check_q_range(grid, q, cfg)
    start = time.perf_counter()
    h = _wrap(grid, np.ones(grid.n_nodes))
    stages = []
    t = 0.0
    dt = 1.0 / cfg.homotopy_steps
    last = None
    while t < 1.0:
        step_dt = min(dt, 1.0 - t)
        bisections = 0
        while True:
            t_try = t + step_dt
            f_t = (1.0 - t_try) + t_try * f
            result = newton_solve(h, f_t, q, cfg)
            if result.converged:
                break
            bisections += 1
            if bisections > cfg.max_bisections:
                result.homotopy = stages + [_stage(t_try, result, bisections)]
                result.failure_reason = (
                    f"homotopy breakdown at t={t_try:.6g} after "
                    f"{cfg.max_bisections} bisections: {result.failure_reason}")
                result.converged = False
                result.wall_time = time.perf_counter() - start
                result.q = q
                return result
            step_dt *= 0.5
        t = t_try
        h = result.h
        stages.append(_stage(t, result, bisections))
        last = result
    last.homotopy = stages
    last.wall_time = time.perf_counter() - start
    return last


def _stage(t, result, bisections):
    return {"t": t, "converged": result.converged,
            "residual_sup": result.residual_sup,
            "newton_iters": len(result.newton_log) - 1,
            "bisections": bisections,
            "min_radius": result.newton_log[-1]["min_radius"]}


@dataclass
class UniquenessReport:
    """Outcome of re-solving from several initializations without continuation."""

    tolerance: float
    converged: list                  # bool per init
    residuals: list                  # final sup residual per init
    pairwise_hausdorff: list         # condensed upper-triangle distances
    max_pairwise: float
    all_same: bool                   # every converged pair within tolerance


def uniqueness_probe(grid: SphereGrid, f, q: float, cfg: SolverConfig,
                     inits: list, tolerance: float = 1e-6) -> UniquenessReport:
    f = _check_f(grid, f)
    check_q_range(grid, q, cfg)
    results = [newton_solve(h0, f, q, cfg) for h0 in inits]
    solved = [r for r in results if r.converged]
    pair = []
    for i in range(len(solved)):
        for j in range(i + 1, len(solved)):
            pair.append(hausdorff_distance(solved[i].h, solved[j].h))
    max_pair = max(pair) if pair else 0.0
    return UniquenessReport(
        tolerance=tolerance,
        converged=[r.converged for r in results],
        residuals=[r.residual_sup for r in results],
        pairwise_hausdorff=pair,
        max_pairwise=max_pair,
        all_same=bool(max_pair <= tolerance),
    )
