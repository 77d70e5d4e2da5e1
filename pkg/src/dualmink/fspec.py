"""Tiny grammar for prescribed densities.

A density is either a sum of even modes with amplitudes,

    "1"                      constant
    "1 + 0.05*cos(2t)"       circle modes cos(kt)/sin(kt), k even
    "1 + 0.05*cos(2theta)"   zonal sphere modes, k even
    "1 + 0.02*Y(2,1)"        real orthonormal spherical harmonics, even degree

or a density manufactured from a closed-form body at the sampling index q,

    "manufacture:ellipse(1.2,1.0)"        (dim 1)
    "manufacture:ellipsoid(1.1,1.0,1.0)"  (dim 2)
    "manufacture:ball(1.5)"

Odd modes are rejected when the expression is parsed, not when it is sampled:
an odd density can never come from an origin-symmetric body.  Arbitrary
expressions are deliberately not supported so the parser stays auditable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.special import sph_harm_y

from dualmink.body import AnalyticBody
from dualmink.sphere import SphereGrid, project_even

_MODE_RE = re.compile(r"^(cos|sin)\((\d+)\s*\*?\s*(t|θ|theta)\)$")
_HARM_RE = re.compile(r"^Y\((\d+),\s*(-?\d+)\)$")
_BODY_RE = re.compile(r"^(ball|ellipse|ellipsoid)\(([^)]*)\)$")


@dataclass(frozen=True)
class ModeTerm:
    amplitude: float
    func: str          # "const" | "cos" | "sin" | "harm"
    k: int = 0
    m: int = 0


@dataclass(frozen=True)
class DensitySpec:
    """Parsed density: either a sum of even modes or a manufactured body."""

    text: str
    dim: int
    terms: tuple = ()
    body: AnalyticBody | None = None

    def sample(self, grid: SphereGrid, q: float) -> np.ndarray:
        """Evaluate on the grid; the result is exactly even and positive."""
        if grid.dim != self.dim:
            raise ValueError(f"density written for dim={self.dim}, grid has dim={grid.dim}")
        if self.body is not None:
            vals = manufactured_density(self.body, grid, q)
        else:
            vals = np.zeros(grid.n_nodes)
            for term in self.terms:
                vals += term.amplitude * _eval_mode(term, grid)
        # the density is even by construction; projection makes it bit-exact
        vals = project_even(grid, vals)
        if vals.min() <= 0.0:
            raise ValueError(f"density {self.text!r} is not positive on the grid "
                             f"(min {vals.min():.3g})")
        return vals


def _eval_mode(term: ModeTerm, grid: SphereGrid) -> np.ndarray:
    if term.func == "const":
        return np.ones(grid.n_nodes)
    if term.func == "cos":
        return np.cos(term.k * grid.theta)
    if term.func == "sin":
        return np.sin(term.k * grid.theta)
    return real_spherical_harmonic(term.k, term.m, grid)


def real_spherical_harmonic(l: int, m: int, grid: SphereGrid) -> np.ndarray:
    if abs(m) > l:
        raise ValueError(f"harmonic order |m|={abs(m)} exceeds degree l={l}")
    y = sph_harm_y(l, abs(m), grid.theta, grid.phi)
    if m == 0:
        return np.real(y)
    if m > 0:
        return np.sqrt(2.0) * (-1.0) ** m * np.real(y)
    return np.sqrt(2.0) * (-1.0) ** m * np.imag(y)


def parse_density(text: str, dim: int) -> DensitySpec:
    """Parse a density expression, rejecting odd modes outright."""
    stripped = text.strip()
    if stripped.startswith("manufacture:"):
        return DensitySpec(text, dim, body=_parse_body(stripped[len("manufacture:"):], dim))
    terms = []
    for sign, chunk in _split_terms(stripped):
        terms.append(_parse_term(sign, chunk, dim, text))
    return DensitySpec(text, dim, terms=tuple(terms))


def _split_terms(expr: str):
    expr = expr.replace(" ", "")
    if not expr:
        raise ValueError("empty density expression")
    out, sign, depth, buf = [], 1.0, 0, []
    for i, ch in enumerate(expr):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and i > 0 and expr[i - 1] not in "eE":
            out.append((sign, "".join(buf)))
            sign = 1.0 if ch == "+" else -1.0
            buf = []
        else:
            buf.append(ch)
    out.append((sign, "".join(buf)))
    return out


def _parse_term(sign: float, chunk: str, dim: int, text: str) -> ModeTerm:
    if not chunk:
        raise ValueError(f"malformed density expression {text!r}")
    if "*" in chunk and not _MODE_RE.match(chunk):
        coeff_s, _, mode_s = chunk.partition("*")
        amplitude = sign * float(coeff_s)
    else:
        try:
            return ModeTerm(sign * float(chunk), "const")
        except ValueError:
            amplitude, mode_s = sign, chunk
    m = _MODE_RE.match(mode_s)
    if m:
        func, k = m.group(1), int(m.group(2))
        if dim == 2 and func == "sin":
            raise ValueError(f"sin modes are not smooth on the sphere: {mode_s!r}")
        if k % 2 != 0:
            raise ValueError(
                f"odd mode {mode_s!r} rejected: an even density has no odd modes")
        return ModeTerm(amplitude, func, k=k)
    hm = _HARM_RE.match(mode_s)
    if hm:
        if dim != 2:
            raise ValueError("Y(l,m) modes are only defined on the sphere (dim 2)")
        l, order = int(hm.group(1)), int(hm.group(2))
        if l % 2 != 0:
            raise ValueError(
                f"odd-degree harmonic {mode_s!r} rejected: breaks evenness")
        if abs(order) > l:
            raise ValueError(f"harmonic order out of range in {mode_s!r}")
        return ModeTerm(amplitude, "harm", k=l, m=order)
    raise ValueError(f"cannot parse density term {chunk!r} in {text!r}")


def _parse_body(spec: str, dim: int) -> AnalyticBody:
    m = _BODY_RE.match(spec.strip())
    if not m:
        raise ValueError(f"cannot parse manufactured body {spec!r}")
    kind = m.group(1)
    params = [float(p) for p in m.group(2).split(",") if p.strip()]
    if kind == "ball":
        if len(params) != 1:
            raise ValueError("ball takes one radius")
        return AnalyticBody.ball(params[0])
    if kind == "ellipse":
        if dim != 1 or len(params) != 2:
            raise ValueError("ellipse(a,b) is the dim-1 body")
        return AnalyticBody.ellipsoid(*params)
    if len(params) != 3 or dim != 2:
        raise ValueError("ellipsoid(a1,a2,a3) is the dim-2 body")
    return AnalyticBody.ellipsoid(*params)


# ---------------------------------------------------------------------------
# closed-form densities and exact supports of the manufactured bodies
# ---------------------------------------------------------------------------

def exact_support_values(body: AnalyticBody, grid: SphereGrid) -> np.ndarray:
    if body.kind == "ball":
        return np.full(grid.n_nodes, body.params[0])
    if body.kind == "ellipsoid":
        axes = np.asarray(body.params)
        sq = grid.nodes * grid.nodes
        return np.sqrt(sq @ axes**2)
    raise ValueError(f"no closed-form density for body kind {body.kind!r}")


def manufactured_density(body: AnalyticBody, grid: SphereGrid, q: float) -> np.ndarray:
    """Exact density of a closed-form body, so the solver can be run backwards.

    Ellipse: h'' + h = a^2 b^2 / h^3 gives g = (a^2 b^2 / h^2) rho^(q-2).
    Ellipsoid: det b = (a1 a2 a3)^2 / h^4 and |Dh| = |A^2 x| / h give
    g = (a1 a2 a3)^2 h^(-3) rho^(q-3).
    """
    if body.kind == "ball":
        return np.full(grid.n_nodes, body.params[0] ** q)
    axes = np.asarray(body.params)
    h = exact_support_values(body, grid)
    if grid.dim == 1:
        a, b = axes
        hp = (b**2 - a**2) * grid.nodes[:, 0] * grid.nodes[:, 1] / h
        rho = np.sqrt(h**2 + hp**2)
        return (a * b) ** 2 / h**2 * rho ** (q - 2.0)
    sq = grid.nodes * grid.nodes
    rho = np.sqrt(sq @ axes**4) / h
    return np.prod(axes) ** 2 * h ** (-3.0) * rho ** (q - 3.0)
