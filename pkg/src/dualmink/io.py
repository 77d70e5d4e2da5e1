"""Structured-text persistence for bodies, solve results, reports and tables.

Documents are JSON with a fixed key order and a schema tag.  Floats are
written with Python's shortest round-trip representation (up to 17
significant digits), so serialize/parse is bit-exact.  Timing data is
quarantined under the single top-level key "timings" so byte-level
comparisons of re-runs can drop it in one place.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from dualmink.body import SupportFunction
from dualmink.sphere import SphereGrid, build_grid

BODY_SCHEMA = "dualmink/body-v1"
RESULT_SCHEMA = "dualmink/solve-result-v1"
REPORT_SCHEMA = "dualmink/verify-report-v1"
DENSITY_SCHEMA = "dualmink/density-v1"

SWEEP_COLUMNS = [
    "n", "q", "epsilon", "mode", "converged", "sup_h_minus_1",
    "h_ratio", "density_ratio", "delta2", "stability_bound", "stability_pass",
]


class DocumentError(Exception):
    """Missing, unreadable or schema-mismatched document."""


def write_document(path, doc: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return path


def read_document(path, schema: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise DocumentError(f"document not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, OSError) as exc:
        raise DocumentError(f"cannot read document {path}: {exc}") from exc
    if schema is not None and doc.get("schema") != schema:
        raise DocumentError(
            f"{path}: expected schema {schema!r}, found {doc.get('schema')!r}")
    return doc


def strip_timings(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k != "timings"}


def documents_match(a: dict, b: dict, ignore_timings: bool = True) -> bool:
    if ignore_timings:
        a, b = strip_timings(a), strip_timings(b)
    return json.dumps(a) == json.dumps(b)


# ---------------------------------------------------------------------------
# bodies
# ---------------------------------------------------------------------------

def resolution_to_doc(grid: SphereGrid):
    return grid.resolution[0] if grid.dim == 1 else list(grid.resolution)


def grid_from_doc(dim: int, resolution) -> SphereGrid:
    res = resolution if np.isscalar(resolution) else tuple(resolution)
    return build_grid(dim, res)


def body_to_doc(h: SupportFunction) -> dict:
    return {
        "schema": BODY_SCHEMA,
        "dim": h.grid.dim,
        "resolution": resolution_to_doc(h.grid),
        "even": bool(h.even),
        "values": [float(v) for v in h.values],
    }


def body_from_doc(doc: dict) -> SupportFunction:
    grid = grid_from_doc(doc["dim"], doc["resolution"])
    return SupportFunction(grid, np.array(doc["values"], dtype=float),
                           even=bool(doc["even"]))


def save_body(path, h: SupportFunction) -> Path:
    return write_document(path, body_to_doc(h))


def load_body(path) -> SupportFunction:
    return body_from_doc(read_document(path, BODY_SCHEMA))


# ---------------------------------------------------------------------------
# solve results
# ---------------------------------------------------------------------------

def result_to_doc(result, config_doc: dict, f_values) -> dict:
    return {
        "schema": RESULT_SCHEMA,
        "config": config_doc,
        "q": float(result.q),
        "converged": bool(result.converged),
        "residual_sup": float(result.residual_sup),
        "newton_tol": float(result.newton_tol),
        "failure_reason": result.failure_reason,
        "f": [float(v) for v in f_values],
        "h": [float(v) for v in result.h.values],
        "homotopy": result.homotopy,
        "newton_log": result.newton_log,
        "timings": {"wall_s": float(result.wall_time)},
    }


def load_result(path) -> dict:
    return read_document(path, RESULT_SCHEMA)


def result_grid(doc: dict) -> SphereGrid:
    cfg = doc["config"]
    return grid_from_doc(cfg["dim"], cfg["resolution"])


def result_support(doc: dict) -> SupportFunction:
    grid = result_grid(doc)
    return SupportFunction(grid, np.array(doc["h"], dtype=float), even=True)


# ---------------------------------------------------------------------------
# delimited outputs
# ---------------------------------------------------------------------------

def write_density_csv(path, grid: SphereGrid, g) -> Path:
    """Per-node density table for plotting: node, coordinates, g."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coords = ["x", "y"] if grid.dim == 1 else ["x", "y", "z"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", *coords, "g"])
        for i in range(grid.n_nodes):
            writer.writerow([i, *(repr(float(c)) for c in grid.nodes[i]),
                             repr(float(g[i]))])
    return path


def write_sweep_csv(path, rows: list) -> Path:
    """Sweep summary with the documented column contract."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(row.get(k)) for k in SWEEP_COLUMNS})
    return path


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return value
