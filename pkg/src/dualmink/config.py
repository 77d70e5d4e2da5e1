"""Run and sweep configuration: parsing, validation, stable round trips."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from dualmink.fspec import DensitySpec, parse_density
from dualmink.io import DocumentError, read_document, write_document
from dualmink.solve import SolverConfig
from dualmink.sphere import SphereGrid, build_grid

RUN_SCHEMA = "dualmink/run-config-v1"
SWEEP_SCHEMA = "dualmink/sweep-spec-v1"


@dataclass
class RunConfig:
    """One solve: grid, index q, density expression, solver knobs, seed."""

    dim: int
    resolution: object            # int (dim 1) or [N_lat, N_lon] (dim 2)
    q: float
    f: str
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        self.resolution = (int(self.resolution) if self.dim == 1
                           else [int(v) for v in self.resolution])
        self.q = float(self.q)
        self.seed = int(self.seed)
        # parse now so malformed or odd-mode densities fail before any solve
        self.density: DensitySpec = parse_density(self.f, self.dim)

    def build_grid(self) -> SphereGrid:
        res = self.resolution if self.dim == 1 else tuple(self.resolution)
        return build_grid(self.dim, res)

    def to_doc(self) -> dict:
        doc = {
            "schema": RUN_SCHEMA,
            "dim": self.dim,
            "resolution": self.resolution,
            "q": self.q,
            "f": self.f,
            "seed": self.seed,
            "solver": asdict(self.solver),
        }
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "RunConfig":
        if doc.get("schema") not in (None, RUN_SCHEMA):
            raise DocumentError(f"not a run config: schema {doc.get('schema')!r}")
        solver = SolverConfig(**doc.get("solver", {}))
        return cls(dim=doc["dim"], resolution=doc["resolution"], q=doc["q"],
                   f=doc["f"], seed=doc.get("seed", 0), solver=solver)


def load_run_config(path) -> RunConfig:
    return RunConfig.from_doc(read_document(path))


def save_run_config(path, cfg: RunConfig):
    return write_document(path, cfg.to_doc())


@dataclass
class SweepSpec:
    """Cartesian run matrix over q, perturbation amplitude and mode."""

    dim: int
    resolution: object
    q_values: list
    epsilons: list
    modes: list
    seeds: list = field(default_factory=lambda: [0])
    max_runs: int = 256
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.q_values:
            raise ValueError("sweep needs at least one q value (empty matrix)")
        if not self.epsilons:
            raise ValueError("sweep needs at least one amplitude (empty matrix)")
        if not self.modes:
            raise ValueError("sweep needs at least one mode (empty matrix)")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")
        size = (len(self.q_values) * len(self.epsilons) * len(self.modes)
                * len(self.seeds))
        if size > self.max_runs:
            raise ValueError(
                f"sweep matrix has {size} runs, exceeding the cap {self.max_runs}")

    def run_matrix(self) -> list:
        """Expanded (label, RunConfig) rows in deterministic order."""
        rows = []
        for q in self.q_values:
            for eps in self.epsilons:
                for mode in self.modes:
                    for seed in self.seeds:
                        f_expr = f"1+{float(eps)!r}*{mode}" if eps else "1"
                        cfg = RunConfig(dim=self.dim, resolution=self.resolution,
                                        q=q, f=f_expr, seed=seed,
                                        solver=self.solver)
                        rows.append(({"q": float(q), "epsilon": float(eps),
                                      "mode": mode, "seed": int(seed)}, cfg))
        return rows

    def to_doc(self) -> dict:
        return {
            "schema": SWEEP_SCHEMA,
            "dim": self.dim,
            "resolution": self.resolution,
            "q_values": [float(q) for q in self.q_values],
            "epsilons": [float(e) for e in self.epsilons],
            "modes": list(self.modes),
            "seeds": [int(s) for s in self.seeds],
            "max_runs": self.max_runs,
            "solver": asdict(self.solver),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SweepSpec":
        if doc.get("schema") not in (None, SWEEP_SCHEMA):
            raise DocumentError(f"not a sweep spec: schema {doc.get('schema')!r}")
        return cls(dim=doc["dim"], resolution=doc["resolution"],
                   q_values=doc["q_values"], epsilons=doc["epsilons"],
                   modes=doc["modes"], seeds=doc.get("seeds", [0]),
                   max_runs=doc.get("max_runs", 256),
                   solver=SolverConfig(**doc.get("solver", {})))


def load_sweep_spec(path) -> SweepSpec:
    return SweepSpec.from_doc(read_document(path))
