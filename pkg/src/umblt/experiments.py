"""Experiment configuration, measurement synthesis and orchestration."""

from __future__ import annotations

import copy
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, UMBLTError
from .functional import InternalFunctional, internal_functional
from .grid import DirectionSet, Grid2D, ScalarField, interpolate, interpolate_angular, relative_l2_error, write_csv
from .inversion import BasisSet, fixed_point_residual, fredholm_invert, neumann_invert
from .medium import contraction_audit, medium_from_spec
from .phantoms import PhantomSpec, render
from .transport import SolverSettings, solve_adjoint, solve_forward

__all__ = [
    "DEFAULTS",
    "ExperimentConfig",
    "ExperimentSetup",
    "RunReport",
    "load_config",
    "preset_config",
    "synthesize_measurement",
    "add_noise",
    "run_experiment",
    "write_pgm",
]

log = logging.getLogger(__name__)

DEFAULTS = {
    "name": "custom",
    "method": "neumann",
    "noise": [0.0, 0.01, 0.02, 0.05],
    "seed": None,
    "domain": {"x1": [0.0, 1.0], "x2": [0.0, 1.0]},
    "grids": {"forward": [121, 121], "reconstruction": [61, 61], "directions": 8},
    "medium": {"sigma": {"affine": [0.1, 0.1, 0.0]}, "kernel": {"hg": 0.5}},
    "adjoint": {"boundary": 1.0},
    "sources": [{"name": "S1", "gaussian": {"center": [0.5, 0.5], "rate": 10.0}}],
    "solver": {"tolerance": 1e-10, "max_iterations": 50_000, "damping": 1.0},
    "inversion": {
        "tolerance": 1e-6,
        "max_iterations": 200,
        "alternating": True,
        "relative": True,
        "svd_rtol": 1e-10,
        "cache_dir": "",
    },
    "basis": {"poly_degree": 10, "pyramid_divisions": 20, "use_polynomials": True, "use_pyramids": True},
    "output": {"directory": "runs/custom", "pgm": True},
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in ("medium",):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class ExperimentConfig:
    """Validated view of the nested config tables (see :data:`DEFAULTS`)."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        self.data = _merge(DEFAULTS, self.data)
        self.validate()

    def validate(self):
        d = self.data
        if d["method"] not in ("neumann", "fredholm"):
            raise ConfigError(f"method must be 'neumann' or 'fredholm', got {d['method']!r}")
        for level in d["noise"]:
            if not 0.0 <= float(level) < 1.0:
                raise ConfigError(f"noise levels must lie in [0, 1), got {level}")
        if not d["sources"]:
            raise ConfigError("at least one source is required")
        for entry in d["sources"]:
            PhantomSpec.from_config(entry)
        self.forward_grid, self.recon_grid  # noqa: B018 - construct to validate
        if self.forward_grid == self.recon_grid:
            log.warning("forward and reconstruction grids coincide: results commit the inverse crime")

    def require_seed(self):
        """The configured seed; noise cannot be drawn without one."""
        if self.data["seed"] is None:
            if any(lv > 0 for lv in self.noise_levels):
                raise ConfigError("a seed is required when any noise level is positive (use --seed)")
            return 0
        return int(self.data["seed"])

    def __getitem__(self, key):
        return self.data[key]

    def _grid(self, which):
        nx, ny = (int(n) for n in self.data["grids"][which])
        (a, b), (c, e) = self.data["domain"]["x1"], self.data["domain"]["x2"]
        try:
            return Grid2D(nx, ny, float(a), float(b), float(c), float(e))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def forward_grid(self) -> Grid2D:
        return self._grid("forward")

    @property
    def recon_grid(self) -> Grid2D:
        return self._grid("reconstruction")

    @property
    def directions(self) -> DirectionSet:
        return DirectionSet(int(self.data["grids"]["directions"]))

    @property
    def solver_settings(self) -> SolverSettings:
        s = self.data["solver"]
        return SolverSettings(float(s["tolerance"]), int(s["max_iterations"]), float(s.get("damping", 1.0)))

    @property
    def basis(self) -> BasisSet:
        b = self.data["basis"]
        return BasisSet(
            int(b["poly_degree"]),
            int(b["pyramid_divisions"]),
            bool(b["use_polynomials"]),
            bool(b["use_pyramids"]),
        )

    @property
    def noise_levels(self):
        return [float(v) for v in self.data["noise"]]

    @property
    def output_dir(self) -> Path:
        return Path(self.data["output"]["directory"])

    def source_names(self):
        return [e.get("name", f"source{i}") if isinstance(e, dict) else e for i, e in enumerate(self.data["sources"])]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Copy with CLI-style overrides applied (``None`` values are ignored)."""
        d = copy.deepcopy(self.data)
        if kw.get("seed") is not None:
            d["seed"] = int(kw["seed"])
        if kw.get("noise") is not None:
            d["noise"] = [float(v) for v in kw["noise"]]
        if kw.get("out") is not None:
            d["output"]["directory"] = str(kw["out"])
        if kw.get("grid") is not None:
            d["grids"]["forward"] = [int(v) for v in kw["grid"]]
        if kw.get("recon_grid") is not None:
            d["grids"]["reconstruction"] = [int(v) for v in kw["recon_grid"]]
        if kw.get("directions") is not None:
            d["grids"]["directions"] = int(kw["directions"])
        if kw.get("method") is not None:
            d["method"] = kw["method"]
        return ExperimentConfig(d)

    def to_toml(self) -> str:
        import tomli_w

        d = copy.deepcopy(self.data)
        if d["seed"] is None:
            d.pop("seed")
        return tomli_w.dumps(d)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    return ExperimentConfig(data)


def preset_config(number) -> ExperimentConfig:
    name = f"experiment{int(number)}.toml"
    try:
        text = resources.files("umblt.presets").joinpath(name).read_text()
    except FileNotFoundError:
        raise ConfigError(f"no preset {number}; presets are 1-4") from None
    return ExperimentConfig(tomllib.loads(text))


class ExperimentSetup:
    """Shared state for one configuration: media, adjoint weight, rendered sources."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.settings = cfg.solver_settings
        self.directions = cfg.directions
        self.forward_grid = cfg.forward_grid
        self.recon_grid = cfg.recon_grid
        self.medium_forward = medium_from_spec(cfg["medium"], self.forward_grid, self.directions)
        self.medium_recon = self.medium_forward.on_grid(self.recon_grid)

    @cached_property
    def v0_forward(self):
        sol = solve_adjoint(self.medium_forward, float(self.cfg["adjoint"]["boundary"]), self.settings)
        log.info("adjoint solve: %d sweeps", sol.iterations)
        return sol.field

    @cached_property
    def v0_recon(self):
        return interpolate_angular(self.v0_forward, self.recon_grid)

    def audit(self):
        return contraction_audit(self.medium_recon, self.v0_recon)

    def source(self, index) -> ScalarField:
        # smoothing widths are counted in reconstruction-grid pixels
        spec = PhantomSpec.from_config(self.cfg["sources"][index])
        return render(spec, self.forward_grid, pixel=self.recon_grid.dx1)

    def truth(self, index) -> ScalarField:
        return interpolate(self.source(index), self.recon_grid)

    def forward_solution(self, index):
        return solve_forward(self.medium_forward, self.source(index), 0.0, self.settings)

    def measurement(self, index) -> InternalFunctional:
        S = self.source(index)
        u = solve_forward(self.medium_forward, S, 0.0, self.settings).field
        H = internal_functional(u, self.v0_forward, S, self.medium_forward)
        meta = {
            "adjoint_boundary": float(self.cfg["adjoint"]["boundary"]),
            "forward_grid": [self.forward_grid.nx, self.forward_grid.ny],
            "source": self.cfg.source_names()[index],
        }
        return InternalFunctional(interpolate(H.h, self.recon_grid), meta)

    def invert(self, H: InternalFunctional, method=None):
        method = method or self.cfg["method"]
        inv = self.cfg["inversion"]
        if method == "neumann":
            return neumann_invert(
                H,
                self.v0_recon,
                self.medium_recon,
                tol=float(inv["tolerance"]),
                max_iter=int(inv["max_iterations"]),
                alternating=bool(inv["alternating"]),
                relative=bool(inv["relative"]),
                settings=self.settings,
            )
        if method == "fredholm":
            return fredholm_invert(
                H,
                self.v0_recon,
                self.medium_recon,
                self.cfg.basis,
                svd_rtol=float(inv["svd_rtol"]),
                settings=self.settings,
                cache_dir=inv.get("cache_dir") or None,
            )
        raise ConfigError(f"unknown method {method!r}")


def synthesize_measurement(cfg: ExperimentConfig, source_index=0, setup: ExperimentSetup = None):
    """Internal functional for one configured source, on the reconstruction grid."""
    setup = setup or ExperimentSetup(cfg)
    return setup.measurement(source_index)


def add_noise(H: InternalFunctional, level, seed) -> InternalFunctional:
    """Multiplicative uniform noise: ``H * (1 + level * xi)`` with ``xi ~ U(-1, 1)``."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return H
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-1.0, 1.0, size=H.h.values.shape)
    meta = dict(H.v0_meta, noise_level=float(level))
    return InternalFunctional(H.h * (1.0 + level * xi), meta)


def noise_seed(seed, source_index, level_index):
    return np.random.SeedSequence([int(seed), int(source_index), int(level_index)])


def write_pgm(f: ScalarField, path):
    """8-bit binary greyscale image, top row = largest x2."""
    v = f.values[::-1]
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
    img = np.round(scaled * 255).astype(np.uint8)
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


@dataclass
class RunReport:
    name: str
    method: str
    entries: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def errors(self, source):
        return {e["noise"]: e.get("relative_error") for e in self.entries if e["source"] == source}

    def to_dict(self):
        return {"name": self.name, "method": self.method, "audit": self.audit, "entries": self.entries, "files": self.files}

    def summary_lines(self):
        lines = [f"experiment {self.name} ({self.method})"]
        for key, value in self.audit.items():
            lines.append(f"audit {key}: {value}")
        for e in self.entries:
            if e.get("error_message"):
                lines.append(f"{e['source']} noise={e['noise']:.2%}: FAILED {e['error_message']}")
                continue
            extra = f"iterations={e['iterations_or_rank']}" if self.method == "neumann" else (
                f"rank={e['iterations_or_rank']}/{e['basis_size']} gram_residual={e['gram_residual']:.3e}"
            )
            lines.append(
                f"{e['source']} noise={e['noise']:.2%}: relative L2 error {e['relative_error']:.4%} "
                f"{extra} wall={e['wall_time']:.2f}s"
            )
        return lines


def _level_dir(out, source, level):
    return Path(out) / source / f"noise_{level * 100:g}pct"


def run_experiment(cfg: ExperimentConfig, out_dir=None, setup: ExperimentSetup = None, echo=print) -> RunReport:
    """Synthesize, perturb, invert and score every configured source and noise level."""
    out = Path(out_dir) if out_dir is not None else cfg.output_dir
    setup = setup or ExperimentSetup(cfg)
    method = cfg["method"]
    report = RunReport(cfg["name"], method)
    audit = setup.audit()
    wp = audit.wellposedness
    report.audit = {
        "rho": wp.rho,
        "alpha": wp.alpha,
        "x1_holds": wp.x1_holds,
        "diam_rho": wp.diam_rho,
        "x2_holds": wp.x2_holds,
        "v0_sup": audit.v0_sup,
        "v0_integral_inf": audit.v0_integral_inf,
        "bound_x1": audit.bound_x1,
        "bound_x2": audit.bound_x2,
        "neumann_guaranteed": audit.neumann_guaranteed,
    }
    echo(f"[{cfg['name']}] well-posedness: {wp.summary()}")
    echo(f"[{cfg['name']}] contraction audit: {audit.summary()}")
    if method == "neumann" and not audit.neumann_guaranteed:
        echo(f"[{cfg['name']}] contraction condition not met; running the Neumann series anyway")
    seed = cfg.require_seed()
    pgm = bool(cfg["output"].get("pgm", True))
    for si, name in enumerate(cfg.source_names()):
        truth = setup.truth(si)
        H = setup.measurement(si)
        tdir = Path(out) / name
        tdir.mkdir(parents=True, exist_ok=True)
        write_csv(truth, tdir / "truth.csv")
        report.files.append(str(tdir / "truth.csv"))
        for li, level in enumerate(cfg.noise_levels):
            entry = {"source": name, "noise": level}
            t0 = time.perf_counter()
            try:
                Hn = add_noise(H, level, noise_seed(seed, si, li))
                result = setup.invert(Hn, method)
            except UMBLTError as exc:
                entry["error_message"] = f"{type(exc).__name__}: {exc}"
                report.entries.append(entry)
                echo(f"[{cfg['name']}] {name} noise {level:.0%}: {entry['error_message']}")
                continue
            err = relative_l2_error(result.source, truth)
            ldir = _level_dir(out, name, level)
            ldir.mkdir(parents=True, exist_ok=True)
            paths = {"truth": ldir / "truth.csv", "reconstruction": ldir / "reconstruction.csv", "difference": ldir / "difference.csv"}
            write_csv(truth, paths["truth"])
            write_csv(result.source, paths["reconstruction"])
            write_csv(truth - result.source, paths["difference"])
            if pgm:
                write_pgm(result.source, ldir / "reconstruction.pgm")
                write_pgm(truth - result.source, ldir / "difference.pgm")
            entry.update(
                relative_error=err,
                iterations_or_rank=result.iterations_or_rank,
                converged=result.converged,
                residual_history=result.residual_history,
                wall_time=time.perf_counter() - t0,
                files={k: str(v) for k, v in paths.items()},
            )
            if method == "neumann":
                entry["fixed_point_residual"] = fixed_point_residual(
                    result, Hn, setup.v0_recon, setup.medium_recon, setup.settings
                )
            else:
                entry.update(gram_residual=result.gram_residual, basis_size=result.basis_size)
            report.entries.append(entry)
            report.files.extend(str(p) for p in paths.values())
            echo(f"[{cfg['name']}] {report.summary_lines()[-1]}")
    out.mkdir(parents=True, exist_ok=True)
    # wall times and the output location vary between reruns; keep them out of the JSON
    stable = report.to_dict()

    def rel(p):
        return Path(p).relative_to(out).as_posix()

    stable["files"] = [rel(p) for p in stable["files"]]
    stable["entries"] = [
        {k: ({n: rel(p) for n, p in v.items()} if k == "files" else v) for k, v in e.items() if k != "wall_time"}
        for e in stable["entries"]
    ]
    (out / "report.json").write_text(json.dumps(stable, indent=2, default=float))
    (out / "summary.txt").write_text("\n".join(report.summary_lines()) + "\n")
    return report
