"""Command-line front end.

    softwg CONFIG.json --experiment {transverse,variational,spectrum,sweep}
           [--out PATH] [--format {csv,json}] [--threads N] [--verbose]

Data goes to stdout (or ``--out``), diagnostics to stderr.  Exit codes:
0 success, 2 configuration error, 3 solver failure, 4 refinement study not
converged.
"""

import argparse
import concurrent.futures
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from . import __version__
from .errors import CertificateNotFound, DivergentExt, NotConverged, SoftwgError
from .geometry import WaveguideGeometry
from .hamiltonian2d import Grid2D, discrete_spectrum, essential_threshold
from .transverse import (Delta, SquareWell, Tabulated, log_gap_slope, solve_double_well,
                         solve_ground_state)
from .variational import (Mollifier, bound_state_certificate, q_tilde_full_quadrature,
                          variational_limit)

log = logging.getLogger("softwg")

EXIT_CONFIG, EXIT_SOLVER, EXIT_NOT_CONVERGED = 2, 3, 4
EXPERIMENTS = ("transverse", "variational", "spectrum", "sweep")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometryConfig:
    R: float = 4.0
    theta: float = math.pi / 2
    a: float = 0.5


@dataclass(frozen=True)
class ProfileConfig:
    kind: str = "square_well"
    alpha: Optional[float] = None
    V0: Optional[float] = None
    table: Optional[str] = None


@dataclass(frozen=True)
class GridConfig:
    h: float = 1.0 / 16
    box: tuple = (-20.0, 20.0, -12.0, 20.0)
    refinement_levels: int = 2
    subsamples: int = 16
    method: str = "cell"


@dataclass(frozen=True)
class SolverConfig:
    k: int = 1
    tol: float = 1e-3
    eig_tol: float = 1e-9
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    R_list: tuple = (3.0, 5.0, 7.0)
    n_list: tuple = (100, 400, 1600)
    theta_list: tuple = (0.5, 1.5, 2.5, 3.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("R_list", "n_list", "theta_list"):
            d[key] = list(d[key])
        d["grid"]["box"] = list(d["grid"]["box"])
        return d

    def make_geometry(self, theta: Optional[float] = None) -> WaveguideGeometry:
        g = self.geometry
        return WaveguideGeometry(g.R, g.theta if theta is None else theta, g.a)

    def make_profile(self):
        p = self.profile
        if p.kind == "delta":
            return Delta(p.alpha)
        if p.kind == "square_well":
            return SquareWell(p.V0, self.geometry.a)
        return Tabulated.from_csv(p.table)

    def make_grid(self) -> Grid2D:
        x0, x1, y0, y1 = self.grid.box
        return Grid2D(x0, x1, y0, y1, self.grid.h)


def _section(cls, raw, where):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    return cls(**raw)


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite")
    return float(value)


def parse_config(raw: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig` from decoded JSON."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {', '.join(unknown)}")
    try:
        geo = _section(GeometryConfig, raw.get("geometry"), "geometry")
        prof = _section(ProfileConfig, raw.get("profile"), "profile")
        grid = _section(GridConfig, raw.get("grid"), "grid")
        sol = _section(SolverConfig, raw.get("solver"), "solver")
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    geo = GeometryConfig(*(_number(getattr(geo, k), f"geometry.{k}") for k in ("R", "theta", "a")))
    if prof.kind not in ("delta", "square_well", "tabulated"):
        raise ConfigError(f"profile.kind must be delta, square_well or tabulated, got {prof.kind!r}")
    needed = {"delta": "alpha", "square_well": "V0", "tabulated": "table"}[prof.kind]
    extra = [k for k in ("alpha", "V0", "table") if k != needed and getattr(prof, k) is not None]
    if extra:
        raise ConfigError(f"profile kind {prof.kind} does not take {', '.join(extra)}")
    if getattr(prof, needed) is None:
        raise ConfigError(f"profile kind {prof.kind} requires {needed}")
    if needed == "table":
        if not isinstance(prof.table, str):
            raise ConfigError("profile.table must be a path")
    else:
        prof = ProfileConfig(prof.kind, **{needed: _number(getattr(prof, needed), f"profile.{needed}")})

    box = grid.box
    if not isinstance(box, (list, tuple)) or len(box) != 4:
        raise ConfigError("grid.box must be [x_min, x_max, y_min, y_max]")
    if grid.method not in ("cell", "point"):
        raise ConfigError("grid.method must be 'cell' or 'point'")
    grid = GridConfig(h=_number(grid.h, "grid.h"),
                      box=tuple(_number(b, "grid.box") for b in box),
                      refinement_levels=_number(grid.refinement_levels, "grid.refinement_levels",
                                                integer=True),
                      subsamples=_number(grid.subsamples, "grid.subsamples", integer=True),
                      method=grid.method)
    if grid.refinement_levels < 2:
        raise ConfigError("grid.refinement_levels must be at least 2")
    if grid.subsamples < 1:
        raise ConfigError("grid.subsamples must be positive")
    sol = SolverConfig(k=_number(sol.k, "solver.k", integer=True),
                       tol=_number(sol.tol, "solver.tol"),
                       eig_tol=_number(sol.eig_tol, "solver.eig_tol"),
                       seed=_number(sol.seed, "solver.seed", integer=True))
    if sol.k < 1 or sol.tol <= 0 or sol.eig_tol <= 0:
        raise ConfigError("solver.k must be >= 1 and tolerances positive")

    lists = {}
    for key, integer in (("R_list", False), ("n_list", True), ("theta_list", False)):
        value = raw.get(key, getattr(RunConfig, key))
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        lists[key] = tuple(_number(v, key, integer=integer) for v in value)

    cfg = RunConfig(geometry=geo, profile=prof, grid=grid, solver=sol, **lists)
    # re-validate through the library types
    try:
        g = cfg.make_geometry()
        profile = cfg.make_profile()
        cfg.make_grid()
        for th in cfg.theta_list:
            cfg.make_geometry(th)
        for n in cfg.n_list:
            Mollifier(n)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    support = getattr(profile, "support", 0.0)
    if support > g.a:
        raise ConfigError(f"profile support {support} exceeds geometry.a = {g.a}")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Pipelines: each returns (columns, rows, extra) where extra goes to JSON only
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def cmd_transverse(cfg: RunConfig):
    profile = cfg.make_profile()
    gs = solve_ground_state(profile)
    rows, E1R = [], []
    for R in cfg.R_list:
        dw = solve_double_well(profile, R, gs=gs)
        E1R.append(dw.E1R)
        rows.append([R, gs.E1, gs.N_plus, gs.N_minus, dw.E1R, dw.upper_bound])
    slope = log_gap_slope(gs.E1, E1R, cfg.R_list) if len(cfg.R_list) >= 2 else None
    for row in rows:
        row.append(slope)
    columns = ["R", "E1", "N_plus", "N_minus", "E1R", "upper_bound", "gap_slope"]
    extra = {"E1": gs.E1, "N_plus": gs.N_plus, "N_minus": gs.N_minus, "norm_check": gs.norm_check,
             "gap_slope": slope, "expected_slope": -2.0 * gs.decay}
    return columns, rows, extra


def cmd_variational(cfg: RunConfig):
    g = cfg.make_geometry()
    profile = cfg.make_profile()
    gs = solve_ground_state(profile)
    try:
        limit, note = variational_limit(g, gs), ""
    except DivergentExt:
        limit, note = -math.inf, "-inf (divergent ext term)"
    try:
        n0, value = bound_state_certificate(g, profile, gs)
        cert = {"n0": n0, "value": value}
    except CertificateNotFound as exc:
        n0 = value = None
        cert = {"n0": None, "value": None,
                "note": "no certificate (straight)" if g.is_straight else str(exc)}
    rows = []
    for n in cfg.n_list:
        if n < g.half_arc:
            log.warning("skipping n=%d: plateau shorter than the arc", n)
            continue
        fb = q_tilde_full_quadrature(g, profile, gs, Mollifier(n))
        rows.append([n, fb.q1, fb.q2_int, fb.q2_ext, fb.total, note or limit, n0, value])
    columns = ["n", "q1", "q2_int", "q2_ext", "total", "limit", "certificate_n0", "certificate_value"]
    extra = {"limit": note or limit, "certificate": cert, "E1": gs.E1}
    return columns, rows, extra


def _spectrum(cfg: RunConfig, g: WaveguideGeometry, profile):
    grid = cfg.make_grid()
    report = None
    history = []
    for _ in range(cfg.grid.refinement_levels - 1):
        report = discrete_spectrum(g, profile, grid, k=cfg.solver.k, tol=cfg.solver.tol,
                                   solver_tol=cfg.solver.eig_tol, seed=cfg.solver.seed,
                                   method=cfg.grid.method, subsamples=cfg.grid.subsamples)
        history.append(report.convergence)
        grid = grid.refined()
    return report, history


def cmd_spectrum(cfg: RunConfig):
    g = cfg.make_geometry()
    report, history = _spectrum(cfg, g, cfg.make_profile())
    mask = report.binding_mask()
    rows = []
    for i, lam in enumerate(report.eigenvalues):
        rows.append([i + 1, report.levels[0].values[i], report.levels[1].values[i], lam,
                     report.disagreement[i], report.threshold, report.margins[i], int(mask[i])])
    columns = ["index", "lambda_h", "lambda_h2", "extrapolated", "disagreement", "threshold",
               "margin", "binding"]
    extra = {"threshold": report.threshold, "binding_count": report.binding_count,
             "convergence": history}
    return columns, rows, extra


def sweep_columns(k: int):
    return (["theta", "E1", "threshold"] + [f"lambda_{i}" for i in range(1, k + 1)]
            + ["binding_count", "variational_limit", "certificate_n0", "errors"])


def _sweep_row(cfg: RunConfig, theta: float, E1: float):
    k = cfg.solver.k
    g = cfg.make_geometry(theta)
    profile = cfg.make_profile()
    errors = []
    threshold = lambdas = binding = limit = n0 = None
    try:
        limit = variational_limit(g, solve_ground_state(profile))
        n0, _ = bound_state_certificate(g, profile)
    except SoftwgError as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
    try:
        report, _ = _spectrum(cfg, g, profile)
    except NotConverged as exc:
        errors.append(f"NotConverged: {exc}")
        report = getattr(exc, "report", None)
    except SoftwgError as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
        report = None
    if report is not None:
        threshold = report.threshold
        lambdas = list(report.eigenvalues[:k])
        binding = report.binding_count
    lambdas = (lambdas or []) + [None] * (k - len(lambdas or []))
    return [theta, E1, threshold] + lambdas + [binding, limit, n0, "; ".join(errors)]


def cmd_sweep(cfg: RunConfig, threads: int = 1):
    for th in cfg.theta_list:
        if not 0.0 < th < math.pi:
            raise ConfigError(f"sweep angles must lie in (0, pi), got {th}")
    E1 = solve_ground_state(cfg.make_profile()).E1
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda th: _sweep_row(cfg, th, E1), cfg.theta_list))
    counts = [r[-4] for r in rows]
    known = [c for c in counts if c is not None]
    monotone = all(b >= a for a, b in zip(known, known[1:]))
    return sweep_columns(cfg.solver.k), rows, {"binding_count_nondecreasing": monotone}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "-inf" if x < 0 else ("inf" if x > 0 else "nan")
    if hasattr(x, "item"):
        return _json_value(x.item())
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


def render(columns, rows, extra, cfg: RunConfig, experiment: str, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    doc = {
        "experiment": experiment,
        "version": __version__,
        "columns": columns,
        "rows": [dict(zip(columns, r)) for r in rows],
        "summary": extra,
        "resolved_config": cfg.to_dict(),
    }
    return json.dumps(_json_value(doc), indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softwg", description=__doc__.splitlines()[0])
    p.add_argument("config", help="JSON configuration file")
    p.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    p.add_argument("--out", help="write data here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None,
                   help="sweep worker count (default: $SOFTWG_THREADS or 1)")
    p.add_argument("--verbose", action="store_true")
    return p


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("SOFTWG_THREADS", "").strip()
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ConfigError(f"SOFTWG_THREADS must be an integer, got {env!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads must be positive")
        if args.experiment == "transverse":
            result = cmd_transverse(cfg)
        elif args.experiment == "variational":
            result = cmd_variational(cfg)
        elif args.experiment == "spectrum":
            result = cmd_spectrum(cfg)
        else:
            result = cmd_sweep(cfg, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (SoftwgError, ValueError, ArithmeticError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    text = render(*result, cfg, args.experiment, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
