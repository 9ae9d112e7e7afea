"""Command-line runs: geodesic search, indices, censuses, growth ladders and decomposition ledgers.

Every run writes JSON and/or CSV artifacts plus a plain-text ledger to the
output directory.  Exit status: 0 success, 1 a computed check failed,
2 invalid configuration, 3 inconclusive (an ambiguous rank or kernel
decision upstream).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .census import (
    FAIL,
    INCONCLUSIVE,
    NOT_APPLICABLE,
    PASS,
    BoundednessReport,
    CensusTable,
    GrowthReport,
    betti_table,
    build_census,
    closed_geodesic_through,
    covered_bound_check,
    iterate_growth,
    morse_inequality_check,
)
from .errors import ConfigError, FinslerError, IndexCoverageError
from .geodesic import iterate_closed, solve_bvp
from .index import index_report, verify_index_decomposition
from .jacobi import linearize
from .metric import ellipsoid, flat_torus, load_metric, round_sphere

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3
OUT_ENV = "FINSLER_MORSE_OUT"
DEFAULT_OUT = "finsler_morse_out"
COMMANDS = ("geodesic", "index", "census", "growth", "verify")
FORMATS = ("json", "csv", "both")

# documented resolution limits
LIMITS = {"steps": (16, 200000), "segments": (8, 5000), "grid_density": (4, 4096)}

BUILTIN_METRICS = {
    "flat-torus": flat_torus,
    "round-sphere": round_sphere,
    "ellipsoid": ellipsoid,
}


@dataclass
class RunConfig:
    metric: str | dict
    command: str
    p: tuple[float, ...] | None = None
    q: tuple[float, ...] | None = None
    L_max: float = 10.0
    m_max: int = 8
    k_max: int | None = None
    steps: int = 1000
    segments: int = 200
    grid_density: int = 64
    seed: int = 0
    out_dir: str | None = None
    format: str = "both"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        if not self.L_max > 0:
            raise ConfigError("L_max must be positive")
        if self.m_max < 1 or (self.k_max is not None and self.k_max < 0):
            raise ConfigError("m_max must be positive and k_max nonnegative")
        for name, (lo, hi) in LIMITS.items():
            val = getattr(self, name)
            if not lo <= val <= hi:
                raise ConfigError(f"{name} = {val} outside [{lo}, {hi}]")
        if self.p is None or self.q is None:
            raise ConfigError(f"command {self.command!r} needs both --p and --q")
        if self.command == "growth" and self.m_max < 4:
            raise ConfigError("growth needs m_max >= 4")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = None if self.p is None else list(self.p)
        d["q"] = None if self.q is None else list(self.q)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown run config keys: {', '.join(sorted(extra))}")
        d = dict(d)
        for key in ("p", "q"):
            if d.get(key) is not None:
                d[key] = tuple(float(c) for c in d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"run config is not valid JSON: {exc}") from None

    def resolve_metric(self):
        if isinstance(self.metric, str) and self.metric in BUILTIN_METRICS:
            return BUILTIN_METRICS[self.metric]()
        return load_metric(self.metric)

    def output_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)


@dataclass
class RunResult:
    status: int
    files: list[str] = field(default_factory=list)
    ledger: list[str] = field(default_factory=list)


# -- plot data ---------------------------------------------------------------------------


def _two_column(path: Path, header, rows) -> None:
    lines = [",".join(header)] + [f"{a!r},{b!r}" for a, b in rows]
    path.write_text("\n".join(lines) + "\n")


def emit_plot_data(tables: dict, out_dir) -> list[str]:
    """Write two-column CSVs: ``(L, N)`` step points of censuses and ``(m, index)`` ladders.

    An empty census or ladder yields a file holding only the header.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in tables.items():
        if isinstance(table, CensusTable):
            path = out / f"{name}_steps.csv"
            rows = [(float(L), int(n)) for L, n in table.N_of_L] if table.count else []
            _two_column(path, ("L", "N"), rows)
        elif isinstance(table, GrowthReport):
            path = out / f"{name}_ladder.csv"
            rows = [(int(m), int(k)) for m, k in enumerate(table.lambda_arcs)] if table.iterate_indices else []
            _two_column(path, ("m", "index"), rows)
        elif isinstance(table, BoundednessReport):
            path = out / f"{name}_counts.csv"
            _two_column(path, ("k", "N_k"), sorted(table.N_k.items()))
        else:
            raise TypeError(f"no plot layout for {type(table).__name__}")
        written.append(str(path))
    return written


# -- commands ------------------------------------------------------------------------------


def _status(outcome: str) -> int:
    return {PASS: EXIT_OK, NOT_APPLICABLE: EXIT_OK, FAIL: EXIT_FAILURE, INCONCLUSIVE: EXIT_INCONCLUSIVE}[outcome]


def _worst(*outcomes: str) -> str:
    """A failure outranks an inconclusive result, which outranks a pass."""
    for o in (FAIL, INCONCLUSIVE):
        if o in outcomes:
            return o
    return PASS


def _cmd_geodesic(cfg, metric):
    res = solve_bvp(metric, cfg.p, cfg.q, cfg.L_max, grid_density=cfg.grid_density, steps=cfg.steps)
    rows = [(g.length, r, *map(float, g.v[0])) for g, r in zip(res.paths, res.residuals)]
    header = ("length", "residual") + tuple(f"v{i}" for i in range(metric.dimension))
    ledger = [f"{len(res.paths)} geodesics of length < {cfg.L_max:g}"] + [f"length {r[0]:.10g}" for r in rows]
    ledger += [f"note: {w}" for w in res.warnings]
    payload = {"paths": [g.to_dict() for g in res.paths], "residuals": res.residuals, "warnings": res.warnings}
    return EXIT_OK, payload, {"geodesics": (header, rows)}, {}, ledger


def _cmd_index(cfg, metric):
    res = solve_bvp(metric, cfg.p, cfg.q, cfg.L_max, grid_density=cfg.grid_density, steps=cfg.steps)
    reports, rows, ledger = [], [], []
    outcomes = []
    for g in res.paths:
        rep = index_report(linearize(metric, g), cfg.segments)
        reports.append(rep.to_dict() | {"length": g.length})
        ma = rep.method_agreement
        rows.append((g.length, rep.lambda_dirichlet, rep.nullity_dirichlet, ma.get("fem"), ma.get("conjugate-points"), ma.get("hessian")))
        verdict = "agree" if rep.methods_agree else "DISAGREE"
        ledger.append(f"length {g.length:.10g}: index {rep.lambda_dirichlet}, nullity {rep.nullity_dirichlet}, methods {verdict}")
        outcomes.append(PASS if rep.methods_agree else INCONCLUSIVE if rep.ambiguous else FAIL)
    header = ("length", "index", "nullity", "fem", "conjugate_points", "hessian")
    return _status(_worst(*outcomes)), {"reports": reports}, {"index": (header, rows)}, {}, ledger


def _cmd_census(cfg, metric):
    table = build_census(metric, cfg.p, cfg.q, cfg.L_max, cfg.grid_density, cfg.steps, cfg.segments)
    ledger = [f"{table.count} geodesics of length < {cfg.L_max:g} ({table.completeness})"]
    ledger += [f"N_{k} = {v}" for k, v in table.N_k.items()]
    ledger += [f"note: {w}" for w in table.warnings]
    payload = {"census": table.to_dict()}
    csvs = {"census": table.to_csv()}
    outcomes = [INCONCLUSIVE if table.ambiguous else PASS]
    if cfg.k_max is not None and metric.manifold.chart_kind == "sphere-chart":
        rep = morse_inequality_check(table, betti_table("S2", max(cfg.k_max, 1)), cfg.k_max)
        payload["morse_inequality"] = rep.to_dict()
        csvs["inequality"] = rep.to_csv()
        ledger += [f"beta_{k} = {b} <= N_{k} = {n}" for k, b, n, _ in rep.rows] + [f"Morse inequalities: {rep.outcome.upper()}"]
        outcomes.append(rep.outcome)
    return _status(_worst(*outcomes)), payload, csvs, {"census": table}, ledger


def _cmd_growth(cfg, metric):
    c = closed_geodesic_through(metric, cfg.p, cfg.q)
    rep = iterate_growth(metric, c, cfg.p, cfg.q, cfg.m_max, cfg.segments)
    ledger = [f"closed geodesic of length {c.length:.10g} through p and q"]
    ledger += [f"m = {m}: lambda(gamma^m) = {a}, lambda~(c^m) = {b}, con = {k}" for m, a, b, k in rep.iterate_indices]
    if rep.all_zero:
        ledger.append(f"all periodic indices vanish; lambda(gamma^(m-1)) = 0 for all m: {rep.remark_holds}")
    else:
        ledger.append(f"fitted a1 = {rep.fitted_slope:g}, a2 = {rep.fitted_intercept:g}; b1 = {rep.gm2_slope:g}, b2 = {rep.gm2_intercept:g}")
    ledger.append(f"chain bounds hold on {len(rep.chain)} pairs: {rep.chain_holds}")
    ledger += [f"note: {n}" for n in rep.notes]
    ledger.append(f"growth: {rep.outcome.upper()}")
    csvs = {"growth": rep.to_csv()}
    payload = {"growth": rep.to_dict()}
    if metric.manifold.chart_kind == "sphere-chart":
        table = build_census(metric, cfg.p, cfg.q, cfg.L_max, cfg.grid_density, cfg.steps, cfg.segments)
        bound = covered_bound_check(table, [c])
        payload["covered_bound"] = bound.to_dict()
        csvs["covered_bound"] = bound.to_csv()
        ledger.append(f"covered-count bound N <= 2m(1 + L/L0): {bound.outcome.upper()}")
        return _status(_worst(rep.outcome, bound.outcome)), payload, csvs, {"growth": rep, "growth_census": table}, ledger
    return _status(rep.outcome), payload, csvs, {"growth": rep}, ledger


def _cmd_verify(cfg, metric):
    c = closed_geodesic_through(metric, cfg.p, cfg.q)
    ledger, reports, rows = [], [], []
    outcomes = []
    m_top = cfg.m_max if cfg.k_max is None else 1
    for m in range(1, m_top + 1):
        rep = verify_index_decomposition(iterate_closed(c, m), segments=cfg.segments)
        reports.append(rep.to_dict() | {"m": m})
        rows.append((m, rep.lambda_periodic, rep.rhs, rep.lambda_periodic - rep.rhs))
        ledger.append(rep.ledger() if m_top == 1 else f"m = {m}: {rep.ledger()}")
        outcomes.append(rep.outcome)
    header = ("m", "lhs", "rhs", "margin")
    return _status(_worst(*outcomes)), {"decomposition": reports}, {"verify": (header, rows)}, {}, ledger


HANDLERS = {
    "geodesic": _cmd_geodesic,
    "index": _cmd_index,
    "census": _cmd_census,
    "growth": _cmd_growth,
    "verify": _cmd_verify,
}


def _csv_body(metric_id, header, rows) -> str:
    from .census import _csv_text

    return _csv_text(metric_id, header, rows)


def run(config: RunConfig) -> RunResult:
    """Execute one command and write its artifacts; returns the exit status and written files."""
    try:
        config.validate()
        metric = config.resolve_metric()
        for pt in (config.p, config.q):
            metric.manifold.check_point(np.asarray(pt, dtype=float))
    except (ConfigError, FinslerError, ValueError) as exc:
        return RunResult(EXIT_CONFIG, [], [f"config error: {exc}"])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            status, payload, csvs, plots, ledger = HANDLERS[config.command](config, metric)
    except IndexCoverageError as exc:
        return RunResult(EXIT_CONFIG, [], [f"config error: {exc}"])
    except FinslerError as exc:
        return RunResult(EXIT_FAILURE, [], [f"computation failed: {type(exc).__name__}: {exc}"])
    out = config.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    files = []
    mid = metric.metric_id
    if config.format in ("json", "both"):
        doc = {"metric_id": mid, "metric": metric.to_dict(), "config": config.to_dict(), "status": status} | payload
        path = out / f"{config.command}.json"
        path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n")
        files.append(str(path))
    if config.format in ("csv", "both"):
        for name, body in csvs.items():
            text = body if isinstance(body, str) else _csv_body(mid, *body)
            path = out / f"{name}.csv"
            path.write_text(text)
            files.append(str(path))
        files += emit_plot_data(plots, out)
    path = out / f"{config.command}_ledger.txt"
    path.write_text(f"# metric {mid}\n" + "\n".join(ledger) + "\n")
    files.append(str(path))
    return RunResult(status, files, ledger)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


# -- argument parsing --------------------------------------------------------------------


def _point(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="finsler-morse",
        description="Geodesic censuses and Morse-index experiments on Riemannian and Randers metrics.",
        epilog=(
            f"Exit status: {EXIT_OK} ok, {EXIT_FAILURE} a check failed, {EXIT_CONFIG} invalid configuration, "
            f"{EXIT_INCONCLUSIVE} inconclusive. The output directory defaults to ${OUT_ENV}, else ./{DEFAULT_OUT}."
        ),
    )
    ap.add_argument("--config", help="JSON run configuration; command-line flags override its fields")
    ap.add_argument(
        "--metric",
        help=f"metric JSON file or inline JSON, or one of: {', '.join(BUILTIN_METRICS)}",
    )
    ap.add_argument("--command", choices=COMMANDS, help="what to run")
    ap.add_argument("--p", type=_point, help="start point, e.g. 0,0")
    ap.add_argument("--q", type=_point, help="end point, e.g. 0.3,0.4")
    ap.add_argument("--lmax", type=float, help="length cap L_max (default 10)")
    ap.add_argument("--mmax", type=int, help="largest iterate m (default 8)")
    ap.add_argument("--kmax", type=int, help="largest index k for the Morse inequalities")
    lo, hi = LIMITS["segments"]
    ap.add_argument("--segments", type=int, help=f"index-form elements, {lo}..{hi} (default 200)")
    lo, hi = LIMITS["steps"]
    ap.add_argument("--steps", type=int, help=f"RK4 steps per geodesic, {lo}..{hi} (default 1000)")
    lo, hi = LIMITS["grid_density"]
    ap.add_argument("--grid", type=int, help=f"shooting directions, {lo}..{hi} (default 64)")
    ap.add_argument("--seed", type=int, help="recorded seed (all algorithms are deterministic)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", choices=FORMATS, help="artifact format (default both)")
    return ap


_FLAG_FIELDS = {
    "metric": "metric",
    "command": "command",
    "p": "p",
    "q": "q",
    "lmax": "L_max",
    "mmax": "m_max",
    "kmax": "k_max",
    "segments": "segments",
    "steps": "steps",
    "grid": "grid_density",
    "seed": "seed",
    "out": "out_dir",
    "format": "format",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = RunConfig.from_json(Path(args.config).read_text()).to_dict()
        except OSError as exc:
            raise ConfigError(f"cannot read run config: {exc}") from None
    for flag, name in _FLAG_FIELDS.items():
        val = getattr(args, flag)
        if val is not None:
            base[name] = val
    if "metric" not in base or "command" not in base:
        raise ConfigError("--metric and --command are required (directly or through --config)")
    return RunConfig.from_dict(base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg)
    stream = sys.stderr if result.status == EXIT_CONFIG else sys.stdout
    for line in result.ledger:
        print(line, file=stream)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
