"""Configuration-driven command line for the metric-comparison experiments.

Subcommands map to the experiment families: ``metrics-check`` (GCL
residuals of the three metric variants), ``freestream`` (preservation of
a constant state), ``vortex`` / ``shock`` (error studies against the
exact solutions), and ``compare`` (elementwise ratio of two error
reports).  Runs are described by a JSON config; command-line flags
override the file.  Exit codes: 0 success, 2 invalid config or usage,
3 solver failure.

CSV output is byte-deterministic for a given config: fixed row order,
17-significant-digit floats, no timestamps.  Wall-clock timings and
library versions go to ``run_metadata.txt`` instead.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .discretization import SatConfig, SemiDiscreteOperator
from .mesh import build_perturbed_cube
from .metrics import KINDS, OPTIMIZED, THOMAS_LOMBARD, analytic_metrics, build_metrics, gcl_residual
from .physics import GasModel, prim_to_cons
from .timestepping import PAIRS, StepController, integrate
from .verification import (
    ERROR_HEADER,
    RATIO_HEADER,
    VARIABLES,
    ErrorReport,
    StudyRow,
    VortexParams,
    _initial_dt,
    ratio_csv_lines,
    solve_case,
    summary_table,
    vortex_state,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

# accepted on the command line and in configs; values are MetricSet kinds
METRIC_ALIASES = {
    "analytic": "analytic",
    "tl": THOMAS_LOMBARD,
    "thomas_lombard": THOMAS_LOMBARD,
    "optimized": OPTIMIZED,
}

CASES = ("metrics-check", "freestream", "vortex", "shock")


class ConfigError(Exception):
    """Invalid configuration or usage; maps to exit code 2."""


def _as_list(value, name: str, kind=float) -> list:
    """Scalar-or-list config values normalized to a list."""
    items = value if isinstance(value, list) else [value]
    if not items:
        raise ConfigError(f"{name} must not be empty")
    out = []
    for item in items:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{name} entries must be numbers, got {item!r}")
        out.append(kind(item))
    return out


@dataclass
class RunConfig:
    """Fully resolved experiment description (validated before compute)."""

    case: str
    cells_per_dir: list[int] = field(default_factory=lambda: [3])
    eta: list[float] = field(default_factory=lambda: [1.0])
    p: list[int] = field(default_factory=lambda: [2])
    metric: list[str] = field(default_factory=lambda: [OPTIMIZED])
    compare_arms: bool = False  # metric == "both": TL vs optimized + ratios
    t_final: float = 1.0
    rtol: float = 1e-8
    atol: float = 1e-8
    dissipation: bool | str = "scalar"
    pair: str = "bs32"
    periodic: bool = False
    out: Path = Path("reports")

    KNOWN_KEYS = {
        "case", "mesh", "cells_per_dir", "eta", "p", "metric", "t_final",
        "rtol", "atol", "dissipation", "pair", "periodic", "out",
    }

    @classmethod
    def load(cls, case: str, config_path: str | None, overrides: dict) -> "RunConfig":
        raw: dict = {}
        if config_path is not None:
            try:
                with open(config_path) as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(raw) - cls.KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "case" in raw and raw["case"] != case:
            raise ConfigError(f"config case {raw['case']!r} does not match subcommand {case!r}")
        mesh = raw.pop("mesh", None)
        if mesh is not None:
            if not isinstance(mesh, dict) or set(mesh) - {"cells_per_dir", "eta"}:
                raise ConfigError("mesh must be an object with cells_per_dir and/or eta")
            for key in ("cells_per_dir", "eta"):
                if key in mesh and key in raw:
                    raise ConfigError(f"{key} given both nested in mesh and at top level")
                if key in mesh:
                    raw[key] = mesh[key]
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls._build(case, raw)

    @classmethod
    def _build(cls, case: str, raw: dict) -> "RunConfig":
        cfg = cls(case=case)
        if "cells_per_dir" in raw:
            cfg.cells_per_dir = _as_list(raw["cells_per_dir"], "cells_per_dir", int)
        if "eta" in raw:
            cfg.eta = _as_list(raw["eta"], "eta", float)
        if "p" in raw:
            cfg.p = _as_list(raw["p"], "p", int)
        if "metric" in raw:
            metrics = raw["metric"] if isinstance(raw["metric"], list) else [raw["metric"]]
            if metrics == ["both"]:
                cfg.metric = [THOMAS_LOMBARD, OPTIMIZED]
                cfg.compare_arms = True
            else:
                try:
                    cfg.metric = [METRIC_ALIASES[str(m)] for m in metrics]
                except KeyError as exc:
                    raise ConfigError(
                        f"unknown metric {exc.args[0]!r} (choose from "
                        f"{', '.join(sorted(METRIC_ALIASES))}, or 'both')"
                    ) from None
        for key in ("t_final", "rtol", "atol"):
            if key in raw:
                value = raw[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                    raise ConfigError(f"{key} must be a positive number, got {value!r}")
                setattr(cfg, key, float(value))
        if "dissipation" in raw:
            cfg.dissipation = raw["dissipation"]
        if "pair" in raw:
            cfg.pair = str(raw["pair"])
        if "periodic" in raw:
            if not isinstance(raw["periodic"], bool):
                raise ConfigError("periodic must be true or false")
            cfg.periodic = raw["periodic"]
        if "out" in raw:
            cfg.out = Path(str(raw["out"]))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        problems = []
        for c in self.cells_per_dir:
            if c < 1:
                problems.append(f"cells_per_dir must be >= 1, got {c}")
        for e in self.eta:
            if not 0.0 <= e <= 1.0:
                problems.append(f"eta must lie in [0, 1], got {e}")
        for p in self.p:
            if not 1 <= p <= 16:
                problems.append(f"p must lie in [1, 16], got {p}")
        if self.pair not in PAIRS:
            problems.append(f"unknown pair {self.pair!r} (choose from {', '.join(PAIRS)})")
        if self.dissipation not in (True, False, "none", "scalar", "matrix"):
            problems.append(f"dissipation must be none|scalar|matrix, got {self.dissipation!r}")
        if self.periodic and self.case != "vortex":
            problems.append("periodic runs are only defined for the vortex case")
        if problems:
            raise ConfigError("; ".join(problems))

    def resolved(self) -> dict:
        keys = ("case", "cells_per_dir", "eta", "p", "metric", "compare_arms",
                "t_final", "rtol", "atol", "dissipation", "pair", "periodic")
        data = {k: getattr(self, k) for k in keys}
        data["out"] = str(self.out)
        return data


# -- report files ------------------------------------------------------------


def _write_lines(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _error_lines(case: str, reports: list[ErrorReport]) -> list[str]:
    lines = [ERROR_HEADER]
    for rep in reports:
        for var, val in zip(VARIABLES, rep.values()):
            lines.append(
                f"{case},{rep.degree},{rep.eta:.17g},{rep.metric},{var},{val:.17e}"
            )
    return lines


class _Metadata:
    """Collects resolved parameters, versions and step statistics."""

    def __init__(self, cfg: RunConfig, threads: int | None):
        self.lines = ["[config]"]
        self.lines += [f"{k} = {v}" for k, v in sorted(cfg.resolved().items())]
        self.lines += ["", "[environment]"]
        self.lines.append(f"python = {sys.version.split()[0]}")
        self.lines.append(f"numpy = {np.__version__}")
        try:
            from importlib.metadata import version

            self.lines.append(f"gclopt = {version('gclopt')}")
        except Exception:
            self.lines.append("gclopt = unknown")
        self.lines.append(f"kernel backend = {kernels.BACKEND}")
        if kernels.BACKEND == "numba":
            import numba

            self.lines.append(f"numba = {numba.__version__}")
        self.lines.append(f"threads = {'default' if threads is None else threads}")
        self.lines += ["", "[runs]"]

    def add_run(self, label: str, stats, seconds: float) -> None:
        self.lines.append(
            f"{label}: accepted={stats.n_accepted} rejected={stats.n_rejected} "
            f"rhs_evals={stats.n_rhs} wall_s={seconds:.3f}"
        )

    def add_note(self, text: str) -> None:
        self.lines.append(text)

    def write(self, out_dir: Path) -> None:
        _write_lines(out_dir / "run_metadata.txt", self.lines)


# -- subcommands -------------------------------------------------------------


def _cmd_metrics_check(cfg: RunConfig, meta: _Metadata) -> list[str]:
    lines = ["p,eta,kind,volume_residual,coupling_residual,scale"]
    for cells in cfg.cells_per_dir:
        for p in cfg.p:
            for eta in cfg.eta:
                t0 = time.perf_counter()
                mesh = build_perturbed_cube(cells_per_dir=cells, eta=eta, degree=p)
                ana = analytic_metrics(mesh)
                for kind in KINDS:
                    ms = ana if kind == "analytic" else build_metrics(mesh, kind)
                    rep = gcl_residual(ms, mesh, ana)
                    lines.append(
                        f"{p},{eta:.17g},{kind},{rep.max_volume:.17e},"
                        f"{rep.max_coupling:.17e},{rep.scale:.17e}"
                    )
                meta.add_note(
                    f"metrics-check cells={cells} p={p} eta={eta:g}: "
                    f"wall_s={time.perf_counter() - t0:.3f}"
                )
    _write_lines(cfg.out / "metrics_check.csv", lines)
    return lines


def _cmd_freestream(cfg: RunConfig, meta: _Metadata) -> list[str]:
    vp = VortexParams()
    gas = GasModel(gamma=vp.gamma)
    a = np.radians(vp.alpha_deg)
    state = prim_to_cons(
        np.array([1.0, vp.u_inf * np.cos(a), vp.u_inf * np.sin(a), 1.0, 1.0]), gas
    )
    bc = lambda X, t: np.broadcast_to(state, X.shape[:-1] + (5,))
    lines = ["p,eta,metric,residual,drift"]
    for cells in cfg.cells_per_dir:
        for p in cfg.p:
            for eta in cfg.eta:
                mesh = build_perturbed_cube(cells_per_dir=cells, eta=eta, degree=p)
                ana = analytic_metrics(mesh)
                for kind in cfg.metric:
                    vol = ana if kind == "analytic" else build_metrics(mesh, kind)
                    sat = SatConfig(
                        coupling="analytic" if kind == OPTIMIZED else "same",
                        dissipation=cfg.dissipation,
                    )
                    opr = SemiDiscreteOperator(
                        mesh, "euler", vol, analytic=ana, gas=gas, sat=sat, bc=bc
                    )
                    q0 = np.broadcast_to(state, mesh.coords.shape[:-1] + (5,)).copy()
                    resid = float(np.abs(opr.rhs(q0, 0.0)).max())
                    jac = vol.jac[:, :, None]
                    rhs = lambda t, q: opr.rhs(q, t) / jac
                    t0 = time.perf_counter()
                    q, stats = integrate(
                        rhs, q0, (0.0, cfg.t_final), _initial_dt(opr, q0),
                        StepController(rtol=cfg.rtol, atol=cfg.atol), PAIRS[cfg.pair](),
                    )
                    drift = float(np.abs(q - q0).max())
                    lines.append(
                        f"{p},{eta:.17g},{kind},{resid:.17e},{drift:.17e}"
                    )
                    meta.add_run(
                        f"freestream cells={cells} p={p} eta={eta:g} metric={kind}",
                        stats, time.perf_counter() - t0,
                    )
    _write_lines(cfg.out / "freestream.csv", lines)
    return lines


def _periodic_vortex_report(cfg: RunConfig, cells: int, p: int, eta: float,
                            kind: str, meta: _Metadata) -> list[str]:
    """Conservation/entropy drift on a periodic mesh (no boundary SATs)."""
    mesh = build_perturbed_cube(cells_per_dir=cells, eta=eta, degree=p, periodic=True)
    ana = analytic_metrics(mesh)
    vol = ana if kind == "analytic" else build_metrics(mesh, kind)
    vp = VortexParams()
    gas = GasModel(gamma=vp.gamma)
    sat = SatConfig(
        coupling="analytic" if kind == OPTIMIZED else "same",
        dissipation=cfg.dissipation,
    )
    opr = SemiDiscreteOperator(mesh, "euler", vol, analytic=ana, gas=gas, sat=sat)
    q0 = prim_to_cons(vortex_state(mesh.coords, 0.0, vp), gas)
    jac = vol.jac[:, :, None]
    rhs = lambda t, q: opr.rhs(q, t) / jac
    totals0 = opr.conserved_totals(q0)
    entropy_trace = [opr.total_entropy(q0)]
    t0 = time.perf_counter()
    q, stats = integrate(
        rhs, q0, (0.0, cfg.t_final), _initial_dt(opr, q0),
        StepController(rtol=cfg.rtol, atol=cfg.atol), PAIRS[cfg.pair](),
        callback=lambda t, y: entropy_trace.append(opr.total_entropy(y)),
    )
    meta.add_run(f"vortex-periodic p={p} eta={eta:g} metric={kind}",
                 stats, time.perf_counter() - t0)
    totals = opr.conserved_totals(q)
    entropy = np.asarray(entropy_trace)
    increases = int(np.sum(np.diff(entropy) > 0.0))
    lines = ["quantity,initial,final,drift"]
    names = ("mass", "momentum1", "momentum2", "momentum3", "energy")
    for name, a, b in zip(names, totals0, totals):
        lines.append(f"{name},{a:.17e},{b:.17e},{b - a:.17e}")
    lines.append(
        f"entropy,{entropy[0]:.17e},{entropy[-1]:.17e},{entropy[-1] - entropy[0]:.17e}"
    )
    lines.append(f"entropy_increasing_steps,{increases},{len(entropy) - 1},0")
    return lines


def _cmd_case(cfg: RunConfig, meta: _Metadata) -> list[str]:
    """vortex / shock error studies; returns the last error CSV's lines."""
    if cfg.periodic:
        lines: list[str] = []
        for cells in cfg.cells_per_dir:
            for p in cfg.p:
                for eta in cfg.eta:
                    for kind in cfg.metric:
                        lines = _periodic_vortex_report(cfg, cells, p, eta, kind, meta)
                        name = f"conservation_p{p}_eta{eta:g}_{kind}.csv"
                        _write_lines(cfg.out / name, lines)
        return lines

    last: list[str] = []
    for cells in cfg.cells_per_dir:
        suffix = f"_c{cells}" if len(cfg.cells_per_dir) > 1 else ""
        reports: list[ErrorReport] = []
        rows: list[StudyRow] = []
        for p in cfg.p:
            for eta in cfg.eta:
                mesh = build_perturbed_cube(cells_per_dir=cells, eta=eta, degree=p)
                ana = analytic_metrics(mesh)
                arm = {}
                for kind in cfg.metric:
                    t0 = time.perf_counter()
                    result = solve_case(
                        cfg.case, p, eta, metric=kind, t_final=cfg.t_final,
                        cells_per_dir=cells, rtol=cfg.rtol, atol=cfg.atol,
                        pair=cfg.pair, dissipation=cfg.dissipation,
                        mesh=mesh, analytic=ana,
                    )
                    reports.append(result.errors)
                    arm[kind] = result.errors
                    meta.add_run(
                        f"{cfg.case} cells={cells} p={p} eta={eta:g} metric={kind}",
                        result.stats, time.perf_counter() - t0,
                    )
                if cfg.compare_arms:
                    rows.append(StudyRow(cfg.case, p, eta, cfg.t_final,
                                         arm[THOMAS_LOMBARD], arm[OPTIMIZED]))
        last = _error_lines(cfg.case, reports)
        _write_lines(cfg.out / f"{cfg.case}_errors{suffix}.csv", last)
        if rows:
            _write_lines(cfg.out / f"{cfg.case}_ratios{suffix}.csv", ratio_csv_lines(rows))
            print(summary_table(rows))
    return last


def _cmd_compare(first: str, second: str, out_dir: Path) -> None:
    """Elementwise ratio (first/second) of two error CSVs."""

    def read(path: str) -> tuple[list[str], dict, list[tuple]]:
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        if not rows or ",".join(rows[0]) != ERROR_HEADER:
            raise ConfigError(
                f"{path}: expected header {ERROR_HEADER!r}, got {','.join(rows[:1] and rows[0])!r}"
            )
        table, order = {}, []
        for row in rows[1:]:
            if len(row) != 6:
                raise ConfigError(f"{path}: malformed row {row!r}")
            key = (row[0], row[1], row[2], row[4])  # case, p, eta, variable
            table[key] = float(row[5])
            order.append(key)
        return rows[0], table, order

    _, table_a, order_a = read(first)
    _, table_b, _ = read(second)
    overlap = [key for key in order_a if key in table_b]
    if not overlap:
        raise ConfigError("the two reports share no (case, p, eta, variable) rows")
    lines = [RATIO_HEADER]
    for key in overlap:
        case, p, eta, var = key
        lines.append(f"{case},{p},{eta},{var},{table_a[key] / table_b[key]:.17e}")
    _write_lines(out_dir / "ratios.csv", lines)
    print(f"wrote {out_dir / 'ratios.csv'} ({len(overlap)} rows)")


# -- entry point -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gclopt",
        description="Curvilinear metric comparison experiments (GCL-optimized vs Thomas-Lombard).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in CASES:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", help="JSON config file")
        cmd.add_argument("--out", help="output directory (default: reports)")
        cmd.add_argument("--threads", type=int, help="kernel thread count")
        cmd.add_argument(
            "--metric", choices=sorted(METRIC_ALIASES) + ["both"],
            help="volume metric variant (overrides config)",
        )
    cmp_cmd = sub.add_parser("compare", help="elementwise ratio of two error CSVs")
    cmp_cmd.add_argument("first")
    cmp_cmd.add_argument("second")
    cmp_cmd.add_argument("--out", help="output directory (default: reports)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            _cmd_compare(args.first, args.second, Path(args.out or "reports"))
            return EXIT_OK
        overrides = {"out": args.out, "metric": args.metric}
        cfg = RunConfig.load(args.command, args.config, overrides)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            kernels.set_threads(args.threads)
        meta = _Metadata(cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if cfg.case == "metrics-check":
            _cmd_metrics_check(cfg, meta)
        elif cfg.case == "freestream":
            _cmd_freestream(cfg, meta)
        else:
            _cmd_case(cfg, meta)
        meta.write(cfg.out)
    except Exception as exc:  # noqa: BLE001 - validated configs only fail in the solver
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
