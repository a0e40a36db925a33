"""Command line entry point: ``photon-engine {simulate-cycle,sweep,validate}``.

Exit codes: 0 success, 1 configuration error, 2 simulation error,
3 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from importlib import metadata
from pathlib import Path

from . import __version__
from .config import RunConfig, load
from .cycles import TIMESERIES_COLUMNS, CycleRecord, initial_state, run_to_steady_cycle
from .errors import ConfigError, ConvergenceError, EngineError
from .sweeps import run_sweep
from .thermo import thermal_tail_weight
from .validation import run_all

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION, EXIT_VALIDATION = 0, 1, 2, 3


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return __version__


def fmt(value) -> str:
    """Locale-independent, round-trippable cell text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)  # shortest round-trip form, independent of locale
    if value is None:
        return ""
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):  # numpy scalar
        return value.item()
    return value


class Output:
    """Collects data files, then writes them together with a manifest.

    The run id is the hash of the resolved configuration, the version and
    the exact bytes of the primary data file, so it is stable across reruns.
    Structured outputs carry the run id; the manifest lists the sha256 of
    every file it covers.
    """

    def __init__(self, out_dir: Path, cfg: RunConfig, command: str):
        self.out_dir = out_dir
        self.cfg = cfg
        self.command = command
        self.files: dict[str, str] = {}
        self.started = time.perf_counter()

    def run_id(self, primary: str) -> str:
        seed = _json_text({"config": _jsonable(self.cfg.echo()), "version": _version(), "command": self.command,
                           "data": _sha256(self.files[primary])})
        return _sha256(seed)

    def write(self, manifest_extra: dict, run_id: str):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out_dir / name).write_text(text, encoding="utf-8", newline="\n")
        manifest = {
            "run_id": run_id,
            "command": self.command,
            "artifact": {"name": "artifact", "package": "photon_engine", "version": _version()},
            "config_source": self.cfg.source,
            "config": _jsonable(self.cfg.echo()),
            "files": {name: _sha256(text) for name, text in sorted(self.files.items())},
            "timing": {"wall_clock_seconds": time.perf_counter() - self.started},
        }
        manifest.update(_jsonable(manifest_extra))
        (self.out_dir / "manifest.json").write_text(_json_text(manifest), encoding="utf-8", newline="\n")


def timeseries_rows(record: CycleRecord, debug: bool):
    s = record.series
    cols = [s["t"], s["L"], s["V"], s["omega_c"], s["energy"], s["w_exp"], s["w_al"], s["pressure"]]
    if debug:
        cols.append(s["q_direct"])
    idx = s["stroke_index"]
    for i in range(len(s["t"])):
        row = [float(c[i]) for c in cols]
        yield row[:8] + [int(idx[i])] + row[8:]


def stroke_table(record: CycleRecord, debug: bool) -> list[dict]:
    out = []
    for s in record.strokes:
        entry = {
            "index": s.index, "kind": s.kind, "bath": s.bath, "t_start": s.t_start, "t_end": s.t_end,
            "L_start": s.L_start, "L_end": s.L_end, "energy_start": s.energy_start,
            "energy_end": s.energy_end, "delta_energy": s.delta_energy, "w_exp": s.w_exp,
            "w_al": s.w_al, "heat": s.heat,
        }
        if debug:
            entry["heat_direct"] = s.heat_direct
            entry["first_law_residual_direct"] = s.first_law_residual()
        out.append(entry)
    return out


def cmd_simulate(args) -> int:
    cfg = load(args.config)
    out = Output(Path(args.out), cfg, "simulate-cycle")
    status = EXIT_OK
    message = None
    try:
        initial = initial_state(cfg.cycle, cfg.model, cfg.n_max, dense=cfg.engine == "dense")
        record = run_to_steady_cycle(cfg.cycle, cfg.model, cfg.integrator, n_max=cfg.n_max,
                                     engine=cfg.engine, debug_heat=args.debug_ledger, initial=initial)
    except ConvergenceError as exc:
        if exc.record is None:
            raise
        record, status, message = exc.record, EXIT_SIMULATION, str(exc)
    header = list(TIMESERIES_COLUMNS) + (["q_direct_cum"] if args.debug_ledger else [])
    out.files["timeseries.csv"] = _csv_text(header, timeseries_rows(record, args.debug_ledger))
    run_id = out.run_id("timeseries.csv")
    summary = {
        "run_id": run_id,
        "summary": record.summary.as_dict(),
        "strokes": stroke_table(record, args.debug_ledger),
    }
    if message:
        summary["error"] = message
    out.files["summary.json"] = _json_text(_jsonable(summary))
    diag = record.diagnostics
    out.write({
        "integrator": {"steps_per_stroke": [n for n, _ in diag.get("steps", [])],
                       "dt_per_stroke": [dt for _, dt in diag.get("steps", [])],
                       "engine": diag.get("engine")},
        "truncation": {"n_max": cfg.n_max, "top5_population_max": diag.get("top_population"),
                       "initial_thermal_tail": thermal_tail_weight(cfg.cycle.n_cold, cfg.n_max)},
        "convergence": {"converged": record.summary.converged,
                        "cycles_to_steady": record.summary.cycles_to_steady,
                        "final_residual": record.summary.residual,
                        "residual_history": record.residual_history,
                        "krylov_maps": diag.get("krylov_maps", 0)},
    }, run_id)
    if message:
        print(f"simulation error: {message}", file=sys.stderr)
    return status


SWEEP_TAIL = ("converged", "cycles_to_steady", "residual", "error")


def cmd_sweep(args) -> int:
    cfg = load(args.config)
    if cfg.sweep is None:
        raise ConfigError(f"{cfg.source}: a sweep needs a [sweep] section with at least one axis.<name>")
    spec = cfg.sweep
    out = Output(Path(args.out), cfg, "sweep")
    rows = run_sweep(spec, cfg.model, cfg.integrator, jobs=args.jobs)
    header = spec.axis_names + list(spec.outputs) + list(SWEEP_TAIL)
    table = []
    for row in rows:
        table.append([row.point[name] for name in spec.axis_names]
                     + [getattr(row, o) for o in spec.outputs]
                     + [row.converged, row.cycles_to_steady, row.residual, row.error])
    out.files["sweep.csv"] = _csv_text(header, table)
    run_id = out.run_id("sweep.csv")
    out.write({
        "points": [{"point": r.point, "error": r.error, "message": r.message, **r.diagnostics} for r in rows],
        "jobs": args.jobs,
    }, run_id)
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} points, {failed} with errors; wrote {Path(args.out) / 'sweep.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_all()
    report = {"version": _version(), "passed": all(r.passed for r in results),
              "checks": [r.as_dict() for r in results]}
    text = _json_text(_jsonable(report))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "validation.json").write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are configuration errors, not simulation failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="photon-engine", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate-cycle", help="run one engine to its steady cycle")
    sim.add_argument("--config", required=True, help="INI run configuration")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--debug-ledger", action="store_true",
                     help="also integrate Tr[H D(rho)] as an independent heat column")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="grid scan of steady-cycle figures of merit")
    sw.add_argument("--config", required=True, help="INI configuration with a [sweep] section")
    sw.add_argument("--out", required=True, help="output directory")
    sw.add_argument("--jobs", type=int, default=None, help="worker processes (default: all CPUs)")
    sw.set_defaults(func=cmd_sweep)

    val = sub.add_parser("validate", help="run the built-in invariant checks")
    val.add_argument("--out", default=None, help="also write validation.json here")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
