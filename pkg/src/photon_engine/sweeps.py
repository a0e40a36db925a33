"""Grid scans over cycle parameters: efficiency, power, work and hot heat."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .cycles import CycleConfig, CycleRecord, run_to_steady_cycle
from .dynamics import IntegratorConfig
from .errors import ConfigError, ConvergenceError, EngineError, TraceDriftError, TruncationError
from .jc_model import ModelParams

OUTPUTS = ("eta", "power", "w_cycle", "q_hot")
MODEL_AXES = ("kappa",)
SPECIAL_AXES = ("ratio",)


def efficiency(record: CycleRecord) -> float:
    """``|W| / Q_hot`` with W the cycle's expansion work."""
    q = record.summary.q_hot
    if not q > 0:
        raise ValueError(f"Q_hot = {q:.6g} <= 0: the cycle is not running as an engine")
    return abs(record.summary.w_cycle) / q


def carnot_bound(n_cold: float, n_hot: float, omega_ref: float | None = None) -> float:
    """``1 - T_c / T_h`` with both baths read as Bose-Einstein occupations at ``omega_ref``.

    ``omega_ref`` cancels in the ratio; it is accepted so the reference
    frequency is explicit at call sites.
    """
    if n_cold <= 0:
        raise ValueError("n_cold must be positive (n_cold = 0 is a zero-temperature bath)")
    if n_hot < n_cold:
        raise ValueError("need n_hot >= n_cold")
    if omega_ref is not None and not omega_ref > 0:
        raise ValueError("omega_ref must be positive")
    return 1.0 - math.log1p(1.0 / n_hot) / math.log1p(1.0 / n_cold)


def power(record: CycleRecord) -> float:
    return record.summary.w_cycle / record.config.duration


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian grid over named axes.

    Axis names are :class:`CycleConfig` fields, ``kappa`` (model coupling) or
    ``ratio`` (compression ratio ``L1 / L2`` at fixed ``L1``).
    """

    base: CycleConfig
    axes: tuple = ()
    outputs: tuple = OUTPUTS
    n_max: int | None = None

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("a sweep needs at least one axis")
        fields = set(CycleConfig.__dataclass_fields__)
        names = [name for name, _ in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate sweep axis in {names}")
        for name, values in self.axes:
            if name not in fields and name not in MODEL_AXES + SPECIAL_AXES:
                raise ConfigError(f"unknown sweep axis {name!r}")
            if len(values) == 0:
                raise ConfigError(f"sweep axis {name!r} has no values")
        if "ratio" in names and "L2" in names:
            raise ConfigError("'ratio' and 'L2' cannot both be swept")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigError(f"unknown sweep outputs {bad}; choose from {OUTPUTS}")

    @property
    def axis_names(self) -> list[str]:
        return [name for name, _ in self.axes]

    def points(self):
        """Grid points in axis iteration order (last axis fastest)."""
        names = self.axis_names
        for combo in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combo))


def point_setup(spec: SweepSpec, point: dict, params: ModelParams) -> tuple[CycleConfig, ModelParams]:
    changes = {k: v for k, v in point.items() if k not in MODEL_AXES + SPECIAL_AXES}
    if "ratio" in point:
        ratio = point["ratio"]
        if not ratio >= 1:
            raise ConfigError(f"compression ratio must be >= 1, got {ratio}")
        changes["L2"] = (changes.get("L1", spec.base.L1)) / ratio
    if "kind" in changes and changes["kind"] == "carnot":
        changes.setdefault("alpha_u", 0.5)
        changes.setdefault("alpha_h", 0.5)
    config = spec.base.replace(**changes) if changes else spec.base
    if "kappa" in point:
        params = replace(params, kappa=point["kappa"])
    return config, params


def _error_code(exc: Exception) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, TruncationError):
        return "truncation"
    if isinstance(exc, TraceDriftError):
        return "trace_drift"
    if isinstance(exc, ConvergenceError):
        return "not_converged"
    return "simulation"


@dataclass
class SweepRow:
    point: dict
    eta: float = math.nan
    power: float = math.nan
    w_cycle: float = math.nan
    q_hot: float = math.nan
    converged: bool = False
    cycles_to_steady: int = 0
    residual: float = math.nan
    error: str = ""
    message: str = ""
    diagnostics: dict = field(default_factory=dict)


def _fill(row: SweepRow, record: CycleRecord):
    s = record.summary
    row.w_cycle = s.w_cycle
    row.q_hot = s.q_hot
    row.power = power(record)
    row.cycles_to_steady = s.cycles_to_steady
    row.residual = s.residual if s.residual is not None else math.nan
    row.diagnostics = {"top_population": record.diagnostics.get("top_population"),
                       "n_max": record.diagnostics.get("n_max")}
    try:
        row.eta = efficiency(record)
    except ValueError as exc:
        row.error = row.error or "not_engine"
        row.message = row.message or str(exc)


def run_point(spec: SweepSpec, point: dict, params: ModelParams, integ: IntegratorConfig) -> SweepRow:
    row = SweepRow(point=dict(point))
    try:
        config, point_params = point_setup(spec, point, params)
        record = run_to_steady_cycle(config, point_params, integ, n_max=spec.n_max)
        row.converged = True
        _fill(row, record)
    except ConvergenceError as exc:
        row.error, row.message = "not_converged", str(exc)
        if exc.record is not None:
            _fill(row, exc.record)
    except (EngineError, ConfigError, ValueError) as exc:
        row.error, row.message = _error_code(exc), str(exc)
    return row


def _run_point_args(args):
    return run_point(*args)


def run_sweep(spec: SweepSpec, params: ModelParams, integ: IntegratorConfig, *,
              jobs: int | None = 1) -> list[SweepRow]:
    """One row per grid point, in grid order.  Failures are rows with an
    ``error`` code, never gaps.  ``jobs=None`` uses every available CPU."""
    points = list(spec.points())
    if jobs is None:
        jobs = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    if jobs <= 1 or len(points) <= 1:
        return [run_point(spec, p, params, integ) for p in points]
    with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
        return list(pool.map(_run_point_args, [(spec, p, params, integ) for p in points]))
