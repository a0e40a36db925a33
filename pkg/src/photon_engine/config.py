"""INI run configuration.

Sections mirror the library types and keys are their field names::

    [model]       omega_A, alpha_0, kappa, surface   (omega_A defaults to alpha_0 / L1)
    [cycle]       every CycleConfig field
    [integrator]  dt_max, substep_rule, min_samples, stability_cap
    [space]       n_max, engine
    [sweep]       axis.<name> = v1, v2, ...; outputs = eta, power, ...
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from .cycles import CycleConfig, default_n_max
from .dynamics import IntegratorConfig
from .errors import ConfigError
from .jc_model import ModelParams
from .sweeps import OUTPUTS, SweepSpec

MODEL_KEYS = {"omega_A": float, "alpha_0": float, "kappa": float, "surface": float}
INTEGRATOR_KEYS = {"dt_max": float, "substep_rule": float, "min_samples": int, "stability_cap": bool}
SPACE_KEYS = {"n_max": int, "engine": str}
CYCLE_KEYS = {
    "kind": str, "L1": float, "L2": float, "tau": float, "speed": float, "n_cold": float,
    "n_hot": float, "bath_target": str, "gamma_rate": float, "alpha_u": float, "alpha_h": float,
    "gamma_exponent": float, "max_cycles": int, "steady_tol": float, "steady_solver": str,
}
SECTIONS = {"model": MODEL_KEYS, "cycle": CYCLE_KEYS, "integrator": INTEGRATOR_KEYS, "space": SPACE_KEYS}
ENGINES = ("sector", "dense")

assert set(CYCLE_KEYS) == {f.name for f in dataclasses.fields(CycleConfig)}


@dataclass
class RunConfig:
    cycle: CycleConfig
    model: ModelParams
    integrator: IntegratorConfig
    n_max: int
    engine: str = "sector"
    sweep: SweepSpec | None = None
    source: str = ""
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Every resolved setting, defaults included."""
        out = {
            "model": dataclasses.asdict(self.model),
            "cycle": dataclasses.asdict(self.cycle),
            "integrator": dataclasses.asdict(self.integrator),
            "space": {"n_max": self.n_max, "engine": self.engine},
        }
        if self.sweep is not None:
            out["sweep"] = {
                "axes": {name: list(values) for name, values in self.sweep.axes},
                "outputs": list(self.sweep.outputs),
            }
        return out


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return i
    return None


def _where(text: str, section: str, key: str) -> str:
    line = _line_of(text, section, key)
    return f"[{section}] {key}" + (f" (line {line})" if line else "")


def _coerce(value: str, kind, where: str):
    value = value.strip()
    try:
        if kind is bool:
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind is str:
            if not value:
                raise ValueError(value)
            return value
        return kind(value)
    except ValueError:
        raise ConfigError(f"{where}: cannot read {value!r} as {kind.__name__}") from None


def _parse_axis_value(name: str, token: str, where: str):
    kind = CYCLE_KEYS.get(name, float)
    return _coerce(token, kind, where)


def parse_text(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (omega_A, L1)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    values: dict[str, dict] = {name: {} for name in SECTIONS}
    sweep_axes = []
    outputs = OUTPUTS
    for section in parser.sections():
        if section == "sweep":
            for key, raw in parser.items(section):
                where = f"{source}: " + _where(text, section, key)
                if key == "outputs":
                    outputs = tuple(t.strip() for t in raw.split(",") if t.strip())
                    continue
                if not key.startswith("axis."):
                    raise ConfigError(f"{where}: unknown key {key!r} (expected axis.<name> or outputs)")
                name = key[len("axis."):]
                tokens = [t for t in (s.strip() for s in raw.split(",")) if t]
                sweep_axes.append((name, tuple(_parse_axis_value(name, t, where) for t in tokens)))
            continue
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        allowed = SECTIONS[section]
        for key, raw in parser.items(section):
            where = f"{source}: " + _where(text, section, key)
            if key not in allowed:
                raise ConfigError(f"{where}: unknown key {key!r}; allowed: {', '.join(allowed)}")
            values[section][key] = _coerce(raw, allowed[key], where)

    try:
        cycle = CycleConfig(**values["cycle"])
        model_kwargs = dict(values["model"])
        model_kwargs.setdefault("omega_A", model_kwargs.get("alpha_0", ModelParams.__dataclass_fields__["alpha_0"].default)
                                / cycle.L1)
        model = ModelParams(**model_kwargs)
        integrator = IntegratorConfig(**values["integrator"])
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    engine = values["space"].get("engine", "sector")
    if engine not in ENGINES:
        raise ConfigError(f"{source}: [space] engine must be one of {ENGINES}, got {engine!r}")
    n_max = values["space"].get("n_max")
    sweep = None
    if parser.has_section("sweep"):
        if n_max is not None and n_max < 5:
            raise ConfigError(f"{source}: [space] n_max must be >= 5")
        try:
            sweep = SweepSpec(base=cycle, axes=tuple(sweep_axes), outputs=outputs, n_max=n_max)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None
    if n_max is None:
        n_max = default_n_max(cycle)
    if n_max < 5:
        raise ConfigError(f"{source}: [space] n_max must be >= 5")
    return RunConfig(cycle, model, integrator, n_max, engine, sweep, source,
                     raw={s: dict(parser.items(s)) for s in parser.sections()})


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text, str(path))
