"""Scenario files: one YAML document per run.

Grammar (all rates in units of the first oscillator's gain)::

    name: fig3a-entrainment          # [A-Za-z0-9_.-]+
    kind: entrainment-sweep          # wigner | spectrum | bifurcation | entrainment-sweep
    system:                          # any SystemSpec field; scalars broadcast to both oscillators
      gamma2: 3.0
      delta: 0.3
      truncation: [10, 10]
    sweep:                           # optional; parameter must be a SystemSpec field
      parameter: eta
      values: [0.0, 0.5, 1.0, 2.0]
    wigner: {extent: 5.0, points: 201, modes: [1, 2]}
    spectrum: {mode: 1, omega_min: -5.0, omega_max: 5.0, omega_points: 1001, tau_max: 50.0, dtau: 0.01}
    bifurcation: {eta_min: 0.5, eta_max: 3.0, step: 0.01}
    output: {directory: runs/fig3a-entrainment, plot: false}

Only the block matching ``kind`` is used; the others keep their defaults.
"""
from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .liouvillian import SpecError, SystemSpec

NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
SCENARIO_SUFFIX = ".yaml"


class ConfigError(ValueError):
    """Invalid scenario; ``path`` names the offending field (e.g. ``system.gamma2``)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ScenarioKind(str, Enum):
    WIGNER = "wigner"
    SPECTRUM = "spectrum"
    BIFURCATION = "bifurcation"
    ENTRAINMENT_SWEEP = "entrainment-sweep"


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class WignerOptions:
    extent: float = 5.0
    points: int = 201
    modes: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))


@dataclass(frozen=True)
class SpectrumOptions:
    mode: int | str = 1
    omega_min: float = -5.0
    omega_max: float = 5.0
    omega_points: int = 1001
    tau_max: float = 50.0
    dtau: float = 0.01

    def omega_axis(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.omega_points)


@dataclass(frozen=True)
class BifurcationOptions:
    eta_min: float = 0.0
    eta_max: float = 6.0
    step: float = 0.01


@dataclass(frozen=True)
class OutputOptions:
    directory: str = ""
    plot: bool = False


_BLOCKS = {
    "wigner": WignerOptions,
    "spectrum": SpectrumOptions,
    "bifurcation": BifurcationOptions,
    "output": OutputOptions,
}


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: ScenarioKind
    system: SystemSpec
    sweep: Sweep | None = None
    wigner: WignerOptions = field(default_factory=WignerOptions)
    spectrum: SpectrumOptions = field(default_factory=SpectrumOptions)
    bifurcation: BifurcationOptions = field(default_factory=BifurcationOptions)
    output: OutputOptions = field(default_factory=OutputOptions)

    def __post_init__(self):
        if not self.name or not NAME_RE.match(self.name):
            raise ConfigError("name", f"must be nonempty and filesystem-safe, got {self.name!r}")
        try:
            object.__setattr__(self, "kind", ScenarioKind(self.kind))
        except ValueError:
            raise ConfigError("kind", f"unknown kind {self.kind!r}") from None
        if self.sweep is not None:
            spec_fields = {f.name for f in fields(SystemSpec)}
            if self.sweep.parameter not in spec_fields:
                raise ConfigError("sweep.parameter", f"{self.sweep.parameter!r} is not a system field")
            if not self.sweep.values:
                raise ConfigError("sweep.values", "must not be empty")
            if self.kind is ScenarioKind.BIFURCATION:
                raise ConfigError("sweep", "bifurcation scenarios sweep eta through the bifurcation block")
        if self.kind is ScenarioKind.ENTRAINMENT_SWEEP and self.sweep is None:
            raise ConfigError("sweep", "entrainment-sweep needs a sweep block")
        if self.kind is ScenarioKind.BIFURCATION and self.system.n_modes != 2:
            raise ConfigError("system.truncation", "the classical model has two oscillators")
        b = self.bifurcation
        if b.step <= 0 or b.eta_max < b.eta_min:
            raise ConfigError("bifurcation", "need step > 0 and eta_max >= eta_min")
        if self.wigner.points < 3 or self.wigner.extent <= 0:
            raise ConfigError("wigner", "need points >= 3 and extent > 0")
        for m in self.wigner.modes:
            if m not in range(1, self.system.n_modes + 1):
                raise ConfigError("wigner.modes", f"no oscillator {m}")
        s = self.spectrum
        if s.mode not in (1, 2, "sym") or (s.mode != 1 and self.system.n_modes == 1):
            raise ConfigError("spectrum.mode", f"invalid mode {s.mode!r}")
        if s.dtau <= 0 or s.tau_max <= s.dtau or s.omega_points < 2:
            raise ConfigError("spectrum", "need dtau > 0, tau_max > dtau and omega_points >= 2")

    def points(self) -> list[tuple[float | None, SystemSpec]]:
        """(sweep value, spec) for each point; a single ``(None, system)`` without a sweep."""
        if self.sweep is None:
            return [(None, self.system)]
        out = []
        for i, v in enumerate(self.sweep.values):
            try:
                out.append((v, self.system.with_(**{self.sweep.parameter: v})))
            except (SpecError, ValueError, TypeError) as exc:
                raise ConfigError(f"sweep.values[{i}]", str(exc)) from None
        return out

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind.value, "system": self.system.to_dict()}
        if self.sweep is not None:
            d["sweep"] = {"parameter": self.sweep.parameter, "values": list(self.sweep.values)}
        for key in _BLOCKS:
            block = asdict(getattr(self, key))
            d[key] = {k: list(v) if isinstance(v, tuple) else v for k, v in block.items()}
        return d

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "scenario must be a mapping")
        allowed = {"name", "kind", "system", "sweep", *_BLOCKS}
        for key in data:
            if key not in allowed:
                raise ConfigError(key, "unknown field")
        for key in ("name", "kind", "system"):
            if key not in data:
                raise ConfigError(key, "missing")
        system = data["system"]
        if not isinstance(system, dict):
            raise ConfigError("system", "must be a mapping")
        try:
            spec = SystemSpec.from_dict(system)
        except (SpecError, TypeError, ValueError) as exc:
            raise ConfigError(f"system.{_guess_field(str(exc), system)}", str(exc)) from None
        kw = {}
        for key, typ in _BLOCKS.items():
            if key in data:
                kw[key] = _block(key, typ, data[key])
        sweep = None
        if data.get("sweep") is not None:
            sw = data["sweep"]
            if not isinstance(sw, dict) or set(sw) != {"parameter", "values"}:
                raise ConfigError("sweep", "needs exactly 'parameter' and 'values'")
            try:
                sweep = Sweep(str(sw["parameter"]), tuple(sw["values"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError("sweep.values", str(exc)) from None
        return cls(name=str(data["name"]), kind=data["kind"], system=spec, sweep=sweep, **kw)

    def with_overrides(self, truncation: int | None = None, mode=None) -> "Scenario":
        from dataclasses import replace

        out = self
        if truncation is not None:
            dims = (int(truncation),) * self.system.n_modes
            out = replace(out, system=out.system.with_(truncation=dims))
        if mode is not None:
            out = replace(out, spectrum=replace(out.spectrum, mode=mode))
        return out


def _guess_field(message: str, system: dict) -> str:
    for key in system:
        if key in message:
            return key
    return "<spec>"


def _block(key, typ, raw):
    if not isinstance(raw, dict):
        raise ConfigError(key, "must be a mapping")
    known = {f.name for f in fields(typ)}
    for k in raw:
        if k not in known:
            raise ConfigError(f"{key}.{k}", "unknown field")
    try:
        return typ(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def loads(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"not valid YAML: {exc}") from None
    return Scenario.from_dict(data)


def dumps(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False, default_flow_style=None)


def load(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return loads(text)


def bundled_dir():
    return resources.files("sqvdp") / "scenarios"


def bundled_scenarios() -> dict[str, Path]:
    root = bundled_dir()
    return {p.name[: -len(SCENARIO_SUFFIX)]: Path(str(p))
            for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(SCENARIO_SUFFIX)}


def resolve(name_or_path) -> Path:
    """A path to a scenario file, or the name of a bundled scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if str(name_or_path) in bundled:
        return bundled[str(name_or_path)]
    raise ConfigError("<file>", f"no such scenario file or bundled scenario: {name_or_path}")
