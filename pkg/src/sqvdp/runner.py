"""Scenario execution: per-point pipelines, a single writer and the run manifest.

Workers return file contents as text; only the parent process touches the
output directory, so manifests stay consistent and outputs do not depend on
the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, classical, svg
from .config import Scenario, ScenarioKind
from .liouvillian import build_liouvillian
from .observables import (axis, local_maxima, partial_trace, rotational_asymmetry, wigner,
                          format_wigner_grid)
from .spectrum import format_spectrum, regression_spectrum
from .steadystate import solve_steady_state

OUT_ENV = "SQVDP_OUT"
MANIFEST_NAME = "manifest.yaml"


@dataclass
class PointResult:
    value: float | None
    files: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None


@dataclass(frozen=True)
class RunManifest:
    scenario: dict
    tool_version: str
    duration_s: float
    outputs: dict[str, str]
    diagnostics: list
    failures: list
    path: Path

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 2


def output_dir(scenario: Scenario, out=None) -> Path:
    """``--out`` wins, then ``$SQVDP_OUT/<name>``, then the scenario's own directory."""
    if out is not None:
        return Path(out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env) / scenario.name
    return Path(scenario.output.directory or Path("runs") / scenario.name)


def _suffix(scenario: Scenario, value) -> str:
    if value is None:
        return ""
    return f"_{scenario.sweep.parameter}={value:g}"


def _wigner_point(scenario: Scenario, value, spec) -> PointResult:
    res = PointResult(value)
    ss = solve_steady_state(build_liouvillian(spec))
    res.diagnostics = {"residual": float(ss.residual), **_plain(ss.solver_info)}
    opts = scenario.wigner
    ax = axis(opts.extent, opts.points)
    for m in opts.modes:
        state = ss.rho if spec.n_modes == 1 else partial_trace(ss.rho, m - 1)
        grid = wigner(state, ax, ax)
        name = f"wigner_mode{m}{_suffix(scenario, value)}"
        res.files[f"{name}.txt"] = format_wigner_grid(grid)
        res.summary[f"maxima_mode{m}"] = len(local_maxima(grid))
        res.summary[f"asymmetry_mode{m}"] = rotational_asymmetry(grid)
        res.summary[f"max_w_mode{m}"] = float(grid.values.max())
        if scenario.output.plot:
            res.files[f"{name}.svg"] = svg.heatmap(grid.values, name)
    return res


def _spectrum_point(scenario: Scenario, value, spec) -> PointResult:
    res = PointResult(value)
    liou = build_liouvillian(spec)
    ss = solve_steady_state(liou)
    opts = scenario.spectrum
    sp_ = regression_spectrum(liou, ss.rho, opts.mode, opts.omega_axis(), opts.tau_max, opts.dtau)
    res.diagnostics = {"residual": float(ss.residual), **_plain(ss.solver_info),
                       **_plain({k: v for k, v in sp_.info.items() if k not in ("g0", "correlation")})}
    name = f"spectrum_mode{opts.mode}{_suffix(scenario, value)}"
    res.files[f"{name}.txt"] = format_spectrum(sp_)
    res.summary["omega_obs"] = sp_.omega_obs
    if scenario.output.plot:
        res.files[f"{name}.svg"] = svg.lines([(sp_.omega_axis, sp_.values, None)], name, "omega", "S")
    return res


def _bifurcation_point(scenario: Scenario, value, spec) -> PointResult:
    res = PointResult(value)
    b = scenario.bifurcation
    sweep = classical.bifurcation_sweep(spec, (b.eta_min, b.eta_max), b.step)
    res.files["branches.csv"] = classical.format_branches_csv(sweep)
    res.files["events.csv"] = classical.format_events_csv(sweep.events)
    res.summary["events"] = [[float(e), k] for e, k in sweep.events]
    res.diagnostics = {"branches": len(sweep.branches), "failed_eta": sweep.failures}
    if scenario.output.plot:
        for var, idx in (("R1", 0), ("R2", 1)):
            series = [(br.parameter_axis, br.array()[:, idx], svg.STABILITY_COLOURS[br.stability[0].value])
                      for br in sweep.branches if len(br.parameter_axis) > 1]
            res.files[f"branches_{var}.svg"] = svg.lines(series, f"{scenario.name} {var}", "eta", var)
    return res


_PIPELINES = {
    ScenarioKind.WIGNER: _wigner_point,
    ScenarioKind.SPECTRUM: _spectrum_point,
    ScenarioKind.ENTRAINMENT_SWEEP: _spectrum_point,
    ScenarioKind.BIFURCATION: _bifurcation_point,
}


def _plain(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        elif not isinstance(v, (int, float, str, bool, list, type(None))):
            v = str(v)
        out[str(k)] = v
    return out


def compute_point(args) -> PointResult:
    """Run one sweep point; any exception becomes a failure record."""
    scenario, value, spec = args
    try:
        return _PIPELINES[scenario.kind](scenario, value, spec)
    except Exception as exc:  # noqa: BLE001 - isolate per-point failures
        tb = traceback.format_exception_only(type(exc), exc)[-1].strip()
        return PointResult(value, error=tb)


def _summary_csv(scenario: Scenario, results: list[PointResult]) -> str | None:
    if scenario.sweep is None or scenario.kind is ScenarioKind.BIFURCATION:
        return None
    keys = sorted({k for r in results for k in r.summary})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([scenario.sweep.parameter, *keys])
    for r in results:
        w.writerow([f"{r.value:g}", *(_fmt(r.summary.get(k, "")) for k in keys)])
    return buf.getvalue()


def _fmt(v):
    return f"{v:.10g}" if isinstance(v, float) else v


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _clear_previous(out: Path):
    manifest = out / MANIFEST_NAME
    if not manifest.exists():
        return
    old = yaml.safe_load(manifest.read_text()) or {}
    for rel in (old.get("outputs") or {}):
        p = out / rel
        if p.is_file():
            p.unlink()
    manifest.unlink()


def run_sweep_parallel(scenario: Scenario, workers: int = 1, out=None) -> RunManifest:
    """Compute all points (in a process pool when ``workers > 1``), then write in order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    start = time.perf_counter()
    tasks = [(scenario, v, spec) for v, spec in scenario.points()]
    if workers == 1 or len(tasks) == 1:
        results = [compute_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(compute_point, tasks))

    directory = output_dir(scenario, out)
    directory.mkdir(parents=True, exist_ok=True)
    _clear_previous(directory)
    for r in results:
        for rel, text in r.files.items():
            (directory / rel).write_text(text)
    summary = _summary_csv(scenario, results)
    if summary is not None:
        (directory / "summary.csv").write_text(summary)

    outputs = {p.name: sha256(p) for p in sorted(directory.iterdir())
               if p.is_file() and p.name != MANIFEST_NAME}
    diagnostics = [{"value": r.value, **r.diagnostics, "summary": _plain(r.summary)}
                   for r in results if r.error is None]
    failures = [{"value": r.value, "error": r.error} for r in results if r.error is not None]
    manifest = RunManifest(scenario.to_dict(), __version__, time.perf_counter() - start,
                           outputs, diagnostics, failures, directory / MANIFEST_NAME)
    doc = {
        "scenario": manifest.scenario,
        "tool_version": manifest.tool_version,
        "duration_s": round(manifest.duration_s, 3),
        "status": "ok" if manifest.ok else "partial",
        "outputs": manifest.outputs,
        "diagnostics": diagnostics,
        "failures": failures,
    }
    manifest.path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return manifest


def run_scenario(scenario: Scenario, out=None) -> RunManifest:
    return run_sweep_parallel(scenario, workers=1, out=out)


def read_manifest(path) -> dict:
    return yaml.safe_load(Path(path).read_text())
