"""Stationary power spectra from the quantum regression theorem.

``g(tau) = Tr[a^dag exp(L tau)(a rho_ss)]`` and
``S(omega) = 2 Re int_0^inf g(tau) exp(-i omega tau) dtau``, so an unlocked
oscillator with detuning ``Delta`` peaks at ``omega = +Delta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .fock import DensityMatrix, Operator, dagger, mode_ops
from .liouvillian import Liouvillian, parity_sector, vec
from .steadystate import RESIDUAL_TOL, SectorSystem, SteadyStateError, relative_residual

DEFAULT_OMEGA = np.linspace(-5.0, 5.0, 1001)
DEFAULT_TAU_MAX = 50.0
DEFAULT_DTAU = 0.01
DECAY_FRACTION = 1e-6
MAX_DOUBLINGS = 5
RK4_STABILITY = 2.5  # RK4 is stable for |h lambda| up to ~2.8 on both axes


class SpectrumError(RuntimeError):
    pass


class WindowTooShortError(SpectrumError):
    pass


class NotStationaryError(SpectrumError):
    pass


class ResolventSingularError(SpectrumError):
    pass


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    omega_axis: np.ndarray
    values: np.ndarray
    omega_obs: float
    mode: int | str = 1
    info: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, omega_axis, values, mode=1, info=None) -> "SpectrumResult":
        omega_axis = np.asarray(omega_axis, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(omega_axis, values, float(omega_axis[int(np.argmax(values))]), mode, info or {})

    def peak_value(self) -> float:
        return float(self.values.max())


def mode_operator(liou_or_dim, mode=1) -> Operator:
    """Lowering operator of oscillator 1 or 2, or ``"sym"`` for (a1 + a2)/sqrt(2)."""
    dim = liou_or_dim.dim if isinstance(liou_or_dim, Liouvillian) else liou_or_dim
    ops = mode_ops(dim)
    if mode == "sym":
        if len(ops) != 2:
            raise ValueError("the symmetric mode needs two oscillators")
        return (ops[0] + ops[1]) / np.sqrt(2.0)
    idx = int(mode) - 1
    if idx not in range(len(ops)):
        raise ValueError(f"mode must be 1..{len(ops)} or 'sym', got {mode!r}")
    return ops[idx]


def _check_stationary(liou: Liouvillian, rho_ss: DensityMatrix, tol: float):
    res = relative_residual(liou.matrix, vec(rho_ss.entries))
    if res > tol:
        raise NotStationaryError(f"rho_ss is not stationary: relative residual {res:.3e}")


def max_rate(liou: Liouvillian) -> float:
    """Largest model rate (gains, losses, detunings, squeezing, coupling)."""
    spec = liou.spec
    if spec is None:
        return 1.0
    vals = [*spec.gamma1, *spec.gamma2, *map(abs, spec.delta), *spec.eta, *spec.kappa, spec.coupling]
    return max(max(vals), 1.0)


def rk4_step_bound(A: sp.spmatrix, rate_scale: float) -> float:
    """Largest fixed step allowed: 0.01 / rate scale, capped by RK4 stability.

    The stability cap uses the Gershgorin bound on the spectral radius of ``A``.
    """
    gersh = float(np.max(np.asarray(abs(A).sum(axis=1)).ravel()))
    return min(0.01 / rate_scale, RK4_STABILITY / gersh)


class _OddPropagator:
    """RK4 propagation of ``a rho`` inside the odd parity sector."""

    def __init__(self, liou: Liouvillian, a: Operator, rho: np.ndarray, dtau: float):
        odd = parity_sector(liou.dim, odd=True)
        self.A = liou.matrix[odd][:, odd].tocsr()
        self.y = vec(a.entries @ rho)[odd].astype(complex)
        # Tr[X B] = vec(X^T) . vec(B)
        self.c = vec(dagger(a).entries.T)[odd]
        h_max = rk4_step_bound(self.A, max_rate(liou))
        self.substeps = max(1, int(np.ceil(dtau / h_max - 1e-9)))
        self.h = dtau / self.substeps

    def value(self) -> complex:
        return complex(self.c @ self.y)

    def advance(self):
        A, h, y = self.A, self.h, self.y
        for _ in range(self.substeps):
            k1 = A @ y
            k2 = A @ (y + 0.5 * h * k1)
            k3 = A @ (y + 0.5 * h * k2)
            k4 = A @ (y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        self.y = y


def two_time_correlation(liou: Liouvillian, rho_ss: DensityMatrix, mode=1, tau_axis=None,
                         stationarity_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """``g(tau) = <a^dag(tau) a(0)>`` on a uniform grid starting at zero."""
    tau_axis = np.arange(0.0, DEFAULT_TAU_MAX + DEFAULT_DTAU / 2, DEFAULT_DTAU) if tau_axis is None \
        else np.asarray(tau_axis, dtype=float)
    if tau_axis[0] != 0.0:
        raise ValueError("tau_axis must start at 0")
    steps = np.diff(tau_axis)
    if len(steps) and not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("tau_axis must be uniform")
    _check_stationary(liou, rho_ss, stationarity_tol)
    a = mode_operator(liou, mode)
    prop = _OddPropagator(liou, a, rho_ss.entries, steps[0] if len(steps) else DEFAULT_DTAU)
    out = np.empty(len(tau_axis), dtype=complex)
    out[0] = prop.value()
    for k in range(1, len(tau_axis)):
        prop.advance()
        out[k] = prop.value()
    return out


def _trapezoid_transform(g: np.ndarray, tau: np.ndarray, omega: np.ndarray, chunk: int = 64) -> np.ndarray:
    w = np.full(len(tau), tau[1] - tau[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    gw = g * w
    out = np.empty(len(omega))
    for s in range(0, len(omega), chunk):
        om = omega[s:s + chunk]
        out[s:s + chunk] = 2.0 * np.real(np.exp(-1j * np.outer(om, tau)) @ gw)
    return out


def power_spectrum(correlation, tau_axis, omega_axis=None, mode=1,
                   decay_fraction: float = DECAY_FRACTION) -> SpectrumResult:
    """One-sided transform of a decayed correlation; ``omega_obs`` is the argmax."""
    g = np.asarray(correlation, dtype=complex)
    tau = np.asarray(tau_axis, dtype=float)
    omega = DEFAULT_OMEGA if omega_axis is None else np.asarray(omega_axis, dtype=float)
    g0 = abs(g[0])
    if abs(g[-1]) > decay_fraction * g0:
        raise WindowTooShortError(
            f"|g(tau_max)| = {abs(g[-1]):.3e} exceeds {decay_fraction:g} * |g(0)| = {decay_fraction * g0:.3e}"
        )
    values = _trapezoid_transform(g, tau, omega)
    info = {"tau_max": float(tau[-1]), "dtau": float(tau[1] - tau[0]), "g0": complex(g[0])}
    return SpectrumResult.from_values(omega, values, mode, info)


def regression_spectrum(liou: Liouvillian, rho_ss: DensityMatrix, mode=1, omega_axis=None,
                        tau_max: float = DEFAULT_TAU_MAX, dtau: float = DEFAULT_DTAU,
                        max_doublings: int = MAX_DOUBLINGS) -> SpectrumResult:
    """Correlation propagation plus quadrature, doubling the window until ``g`` has decayed."""
    _check_stationary(liou, rho_ss, RESIDUAL_TOL)
    a = mode_operator(liou, mode)
    prop = _OddPropagator(liou, a, rho_ss.entries, dtau)
    g = [prop.value()]
    target = int(round(tau_max / dtau))
    doublings = 0
    while True:
        while len(g) <= target:
            prop.advance()
            g.append(prop.value())
        if abs(g[-1]) <= DECAY_FRACTION * abs(g[0]) or doublings >= max_doublings:
            break
        target *= 2
        doublings += 1
    g = np.array(g)
    result = power_spectrum(g, dtau * np.arange(len(g)), omega_axis, mode)
    result.info.update(rk4_step=prop.h, doublings=doublings, correlation=g)
    return result


def spectrum_via_resolvent(liou: Liouvillian, rho_ss: DensityMatrix, mode=1, omega_axis=None) -> SpectrumResult:
    """Per-frequency solve of ``(L - i omega) x = -vec(a rho)``; ``S = 2 Re Tr[a^dag x]``."""
    omega = DEFAULT_OMEGA if omega_axis is None else np.asarray(omega_axis, dtype=float)
    _check_stationary(liou, rho_ss, RESIDUAL_TOL)
    a = mode_operator(liou, mode)
    b_full = vec(a.entries @ rho_ss.entries)
    c_full = vec(dagger(a).entries.T)
    values = np.empty(len(omega))
    for k, w in enumerate(omega):
        system = SectorSystem(liou, odd=True, shift=1j * w)
        b = system.restrict(b_full)
        try:
            x, _ = system.solve(-b)
        except (SteadyStateError, RuntimeError) as exc:
            raise ResolventSingularError(f"resolvent solve failed at omega = {w:g}: {exc}") from exc
        values[k] = 2.0 * np.real(system.restrict(c_full) @ x)
    return SpectrumResult.from_values(omega, values, mode, {"method": "resolvent"})


def sum_rule(result: SpectrumResult) -> float:
    """(1/2pi) * integral of S over the sampled window (trapezoid)."""
    return float(np.trapezoid(result.values, result.omega_axis) / (2 * np.pi))


def format_spectrum(result: SpectrumResult) -> str:
    lines = [f"# omega_obs: {result.omega_obs!r}", f"# mode: {result.mode}"]
    lines += [f"{w:.10f} {s:.12e}" for w, s in zip(result.omega_axis, result.values)]
    return "\n".join(lines) + "\n"


def write_spectrum(path, result: SpectrumResult) -> None:
    Path(path).write_text(format_spectrum(result))


def read_spectrum(path) -> SpectrumResult:
    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, val = line[1:].split(":", 1)
            header[key.strip()] = val.strip()
        elif line.strip():
            rows.append([float(v) for v in line.split()])
    arr = np.array(rows)
    mode = header.get("mode", "1")
    mode = int(mode) if mode.isdigit() else mode
    res = SpectrumResult.from_values(arr[:, 0], arr[:, 1], mode)
    if "omega_obs" in header:
        # the axis column is rounded to 1e-10; the header keeps the exact value
        obs = float(header["omega_obs"])
        if abs(obs - res.omega_obs) > 1e-9:
            raise SpectrumError(f"{path}: omega_obs header disagrees with data")
        res = SpectrumResult(res.omega_axis, res.values, obs, mode, res.info)
    return res
