"""Mean-field amplitude/phase equations, fixed points and squeezing sweeps.

Reactive coupling uses the reference amplitude/phase equations unchanged,
including their sign of the exchange terms (which differs from the exact mean
field in three of the four equations). The dissipative right-hand side is derived here by replacing
operators with ``<a_j> = R_j exp(i phi_j)`` in the master equation with the
shared-loss channel ``V D[a1 - a2]``: that channel contributes
``d<a1>/dt = -(V/2)(<a1> - <a2>)``, which splits into

    dR1/dt   += (V/2) (R2 cos(phi2 - phi1) - R1)
    dphi1/dt += (V/2) (R2/R1) sin(phi2 - phi1)

and the mirror-image terms for oscillator 2.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .liouvillian import CouplingKind, SystemSpec

TWO_PI = 2 * np.pi
NEWTON_TOL = 1e-10
NEWTON_MAXITER = 20
DEDUP_TOL = 1e-6
MARGINAL_EPS = 1e-6
FD_STEP = 1e-7
MULTISTART_R = np.arange(0.2, 2.0 + 1e-9, 0.3)
MULTISTART_PHI = np.arange(8) * np.pi / 4


class SingularStateError(ValueError):
    pass


class Stability(str, Enum):
    STABLE = "stable"
    SADDLE = "saddle"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class ClassicalState:
    R1: float
    R2: float
    phi1: float
    phi2: float

    def __post_init__(self):
        if self.R1 < 0 or self.R2 < 0:
            raise ValueError("amplitudes must be non-negative")
        object.__setattr__(self, "phi1", float(self.phi1) % TWO_PI)
        object.__setattr__(self, "phi2", float(self.phi2) % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.R1, self.R2, self.phi1, self.phi2])

    @classmethod
    def from_array(cls, x) -> "ClassicalState":
        return cls(*canonical(np.asarray(x, dtype=float)))


def canonical(x: np.ndarray) -> np.ndarray:
    """Map negative amplitudes to positive ones (R -> -R, phi -> phi + pi) and wrap phases."""
    x = np.array(x, dtype=float, copy=True)
    flat = x.reshape(-1, 4)
    for k in (0, 1):
        neg = flat[:, k] < 0
        flat[neg, k] *= -1
        flat[neg, k + 2] += np.pi
    flat[:, 2:] %= TWO_PI
    return flat.reshape(x.shape)


def phase_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.abs(a - b) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def state_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Max-norm distance with phases compared modulo 2 pi."""
    amp = np.abs(x[..., :2] - y[..., :2])
    ph = phase_distance(x[..., 2:], y[..., 2:])
    return np.maximum(amp.max(axis=-1), ph.max(axis=-1))


@dataclass(frozen=True)
class _Params:
    g1: tuple[float, float]
    g2: tuple[float, float]
    delta: tuple[float, float]
    eta: tuple[float, float]
    theta: float
    V: float
    dissipative: bool

    @classmethod
    def of(cls, spec: SystemSpec, kind=None) -> "_Params":
        kind = CouplingKind(kind) if kind is not None else spec.coupling_kind
        V = 0.0 if kind is CouplingKind.NONE else spec.coupling
        return cls(spec.gamma1, spec.gamma2, spec.delta, spec.eta, spec.theta, V,
                   kind is CouplingKind.DISSIPATIVE)


def _rhs(X: np.ndarray, p: _Params) -> np.ndarray:
    R1, R2, f1, f2 = X[..., 0], X[..., 1], X[..., 2], X[..., 3]
    d = f2 - f1
    c, s = np.cos(d), np.sin(d)
    u1, u2 = 2 * f1 - p.theta, 2 * f2 - p.theta
    out = np.empty_like(X)
    out[..., 0] = 0.5 * p.g1[0] * R1 - p.g2[0] * R1**3 - 2 * p.eta[0] * R1 * np.cos(u1)
    out[..., 1] = 0.5 * p.g1[1] * R2 - p.g2[1] * R2**3 - 2 * p.eta[1] * R2 * np.cos(u2)
    out[..., 2] = -p.delta[0] + 2 * p.eta[0] * np.sin(u1)
    out[..., 3] = -p.delta[1] + 2 * p.eta[1] * np.sin(u2)
    if p.V:
        V = p.V
        if p.dissipative:
            W = 0.5 * V
            out[..., 0] += W * (R2 * c - R1)
            out[..., 1] += W * (R1 * c - R2)
            out[..., 2] += W * (R2 / R1) * s
            out[..., 3] -= W * (R1 / R2) * s
        else:
            out[..., 0] -= V * R2 * s
            out[..., 1] -= V * R1 * s
            out[..., 2] += V * (R2 / R1) * c
            out[..., 3] += V * (R1 / R2) * c
    return out


def _jac(X: np.ndarray, p: _Params) -> np.ndarray:
    """Analytic Jacobian, shape (..., 4, 4); rows are equations, columns (R1, R2, phi1, phi2)."""
    R1, R2, f1, f2 = X[..., 0], X[..., 1], X[..., 2], X[..., 3]
    d = f2 - f1
    c, s = np.cos(d), np.sin(d)
    u1, u2 = 2 * f1 - p.theta, 2 * f2 - p.theta
    J = np.zeros(X.shape[:-1] + (4, 4))
    J[..., 0, 0] = 0.5 * p.g1[0] - 3 * p.g2[0] * R1**2 - 2 * p.eta[0] * np.cos(u1)
    J[..., 0, 2] = 4 * p.eta[0] * R1 * np.sin(u1)
    J[..., 1, 1] = 0.5 * p.g1[1] - 3 * p.g2[1] * R2**2 - 2 * p.eta[1] * np.cos(u2)
    J[..., 1, 3] = 4 * p.eta[1] * R2 * np.sin(u2)
    J[..., 2, 2] = 4 * p.eta[0] * np.cos(u1)
    J[..., 3, 3] = 4 * p.eta[1] * np.cos(u2)
    if p.V:
        V = p.V
        if p.dissipative:
            W = 0.5 * V
            J[..., 0, 0] -= W
            J[..., 0, 1] += W * c
            J[..., 0, 2] += W * R2 * s
            J[..., 0, 3] -= W * R2 * s
            J[..., 1, 0] += W * c
            J[..., 1, 1] -= W
            J[..., 1, 2] += W * R1 * s
            J[..., 1, 3] -= W * R1 * s
            J[..., 2, 0] -= W * R2 * s / R1**2
            J[..., 2, 1] += W * s / R1
            J[..., 2, 2] -= W * (R2 / R1) * c
            J[..., 2, 3] += W * (R2 / R1) * c
            J[..., 3, 0] -= W * s / R2
            J[..., 3, 1] += W * R1 * s / R2**2
            J[..., 3, 2] += W * (R1 / R2) * c
            J[..., 3, 3] -= W * (R1 / R2) * c
        else:
            J[..., 0, 1] -= V * s
            J[..., 0, 2] += V * R2 * c
            J[..., 0, 3] -= V * R2 * c
            J[..., 1, 0] -= V * s
            J[..., 1, 2] += V * R1 * c
            J[..., 1, 3] -= V * R1 * c
            J[..., 2, 0] -= V * R2 * c / R1**2
            J[..., 2, 1] += V * c / R1
            J[..., 2, 2] += V * (R2 / R1) * s
            J[..., 2, 3] -= V * (R2 / R1) * s
            J[..., 3, 0] += V * c / R2
            J[..., 3, 1] -= V * R1 * c / R2**2
            J[..., 3, 2] += V * (R1 / R2) * s
            J[..., 3, 3] -= V * (R1 / R2) * s
    return J


def _checked(state) -> np.ndarray:
    x = state.as_array() if isinstance(state, ClassicalState) else np.asarray(state, dtype=float)
    if x[0] == 0 or x[1] == 0:
        raise SingularStateError("phase equations are singular at zero amplitude")
    return x


def rhs_reactive(state, spec: SystemSpec) -> np.ndarray:
    """(dR1, dR2, dphi1, dphi2)/dt for reactive (Hamiltonian exchange) coupling."""
    return _rhs(_checked(state), _Params.of(spec, CouplingKind.REACTIVE))


def rhs_dissipative(state, spec: SystemSpec) -> np.ndarray:
    """Same with the shared-loss coupling ``V D[a1 - a2]`` in place of the exchange term."""
    return _rhs(_checked(state), _Params.of(spec, CouplingKind.DISSIPATIVE))


def rhs(state, spec: SystemSpec, kind=None) -> np.ndarray:
    return _rhs(_checked(state), _Params.of(spec, kind))


def jacobian(state, spec: SystemSpec, kind=None) -> np.ndarray:
    return _jac(_checked(state), _Params.of(spec, kind))


def fd_jacobian(state, spec: SystemSpec, kind=None, step: float = FD_STEP, central: bool = False) -> np.ndarray:
    x = _checked(state)
    p = _Params.of(spec, kind)
    f0 = _rhs(x, p)
    J = np.empty((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = step
        if central:
            J[:, k] = (_rhs(x + e, p) - _rhs(x - e, p)) / (2 * step)
        else:
            J[:, k] = (_rhs(x + e, p) - f0) / step
    return J


def classify(eigenvalues, eps: float = MARGINAL_EPS) -> Stability:
    re = np.real(eigenvalues)
    if np.any(np.abs(re) < eps):
        return Stability.MARGINAL
    if np.all(re < 0):
        return Stability.STABLE
    if np.all(re > 0):
        return Stability.UNSTABLE
    return Stability.SADDLE


@dataclass(frozen=True)
class FixedPoint:
    state: ClassicalState
    stability: Stability
    eigenvalues: np.ndarray
    residual: float

    @property
    def unstable_dim(self) -> int:
        return int(np.sum(np.real(self.eigenvalues) > MARGINAL_EPS))


def multistart_grid() -> np.ndarray:
    R1, R2, f1, f2 = np.meshgrid(MULTISTART_R, MULTISTART_R, MULTISTART_PHI, MULTISTART_PHI,
                                 indexing="ij")
    return np.stack([R1.ravel(), R2.ravel(), f1.ravel(), f2.ravel()], axis=1)


def newton(starts: np.ndarray, p: _Params, tol: float = NEWTON_TOL,
           maxiter: int = NEWTON_MAXITER) -> np.ndarray:
    """Batched Newton iteration; returns the converged (canonical) states only."""
    X = canonical(np.atleast_2d(starts))
    done = []
    for _ in range(maxiter + 1):
        if not len(X):
            break
        with np.errstate(all="ignore"):
            F = _rhs(X, p)
        norm = np.linalg.norm(F, axis=1)
        ok = norm <= tol
        if ok.any():
            done.append(X[ok])
            X, F = X[~ok], F[~ok]
        finite = np.all(np.isfinite(F), axis=1)
        X, F = X[finite], F[finite]
        if not len(X):
            break
        J = _jac(X, p)
        try:
            dx = np.linalg.solve(J, -F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            # singular Jacobians (continuous families of fixed points): minimum-norm step
            dx = -(np.linalg.pinv(J) @ F[..., None])[..., 0]
        # cap amplitude moves so iterates cannot jump across R = 0 wildly
        scale = np.maximum(1.0, np.abs(dx[:, :2]).max(axis=1) / 0.5)
        X = canonical(X + dx / scale[:, None])
        keep = (X[:, 0] > 1e-8) & (X[:, 1] > 1e-8) & (X[:, :2].max(axis=1) < 1e3)
        X = X[keep]
    return np.concatenate(done) if done else np.empty((0, 4))


def deduplicate(X: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    if len(X):
        # cheap pre-pass: collapse exact-ish repeats before the pairwise check
        key = np.round(canonical(X) / tol).astype(np.int64)
        _, first = np.unique(key, axis=0, return_index=True)
        X = X[np.sort(first)]
    out: list[np.ndarray] = []
    for x in X:
        if not out or np.min(state_distance(np.array(out), x)) > tol:
            out.append(x)
    if not out:
        return np.empty((0, 4))
    arr = np.array(out)
    return arr[np.lexsort((arr[:, 3], arr[:, 2], arr[:, 1], arr[:, 0]))]


def _classify_points(X: np.ndarray, spec: SystemSpec, kind) -> list[FixedPoint]:
    p = _Params.of(spec, kind)
    pts = []
    for x in X:
        ev = np.linalg.eigvals(fd_jacobian(x, spec, kind))
        res = float(np.linalg.norm(_rhs(x, p)))
        pts.append(FixedPoint(ClassicalState.from_array(x), classify(ev), ev, res))
    return pts


def find_fixed_points(spec: SystemSpec, kind=None, seeds: np.ndarray | None = None,
                      fresh: bool = True) -> list[FixedPoint]:
    """Multistart Newton search for all fixed points of the mean-field equations.

    Stability comes from the forward-difference Jacobian; any eigenvalue with
    ``|Re| < 1e-6`` marks the point as marginal.
    """
    p = _Params.of(spec, kind)
    starts = [multistart_grid()] if fresh else []
    if seeds is not None and len(seeds):
        starts.insert(0, np.atleast_2d(seeds))
    if not starts:
        return []
    X = deduplicate(newton(np.concatenate(starts), p))
    return _classify_points(X, spec, kind)


@dataclass
class BifurcationBranch:
    parameter_axis: list[float] = field(default_factory=list)
    states: list[ClassicalState] = field(default_factory=list)
    stability: list[Stability] = field(default_factory=list)
    events: list[tuple[float, str]] = field(default_factory=list)
    unstable_dims: list[int] = field(default_factory=list)

    def append(self, eta: float, fp: FixedPoint):
        self.parameter_axis.append(float(eta))
        self.states.append(fp.state)
        self.stability.append(fp.stability)
        self.unstable_dims.append(fp.unstable_dim)

    @property
    def last(self) -> np.ndarray:
        return self.states[-1].as_array()

    def array(self) -> np.ndarray:
        return np.array([s.as_array() for s in self.states])


@dataclass
class SweepResult:
    branches: list[BifurcationBranch]
    events: list[tuple[float, str]]
    parameter_axis: np.ndarray
    failures: list[float] = field(default_factory=list)


def _merge_events(events, tol):
    merged: list[tuple[float, str]] = []
    for eta, kind in sorted(events):
        if merged and merged[-1][1] == kind and abs(merged[-1][0] - eta) <= tol:
            continue
        merged.append((eta, kind))
    return merged


def bifurcation_sweep(spec_template: SystemSpec, eta_range, step: float, kind=None,
                      fresh_every: int = 1, match_tol: float | None = None) -> SweepResult:
    """Natural-parameter continuation in the squeezing strength.

    At every ``eta`` Newton is seeded with the previous solutions, plus the
    fresh multistart grid every ``fresh_every`` steps. Points are linked into
    branches by nearest-neighbour matching. A saddle-node is reported where a
    stable and a non-stable branch are born (or die) together at nearby
    states; a stability change along a continuing branch is reported as
    ``stability-change``. Symmetry twins of one event are merged.
    """
    lo, hi = map(float, eta_range)
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("eta_range must be increasing")
    etas = lo + step * np.arange(int(np.floor((hi - lo) / step + 1e-9)) + 1)
    match_tol = 20 * step + 0.05 if match_tol is None else match_tol

    branches: list[BifurcationBranch] = []
    active: list[BifurcationBranch] = []
    births: list[tuple[int, BifurcationBranch]] = []
    deaths: list[tuple[int, BifurcationBranch]] = []
    changes: list[float] = []
    failures: list[float] = []
    for k, eta in enumerate(etas):
        spec = spec_template.with_(eta=eta)
        seeds = np.array([b.last for b in active]) if active else None
        fresh = k % fresh_every == 0 or not active
        try:
            pts = find_fixed_points(spec, kind, seeds=seeds, fresh=fresh)
        except np.linalg.LinAlgError:
            failures.append(float(eta))
            continue
        X = np.array([fp.state.as_array() for fp in pts]) if pts else np.empty((0, 4))
        # greedy nearest-neighbour matching, closest pairs first
        pairs = []
        for i, b in enumerate(active):
            if len(X):
                d = state_distance(X, b.last)
                for j in np.flatnonzero(d <= match_tol):
                    pairs.append((d[j], i, j))
        pairs.sort()
        used_b, used_p = set(), set()
        new_active = []
        for _, i, j in pairs:
            if i in used_b or j in used_p:
                continue
            used_b.add(i)
            used_p.add(j)
            b = active[i]
            if b.stability[-1] != pts[j].stability and Stability.MARGINAL not in (
                b.stability[-1], pts[j].stability
            ):
                changes.append(0.5 * (etas[k - 1] + eta))
            b.append(eta, pts[j])
            new_active.append(b)
        for i, b in enumerate(active):
            if i not in used_b:
                deaths.append((k, b))
        for j, fp in enumerate(pts):
            if j not in used_p:
                b = BifurcationBranch()
                b.append(eta, fp)
                branches.append(b)
                new_active.append(b)
                if k > 0:
                    births.append((k, b))
        active = new_active

    events = [(eta, "stability-change") for eta in changes]
    # a fold creates (or removes) two nearby branches whose unstable
    # dimensions differ by one: a single real eigenvalue went through zero
    for group, pick in ((births, 0), (deaths, -1)):
        used: set[int] = set()
        for a in range(len(group)):
            for c in range(a + 1, len(group)):
                (ka, ba), (kc, bc) = group[a], group[c]
                if a in used or c in used or ka != kc:
                    continue
                if Stability.MARGINAL in (ba.stability[pick], bc.stability[pick]):
                    continue
                if abs(ba.unstable_dims[pick] - bc.unstable_dims[pick]) != 1:
                    continue
                if state_distance(ba.states[pick].as_array(), bc.states[pick].as_array()) > 0.5:
                    continue
                used.update((a, c))
                events.append((float(0.5 * (etas[ka - 1] + etas[ka])), "saddle-node"))
    events = _merge_events(events, 1.5 * step)
    for b in branches:
        lo_b, hi_b = b.parameter_axis[0], b.parameter_axis[-1]
        b.events = [e for e in events if lo_b - step <= e[0] <= hi_b + step]
    return SweepResult(branches, events, etas, failures)


def format_branches_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["branch", "eta", "R1", "R2", "phi1", "phi2", "stability"])
    for bi, b in enumerate(result.branches):
        for eta, s, st in zip(b.parameter_axis, b.states, b.stability):
            w.writerow([bi, f"{eta:.6f}", f"{s.R1:.12f}", f"{s.R2:.12f}",
                        f"{s.phi1:.12f}", f"{s.phi2:.12f}", st.value])
    return buf.getvalue()


def format_events_csv(events) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eta", "type"])
    for eta, kind in events:
        w.writerow([f"{eta:.6f}", kind])
    return buf.getvalue()


def write_branches_csv(path, result: SweepResult) -> None:
    Path(path).write_text(format_branches_csv(result))


def write_events_csv(path, events) -> None:
    Path(path).write_text(format_events_csv(events))


def read_branches_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{"branch": int(r["branch"]), "eta": float(r["eta"]), "R1": float(r["R1"]),
                 "R2": float(r["R2"]), "phi1": float(r["phi1"]), "phi2": float(r["phi2"]),
                 "stability": r["stability"]} for r in csv.DictReader(fh)]


def read_events_csv(path) -> list[tuple[float, str]]:
    with open(path, newline="") as fh:
        return [(float(r["eta"]), r["type"]) for r in csv.DictReader(fh)]


def integrate(state, spec: SystemSpec, t_end: float, dt: float = 1e-3, kind=None) -> np.ndarray:
    """Plain RK4 trajectory of the mean-field equations (used as a test oracle only)."""
    p = _Params.of(spec, kind)
    x = _checked(state).astype(float)
    for _ in range(int(round(t_end / dt))):
        k1 = _rhs(x, p)
        k2 = _rhs(x + 0.5 * dt * k1, p)
        k3 = _rhs(x + 0.5 * dt * k2, p)
        k4 = _rhs(x + dt * k3, p)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x
