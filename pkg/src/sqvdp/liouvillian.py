"""Hamiltonians and Lindblad superoperators for the squeezed coupled vdP model.

Vectorisation is column stacking throughout: ``vec(A @ X @ B) = kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .fock import FockDim, Operator, dagger, mode_ops, zero


class CouplingKind(str, Enum):
    REACTIVE = "reactive"
    DISSIPATIVE = "dissipative"
    NONE = "none"


class SpecError(ValueError):
    pass


def _pair(value) -> tuple[float, float]:
    if np.isscalar(value):
        return (float(value), float(value))
    out = tuple(float(v) for v in value)
    if len(out) != 2:
        raise SpecError(f"expected a scalar or a pair, got {value!r}")
    return out


@dataclass(frozen=True)
class SystemSpec:
    """Parameters of one or two vdP oscillators, in units of the first gain rate.

    Scalars passed for the per-oscillator fields are broadcast to both
    oscillators. ``kappa`` is an optional plain linear loss ``D[a_i]``; it is
    not part of the vdP model and exists for reference checks (pure decay,
    damped linear mode).
    """

    gamma1: tuple[float, float] = (1.0, 1.0)
    gamma2: tuple[float, float] = (3.0, 3.0)
    delta: tuple[float, float] = (0.0, 0.0)
    eta: tuple[float, float] = (0.0, 0.0)
    theta: float = 0.0
    coupling: float = 0.0
    coupling_kind: CouplingKind = CouplingKind.REACTIVE
    truncation: FockDim = field(default_factory=lambda: FockDim((15, 15)))
    kappa: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "delta", "eta", "kappa"):
            object.__setattr__(self, name, _pair(getattr(self, name)))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "coupling_kind", CouplingKind(self.coupling_kind))
        trunc = self.truncation
        if not isinstance(trunc, FockDim):
            trunc = FockDim((int(trunc),) * 2 if np.isscalar(trunc) else tuple(trunc))
            object.__setattr__(self, "truncation", trunc)
        if trunc.n_modes not in (1, 2):
            raise SpecError("only one or two oscillators are supported")

        n = trunc.n_modes
        for name in ("gamma1", "gamma2", "kappa", "eta"):
            vals = getattr(self, name)[:n]
            if any(v < 0 for v in vals):
                raise SpecError(f"{name} must be non-negative, got {vals}")
        if self.coupling < 0:
            raise SpecError("coupling must be non-negative")
        for i in range(n):
            if self.gamma2[i] <= 0 and self.kappa[i] <= 0:
                raise SpecError(
                    f"oscillator {i + 1} has no nonlinear damping (gamma2 > 0 required)"
                )
        if self.coupling_kind is CouplingKind.NONE and self.coupling != 0:
            raise SpecError("coupling_kind 'none' requires coupling = 0")
        if n == 1 and self.coupling != 0:
            raise SpecError("a single oscillator cannot be coupled")

    @property
    def n_modes(self) -> int:
        return self.truncation.n_modes

    def with_(self, **changes) -> "SystemSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coupling_kind"] = self.coupling_kind.value
        d["truncation"] = list(self.truncation.dims)
        for name in ("gamma1", "gamma2", "delta", "eta", "kappa"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SystemSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown system field(s): {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def single(cls, n_max: int = 30, **kw) -> "SystemSpec":
        """One uncoupled oscillator (the mode-2 entries are ignored)."""
        kw.setdefault("coupling_kind", CouplingKind.NONE)
        return cls(truncation=FockDim((n_max,)), **kw)


def _squeezing_and_detuning(spec: SystemSpec, modes) -> Operator:
    h = zero(spec.truncation)
    phase = np.exp(1j * spec.theta)
    for i, a in enumerate(modes):
        ad = dagger(a)
        h = h + spec.delta[i] * (ad @ a)
        if spec.eta[i]:
            h = h + 1j * spec.eta[i] * (np.conj(phase) * (a @ a) - phase * (ad @ ad))
    return h


def hamiltonian_reactive(spec: SystemSpec) -> Operator:
    """Detuning, exchange coupling V(a1^dag a2 + a1 a2^dag) and squeezing terms."""
    if spec.coupling_kind is not CouplingKind.REACTIVE:
        raise SpecError(f"reactive Hamiltonian requested for {spec.coupling_kind.value} spec")
    modes = mode_ops(spec.truncation)
    h = _squeezing_and_detuning(spec, modes)
    if len(modes) == 2 and spec.coupling:
        a1, a2 = modes
        h = h + spec.coupling * (dagger(a1) @ a2 + a1 @ dagger(a2))
    return h


def hamiltonian_dissipative(spec: SystemSpec) -> Operator:
    """Detuning and squeezing only; the coupling lives in the dissipator."""
    if spec.coupling_kind is not CouplingKind.DISSIPATIVE:
        raise SpecError(f"dissipative Hamiltonian requested for {spec.coupling_kind.value} spec")
    return _squeezing_and_detuning(spec, mode_ops(spec.truncation))


def hamiltonian(spec: SystemSpec) -> Operator:
    if spec.coupling_kind is CouplingKind.DISSIPATIVE:
        return hamiltonian_dissipative(spec)
    if spec.coupling_kind is CouplingKind.NONE:
        return _squeezing_and_detuning(spec, mode_ops(spec.truncation))
    return hamiltonian_reactive(spec)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def devec(v: np.ndarray, n: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    return v.reshape((n, n), order="F")


def _sparse(op) -> sp.csr_matrix:
    m = op.entries if isinstance(op, Operator) else op
    return sp.csr_matrix(m)


def commutator_superop(h: Operator) -> sp.csr_matrix:
    """Superoperator of ``-i[H, rho]``."""
    hs = _sparse(h)
    eye = sp.identity(h.dim.total, dtype=complex, format="csr")
    return (-1j * (sp.kron(eye, hs) - sp.kron(hs.T, eye))).tocsr()


def dissipator_superop(collapse: Operator) -> sp.csr_matrix:
    """Superoperator of ``D[O] rho = O rho O^dag - {O^dag O, rho}/2``."""
    o = _sparse(collapse)
    if o.shape[0] != o.shape[1]:
        raise ValueError("collapse operator must be square")
    odo = (o.conj().T @ o).tocsr()
    eye = sp.identity(o.shape[0], dtype=complex, format="csr")
    out = sp.kron(o.conj(), o) - 0.5 * sp.kron(eye, odo) - 0.5 * sp.kron(odo.T, eye)
    return out.tocsr()


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Sparse generator acting on column-stacked density matrices."""

    spec: SystemSpec | None
    dim: FockDim
    matrix: sp.csr_matrix

    @property
    def hilbert_dim(self) -> int:
        return self.dim.total

    def apply(self, rho: np.ndarray) -> np.ndarray:
        n = self.hilbert_dim
        return devec(self.matrix @ vec(rho), n)

    @classmethod
    def from_terms(cls, hamiltonian: Operator, collapses=(), spec=None) -> "Liouvillian":
        """Generic ``-i[H, .] + sum_k D[C_k]``; rates go into the collapse operators."""
        mat = commutator_superop(hamiltonian)
        for c in collapses:
            mat = mat + dissipator_superop(c)
        mat = sp.csr_matrix(mat)
        mat.eliminate_zeros()
        return cls(spec, hamiltonian.dim, mat)


def collapse_operators(spec: SystemSpec) -> list[tuple[float, Operator]]:
    """(rate, operator) pairs for every dissipative channel of ``spec``."""
    modes = mode_ops(spec.truncation)
    out = []
    for i, a in enumerate(modes):
        out.append((spec.gamma1[i], dagger(a)))
        out.append((spec.gamma2[i], a @ a))
        out.append((spec.kappa[i], a))
    if spec.coupling_kind is CouplingKind.DISSIPATIVE and len(modes) == 2:
        out.append((spec.coupling, modes[0] - modes[1]))
    return [(r, c) for r, c in out if r != 0]


def build_liouvillian(spec: SystemSpec) -> Liouvillian:
    h = hamiltonian(spec)
    mat = commutator_superop(h)
    for rate, c in collapse_operators(spec):
        mat = mat + rate * dissipator_superop(c)
    mat = sp.csr_matrix(mat)
    mat.eliminate_zeros()
    return Liouvillian(spec, spec.truncation, mat)


def pure_decay(n_max: int, kappa: float = 1.0, delta: float = 0.0) -> Liouvillian:
    """Damped harmonic mode ``-i[delta n, .] + kappa D[a]``; its steady state is vacuum."""
    (a,) = mode_ops(n_max)
    return Liouvillian.from_terms(delta * (dagger(a) @ a), [np.sqrt(kappa) * a])


def identity_superop(dim: FockDim) -> sp.csr_matrix:
    return sp.identity(dim.total**2, dtype=complex, format="csr")



def excitation_numbers(dim: FockDim) -> np.ndarray:
    """Total excitation number of every Fock basis state, in flattened order."""
    grids = np.meshgrid(*[np.arange(d) for d in dim.dims], indexing="ij")
    return np.sum(grids, axis=0).ravel()


def element_excitations(dim: FockDim) -> tuple[np.ndarray, np.ndarray]:
    """(N_bra, N_ket) of every column-stacked element ``|n><m|``."""
    nk = excitation_numbers(dim)
    n = dim.total
    return np.tile(nk, n), np.repeat(nk, n)


def parity_sector(dim: FockDim, odd: bool = False) -> np.ndarray:
    """Column-stacked indices of elements ``|n><m|`` with ``N(n) + N(m)`` even (or odd).

    Every term of the model is quadratic in ladder operators, so the
    Liouvillian never mixes the two sectors; steady states are even and
    ``a rho`` is odd.
    """
    nb, nk = element_excitations(dim)
    return np.flatnonzero((nb + nk) % 2 == int(odd))
