"""Operators on truncated single- and two-mode Fock spaces.

Mode ordering is fixed: oscillator 1 is always the left Kronecker factor.
Downstream code should get two-mode ladder operators from :func:`mode_ops`
instead of assembling tensors by hand.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import prod

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


class InvalidDimensionError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class FockDim:
    """Per-mode truncation sizes; mode ``k`` keeps levels ``0..dims[k]-1``."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise InvalidDimensionError("FockDim needs at least one mode")
        if any(d < 2 for d in dims):
            raise InvalidDimensionError(f"every truncation must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return prod(self.dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def __add__(self, other: "FockDim") -> "FockDim":
        return FockDim(self.dims + other.dims)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix tagged with the Fock dimensions it acts on."""

    dim: FockDim
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        n = self.dim.total
        if entries.shape != (n, n):
            raise DimensionMismatchError(
                f"entries shape {entries.shape} does not match Hilbert dimension {n}"
            )
        object.__setattr__(self, "entries", entries)

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatchError(f"{self.dim.dims} vs {other.dim.dims}")
        return None

    def __add__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return Operator(self.dim, self.entries + other.entries)

    def __sub__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return Operator(self.dim, self.entries - other.entries)

    def __neg__(self):
        return Operator(self.dim, -self.entries)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.dim, scalar * self.entries)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.dim, self.entries / scalar)

    def __matmul__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return Operator(self.dim, self.entries @ other.entries)

    @property
    def shape(self):
        return self.entries.shape

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return float(np.max(np.abs(self.entries - self.entries.conj().T))) <= tol

    def __repr__(self):
        return f"Operator(dims={self.dim.dims})"


def _as_fockdim(dim) -> FockDim:
    if isinstance(dim, FockDim):
        return dim
    if isinstance(dim, (int, np.integer)):
        return FockDim((int(dim),))
    return FockDim(tuple(dim))


def annihilation(n_max: int) -> Operator:
    """Single-mode lowering operator with ``a[m, m+1] = sqrt(m+1)``."""
    dim = _as_fockdim(n_max)
    if dim.n_modes != 1:
        raise InvalidDimensionError("annihilation() builds a single-mode operator")
    return Operator(dim, np.diag(np.sqrt(np.arange(1, dim.total)), k=1))


def creation(n_max: int) -> Operator:
    return dagger(annihilation(n_max))


def number(n_max: int) -> Operator:
    dim = _as_fockdim(n_max)
    return Operator(dim, np.diag(np.arange(dim.total, dtype=float)))


def identity(dim) -> Operator:
    dim = _as_fockdim(dim)
    return Operator(dim, np.eye(dim.total))


def zero(dim) -> Operator:
    dim = _as_fockdim(dim)
    return Operator(dim, np.zeros((dim.total, dim.total)))


def parity(dim) -> Operator:
    """(-1)^(total excitation number) on a single- or multi-mode space."""
    dim = _as_fockdim(dim)
    signs = [np.where(np.arange(d) % 2 == 0, 1.0, -1.0) for d in dim.dims]
    return Operator(dim, np.diag(reduce(np.kron, signs)))


def dagger(op: Operator) -> Operator:
    return Operator(op.dim, op.entries.conj().T)


def tensor(left: Operator, right: Operator) -> Operator:
    return Operator(left.dim + right.dim, np.kron(left.entries, right.entries))


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def mode_ops(dims) -> tuple[Operator, ...]:
    """Lowering operators for each mode of a multi-mode space, in mode order."""
    dim = _as_fockdim(dims)
    ops = []
    for k, n in enumerate(dim.dims):
        factors = [identity(d) for d in dim.dims]
        factors[k] = annihilation(n)
        ops.append(reduce(tensor, factors))
    return tuple(ops)


def basis_projector(dim, index) -> Operator:
    """``|n><n|`` for a Fock basis state; ``index`` is one level per mode."""
    dim = _as_fockdim(dim)
    index = (index,) if isinstance(index, (int, np.integer)) else tuple(index)
    flat = int(np.ravel_multi_index(index, dim.dims))
    m = np.zeros((dim.total, dim.total))
    m[flat, flat] = 1.0
    return Operator(dim, m)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated quantum state: Hermitian, unit trace, positive semidefinite."""

    op: Operator

    def __post_init__(self):
        ent = self.op.entries
        herm = float(np.max(np.abs(ent - ent.conj().T)))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian (max |rho - rho^dag| = {herm:.3e})")
        tr = np.trace(ent)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr:.12g} != 1")
        lam_min = float(np.linalg.eigvalsh(0.5 * (ent + ent.conj().T)).min())
        if lam_min < -POSITIVITY_TOL:
            raise InvalidStateError(f"negative eigenvalue {lam_min:.3e}")

    @classmethod
    def from_array(cls, dim, arr) -> "DensityMatrix":
        return cls(Operator(_as_fockdim(dim), arr))

    @classmethod
    def from_ket(cls, dim, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls.from_array(dim, np.outer(ket, ket.conj()))

    @property
    def dim(self) -> FockDim:
        return self.op.dim

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries


def expectation(state: DensityMatrix, obs: Operator) -> complex:
    """Tr[obs rho]."""
    if state.dim != obs.dim:
        raise DimensionMismatchError(f"state {state.dim.dims} vs observable {obs.dim.dims}")
    # Tr[A B] = sum_ij A_ij B_ji without forming the product
    return complex(np.sum(obs.entries * state.entries.T))


def coherent_ket(alpha: complex, n_max: int) -> np.ndarray:
    """Truncated coherent-state amplitudes, renormalised after truncation."""
    n = np.arange(n_max)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
    return amps / np.linalg.norm(amps)
