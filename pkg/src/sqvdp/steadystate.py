"""Steady states of a Liouvillian.

The primary path replaces the row of ``L`` belonging to the ``(0, 0)`` element
with the trace functional and solves the bordered system by sparse LU. Shifted
inverse iteration is kept as an independent second route and as a fallback.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import DensityMatrix, InvalidStateError, Operator
from .liouvillian import Liouvillian, devec, element_excitations, parity_sector

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
POSITIVITY_TOL = 1e-8
LU_MAX_SIZE = 12_000
GMRES_RTOL = 1e-13
GMRES_RESTART = 200
GMRES_MAXITER = 50


class SteadyStateError(RuntimeError):
    pass


class DegenerateSteadyStateError(SteadyStateError):
    pass


class SolverFailureError(SteadyStateError):
    def __init__(self, msg, residual=float("nan")):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    residual_tol: float = RESIDUAL_TOL
    positivity_tol: float = POSITIVITY_TOL
    # None picks -1e-3 for factorised solves, -0.5 for GMRES (the shifted
    # system must stay well conditioned; Liouvillian gaps here are >= 0.5)
    inverse_shift: float | None = None
    inverse_maxiter: int = 200
    inverse_tol: float = 1e-12
    fallback: bool = True
    direct: bool | None = None  # None: SuperLU up to LU_MAX_SIZE unknowns, GMRES above
    gmres_rtol: float = GMRES_RTOL


@dataclass(frozen=True, eq=False)
class SteadyStateResult:
    rho: DensityMatrix
    residual: float
    solver_info: dict = field(default_factory=dict)


def _trace_row(n: int) -> sp.csr_matrix:
    idx = np.arange(n) * (n + 1)
    return sp.csr_matrix((np.ones(n), (np.zeros(n, dtype=int), idx)), shape=(1, n * n))


def bordered_matrix(L: sp.spmatrix, n: int) -> sp.csc_matrix:
    """``L`` with row 0 (the ``(0,0)`` element under column stacking) replaced by the trace."""
    L = sp.csr_matrix(L)
    return sp.vstack([_trace_row(n), L[1:]], format="csc")


def relative_residual(L: sp.spmatrix, v: np.ndarray) -> float:
    """||L v||_2 / ||L||_F."""
    norm = spla.norm(L)
    return float(np.linalg.norm(L @ v) / (norm if norm else 1.0))


def block_jacobi(A: sp.csr_matrix, keys: np.ndarray) -> sp.csr_matrix:
    """Explicit inverse of the block diagonal of ``A``; blocks are runs of equal ``keys``."""
    bounds = np.flatnonzero(np.diff(keys)) + 1
    starts, ends = np.r_[0, bounds], np.r_[bounds, len(keys)]
    rows, cols, vals = [], [], []
    for a, b in zip(starts, ends):
        blk = A[a:b, a:b].toarray()
        try:
            inv = np.linalg.inv(blk)
        except np.linalg.LinAlgError:
            inv = np.linalg.pinv(blk)
        r, c = np.meshgrid(np.arange(a, b), np.arange(a, b), indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(inv.ravel())
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=A.shape
    )


class SectorSystem:
    """Sparse square system restricted to one parity sector of a Liouvillian.

    Elements are ordered by their (bra, ket) excitation numbers so that
    coherent dynamics and the no-jump parts of the dissipators form dense
    diagonal blocks. Small systems are factorised with SuperLU; large ones are
    solved with GMRES preconditioned by the exact inverse of those blocks.
    """

    def __init__(self, liou: Liouvillian, odd: bool = False, shift: complex = 0.0,
                 direct: bool | None = None, rtol: float = GMRES_RTOL):
        dim = liou.dim
        nb, nk = element_excitations(dim)
        keys = nb * (2 * max(dim.dims) * dim.n_modes) + nk
        sector = parity_sector(dim, odd=odd)
        self.order = sector[np.argsort(keys[sector], kind="stable")]
        self.keys = keys[self.order]
        self.full_size = dim.total**2
        A = liou.matrix[self.order][:, self.order].tocsr()
        if shift:
            A = (A - shift * sp.identity(A.shape[0], format="csr")).tocsr()
        self.A = A
        self.direct = A.shape[0] <= LU_MAX_SIZE if direct is None else direct
        self.rtol = rtol
        self._lu = None
        self._precond = None

    @property
    def size(self) -> int:
        return self.A.shape[0]

    def position(self, full_index: int) -> int:
        return int(np.flatnonzero(self.order == full_index)[0])

    def replace_row(self, pos: int, row: np.ndarray):
        A = self.A
        self.A = sp.vstack([A[:pos], sp.csr_matrix(row.reshape(1, -1)), A[pos + 1:]], format="csr")
        self._lu = self._precond = None

    def embed(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.full_size, dtype=complex)
        out[self.order] = x
        return out

    def restrict(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[self.order]

    def solve(self, b: np.ndarray, x0=None) -> tuple[np.ndarray, dict]:
        if self.direct:
            if self._lu is None:
                try:
                    self._lu = spla.splu(self.A.tocsc(), permc_spec="MMD_AT_PLUS_A")
                except RuntimeError as exc:
                    raise DegenerateSteadyStateError(f"system is singular: {exc}") from exc
            x = self._lu.solve(b)
            info = {"solver": "splu", "nnz_factors": int(self._lu.L.nnz + self._lu.U.nnz)}
        else:
            if self._precond is None:
                self._precond = block_jacobi(self.A, self.keys)
            P = self._precond
            M = spla.LinearOperator(self.A.shape, matvec=lambda v: P @ v, dtype=complex)
            count = [0]

            def cb(_):
                count[0] += 1

            x, code = spla.gmres(self.A, b, x0=x0, M=M, rtol=self.rtol, atol=0.0,
                                 restart=GMRES_RESTART, maxiter=GMRES_MAXITER,
                                 callback=cb, callback_type="pr_norm")
            if code != 0:
                res = float(np.linalg.norm(self.A @ x - b) / max(np.linalg.norm(b), 1e-300))
                raise SolverFailureError(f"GMRES did not converge (code {code})", res)
            info = {"solver": "gmres-block-jacobi", "iterations": count[0]}
        if not np.all(np.isfinite(x)):
            raise DegenerateSteadyStateError("linear solve produced non-finite values")
        return x, info


def check_parity_closed(liou: Liouvillian) -> bool:
    """True when the Liouvillian never couples even and odd elements."""
    nb, nk = element_excitations(liou.dim)
    par = (nb + nk) % 2
    coo = liou.matrix.tocoo()
    return not np.any((par[coo.row] != par[coo.col]) & (coo.data != 0))


def _finalise(liou: Liouvillian, v: np.ndarray, opts: SolverOptions, info: dict) -> SteadyStateResult:
    n = liou.hilbert_dim
    rho = devec(v, n)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-300:
        raise SolverFailureError("steady-state candidate has zero trace")
    rho = rho / tr
    residual = relative_residual(liou.matrix, rho.reshape(-1, order="F"))
    info = dict(info, residual=residual)
    if residual > opts.residual_tol:
        raise SolverFailureError("steady-state residual above tolerance", residual)
    lam_min = float(np.linalg.eigvalsh(rho).min())
    info["min_eigenvalue"] = lam_min
    if lam_min < -opts.positivity_tol:
        raise SolverFailureError(f"steady state has negative eigenvalue {lam_min:.3e}", residual)
    try:
        state = DensityMatrix(Operator(liou.dim, rho))
    except InvalidStateError as exc:
        raise SolverFailureError(str(exc), residual) from exc
    return SteadyStateResult(state, residual, info)


def _bordered(liou: Liouvillian, opts: SolverOptions) -> tuple[np.ndarray, dict]:
    n = liou.hilbert_dim
    system = SectorSystem(liou, direct=opts.direct, rtol=opts.gmres_rtol)
    p0 = system.position(0)
    diag_full = np.zeros(n * n)
    diag_full[np.arange(n) * (n + 1)] = 1.0
    system.replace_row(p0, system.restrict(diag_full))
    b = np.zeros(system.size, dtype=complex)
    b[p0] = 1.0
    x, info = system.solve(b)
    return system.embed(x), dict(info, method="bordered", sector_size=system.size)


def _inverse_iteration(liou: Liouvillian, opts: SolverOptions) -> tuple[np.ndarray, dict]:
    n = liou.hilbert_dim
    direct = opts.direct
    if direct is None:
        direct = len(parity_sector(liou.dim)) <= LU_MAX_SIZE
    shift = opts.inverse_shift
    if shift is None:
        shift = -1e-3 if direct else -0.5
    system = SectorSystem(liou, shift=shift, direct=direct, rtol=opts.gmres_rtol)
    # maximally mixed start: overlaps every physical steady state
    v = system.restrict(np.eye(n, dtype=complex).reshape(-1, order="F"))
    v /= np.linalg.norm(v)
    diag = system.restrict(np.eye(n).reshape(-1, order="F")).astype(bool)
    it, delta = 0, np.inf
    for it in range(1, opts.inverse_maxiter + 1):
        # near convergence w ~ v / (-shift); warm-starting GMRES there leaves only the correction
        w, _ = system.solve(v, x0=None if system.direct else v / (-shift))
        w /= np.linalg.norm(w)
        # fix the global phase so successive iterates are comparable
        tr = w[diag].sum()
        if abs(tr) > 0:
            w *= abs(tr) / tr
        delta = np.linalg.norm(w - v)
        v = w
        if delta < opts.inverse_tol:
            break
    info = {"method": "inverse-iteration", "iterations": it, "shift": shift,
            "last_update": float(delta), "sector_size": system.size}
    return system.embed(v), info


def solve_steady_state(liou: Liouvillian, method: str = "lu", options: SolverOptions | None = None) -> SteadyStateResult:
    """Unique steady state ``rho`` with ``L vec(rho) = 0`` and unit trace.

    ``method`` is ``"lu"`` (bordered system with the trace constraint, falling
    back to inverse iteration if the residual check fails) or ``"inverse"``.
    The bordered system is factorised directly when small and solved by
    preconditioned GMRES otherwise; see :class:`SectorSystem`.
    """
    opts = options or SolverOptions()
    if method == "inverse":
        if not check_parity_closed(liou):
            raise SteadyStateError("Liouvillian mixes parity sectors; not a model generator")
        v, info = _inverse_iteration(liou, opts)
        return _finalise(liou, v, opts, info)
    if method != "lu":
        raise ValueError(f"unknown steady-state method {method!r}")
    if not check_parity_closed(liou):
        raise SteadyStateError("Liouvillian mixes parity sectors; not a model generator")
    v, info = _bordered(liou, opts)
    try:
        return _finalise(liou, v, opts, info)
    except SolverFailureError as first:
        if not opts.fallback:
            raise
        log.warning("bordered LU failed (%s); trying inverse iteration", first)
        v, info2 = _inverse_iteration(liou, opts)
        info2["fallback_from"] = str(first)
        return _finalise(liou, v, opts, info2)
