"""Reduced states, Wigner functions and simple phase-space diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import eval_genlaguerre, gammaln

from .fock import DensityMatrix, FockDim, Operator

DEFAULT_EXTENT = 5.0
DEFAULT_POINTS = 201
ROTATION_TEST_ANGLES = (np.pi / 6, np.pi / 4, np.pi / 2)
MAXIMA_FLOOR = 1e-3


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """W(x, p) sampled on a uniform grid; ``values[i, j]`` is at ``(x_axis[j], p_axis[i])``.

    Quadratures follow ``alpha = (x + i p) / sqrt(2)`` and the grid integrates
    to one, so the vacuum peaks at ``1/pi``.
    """

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.p_axis), len(self.x_axis)):
            raise GridError(
                f"values shape {self.values.shape} != ({len(self.p_axis)}, {len(self.x_axis)})"
            )

    @property
    def dx(self) -> float:
        return float(self.x_axis[1] - self.x_axis[0])

    @property
    def dp(self) -> float:
        return float(self.p_axis[1] - self.p_axis[0])

    def integral(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def at(self, x: float, p: float) -> float:
        j = int(np.argmin(np.abs(self.x_axis - x)))
        i = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[i, j])


def axis(extent: float = DEFAULT_EXTENT, points: int = DEFAULT_POINTS) -> np.ndarray:
    return np.linspace(-extent, extent, points)


def partial_trace(state: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of mode ``keep`` (0-based) of a two-mode state."""
    dims = state.dim.dims
    if len(dims) != 2:
        raise ValueError(f"partial_trace expects a two-mode state, got dims {dims}")
    if keep not in (0, 1):
        raise ValueError(f"mode index must be 0 or 1, got {keep}")
    n1, n2 = dims
    rho = state.entries.reshape(n1, n2, n1, n2)
    red = np.einsum("ijkj->ik", rho) if keep == 0 else np.einsum("ijil->jl", rho)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(Operator(FockDim((dims[keep],)), red))


def wigner(state: DensityMatrix, x_axis=None, p_axis=None) -> WignerGrid:
    """Wigner function of a single-mode state from the Laguerre expansion of ``|m><n|``.

    For ``n >= m`` the displaced-parity matrix element is
    ``(-1)^m sqrt(m!/n!) (2 alpha)^(n-m) exp(-2|alpha|^2) L_m^(n-m)(4|alpha|^2)``.
    """
    if state.dim.n_modes != 1:
        raise ValueError("wigner() needs a single-mode state; reduce it first")
    x_axis = axis() if x_axis is None else np.asarray(x_axis, dtype=float)
    p_axis = axis() if p_axis is None else np.asarray(p_axis, dtype=float)
    rho = state.entries
    M = rho.shape[0]

    X, P = np.meshgrid(x_axis, p_axis)
    alpha2 = (X + 1j * P) * np.sqrt(2.0)  # 2 alpha
    B = np.abs(alpha2) ** 2  # 4 |alpha|^2
    acc = np.zeros_like(B)
    for m in range(M):
        sign = -1.0 if m % 2 else 1.0
        if rho[m, m] != 0:
            acc += sign * rho[m, m].real * eval_genlaguerre(m, 0, B)
    for k in range(1, M):
        power = alpha2**k
        for m in range(M - k):
            c = rho[m, m + k]
            if c == 0:
                continue
            sign = -1.0 if m % 2 else 1.0
            coef = sign * np.exp(0.5 * (gammaln(m + 1) - gammaln(m + k + 1)))
            acc += 2.0 * coef * np.real(c * power) * eval_genlaguerre(m, k, B)
    values = acc * np.exp(-0.5 * B) / np.pi
    return WignerGrid(x_axis, p_axis, values)


def _check_centered(grid: WignerGrid):
    x, p = grid.x_axis, grid.p_axis
    if len(x) != len(p) or not np.allclose(x, p) or not np.allclose(x, -x[::-1]):
        raise GridError("rotation test needs a square grid centred on the origin")


def rotational_asymmetry(grid: WignerGrid, angles=ROTATION_TEST_ANGLES) -> float:
    """Largest change of W under rotation about the origin, over ``angles``.

    Rotated coordinates are evaluated with a bicubic spline through the grid;
    only points whose rotation stays inside the sampled disc are compared.
    """
    _check_centered(grid)
    spline = RectBivariateSpline(grid.p_axis, grid.x_axis, grid.values, kx=3, ky=3)
    X, P = np.meshgrid(grid.x_axis, grid.p_axis)
    inside = X**2 + P**2 <= grid.x_axis[-1] ** 2
    x0, p0 = X[inside], P[inside]
    w0 = grid.values[inside]
    worst = 0.0
    for theta in angles:
        c, s = np.cos(theta), np.sin(theta)
        xr, pr = c * x0 - s * p0, s * x0 + c * p0
        wr = spline(pr, xr, grid=False)
        worst = max(worst, float(np.max(np.abs(wr - w0))))
    return worst


def local_maxima(grid: WignerGrid, floor: float = MAXIMA_FLOOR) -> list[tuple[float, float, float]]:
    """Strict interior local maxima (8-neighbourhood) with ``W >= floor * max W``.

    The floor discards round-off ripples in the far tails.
    """
    W = grid.values
    core = W[1:-1, 1:-1]
    mask = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            mask &= core > W[1 + di : W.shape[0] - 1 + di, 1 + dj : W.shape[1] - 1 + dj]
    mask &= core >= floor * W.max()
    ii, jj = np.nonzero(mask)
    peaks = [(float(grid.x_axis[j + 1]), float(grid.p_axis[i + 1]), float(core[i, j]))
             for i, j in zip(ii, jj)]
    return sorted(peaks, key=lambda t: -t[2])


def point_reflection_deviation(grid: WignerGrid) -> float:
    """max |W(-x, -p) - W(x, p)| on a centred grid."""
    _check_centered(grid)
    return float(np.max(np.abs(grid.values[::-1, ::-1] - grid.values)))


def format_wigner_grid(grid: WignerGrid) -> str:
    x, p = grid.x_axis, grid.p_axis
    lines = [
        f"# x: {float(x[0])!r} {float(x[-1])!r} {len(x)}",
        f"# p: {float(p[0])!r} {float(p[-1])!r} {len(p)}",
    ]
    lines += [" ".join(f"{v:.12e}" for v in row) for row in grid.values]
    return "\n".join(lines) + "\n"


def write_wigner_grid(path, grid: WignerGrid) -> None:
    Path(path).write_text(format_wigner_grid(grid))


def read_wigner_grid(path) -> WignerGrid:
    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, rest = line[1:].split(":", 1)
            lo, hi, count = rest.split()
            header[key.strip()] = np.linspace(float(lo), float(hi), int(count))
        elif line.strip():
            rows.append([float(v) for v in line.split()])
    if "x" not in header or "p" not in header:
        raise GridError(f"{path}: missing '# x:' or '# p:' header")
    return WignerGrid(header["x"], header["p"], np.array(rows))
