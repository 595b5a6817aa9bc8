import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqvdp.fock import DensityMatrix, coherent_ket
from sqvdp.observables import (GridError, WignerGrid, axis, local_maxima, partial_trace,
                               point_reflection_deviation, read_wigner_grid, rotational_asymmetry,
                               wigner, write_wigner_grid)

N = 30


def coherent(alpha, n=N):
    return DensityMatrix.from_ket(n, coherent_ket(alpha, n))


def test_vacuum_peak():
    g = wigner(coherent(0.0, 5), axis(3, 61), axis(3, 61))
    assert abs(g.at(0, 0) - 1 / np.pi) < 1e-14


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_coherent_state_is_displaced_gaussian(re, im):
    alpha = complex(re, im)
    x = axis(4, 41)
    g = wigner(coherent(alpha, 40), x, x)  # 30 levels leave ~1e-8 truncation error at |alpha|^2 = 4.5
    X, P = np.meshgrid(x, x)
    x0, p0 = np.sqrt(2) * re, np.sqrt(2) * im
    ref = np.exp(-((X - x0) ** 2) - (P - p0) ** 2) / np.pi
    assert np.max(np.abs(g.values - ref)) < 1e-8


def test_fock_one():
    rho = np.zeros((4, 4))
    rho[1, 1] = 1
    x = axis(3, 31)
    g = wigner(DensityMatrix.from_array(4, rho), x, x)
    X, P = np.meshgrid(x, x)
    r2 = X**2 + P**2
    assert np.allclose(g.values, (2 * r2 - 1) * np.exp(-r2) / np.pi, atol=1e-13)
    assert abs(g.at(0, 0) + 1 / np.pi) < 1e-13


def test_normalisation():
    rho = 0.5 * (coherent(1.0).entries + coherent(-1.0).entries)
    g = wigner(DensityMatrix.from_array(N, rho), axis(7, 281), axis(7, 281))
    assert abs(g.integral() - 1) < 1e-6


def test_partial_trace_of_product():
    r1 = coherent(0.5 + 0.2j, 4).entries
    r2 = np.diag([0.6, 0.3, 0.1])
    full = DensityMatrix.from_array((4, 3), np.kron(r1, r2))
    assert np.allclose(partial_trace(full, 0).entries, r1)
    assert np.allclose(partial_trace(full, 1).entries, r2)
    with pytest.raises(ValueError):
        partial_trace(full, 2)


def test_two_lobes_and_reflection():
    rho = 0.5 * (coherent(1.5).entries + coherent(-1.5).entries)
    g = wigner(DensityMatrix.from_array(N, rho))
    peaks = local_maxima(g)
    assert len(peaks) == 2
    (x1, p1, _), (x2, p2, _) = peaks
    assert np.isclose(x1, -x2) and np.isclose(p1, -p2)
    assert point_reflection_deviation(g) < 1e-12
    assert rotational_asymmetry(g) > 1e-2


def test_rotational_symmetry_of_diagonal_state():
    g = wigner(DensityMatrix.from_array(N, np.diag(np.r_[0.5, 0.3, 0.2, np.zeros(N - 3)])))
    assert rotational_asymmetry(g) <= 1e-3 * g.values.max()


def test_grid_round_trip(tmp_path):
    g = wigner(coherent(0.8j, 10), axis(2, 11), axis(2, 11))
    write_wigner_grid(tmp_path / "w.txt", g)
    back = read_wigner_grid(tmp_path / "w.txt")
    assert np.allclose(back.x_axis, g.x_axis) and np.allclose(back.p_axis, g.p_axis)
    assert np.allclose(back.values, g.values, rtol=1e-11, atol=1e-300)


def test_grid_shape_checked():
    with pytest.raises(GridError):
        WignerGrid(np.zeros(3), np.zeros(4), np.zeros((3, 3)))


def test_rotation_needs_centred_square_grid():
    g = wigner(coherent(0.0, 3), np.linspace(0, 1, 5), np.linspace(0, 1, 5))
    with pytest.raises(GridError):
        rotational_asymmetry(g)


def test_wigner_needs_single_mode():
    with pytest.raises(ValueError):
        wigner(DensityMatrix.from_array((2, 2), np.eye(4) / 4))
