import numpy as np
import pytest

from sqvdp.fock import DensityMatrix, expectation, number
from sqvdp.liouvillian import SystemSpec, build_liouvillian
from sqvdp.spectrum import (NotStationaryError, WindowTooShortError, mode_operator, power_spectrum,
                            read_spectrum, regression_spectrum, spectrum_via_resolvent, sum_rule,
                            two_time_correlation, write_spectrum)
from sqvdp.steadystate import solve_steady_state

from .oracles import lorentzian_spectrum, thermal_occupation

GAIN, LOSS, DELTA, N = 0.3, 1.0, 0.7, 30


@pytest.fixture(scope="module")
def linear_mode():
    spec = SystemSpec.single(N, gamma1=GAIN, gamma2=0.0, kappa=LOSS, delta=DELTA)
    liou = build_liouvillian(spec)
    return liou, solve_steady_state(liou).rho


def test_correlation_is_exponential(linear_mode):
    liou, rho = linear_mode
    tau = np.arange(0, 5.0001, 0.01)
    g = two_time_correlation(liou, rho, 1, tau)
    nbar = thermal_occupation(GAIN, LOSS)
    ref = nbar * np.exp((1j * DELTA - 0.5 * (LOSS - GAIN)) * tau)
    assert np.max(np.abs(g - ref)) < 1e-9


def test_regression_matches_lorentzian(linear_mode):
    liou, rho = linear_mode
    res = regression_spectrum(liou, rho)
    ref = lorentzian_spectrum(res.omega_axis, thermal_occupation(GAIN, LOSS), LOSS - GAIN, DELTA)
    assert np.max(np.abs(res.values - ref)) < 1e-4 * ref.max()
    assert abs(res.omega_obs - DELTA) < 1e-9


def test_resolvent_matches_lorentzian(linear_mode):
    liou, rho = linear_mode
    omega = np.linspace(-2, 2, 9)
    res = spectrum_via_resolvent(liou, rho, 1, omega)
    ref = lorentzian_spectrum(omega, thermal_occupation(GAIN, LOSS), LOSS - GAIN, DELTA)
    assert np.allclose(res.values, ref, rtol=1e-9)


def test_sum_rule_on_wide_window(linear_mode):
    liou, rho = linear_mode
    res = regression_spectrum(liou, rho, omega_axis=np.linspace(-300, 300, 12001))
    n = expectation(rho, number(N)).real
    assert abs(sum_rule(res) - n) < 0.02 * n


def test_window_too_short(linear_mode):
    liou, rho = linear_mode
    with pytest.raises(WindowTooShortError):
        regression_spectrum(liou, rho, tau_max=2.0, max_doublings=0)


def test_window_doubling(linear_mode):
    liou, rho = linear_mode
    res = regression_spectrum(liou, rho, tau_max=10.0)
    assert res.info["doublings"] >= 1


def test_not_stationary(linear_mode):
    liou, _ = linear_mode
    wrong = np.zeros((N, N))
    wrong[1, 1] = 1
    with pytest.raises(NotStationaryError):
        regression_spectrum(liou, DensityMatrix.from_array(N, wrong))


def test_power_spectrum_of_known_correlation():
    tau = np.arange(0, 60, 0.01)
    g = 0.5 * np.exp((0.4j - 0.5) * tau)
    res = power_spectrum(g, tau, np.linspace(-2, 2, 401))
    assert abs(res.omega_obs - 0.4) < 1e-9
    assert np.allclose(res.values, lorentzian_spectrum(res.omega_axis, 0.5, 1.0, 0.4), atol=1e-4)


def test_uncoupled_vdp_peaks_at_detuning():
    spec = SystemSpec(delta=0.3, truncation=(6, 6))
    liou = build_liouvillian(spec)
    rho = solve_steady_state(liou).rho
    assert abs(regression_spectrum(liou, rho, mode=2).omega_obs - 0.3) < 1e-9


def test_mode_operator_errors():
    spec = SystemSpec.single(4)
    liou = build_liouvillian(spec)
    with pytest.raises(ValueError):
        mode_operator(liou, 2)
    with pytest.raises(ValueError):
        mode_operator(liou, "sym")


def test_file_round_trip(tmp_path, linear_mode):
    liou, rho = linear_mode
    res = regression_spectrum(liou, rho, omega_axis=np.linspace(-1, 1, 21))
    write_spectrum(tmp_path / "s.txt", res)
    back = read_spectrum(tmp_path / "s.txt")
    assert back.omega_obs == res.omega_obs
    assert np.allclose(back.values, res.values, rtol=1e-11)
