"""How the spectral sum rule converges with the width of the frequency window.

The spectrum has Lorentzian tails, so a window of a few linewidths misses a
noticeable fraction of the occupation.
"""
import numpy as np

from sqvdp.fock import dagger, expectation, mode_ops
from sqvdp.liouvillian import SystemSpec, build_liouvillian
from sqvdp.spectrum import power_spectrum, regression_spectrum, sum_rule
from sqvdp.steadystate import solve_steady_state


def main(spec=SystemSpec(gamma2=3.0, delta=0.3, truncation=(10, 10))):
    liou = build_liouvillian(spec)
    rho = solve_steady_state(liou).rho
    a1 = mode_ops(rho.dim)[0]
    n = expectation(rho, dagger(a1) @ a1).real
    res = regression_spectrum(liou, rho)
    g = res.info["correlation"]
    tau = res.info["dtau"] * np.arange(len(g))
    print(f"<a1^dag a1> = {n:.6f}")
    for half in (5, 20, 50, 100, 300):
        w = np.linspace(-half, half, 40 * half + 1)
        s = sum_rule(power_spectrum(g, tau, w))
        print(f"window +-{half:>3}: {s:.6f} ({(s - n) / n:+.2%})")


if __name__ == "__main__":
    main()
