"""Steady-state and Wigner diagnostics for the bundled Wigner scenarios.

Usage: python scripts/wigner_survey.py [fig2|fig7]
"""
import sys
import time

import numpy as np

from sqvdp import config
from sqvdp.fock import parity
from sqvdp.liouvillian import build_liouvillian
from sqvdp.observables import local_maxima, partial_trace, point_reflection_deviation, rotational_asymmetry, wigner
from sqvdp.steadystate import solve_steady_state


def survey(prefix="fig2"):
    for c in "abcdefghi":
        sc = config.load(config.resolve(f"{prefix}{c}-wigner"))
        t = time.perf_counter()
        rho = solve_steady_state(build_liouvillian(sc.system)).rho
        P = parity(rho.dim).entries
        par = np.max(np.abs(P @ rho.entries @ P - rho.entries))
        line = [f"{sc.name:14s} eta={sc.system.eta[0]:<4g} parity={par:.1e}"]
        for m in (0, 1):
            g = wigner(partial_trace(rho, m))
            peaks = local_maxima(g)
            line.append(f"mode{m + 1}: asym/max={rotational_asymmetry(g) / g.values.max():.1e} "
                        f"maxima={len(peaks)} refl={point_reflection_deviation(g):.1e}")
        print(" | ".join(line), f"({time.perf_counter() - t:.1f}s)", flush=True)


if __name__ == "__main__":
    survey(sys.argv[1] if len(sys.argv) > 1 else "fig2")
