"""Classical fixed-point sweeps for the bundled bifurcation scenarios.

Usage: python scripts/bifurcation.py [scenario ...] [--step H]
Prints detected events and the stable branches that survive to the end of the range.
"""
import argparse
import time

from sqvdp import classical as C
from sqvdp import config

DEFAULT = ["fig1-bifurcation", "fig4-bifurcation", "fig5-bifurcation", "fig6-bifurcation"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("scenarios", nargs="*", default=DEFAULT)
    ap.add_argument("--step", type=float)
    args = ap.parse_args()
    for name in args.scenarios:
        sc = config.load(config.resolve(name))
        b = sc.bifurcation
        t = time.perf_counter()
        res = C.bifurcation_sweep(sc.system, (b.eta_min, b.eta_max), args.step or b.step)
        print(f"{name}: {len(res.branches)} branches, {time.perf_counter() - t:.1f}s")
        for eta, kind in res.events:
            print(f"  {kind} at eta={eta:.3f}")
        for br in res.branches:
            if br.parameter_axis[-1] >= b.eta_max - 1e-9 and br.stability[-1] is C.Stability.STABLE:
                s = br.states[-1]
                print(f"  stable from eta={br.parameter_axis[0]:.2f}: R=({s.R1:.4f}, {s.R2:.4f}) "
                      f"phi=({s.phi1:.4f}, {s.phi2:.4f})")


if __name__ == "__main__":
    main()
