"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts, so a failing criterion also fails the test run.
"""
import time

import numpy as np
import pytest

from sqvdp import classical as C
from sqvdp import config, runner
from sqvdp.fock import (FockDim, Operator, annihilation, commutator, creation, dagger, expectation,
                        identity, mode_ops, number, parity, tensor)
from sqvdp.liouvillian import SystemSpec, build_liouvillian
from sqvdp.observables import local_maxima, partial_trace, point_reflection_deviation, rotational_asymmetry, wigner
from sqvdp.spectrum import power_spectrum, regression_spectrum, spectrum_via_resolvent, sum_rule
from sqvdp.steadystate import solve_steady_state

from .oracles import brute_force_liouvillian, random_spec

FIG2 = [f"fig2{c}-wigner" for c in "abcdefghi"]
ENTRAINMENT = ["fig3a-entrainment", "fig3b-entrainment", "fig8a-entrainment", "fig8b-entrainment"]
APPENDIX = ["fig4-bifurcation", "fig5-bifurcation", "fig6-bifurcation"]
WIDE_OMEGA = np.linspace(-300.0, 300.0, 12001)


def scenario(name):
    return config.load(config.resolve(name))


@pytest.fixture(scope="module")
def fig2_states():
    t = time.perf_counter()
    states = {}
    for name in FIG2:
        sc = scenario(name)
        liou = build_liouvillian(sc.system)
        states[name] = (sc, liou, solve_steady_state(liou))
    return states, time.perf_counter() - t


@pytest.fixture(scope="module")
def entrainment_runs():
    """(scenario, sweep value, liouvillian, rho, spectrum) for every entrainment point."""
    t = time.perf_counter()
    out = {}
    for name in ENTRAINMENT:
        sc = scenario(name)
        opts = sc.spectrum
        rows = []
        for value, spec in sc.points():
            liou = build_liouvillian(spec)
            rho = solve_steady_state(liou).rho
            res = regression_spectrum(liou, rho, opts.mode, opts.omega_axis(), opts.tau_max, opts.dtau)
            rows.append((value, liou, rho, res))
        out[name] = (sc, rows)
    return out, time.perf_counter() - t


def test_criterion_1_operator_algebra(record):
    t = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (2, 5, 20):
        a, ad = annihilation(n), creation(n)
        ccr = np.eye(n)
        ccr[-1, -1] = -(n - 1)
        worst = max(worst, np.max(np.abs(commutator(a, ad).entries - ccr)),
                    np.max(np.abs((ad @ a).entries - number(n).entries)),
                    np.max(np.abs(dagger(a).entries - ad.entries)))
        A = Operator(FockDim((n,)), rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        B = Operator(FockDim((n,)), rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        worst = max(worst, np.max(np.abs(dagger(dagger(A)).entries - A.entries)),
                    np.max(np.abs(dagger(A @ B).entries - (dagger(B) @ dagger(A)).entries)),
                    np.max(np.abs((commutator(A, B) + commutator(B, A)).entries)))
        if n <= 5:
            a1, a2 = mode_ops((n, n))
            worst = max(worst, np.max(np.abs(commutator(a1, dagger(a2)).entries)),
                        np.max(np.abs((a1 - tensor(a, identity(n))).entries)),
                        np.max(np.abs(dagger(tensor(A, B)).entries - tensor(dagger(A), dagger(B)).entries)))
            P = parity((n, n)).entries
            worst = max(worst, np.max(np.abs(P @ a1.entries + a1.entries @ P)))
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-12 and elapsed < 1.0
    record(1, ok, f"max identity error {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_liouvillian_oracle(record):
    t = time.perf_counter()
    worst = 0.0
    for kind in ("reactive", "dissipative"):
        for seed in range(5):
            spec = random_spec(np.random.default_rng(100 + seed), kind, n=3)
            L = build_liouvillian(spec).matrix.toarray()
            worst = max(worst, np.max(np.abs(L - brute_force_liouvillian(spec))))
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-12 and elapsed < 10.0
    record(2, ok, f"max entry difference {worst:.1e} over 10 specs, {elapsed:.2f}s")
    assert ok


def test_criterion_3_steady_state(record, fig2_states):
    states, elapsed = fig2_states
    failures = []
    for name, (sc, liou, ss) in states.items():
        rho = ss.rho.entries
        P = parity(ss.rho.dim).entries
        checks = {
            "trace": abs(np.trace(rho) - 1) <= 1e-8,
            "hermitian": np.max(np.abs(rho - rho.conj().T)) <= 1e-10,
            "positive": np.linalg.eigvalsh(rho).min() >= -1e-8,
            "parity": np.max(np.abs(P @ rho @ P - rho)) <= 1e-8,
        }
        if max(sc.system.eta) == 0:
            for m in (0, 1):
                r = partial_trace(ss.rho, m).entries
                checks[f"diag{m + 1}"] = np.max(np.abs(r - np.diag(np.diag(r)))) <= 1e-8
        alt = solve_steady_state(liou, method="inverse").rho.entries
        checks["uniqueness"] = np.linalg.norm(alt - rho) <= 1e-6
        failures += [f"{name}:{k}" for k, v in checks.items() if not v]
    ok = not failures and elapsed < 120.0
    record(3, ok, f"9 states at n_max=15, LU solves {elapsed:.1f}s" + (f", failed {failures}" if failures else ""))
    assert ok


def test_criterion_4_wigner_lobes(record, fig2_states):
    states, _ = fig2_states
    failures = []
    for name, (sc, _, ss) in states.items():
        for m in (0, 1):
            g = wigner(partial_trace(ss.rho, m))
            if max(sc.system.eta) == 0:
                if rotational_asymmetry(g) > 1e-3 * g.values.max():
                    failures.append(f"{name}/mode{m + 1}:asymmetric")
                continue
            peaks = local_maxima(g)
            h = g.dx
            if len(peaks) != 2:
                failures.append(f"{name}/mode{m + 1}:{len(peaks)} maxima")
            elif not (np.hypot(peaks[0][0] + peaks[1][0], peaks[0][1] + peaks[1][1]) <= h
                      and point_reflection_deviation(g) <= 1e-8 * g.values.max()):
                failures.append(f"{name}/mode{m + 1}:not reflected")
    ok = not failures
    record(4, ok, "eta=0 rotationally symmetric, finite eta two reflected lobes incl. V=5, Delta=5"
           if ok else f"failed {failures}")
    assert ok


def test_criterion_5_entrainment(record, entrainment_runs):
    runs, elapsed = entrainment_runs
    obs = {name: [res.omega_obs for *_, res in rows] for name, (_, rows) in runs.items()}

    def shrinking(w):
        return all(b <= a + 1e-12 for a, b in zip(w, w[1:])) and w[-1] < 0.1

    # signed threshold as stated; the peak can jump to a coupling-split normal
    # mode below zero, which this check counts as a failure
    reactive_v = all(w > 0.2 for w in obs["fig3b-entrainment"])
    ok = (shrinking(obs["fig3a-entrainment"]) and reactive_v and shrinking(obs["fig8a-entrainment"])
          and elapsed < 600.0)
    fmt = {k: ", ".join(f"{w:.2f}" for w in v) for k, v in obs.items()}
    record(5, ok, f"eta sweep [{fmt['fig3a-entrainment']}], V sweep [{fmt['fig3b-entrainment']}], "
           f"dissipative eta sweep [{fmt['fig8a-entrainment']}], dissipative V sweep "
           f"[{fmt['fig8b-entrainment']}], {elapsed:.0f}s")
    assert ok


def test_criterion_6_spectrum_cross_check(record, entrainment_runs):
    runs, _ = entrainment_runs
    worst_peak = worst_sum = 0.0
    for sc, rows in runs.values():
        for _, liou, rho, res in rows:
            peak = res.omega_obs
            ref = spectrum_via_resolvent(liou, rho, sc.spectrum.mode, [peak]).values[0]
            worst_peak = max(worst_peak, abs(res.peak_value() - ref) / abs(ref))
            g = res.info["correlation"]
            wide = power_spectrum(g, res.info["dtau"] * np.arange(len(g)), WIDE_OMEGA)
            a = mode_ops(rho.dim)[sc.spectrum.mode - 1]
            n = expectation(rho, dagger(a) @ a).real
            worst_sum = max(worst_sum, abs(sum_rule(wide) - n) / n)
    ok = worst_peak <= 0.01 and worst_sum <= 0.02
    record(6, ok, f"peak mismatch {worst_peak:.1e} rel, sum rule {worst_sum:.1e} rel on omega in [-300, 300]")
    assert ok


def _stable_points(sweep):
    pts = {}
    for br in sweep.branches:
        for eta, st, s in zip(br.parameter_axis, br.states, br.stability):
            if s is C.Stability.STABLE:
                pts.setdefault(round(eta, 9), []).append(st.as_array())
    return pts


def _has_twin_pair(X):
    X = np.array(X)
    return any(np.allclose(X[i, :2], X[j, :2], atol=1e-6) and C.state_distance(X[i], X[j]) > 0.1
               for i in range(len(X)) for j in range(i + 1, len(X)))


def _stable_to_end(sweep, eta_max):
    for br in sweep.branches:
        if br.parameter_axis[-1] >= eta_max - 1e-9 and all(s is C.Stability.STABLE for s in br.stability):
            return br.parameter_axis[0]
    return None


def test_criterion_7_bifurcation(record):
    sc = scenario("fig1-bifurcation")
    b = sc.bifurcation
    t = time.perf_counter()
    sweep = C.bifurcation_sweep(sc.system, (b.eta_min, b.eta_max), b.step)
    elapsed = time.perf_counter() - t
    folds = [e for e, k in sweep.events if k == "saddle-node"]
    fold = min(folds, key=lambda e: abs(e - 1.0)) if folds else np.nan
    stable = _stable_points(sweep)
    above = [eta for eta in stable if eta > fold]
    twins = bool(above) and all(_has_twin_pair(stable[eta]) for eta in above)
    ok = abs(fold - 1.0) <= 0.1 and twins and elapsed < 30.0
    details = [f"fig1 fold at {fold:.3f}, twin stable pair above it: {twins}, {elapsed:.1f}s"]

    t = time.perf_counter()
    for name in APPENDIX:
        sa = scenario(name)
        ba = sa.bifurcation
        sw = C.bifurcation_sweep(sa.system, (ba.eta_min, ba.eta_max), ba.step)
        born = _stable_to_end(sw, ba.eta_max)
        n_folds = sum(k == "saddle-node" for _, k in sw.events)
        ok &= born is not None and n_folds >= 1
        details.append(f"{name[:4]} stable branch from eta {born} to end, {n_folds} saddle-nodes")
    details.append(f"appendix sweeps {time.perf_counter() - t:.0f}s")
    record(7, ok, "; ".join(details))
    assert ok


def test_criterion_8_classical_quantum(record):
    n = 60
    spec = SystemSpec.single(n, gamma1=1.0, gamma2=0.05)
    occ = expectation(solve_steady_state(build_liouvillian(spec)).rho, number(n)).real
    target = 1.0 / (2 * 0.05)
    big_ok = abs(occ - target) <= 0.2 * target

    base = scenario("fig2i-wigner").system
    vals = []
    for m in (15, 20):
        s = base.with_(truncation=(m, m))
        rho = solve_steady_state(build_liouvillian(s)).rho
        a1 = mode_ops((m, m))[0]
        vals.append(expectation(rho, dagger(a1) @ a1).real)
    change = abs(vals[1] - vals[0])
    ok = big_ok and change < 1e-6
    record(8, ok, f"<n>={occ:.3f} vs {target:g}; <n1> change 15->20 levels {change:.1e}")
    assert ok


def test_criterion_9_determinism(record, tmp_path):
    sc = scenario("fig2a-wigner")
    first = runner.run_scenario(sc, out=tmp_path / "a").outputs
    second = runner.run_scenario(sc, out=tmp_path / "b").outputs
    sweep = scenario("fig3a-entrainment").with_overrides(truncation=6)
    seq = runner.run_sweep_parallel(sweep, workers=1, out=tmp_path / "seq").outputs
    par = runner.run_sweep_parallel(sweep, workers=2, out=tmp_path / "par").outputs
    ok = first == second and seq == par and len(seq) >= 4
    record(9, ok, f"fig2a rerun {len(first)} files identical: {first == second}; "
           f"fig3a (6 levels) sequential vs 2 workers identical: {seq == par}")
    assert ok
