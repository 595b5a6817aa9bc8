"""Independent reference implementations used only by the tests.

Nothing here imports the operator or superoperator builders of the package:
ladder operators are written out from their matrix elements and the master
equation is applied to each basis matrix ``|i><j|`` directly.
"""
import numpy as np

from sqvdp.liouvillian import SystemSpec


def ladder(n):
    a = np.zeros((n, n))
    for m in range(n - 1):
        a[m, m + 1] = np.sqrt(m + 1)
    return a


def two_mode_ladders(n1, n2):
    return np.kron(ladder(n1), np.eye(n2)), np.kron(np.eye(n1), ladder(n2))


def model_terms(spec: SystemSpec):
    """(H, [(rate, C)]) of the coupled squeezed vdP master equation, from scratch."""
    n1, n2 = spec.truncation.dims
    a1, a2 = two_mode_ladders(n1, n2)
    ph = np.exp(1j * spec.theta)
    H = np.zeros((n1 * n2, n1 * n2), complex)
    ops = []
    for i, a in enumerate((a1, a2)):
        ad = a.T
        H += spec.delta[i] * ad @ a
        H += 1j * spec.eta[i] * (a @ a / ph - ad @ ad * ph)
        ops += [(spec.gamma1[i], ad), (spec.gamma2[i], a @ a), (spec.kappa[i], a)]
    if spec.coupling_kind.value == "reactive":
        H += spec.coupling * (a1.T @ a2 + a1 @ a2.T)
    elif spec.coupling_kind.value == "dissipative":
        ops.append((spec.coupling, a1 - a2))
    return H, ops


def apply_master_equation(H, ops, rho):
    out = -1j * (H @ rho - rho @ H)
    for rate, c in ops:
        cd = c.conj().T
        out += rate * (c @ rho @ cd - 0.5 * cd @ c @ rho - 0.5 * rho @ cd @ c)
    return out


def brute_force_liouvillian(spec: SystemSpec) -> np.ndarray:
    H, ops = model_terms(spec)
    n = H.shape[0]
    L = np.zeros((n * n, n * n), complex)
    for j in range(n):
        for i in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            L[:, j * n + i] = apply_master_equation(H, ops, E).reshape(-1, order="F")
    return L


def random_spec(rng, kind, n=3) -> SystemSpec:
    return SystemSpec(
        gamma1=tuple(rng.uniform(0.2, 2.0, 2)),
        gamma2=tuple(rng.uniform(0.2, 4.0, 2)),
        delta=tuple(rng.uniform(-2.0, 2.0, 2)),
        eta=tuple(rng.uniform(0.0, 2.0, 2)),
        theta=float(rng.uniform(0, 2 * np.pi)),
        coupling=float(rng.uniform(0.1, 3.0)),
        coupling_kind=kind,
        truncation=(n, n),
    )


def thermal_occupation(gain, loss):
    """Linear mode with gain D[a^dag] and loss D[a]: nbar = gain / (loss - gain)."""
    return gain / (loss - gain)


def lorentzian_spectrum(omega, nbar, width, delta):
    """S(omega) of g(tau) = nbar exp((i delta - width/2) tau)."""
    return 2 * nbar * (width / 2) / ((width / 2) ** 2 + (omega - delta) ** 2)
