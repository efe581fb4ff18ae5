"""
Gate fidelity with spontaneous decay and dephasing
==================================================

Average state fidelity over the real-amplitude inputs cos(z)|0> + sin(z)|1>
for the NOT and Hadamard gates, NV-like rates, and k = 1, 100, 1000.
"""
import time

import numpy as np

from holonomy_lab.controls import FIXED_AMPLITUDE, FIXED_RATE, HolonomicPath, synthesize_constant_chi
from holonomy_lab.dynamics import lambda_channels, lambda_hamiltonian
from holonomy_lab.gates import NAMED_GATES, single_qubit_target
from holonomy_lab.metrics import gate_fidelity_zeta_sweep

mhz = 2 * np.pi * 1e6
omega0 = 300 * mhz
g = 8 * mhz
channels = lambda_channels(g, g / 2, 2 * g)


def fidelity(gate, k, schedule, chans=channels, n_zeta=1001):
    theta, gamma, phi = NAMED_GATES[gate]
    path = HolonomicPath.from_gate(theta, gamma, phi, k=k, omega0=omega0, schedule=schedule)
    model = lambda_hamiltonian(synthesize_constant_chi(path, 2), theta, phi)
    return gate_fidelity_zeta_sweep(model, chans, single_qubit_target(theta, gamma, phi).matrix,
                                    n_zeta=n_zeta, tau=path.tau)


t0 = time.perf_counter()
for schedule in (FIXED_AMPLITUDE, FIXED_RATE):
    for gate in NAMED_GATES:
        vals = [fidelity(gate, k, schedule).average for k in (1, 100, 1000)]
        print(f"{schedule:16s} {gate:9s}", "  ".join(f"{100 * v:6.2f}%" for v in vals))
print(f"({time.perf_counter() - t0:.1f} s)")

# %%
# Sweeps: stronger decay or dephasing, k = 1 against k = 100.
for label, make in (("gamma1", lambda v: lambda_channels(v, v / 2, 2 * g)),
                    ("gamma_phi", lambda v: lambda_channels(g, g / 2, v))):
    top = 4 * g if label == "gamma1" else 8 * g
    print(label)
    for v in np.linspace(0, top, 5):
        f1 = fidelity("NOT", 1, FIXED_AMPLITUDE, make(v), 201).average
        f100 = fidelity("NOT", 100, FIXED_AMPLITUDE, make(v), 201).average
        print(f"  {v / mhz:5.1f} x 2pi MHz   k=1 {100 * f1:6.2f}%   k=100 {100 * f100:6.2f}%")
