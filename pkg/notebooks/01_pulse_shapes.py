"""
Pulse shapes for a holonomic NOT gate
=====================================

Builds the drive for one loop of a constant-cone-angle path, under both
duration conventions, and checks the propagator it produces.
"""
import numpy as np

from holonomy_lab.controls import (FIXED_AMPLITUDE, FIXED_RATE, HolonomicPath, path_propagator,
                                   synthesize_constant_chi, synthesize_general, closed_form_propagator)
from holonomy_lab.dynamics import lambda_hamiltonian, propagate_unitary

omega0 = 2 * np.pi * 300e6

# NOT gate: theta = pi/2, gamma = pi
for k in (1, 10, 100):
    for schedule in (FIXED_RATE, FIXED_AMPLITUDE):
        path = HolonomicPath.from_gate(np.pi / 2, np.pi, 0.0, k=k, omega0=omega0, schedule=schedule)
        s = synthesize_constant_chi(path, 5)
        print(f"k={k:4d} {schedule:16s} chi={path.chi:.4f} tau={path.tau * 1e9:8.3f} ns "
              f"Omega/2pi={s.omega[0] / 2 / np.pi / 1e6:7.2f} MHz Delta/2pi={s.delta[0] / 2 / np.pi / 1e6:8.2f} MHz")

# %%
# A sine ramp switches the pulse on and off smoothly; the gate is unchanged.
path = HolonomicPath.from_gate(np.pi / 2, np.pi, 0.0, k=3, omega0=omega0, profile="sine-ramp")
sched = synthesize_constant_chi(path, 1201)
u = propagate_unitary(lambda_hamiltonian(sched, path.theta, path.phi), [0, path.tau])[-1]
print("sine ramp: peak Omega/omega0 =", sched.omega.max() / omega0)
print("qubit block at tau:\n", np.round(u[np.ix_([0, 2], [0, 2])], 8))
print("max deviation from the closed form:", np.abs(u - path_propagator(path, path.tau)).max())

# %%
# A cone angle that changes in time needs the full control formulas.
tau = 2 * np.pi / omega0
chi = lambda t: np.pi / 4 * (1 - np.cos(np.pi * t / tau))
for n in (1001, 4001):
    s = synthesize_general(lambda t: omega0 * t, chi, 0.3, tau, n)
    u = propagate_unitary(lambda_hamiltonian(s, 0.9, 0.3), [0, tau], max_step=tau / n)[-1]
    ref = closed_form_propagator(0.9, 0.3, 2 * np.pi, chi(tau), s.alpha_tau)
    print(f"{n} samples: max|U - U_closed| = {np.abs(u - ref).max():.2e}")

# Writing the schedule out
print(synthesize_constant_chi(path, 4).to_csv())
