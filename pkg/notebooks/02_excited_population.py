"""
How long does the excited state get populated?
==============================================

Time spent in |e> is what spontaneous decay eats. Here it is computed three
ways: quadrature of the closed form, Monte-Carlo over input states, and a
propagated trajectory.
"""
import numpy as np

from holonomy_lab.controls import FIXED_AMPLITUDE, FIXED_RATE, HolonomicPath
from holonomy_lab.metrics import (average_integrated_population, constant_chi_population_scan, f_tau,
                                  propagated_bright_population)

omega0 = 2 * np.pi * 300e6

rows = constant_chi_population_scan(np.pi, range(1, 21), omega0=omega0)
print(" k  time-avg (fixed-amplitude)  time-avg (fixed-rate)  integrated B [ns]  integrated A [ns]")
for k in range(1, 21):
    b = next(r for r in rows if r["k"] == k and r["schedule"] == FIXED_AMPLITUDE)
    a = next(r for r in rows if r["k"] == k and r["schedule"] == FIXED_RATE)
    print(f"{k:2d}  {b['time_avg_pop']:.5f}  {a['time_avg_pop']:.5f}  "
          f"{b['integrated_pop_s'] * 1e9:.4f}  {a['integrated_pop_s'] * 1e9:.4f}")
# With the fixed-rate convention the loop grows k-fold, so the time integral
# barely moves; with a capped amplitude it falls off like 1/sqrt(k).

# %%
# Smaller geometric phases need a narrower cone and excite less.
for g in np.linspace(0.5, 6.0, 6):
    r = constant_chi_population_scan(g, [10], omega0=omega0, schedules=(FIXED_AMPLITUDE,))[0]
    print(f"gamma={g:.2f}  time-avg population {r['time_avg_pop']:.5f}")

# %%
# Averaging over inputs. Haar-random inputs give half the bright-state value.
path = HolonomicPath.from_gate(np.pi / 2, np.pi, 0.0, k=5, omega0=omega0)
haar = average_integrated_population(path, "haar", n_samples=10000, seed=1)
grid = average_integrated_population(path, "grid", n_samples=10000)
print("f(tau)            ", f_tau(path))
print("Haar mean         ", haar["empirical"], "+/-", haar["sem"])
print("grid mean         ", grid["empirical"])
print("1/(4 pi) measure  ", grid["grid_measure_value"])
print("candidates        ", haar["candidates"])
print("propagated (B/2)  ", propagated_bright_population(path, 2001))
