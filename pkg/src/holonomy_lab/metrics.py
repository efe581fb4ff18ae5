"""Excited-state exposure and fidelity measures."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .controls import (FIXED_AMPLITUDE, FIXED_RATE, HolonomicPath, path_propagator,
                       synthesize_constant_chi)
from .dynamics import (PropagationResult, apply_superoperator, density_diagnostics,
                       lambda_hamiltonian, lindblad_propagator, POSITIVITY_FAIL, TRACE_FAIL)
from .errors import InvalidInputError


@dataclass
class PopulationReport:
    integrated: float
    time_averaged: float
    closed_form_value: Optional[float] = None
    f_tau: Optional[float] = None


def excited_bracket(theta, omega, kappa, varphi):
    """Overlap ``|<b|psi>|^2`` for ``psi = sin(w/2)|0> + cos(w/2) e^{i kappa}|1>``.

    ``cos^2((theta+w)/2) + sin(theta) sin(w) sin^2((varphi+kappa)/2)``; the
    plus sign is what a bright-state input (bracket = 1) requires.
    """
    return (np.cos((theta + omega) / 2) ** 2
            + np.sin(theta) * np.sin(omega) * np.sin((varphi + kappa) / 2) ** 2)


def f_tau(path: HolonomicPath, samples: int = 20001) -> float:
    """Quadrature of ``sin^2(eta/2) sin^2(chi)`` over the loop."""
    t = np.linspace(0.0, path.tau, samples)
    eta = path.eta_profile.eta(t)
    return float(trapezoid(np.sin(eta / 2) ** 2 * np.sin(path.chi) ** 2, t))


def integrated_excited_population(traj: PropagationResult, e_index: int = 1,
                                  metadata: Optional[dict] = None) -> PopulationReport:
    """Trapezoidal time integral of the excited-state population along ``traj``.

    When ``metadata`` has ``path`` (a :class:`HolonomicPath`) and the input
    angles ``omega`` and ``kappa``, the analytic value ``bracket * f(tau)``
    is filled in as well.
    """
    pops = traj.populations()
    if pops.ndim != 2:
        raise InvalidInputError("expected a single trajectory")
    pe = pops[:, e_index]
    integrated = float(trapezoid(pe, traj.grid))
    span = float(traj.grid[-1] - traj.grid[0])
    report = PopulationReport(integrated=integrated, time_averaged=integrated / span)
    if metadata and "path" in metadata:
        path = metadata["path"]
        report.f_tau = f_tau(path)
        if "omega" in metadata and "kappa" in metadata:
            br = excited_bracket(path.theta, metadata["omega"], metadata["kappa"], path.phi)
            report.closed_form_value = float(br * report.f_tau)
    return report


def haar_states(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random qubit states as rows."""
    z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def instantaneous_excited_population(path: HolonomicPath, t, states: np.ndarray) -> np.ndarray:
    """``|<e|U(t)|psi>|^2`` for qubit states (rows), shape ``(len(t), n_states)``."""
    u = path_propagator(path, np.atleast_1d(t))
    e_row = u[:, 1, :][:, [0, 2]]  # <e|U|0>, <e|U|1>
    return np.abs(e_row @ states.T) ** 2


def average_integrated_population(path: HolonomicPath, sampling: str = "haar", n_samples: int = 10000,
                                  seed: int = 0, time_samples: int = 2001) -> dict:
    """State-averaged integrated excited population and the analytic candidates.

    ``sampling="haar"`` draws Haar-random inputs; ``"grid"`` uses a uniform
    (omega, kappa) grid, omega in [0, pi], kappa in [0, 2 pi), with the plain
    mean (i.e. the measure normalised to one). The printed ``1/(4 pi)``
    measure is reported separately as ``grid_measure_value``.
    """
    t = np.linspace(0.0, path.tau, time_samples)
    if sampling == "haar":
        states = haar_states(n_samples, np.random.default_rng(seed))
    elif sampling == "grid":
        side = max(2, int(round(np.sqrt(n_samples))))
        w = (np.arange(side) + 0.5) * np.pi / side
        k = np.arange(side) * 2 * np.pi / side
        ww, kk = np.meshgrid(w, k, indexing="ij")
        ww, kk = ww.ravel(), kk.ravel()
        states = np.stack([np.sin(ww / 2), np.cos(ww / 2) * np.exp(1j * kk)], axis=1)
    else:
        raise InvalidInputError(f"unknown sampling {sampling!r}")
    per_state = trapezoid(instantaneous_excited_population(path, t, states), t, axis=0)
    empirical = float(np.mean(per_state))
    sem = float(np.std(per_state, ddof=1) / np.sqrt(len(per_state)))
    ft = f_tau(path)
    candidates = {"f_tau_over_8": ft / 8, "f_tau_over_2": ft / 2}
    # (1/4pi) d(omega) d(kappa) over [0, pi] x [0, 2 pi] has total weight pi/2
    grid_measure = (np.pi / 2) * empirical if sampling == "grid" else None
    matches = {name: bool(abs(v - empirical) <= max(3 * sem, 1e-9 * max(ft, 1e-300)))
               for name, v in candidates.items()}
    return {"empirical": empirical, "sem": sem, "f_tau": ft, "sampling": sampling,
            "candidates": candidates, "matches": matches, "grid_measure_value": grid_measure}


def state_fidelity(rho, target) -> float:
    """``<target|rho|target>`` clipped to [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if rho.shape != (target.size, target.size):
        raise InvalidInputError(f"rho {rho.shape} does not match target of size {target.size}")
    return float(np.clip(np.real(np.vdot(target, rho @ target)), 0.0, 1.0))


@dataclass
class FidelityReport:
    zeta: np.ndarray
    fidelities: np.ndarray
    average: float
    definition: str = "state-overlap-average"
    times: Optional[np.ndarray] = None
    average_vs_time: Optional[np.ndarray] = None
    failed_indices: tuple = ()
    partial: bool = False
    params: dict = field(default_factory=dict)

    @property
    def per_state(self):
        return list(zip(self.zeta.tolist(), self.fidelities.tolist()))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zeta_rad", "fidelity"])
        for z, f in zip(self.zeta, self.fidelities):
            w.writerow([f"{z:.12g}", f"{f:.12g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary_json(self) -> str:
        return json.dumps({
            "average": self.average, "min": float(np.min(self.fidelities)),
            "max": float(np.max(self.fidelities)), "n_states": int(len(self.zeta)),
            "definition": self.definition, "partial": self.partial,
            "failed_indices": list(self.failed_indices), "params": self.params,
        }, indent=2, sort_keys=True)


def zeta_grid(n_zeta: int = 1001) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, n_zeta)


def gate_fidelity_zeta_sweep(model, channels, target, n_zeta: int = 1001, n_times: int = 2,
                             steps_per_period: float = 50, max_step: Optional[float] = None,
                             tau: Optional[float] = None, params: Optional[dict] = None) -> FidelityReport:
    """Average of ``<target psi|rho(tau)|target psi>`` over ``psi = cos z|0> + sin z|1>``.

    States are embedded in ``{|0>, |e>, |1>}``. The master equation is
    integrated once for the whole superoperator, which every ``z`` then
    shares. ``n_times`` retained samples give the fidelity history, always
    scored against the final target.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2):
        raise InvalidInputError("target must be 2x2")
    if tau is None:
        tau = model.t_range[1]
    times = np.linspace(0.0, tau, max(2, n_times))
    sup = lindblad_propagator(model, channels, times, steps_per_period=steps_per_period, max_step=max_step)
    zeta = zeta_grid(n_zeta)
    psi = np.zeros((n_zeta, 3), dtype=complex)
    psi[:, 0], psi[:, 2] = np.cos(zeta), np.sin(zeta)
    rho0 = psi[:, :, None] * psi[:, None, :].conj()
    tq = (target @ psi[:, [0, 2]].T).T
    tgt = np.zeros_like(psi)
    tgt[:, 0], tgt[:, 2] = tq[:, 0], tq[:, 1]
    rhos = apply_superoperator(sup, rho0)  # (n_times, n_zeta, 3, 3)
    fid = np.real(np.einsum("zi,tzij,zj->tz", tgt.conj(), rhos, tgt))
    fid = np.clip(fid, 0.0, 1.0)
    diag = density_diagnostics(rhos)
    bad = (diag["min_eig"] < POSITIVITY_FAIL) | (diag["trace_dev"] > TRACE_FAIL)
    failed = tuple(int(i) for i in np.flatnonzero(bad.any(axis=0)))
    return FidelityReport(
        zeta=zeta, fidelities=fid[-1], average=float(np.mean(fid[-1])), times=times,
        average_vs_time=fid.mean(axis=1), failed_indices=failed, partial=bool(failed),
        params={**(params or {}), "max_trace_dev": float(diag["trace_dev"].max()),
                "min_eig": float(diag["min_eig"].min())},
    )


def process_fidelity(u_block, target) -> float:
    """Diagnostic ``|Tr(target^dag U)|^2 / d^2`` on the qubit block."""
    u_block = np.asarray(u_block)
    d = u_block.shape[0]
    return float(abs(np.trace(np.asarray(target).conj().T @ u_block)) ** 2 / d ** 2)


def constant_chi_population_scan(gamma: float, k_list: Sequence[int], profile: str = "linear",
                                 omega0: float = 1.0, schedules=(FIXED_RATE, FIXED_AMPLITUDE),
                                 quad_samples: int = 20001) -> list:
    """Rows ``(k, gamma, schedule, time_avg_pop, integrated_pop_s)`` for the population scan.

    Populations are Haar averages, i.e. ``f(tau) / 2`` by quadrature.
    """
    rows = []
    for schedule in schedules:
        for k in k_list:
            path = HolonomicPath.from_gate(np.pi / 2, gamma, 0.0, k=k, omega0=omega0,
                                           schedule=schedule, profile=profile)
            integ = 0.5 * f_tau(path, quad_samples)
            rows.append({"k": int(k), "gamma": float(gamma), "schedule": schedule,
                         "time_avg_pop": integ / path.tau, "integrated_pop_s": integ})
    return rows


def propagated_bright_population(path: HolonomicPath, samples: int = 4001) -> float:
    """Haar-averaged integrated population from a propagated bright-state trajectory.

    Haar average of ``|<b|psi>|^2`` is 1/2, so this is half the bright-state
    value. Independent of :func:`f_tau` (goes through the integrator).
    """
    from .controls import bright_dark_vectors
    from .dynamics import propagate_schrodinger

    sched = synthesize_constant_chi(path, samples)
    model = lambda_hamiltonian(sched, path.theta, path.phi)
    br, _, _ = bright_dark_vectors(path.theta, path.phi)
    traj = propagate_schrodinger(model, br, sched.t)
    return 0.5 * integrated_excited_population(traj).integrated
