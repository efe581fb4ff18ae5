import numpy as np
import pytest

from holonomy_lab.controls import (HolonomicPath, PulseSchedule, bright_dark_vectors,
                                   synthesize_constant_chi)
from holonomy_lab.dynamics import (LindbladChannel, constant_model, lambda_channels, lambda_hamiltonian,
                                   lindblad_propagator, propagate_lindblad, propagate_schrodinger,
                                   propagate_unitary, two_nv_cavity_hamiltonian, two_nv_operators)
from holonomy_lab.errors import InvalidInputError
from holonomy_lab.gates import TwoQubitModel
from holonomy_lab.metrics import state_fidelity

OMEGA0 = 2 * np.pi * 300e6
G1 = 2 * np.pi * 8e6


def _flat(omega, delta, phi1=0.0, tau=1.0, n=3):
    t = np.linspace(0, tau, n)
    return PulseSchedule(t=t, omega=np.full(n, omega), delta=np.full(n, delta), phi1=np.full(n, phi1),
                         xi=np.full(n, np.pi / 2), tau=tau)


def test_lambda_hamiltonian_examples():
    h = lambda_hamiltonian(_flat(0.0, 3.0), 0.4, 0.1).evaluate(0.5)
    assert np.allclose(h, np.diag([0, 3.0, 0]), atol=0)
    h = lambda_hamiltonian(_flat(2.0, 0.0), 0.0, 0.1).evaluate(0.5)
    assert h[0, 1] == 0 and h[1, 0] == 0
    theta, phi = 1.1, 0.7
    b, _, e = bright_dark_vectors(theta, phi)
    h = lambda_hamiltonian(_flat(2.0, 0.3, phi1=0.4), theta, phi).evaluate(0.2)
    assert np.vdot(b, h @ e) == pytest.approx(np.exp(0.4j), abs=1e-15)


def test_lambda_hamiltonian_time_range():
    model = lambda_hamiltonian(_flat(1.0, 0.0), 0.4, 0.1)
    with pytest.raises(InvalidInputError):
        model.evaluate(1.5)


def test_zero_hamiltonian_keeps_state():
    psi = np.array([0.6, 0.0, 0.8j])
    res = propagate_schrodinger(constant_model(np.zeros((3, 3))), psi, [0, 1, 2])
    assert np.allclose(res.states, psi, atol=0)


def test_rabi_pi_pulse():
    theta, phi, om = 0.9, 0.4, 1.7
    b, _, e = bright_dark_vectors(theta, phi)
    model = lambda_hamiltonian(_flat(om, 0.0, tau=np.pi / om), theta, phi)
    res = propagate_schrodinger(model, b, [0, np.pi / om])
    assert np.max(np.abs(res.states[-1] - (-1j) * e)) <= 1e-12


def test_engineered_not_gate():
    path = HolonomicPath.from_gate(np.pi / 2, np.pi, 0.0, k=1, omega0=OMEGA0)
    sched = synthesize_constant_chi(path, 2)
    res = propagate_schrodinger(lambda_hamiltonian(sched, path.theta, path.phi), [1, 0, 0], [0, path.tau])
    assert abs(res.states[-1][2]) ** 2 >= 1 - 1e-6
    assert not res.failed


def test_composition():
    path = HolonomicPath.from_gate(0.7, 2.2, 0.5, k=3, omega0=1.0, profile="sine-ramp")
    model = lambda_hamiltonian(synthesize_constant_chi(path, 3001), path.theta, path.phi)
    tau = path.tau
    u_full = propagate_unitary(model, [0, tau], max_step=tau / 6000)[-1]
    u_split = propagate_unitary(model, [0, tau / 2, tau], max_step=tau / 6000)
    assert np.max(np.abs(u_split[-1] - u_full)) <= 1e-9
    second = propagate_unitary(model, [tau / 2, tau], max_step=tau / 6000)[-1]
    assert np.max(np.abs(second @ u_split[1] - u_full)) <= 1e-9

    chans = lambda_channels(0.01, 0.005, 0.02)
    s_full = lindblad_propagator(model, chans, [0, tau], max_step=tau / 6000)[-1]
    s_half = lindblad_propagator(model, chans, [0, tau / 2, tau], max_step=tau / 6000)
    assert np.max(np.abs(s_half[-1] - s_full)) <= 1e-9


def test_pure_decay_analytic():
    g1, g2 = G1, G1 / 2
    rho0 = np.diag([0, 1, 0]).astype(complex)
    t = np.linspace(0, 5 / (g1 + g2), 11)
    res = propagate_lindblad(constant_model(np.zeros((3, 3))), lambda_channels(g1, g2, 0.0), rho0, t)
    ee = res.states[:, 1, 1].real
    assert np.max(np.abs(ee - np.exp(-(g1 + g2) * t))) <= 1e-8
    assert np.max(np.abs(res.states[:, 0, 0].real - g1 / (g1 + g2) * (1 - np.exp(-(g1 + g2) * t)))) <= 1e-8
    assert np.max(res.diagnostics["trace_dev"]) <= 1e-9


def test_pure_dephasing_analytic():
    gphi = 2 * G1
    plus = np.array([1, 1, 0]) / np.sqrt(2)
    rho0 = np.outer(plus, plus).astype(complex)
    t = np.linspace(0, 4 / gphi, 9)
    res = propagate_lindblad(constant_model(np.zeros((3, 3))), lambda_channels(0, 0, gphi), rho0, t)
    assert np.max(np.abs(res.states[:, 0, 1] - 0.5 * np.exp(-gphi * t))) <= 1e-8
    assert np.max(np.abs(res.states[:, 0, 0] - 0.5)) <= 1e-12


def test_decay_half_life_fidelity():
    g1, g2 = G1, G1 / 2
    t_half = np.log(2) / (g1 + g2)
    rho0 = np.diag([0, 1, 0]).astype(complex)
    res = propagate_lindblad(constant_model(np.zeros((3, 3))), lambda_channels(g1, g2, 0), rho0, [0, t_half])
    assert state_fidelity(res.states[-1], [0, 1, 0]) == pytest.approx(0.5, abs=1e-8)


def test_closed_limit_matches_schrodinger():
    path = HolonomicPath.from_gate(np.pi / 4, np.pi, 0.0, k=2, omega0=OMEGA0, profile="sine-ramp")
    model = lambda_hamiltonian(synthesize_constant_chi(path, 4001), path.theta, path.phi)
    psi = np.array([0.6, 0, 0.8])
    grid = np.linspace(0, path.tau, 5)
    lin = propagate_lindblad(model, lambda_channels(0, 0, 0), np.outer(psi, psi.conj()), grid,
                             steps_per_period=400)
    sch = propagate_schrodinger(model, psi, grid, steps_per_period=400)
    for rho, s in zip(lin.states, sch.states):
        assert state_fidelity(rho, s) >= 1 - 1e-8


def test_lindblad_failure_flag():
    # one RK4 step far outside the stability region
    model = constant_model(np.diag([0.0, 1.0, 0.0]))
    chans = lambda_channels(1.0, 0.5, 0.0)
    res = propagate_lindblad(model, chans, np.diag([0, 1, 0]).astype(complex), [0, 10.0], max_step=10.0)
    assert res.failed and res.fail_index == 1


def test_rejects_bad_inputs():
    model = constant_model(np.zeros((3, 3)))
    with pytest.raises(InvalidInputError):
        propagate_schrodinger(model, [1, 1, 0], [0, 1])
    with pytest.raises(InvalidInputError):
        propagate_lindblad(model, [], np.eye(3), [0, 1])
    with pytest.raises(InvalidInputError):
        propagate_unitary(model, [0, 0])
    with pytest.raises(InvalidInputError):
        LindbladChannel(np.eye(3), -1.0)


def test_grid_doubling_schrodinger():
    path = HolonomicPath.from_gate(np.pi / 2, np.pi, 0.0, k=3, omega0=OMEGA0, profile="sine-ramp")
    model = lambda_hamiltonian(synthesize_constant_chi(path, 6001), path.theta, path.phi)
    f = []
    for spp in (200, 400):
        psi = propagate_schrodinger(model, [1, 0, 0], [0, path.tau], steps_per_period=spp).states[-1]
        f.append(abs(psi[2]) ** 2)
    assert abs(f[0] - f[1]) <= 1e-7


# ---------------------------------------------------------------------------
# two emitters in a cavity

def test_two_nv_dimensions_and_hermiticity(rng):
    p = TwoQubitModel(1.0, 1.3, 0.4, 0.2, 20.0, Delta=0.1, n_max=2)
    model = two_nv_cavity_hamiltonian(p)
    assert model.dim == 27
    for t in rng.uniform(0, 5, 5):
        h = model.evaluate(t)
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12
    with pytest.raises(InvalidInputError):
        two_nv_cavity_hamiltonian(TwoQubitModel(1, 1, 1, 1, 20, n_max=6))


def test_two_nv_uncoupled_is_diagonal():
    p = TwoQubitModel(0, 0, 0, 0, 20.0, Delta1=0.3, Delta2=-0.2, n_max=1)
    h = two_nv_cavity_hamiltonian(p).evaluate(0.7)
    ops = two_nv_operators(1)
    assert np.allclose(h, 0.3 * ops["sigma"](1, "1", "1") - 0.2 * ops["sigma"](2, "1", "1"), atol=0)


def test_excitation_number_conserved(rng):
    n_max = 2
    ops = two_nv_operators(n_max)
    s = ops["sigma"]
    num = ops["n"] + sum(s(k, "1", "1") + s(k, "e", "e") for k in (1, 2))
    p = TwoQubitModel(1.0, 0.8, 0.0, 0.0, 20.0, n_max=n_max)
    for t in rng.uniform(0, 3, 4):
        h = two_nv_cavity_hamiltonian(p).evaluate(t)
        assert np.max(np.abs(h @ num - num @ h)) <= 1e-12
    # with drives the raising part moves population between |1> and |e>, which the
    # same operator also counts, so it is conserved for any Omega
    p = TwoQubitModel(1.0, 0.8, 0.5, 0.3, 20.0, n_max=n_max)
    h = two_nv_cavity_hamiltonian(p).evaluate(0.3)
    assert np.max(np.abs(h @ num - num @ h)) <= 1e-12
