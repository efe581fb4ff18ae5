import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from holonomy_lab.controls import closed_form_propagator, chi_from_gamma
from holonomy_lab.errors import InvalidInputError
from holonomy_lab.gates import (EFFECTIVE_BASIS, EffectiveTwoQubitParams, NAMED_GATES, TwoQubitModel,
                                adiabatic_effective_matrix, bright_dark_basis, effective_coupling,
                                effective_hamiltonian, effective_matrix, gate_fidelity_phase_invariant,
                                gate_from_json, gate_to_json, mixing_angle, restrict_to_computational,
                                full_index, rotation_form, single_qubit_target, two_qubit_gate, two_qubit_loop)

X = np.array([[0, 1], [1, 0]])
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
MHZ = 2 * np.pi * 1e6


def test_named_gates():
    assert np.max(np.abs(single_qubit_target(*NAMED_GATES["NOT"]).matrix - X)) <= 1e-12
    assert np.max(np.abs(single_qubit_target(*NAMED_GATES["Hadamard"]).matrix - H)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0, np.pi), gamma=st.floats(-7, 7), varphi=st.floats(0, 2 * np.pi))
def test_target_matches_rotation_form(theta, gamma, varphi):
    m = single_qubit_target(theta, gamma, varphi).matrix
    assert np.max(np.abs(m - rotation_form(theta, gamma, varphi))) <= 1e-12
    assert np.max(np.abs(m.conj().T @ m - np.eye(2))) <= 1e-12
    assert np.max(np.abs(single_qubit_target(theta, 0.0, varphi).matrix - np.eye(2))) <= 1e-15


@pytest.mark.parametrize("k", [1, 2, 5])
@pytest.mark.parametrize("theta,gamma,phi", [(0.3, 1.0, 0.0), (np.pi / 2, np.pi, 1.1), (2.5, 4.0, 0.4)])
def test_single_qubit_closure(theta, gamma, phi, k):
    chi = chi_from_gamma(gamma, k)
    u = closed_form_propagator(theta, phi, 2 * k * np.pi, chi, -k * np.pi * np.cos(chi))
    block = u[np.ix_([0, 2], [0, 2])]
    assert np.max(np.abs(block - single_qubit_target(theta, gamma, phi).matrix)) <= 1e-10


def test_two_qubit_gate_swap_like():
    ref = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]])
    u = two_qubit_gate(np.pi / 2, np.pi)
    assert np.max(np.abs(u - ref)) <= 1e-12
    assert np.max(np.abs(two_qubit_gate(0.7, 0.0) - np.eye(4))) <= 1e-15


@settings(max_examples=30, deadline=None)
@given(Theta=st.floats(-np.pi, np.pi), gamma=st.floats(-7, 7))
def test_two_qubit_gate_unitary(Theta, gamma):
    u = two_qubit_gate(Theta, gamma)
    assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-12


def test_effective_coupling_examples():
    assert effective_coupling(1, 0.1, 10, 1) == pytest.approx(0.01)
    assert effective_coupling(1, 0.1, 10, 2) == pytest.approx(-0.01)
    assert effective_coupling(10 * MHZ, 10 * MHZ, 200 * MHZ, 1) == pytest.approx(0.5 * MHZ, rel=1e-14)
    with pytest.raises(InvalidInputError):
        effective_coupling(1, 1, 0, 1)
    with pytest.raises(InvalidInputError):
        effective_coupling(1, 1, 1, 3)


def test_mixing_angle():
    p = EffectiveTwoQubitParams.from_couplings(0.3, 0.3)
    assert p.g_tilde == pytest.approx(0.3 * np.sqrt(2), rel=1e-15)
    assert p.Theta == pytest.approx(-np.pi / 2)
    assert mixing_angle(-1.0, 0.0) == pytest.approx(np.pi)
    # identical emitters: the drive-sign alternation gives g1 = -g2 and Theta = pi/2
    m = TwoQubitModel(1.0, 1.0, 0.2, 0.2, 20.0).effective()
    assert m.Theta == pytest.approx(np.pi / 2)


@settings(max_examples=30, deadline=None)
@given(g1=st.floats(-5, 5), g2=st.floats(-5, 5))
def test_mixing_angle_ratio(g1, g2):
    r = np.hypot(g1, g2)
    if r < 1e-6:
        return
    th = mixing_angle(g1, g2)
    assert -np.pi <= th <= np.pi
    # wrapping to the principal value may flip the overall sign of (sin, cos)
    v = np.array([-np.sin(th / 2), np.cos(th / 2)]) * r
    assert min(np.max(np.abs(v - [g1, g2])), np.max(np.abs(v + [g1, g2]))) <= 1e-12 * max(1, r)


def test_effective_hamiltonian_dark_states():
    p = EffectiveTwoQubitParams(g_tilde=0.7, Theta=0.9)
    h = effective_hamiltonian(p).evaluate(0.0)
    assert h.shape == (6, 6)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12
    s, c = np.sin(0.45), np.cos(0.45)
    idx = {k: i for i, k in enumerate(EFFECTIVE_BASIS)}
    for a, b in (("100", "001"), ("110", "011")):
        d = np.zeros(6)
        d[idx[a]], d[idx[b]] = c, s
        assert np.max(np.abs(h @ d)) <= 1e-15


def test_two_qubit_closure():
    for Theta, gamma, k in ((np.pi / 2, np.pi, 1), (0.7, 2.0, 3), (-1.2, 4.0, 2)):
        params, tau = two_qubit_loop(Theta, gamma, 1.3, k)
        u6 = expm(-1j * effective_matrix(params) * tau)
        u4 = restrict_to_computational(u6)
        assert gate_fidelity_phase_invariant(u4, two_qubit_gate(Theta, gamma)) >= 1 - 1e-12
        assert np.max(np.abs(u4 - two_qubit_gate(Theta, gamma))) <= 1e-6


def test_swap_like_action():
    u = two_qubit_gate(np.pi / 2, np.pi)
    e = np.eye(4)
    assert np.allclose(u @ e[3], -e[3], atol=1e-15)
    assert np.allclose(u @ e[1], e[2], atol=1e-15) and np.allclose(u @ e[2], e[1], atol=1e-15)


def test_bright_dark_basis():
    b, d = bright_dark_basis(0.0, 0.3)
    assert np.allclose(b, [0, 1]) and np.allclose(d, [1, 0])
    b, d = bright_dark_basis(np.pi, 0.0)
    assert np.allclose(b, [-1, 0], atol=1e-15) and np.allclose(d, [0, 1], atol=1e-15)
    rng = np.random.default_rng(3)
    for th, ph in rng.uniform(0, np.pi, (10, 2)):
        b, d = bright_dark_basis(th, 2 * ph)
        assert abs(np.vdot(b, d)) <= 1e-15


def test_gate_json_round_trip(tmp_path):
    u = two_qubit_gate(0.4, 1.2)
    text = gate_to_json(u, ["000", "100", "001", "101"], tmp_path / "g.json")
    back, basis = gate_from_json((tmp_path / "g.json").read_text())
    assert np.array_equal(back, u) and basis == ["000", "100", "001", "101"]
    assert set(json.loads(text)) == {"basis", "re", "im"}


def test_rederived_single_excitation_block():
    # second-order couplings agree with the six-state model up to the sign of |010>,
    # and the diagonal carries the light shifts the six-state model leaves out
    G, Om, delta = 1.0, 0.3, 40.0
    model = TwoQubitModel(G, G, Om, Om, delta, n_max=2)
    h = adiabatic_effective_matrix(model)
    idx = [full_index(s, 2) for s in ("100", "010", "001")]
    blk = h[np.ix_(idx, idx)]
    six = effective_matrix(model.effective())[:3, :3]
    flip = np.diag([1, -1, 1])
    assert np.max(np.abs((flip @ (blk - np.diag(np.diag(blk))) @ flip) - six)) <= 1e-15
    assert np.allclose(np.diag(blk).real, [-Om ** 2 / delta, -2 * G ** 2 / delta, -Om ** 2 / delta])
