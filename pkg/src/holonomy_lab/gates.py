"""Target gates and the effective two-emitter model.

Single-qubit holonomic gates act on ``{|0>, |1>}``; the two-qubit gate acts
on ``{|000>, |100>, |001>, |101>}`` where ``|m n l>`` is
``NV1 (x) cavity (x) NV2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .controls import chi_from_gamma
from .dynamics import HamiltonianModel, constant_model, two_nv_operators
from .errors import InvalidInputError

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class SingleQubitTarget:
    theta: float
    gamma: float
    varphi: float
    matrix: np.ndarray

    @property
    def axis(self) -> np.ndarray:
        """Bloch rotation axis; its azimuth is ``-varphi`` (see :func:`rotation_form`)."""
        return _axis(self.theta, self.varphi)


def single_qubit_target(theta: float, gamma: float, varphi: float = 0.0) -> SingleQubitTarget:
    """``|d><d| + e^{i gamma}|b><b|`` written out in the computational basis."""
    c2 = np.cos(theta / 2) ** 2
    s2 = np.sin(theta / 2) ** 2
    eg = np.exp(1j * gamma)
    off = 0.5 * (1 - eg) * np.sin(theta)
    m = np.array([[c2 + s2 * eg, off * np.exp(1j * varphi)],
                  [off * np.exp(-1j * varphi), c2 * eg + s2]], dtype=complex)
    return SingleQubitTarget(theta, gamma, varphi, m)


def _axis(theta, varphi):
    return np.array([np.sin(theta) * np.cos(varphi), -np.sin(theta) * np.sin(varphi), np.cos(theta)])


def rotation_form(theta: float, gamma: float, varphi: float = 0.0) -> np.ndarray:
    """``e^{i gamma/2} exp(-i gamma/2 n.sigma)``, an independent route to the same gate.

    The matrix element ``<0|U|1>`` carries ``e^{+i varphi}``, which puts the
    axis ``n`` at polar angle ``theta`` and azimuth ``-varphi``.
    """
    n = _axis(theta, varphi)
    ns = n[0] * PAULI["x"] + n[1] * PAULI["y"] + n[2] * PAULI["z"]
    return np.exp(1j * gamma / 2) * (np.cos(gamma / 2) * np.eye(2) - 1j * np.sin(gamma / 2) * ns)


NAMED_GATES = {
    "NOT": (np.pi / 2, np.pi, 0.0),
    "Hadamard": (np.pi / 4, np.pi, 0.0),
}


def bright_dark_basis(theta: float, phi: float):
    """Qubit-space bright and dark states ``(|b>, |d>)``."""
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    b = np.array([-s * np.exp(1j * phi), c], dtype=complex)
    d = np.array([c, s * np.exp(-1j * phi)], dtype=complex)
    return b, d


def two_qubit_gate(Theta: float, gamma: float) -> np.ndarray:
    c2 = np.cos(Theta / 2) ** 2
    s2 = np.sin(Theta / 2) ** 2
    eg = np.exp(1j * gamma)
    off = np.sin(Theta) * (1 - eg) / 2
    return np.array([
        [1, 0, 0, 0],
        [0, c2 + s2 * eg, off, 0],
        [0, off, c2 * eg + s2, 0],
        [0, 0, 0, np.exp(-1j * gamma)],
    ], dtype=complex)


def gate_to_json(matrix, basis, path=None) -> str:
    m = np.asarray(matrix, dtype=complex)
    doc = {"basis": list(basis), "re": m.real.tolist(), "im": m.imag.tolist()}
    text = json.dumps(doc, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def gate_from_json(text: str):
    doc = json.loads(text)
    return np.array(doc["re"]) + 1j * np.array(doc["im"]), doc["basis"]


def gate_fidelity_phase_invariant(u, v) -> float:
    """``|Tr(U^dag V)| / dim``; insensitive to a global phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    return float(abs(np.trace(u.conj().T @ v)) / u.shape[0])


# ---------------------------------------------------------------------------
# two emitters in a cavity


@dataclass(frozen=True)
class TwoQubitModel:
    """Full two-emitter + cavity parameters (rad/s).

    ``Delta1``/``Delta2`` override the common ``Delta`` per emitter, e.g. to
    cancel the drive-induced light shift ``-Omega_k^2 / delta``.
    """

    G1: float
    G2: float
    Omega1: float
    Omega2: float
    delta: float
    Delta: float = 0.0
    n_max: int = 2
    Delta1: Optional[float] = None
    Delta2: Optional[float] = None

    @property
    def detuning_ratio(self) -> float:
        return abs(self.delta) / max(abs(self.G1), abs(self.G2), abs(self.Omega1), abs(self.Omega2))

    def effective(self) -> "EffectiveTwoQubitParams":
        g1 = effective_coupling(self.G1, self.Omega1, self.delta, 1)
        g2 = effective_coupling(self.G2, self.Omega2, self.delta, 2)
        return EffectiveTwoQubitParams.from_couplings(g1, g2, self.Delta)


def effective_coupling(G: float, Omega: float, delta: float, k: int) -> float:
    """Cavity-assisted Raman coupling ``(-1)^(k+1) G Omega / delta``."""
    if delta == 0:
        raise InvalidInputError("delta must be non-zero")
    if k not in (1, 2):
        raise InvalidInputError("k must be 1 or 2")
    return (-1) ** (k + 1) * G * Omega / delta


def mixing_angle(g1: float, g2: float) -> float:
    """Angle with ``-sin(Theta/2) : cos(Theta/2) = g1 : g2``, i.e. ``2 atan2(-g1, g2)``."""
    theta = 2.0 * np.arctan2(-g1, g2)
    # Theta and Theta + 2 pi give the same gate; keep the principal value
    return float(np.angle(np.exp(1j * theta)))


@dataclass(frozen=True)
class EffectiveTwoQubitParams:
    g_tilde: float
    Theta: float
    Delta: float = 0.0
    g1: Optional[float] = None
    g2: Optional[float] = None

    @classmethod
    def from_couplings(cls, g1: float, g2: float, Delta: float = 0.0):
        return cls(g_tilde=float(np.hypot(g1, g2)), Theta=mixing_angle(g1, g2), Delta=Delta, g1=g1, g2=g2)


EFFECTIVE_BASIS = ("100", "010", "001", "110", "101", "011")


def effective_matrix(p: EffectiveTwoQubitParams) -> np.ndarray:
    """The 6x6 effective Hamiltonian on ``EFFECTIVE_BASIS``.

    ``(g~|B1><010| + h.c.) - Delta|010><010| + (g~|B2><101| + h.c.) + Delta|101><101|``.
    """
    s, c = np.sin(p.Theta / 2), np.cos(p.Theta / 2)
    idx = {k: i for i, k in enumerate(EFFECTIVE_BASIS)}
    b1 = np.zeros(6, dtype=complex)
    b1[idx["100"]], b1[idx["001"]] = -s, c
    b2 = np.zeros(6, dtype=complex)
    b2[idx["110"]], b2[idx["011"]] = -s, c
    e010 = np.zeros(6)
    e010[idx["010"]] = 1
    e101 = np.zeros(6)
    e101[idx["101"]] = 1
    h = p.g_tilde * (np.outer(b1, e010) + np.outer(b2, e101))
    h = h + h.conj().T
    h -= p.Delta * np.outer(e010, e010)
    h += p.Delta * np.outer(e101, e101)
    return h


def effective_hamiltonian(p: EffectiveTwoQubitParams) -> HamiltonianModel:
    return constant_model(effective_matrix(p), label="effective-two-qubit")


def two_qubit_loop(Theta: float, gamma: float, g_tilde: float, k: int = 1):
    """Constant-cone-angle loop for the effective model.

    Returns ``(params, tau)``. The bright state ``|B1>`` plays the role of
    ``|b>`` and ``|010>`` that of ``|e>``; since the auxiliary level sits at
    ``-Delta``, the detuning is ``Delta = -eta_dot cos(chi)`` with
    ``2 g~ = eta_dot sin(chi)``.
    """
    chi = chi_from_gamma(gamma, k)
    rate = 2.0 * g_tilde / np.sin(chi)
    tau = 2 * np.pi * k / rate
    return EffectiveTwoQubitParams(g_tilde=g_tilde, Theta=Theta, Delta=-rate * np.cos(chi)), tau


def restrict_to_computational(u6: np.ndarray) -> np.ndarray:
    """Block of a 6x6 effective propagator on ``{|000>, |100>, |001>, |101>}``.

    ``|000>`` is uncoupled, so its amplitude is 1.
    """
    idx = [EFFECTIVE_BASIS.index(s) for s in ("100", "001", "101")]
    out = np.zeros((4, 4), dtype=complex)
    out[0, 0] = 1.0
    out[1:, 1:] = u6[np.ix_(idx, idx)]
    return out


def full_index(label: str, n_max: int) -> int:
    """Index of ``|m n l>`` (``m, l`` in ``0/e/1``, ``n`` the photon number) in the full space."""
    m, n, l = label[0], int(label[1]), label[2]
    order = {"0": 0, "e": 1, "1": 2}
    return (order[m] * (n_max + 1) + n) * 3 + order[l]


def ground_manifold(n_max: int) -> list:
    """Labels of all states with both emitters in ``|0>`` or ``|1>``."""
    return [f"{m}{n}{l}" for m in "01" for n in range(n_max + 1) for l in "01"]


def adiabatic_effective_matrix(model: TwoQubitModel) -> np.ndarray:
    """Second-order effective Hamiltonian on the emitters' ground manifold.

    Eliminating ``|e>`` from ``X e^{i delta t} + h.c.`` (``X`` the raising
    part of the coupling) gives ``-X^dag X / delta`` projected on the ground
    manifold. Unlike the six-state form it keeps the light shifts
    ``-Omega_k^2/delta`` and ``-G_k^2 n/delta`` and the two-photon state
    ``|020>``. Returned in the full ``NV1 (x) cavity (x) NV2`` space.
    """
    ops = two_nv_operators(model.n_max)
    a, sig = ops["a"], ops["sigma"]
    x = np.zeros_like(a)
    diag = np.zeros_like(a)
    d1 = model.Delta if model.Delta1 is None else model.Delta1
    d2 = model.Delta if model.Delta2 is None else model.Delta2
    for k, g, om, dk in ((1, model.G1, model.Omega1, d1), (2, model.G2, model.Omega2, d2)):
        x = x + g * (a @ sig(k, "e", "0")) + (-1) ** k * om * sig(k, "e", "1")
        diag = diag + dk * sig(k, "1", "1")
    keep = [full_index(s, model.n_max) for s in ground_manifold(model.n_max)]
    proj = np.zeros(a.shape)
    proj[keep, keep] = 1.0
    return proj @ (-(x.conj().T @ x) / model.delta + diag) @ proj


def embed_effective(vec6, n_max: int) -> np.ndarray:
    """Place a six-state effective vector into the full space."""
    out = np.zeros(9 * (n_max + 1), dtype=complex)
    for amp, label in zip(vec6, EFFECTIVE_BASIS):
        out[full_index(label, n_max)] = amp
    return out
