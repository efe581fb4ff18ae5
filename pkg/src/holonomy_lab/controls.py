"""Reverse-engineered pulse schedules for holonomic loops in a Lambda system.

A loop is described by the Cayley-Klein angles ``eta(t)`` (rotation angle in
the bright/excited subspace) and ``chi(t)`` (cone angle), plus the fixed
bright-state angles ``theta`` and ``phi``. From these we build

* the closed-form propagator in the basis ``{|0>, |e>, |1>}``,
* the physical controls ``Omega(t)``, ``Delta(t)`` and laser phase
  ``phi1(t)`` that generate it,
* an independent finite-difference route ``H = i dU/dt U^dag`` used as an
  oracle for the analytic controls.

Times are in seconds and frequencies in rad/s throughout, but nothing here
depends on the unit system; the tests mostly work with ``omega0 = 1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import ConstraintViolation, InvalidInputError, StructureViolation

TWO_PI = 2.0 * np.pi

FIXED_RATE = "fixed-rate"
FIXED_AMPLITUDE = "fixed-amplitude"
SCHEDULES = (FIXED_RATE, FIXED_AMPLITUDE)


def chi_from_gamma(gamma: float, k: int) -> float:
    """Cone angle that makes a ``k``-fold loop accumulate geometric phase ``gamma``."""
    if k < 1 or int(k) != k:
        raise InvalidInputError(f"k must be a positive integer, got {k!r}")
    c = 1.0 - gamma / (k * np.pi)
    if not (-1.0 < c < 1.0):
        raise InvalidInputError(
            f"gamma={gamma!r} outside (0, 2k*pi) for k={k}: cos(chi)={c!r} not in (-1, 1)")
    return float(np.arccos(c))


# ---------------------------------------------------------------------------
# eta profiles


@dataclass(frozen=True)
class EtaProfile:
    """Monotone rotation-angle profile with ``eta(0) = 0`` and ``eta(tau) = 2 k pi``.

    ``peak_factor`` is max(d eta/dt) divided by its mean ``2 k pi / tau``; it
    sets the duration of the fixed-amplitude schedule.
    """

    name: str
    k: int
    tau: float
    _eta: Optional[Callable] = field(default=None, repr=False, compare=False)
    _eta_dot: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidInputError(f"tau must be positive, got {self.tau!r}")
        if self.name not in ("linear", "sine-ramp") and self._eta is None:
            raise InvalidInputError(f"unknown eta profile {self.name!r}")

    @property
    def total(self) -> float:
        return TWO_PI * self.k

    @property
    def peak_factor(self) -> float:
        return profile_peak_factor(self.name)

    def eta(self, t):
        t = np.asarray(t, dtype=float)
        if self._eta is not None:
            return self._eta(t)
        s = t / self.tau
        if self.name == "linear":
            return self.total * s
        return self.total * (s - np.sin(TWO_PI * s) / TWO_PI)

    def eta_dot(self, t):
        t = np.asarray(t, dtype=float)
        if self._eta_dot is not None:
            return self._eta_dot(t)
        if self._eta is not None:
            h = 1e-6 * self.tau
            return (self._eta(t + h) - self._eta(t - h)) / (2 * h)
        rate = self.total / self.tau
        if self.name == "linear":
            return rate * np.ones_like(t)
        return rate * (1.0 - np.cos(TWO_PI * t / self.tau))

    @classmethod
    def custom(cls, eta, tau, k, eta_dot=None, name="custom"):
        return cls(name=name, k=k, tau=tau, _eta=eta, _eta_dot=eta_dot)


def profile_peak_factor(name: str) -> float:
    return {"linear": 1.0, "sine-ramp": 2.0}.get(name, 1.0)


def loop_duration(k: int, chi: float, omega0: float, schedule: str = FIXED_AMPLITUDE,
                  profile: str = "linear") -> float:
    """Total time of a ``k``-fold loop.

    ``fixed-rate``: the mean rotation rate equals ``omega0``, so
    ``tau = 2 k pi / omega0``. ``fixed-amplitude``: the peak Rabi amplitude
    ``Omega = eta_dot sin(chi)`` equals ``omega0``, which shortens the loop by
    ``sin(chi)`` (times the profile's peak-to-mean ratio).
    """
    if omega0 <= 0:
        raise InvalidInputError("omega0 must be positive")
    if schedule == FIXED_RATE:
        return TWO_PI * k / omega0
    if schedule == FIXED_AMPLITUDE:
        return TWO_PI * k * profile_peak_factor(profile) * np.sin(chi) / omega0
    raise InvalidInputError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")


# ---------------------------------------------------------------------------
# paths and schedules


@dataclass(frozen=True)
class HolonomicPath:
    """Parameters of one constant-cone-angle holonomic loop."""

    theta: float
    phi: float
    gamma: float
    k: int
    tau: float
    profile: str = "linear"

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise InvalidInputError(f"theta={self.theta!r} outside [0, pi]")
        chi_from_gamma(self.gamma, self.k)
        if self.tau <= 0:
            raise InvalidInputError("tau must be positive")

    @classmethod
    def from_gate(cls, theta, gamma, phi=0.0, k=1, omega0=1.0,
                  schedule=FIXED_AMPLITUDE, profile="linear"):
        chi = chi_from_gamma(gamma, k)
        tau = loop_duration(k, chi, omega0, schedule, profile)
        return cls(theta=theta, phi=phi, gamma=gamma, k=k, tau=tau, profile=profile)

    @property
    def chi(self) -> float:
        return chi_from_gamma(self.gamma, self.k)

    @property
    def eta_profile(self) -> EtaProfile:
        return EtaProfile(self.profile, self.k, self.tau)

    def alpha(self, t):
        """Dynamical phase for constant chi: ``-eta(t) cos(chi) / 2``."""
        return -0.5 * self.eta_profile.eta(t) * np.cos(self.chi)


@dataclass
class PulseSchedule:
    """Sampled controls on ``[0, tau]``.

    ``omega`` is kept non-negative; any sign lives in ``phi1``.
    """

    t: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    phi1: np.ndarray
    xi: np.ndarray
    tau: float
    alpha: Optional[np.ndarray] = None
    singular_indices: tuple = ()

    def __post_init__(self):
        n = len(self.t)
        for name in ("omega", "delta", "phi1", "xi"):
            if len(getattr(self, name)) != n:
                raise InvalidInputError(f"{name} has {len(getattr(self, name))} samples, grid has {n}")
        if np.any(np.diff(self.t) <= 0):
            raise InvalidInputError("time grid must be strictly increasing")

    @property
    def alpha_tau(self) -> Optional[float]:
        return None if self.alpha is None else float(self.alpha[-1])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_s", "omega_rad_s", "delta_rad_s", "phi1_rad"])
        for row in zip(self.t, self.omega, self.delta, self.phi1):
            w.writerow([f"{float(x):.17g}" for x in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "PulseSchedule":
        rows = list(csv.reader(io.StringIO(text)))
        header = [h.strip() for h in rows[0]]
        if header != ["t_s", "omega_rad_s", "delta_rad_s", "phi1_rad"]:
            raise InvalidInputError(f"unexpected schedule header {header}")
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
        t, om, de, p1 = data.T
        return cls(t=t, omega=om, delta=de, phi1=p1, xi=np.full_like(t, np.nan), tau=float(t[-1]))


def _check_cyclic(profile: EtaProfile) -> None:
    end = float(profile.eta(profile.tau))
    start = float(profile.eta(0.0))
    tol = 1e-12 * max(1.0, profile.total)
    if abs(start) > tol or abs(end - profile.total) > tol:
        raise ConstraintViolation(
            f"eta profile is not cyclic: eta(0)={start!r}, eta(tau)={end!r}, "
            f"expected 0 and {profile.total!r}")


def synthesize_constant_chi(path: HolonomicPath, samples: int = 1001) -> PulseSchedule:
    """Controls for a constant cone angle: ``Omega = eta_dot sin chi``, ``Delta = eta_dot cos chi``."""
    if samples < 2:
        raise InvalidInputError("need at least two samples")
    prof = path.eta_profile
    _check_cyclic(prof)
    chi = path.chi
    t = np.linspace(0.0, path.tau, samples)
    rate = prof.eta_dot(t)
    return PulseSchedule(
        t=t,
        omega=rate * np.sin(chi),
        delta=rate * np.cos(chi),
        phi1=np.full(samples, float(path.phi)),
        xi=np.full(samples, np.pi / 2),
        tau=path.tau,
        alpha=path.alpha(t),
    )


def _derivative(f, df, t, tau):
    if df is not None:
        return np.asarray(df(t), dtype=float)
    h = 1e-5 * tau
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


def _fill_singular(values: np.ndarray, bad: np.ndarray) -> np.ndarray:
    if not bad.any():
        return values
    good = ~bad
    if not good.any():
        return np.full_like(values, np.pi / 2)
    idx = np.arange(len(values))
    out = values.copy()
    out[bad] = np.interp(idx[bad], idx[good], np.unwrap(values[good]))
    return out


def synthesize_general(eta, chi, phi: float, tau: float, samples: int = 2001,
                       eta_dot=None, chi_dot=None, convention: str = "half-angle") -> PulseSchedule:
    """Controls for time-dependent ``eta(t)`` and ``chi(t)``.

    With ``A = eta_dot sin(chi) + chi_dot cos(chi) sin(eta)`` and
    ``B = 2 chi_dot sin^2(eta/2)``::

        Omega = sqrt(A^2 + B^2)
        Delta = eta_dot cos(chi) - chi_dot sin(chi) sin(eta)
        xi    = atan2(A, B),  phi1 = phi + pi/2 - xi
        alpha_dot = (chi_dot sin(chi) sin(eta) - eta_dot cos(chi)) / 2

    ``convention="printed"`` swaps the half angles in ``B`` for full angles
    (``2 chi_dot sin^2(eta)``); that variant does not generate the intended
    propagator when ``chi`` varies and is kept only so the two can be
    compared.
    """
    if convention not in ("half-angle", "printed"):
        raise InvalidInputError(f"unknown convention {convention!r}")
    t = np.linspace(0.0, tau, samples)
    e = np.asarray(eta(t), dtype=float)
    c = np.asarray(chi(t), dtype=float) * np.ones_like(t)
    ed = _derivative(eta, eta_dot, t, tau)
    cd = _derivative(chi, chi_dot, t, tau) * np.ones_like(t)
    a_term = ed * np.sin(c) + cd * np.cos(c) * np.sin(e)
    if convention == "half-angle":
        b_term = 2.0 * cd * np.sin(e / 2) ** 2
    else:
        b_term = 2.0 * cd * np.sin(e) ** 2
    omega = np.hypot(a_term, b_term)
    delta = ed * np.cos(c) - cd * np.sin(c) * np.sin(e)
    scale = max(float(np.max(np.abs(ed))), 1e-300)
    bad = (np.abs(a_term) <= 1e-12 * scale) & (np.abs(b_term) <= 1e-12 * scale)
    xi = _fill_singular(np.arctan2(a_term, b_term), bad)
    alpha_dot = 0.5 * (cd * np.sin(c) * np.sin(e) - ed * np.cos(c))
    alpha = cumulative_simpson(alpha_dot, x=t, initial=0.0)
    return PulseSchedule(
        t=t, omega=omega, delta=delta, phi1=phi + np.pi / 2 - xi, xi=xi, tau=tau,
        alpha=alpha, singular_indices=tuple(int(i) for i in np.flatnonzero(bad)),
    )


# ---------------------------------------------------------------------------
# propagator


def bright_dark_vectors(theta: float, phi: float):
    """Bright and dark states embedded in the three-level basis ``{|0>, |e>, |1>}``."""
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    bright = np.array([-s * np.exp(1j * phi), 0.0, c], dtype=complex)
    dark = np.array([c, 0.0, s * np.exp(-1j * phi)], dtype=complex)
    excited = np.array([0.0, 1.0, 0.0], dtype=complex)
    return bright, dark, excited


def cayley_klein(eta, chi, phase):
    eta = np.asarray(eta, dtype=float)
    a = np.cos(eta / 2) - 1j * np.sin(eta / 2) * np.cos(chi)
    b = -1j * np.sin(eta / 2) * np.sin(chi) * np.exp(-1j * phase)
    return a, b


def closed_form_propagator(theta: float, phi: float, eta, chi, alpha, ck_phase=None) -> np.ndarray:
    """Analytic propagator in the ``{|0>, |e>, |1>}`` basis.

    ``U = e^{i alpha}(a*|b><b| - b*|b><e| + b|e><b| + a|e><e|) + |d><d|``.
    ``eta``, ``chi`` and ``alpha`` may be arrays of equal length, giving a
    stack of shape ``(n, 3, 3)``. ``ck_phase`` is the phase of the
    Cayley-Klein parameter ``b`` (the laser phase ``phi1`` of a constant-chi
    loop); it defaults to ``phi``.
    """
    if ck_phase is None:
        ck_phase = phi
    scalar = np.ndim(eta) == 0 and np.ndim(chi) == 0 and np.ndim(alpha) == 0
    eta, chi, alpha = np.broadcast_arrays(np.atleast_1d(eta).astype(float),
                                          np.atleast_1d(chi).astype(float),
                                          np.atleast_1d(alpha).astype(float))
    a, b = cayley_klein(eta, chi, ck_phase)
    br, dk, ex = bright_dark_vectors(theta, phi)
    bb = np.outer(br, br.conj())
    be = np.outer(br, ex.conj())
    eb = np.outer(ex, br.conj())
    ee = np.outer(ex, ex.conj())
    dd = np.outer(dk, dk.conj())
    ph = np.exp(1j * alpha)[:, None, None]
    u = ph * (np.conj(a)[:, None, None] * bb - np.conj(b)[:, None, None] * be
              + b[:, None, None] * eb + a[:, None, None] * ee) + dd
    return u[0] if scalar else u


def path_propagator(path: HolonomicPath, t) -> np.ndarray:
    """Closed-form propagator of a constant-chi path at time(s) ``t``."""
    return closed_form_propagator(path.theta, path.phi, path.eta_profile.eta(t), path.chi, path.alpha(t))


# ---------------------------------------------------------------------------
# finite-difference oracle


def _unit_propagator_be(eta, chi, ck_phase):
    """SU(2) block ``[[a*, -b*], [b, a]]`` in the (bright, excited) basis."""
    a, b = cayley_klein(eta, chi, ck_phase)
    v = np.empty(np.shape(a) + (2, 2), dtype=complex)
    v[..., 0, 0] = np.conj(a)
    v[..., 0, 1] = -np.conj(b)
    v[..., 1, 0] = b
    v[..., 1, 1] = a
    return v


def derive_controls_numerically(eta, chi, theta: float, phi: float, grid,
                                structure_tol: float = 1e-6, return_hamiltonian: bool = False):
    """Recover controls from ``H = i dU/dt U^dag`` with ``alpha`` left free.

    The SU(2) part ``V`` of the propagator is differentiated with a
    five-point central stencil. Writing ``h = i dV/dt V^dag``, the dynamical
    phase that keeps ``<b|H|b> = 0`` is ``alpha_dot = h_bb``, after which
    ``Delta = h_ee - h_bb`` and ``Omega e^{i phi1} = 2 h_be``. Nothing from
    the analytic control formulas is used.

    The full 3x3 Hamiltonian is also assembled; any element outside the
    Lambda pattern larger than ``structure_tol * max|H|`` raises
    :class:`StructureViolation`.
    """
    grid = np.asarray(grid, dtype=float)
    tau = float(grid[-1] - grid[0])
    h = 1e-4 * tau / max(len(grid), 1) if len(grid) > 1 else 1e-6

    def v_at(t):
        return _unit_propagator_be(np.asarray(eta(t), dtype=float), np.asarray(chi(t), dtype=float), phi)

    v0 = v_at(grid)
    vdot = (-v_at(grid + 2 * h) + 8 * v_at(grid + h) - 8 * v_at(grid - h) + v_at(grid - 2 * h)) / (12 * h)
    hv = 1j * vdot @ np.conj(np.swapaxes(v0, -1, -2))
    alpha_dot = hv[:, 0, 0].real
    delta = (hv[:, 1, 1] - hv[:, 0, 0]).real
    coupling = 2.0 * hv[:, 0, 1]
    omega = np.abs(coupling)
    phi1 = np.angle(coupling)
    alpha = cumulative_simpson(alpha_dot, x=grid, initial=0.0) if len(grid) > 2 else np.zeros_like(grid)

    # assemble H in {|0>, |e>, |1>} from the bright/excited block
    br, dk, ex = bright_dark_vectors(theta, phi)
    basis = np.stack([br, ex, dk], axis=1)  # columns: b, e, d
    hblock = np.zeros((len(grid), 3, 3), dtype=complex)
    hblock[:, :2, :2] = hv
    hblock[:, 0, 0] -= alpha_dot
    hblock[:, 1, 1] -= alpha_dot
    hfull = basis @ hblock @ basis.conj().T
    lam = lambda_matrix(omega, delta, phi1, theta, phi)
    resid = np.max(np.abs(hfull - lam), axis=(1, 2))
    scale = max(float(np.max(np.abs(hfull))), 1e-300)
    worst = int(np.argmax(resid))
    if resid[worst] > structure_tol * scale:
        raise StructureViolation(
            f"derived Hamiltonian leaves the Lambda pattern at sample {worst} "
            f"(residual {resid[worst]:.3e})", residual=float(resid[worst]), index=worst)
    sched = PulseSchedule(t=grid, omega=omega, delta=delta, phi1=phi1,
                          xi=np.mod(phi + np.pi / 2 - phi1 + np.pi, TWO_PI) - np.pi,
                          tau=tau, alpha=alpha)
    if return_hamiltonian:
        return sched, hfull
    return sched


def lambda_matrix(omega, delta, phi1, theta: float, phi: float) -> np.ndarray:
    """``H = (Omega/2)(e^{i phi1}|b><e| + h.c.) + Delta |e><e|`` in ``{|0>, |e>, |1>}``.

    Vectorised over equal-length ``omega``, ``delta``, ``phi1`` arrays.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    phi1 = np.atleast_1d(np.asarray(phi1, dtype=float))
    omega, delta, phi1 = np.broadcast_arrays(omega, delta, phi1)
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    n = omega.shape[0]
    hm = np.zeros((n, 3, 3), dtype=complex)
    # leg amplitudes Omega_0 = -Omega sin(theta/2) at phase phi + phi1,
    # Omega_1 = -Omega cos(theta/2) at phase phi1 + pi; their sum is Omega e^{i phi1}|b>
    c0 = 0.5 * (-omega * s) * np.exp(1j * (phi + phi1))
    c1 = 0.5 * (-omega * c) * np.exp(1j * (phi1 + np.pi))
    hm[:, 0, 1] = c0
    hm[:, 1, 0] = np.conj(c0)
    hm[:, 2, 1] = c1
    hm[:, 1, 2] = np.conj(c1)
    hm[:, 1, 1] = delta
    return hm


def holonomic_condition(eta_tau: float, chi_tau: float, tol: float = 1e-10):
    """``|sin(eta/2) sin(chi)| <= tol`` at the end of the loop."""
    f_eta = math.sin(eta_tau / 2)
    f_chi = math.sin(chi_tau)
    value = abs(f_eta * f_chi)
    report = {"sin_half_eta": f_eta, "sin_chi": f_chi, "product": value, "tol": tol}
    return value <= tol, report


def check_holonomic_condition(path: HolonomicPath, tol: float = 1e-10):
    return holonomic_condition(float(path.eta_profile.eta(path.tau)), path.chi, tol)
