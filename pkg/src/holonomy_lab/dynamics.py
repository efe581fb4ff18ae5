"""Closed- and open-system propagation for small time-dependent models.

Closed systems are stepped with the piecewise midpoint exponential
``exp(-i H(t_mid) dt)``. Open systems integrate the Lindblad equation

    drho/dt = -i[H, rho] + sum_l (A_l rho A_l^dag - {A_l^dag A_l, rho}/2),
    A_l = sqrt(rate_l) * operator_l

with fixed-step RK4 on the row-major vectorised density matrix. Because the
equation is linear, each RK4 step is a fixed matrix acting on ``vec(rho)``;
we build those step matrices explicitly so that many initial states (or the
whole superoperator) are propagated for the price of one trajectory, and a
time-independent generator needs only matrix powers.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .controls import PulseSchedule, lambda_matrix
from .errors import InvalidInputError
from .linalg import dagger, expm_hermitian_batch

TWO_PI = 2.0 * np.pi
NORM_FAIL = 1e-8
TRACE_FAIL = 1e-7
POSITIVITY_FAIL = -1e-6
_CHUNK = 20000


@dataclass
class HamiltonianModel:
    """Time-dependent Hermitian generator.

    ``func`` maps a 1-d array of times to a stack of shape ``(n, dim, dim)``.
    ``rate_bound`` is an upper estimate of the fastest angular frequency in
    the model and sets the default step size.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    label: str = ""
    static: bool = False
    rate_bound: Optional[float] = None
    t_range: Optional[tuple] = None

    def evaluate(self, t):
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if self.t_range is not None:
            lo, hi = self.t_range
            slack = 1e-9 * max(abs(hi - lo), 1e-300)
            if np.any(ts < lo - slack) or np.any(ts > hi + slack):
                raise InvalidInputError(f"time outside model range [{lo}, {hi}]")
        hs = self.func(ts)
        return hs[0] if scalar else hs

    def estimate_rate(self, grid) -> float:
        if self.rate_bound is not None:
            return float(self.rate_bound)
        probe = np.linspace(grid[0], grid[-1], 64)
        w = np.linalg.eigvalsh(self.evaluate(probe))
        return float(np.max(np.abs(w), initial=0.0))


@dataclass(frozen=True)
class LindbladChannel:
    operator: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise InvalidInputError(f"rate must be non-negative, got {self.rate!r}")

    @property
    def collapse(self) -> np.ndarray:
        return np.sqrt(self.rate) * np.asarray(self.operator, dtype=complex)


@dataclass
class PropagationResult:
    grid: np.ndarray
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    failed: bool = False
    fail_index: Optional[int] = None
    message: str = ""

    def populations(self) -> np.ndarray:
        s = self.states
        if s.ndim == 2:
            return np.abs(s) ** 2
        return np.real(np.diagonal(s, axis1=-2, axis2=-1))

    def to_csv(self, labels: Optional[Sequence[str]] = None, path=None) -> str:
        pops = self.populations()
        if pops.ndim != 2:
            raise InvalidInputError("CSV export needs a single trajectory")
        if labels is None:
            labels = [str(i) for i in range(pops.shape[1])]
        dev = self.diagnostics.get("trace_dev", self.diagnostics.get("norm_dev"))
        dev = np.zeros(len(self.grid)) if dev is None else dev
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_s"] + [f"pop_{x}" for x in labels] + ["trace_dev"])
        for t, row, d in zip(self.grid, pops, dev):
            w.writerow([f"{t:.12g}"] + [f"{p:.12g}" for p in row] + [f"{d:.12g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


# ---------------------------------------------------------------------------
# model builders


def lambda_hamiltonian(schedule: PulseSchedule, theta: float, phi: float) -> HamiltonianModel:
    """Lambda-system Hamiltonian driven by ``schedule``; controls are linearly interpolated."""
    t = np.asarray(schedule.t, dtype=float)
    om = np.asarray(schedule.omega, dtype=float)
    de = np.asarray(schedule.delta, dtype=float)
    p1 = np.unwrap(np.asarray(schedule.phi1, dtype=float))
    static = bool(np.ptp(om) == 0 and np.ptp(de) == 0 and np.ptp(p1) == 0)

    if static:
        h0 = lambda_matrix(om[0], de[0], p1[0], theta, phi)[0]

        def func(ts):
            return np.broadcast_to(h0, (len(ts), 3, 3)).copy()
    else:
        def func(ts):
            return lambda_matrix(np.interp(ts, t, om), np.interp(ts, t, de),
                                 np.interp(ts, t, p1), theta, phi)

    rate = float(max(np.max(np.abs(om)), np.max(np.abs(de)), 1e-300))
    return HamiltonianModel(dim=3, func=func, label="lambda", static=static,
                            rate_bound=rate, t_range=(float(t[0]), float(t[-1])))


def constant_model(h, label: str = "constant") -> HamiltonianModel:
    h = np.asarray(h, dtype=complex)
    w = np.linalg.eigvalsh(0.5 * (h + dagger(h)))
    return HamiltonianModel(
        dim=h.shape[0], func=lambda ts: np.broadcast_to(h, (len(ts),) + h.shape).copy(),
        label=label, static=True, rate_bound=float(max(np.max(np.abs(w)), 1e-300)))


def lambda_channels(gamma1: float, gamma2: float, gamma_phi: float):
    """Decay ``|e> -> |0>`` (gamma1), ``|e> -> |1>`` (gamma2), and orbital dephasing.

    The dephasing operator ``|e><e|`` carries rate ``2 * gamma_phi``, which
    damps the ``e``-coherences at ``gamma_phi``.
    """
    def ket_bra(i, j):
        m = np.zeros((3, 3), dtype=complex)
        m[i, j] = 1.0
        return m

    return [
        LindbladChannel(ket_bra(0, 1), gamma1, "decay_e0"),
        LindbladChannel(ket_bra(2, 1), gamma2, "decay_e1"),
        LindbladChannel(ket_bra(1, 1), 2.0 * gamma_phi, "dephasing_e"),
    ]


def nv_operator(m: int, n: int) -> np.ndarray:
    """``|m><n|`` for one emitter in the ordering ``{|0>, |e>, |1>}`` (indices 0, 1, 2)."""
    op = np.zeros((3, 3), dtype=complex)
    op[m, n] = 1.0
    return op


NV_INDEX = {"0": 0, "e": 1, "1": 2}


def two_nv_operators(n_max: int):
    nc = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, nc)), 1).astype(complex)
    i3, ic = np.eye(3), np.eye(nc)

    def on1(op):
        return np.kron(np.kron(op, ic), i3)

    def on2(op):
        return np.kron(np.kron(i3, ic), op)

    return {
        "a": np.kron(np.kron(i3, a), i3),
        "n": np.kron(np.kron(i3, a.conj().T @ a), i3),
        "sigma": (lambda k, m, n: (on1 if k == 1 else on2)(nv_operator(NV_INDEX[m], NV_INDEX[n]))),
    }


def two_nv_cavity_hamiltonian(params) -> HamiltonianModel:
    """Two emitters sharing one cavity mode, ordering ``NV1 (x) cavity (x) NV2``.

    ``H(t) = sum_k [(G_k a s_{e0,k} + (-1)^k Omega_k s_{e1,k}) e^{i delta t} + h.c.
    + Delta_k s_{11,k}]``. ``params`` needs ``G1, G2, Omega1, Omega2, delta,
    n_max`` and either ``Delta`` or per-emitter ``Delta1``/``Delta2``.
    """
    n_max = int(params.n_max)
    if n_max < 1 or n_max > 5:
        raise InvalidInputError(f"n_max must be in [1, 5], got {n_max}")
    ops = two_nv_operators(n_max)
    a, sig = ops["a"], ops["sigma"]
    deltas = (getattr(params, "Delta1", None), getattr(params, "Delta2", None))
    deltas = tuple(params.Delta if d is None else d for d in deltas)
    x = np.zeros_like(a)
    static = np.zeros_like(a)
    for k, g, om in ((1, params.G1, params.Omega1), (2, params.G2, params.Omega2)):
        x = x + g * (a @ sig(k, "e", "0")) + (-1) ** k * om * sig(k, "e", "1")
        static = static + deltas[k - 1] * sig(k, "1", "1")
    xd = x.conj().T
    det = float(params.delta)

    def func(ts):
        ph = np.exp(1j * det * ts)[:, None, None]
        return x[None] * ph + xd[None] * np.conj(ph) + static[None]

    bound = abs(det) + 2 * (max(abs(params.G1), abs(params.G2)) * np.sqrt(n_max)
                            + max(abs(params.Omega1), abs(params.Omega2))) + max(abs(d) for d in deltas)
    return HamiltonianModel(dim=a.shape[0], func=func, label="two-nv-cavity",
                            static=(det == 0.0), rate_bound=float(bound))


# ---------------------------------------------------------------------------
# stepping


def _substeps(grid: np.ndarray, max_step: float) -> np.ndarray:
    dts = np.diff(grid)
    return np.maximum(1, np.ceil(dts / max_step - 1e-9).astype(int))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise InvalidInputError("grid needs at least two times")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("grid must be strictly increasing")
    return grid


def _evolve_closed(model: HamiltonianModel, y0: np.ndarray, grid: np.ndarray, max_step: float):
    """Apply midpoint-exponential steps to the columns of ``y0``; returns (n, d, m)."""
    nsub = _substeps(grid, max_step)
    out = np.empty((len(grid),) + y0.shape, dtype=complex)
    out[0] = y0
    y = y0.copy()
    if model.static:
        h = model.evaluate(grid[:1])
        cache = {}
        for i, n in enumerate(nsub):
            dt = grid[i + 1] - grid[i]
            key = round(dt, 300)
            if key not in cache:
                cache[key] = expm_hermitian_batch(h, -dt)[0]
            y = cache[key] @ y
            out[i + 1] = y
        return out
    # time-dependent: collect midpoints, exponentiate in chunks
    starts = np.repeat(grid[:-1], nsub)
    widths = np.repeat(np.diff(grid) / nsub, nsub)
    offsets = np.concatenate([np.arange(n) for n in nsub])
    mids = starts + (offsets + 0.5) * widths
    bounds = np.cumsum(nsub)
    step = 0
    interval = 0
    for lo in range(0, len(mids), _CHUNK):
        hi = min(lo + _CHUNK, len(mids))
        us = expm_hermitian_batch(model.evaluate(mids[lo:hi]), -widths[lo:hi])
        for u in us:
            y = u @ y
            step += 1
            while interval < len(bounds) and step == bounds[interval]:
                out[interval + 1] = y
                interval += 1
    return out


def propagate_unitary(model: HamiltonianModel, grid, steps_per_period: float = 200,
                      max_step: Optional[float] = None) -> np.ndarray:
    """Propagator ``U(t_i, t_0)`` at each grid time, shape ``(n, d, d)``."""
    grid = _check_grid(grid)
    if max_step is None:
        max_step = TWO_PI / (steps_per_period * max(model.estimate_rate(grid), 1e-300))
    return _evolve_closed(model, np.eye(model.dim, dtype=complex), grid, max_step)


def propagate_schrodinger(model: HamiltonianModel, psi0, grid, steps_per_period: float = 200,
                          max_step: Optional[float] = None) -> PropagationResult:
    grid = _check_grid(grid)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (model.dim,):
        raise InvalidInputError(f"state has shape {psi0.shape}, model dim is {model.dim}")
    if abs(np.vdot(psi0, psi0).real - 1.0) > 1e-10:
        raise InvalidInputError("initial state is not normalised")
    if max_step is None:
        max_step = TWO_PI / (steps_per_period * max(model.estimate_rate(grid), 1e-300))
    states = _evolve_closed(model, psi0[:, None], grid, max_step)[:, :, 0]
    norm_dev = np.abs(np.sum(np.abs(states) ** 2, axis=1) - 1.0)
    res = PropagationResult(grid=grid, states=states, diagnostics={"norm_dev": norm_dev})
    bad = np.flatnonzero(norm_dev > NORM_FAIL)
    if bad.size:
        res.failed, res.fail_index = True, int(bad[0])
        res.message = f"norm drift {norm_dev[bad[0]]:.3e} at sample {bad[0]}"
    return res


def liouvillian(hs, channels: Sequence[LindbladChannel]) -> np.ndarray:
    """Row-major vectorised Lindblad generator; ``hs`` may be a stack (n, d, d)."""
    hs = np.asarray(hs, dtype=complex)
    single = hs.ndim == 2
    hs = np.atleast_3d(hs) if not single else hs[None]
    d = hs.shape[-1]
    eye = np.eye(d)
    coh = (np.einsum("nij,kl->nikjl", hs, eye) - np.einsum("ij,nlk->nikjl", eye, hs)).reshape(-1, d * d, d * d)
    gen = -1j * coh + dissipator(channels, d)[None]
    return gen[0] if single else gen


def dissipator(channels: Sequence[LindbladChannel], d: int) -> np.ndarray:
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for ch in channels:
        a = ch.collapse
        if a.shape != (d, d):
            raise InvalidInputError(f"channel {ch.label!r} has shape {a.shape}, model dim is {d}")
        ada = a.conj().T @ a
        out += np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T)
    return out


def _rk4_step_matrix(l1, l2, l3, h):
    """Step matrix of classic RK4 for ``y' = L(t) y`` with L at t, t+h/2 (twice), t+h."""
    eye = np.eye(l1.shape[-1])
    k1 = l1
    k2 = l2 @ (eye + 0.5 * h * k1)
    k3 = l2 @ (eye + 0.5 * h * k2)
    k4 = l3 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def lindblad_step_size(model: HamiltonianModel, channels, grid, steps_per_period: float = 50) -> float:
    """``min(2 pi / (steps_per_period * max(rate, total decay)), span / 1000)``."""
    total = sum(ch.rate for ch in channels)
    rate = max(model.estimate_rate(grid), total, 1e-300)
    return min(TWO_PI / (steps_per_period * rate), (grid[-1] - grid[0]) / 1000.0)


def _evolve_open(model, channels, y0, grid, max_step):
    nsub = _substeps(grid, max_step)
    out = np.empty((len(grid),) + y0.shape, dtype=complex)
    out[0] = y0
    y = y0.copy()
    if model.static:
        gen = liouvillian(model.evaluate(grid[0]), channels)
        cache = {}
        for i, n in enumerate(nsub):
            h = (grid[i + 1] - grid[i]) / n
            key = (int(n), round(h, 300))
            if key not in cache:
                cache[key] = np.linalg.matrix_power(_rk4_step_matrix(gen, gen, gen, h), int(n))
            y = cache[key] @ y
            out[i + 1] = y
        return out
    diss = dissipator(channels, model.dim)
    for i, n in enumerate(nsub):
        h = (grid[i + 1] - grid[i]) / n
        t0 = grid[i] + h * np.arange(n)
        for lo in range(0, n, _CHUNK):
            ts = t0[lo:lo + _CHUNK]
            l1 = liouvillian(model.evaluate(ts), []) + diss
            l2 = liouvillian(model.evaluate(ts + 0.5 * h), []) + diss
            l3 = liouvillian(model.evaluate(ts + h), []) + diss
            steps = _rk4_step_matrix(l1, l2, l3, h)
            for m in steps:
                y = m @ y
        out[i + 1] = y
    return out


def lindblad_propagator(model: HamiltonianModel, channels: Sequence[LindbladChannel], grid,
                        steps_per_period: float = 50, max_step: Optional[float] = None) -> np.ndarray:
    """Superoperators ``S(t_i)`` acting on row-major ``vec(rho0)``; shape ``(n, d^2, d^2)``."""
    grid = _check_grid(grid)
    if max_step is None:
        max_step = lindblad_step_size(model, channels, grid, steps_per_period)
    d2 = model.dim ** 2
    return _evolve_open(model, channels, np.eye(d2, dtype=complex), grid, max_step)


def density_diagnostics(rhos: np.ndarray) -> dict:
    """Trace deviation, Hermiticity error and smallest eigenvalue per leading index."""
    rhos = np.asarray(rhos)
    tr = np.real(np.trace(rhos, axis1=-2, axis2=-1))
    herm = np.max(np.abs(rhos - dagger(rhos)), axis=(-2, -1))
    sym = 0.5 * (rhos + dagger(rhos))
    min_eig = np.linalg.eigvalsh(sym)[..., 0]
    return {"trace_dev": np.abs(tr - 1.0), "herm_dev": herm, "min_eig": min_eig}


def apply_superoperator(superops: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Map initial density matrices (b, d, d) through superoperators (n, d^2, d^2)."""
    b, d, _ = rho0.shape
    vecs = rho0.reshape(b, d * d).T
    out = (superops @ vecs).transpose(0, 2, 1).reshape(superops.shape[0], b, d, d)
    return 0.5 * (out + dagger(out))


def propagate_lindblad(model: HamiltonianModel, channels: Sequence[LindbladChannel], rho0, grid,
                       steps_per_period: float = 50, max_step: Optional[float] = None) -> PropagationResult:
    """Integrate the master equation from ``rho0`` (shape (d, d) or a batch (b, d, d))."""
    grid = _check_grid(grid)
    rho0 = np.asarray(rho0, dtype=complex)
    single = rho0.ndim == 2
    batch = rho0[None] if single else rho0
    if batch.shape[1:] != (model.dim, model.dim):
        raise InvalidInputError(f"rho0 has shape {rho0.shape}, model dim is {model.dim}")
    init = density_diagnostics(batch)
    if np.max(init["trace_dev"]) > 1e-9 or np.min(init["min_eig"]) < -1e-12 or np.max(init["herm_dev"]) > 1e-12:
        raise InvalidInputError("rho0 is not a valid density matrix")
    if max_step is None:
        max_step = lindblad_step_size(model, channels, grid, steps_per_period)
    d = model.dim
    vecs = batch.reshape(len(batch), d * d).T
    raw = _evolve_open(model, channels, vecs, grid, max_step)
    states = raw.transpose(0, 2, 1).reshape(len(grid), len(batch), d, d)
    states = 0.5 * (states + dagger(states))
    diag = density_diagnostics(states)
    diagnostics = {
        "trace_dev": np.max(diag["trace_dev"], axis=1),
        "min_eig": np.min(diag["min_eig"], axis=1),
        "max_step": max_step,
        "steps": int(np.sum(_substeps(grid, max_step))),
    }
    res = PropagationResult(grid=grid, states=states[:, 0] if single else states, diagnostics=diagnostics)
    bad_pos = np.flatnonzero(diagnostics["min_eig"] < POSITIVITY_FAIL)
    bad_tr = np.flatnonzero(diagnostics["trace_dev"] > TRACE_FAIL)
    if bad_pos.size or bad_tr.size:
        first = int(min(list(bad_pos[:1]) + list(bad_tr[:1])))
        res.failed, res.fail_index = True, first
        res.message = (f"positivity violation at {bad_pos[:1].tolist()}, "
                       f"trace drift at {bad_tr[:1].tolist()}")
    return res
