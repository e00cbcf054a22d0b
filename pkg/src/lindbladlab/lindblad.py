"""Lindblad propagation.

    drho/dt = -(i/hbar) [H, rho] + sum_j gamma_j (L_j rho L_j^dag - 1/2 {L_j^dag L_j, rho})

Superoperators use column-stacking vectorization, ``vec(A rho B) = (B^T x A) vec(rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linops import (
    DEFAULT_TOL,
    SIGMA_MINUS,
    SIGMA_Z,
    Tolerances,
    as_operator,
    dag,
    herm_error,
    identity,
    unvec,
    validate_density,
    vec,
)
from .model import from_interaction_picture
from .trajectory import CPTPReport, Trajectory, check_grid, cptp_report  # noqa: F401

STEP_FACTOR = 0.05


@dataclass
class LindbladTerm:
    l: np.ndarray
    gamma: float
    epsilon: float = 0.0  # frequency shift carried as hbar * epsilon/2 * L^dag L

    def __post_init__(self):
        self.l = as_operator(self.l, "lindblad operator")
        if not self.gamma >= 0:
            raise ValueError("rates must be non-negative")


@dataclass
class LindbladModel:
    h_s: np.ndarray
    terms: list = field(default_factory=list)
    hbar: float = 1.0

    def __post_init__(self):
        self.h_s = as_operator(self.h_s, "h_s")
        if herm_error(self.h_s) > 1e-12:
            raise ValueError("h_s must be Hermitian")
        self.terms = [t if isinstance(t, LindbladTerm) else LindbladTerm(*t) for t in self.terms]
        for t in self.terms:
            if t.l.shape != self.h_s.shape:
                raise ValueError("Lindblad operator dimension differs from h_s")

    @property
    def dim(self) -> int:
        return self.h_s.shape[0]

    def effective_hamiltonian(self) -> np.ndarray:
        """``h_s`` plus the shifts ``hbar * epsilon_j / 2 * L_j^dag L_j``."""
        h = self.h_s.copy()
        for t in self.terms:
            if t.epsilon:
                h = h + self.hbar * 0.5 * t.epsilon * (dag(t.l) @ t.l)
        return h


def dissipator(l, rho) -> np.ndarray:
    l = np.asarray(l, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    ld = dag(l)
    ldl = ld @ l
    return l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)


def lindblad_rhs(model: LindbladModel, rho) -> np.ndarray:
    h = model.effective_hamiltonian()
    out = (-1j / model.hbar) * (h @ rho - rho @ h)
    for t in model.terms:
        out = out + t.gamma * dissipator(t.l, rho)
    return out


def generator_superop(model: LindbladModel) -> np.ndarray:
    """Matrix of the generator acting on column-stacked ``vec(rho)``."""
    d = model.dim
    eye = identity(d)
    h = model.effective_hamiltonian()
    gen = (-1j / model.hbar) * (np.kron(eye, h) - np.kron(h.T, eye))
    for t in model.terms:
        ldl = dag(t.l) @ t.l
        gen = gen + t.gamma * (
            np.kron(t.l.conj(), t.l) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)
        )
    return gen


def mandated_dt(model: LindbladModel) -> float:
    """Largest RK4 step allowed by default: ``0.05 / max(|H|/hbar, sum gamma |L|^2)``."""
    rate_h = np.linalg.norm(model.h_s, 2) / model.hbar
    rate_d = sum(t.gamma * np.linalg.norm(t.l, 2) ** 2 for t in model.terms)
    scale = max(rate_h, rate_d)
    return math.inf if scale == 0 else STEP_FACTOR / scale


def rk4_step(f, rho, dt):
    k1 = f(rho)
    k2 = f(rho + 0.5 * dt * k1)
    k3 = f(rho + 0.5 * dt * k2)
    k4 = f(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_substeps(interval: float, dt_max: float, substeps: int | None,
                  allow_coarse: bool) -> int:
    if substeps is None:
        return max(1, math.ceil(interval / dt_max * (1 - 1e-12)))
    if interval / substeps > dt_max * (1 + 1e-12) and not allow_coarse:
        raise ValueError(
            f"RK4 step {interval / substeps:.3g} exceeds mandated {dt_max:.3g}; "
            "pass allow_coarse=True to override"
        )
    return substeps


def propagate(model: LindbladModel, rho0, times, method: str = "rk4", *,
              substeps: int | None = None, allow_coarse: bool = False,
              tol: Tolerances = DEFAULT_TOL, label: str = "lindblad") -> Trajectory:
    """Propagate ``rho0`` over ``times``.

    ``method="rk4"`` integrates the master equation with fixed steps (uniform
    grid; ``substeps`` RK4 steps per grid interval, chosen from the mandated
    step if omitted). ``method="expm"`` exponentiates the superoperator.
    The returned trajectory carries a CPTP summary in ``meta["cptp"]``; a
    breach beyond ten times the tolerances marks the run failed.
    """
    rho0 = validate_density(rho0, tol, "rho0")
    if rho0.shape != model.h_s.shape:
        raise ValueError("rho0 dimension differs from the model")
    if method == "rk4":
        times = check_grid(times, uniform=True)
        states = np.empty((times.size,) + rho0.shape, dtype=complex)
        states[0] = rho0
        if times.size > 1:
            interval = times[1] - times[0]
            n = _rk4_substeps(interval, mandated_dt(model), substeps, allow_coarse)
            h = interval / n
            rho = rho0
            f = lambda r: lindblad_rhs(model, r)  # noqa: E731
            for i in range(1, times.size):
                for _ in range(n):
                    rho = rk4_step(f, rho, h)
                states[i] = rho
    elif method == "expm":
        times = check_grid(times)
        gen = generator_superop(model)
        v0 = vec(rho0)
        states = np.empty((times.size,) + rho0.shape, dtype=complex)
        dts = np.diff(times)
        uniform = dts.size > 0 and np.allclose(dts, dts[0], rtol=1e-12, atol=0)
        if uniform:
            step = scipy.linalg.expm(gen * dts[0])
            v = v0
            states[0] = rho0
            for i in range(1, times.size):
                v = step @ v
                states[i] = unvec(v, model.dim)
        else:
            for i, t in enumerate(times):
                states[i] = unvec(scipy.linalg.expm(gen * t) @ v0, model.dim)
    else:
        raise ValueError(f"unknown method {method!r}")
    traj = Trajectory(times, states, label=label, meta={"method": method})
    report = cptp_report(traj, tol)
    traj.meta["cptp"] = report.summary()
    return traj


def propagate_interaction_picture(model: LindbladModel, rho0, times, method: str = "expm",
                                  **kw) -> Trajectory:
    """Propagate the dissipative part alone, then return each node to the
    Schrodinger picture with ``exp(-i h_s t/hbar)``.

    Matches :func:`propagate` only when every ``L_j`` commutes with ``h_s``.
    """
    bare = LindbladModel(np.zeros_like(model.h_s), model.terms, model.hbar)
    traj = propagate(bare, rho0, times, method, **kw)
    back = np.array([
        from_interaction_picture(r, model.h_s, t, model.hbar)
        for t, r in zip(traj.times, traj.states)
    ])
    return Trajectory(traj.times, back, label="lindblad_interaction", meta=traj.meta)


def analytic_two_level(kind: str, omega0: float, gamma: float, rho0, t: float) -> np.ndarray:
    """Closed-form solutions for ``H = (omega0/2) sigma_z`` (hbar = 1) with a
    single Lindblad term, basis ordered ``{|e>, |g>}``.

    ``dephasing`` uses ``L = sigma_z``; ``damping`` uses ``L = sigma_minus``.
    """
    rho0 = as_operator(rho0, "rho0")
    if rho0.shape != (2, 2):
        raise ValueError("analytic_two_level needs a 2x2 state")
    out = rho0.copy()
    rot = np.exp(-1j * omega0 * t)
    if kind == "dephasing":
        decay = np.exp(-2.0 * gamma * t)
    elif kind == "damping":
        pe = rho0[0, 0] * np.exp(-gamma * t)
        out[0, 0] = pe
        out[1, 1] = 1.0 - pe
        decay = np.exp(-0.5 * gamma * t)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    out[0, 1] = rho0[0, 1] * decay * rot
    out[1, 0] = rho0[1, 0] * decay * np.conj(rot)
    return out


def two_level_model(kind: str, omega0: float, gamma: float) -> LindbladModel:
    ops = {"dephasing": SIGMA_Z, "damping": SIGMA_MINUS}
    if kind not in ops:
        raise ValueError(f"unknown kind {kind!r}")
    l = ops[kind]
    return LindbladModel(0.5 * omega0 * SIGMA_Z, [LindbladTerm(l, gamma)])
