"""Time series of density matrices with per-node CPTP diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linops import DEFAULT_TOL, Tolerances, state_errors


def uniform_grid(t_max: float, steps: int) -> np.ndarray:
    if steps < 1 or not t_max > 0:
        raise ValueError("grid needs t_max > 0 and steps >= 1")
    return np.linspace(0.0, float(t_max), int(steps) + 1)


def check_grid(times, uniform: bool = False) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or times[0] != 0.0:
        raise ValueError("time grid must be a 1-d array starting at 0")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if uniform and times.size > 2:
        dt = np.diff(times)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * max(1.0, dt[0]):
            raise ValueError("time grid must be uniform")
    return times


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n_times, d, d)
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.ndim != 3 or self.states.shape[0] != self.times.size:
            raise ValueError("states must have shape (len(times), d, d)")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def diagnostics(self) -> np.ndarray:
        """Array of shape (n, 3): trace error, hermiticity error, min eigenvalue."""
        return np.array([state_errors(r) for r in self.states])

    def population(self, i: int) -> np.ndarray:
        return self.states[:, i, i].real.copy()


@dataclass
class CPTPReport:
    trace_err: np.ndarray
    herm_err: np.ndarray
    eig_min: np.ndarray
    tol: Tolerances = DEFAULT_TOL
    breach_factor: float = 10.0

    @property
    def max_trace_err(self) -> float:
        return float(np.max(self.trace_err))

    @property
    def max_herm_err(self) -> float:
        return float(np.max(self.herm_err))

    @property
    def min_eig(self) -> float:
        return float(np.min(self.eig_min))

    def within(self, tol: Tolerances | None = None) -> bool:
        tol = tol or self.tol
        return (
            self.max_trace_err <= tol.trace
            and self.max_herm_err <= tol.herm
            and self.min_eig >= -tol.psd
        )

    def first_breach(self, factor: float | None = None) -> int | None:
        """Index of the first node outside ``factor`` times the tolerances."""
        tol = self.tol.scaled(self.breach_factor if factor is None else factor)
        bad = (
            (self.trace_err > tol.trace)
            | (self.herm_err > tol.herm)
            | (self.eig_min < -tol.psd)
        )
        idx = np.flatnonzero(bad)
        return int(idx[0]) if idx.size else None

    @property
    def failed(self) -> bool:
        return self.first_breach() is not None

    def summary(self) -> dict:
        breach = self.first_breach()
        return {
            "max_trace_err": self.max_trace_err,
            "max_herm_err": self.max_herm_err,
            "min_eig": self.min_eig,
            "within_tolerance": self.within(),
            "failed": breach is not None,
            "breach_node": breach,
        }


def cptp_report(traj: Trajectory, tol: Tolerances = DEFAULT_TOL) -> CPTPReport:
    d = traj.diagnostics()
    return CPTPReport(d[:, 0], d[:, 1], d[:, 2], tol=tol)
