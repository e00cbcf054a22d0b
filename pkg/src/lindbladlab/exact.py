"""Brute-force reference dynamics.

The composite system+bath state is propagated unitarily with the full
Hamiltonian and the bath is traced out afterwards. Nothing here is
approximate beyond the Fock truncation, so these trajectories are the
ground truth the master equations are compared against.
"""
from __future__ import annotations

import numpy as np

from .bathcorr import BathSpec
from .fock import FockSpace, build_bath_ops, number_op  # noqa: F401  (re-exported)
from .linops import (
    MAX_DIM,
    CompositeDims,
    DEFAULT_TOL,
    SIGMA_MINUS,
    Tolerances,
    as_operator,
    dag,
    kron,
    partial_trace_b,
    validate_density,
)
from .model import CompositeModel, SystemSpec, composite_from_bath
from .trajectory import Trajectory, check_grid


def product_initial_state(rho_s, space: FockSpace) -> np.ndarray:
    """``rho_S(0) x |vac><vac|``."""
    return kron(rho_s, space.vacuum_dm())


def _propagate_hermitian(h: np.ndarray, rho0: np.ndarray, times: np.ndarray,
                         hbar: float) -> np.ndarray:
    # one eigendecomposition serves every node: U(t) = V exp(-i E t/hbar) V^dag
    e, v = np.linalg.eigh(h)
    rho_eig = dag(v) @ rho0 @ v
    out = np.empty((times.size,) + rho0.shape, dtype=complex)
    for i, t in enumerate(times):
        ph = np.exp(-1j * e * t / hbar)
        out[i] = v @ (ph[:, None] * rho_eig * ph.conj()[None, :]) @ dag(v)
    return out


def evolve_exact(model: CompositeModel, rho0, times) -> Trajectory:
    """``rho(t) = U(t) rho0 U(t)^dag`` on the composite space at every grid node."""
    times = check_grid(times)
    h = model.h_total
    if h.shape[0] > MAX_DIM:
        raise ValueError(f"composite dimension {h.shape[0]} exceeds cap {MAX_DIM}")
    rho0 = validate_density(rho0, name="rho0")
    if rho0.shape != h.shape:
        raise ValueError("rho0 does not live on the composite space")
    states = _propagate_hermitian(h, rho0, times, model.sys.hbar)
    return Trajectory(times, states, label="exact_composite")


def reduced_trajectory(traj: Trajectory, dims: CompositeDims, label: str = "exact") -> Trajectory:
    if traj.dim != dims.total:
        raise ValueError(f"trajectory dimension {traj.dim} != {dims.dim_s} x {dims.dim_b}")
    ds, db = dims
    red = np.trace(traj.states.reshape(-1, ds, db, ds, db), axis1=2, axis2=4)
    return Trajectory(traj.times, red, label=label, meta=dict(traj.meta))


def run_exact(sys: SystemSpec, bath: BathSpec, rho_s0, times) -> Trajectory:
    """Reduced system trajectory from ``rho_S(0) x vacuum`` under the full model."""
    model = composite_from_bath(sys, bath)
    rho0 = product_initial_state(as_operator(rho_s0, "rho_s0"), bath.space)
    full = evolve_exact(model, rho0, times)
    return reduced_trajectory(full, model.dims)


def single_excitation_hamiltonian(bath: BathSpec, alpha: float = 1.0) -> np.ndarray:
    """Block of ``H / hbar`` on span{|e, vac>, |g, 1_k>}."""
    m = bath.m
    h1 = np.zeros((m + 1, m + 1), dtype=complex)
    h1[1:, 0] = alpha * bath.g
    h1[0, 1:] = alpha * np.conj(bath.g)
    h1[np.arange(1, m + 1), np.arange(1, m + 1)] = bath.w
    return h1


def check_single_excitation(sys: SystemSpec, tol: float = 1e-12) -> None:
    """Raise unless ``s_op`` is sigma_minus and ``h_s`` vanishes."""
    if sys.dim_s != 2 or np.max(np.abs(sys.s_op - SIGMA_MINUS)) > tol:
        raise ValueError("single-excitation oracle requires s_op = sigma_minus")
    if np.max(np.abs(sys.h_s)) > tol:
        raise ValueError("single-excitation oracle requires h_s = 0")


def evolve_single_excitation(bath: BathSpec, times, alpha: float = 1.0):
    """Exact dynamics from ``|e, vac>`` for ``S = sigma_minus`` and ``H_S = 0``.

    Returns ``(p_e, traj)`` with ``p_e`` the excited-state population and
    ``traj`` the reduced state ``diag(p_e, 1 - p_e)``.
    """
    times = check_grid(times)
    # rephasing |g, 1_k> by arg(g_k) makes the block real without touching c_0
    rephased = BathSpec(bath.omegas, tuple(np.abs(bath.g)), bath.n_max)
    h1 = single_excitation_hamiltonian(rephased, alpha).real
    e, v = np.linalg.eigh(h1)
    # amplitudes c(t) = V exp(-i E t) V^dag c0 with c0 = e_0
    c = v @ (np.exp(-1j * np.outer(e, times)) * np.conj(v[0])[:, None])
    norm_err = float(np.max(np.abs(np.sum(np.abs(c) ** 2, axis=0) - 1.0)))
    if norm_err > 1e-12:
        raise RuntimeError(f"single-excitation norm drift {norm_err:.3g}")
    p_e = np.abs(c[0]) ** 2
    states = np.zeros((times.size, 2, 2), dtype=complex)
    states[:, 0, 0] = p_e
    states[:, 1, 1] = 1.0 - p_e
    return p_e, Trajectory(times, states, label="single_excitation",
                           meta={"norm_err": norm_err})


def run_single_excitation(sys: SystemSpec, bath: BathSpec, rho_s0, times,
                          tol: Tolerances = DEFAULT_TOL) -> Trajectory:
    check_single_excitation(sys)
    rho_s0 = as_operator(rho_s0, "rho0")
    excited = np.zeros((2, 2), dtype=complex)
    excited[0, 0] = 1.0
    if np.max(np.abs(rho_s0 - excited)) > tol.trace:
        raise ValueError("single-excitation oracle requires rho0 = |e><e|")
    _, traj = evolve_single_excitation(bath, times, sys.alpha)
    return traj


__all__ = [
    "FockSpace",
    "build_bath_ops",
    "number_op",
    "partial_trace_b",
    "product_initial_state",
    "evolve_exact",
    "reduced_trajectory",
    "run_exact",
    "single_excitation_hamiltonian",
    "check_single_excitation",
    "evolve_single_excitation",
    "run_single_excitation",
]
