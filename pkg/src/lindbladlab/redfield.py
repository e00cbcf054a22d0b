"""Time-local second-order master equation with time-dependent coefficients.

In the interaction picture, with ``[S, H_S] = 0``,

    drho/dt = -alpha^2 ( [S S^dag rho - S^dag rho S] G*(t) + [rho S^dag S - S rho S^dag] F*(t)
                        + [S^dag S rho - S rho S^dag] F(t) + [rho S S^dag - S^dag rho S] G(t) )

which reduces to the Lindblad form once ``G = 0`` and ``F`` settles to a
real constant ``gamma / 2``.
"""
from __future__ import annotations

import math

import numpy as np

from .bathcorr import BathSpec, f_discrete_uniform
from .linops import DEFAULT_TOL, Tolerances, dag, validate_density
from .model import SystemSpec, from_interaction_picture
from .trajectory import Trajectory, check_grid, cptp_report

STEP_FACTOR = 0.05
MAX_STEP_CHANGE = 0.1
NEGATIVITY_LIMIT = 1e-4


def rhs_coeff_eq(rho, s_op, f: complex, g: complex) -> np.ndarray:
    s = np.asarray(s_op, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    sd = dag(s)
    ssd, sds = s @ sd, sd @ s
    s_rho_sd = s @ rho @ sd
    sd_rho_s = sd @ rho @ s
    return -(
        (ssd @ rho - sd_rho_s) * np.conj(g)
        + (rho @ sds - s_rho_sd) * np.conj(f)
        + (sds @ rho - s_rho_sd) * f
        + (rho @ ssd - sd_rho_s) * g
    )


def mandated_dt(sys: SystemSpec, bath: BathSpec | None, t_max: float,
                f_const: complex | None = None) -> float:
    """``0.05 / (|h_s|/hbar + alpha^2 sup|F|)`` with ``sup|F| <= sum |g_k|^2 t_max``."""
    sup_f = 0.0
    if f_const is not None:
        sup_f = abs(f_const)
    elif bath is not None:
        sup_f = bath.total_weight() * t_max
    rate = np.linalg.norm(sys.h_s, 2) / sys.hbar + sys.alpha**2 * sup_f
    return math.inf if rate == 0 else STEP_FACTOR / rate


def integrate_coeff_eq(sys: SystemSpec, bath: BathSpec | None, rho0, times, *,
                       f_source: str = "discrete", f_const: complex | None = None,
                       g_source: str = "zero", substeps: int | None = None,
                       tol: Tolerances = DEFAULT_TOL, label: str = "coeff_eq") -> Trajectory:
    """RK4 integration in the interaction picture; nodes are returned in the
    Schrodinger picture.

    ``f_source="discrete"`` takes ``F(t)`` from the closed form for ``bath``;
    ``f_source="constant"`` holds ``F = f_const`` (e.g. ``gamma/2``). ``G`` is
    identically zero for the vacuum bath whichever ``g_source`` is named.
    """
    sys.require_commuting()
    times = check_grid(times, uniform=True)
    rho0 = validate_density(rho0, tol, "rho0")
    if rho0.shape != sys.h_s.shape:
        raise ValueError("rho0 dimension differs from the system")
    if f_source == "constant":
        if f_const is None:
            raise ValueError("f_source='constant' needs f_const")
    elif f_source == "discrete":
        if bath is None:
            raise ValueError("f_source='discrete' needs a bath")
    else:
        raise ValueError(f"unknown f_source {f_source!r}")
    if g_source not in ("zero", "discrete"):
        raise ValueError(f"unknown g_source {g_source!r}")

    t_max = float(times[-1])
    states = np.empty((times.size,) + rho0.shape, dtype=complex)
    states[0] = rho0
    meta = {"f_source": f_source, "g_source": g_source}
    if times.size > 1:
        interval = times[1] - times[0]
        dt_max = mandated_dt(sys, bath, t_max, f_const if f_source == "constant" else None)
        n = substeps or max(1, math.ceil(interval / dt_max * (1 - 1e-12)))
        h = interval / n
        n_steps = n * (times.size - 1)
        # F at every RK4 stage time: t, t + h/2, t + h
        if f_source == "discrete":
            f_vals = f_discrete_uniform(bath, h / 2, 2 * n_steps + 1)
        else:
            f_vals = np.full(2 * n_steps + 1, complex(f_const))
        a2 = sys.alpha**2
        s = sys.s_op
        rho = rho0
        step = 0
        max_change = 0.0
        for i in range(1, times.size):
            for _ in range(n):
                j = 2 * step
                f0, fh, f1 = (a2 * f_vals[j], a2 * f_vals[j + 1], a2 * f_vals[j + 2])
                k1 = rhs_coeff_eq(rho, s, f0, 0)
                k2 = rhs_coeff_eq(rho + 0.5 * h * k1, s, fh, 0)
                k3 = rhs_coeff_eq(rho + 0.5 * h * k2, s, fh, 0)
                k4 = rhs_coeff_eq(rho + h * k3, s, f1, 0)
                drho = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                change = float(np.max(np.abs(drho)))
                if change > MAX_STEP_CHANGE:
                    raise ValueError(
                        f"step too large: |drho| = {change:.3g} > {MAX_STEP_CHANGE} "
                        f"at step {step} (h = {h:.3g}); reduce the step"
                    )
                max_change = max(max_change, change)
                rho = rho + drho
                step += 1
            states[i] = rho
        meta.update(substeps=n, dt=h, max_step_change=max_change,
                    f_final=complex(f_vals[-1]))
    back = np.array([
        from_interaction_picture(r, sys.h_s, t, sys.hbar) for t, r in zip(times, states)
    ])
    traj = Trajectory(times, back, label=label, meta=meta)
    report = cptp_report(traj, tol)
    summary = report.summary()
    # transient negativity is a property of the approximation, so it is flagged, not fatal
    summary["negativity_flag"] = report.min_eig < -tol.psd
    bad = np.flatnonzero(
        (report.trace_err > 10 * tol.trace)
        | (report.herm_err > 10 * tol.herm)
        | (report.eig_min < -NEGATIVITY_LIMIT)
    )
    summary["failed"] = bool(bad.size)
    summary["breach_node"] = int(bad[0]) if bad.size else None
    traj.meta["cptp"] = summary
    return traj
