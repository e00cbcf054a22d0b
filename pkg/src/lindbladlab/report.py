"""CSV trajectories, pairwise comparisons and decay-rate fits."""
from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np

from .linops import trace_distance
from .trajectory import Trajectory


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def csv_header(dim: int) -> list:
    cols = ["t"]
    for i in range(dim):
        for j in range(dim):
            cols += [f"re_{i}_{j}", f"im_{i}_{j}"]
    return cols + ["trace_err", "herm_err", "eig_min"]


def trajectory_csv(traj: Trajectory) -> str:
    diag = traj.diagnostics()
    lines = [",".join(csv_header(traj.dim))]
    for t, rho, dg in zip(traj.times, traj.states, diag):
        row = [_fmt(t)]
        for v in rho.ravel():
            row += [_fmt(v.real), _fmt(v.imag)]
        row += [_fmt(x) for x in dg]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(trajectory_csv(traj))
    return path


def read_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_entries = (data.shape[1] - 4) // 2
    dim = int(round(np.sqrt(n_entries)))
    vals = data[:, 1:1 + 2 * n_entries]
    states = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(-1, dim, dim)
    return Trajectory(data[:, 0], states, label=Path(path).stem)


def nodewise_distance(a: Trajectory, b: Trajectory) -> np.ndarray:
    if a.states.shape != b.states.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories are on different grids or dimensions")
    return np.array([trace_distance(x, y) for x, y in zip(a.states, b.states)])


def pairwise_distances(names: list, results: dict) -> dict:
    """Per-node trace distances for every unordered pair of requested pipelines."""
    out = {}
    for (i, p), (j, q) in itertools.combinations(enumerate(names), 2):
        d = nodewise_distance(results[p], results[q])
        key = f"{p}~{q}" if p != q else f"{p}~{q}#{i}{j}"
        out[key] = d
    return out


def fit_decay_rate(times, values, window) -> dict:
    """Least-squares fit of ``ln(values) = c - rate * t`` over ``window``.

    Returns the rate, intercept, RMS residual and the number of points used.
    Non-positive values inside the window are rejected rather than skipped.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t0, t1 = window
    mask = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    if mask.sum() < 2:
        raise ValueError("fit window contains fewer than two grid points")
    y = values[mask]
    if np.any(y <= 0):
        raise ValueError("observable is not positive inside the fit window")
    t = times[mask]
    a = np.vstack([np.ones_like(t), -t]).T
    coef, *_ = np.linalg.lstsq(a, np.log(y), rcond=None)
    resid = np.log(y) - a @ coef
    return {
        "rate": float(coef[1]),
        "intercept": float(coef[0]),
        "residual_rms": float(np.sqrt(np.mean(resid**2))),
        "n_points": int(mask.sum()),
        "window": [float(t0), float(t1)],
    }


def build_report(scenario, results: dict, *, with_distances: bool) -> dict:
    """Assemble the JSON report for a finished scenario."""
    rep = {"config": scenario.resolved, "pipelines": {}}
    for name, traj in results.items():
        entry = {"cptp": traj.meta.get("cptp", {})}
        for k in ("method", "substeps", "dt", "f_source", "max_step_change"):
            if k in traj.meta:
                entry[k] = traj.meta[k]
        if "f_final" in traj.meta:
            f = traj.meta["f_final"]
            entry["f_final"] = [f.real, f.imag]
            if scenario.rates is not None:
                fm = scenario.rates.f_markov
                entry["f_markov"] = [fm.real, fm.imag]
                entry["f_final_minus_markov"] = abs(f - fm)
        rep["pipelines"][name] = entry
    if scenario.rates is not None:
        r = scenario.rates
        rep["rates"] = {
            "gamma": r.gamma,
            "epsilon": r.epsilon,
            "domain": [str(x) if not np.isfinite(x) else x for x in r.domain],
            "ladder": [[d, v] for d, v in r.ladder],
        }
    if scenario.fit is not None:
        fit = scenario.fit
        traj = results[fit["pipeline"]]
        i = fit["element"][0]
        res = fit_decay_rate(traj.times, traj.states[:, i, i].real, fit["window"])
        res.update(pipeline=fit["pipeline"], element=fit["element"])
        if scenario.rates is not None:
            res["gamma_markov"] = scenario.rates.gamma * scenario.system.alpha**2
            if res["gamma_markov"] > 0:
                res["relative_error"] = abs(res["rate"] - res["gamma_markov"]) / res["gamma_markov"]
        rep["fit"] = res
    if with_distances:
        dists = pairwise_distances(scenario.pipelines, results)
        rep["distances"] = {
            k: {"max": float(np.max(v)), "argmax_node": int(np.argmax(v))}
            for k, v in dists.items()
        }
    return rep


def distances_csv(times, dists: dict) -> str:
    keys = list(dists)
    lines = [",".join(["t"] + keys)]
    for i, t in enumerate(times):
        lines.append(",".join([_fmt(t)] + [_fmt(dists[k][i]) for k in keys]))
    return "\n".join(lines) + "\n"


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
