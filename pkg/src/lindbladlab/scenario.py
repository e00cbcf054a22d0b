"""Scenario configs: parsing, validation and running the pipelines.

A config is a JSON object. Complex numbers are ``[re, im]`` pairs (a bare
real is accepted), matrices are row-major nested lists of those. Two-level
operators may also be given by name (``"sigma_minus"``, ``"sigma_z"``, ...).
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bathcorr, exact, lindblad, redfield
from .bathcorr import BathSpec, MarkovRates, SpectralDensity
from .linops import (
    MAX_DIM,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Tolerances,
    validate_density,
)
from .model import SystemSpec
from .trajectory import Trajectory, uniform_grid

PIPELINES = ("exact", "single_excitation", "coeff_eq", "lindblad")

NAMED_OPS = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "sigma_minus": SIGMA_MINUS,
    "sigma_plus": SIGMA_PLUS,
}


class ConfigError(ValueError):
    """Malformed or inconsistent config; ``field`` names the offending entry."""

    def __init__(self, field_path: str, msg: str):
        super().__init__(f"{field_path}: {msg}")
        self.field = field_path


class PreconditionError(ValueError):
    def __init__(self, pipeline: str, msg: str):
        super().__init__(f"pipeline {pipeline!r}: {msg}")
        self.pipeline = pipeline


class ToleranceBreach(RuntimeError):
    def __init__(self, pipeline: str, node: int, summary: dict):
        super().__init__(
            f"pipeline {pipeline!r}: tolerance breach at node {node} "
            f"(trace {summary['max_trace_err']:.3g}, herm {summary['max_herm_err']:.3g}, "
            f"eig_min {summary['min_eig']:.3g})"
        )
        self.pipeline = pipeline
        self.node = node


# -- parsing helpers ---------------------------------------------------------


def parse_complex(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ConfigError(where, "expected a number or [re, im]")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise ConfigError(where, "expected a number or [re, im]")


def parse_matrix(x, where: str) -> np.ndarray:
    if isinstance(x, str):
        if x not in NAMED_OPS:
            raise ConfigError(where, f"unknown named operator {x!r}")
        return NAMED_OPS[x].copy()
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise ConfigError(where, "expected a non-empty list of rows")
    n = len(x)
    for i, row in enumerate(x):
        if len(row) != n:
            raise ConfigError(f"{where}[{i}]", f"matrix is not square: row has {len(row)} "
                                               f"entries, expected {n}")
    if n > MAX_DIM:
        raise ConfigError(where, f"dimension {n} exceeds cap {MAX_DIM}")
    return np.array([[parse_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)]
                     for i, row in enumerate(x)], dtype=complex)


def matrix_to_json(a: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(a)]


def _get(d: dict, key: str, where: str, default=None, required: bool = False):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    if key not in d:
        if required:
            raise ConfigError(f"{where}.{key}" if where else key, "missing required field")
        return default
    return d[key]


def _number(x, where: str, positive: bool = False, integer: bool = False):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(where, "expected a number")
    if integer and int(x) != x:
        raise ConfigError(where, "expected an integer")
    if positive and not x > 0:
        raise ConfigError(where, "must be positive")
    return int(x) if integer else float(x)


# -- resolved scenario -------------------------------------------------------


@dataclass
class Scenario:
    system: SystemSpec
    rho0: np.ndarray
    times: np.ndarray
    pipelines: list
    bath: BathSpec
    spectral: SpectralDensity | None = None
    rates: MarkovRates | None = None
    lindblad_terms: list | None = None
    lindblad_method: str = "rk4"
    lindblad_substeps: int | None = None
    coeff_f_source: str = "discrete"
    coeff_f_const: complex | None = None
    coeff_substeps: int | None = None
    fit: dict | None = None
    tol: Tolerances = field(default_factory=Tolerances)
    resolved: dict = field(default_factory=dict)


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)
    if not isinstance(cfg, dict):
        raise ConfigError(str(path), "top level must be an object")
    cfg.setdefault("_base_dir", str(path.parent))
    return cfg


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError("--override", f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "override path crosses a non-object")
        node[parts[-1]] = value
    return cfg


def parse_spectral(spec: dict, where: str, base_dir: Path) -> SpectralDensity:
    kind = _get(spec, "kind", where, "lorentzian")
    try:
        if kind == "lorentzian":
            return SpectralDensity.lorentzian(
                _number(_get(spec, "j0", where, required=True), f"{where}.j0"),
                _number(_get(spec, "gamma_w", where, required=True), f"{where}.gamma_w"),
                _number(_get(spec, "center", where, 0.0), f"{where}.center"),
            )
        if kind == "table":
            if "file" in spec:
                return SpectralDensity.read_csv(base_dir / spec["file"])
            pts = _get(spec, "points", where, required=True)
            if not isinstance(pts, list) or not all(
                isinstance(p, list) and len(p) == 2 for p in pts
            ):
                raise ConfigError(f"{where}.points", "expected a list of [omega, J] pairs")
            return SpectralDensity.from_table(
                [(_number(w, f"{where}.points"), _number(j, f"{where}.points")) for w, j in pts]
            )
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(where, str(exc))
    raise ConfigError(f"{where}.kind", f"unknown spectral density kind {kind!r}")


def spectral_to_json(j: SpectralDensity) -> dict:
    if j.kind == "lorentzian":
        return {"kind": "lorentzian", "j0": j.j0, "gamma_w": j.gamma_w, "center": j.center}
    return {"kind": "table", "points": [list(p) for p in j.table]}


def parse_rates_options(cfg: dict) -> dict:
    r = _get(cfg, "rates", "", {}) or {}
    return {
        "pv_exclusion": _number(_get(r, "pv_exclusion", "rates", 0.1), "rates.pv_exclusion",
                                positive=True),
        "pv_levels": _number(_get(r, "pv_levels", "rates", 6), "rates.pv_levels", integer=True),
        "half_line": bool(_get(r, "half_line", "rates", False)),
    }


def compute_rates(j: SpectralDensity, opts: dict) -> MarkovRates:
    return bathcorr.markov_rates(j, opts["pv_exclusion"], opts["pv_levels"], opts["half_line"])


def parse_bath(cfg: dict, base_dir: Path):
    b = _get(cfg, "bath", "", required=True)
    n_max = _number(_get(b, "n_max", "bath", 1), "bath.n_max", integer=True)
    if n_max < 1:
        raise ConfigError("bath.n_max", "must be at least 1")
    if "modes" in b:
        modes = b["modes"]
        if not isinstance(modes, list):
            raise ConfigError("bath.modes", "expected a list of [omega, g] entries")
        parsed = []
        for i, mode in enumerate(modes):
            if isinstance(mode, dict):
                w, g = mode.get("omega"), mode.get("g")
            elif isinstance(mode, list) and len(mode) == 2:
                w, g = mode
            else:
                raise ConfigError(f"bath.modes[{i}]", "expected [omega, g] or {omega, g}")
            parsed.append((_number(w, f"bath.modes[{i}].omega"),
                           parse_complex(g, f"bath.modes[{i}].g")))
        resolved = {"modes": [[w, [g.real, g.imag]] for w, g in parsed], "n_max": n_max}
        return BathSpec.from_modes(parsed, n_max), None, resolved
    if "spectral" in b:
        j = parse_spectral(b["spectral"], "bath.spectral", base_dir)
        d = _get(b, "discretize", "bath", required=True)
        m = _number(_get(d, "m", "bath.discretize", required=True), "bath.discretize.m",
                    integer=True)
        lo = _number(_get(d, "omega_lo", "bath.discretize", required=True),
                     "bath.discretize.omega_lo")
        hi = _number(_get(d, "omega_hi", "bath.discretize", required=True),
                     "bath.discretize.omega_hi")
        try:
            bath = bathcorr.discretize(j, m, lo, hi, n_max)
        except ValueError as exc:
            raise ConfigError("bath.discretize", str(exc))
        resolved = {"spectral": spectral_to_json(j),
                    "discretize": {"m": m, "omega_lo": lo, "omega_hi": hi}, "n_max": n_max}
        return bath, j, resolved
    raise ConfigError("bath", "expected either 'modes' or 'spectral'")


def parse_scenario(cfg: dict) -> Scenario:
    base_dir = Path(cfg.get("_base_dir", "."))
    s = _get(cfg, "system", "", required=True)
    h_s = parse_matrix(_get(s, "h_s", "system", required=True), "system.h_s")
    s_op = parse_matrix(_get(s, "s_op", "system", required=True), "system.s_op")
    hbar = _number(_get(s, "hbar", "system", 1.0), "system.hbar", positive=True)
    alpha = _number(_get(s, "alpha", "system", 1.0), "system.alpha")
    dim = _get(s, "dim", "system", h_s.shape[0])
    if _number(dim, "system.dim", integer=True) != h_s.shape[0]:
        raise ConfigError("system.dim", f"declared {dim} but h_s is {h_s.shape[0]}x{h_s.shape[0]}")
    try:
        system = SystemSpec(h_s, s_op, hbar, alpha)
    except ValueError as exc:
        raise ConfigError("system", str(exc))

    tol_cfg = _get(cfg, "tolerances", "", {}) or {}
    tol = Tolerances(
        herm=_number(tol_cfg.get("herm", 1e-9), "tolerances.herm", positive=True),
        trace=_number(tol_cfg.get("trace", 1e-9), "tolerances.trace", positive=True),
        psd=_number(tol_cfg.get("psd", 1e-7), "tolerances.psd", positive=True),
    )

    rho0 = parse_matrix(_get(cfg, "rho0", "", required=True), "rho0")
    if rho0.shape != h_s.shape:
        raise ConfigError("rho0", "dimension differs from system.h_s")
    try:
        validate_density(rho0, tol, "rho0")
    except ValueError as exc:
        raise ConfigError("rho0", str(exc))

    g = _get(cfg, "grid", "", required=True)
    t_max = _number(_get(g, "t_max", "grid", required=True), "grid.t_max", positive=True)
    steps = _number(_get(g, "steps", "grid", required=True), "grid.steps", integer=True,
                    positive=True)
    times = uniform_grid(t_max, steps)

    pipelines = _get(cfg, "pipelines", "", required=True)
    if not isinstance(pipelines, list) or not pipelines:
        raise ConfigError("pipelines", "expected a non-empty list")
    for p in pipelines:
        if p not in PIPELINES:
            raise ConfigError("pipelines", f"unknown pipeline {p!r}; choose from {PIPELINES}")

    bath, spectral, bath_resolved = parse_bath(cfg, base_dir)
    rates_opts = parse_rates_options(cfg)
    rates = None
    if spectral is not None:
        try:
            rates = compute_rates(spectral, rates_opts)
        except ValueError as exc:
            raise ConfigError("bath.spectral", str(exc))

    lcfg = _get(cfg, "lindblad", "", {}) or {}
    terms = None
    terms_resolved = None
    if "terms" in lcfg:
        terms = []
        for i, t in enumerate(lcfg["terms"]):
            where = f"lindblad.terms[{i}]"
            l_op = parse_matrix(_get(t, "l", where, required=True), f"{where}.l")
            if l_op.shape != h_s.shape:
                raise ConfigError(f"{where}.l", "dimension differs from system.h_s")
            gamma = _number(_get(t, "gamma", where, required=True), f"{where}.gamma")
            if gamma < 0:
                raise ConfigError(f"{where}.gamma", "rates must be non-negative")
            eps = _number(_get(t, "epsilon", where, 0.0), f"{where}.epsilon")
            terms.append(lindblad.LindbladTerm(l_op, gamma, eps))
        terms_resolved = [{"l": matrix_to_json(t.l), "gamma": t.gamma, "epsilon": t.epsilon}
                          for t in terms]
    method = _get(lcfg, "method", "lindblad", "rk4")
    if method not in ("rk4", "expm"):
        raise ConfigError("lindblad.method", f"unknown method {method!r}")
    l_sub = _get(lcfg, "substeps", "lindblad", None)
    if l_sub is not None:
        l_sub = _number(l_sub, "lindblad.substeps", integer=True, positive=True)

    ccfg = _get(cfg, "coeff_eq", "", {}) or {}
    f_source = _get(ccfg, "f_source", "coeff_eq", "discrete")
    if f_source not in ("discrete", "constant"):
        raise ConfigError("coeff_eq.f_source", f"unknown source {f_source!r}")
    f_const = _get(ccfg, "f_const", "coeff_eq", None)
    if f_const is not None:
        f_const = parse_complex(f_const, "coeff_eq.f_const")
    c_sub = _get(ccfg, "substeps", "coeff_eq", None)
    if c_sub is not None:
        c_sub = _number(c_sub, "coeff_eq.substeps", integer=True, positive=True)

    fit = _get(cfg, "fit", "", None)
    if fit is not None:
        fp = _get(fit, "pipeline", "fit", required=True)
        if fp not in pipelines:
            raise ConfigError("fit.pipeline", f"{fp!r} is not among the requested pipelines")
        el = _get(fit, "element", "fit", [0, 0])
        if not (isinstance(el, list) and len(el) == 2 and el[0] == el[1]
                and 0 <= el[0] < h_s.shape[0]):
            raise ConfigError("fit.element", "expected a diagonal index pair [i, i]")
        window = _get(fit, "window", "fit", [0.0, t_max])
        if not (isinstance(window, list) and len(window) == 2 and window[0] < window[1]):
            raise ConfigError("fit.window", "expected [t_start, t_end] with t_start < t_end")
        fit = {"pipeline": fp, "element": [int(el[0]), int(el[1])],
               "window": [float(window[0]), float(window[1])]}

    resolved = {
        "system": {"dim": h_s.shape[0], "h_s": matrix_to_json(h_s),
                   "s_op": matrix_to_json(s_op), "hbar": hbar, "alpha": alpha},
        "bath": bath_resolved,
        "rho0": matrix_to_json(rho0),
        "grid": {"t_max": t_max, "steps": steps},
        "pipelines": list(pipelines),
        "lindblad": {"method": method, "substeps": l_sub,
                     **({"terms": terms_resolved} if terms_resolved is not None else {})},
        "coeff_eq": {"f_source": f_source, "substeps": c_sub,
                     "f_const": None if f_const is None else [f_const.real, f_const.imag]},
        "rates": rates_opts,
        "tolerances": {"herm": tol.herm, "trace": tol.trace, "psd": tol.psd},
    }
    if fit is not None:
        resolved["fit"] = fit
    return Scenario(
        system=system, rho0=rho0, times=times, pipelines=list(pipelines), bath=bath,
        spectral=spectral, rates=rates, lindblad_terms=terms, lindblad_method=method,
        lindblad_substeps=l_sub, coeff_f_source=f_source, coeff_f_const=f_const,
        coeff_substeps=c_sub, fit=fit, tol=tol, resolved=resolved,
    )


# -- pipelines ---------------------------------------------------------------


def default_lindblad_terms(sc: Scenario) -> list:
    """``L = s_op`` with the Markov-limit rates, or nothing for a decoupled bath."""
    if sc.lindblad_terms is not None:
        return sc.lindblad_terms
    a2 = sc.system.alpha**2
    if sc.rates is not None:
        return [lindblad.LindbladTerm(sc.system.s_op, a2 * sc.rates.gamma,
                                      a2 * sc.rates.epsilon)]
    if sc.bath.total_weight() == 0 or a2 == 0:
        return []
    raise PreconditionError(
        "lindblad", "an explicit-mode bath has no Markov rate; give lindblad.terms"
    )


def check_preconditions(sc: Scenario) -> None:
    """Raise :class:`PreconditionError` for the first requested pipeline that cannot run."""
    for p in sc.pipelines:
        if p == "exact":
            dim = sc.system.dim_s * sc.bath.space.dim
            if dim > MAX_DIM:
                raise PreconditionError(p, f"composite dimension {dim} exceeds cap {MAX_DIM}")
        elif p == "single_excitation":
            try:
                exact.check_single_excitation(sc.system)
            except ValueError as exc:
                raise PreconditionError(p, str(exc))
            excited = np.zeros((2, 2), dtype=complex)
            excited[0, 0] = 1.0
            if np.max(np.abs(sc.rho0 - excited)) > sc.tol.trace:
                raise PreconditionError(p, "requires rho0 = |e><e|")
        elif p == "coeff_eq":
            defect = sc.system.commutation_defect()
            if defect > 1e-10:
                raise PreconditionError(p, f"requires [s_op, h_s] = 0 (defect {defect:.3g})")
            if sc.coeff_f_source == "constant" and sc.coeff_f_const is None and sc.rates is None:
                raise PreconditionError(p, "constant F needs coeff_eq.f_const or a spectral bath")
        elif p == "lindblad":
            default_lindblad_terms(sc)


def run_pipeline(sc: Scenario, name: str) -> Trajectory:
    if name == "exact":
        traj = exact.run_exact(sc.system, sc.bath, sc.rho0, sc.times)
        traj.meta["cptp"] = lindblad.cptp_report(traj, sc.tol).summary()
    elif name == "single_excitation":
        traj = exact.run_single_excitation(sc.system, sc.bath, sc.rho0, sc.times, sc.tol)
        traj.meta["cptp"] = lindblad.cptp_report(traj, sc.tol).summary()
    elif name == "coeff_eq":
        f_const = sc.coeff_f_const
        if sc.coeff_f_source == "constant" and f_const is None:
            f_const = sc.rates.f_markov
        try:
            traj = redfield.integrate_coeff_eq(
                sc.system, sc.bath, sc.rho0, sc.times, f_source=sc.coeff_f_source,
                f_const=f_const, substeps=sc.coeff_substeps, tol=sc.tol,
            )
        except ValueError as exc:
            raise PreconditionError(name, str(exc))
    elif name == "lindblad":
        model = lindblad.LindbladModel(sc.system.h_s, default_lindblad_terms(sc),
                                       sc.system.hbar)
        try:
            traj = lindblad.propagate(model, sc.rho0, sc.times, sc.lindblad_method,
                                      substeps=sc.lindblad_substeps, tol=sc.tol)
        except ValueError as exc:
            raise PreconditionError(name, str(exc))
    else:
        raise ValueError(f"unknown pipeline {name!r}")
    traj.label = name
    return traj


def run_all(sc: Scenario) -> dict:
    check_preconditions(sc)
    results = {}
    for name in sc.pipelines:
        if name in results:
            continue
        results[name] = run_pipeline(sc, name)
    return results
