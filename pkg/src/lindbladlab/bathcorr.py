"""Bath side of the reduction: mode lists, correlation integrals, spectral
densities and the Markov-limit rates.

The bath is a set of bosonic modes with Hamiltonian ``hbar * sum_k w_k a_k^dag a_k``
coupled through ``B = sum_k conj(g_k) a_k``. For the vacuum state the two
time-integrated correlation functions are

    F(t) = int_0^t tr{B(t) B^dag(t') rho_B} dt' = sum_k |g_k|^2 (1 - exp(-i w_k t)) / (i w_k)
    G(t) = int_0^t tr{B^dag(t') B(t) rho_B} dt' = 0
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.integrate

from .fock import FockSpace, build_bath_ops


@dataclass(frozen=True)
class BathSpec:
    omegas: tuple[float, ...] = ()
    couplings: tuple[complex, ...] = ()
    n_max: int = 1

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "couplings", tuple(complex(g) for g in self.couplings))
        if len(self.omegas) != len(self.couplings):
            raise ValueError("omegas and couplings must have equal length")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if not all(math.isfinite(w) for w in self.omegas):
            raise ValueError("mode frequencies must be finite")
        if not all(math.isfinite(abs(g)) for g in self.couplings):
            raise ValueError("couplings must be finite")

    @classmethod
    def from_modes(cls, modes: Sequence[tuple[float, complex]], n_max: int = 1) -> "BathSpec":
        modes = list(modes)
        return cls(tuple(w for w, _ in modes), tuple(g for _, g in modes), n_max)

    @property
    def m(self) -> int:
        return len(self.omegas)

    @property
    def space(self) -> FockSpace:
        return FockSpace(self.m, self.n_max)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.omegas, dtype=float)

    @property
    def g(self) -> np.ndarray:
        return np.asarray(self.couplings, dtype=complex)

    def total_weight(self) -> float:
        """``sum_k |g_k|^2``."""
        return float(np.sum(np.abs(self.g) ** 2))


def bath_hamiltonian(bath: BathSpec, hbar: float = 1.0) -> np.ndarray:
    space = bath.space
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for k, w in enumerate(bath.omegas, start=1):
        a, ad = build_bath_ops(space, k)
        h += hbar * w * (ad @ a)
    return h


def b_op(bath: BathSpec) -> np.ndarray:
    """``B = sum_k conj(g_k) a_k`` on the truncated bath space."""
    space = bath.space
    b = np.zeros((space.dim, space.dim), dtype=complex)
    for k, g in enumerate(bath.couplings, start=1):
        a, _ = build_bath_ops(space, k)
        b += np.conj(g) * a
    return b


def b_op_t_coeffs(bath: BathSpec, t: float) -> np.ndarray:
    """Coefficients ``c_k`` with ``B(t) = sum_k c_k a_k``."""
    return np.conj(bath.g) * np.exp(-1j * bath.w * t)


def b_op_t(bath: BathSpec, t: float) -> np.ndarray:
    space = bath.space
    b = np.zeros((space.dim, space.dim), dtype=complex)
    for k, c in enumerate(b_op_t_coeffs(bath, t), start=1):
        a, _ = build_bath_ops(space, k)
        b += c * a
    return b


def _phase_integral(w, t) -> np.ndarray:
    """``int_0^t exp(-i w tau) dtau`` elementwise (broadcasting ``w`` against ``t``).

    Written as ``t exp(-i w t/2) sinc(w t/2)``, which has no cancellation near
    ``w t = 0`` and is exact there.
    """
    wt = np.asarray(w, dtype=float) * t
    return t * np.exp(-0.5j * wt) * np.sinc(wt / (2 * np.pi))


def f_discrete(bath: BathSpec, t: float) -> complex:
    if t < 0:
        raise ValueError("t must be non-negative")
    if bath.m == 0:
        return 0j
    return complex(np.sum(np.abs(bath.g) ** 2 * _phase_integral(bath.w, t)))


def f_discrete_many(bath: BathSpec, times) -> np.ndarray:
    """Vectorized :func:`f_discrete` over an array of times."""
    times = np.asarray(times, dtype=float)
    if bath.m == 0:
        return np.zeros(times.shape, dtype=complex)
    weights = np.abs(bath.g) ** 2
    flat = times.ravel()
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2**22 // bath.m)
    for start in range(0, flat.size, chunk):
        t = flat[start:start + chunk, None]
        out[start:start + chunk] = _phase_integral(bath.w, t) @ weights
    return out.reshape(times.shape)


def f_discrete_uniform(bath: BathSpec, dt: float, n: int) -> np.ndarray:
    """``F(j dt)`` for ``j = 0..n-1``.

    For modes with ``|w| t_max >= 1`` the phases ``exp(-i w (J B + j) dt)`` are
    split into two exactly evaluated tables so the sum over modes becomes one
    matrix product. Slower modes would cancel badly in ``(1 - e^{-iwt})/(iw)``
    and go through :func:`_phase_integral` instead.
    """
    t = np.arange(n) * dt
    if bath.m == 0:
        return np.zeros(n, dtype=complex)
    weights = np.abs(bath.g) ** 2
    w = bath.w
    slow = np.abs(w) * t[-1] < 1.0
    out = np.zeros(n, dtype=complex)
    if np.any(slow):
        out += _phase_integral(w[slow], t[:, None]) @ weights[slow]
    if np.any(~slow):
        wf = w[~slow]
        c = weights[~slow] / (1j * wf)
        block = max(1, int(np.sqrt(n)))
        n_blocks = -(-n // block)
        inner = np.exp(-1j * np.outer(np.arange(block) * dt, wf))
        outer = np.exp(-1j * np.outer(np.arange(n_blocks) * block * dt, wf))
        osc = (outer * c) @ inner.T  # [J, j] -> sum_k c_k exp(-i w_k (J B + j) dt)
        out += np.sum(c) - osc.ravel()[:n]
    return out


def g_discrete(bath: BathSpec, t: float) -> complex:
    if t < 0:
        raise ValueError("t must be non-negative")
    return 0j


def _simpson_weights(n: int, h: float) -> np.ndarray:
    wts = np.ones(n + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return wts * h / 3.0


def _correlation_oracle(bath, t, quad_steps, rho_b, order):
    if quad_steps < 2:
        raise ValueError("quad_steps must be at least 2")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0 or bath.m == 0:
        return 0j
    space = bath.space
    if rho_b is None:
        rho_b = space.vacuum_dm()
    n = quad_steps + (quad_steps % 2)  # Simpson needs an even count
    tp = np.linspace(0.0, t, n + 1)
    bt = b_op_t(bath, t)
    # B^dag(t') = sum_k g_k exp(i w_k t') a_k^dag; each mode's trace is taken
    # once with explicit matrix products, the t'-dependence is the phase.
    traces = np.empty(bath.m, dtype=complex)
    for k in range(1, bath.m + 1):
        _, ad = build_bath_ops(space, k)
        if order == "F":
            traces[k - 1] = np.trace(bt @ ad @ rho_b)
        else:
            traces[k - 1] = np.trace(ad @ bt @ rho_b)
    phases = np.exp(1j * np.outer(tp, bath.w)) * bath.g
    integrand = phases @ traces
    return complex(np.dot(_simpson_weights(n, t / n), integrand))


def f_oracle(bath: BathSpec, t: float, quad_steps: int = 200, rho_b=None) -> complex:
    """``F(t)`` by literal bath traces and composite Simpson quadrature over ``t'``."""
    return _correlation_oracle(bath, t, quad_steps, rho_b, "F")


def g_oracle(bath: BathSpec, t: float, quad_steps: int = 200, rho_b=None) -> complex:
    """``G(t)`` by literal bath traces and composite Simpson quadrature over ``t'``."""
    return _correlation_oracle(bath, t, quad_steps, rho_b, "G")


# -- spectral densities ------------------------------------------------------


@dataclass(frozen=True)
class SpectralDensity:
    """Either a Lorentzian ``j0 * gw^2 / ((w - center)^2 + gw^2)`` or a
    piecewise-linear table of ``(omega, J)`` points."""

    kind: str = "lorentzian"
    j0: float = 1.0
    gamma_w: float = 1.0
    center: float = 0.0
    table: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind == "lorentzian":
            if self.j0 < 0:
                raise ValueError("lorentzian j0 must be non-negative")
            if not self.gamma_w > 0:
                raise ValueError("lorentzian gamma_w must be positive")
        elif self.kind == "table":
            pts = tuple((float(w), float(j)) for w, j in self.table)
            if len(pts) < 2:
                raise ValueError("table needs at least two points")
            ws = [w for w, _ in pts]
            if any(b <= a for a, b in zip(ws, ws[1:])):
                raise ValueError("table omega must be strictly increasing")
            if any(j < 0 for _, j in pts):
                raise ValueError("table contains negative J")
            object.__setattr__(self, "table", pts)
        else:
            raise ValueError(f"unknown spectral density kind {self.kind!r}")

    @classmethod
    def lorentzian(cls, j0: float, gamma_w: float, center: float = 0.0) -> "SpectralDensity":
        return cls("lorentzian", j0=j0, gamma_w=gamma_w, center=center)

    @classmethod
    def from_table(cls, points) -> "SpectralDensity":
        return cls("table", table=tuple(tuple(p) for p in points))

    @classmethod
    def read_csv(cls, path) -> "SpectralDensity":
        """Two-column ``omega,J`` text; a non-numeric first row is a header."""
        rows = []
        with open(Path(path), newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if i == 0:
                        continue
                    raise ValueError(f"{path}:{i + 1}: expected two numeric columns")
        return cls.from_table(rows)

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "lorentzian":
            return (-math.inf, math.inf)
        return (self.table[0][0], self.table[-1][0])

    def __call__(self, omega):
        return spectral_eval(self, omega)


def spectral_eval(j: SpectralDensity, omega):
    """Evaluate ``J`` at scalar or array ``omega``."""
    w = np.asarray(omega, dtype=float)
    if j.kind == "lorentzian":
        out = j.j0 * j.gamma_w**2 / ((w - j.center) ** 2 + j.gamma_w**2)
    else:
        lo, hi = j.domain
        if np.any(w < lo) or np.any(w > hi):
            raise ValueError(f"omega outside table range [{lo}, {hi}]")
        xs, ys = zip(*j.table)
        out = np.interp(w, xs, ys)
    return float(out) if np.ndim(out) == 0 else out


def discretize(j: SpectralDensity, m: int, omega_lo: float, omega_hi: float,
               n_max: int = 1) -> BathSpec:
    """Midpoint discretization: ``m`` cells of width ``dw`` with real couplings
    ``g_k = sqrt(J(w_k) dw)``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not omega_lo < omega_hi:
        raise ValueError("need omega_lo < omega_hi")
    dw = (omega_hi - omega_lo) / m
    w = omega_lo + dw * (np.arange(m) + 0.5)
    jw = np.atleast_1d(spectral_eval(j, w))
    if np.any(jw < 0):
        raise ValueError("spectral density is negative on the grid")
    return BathSpec(tuple(w), tuple(np.sqrt(jw * dw)), n_max)


# -- Markov limit ------------------------------------------------------------


@dataclass
class MarkovRates:
    gamma: float
    epsilon: float
    domain: tuple[float, float] = (-math.inf, math.inf)
    ladder: list = field(default_factory=list)  # (exclusion half-width, truncated integral)

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def f_markov(self) -> complex:
        """Extended-limit value of ``F``: ``(gamma + i epsilon) / 2``."""
        return 0.5 * (self.gamma + 1j * self.epsilon)


_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


def _quad(f, a, b, points=None):
    if points is not None and math.isfinite(a) and math.isfinite(b):
        pts = [p for p in points if a < p < b]
        val, _ = scipy.integrate.quad(f, a, b, points=pts or None, **_QUAD)
    else:
        val, _ = scipy.integrate.quad(f, a, b, **_QUAD)
    return val


def _excluded_integral(j: SpectralDensity, lo: float, hi: float, delta: float) -> float:
    """``int_{[lo,hi], |w| > delta} J(w)/w dw`` with the symmetric part paired."""
    knots = [w for w, _ in j.table] if j.kind == "table" else None
    c = min(-lo, hi)
    total = 0.0
    if c > delta:
        def odd_part(w):
            return (spectral_eval(j, w) - spectral_eval(j, -w)) / w
        mirrored = None if knots is None else sorted({abs(k) for k in knots})
        total += _quad(odd_part, delta, c, mirrored)
    if hi > c:
        total += _quad(lambda w: spectral_eval(j, w) / w, max(c, delta), hi, knots)
    if -lo > c:
        total += _quad(lambda w: spectral_eval(j, w) / w, lo, -max(c, delta), knots)
    return total


def pv_inverse_omega(j: SpectralDensity, exclusion: float, levels: int,
                     domain: tuple[float, float] | None = None):
    """Principal value of ``int J(w)/w dw`` over ``domain``.

    Truncated integrals with the symmetric window ``|w| < exclusion / 2^i``
    removed are Richardson-extrapolated to zero width. For smooth ``J`` the
    truncation error is odd in the half-width, so successive eliminations use
    the factors 2, 8, 32, ...

    Returns ``(value, ladder)`` where ``ladder`` lists ``(half_width, integral)``.
    """
    if not exclusion > 0:
        raise ValueError("exclusion must be positive")
    if levels < 2:
        raise ValueError("need at least two exclusion levels")
    lo, hi = j.domain if domain is None else domain
    if not lo < 0 < hi:
        if lo == 0 or hi == 0:
            if abs(spectral_eval(j, 0.0)) > 0:
                raise ValueError(
                    "principal value diverges: J(0) != 0 at an endpoint of the domain"
                )
            edge = (lambda w: spectral_eval(j, w) / w)
            val = _quad(edge, lo, hi, [w for w, _ in j.table] if j.kind == "table" else None)
            return val, []
        raise ValueError("domain of J does not contain omega = 0")
    deltas = [exclusion / 2**i for i in range(levels)]
    vals = [_excluded_integral(j, lo, hi, d) for d in deltas]
    ladder = list(zip(deltas, vals))
    table = [list(vals)]
    for p in range(1, levels):
        prev = table[-1]
        fac = 2.0 ** (2 * p - 1)
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1) for i in range(len(prev) - 1)])
    return table[-1][0], ladder


def markov_rates(j: SpectralDensity, pv_exclusion: float = 0.1, pv_levels: int = 6,
                 half_line: bool = False) -> MarkovRates:
    """Markov-limit decay rate and frequency shift of ``F = (gamma + i epsilon)/2``.

    ``gamma = 2 pi J(0)`` (the delta function gets full weight, the integration
    extended over the whole line); ``half_line=True`` gives ``pi J(0)`` instead.
    ``epsilon = -2 PV int J(w)/w dw`` over the domain of ``J``.
    """
    lo, hi = j.domain
    if not lo <= 0.0 <= hi:
        raise ValueError(f"J(0) undefined: domain [{lo}, {hi}] does not cover 0")
    j_at_0 = spectral_eval(j, 0.0)
    gamma = (math.pi if half_line else 2.0 * math.pi) * j_at_0
    pv, ladder = pv_inverse_omega(j, pv_exclusion, pv_levels)
    return MarkovRates(gamma=gamma, epsilon=-2.0 * pv, domain=(lo, hi), ladder=ladder)


def lorentzian_pv_exact(j: SpectralDensity) -> float:
    """Closed form of ``PV int_R J(w)/w dw`` for a Lorentzian."""
    if j.kind != "lorentzian":
        raise ValueError("closed form only for the Lorentzian kind")
    c, gw = j.center, j.gamma_w
    return math.pi * j.j0 * gw * c / (c**2 + gw**2)
