"""Dense complex operator algebra.

Operators are plain square ``numpy`` arrays of dtype ``complex128``. A density
matrix is any operator that is Hermitian, unit trace and positive
semidefinite within the tolerances carried by :class:`Tolerances`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

MAX_DIM = 4096


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9
    trace: float = 1e-9
    psd: float = 1e-7

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(self.herm * factor, self.trace * factor, self.psd * factor)


DEFAULT_TOL = Tolerances()


class CompositeDims(NamedTuple):
    dim_s: int
    dim_b: int

    @property
    def total(self) -> int:
        return self.dim_s * self.dim_b


def as_operator(a, name: str = "operator") -> np.ndarray:
    """Coerce ``a`` to a square complex matrix, rejecting anything else."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if arr.shape[0] > MAX_DIM:
        raise ValueError(f"{name} dimension {arr.shape[0]} exceeds cap {MAX_DIM}")
    return arr


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def herm_error(a: np.ndarray) -> float:
    """Max-norm distance of ``a`` from its adjoint."""
    return float(np.max(np.abs(a - dag(a)))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return herm_error(a) <= tol


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def kron(a, b) -> np.ndarray:
    """Tensor product; entry ``(i*db + k, j*db + l)`` is ``a[i, j] * b[k, l]``."""
    return np.kron(as_operator(a), as_operator(b))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def partial_trace_b(rho, dims: CompositeDims) -> np.ndarray:
    """Trace out the second (bath) factor of a composite operator."""
    rho = as_operator(rho, "rho")
    ds, db = dims
    if rho.shape[0] != ds * db:
        raise ValueError(
            f"operator dimension {rho.shape[0]} does not match dims {ds}x{db}"
        )
    return np.trace(rho.reshape(ds, db, ds, db), axis1=1, axis2=3)


def partial_trace_s(rho, dims: CompositeDims) -> np.ndarray:
    """Trace out the first (system) factor of a composite operator."""
    rho = as_operator(rho, "rho")
    ds, db = dims
    if rho.shape[0] != ds * db:
        raise ValueError(
            f"operator dimension {rho.shape[0]} does not match dims {ds}x{db}"
        )
    return np.trace(rho.reshape(ds, db, ds, db), axis1=0, axis2=2)


def commutator(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    _check_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    _check_same_dim(a, b)
    return a @ b + b @ a


def matrix_exp(a, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential.

    Hermitian and skew-Hermitian arguments go through ``eigh`` so that
    propagators ``exp(-iHt)`` come out unitary to rounding. Anything else
    falls back to scaling and squaring (``scipy.linalg.expm``).
    """
    a = as_operator(a, "exponent")
    if not np.all(np.isfinite(a)):
        raise ValueError("exponent has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if herm_error(a) <= tol * scale:
        w, v = np.linalg.eigh(0.5 * (a + dag(a)))
        return (v * np.exp(w)) @ dag(v)
    if np.max(np.abs(a + dag(a))) <= tol * scale:
        h = 0.5j * (a - dag(a))  # a = -i h with h Hermitian
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * w)) @ dag(v)
    return scipy.linalg.expm(a)


def unitary(h, t: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i h t / hbar)`` for Hermitian ``h``."""
    return matrix_exp(-1j * t / hbar * as_operator(h, "hamiltonian"))


def eig_min_hermitian(a) -> float:
    a = as_operator(a)
    return float(np.linalg.eigvalsh(0.5 * (a + dag(a)))[0])


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    a, b = as_operator(a), as_operator(b)
    _check_same_dim(a, b)
    return 0.5 * float(np.sum(np.linalg.svd(a - b, compute_uv=False)))


def state_errors(rho: np.ndarray) -> tuple[float, float, float]:
    """Return ``(|tr - 1|, max|rho - rho^dag|, smallest eigenvalue)``."""
    return (
        abs(complex(np.trace(rho)) - 1.0),
        herm_error(rho),
        eig_min_hermitian(rho),
    )


def validate_density(rho, tol: Tolerances = DEFAULT_TOL, name: str = "rho") -> np.ndarray:
    """Return ``rho`` as an operator after checking the density-matrix invariants."""
    rho = as_operator(rho, name)
    tr_err, h_err, lam = state_errors(rho)
    if h_err > tol.herm:
        raise ValueError(f"{name} is not Hermitian (deviation {h_err:.3g})")
    if tr_err > tol.trace:
        raise ValueError(f"{name} does not have unit trace (deviation {tr_err:.3g})")
    if lam < -tol.psd:
        raise ValueError(f"{name} is not positive semidefinite (eigenvalue {lam:.3g})")
    return rho


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj())


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(dim, dim, order="F")


# Two-level conventions, basis ordered {|e>, |g>}.
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = dag(SIGMA_MINUS)
KET_E = np.array([1, 0], dtype=complex)
KET_G = np.array([0, 1], dtype=complex)
