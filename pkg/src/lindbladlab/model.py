"""System/bath Hamiltonians, the coupling ``hbar (S B^dag + S^dag B)`` and the
interaction-picture transforms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bathcorr import BathSpec, b_op, bath_hamiltonian
from .linops import (
    MAX_DIM,
    CompositeDims,
    as_operator,
    commutator,
    dag,
    herm_error,
    identity,
    kron,
    unitary,
)


@dataclass
class SystemSpec:
    h_s: np.ndarray
    s_op: np.ndarray
    hbar: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        self.h_s = as_operator(self.h_s, "h_s")
        self.s_op = as_operator(self.s_op, "s_op")
        if self.h_s.shape != self.s_op.shape:
            raise ValueError("h_s and s_op must have the same dimension")
        if herm_error(self.h_s) > 1e-12:
            raise ValueError("h_s must be Hermitian")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def dim_s(self) -> int:
        return self.h_s.shape[0]

    def commutation_defect(self) -> float:
        """``max |[S, H_S]|``; zero is required by the derivation pipeline."""
        return float(np.max(np.abs(commutator(self.s_op, self.h_s))))

    def require_commuting(self, tol: float = 1e-10) -> None:
        defect = self.commutation_defect()
        if defect > tol:
            raise ValueError(f"[s_op, h_s] != 0 (max entry {defect:.3g} > {tol:g})")


@dataclass
class CompositeModel:
    sys: SystemSpec
    h_total: np.ndarray
    h_b: np.ndarray
    h_sb: np.ndarray
    bath: BathSpec | None = None

    @property
    def dims(self) -> CompositeDims:
        return CompositeDims(self.sys.dim_s, self.h_b.shape[0])

    @property
    def h0(self) -> np.ndarray:
        """Free part ``H_S x 1 + 1 x H_B``."""
        ds, db = self.dims
        return kron(self.sys.h_s, identity(db)) + kron(identity(ds), self.h_b)


def build_interaction(s_op, b, hbar: float = 1.0) -> np.ndarray:
    """``hbar * (S x B^dag + S^dag x B)``."""
    s_op, b = as_operator(s_op, "s_op"), as_operator(b, "b_op")
    return hbar * (kron(s_op, dag(b)) + kron(dag(s_op), b))


def build_total(sys: SystemSpec, h_b, h_sb, bath: BathSpec | None = None) -> CompositeModel:
    h_b = as_operator(h_b, "h_b")
    h_sb = as_operator(h_sb, "h_sb")
    ds, db = sys.dim_s, h_b.shape[0]
    if h_sb.shape[0] != ds * db:
        raise ValueError(
            f"h_sb dimension {h_sb.shape[0]} does not match {ds} x {db} composite space"
        )
    h = kron(sys.h_s, identity(db)) + kron(identity(ds), h_b) + sys.alpha * h_sb
    if herm_error(h) > 1e-10:
        raise ValueError("total Hamiltonian is not Hermitian")
    return CompositeModel(sys=sys, h_total=h, h_b=h_b, h_sb=h_sb, bath=bath)


def composite_from_bath(sys: SystemSpec, bath: BathSpec) -> CompositeModel:
    """Assemble the full model for a bosonic bath: ``H_B = hbar sum w_k a^dag a``,
    coupling through ``B = sum conj(g_k) a_k``."""
    total = sys.dim_s * bath.space.dim
    if total > MAX_DIM:
        raise ValueError(f"composite dimension {total} exceeds cap {MAX_DIM}")
    h_b = bath_hamiltonian(bath, sys.hbar)
    h_sb = build_interaction(sys.s_op, b_op(bath), sys.hbar)
    return build_total(sys, h_b, h_sb, bath=bath)


def to_interaction_picture(o, h0, t: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(+i h0 t/hbar) o exp(-i h0 t/hbar)``."""
    u = unitary(h0, t, hbar)
    return dag(u) @ np.asarray(o, dtype=complex) @ u


def from_interaction_picture(o, h0, t: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i h0 t/hbar) o exp(+i h0 t/hbar)``; inverse of :func:`to_interaction_picture`."""
    u = unitary(h0, t, hbar)
    return u @ np.asarray(o, dtype=complex) @ dag(u)


def check_first_order_vanishes(b, rho_b) -> float:
    """``max(|tr(B rho_B)|, |tr(B^dag rho_B)|)``, the size of the first-order term."""
    b, rho_b = as_operator(b, "b_op"), as_operator(rho_b, "rho_b")
    return max(abs(np.trace(b @ rho_b)), abs(np.trace(dag(b) @ rho_b)))


def excitation_number(p_excited: np.ndarray, bath_number: np.ndarray) -> np.ndarray:
    """``P_e x 1 + 1 x N_B`` for a system projector ``P_e`` and bath number operator."""
    ds, db = p_excited.shape[0], bath_number.shape[0]
    return kron(p_excited, identity(db)) + kron(identity(ds), bath_number)
