"""Composite Hilbert space: one truncated cavity mode and n qubits.

Conventions (fixed; file outputs and every operator in the package use them):

* Tensor order is cavity first, then qubits in index order:
  ``H = Fock(fock_dim) (x) C2 (x) ... (x) C2``.
* The qubit basis is ordered ``|e>, |g>`` so that ``sigma_z = diag(+1, -1)``
  and the lowering operator maps ``|e> -> |g>``.
* Fock states are ordered ``|0>, |1>, ...`` with ``a|m> = sqrt(m)|m-1>``.

A flat basis index decomposes as ``i = cavity_index * 2**n + qubit_bits``
where the qubit bits (0 = e, 1 = g) are read most-significant-first in
qubit order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatchError, LayoutError

__all__ = [
    "SystemLayout",
    "OperatorSet",
    "build_operators",
    "basis_state",
    "basis_vector",
    "partial_trace_qubits",
]

#: Refuse to build composite spaces larger than this (dense matrices only).
DEFAULT_DIM_CAP = 4096

_QUBIT_DIM = 2


@dataclass(frozen=True)
class SystemLayout:
    """Shape of the composite space.

    Parameters
    ----------
    n_qubits : int
        Number of two-level systems (0 allowed: bare cavity).
    fock_dim : int
        Cavity truncation; the Fock basis is ``|0> .. |fock_dim-1>``.
    dim_cap : int
        Hard cap on the total dimension; exceeding it raises ``LayoutError``.
    """

    n_qubits: int
    fock_dim: int
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        if self.n_qubits < 0:
            raise LayoutError(f"n_qubits must be >= 0, got {self.n_qubits}")
        if self.fock_dim < 2:
            raise LayoutError(f"fock_dim must be >= 2, got {self.fock_dim}")
        if self.total_dim > self.dim_cap:
            raise LayoutError(
                f"total dimension {self.total_dim} = {self.fock_dim} * "
                f"2**{self.n_qubits} exceeds the cap {self.dim_cap}; "
                "reduce fock_dim or n_qubits (or raise dim_cap)"
            )

    @property
    def qubit_dim(self) -> int:
        return _QUBIT_DIM**self.n_qubits

    @property
    def total_dim(self) -> int:
        return self.fock_dim * self.qubit_dim


# single-qubit operators in the {|e>, |g>} basis
_SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=np.complex128)  # |g><e|
_SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)  # |e><g|
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


def _annihilator(fock_dim: int) -> np.ndarray:
    a = np.zeros((fock_dim, fock_dim), dtype=np.complex128)
    for m in range(1, fock_dim):
        a[m - 1, m] = np.sqrt(m)
    return a


@dataclass(frozen=True)
class OperatorSet:
    """Dense operators embedded in the full composite space."""

    layout: SystemLayout
    a: np.ndarray
    a_dag: np.ndarray
    n_cavity: np.ndarray
    sigma_minus: tuple = field(default_factory=tuple)
    sigma_plus: tuple = field(default_factory=tuple)
    sigma_z: tuple = field(default_factory=tuple)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.layout.total_dim, dtype=np.complex128)


def build_operators(layout: SystemLayout) -> OperatorSet:
    """Embed cavity and per-qubit operators into the composite space."""
    f = layout.fock_dim
    n = layout.n_qubits
    a_local = _annihilator(f)
    eye_f = np.eye(f, dtype=np.complex128)
    eye_q = np.eye(_QUBIT_DIM, dtype=np.complex128)

    def embed_cavity(op):
        full = op
        for _ in range(n):
            full = linalg.kron(full, eye_q)
        return full

    def embed_qubit(op, j):
        full = eye_f
        for k in range(n):
            full = linalg.kron(full, op if k == j else eye_q)
        return full

    a = embed_cavity(a_local)
    return OperatorSet(
        layout=layout,
        a=a,
        a_dag=linalg.dag(a),
        n_cavity=embed_cavity(linalg.dag(a_local) @ a_local),
        sigma_minus=tuple(embed_qubit(_SIGMA_MINUS, j) for j in range(n)),
        sigma_plus=tuple(embed_qubit(_SIGMA_PLUS, j) for j in range(n)),
        sigma_z=tuple(embed_qubit(_SIGMA_Z, j) for j in range(n)),
    )


def _qubit_index(bits) -> int:
    """Flat index of a qubit configuration given as 'g'/'e' labels."""
    idx = 0
    for b in bits:
        if b not in ("g", "e"):
            raise LayoutError(f"qubit labels must be 'g' or 'e', got {b!r}")
        idx = 2 * idx + (0 if b == "e" else 1)
    return idx


def basis_vector(layout: SystemLayout, cavity_excitation: int, qubit_bits) -> np.ndarray:
    """Unit vector for a product basis state ``|m> (x) |b1..bn>``."""
    bits = list(qubit_bits)
    if len(bits) != layout.n_qubits:
        raise LayoutError(
            f"expected {layout.n_qubits} qubit labels, got {len(bits)}"
        )
    if not 0 <= cavity_excitation < layout.fock_dim:
        raise LayoutError(
            f"cavity excitation {cavity_excitation} outside truncation "
            f"[0, {layout.fock_dim - 1}]"
        )
    psi = np.zeros(layout.total_dim, dtype=np.complex128)
    psi[cavity_excitation * layout.qubit_dim + _qubit_index(bits)] = 1.0
    return psi


def basis_state(layout: SystemLayout, cavity_excitation: int, qubit_bits) -> np.ndarray:
    """Density matrix of a product basis state (pure, trace one)."""
    psi = basis_vector(layout, cavity_excitation, qubit_bits)
    return np.outer(psi, psi.conj())


def partial_trace_qubits(rho: np.ndarray, layout: SystemLayout) -> np.ndarray:
    """Trace out every qubit, returning the reduced cavity state.

    Works on any operator of the full dimension (not only states); the
    result has shape ``(fock_dim, fock_dim)``.
    """
    rho = np.asarray(rho)
    d = layout.total_dim
    if rho.shape != (d, d):
        raise DimensionMismatchError(
            f"state shape {rho.shape} does not match layout dimension {d}"
        )
    f, q = layout.fock_dim, layout.qubit_dim
    return np.einsum("ikjk->ij", rho.reshape(f, q, f, q))
