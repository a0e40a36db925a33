"""Dense operators on the truncated atom (x) cavity Hilbert space.

Factor ordering is fixed as atom first, cavity second.  The atom basis is
``(|e>, |g>)`` so that ``sigma_z = diag(1, -1)``; the composite index of
``|n, s>`` is ``s * (n_max + 1) + n`` with ``s = 0`` for ``|e>`` and ``s = 1``
for ``|g>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOM = "atom"
CAVITY = "cavity"

EXCITED = 0
GROUND = 1


@dataclass(frozen=True)
class HilbertSpec:
    """Truncation of the atom (x) cavity space at Fock level ``n_max``."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def dim_cavity(self) -> int:
        return self.n_max + 1

    @property
    def dim_atom(self) -> int:
        return 2

    @property
    def dim_total(self) -> int:
        return self.dim_atom * self.dim_cavity

    def index(self, n: int, atom: int) -> int:
        """Composite index of ``|n, atom>`` (``atom`` is EXCITED or GROUND)."""
        if not 0 <= n <= self.n_max:
            raise IndexError(f"Fock level {n} outside 0..{self.n_max}")
        return atom * self.dim_cavity + n

    @classmethod
    def from_dim(cls, dim: int) -> "HilbertSpec":
        if dim % 2 or dim < 4:
            raise ValueError(f"dimension {dim} is not 2 * (n_max + 1) with n_max >= 1")
        return cls(dim // 2 - 1)


def annihilation(space: HilbertSpec) -> np.ndarray:
    """Truncated ladder operator ``a`` on the cavity factor alone."""
    return np.diag(np.sqrt(np.arange(1, space.dim_cavity, dtype=float)), k=1).astype(complex)


def number_operator(space: HilbertSpec) -> np.ndarray:
    return np.diag(np.arange(space.dim_cavity, dtype=float)).astype(complex)


def pauli(which: str) -> np.ndarray:
    """``sigma_z``, ``sigma_+`` or ``sigma_-`` in the ``(|e>, |g>)`` basis."""
    if which == "z":
        return np.array([[1, 0], [0, -1]], dtype=complex)
    if which == "plus":
        return np.array([[0, 1], [0, 0]], dtype=complex)
    if which == "minus":
        return np.array([[0, 0], [1, 0]], dtype=complex)
    raise ValueError(f"unknown Pauli operator {which!r}; expected 'z', 'plus' or 'minus'")


def embed(op: np.ndarray, factor: str, space: HilbertSpec) -> np.ndarray:
    """Lift a single-factor operator to the composite space (atom (x) cavity)."""
    op = np.asarray(op)
    if factor == ATOM:
        if op.shape != (2, 2):
            raise ValueError(f"atom operator must be 2x2, got {op.shape}")
        return np.kron(op, np.eye(space.dim_cavity))
    if factor == CAVITY:
        d = space.dim_cavity
        if op.shape != (d, d):
            raise ValueError(f"cavity operator must be {d}x{d}, got {op.shape}")
        return np.kron(np.eye(2), op)
    raise ValueError(f"unknown factor {factor!r}; expected 'atom' or 'cavity'")


def is_hermitian(op: np.ndarray, atol: float = 1e-10) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.abs(op - op.conj().T).max() <= atol


def hermitian_eigensystem(op: np.ndarray, atol: float = 1e-10):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix."""
    op = np.asarray(op)
    if not is_hermitian(op, atol):
        raise ValueError("hermitian_eigensystem requires a Hermitian matrix")
    evals, evecs = np.linalg.eigh(op)
    return evals, evecs


def state_diagnostics(rho: np.ndarray) -> dict:
    """Trace error, anti-Hermitian part and smallest eigenvalue of a density matrix."""
    rho = np.asarray(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    sym = 0.5 * (rho + rho.conj().T)
    return {
        "trace_error": float(abs(np.trace(rho) - 1.0)),
        "hermiticity": herm,
        "min_eigenvalue": float(np.linalg.eigvalsh(sym)[0]),
    }


def check_density_matrix(rho: np.ndarray, trace_tol=1e-9, herm_tol=1e-10, eig_tol=1e-9) -> None:
    d = state_diagnostics(rho)
    if d["trace_error"] > trace_tol:
        raise ValueError(f"trace off by {d['trace_error']:.3e}")
    if d["hermiticity"] > herm_tol:
        raise ValueError(f"not Hermitian: {d['hermiticity']:.3e}")
    if d["min_eigenvalue"] < -eig_tol:
        raise ValueError(f"negative eigenvalue {d['min_eigenvalue']:.3e}")


def fock_populations(rho: np.ndarray, space: HilbertSpec) -> np.ndarray:
    """Reduced cavity photon-number distribution of a composite state."""
    diag = np.real(np.diagonal(rho)).reshape(2, space.dim_cavity)
    return diag.sum(axis=0)


def top_fock_population(rho: np.ndarray, space: HilbertSpec, levels: int = 5) -> float:
    return float(fock_populations(rho, space)[-levels:].sum())


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
