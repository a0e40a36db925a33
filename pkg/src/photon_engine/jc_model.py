"""Time-dependent Jaynes-Cummings model of the doped cavity and its piston."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .quantum_ops import (
    ATOM,
    CAVITY,
    EXCITED,
    GROUND,
    HilbertSpec,
    annihilation,
    embed,
    pauli,
)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the doped cavity (natural units).

    ``alpha_0`` fixes the mode frequency through ``omega_C = alpha_0 / L``;
    ``kappa`` is the dimensionless atom-field coupling, ``Omega = kappa * omega_C``.
    ``kappa = 0`` is accepted as the decoupled limit.
    """

    omega_A: float
    alpha_0: float = 2 * math.pi
    kappa: float = 1e-3
    surface: float = 1.0

    def __post_init__(self):
        if not self.omega_A > 0:
            raise ValueError(f"omega_A must be positive, got {self.omega_A}")
        if not self.alpha_0 > 0:
            raise ValueError(f"alpha_0 must be positive, got {self.alpha_0}")
        if not 0 <= self.kappa <= 0.1:
            raise ValueError(f"kappa must lie in [0, 0.1], got {self.kappa}")
        if not self.surface > 0:
            raise ValueError(f"surface must be positive, got {self.surface}")
        if self.kappa > 1e-2:
            warnings.warn(f"kappa={self.kappa} is outside the weak-coupling regime", stacklevel=2)

    @classmethod
    def resonant(cls, L: float, alpha_0: float = 2 * math.pi, kappa: float = 1e-3, surface: float = 1.0):
        """Atom tuned to the mode at length ``L``."""
        return cls(omega_A=alpha_0 / L, alpha_0=alpha_0, kappa=kappa, surface=surface)


@dataclass(frozen=True)
class PistonProtocol:
    """Wall position law ``L(t) = (L_start**g + v t)**(1/g)`` on ``[0, duration]``."""

    L_start: float
    L_end: float
    duration: float
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.L_start > 0 and self.L_end > 0):
            raise ValueError("piston lengths must be positive")
        if not self.duration > 0:
            raise ValueError("stroke duration must be positive")
        if self.gamma == 0:
            raise ValueError("gamma = 0 does not define a power-law protocol")

    @classmethod
    def frozen(cls, L: float, duration: float) -> "PistonProtocol":
        return cls(L, L, duration)

    @property
    def is_frozen(self) -> bool:
        return self.L_start == self.L_end

    @property
    def rate(self) -> float:
        """The constant ``v`` of the power law (a plain speed when gamma = 1)."""
        g = self.gamma
        return (self.L_end**g - self.L_start**g) / self.duration

    def _check_time(self, t: float) -> float:
        slack = 1e-9 * self.duration
        if t < -slack or t > self.duration + slack:
            raise ValueError(f"t={t} outside stroke [0, {self.duration}]")
        return min(max(t, 0.0), self.duration)

    def length(self, t: float) -> float:
        t = self._check_time(t)
        if self.is_frozen:
            return self.L_start
        if t == self.duration:
            return self.L_end
        if self.gamma == 1:
            return self.L_start + self.rate * t
        g = self.gamma
        return (self.L_start**g + self.rate * t) ** (1.0 / g)

    def velocity(self, t: float) -> float:
        """dL/dt."""
        t = self._check_time(t)
        if self.is_frozen:
            return 0.0
        if self.gamma == 1:
            return self.rate
        L = self.length(t)
        return self.rate * L ** (1.0 - self.gamma) / self.gamma


def piston_length(protocol: PistonProtocol, t: float) -> float:
    return protocol.length(t)


def mode_frequency(params: ModelParams, L: float) -> float:
    if not L > 0:
        raise ValueError(f"cavity length must be positive, got {L}")
    return params.alpha_0 / L


def mode_frequency_rate(params: ModelParams, L: float, dL_dt: float) -> float:
    """d(omega_C)/dt for a wall moving at dL/dt."""
    return -params.alpha_0 * dL_dt / L**2


def detuning(params: ModelParams, L: float) -> float:
    """``omega_C - omega_A``."""
    return mode_frequency(params, L) - params.omega_A


def coupling_operator(space: HilbertSpec) -> np.ndarray:
    """``a sigma_+ + a^dag sigma_-`` on the composite space."""
    a = embed(annihilation(space), CAVITY, space)
    sp = embed(pauli("plus"), ATOM, space)
    x = a @ sp
    return x + x.conj().T


def hamiltonian(params: ModelParams, L: float, space: HilbertSpec, zero_point: bool = True) -> np.ndarray:
    """``H = omega_A sigma_z / 2 + omega_C (a^dag a + 1/2) + kappa omega_C (a sigma_+ + h.c.)``.

    ``zero_point=False`` drops the ``omega_C / 2`` vacuum term (used only to
    show that it matters for the Alicki work).
    """
    w = mode_frequency(params, L)
    n_op = np.arange(space.dim_cavity, dtype=float)
    if zero_point:
        n_op = n_op + 0.5
    h_c = embed(np.diag(n_op).astype(complex), CAVITY, space)
    h_a = embed(pauli("z"), ATOM, space)
    return 0.5 * params.omega_A * h_a + w * h_c + params.kappa * w * coupling_operator(space)


def hamiltonian_derivative(params: ModelParams, L: float, dL_dt: float, space: HilbertSpec,
                           zero_point: bool = True) -> np.ndarray:
    """dH/dt = d(omega_C)/dt [a^dag a + 1/2 + kappa (a sigma_+ + h.c.)]."""
    w_dot = mode_frequency_rate(params, L, dL_dt)
    n_op = np.arange(space.dim_cavity, dtype=float)
    if zero_point:
        n_op = n_op + 0.5
    h_c = embed(np.diag(n_op).astype(complex), CAVITY, space)
    return w_dot * (h_c + params.kappa * coupling_operator(space))


def pressure_operator(params: ModelParams, L: float, t: float, space: HilbertSpec) -> np.ndarray:
    """Radiation pressure ``(w / 2V)(a^dag a + a a^dag - a a e^{-2iwt} - a^dag a^dag e^{2iwt})``."""
    w = mode_frequency(params, L)
    V = params.surface * L
    a = annihilation(space)
    ad = a.conj().T
    phase = np.exp(-2j * w * t)
    op = ad @ a + a @ ad - a @ a * phase - ad @ ad * np.conj(phase)
    return embed((w / (2 * V)) * op, CAVITY, space)


# --- dressed states -------------------------------------------------------

def block_hamiltonians(params: ModelParams, L: float, n_max: int) -> np.ndarray:
    """Real 2x2 blocks of H on span{|n,e>, |n+1,g>} for n = 0..n_max-1."""
    w = mode_frequency(params, L)
    n = np.arange(n_max, dtype=float)
    blocks = np.empty((n_max, 2, 2))
    blocks[:, 0, 0] = 0.5 * params.omega_A + w * (n + 0.5)
    blocks[:, 1, 1] = -0.5 * params.omega_A + w * (n + 1.5)
    blocks[:, 0, 1] = blocks[:, 1, 0] = params.kappa * w * np.sqrt(n + 1)
    return blocks


def mixing_angle(params: ModelParams, L: float, n) -> np.ndarray:
    """Dressing angle of block ``n``, ``atan2(2 Omega sqrt(n+1), omega_A - omega_C)``.

    With this orientation ``cos(phi/2)|n,e> + sin(phi/2)|n+1,g>`` is the upper
    dressed state of the block and the lower one is
    ``-sin(phi/2)|n,e> + cos(phi/2)|n+1,g>``.
    """
    w = mode_frequency(params, L)
    n = np.asarray(n, dtype=float)
    return np.arctan2(2 * params.kappa * w * np.sqrt(n + 1), params.omega_A - w)


def exact_block_energies(params: ModelParams, L: float, n) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues of block ``n``: ``(n+1) w -/+ sqrt(D^2 + 4 Omega^2 (n+1)) / 2``."""
    w = mode_frequency(params, L)
    n = np.asarray(n, dtype=float)
    half_split = 0.5 * np.sqrt(detuning(params, L) ** 2 + 4 * (params.kappa * w) ** 2 * (n + 1))
    return (n + 1) * w - half_split, (n + 1) * w + half_split


def printed_block_energies(params: ModelParams, L: float, n) -> tuple[np.ndarray, np.ndarray]:
    """Dressed energies in the commonly quoted form
    ``(n + 1/2) w -/+ sqrt(D^2 + kappa^2 w^2 (n+1))``.

    Kept for comparison only; it is *not* the spectrum of :func:`hamiltonian`.
    """
    w = mode_frequency(params, L)
    n = np.asarray(n, dtype=float)
    root = np.sqrt(detuning(params, L) ** 2 + (params.kappa * w) ** 2 * (n + 1))
    return (n + 0.5) * w - root, (n + 0.5) * w + root


@dataclass
class DressedBasis:
    """Numerical eigensystem of H(L), sorted ascending, eigenvectors as columns."""

    space: HilbertSpec
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    time_tag: float = 0.0


def dressed_basis(params: ModelParams, L: float, space: HilbertSpec, time_tag: float = 0.0) -> DressedBasis:
    """Eigenbasis of :func:`hamiltonian` built block by block.

    H conserves the excitation number, so every eigenvector lives in one
    sector: ``|0,g>``, ``|n_max,e>`` or a block span{|n,e>, |n+1,g>}.
    Diagonalising per block keeps the vectors sector-pure even where levels
    of different sectors happen to cross.  Exact ties are ordered by the
    index of the dominant bare-basis component.
    """
    M = space.n_max
    dim = space.dim_total
    w = mode_frequency(params, L)
    vals = np.empty(dim)
    vecs = np.zeros((dim, dim))

    i_0g = space.index(0, GROUND)
    vals[0] = -0.5 * params.omega_A + 0.5 * w
    vecs[i_0g, 0] = 1.0
    i_Me = space.index(M, EXCITED)
    vals[1] = 0.5 * params.omega_A + w * (M + 0.5)
    vecs[i_Me, 1] = 1.0

    bvals, bvecs = np.linalg.eigh(block_hamiltonians(params, L, M))
    n = np.arange(M)
    rows_e = n  # index(n, EXCITED)
    rows_g = space.dim_cavity + n + 1  # index(n + 1, GROUND)
    for k in range(2):
        cols = 2 + 2 * n + k
        vals[cols] = bvals[:, k]
        vecs[rows_e, cols] = bvecs[:, 0, k]
        vecs[rows_g, cols] = bvecs[:, 1, k]

    dominant = np.argmax(np.abs(vecs), axis=0)
    order = np.lexsort((dominant, vals))
    return DressedBasis(space, vals[order], vecs[:, order].astype(complex), time_tag)
