"""Dense Lindblad dynamics with a time-dependent Jaynes-Cummings Hamiltonian.

This is the reference (full density matrix) integrator.  It handles any
state, including coherences between excitation sectors, and is what the
fast sector engine in :mod:`photon_engine.sectors` is checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import TraceDriftError, TruncationError
from .jc_model import (
    ModelParams,
    PistonProtocol,
    coupling_operator,
    mode_frequency,
    mode_frequency_rate,
)
from .quantum_ops import ATOM, CAVITY, HilbertSpec, annihilation, embed, pauli, top_fock_population

TRACE_DRIFT_TOL = 1e-6
TRUNCATION_TOL = 1e-6


@dataclass(frozen=True)
class BathCoupling:
    """Thermal bath characterised by its mean resonant photon number."""

    target: str
    n_avg: float
    gamma_rate: float

    def __post_init__(self):
        if self.target not in (CAVITY, ATOM):
            raise ValueError(f"bath target must be 'cavity' or 'atom', got {self.target!r}")
        if not self.n_avg >= 0:
            raise ValueError(f"n_avg must be >= 0, got {self.n_avg}")
        if not self.gamma_rate > 0:
            raise ValueError(f"gamma_rate must be positive, got {self.gamma_rate}")

    @property
    def emission_rate(self) -> float:
        return self.gamma_rate * (self.n_avg + 1)

    @property
    def absorption_rate(self) -> float:
        return self.gamma_rate * self.n_avg


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step settings shared by the dense and sector integrators.

    The step is the largest that satisfies all of: ``dt <= dt_max``,
    ``dt <= (2 pi / omega_max) / substep_rule`` and at least ``min_samples``
    steps per stroke.  The dense integrator additionally applies the
    substep rule to the spectral spread of H.  ``stability_cap`` (dense integrator only) further limits
    the step to the explicit RK4 stability region of the full generator.
    """

    dt_max: float = 1.0
    substep_rule: float = 40.0
    min_samples: int = 200
    stability_cap: bool = True

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not self.substep_rule > 0:
            raise ValueError("substep_rule must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")

    def steps(self, duration: float, omega_max: float) -> int:
        dt = min(self.dt_max, 2 * math.pi / omega_max / self.substep_rule)
        return max(self.min_samples, math.ceil(duration / dt - 1e-9))


def stroke_omega_max(params: ModelParams, protocol: PistonProtocol) -> float:
    L_min = min(protocol.L_start, protocol.L_end)
    return max(params.omega_A, mode_frequency(params, L_min))


@lru_cache(maxsize=32)
def _jump_ops(target: str, n_max: int):
    space = HilbertSpec(n_max)
    if target == CAVITY:
        lower = embed(annihilation(space), CAVITY, space)
    else:
        lower = embed(pauli("minus"), ATOM, space)
    return lower, lower.conj().T


def jump_operators(bath: BathCoupling, space: HilbertSpec):
    """``(A_-, A_+)`` embedded in the composite space."""
    return _jump_ops(bath.target, space.n_max)


def dissipator(rho: np.ndarray, bath: BathCoupling) -> np.ndarray:
    space = HilbertSpec.from_dim(rho.shape[0])
    lower, raise_ = jump_operators(bath, space)
    out = np.zeros_like(rho, dtype=complex)
    for rate, A in ((bath.absorption_rate, raise_), (bath.emission_rate, lower)):
        if rate == 0:
            continue
        AdA = A.conj().T @ A
        out += rate * (A @ rho @ A.conj().T - 0.5 * (AdA @ rho + rho @ AdA))
    return out


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, bath: BathCoupling | None = None) -> np.ndarray:
    """``-i[H, rho] + D[rho]``."""
    rho = np.asarray(rho)
    H = np.asarray(H)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or H.shape != rho.shape:
        raise ValueError(f"shape mismatch: rho {rho.shape}, H {H.shape}")
    out = -1j * (H @ rho - rho @ H)
    if bath is not None:
        out += dissipator(rho, bath)
    return out


class _HamiltonianPieces:
    """Pre-embedded operators so that H(L) is a cheap linear combination."""

    def __init__(self, params: ModelParams, space: HilbertSpec, zero_point: bool = True):
        self.params = params
        n_op = np.arange(space.dim_cavity, dtype=float) + (0.5 if zero_point else 0.0)
        self.number = embed(np.diag(n_op).astype(complex), CAVITY, space)
        self.atom = 0.5 * params.omega_A * embed(pauli("z"), ATOM, space)
        self.coupling = coupling_operator(space)

    def H(self, L: float) -> np.ndarray:
        w = mode_frequency(self.params, L)
        return self.atom + w * (self.number + self.params.kappa * self.coupling)

    def H_dot(self, L: float, dL_dt: float) -> np.ndarray:
        w_dot = mode_frequency_rate(self.params, L, dL_dt)
        return w_dot * (self.number + self.params.kappa * self.coupling)


def _spectral_spread(pieces: _HamiltonianPieces, protocol: PistonProtocol) -> float:
    ev = np.linalg.eigvalsh(pieces.H(min(protocol.L_start, protocol.L_end)))
    return float(ev[-1] - ev[0])


def _stability_dt(pieces: _HamiltonianPieces, protocol: PistonProtocol, bath, space: HilbertSpec) -> float:
    rate = _spectral_spread(pieces, protocol)
    if bath is not None:
        norm_sq = space.n_max if bath.target == CAVITY else 1.0
        rate += 2 * (bath.emission_rate + bath.absorption_rate) * norm_sq
    return 2.5 / rate


def evolve_stroke(rho, protocol: PistonProtocol, bath: BathCoupling | None, params: ModelParams,
                  integ: IntegratorConfig, sampler=None, *, t0: float = 0.0, integrand=None,
                  zero_point: bool = True, truncation_tol: float | None = TRUNCATION_TOL,
                  dt: float | None = None):
    """Integrate the master equation over one stroke with classical RK4.

    ``sampler(t, L, rho, integrals)`` is called at the stroke start and after
    every step; ``integrals`` holds the running integrals of the optional
    ``integrand(t, L, rho) -> array`` (evaluated at the RK4 stages).  The
    state is symmetrised after each step; its trace is monitored but never
    renormalised.  ``dt`` overrides the configured step (diagnostics only).

    Returns ``(rho_end, integrals)``.
    """
    rho = np.array(rho, dtype=complex)
    space = HilbertSpec.from_dim(rho.shape[0])
    pieces = _HamiltonianPieces(params, space, zero_point)
    tau = protocol.duration

    if dt is None:
        # a general density matrix carries coherences at every Bohr frequency of H,
        # so the step also resolves the full spectral spread, not just omega_max
        n_steps = integ.steps(tau, max(stroke_omega_max(params, protocol), _spectral_spread(pieces, protocol)))
        if integ.stability_cap:
            n_steps = max(n_steps, math.ceil(tau / _stability_dt(pieces, protocol, bath, space)))
    else:
        n_steps = max(1, math.ceil(tau / dt - 1e-9))
    h = tau / n_steps

    def rhs(t, state):
        L = protocol.length(t)
        out = lindblad_rhs(state, pieces.H(L), bath)
        if integrand is None:
            return out, None
        return out, np.asarray(integrand(t, L, state), dtype=float)

    trace0 = np.trace(rho).real
    acc = None
    if integrand is not None:
        acc = np.zeros_like(np.asarray(integrand(0.0, protocol.L_start, rho), dtype=float))
    if sampler is not None:
        sampler(t0, protocol.L_start, rho, acc)

    for i in range(n_steps):
        t = i * h
        k1, r1 = rhs(t, rho)
        k2, r2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
        k3, r3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
        k4, r4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if acc is not None:
            acc = acc + (h / 6.0) * (r1 + 2 * r2 + 2 * r3 + r4)
        drift = abs(np.trace(rho).real - trace0)
        if not np.isfinite(drift) or drift > TRACE_DRIFT_TOL:
            raise TraceDriftError(
                f"trace drift {drift:.3e} at t={t0 + t + h:.6g} (step size {h:.3g} too large?)")
        t_next = tau if i == n_steps - 1 else (i + 1) * h
        if sampler is not None:
            sampler(t0 + t_next, protocol.length(t_next), rho, acc)

    if truncation_tol is not None:
        top = top_fock_population(rho, space)
        if top > truncation_tol:
            raise TruncationError(
                f"top-5 Fock population {top:.3e} exceeds {truncation_tol:g} at t={t0 + tau:.6g}; raise n_max")
    return rho, acc
