"""Energy, work and heat bookkeeping.

Sign convention: positive work is work done *by* the system on the piston,
so the first law reads ``dE = dQ - dW``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError
from .jc_model import ModelParams
from .quantum_ops import HilbertSpec

TAIL_TOL = 1e-6


def energy(rho: np.ndarray, H: np.ndarray) -> float:
    """Tr[H rho]."""
    rho = np.asarray(rho)
    H = np.asarray(H)
    if rho.shape != H.shape:
        raise ValueError(f"shape mismatch: rho {rho.shape}, H {H.shape}")
    value = np.einsum("ij,ji->", H, rho)
    assert abs(value.imag) < 1e-9 * max(1.0, abs(value.real)), f"complex energy {value}"
    return float(value.real)


def alicki_work_rate(rho: np.ndarray, dH_dt: np.ndarray) -> float:
    """``-Tr[dH/dt rho]``; its time integral is the Alicki work."""
    return -float(np.einsum("ij,ji->", dH_dt, rho).real)


def expansion_work_increment(rho: np.ndarray, pi_op: np.ndarray, dV: float) -> float:
    """``Tr[pi rho] dV``."""
    if dV == 0:
        return 0.0
    return float(np.einsum("ij,ji->", pi_op, rho).real) * dV


def geometric_populations(n_avg: float, n_levels: int) -> np.ndarray:
    """``<n>^n / (1 + <n>)^(n+1)`` for n = 0..n_levels-1 (not renormalised)."""
    if n_avg < 0:
        raise ValueError(f"n_avg must be >= 0, got {n_avg}")
    n = np.arange(n_levels)
    if n_avg == 0:
        out = np.zeros(n_levels)
        out[0] = 1.0
        return out
    ratio = n_avg / (1.0 + n_avg)
    return ratio**n / (1.0 + n_avg)


def thermal_tail_weight(n_avg: float, n_max: int) -> float:
    """Geometric weight beyond level ``n_max``."""
    if n_avg == 0:
        return 0.0
    return (n_avg / (1.0 + n_avg)) ** (n_max + 1)


def thermal_atom_populations(n_avg: float) -> tuple[float, float]:
    """``(p_e, p_g) = (<n>, 1 + <n>) / (1 + 2<n>)``."""
    return n_avg / (1 + 2 * n_avg), (1 + n_avg) / (1 + 2 * n_avg)


def required_n_max(n_avg: float, top_weight: float = 1e-7, levels: int = 5) -> int:
    """Smallest truncation whose top ``levels`` thermal populations at ``n_avg``
    stay below ``top_weight`` (a margin under the runtime check)."""
    if n_avg == 0:
        return max(levels, 1)
    r = n_avg / (1 + n_avg)
    block = 1 - r**levels
    m = math.log(top_weight / block) / math.log(r) + levels - 1
    return max(levels, math.ceil(m))


def thermal_product_state(params: ModelParams, L: float, n_avg: float, space: HilbertSpec) -> np.ndarray:
    """Product of cavity and atom thermal states at photon parameter ``n_avg``.

    The cavity distribution is truncated at ``n_max`` and renormalised; a
    discarded tail heavier than ``TAIL_TOL`` is an error.  ``params`` and
    ``L`` only enter through validation since the baths are specified by
    ``<n>`` rather than temperature.
    """
    if not L > 0:
        raise ValueError("cavity length must be positive")
    tail = thermal_tail_weight(n_avg, space.n_max)
    if tail > TAIL_TOL:
        raise TruncationError(
            f"thermal tail {tail:.3e} beyond n_max={space.n_max} for <n>={n_avg}; "
            f"need n_max >= {required_n_max(n_avg)}")
    q = geometric_populations(n_avg, space.dim_cavity)
    q /= q.sum()
    p_e, p_g = thermal_atom_populations(n_avg)
    return np.diag(np.concatenate([p_e * q, p_g * q])).astype(complex)


def heat_from_ledger(delta_energy: float, alicki_work: float) -> float:
    """First law: ``Q = dE + W_Al``."""
    return delta_energy + alicki_work


@dataclass
class StrokeLedger:
    """Energy balance of one stroke (values before the closing measurement)."""

    index: int
    kind: str
    bath: str | None
    t_start: float
    t_end: float
    L_start: float
    L_end: float
    energy_start: float
    energy_end: float
    w_exp: float
    w_al: float
    heat_direct: float | None = None

    @property
    def delta_energy(self) -> float:
        return self.energy_end - self.energy_start

    @property
    def heat(self) -> float:
        return heat_from_ledger(self.delta_energy, self.w_al)

    def first_law_residual(self) -> float:
        """``|dE - (Q - W_Al)|``; zero by construction unless ``heat_direct`` is used."""
        q = self.heat if self.heat_direct is None else self.heat_direct
        return abs(self.delta_energy - (q - self.w_al))
