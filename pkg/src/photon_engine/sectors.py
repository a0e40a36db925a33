"""Excitation-sector representation and its fast stroke integrator.

H, both dissipators and the energy measurement all commute with the
excitation number ``a^dag a + sigma_+ sigma_-``.  A state that starts
block-diagonal in that number (every thermal product state does) stays so
for the whole cycle, and is then fully described by

* ``pe[n] = <n,e|rho|n,e>``, ``pg[n] = <n,g|rho|n,g>`` for n = 0..n_max,
* ``c[n] = <n,e|rho|n+1,g>`` for n = 0..n_max-1.

That is ``4 n_max + 2`` real numbers instead of ``(2 n_max + 2)^2`` complex
ones, and it removes the fast ``n omega_C`` phases from the problem.

The cavity dissipator is stiff on a truncated ladder (its spectral radius
grows like ``Gamma (2<n>+1) n_max``), so strokes are integrated with the
integrating-factor (Lawson) form of classical RK4: the constant dissipator is
propagated exactly with a precomputed matrix exponential and the
Hamiltonian part, together with the work integrands, goes through the
usual four stages at the stage times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .dynamics import (
    TRACE_DRIFT_TOL,
    TRUNCATION_TOL,
    BathCoupling,
    IntegratorConfig,
    stroke_omega_max,
)
from .errors import TraceDriftError, TruncationError
from .jc_model import ModelParams, PistonProtocol, mode_frequency, mode_frequency_rate
from .quantum_ops import CAVITY, EXCITED, GROUND, HilbertSpec
from .thermo import TAIL_TOL, geometric_populations, required_n_max, thermal_atom_populations, thermal_tail_weight


@dataclass
class SectorState:
    pe: np.ndarray
    pg: np.ndarray
    c: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.pe) - 1

    @property
    def space(self) -> HilbertSpec:
        return HilbertSpec(self.n_max)

    def trace(self) -> float:
        return float(self.pe.sum() + self.pg.sum())

    def fock_populations(self) -> np.ndarray:
        return self.pe + self.pg

    def top_population(self, levels: int = 5) -> float:
        return float(self.fock_populations()[-levels:].sum())

    def copy(self) -> "SectorState":
        return SectorState(self.pe.copy(), self.pg.copy(), self.c.copy())

    def pack(self) -> np.ndarray:
        M = self.n_max
        y = np.zeros((4, M + 1))
        y[0] = self.pe
        y[1] = self.pg
        y[2, :M] = self.c.real
        y[3, :M] = self.c.imag
        return y

    @classmethod
    def unpack(cls, y: np.ndarray) -> "SectorState":
        M = y.shape[1] - 1
        return cls(y[0].copy(), y[1].copy(), y[2, :M] + 1j * y[3, :M])

    def to_dense(self) -> np.ndarray:
        space = self.space
        M = self.n_max
        rho = np.zeros((space.dim_total, space.dim_total), dtype=complex)
        n = np.arange(M + 1)
        ie = space.index(0, EXCITED) + n
        ig = space.index(0, GROUND) + n
        rho[ie, ie] = self.pe
        rho[ig, ig] = self.pg
        rho[ie[:M], ig[1:]] = self.c
        rho[ig[1:], ie[:M]] = self.c.conj()
        return rho

    @classmethod
    def from_dense(cls, rho: np.ndarray, tol: float = 1e-12) -> "SectorState":
        """Extract the sector blocks; fails if ``rho`` has weight outside them."""
        rho = np.asarray(rho)
        space = HilbertSpec.from_dim(rho.shape[0])
        state = cls(
            np.real(np.diagonal(rho)[: space.dim_cavity]).copy(),
            np.real(np.diagonal(rho)[space.dim_cavity:]).copy(),
            rho[np.arange(space.n_max), space.dim_cavity + 1 + np.arange(space.n_max)].copy(),
        )
        rest = np.abs(rho - state.to_dense()).max()
        if rest > tol:
            raise ValueError(f"state has {rest:.3e} weight outside excitation sectors")
        return state

    @classmethod
    def thermal(cls, n_avg: float, n_max: int) -> "SectorState":
        """Sector form of the cavity (x) atom thermal product state."""
        tail = thermal_tail_weight(n_avg, n_max)
        if tail > TAIL_TOL:
            raise TruncationError(
                f"thermal tail {tail:.3e} beyond n_max={n_max} for <n>={n_avg}; "
                f"need n_max >= {required_n_max(n_avg)}")
        q = geometric_populations(n_avg, n_max + 1)
        q /= q.sum()
        p_e, p_g = thermal_atom_populations(n_avg)
        return cls(p_e * q, p_g * q, np.zeros(n_max, dtype=complex))


def is_sector_representable(rho: np.ndarray, tol: float = 1e-12) -> bool:
    try:
        SectorState.from_dense(rho, tol)
    except ValueError:
        return False
    return True


# --- observables ----------------------------------------------------------

@lru_cache(maxsize=16)
def _grid(n_max: int):
    n = np.arange(n_max + 1, dtype=float)
    sqrt_np1 = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    # diagonal of a^dag a + a a^dag with the truncated a a^dag
    press = 2 * n + 1
    press[-1] = n_max
    return n, sqrt_np1, press


def energy(state_or_y, params: ModelParams, L: float, zero_point: bool = True) -> float:
    """Tr[H(L) rho] for a sector state (or its packed array)."""
    y = state_or_y.pack() if isinstance(state_or_y, SectorState) else state_or_y
    return _energy_y(y, params, mode_frequency(params, L), zero_point)


def _energy_y(y, params, w, zero_point=True):
    M = y.shape[1] - 1
    n, sq, _ = _grid(M)
    pop = y[0] + y[1]
    zp = 0.5 if zero_point else 0.0
    return float(
        0.5 * params.omega_A * (y[0].sum() - y[1].sum())
        + w * (n @ pop + zp * pop.sum())
        + 2 * params.kappa * w * (sq @ y[2, :M])
    )


def pressure(state_or_y, params: ModelParams, L: float) -> float:
    """<pi> at length L; the squeezing terms vanish on sector states."""
    y = state_or_y.pack() if isinstance(state_or_y, SectorState) else state_or_y
    _, _, press = _grid(y.shape[1] - 1)
    w = mode_frequency(params, L)
    return float(w / (2 * params.surface * L) * (press @ (y[0] + y[1])))


def coupling_expectation(state: SectorState) -> float:
    """<a sigma_+ + a^dag sigma_->."""
    _, sq, _ = _grid(state.n_max)
    return float(2 * sq @ state.c.real)


# --- dissipators ----------------------------------------------------------

def _cavity_generators(bath: BathCoupling, M: int):
    """Tridiagonal generators on the population ladder and on the c ladder."""
    gm, gp = bath.emission_rate, bath.absorption_rate
    n = np.arange(M + 1, dtype=float)
    up = n + 1  # diagonal of truncated a a^dag
    up[-1] = 0.0
    B = np.diag(-(gm * n + gp * up))
    B += np.diag(gm * n[1:], 1)  # from p[n+1], weight gm (n+1)
    B += np.diag(gp * n[1:], -1)  # from p[n-1], weight gp n
    m = n[:M]
    B1 = np.zeros((M + 1, M + 1))  # padded: last row/column inert
    B1[:M, :M] = np.diag(-(0.5 * gm * (2 * m + 1) + 0.5 * gp * (up[:M] + up[1:])))
    if M > 1:
        off = np.sqrt((m[:-1] + 1) * (m[:-1] + 2))
        B1[: M - 1, 1:M] += np.diag(gm * off)
        B1[1:M, : M - 1] += np.diag(gp * off)
    return B, B1


@lru_cache(maxsize=64)
def _cavity_propagators(n_avg: float, gamma_rate: float, M: int, h_half: float):
    B, B1 = _cavity_generators(BathCoupling(CAVITY, n_avg, gamma_rate), M)
    out = []
    for gen in (B, B1):
        E = expm(h_half * gen).T
        # far off-band entries underflow to subnormals, which makes every product ~5x slower
        E[np.abs(E) < 1e-200] = 0.0
        out.append(np.ascontiguousarray(E))
    return tuple(out)


class _CavityDecay:
    def __init__(self, bath: BathCoupling, M: int, h_half: float):
        self.B, self.B1 = _cavity_generators(bath, M)
        self.EPt, self.ECt = _cavity_propagators(bath.n_avg, bath.gamma_rate, M, h_half)

    def apply(self, y1, y2):
        pops = np.concatenate((y1[:2], y2[:2])) @ self.EPt
        cohs = np.concatenate((y1[2:], y2[2:])) @ self.ECt
        return np.concatenate((pops[:2], cohs[:2])), np.concatenate((pops[2:], cohs[2:]))

    def rate(self, y):
        return np.concatenate((y[:2] @ self.B.T, y[2:] @ self.B1.T))


class _AtomDecay:
    def __init__(self, bath: BathCoupling, M: int, h_half: float):
        self.gm, self.gp = bath.emission_rate, bath.absorption_rate
        s = self.gm + self.gp
        self.s = s
        self.f = self.gp / s
        self.pop_decay = math.exp(-s * h_half)
        self.coh_decay = math.exp(-0.5 * s * h_half)

    def _one(self, y):
        out = np.empty_like(y)
        P = y[0] + y[1]
        eq = self.f * P
        out[0] = eq + (y[0] - eq) * self.pop_decay
        out[1] = P - out[0]
        out[2:] = y[2:] * self.coh_decay
        return out

    def apply(self, y1, y2):
        return self._one(y1), self._one(y2)

    def rate(self, y):
        out = np.empty_like(y)
        out[0] = -self.gm * y[0] + self.gp * y[1]
        out[1] = -out[0]
        out[2:] = -0.5 * self.s * y[2:]
        return out


def _decay(bath: BathCoupling | None, M: int, h_half: float):
    if bath is None:
        return None
    if bath.target == CAVITY:
        return _CavityDecay(bath, M, h_half)
    return _AtomDecay(bath, M, h_half)


def sector_rhs(state: SectorState, params: ModelParams, L: float, bath: BathCoupling | None) -> SectorState:
    """d(rho)/dt in sector form at a frozen length (for cross-checks)."""
    y = state.pack()
    w = mode_frequency(params, L)
    dy = _hamiltonian_part(y, w, w - params.omega_A, params.kappa)
    dec = _decay(bath, state.n_max, 0.0)
    if dec is not None:
        dy = dy + dec.rate(y)
    return SectorState.unpack(dy)


def _hamiltonian_part(y, w, delta, kappa):
    M = y.shape[1] - 1
    _, sq, _ = _grid(M)
    g = kappa * w * sq
    cr, ci = y[2, :M], y[3, :M]
    dy = np.zeros_like(y)
    flow = 2 * g * ci
    dy[0, :M] = -flow
    dy[1, 1:] = flow
    dy[2, :M] = -delta * ci
    dy[3, :M] = delta * cr - g * (y[1, 1:] - y[0, :M])
    return dy


# --- stroke integration ---------------------------------------------------

@dataclass
class StrokeTrace:
    """Per-step samples of one stroke (first row is the stroke start)."""

    t: np.ndarray
    L: np.ndarray
    energy: np.ndarray
    pressure: np.ndarray
    w_exp: np.ndarray
    w_al: np.ndarray
    heat_direct: np.ndarray | None = None
    n_steps: int = 0
    dt: float = 0.0
    max_trace_drift: float = 0.0
    top_population: float = 0.0
    extras: dict = field(default_factory=dict)


def evolve_stroke(state: SectorState, protocol: PistonProtocol, bath: BathCoupling | None,
                  params: ModelParams, integ: IntegratorConfig, *, t0: float = 0.0,
                  zero_point: bool = True, debug_heat: bool = False,
                  truncation_tol: float | None = TRUNCATION_TOL, dt: float | None = None):
    """Integrate one stroke in sector form.

    Returns ``(state_end, trace)``; the work columns of ``trace`` are the
    running Alicki and expansion work, integrated through the same RK4 stages
    as the state.
    """
    M = state.n_max
    tau = protocol.duration
    if dt is None:
        n_steps = integ.steps(tau, stroke_omega_max(params, protocol))
    else:
        n_steps = max(1, math.ceil(tau / dt - 1e-9))
    h = tau / n_steps
    dec = _decay(bath, M, 0.5 * h)
    track_heat = debug_heat and dec is not None
    n_rates = 3 if track_heat else 2
    kappa, omega_A, S = params.kappa, params.omega_A, params.surface
    _, sq, press = _grid(M)
    n_grid = _grid(M)[0]
    zp = 0.5 if zero_point else 0.0

    def stage(t, y):
        L = protocol.length(t)
        L_dot = protocol.velocity(t)
        w = params.alpha_0 / L
        w_dot = mode_frequency_rate(params, L, L_dot)
        dy = _hamiltonian_part(y, w, w - omega_A, kappa)
        pop = y[0] + y[1]
        x = 2 * (sq @ y[2, :M])
        rates = np.empty(n_rates)
        rates[0] = w * L_dot / (2 * L) * (press @ pop)
        rates[1] = -w_dot * (n_grid @ pop + zp * pop.sum() + kappa * x)
        if track_heat:
            rates[2] = _energy_y(dec.rate(y), params, w, zero_point)
        return dy, rates

    y = state.pack()
    trace0 = y[0].sum() + y[1].sum()
    acc = np.zeros(n_rates)
    ts = t0 + h * np.arange(n_steps + 1)
    ts[-1] = t0 + tau
    Ls = np.empty(n_steps + 1)
    es = np.empty(n_steps + 1)
    ps = np.empty(n_steps + 1)
    cum = np.zeros((n_steps + 1, n_rates))
    Ls[0] = protocol.L_start
    es[0] = _energy_y(y, params, params.alpha_0 / Ls[0], zero_point)
    ps[0] = pressure(y, params, Ls[0])
    max_drift = 0.0

    for i in range(n_steps):
        t = i * h
        k1, r1 = stage(t, y)
        if dec is None:
            a1, a2 = y, k1
        else:
            a1, a2 = dec.apply(y, k1)
        k2, r2 = stage(t + 0.5 * h, a1 + (0.5 * h) * a2)
        k3, r3 = stage(t + 0.5 * h, a1 + (0.5 * h) * k2)
        z1 = a1 + h * k3
        z2 = a1 + (h / 6) * a2 + (h / 3) * (k2 + k3)
        if dec is not None:
            z1, z2 = dec.apply(z1, z2)
        t_next = tau if i == n_steps - 1 else t + h
        k4, r4 = stage(t_next, z1)
        y = z2 + (h / 6) * k4
        acc = acc + (h / 6) * (r1 + 2 * r2 + 2 * r3 + r4)

        drift = abs(y[0].sum() + y[1].sum() - trace0)
        if not np.isfinite(drift) or drift > TRACE_DRIFT_TOL:
            raise TraceDriftError(f"trace drift {drift:.3e} at t={t0 + t_next:.6g}")
        max_drift = max(max_drift, drift)
        L = protocol.length(t_next)
        Ls[i + 1] = L
        es[i + 1] = _energy_y(y, params, params.alpha_0 / L, zero_point)
        ps[i + 1] = pressure(y, params, L)
        cum[i + 1] = acc

    end = SectorState.unpack(y)
    top = end.top_population()
    if truncation_tol is not None and top > truncation_tol:
        raise TruncationError(
            f"top-5 Fock population {top:.3e} exceeds {truncation_tol:g} at t={t0 + tau:.6g}; raise n_max")
    trace = StrokeTrace(
        t=ts, L=Ls, energy=es, pressure=ps, w_exp=cum[:, 0], w_al=cum[:, 1],
        heat_direct=cum[:, 2] if track_heat else None,
        n_steps=n_steps, dt=h, max_trace_drift=max_drift, top_population=top,
    )
    return end, trace


# --- measurement and distances -------------------------------------------

def block_eigensystem(params: ModelParams, L: float, n_max: int):
    from .jc_model import block_hamiltonians

    return np.linalg.eigh(block_hamiltonians(params, L, n_max))


def dephase(state: SectorState, params: ModelParams, L: float) -> SectorState:
    """Projective energy measurement (non-selective) in the eigenbasis of H(L)."""
    M = state.n_max
    _, V = block_eigensystem(params, L, M)
    a = state.pe[:M]
    d = state.pg[1:]
    b = state.c.real
    v0, v1 = V[:, 0, :], V[:, 1, :]  # (M, 2): components on |n,e>, |n+1,g> of each eigenvector
    q = v0**2 * a[:, None] + v1**2 * d[:, None] + 2 * v0 * v1 * b[:, None]
    pe = state.pe.copy()
    pg = state.pg.copy()
    pe[:M] = (q * v0**2).sum(axis=1)
    pg[1:] = (q * v1**2).sum(axis=1)
    c = (q * v0 * v1).sum(axis=1).astype(complex)
    return SectorState(pe, pg, c)


def trace_distance(s1: SectorState, s2: SectorState) -> float:
    """Half the trace norm of the difference (exact, block by block)."""
    dpe = s1.pe - s2.pe
    dpg = s1.pg - s2.pg
    dc = s1.c - s2.c
    M = s1.n_max
    a, d = dpe[:M], dpg[1:]
    mean = 0.5 * (a + d)
    r = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(dc) ** 2)
    blocks = 2 * np.maximum(np.abs(mean), r)
    return 0.5 * float(blocks.sum() + abs(dpg[0]) + abs(dpe[M]))


def min_eigenvalue(state: SectorState) -> float:
    M = state.n_max
    a, d = state.pe[:M], state.pg[1:]
    lo = 0.5 * (a + d) - np.sqrt((0.5 * (a - d)) ** 2 + np.abs(state.c) ** 2)
    return float(min(lo.min(), state.pg[0], state.pe[M]))
