"""Fast self-checks behind ``photon-engine validate``.

Every check returns a :class:`CheckResult` with the measured numbers, so the
report is useful even when everything passes.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dynamics, sectors
from .cycles import CycleConfig, default_n_max, dephase, run_cycle
from .dynamics import BathCoupling, IntegratorConfig, lindblad_rhs
from .errors import TraceDriftError
from .jc_model import (
    ModelParams,
    PistonProtocol,
    block_hamiltonians,
    coupling_operator,
    dressed_basis,
    exact_block_energies,
    hamiltonian,
    mixing_angle,
    printed_block_energies,
)
from .quantum_ops import HilbertSpec, state_diagnostics
from .thermo import thermal_product_state


@dataclass
class CheckResult:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def random_block_state(rng: np.random.Generator, n_max: int) -> sectors.SectorState:
    """Random valid sector state (each 2x2 block positive, unit trace)."""
    M = n_max
    pe = np.empty(M + 1)
    pg = np.empty(M + 1)
    c = np.empty(M, dtype=complex)
    pg[0] = rng.random()
    pe[M] = rng.random()
    for n in range(M):
        v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        block = v @ v.conj().T
        pe[n], pg[n + 1], c[n] = block[0, 0].real, block[1, 1].real, block[0, 1]
    total = pe.sum() + pg.sum()
    return sectors.SectorState(pe / total, pg / total, c / total)


def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    v = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = v @ v.conj().T
    return rho / np.trace(rho).real


def check_cptp(seed: int = 7, runs: int = 6, n_max: int = 6) -> CheckResult:
    rng = np.random.default_rng(seed)
    space = HilbertSpec(n_max)
    worst = {"trace_error": 0.0, "hermiticity": 0.0, "min_eigenvalue": 1.0}

    def sampler(t, L, rho, acc):
        d = state_diagnostics(rho)
        worst["trace_error"] = max(worst["trace_error"], d["trace_error"])
        worst["hermiticity"] = max(worst["hermiticity"], d["hermiticity"])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], d["min_eigenvalue"])

    for i in range(runs):
        params = ModelParams(omega_A=float(rng.uniform(0.3, 0.9)), kappa=float(rng.uniform(0, 1e-2)))
        bath = None if i % 3 == 0 else BathCoupling(("cavity", "atom")[i % 2], float(rng.uniform(0, 0.5)),
                                                    float(rng.uniform(0.01, 0.1)))
        L0 = float(rng.uniform(8, 12))
        protocol = PistonProtocol(L0, L0 - 1.0, 5.0) if i % 2 else PistonProtocol.frozen(L0, 5.0)
        rho = random_density_matrix(rng, space.dim_total)
        dynamics.evolve_stroke(rho, protocol, bath, params, IntegratorConfig(min_samples=50), sampler,
                               truncation_tol=None)
    ok = worst["trace_error"] < 1e-8 and worst["hermiticity"] < 1e-10 and worst["min_eigenvalue"] > -1e-8
    return CheckResult("cptp_dense_trajectories", ok, worst)


def check_sector_generator(seed: int = 3, n_max: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    params = ModelParams(omega_A=0.5, kappa=5e-3)
    space = HilbertSpec(n_max)
    state = random_block_state(rng, n_max)
    worst = 0.0
    for bath in (None, BathCoupling("cavity", 3.0, 0.05), BathCoupling("atom", 2.0, 0.05)):
        dense = lindblad_rhs(state.to_dense(), hamiltonian(params, 9.0, space), bath)
        worst = max(worst, float(np.abs(sectors.sector_rhs(state, params, 9.0, bath).to_dense() - dense).max()))
    return CheckResult("sector_generator_matches_dense", worst < 1e-12, {"max_abs_diff": worst})


def check_thermal_fixed_point(n_avg: float = 5.0, n_max: int = 80) -> CheckResult:
    params = ModelParams(omega_A=0.5, kappa=0.0)
    space = HilbertSpec(n_max)
    rho = thermal_product_state(params, 10.0, n_avg, space)
    rhs = lindblad_rhs(rho, hamiltonian(params, 10.0, space), BathCoupling("cavity", n_avg, 0.01))
    value = float(np.abs(rhs).max())
    return CheckResult("thermal_state_is_stationary", value < 1e-8, {"max_abs_rhs": value})


def check_eigenbasis(n_levels: int = 6, n_max: int = 12) -> CheckResult:
    """Dressed-state coupling matrix elements against ``+-sqrt(n+1) sin(phi_n)``,
    and the gap between the commonly printed dressed energies and the exact ones."""
    base = 2 * math.pi / 12.5
    worst_elem = 0.0
    worst_diag = 0.0
    energy_gap = 0.0
    space = HilbertSpec(n_max)
    X = coupling_operator(space)
    n = np.arange(n_levels)
    for L in (12.5, 10.0, 7.5):  # zero, moderate and large detuning
        params = ModelParams(omega_A=base, kappa=1e-3)
        basis = dressed_basis(params, L, space)
        H = hamiltonian(params, L, space)
        V = basis.eigenvectors
        worst_diag = max(worst_diag, float(np.abs(V.conj().T @ H @ V - np.diag(basis.eigenvalues)).max()))
        _, vecs = np.linalg.eigh(block_hamiltonians(params, L, n_max))
        phi = mixing_angle(params, L, n)
        for k in n:
            for col, sign in ((1, 1.0), (0, -1.0)):  # eigh sorts ascending: column 1 is the upper state
                v = np.zeros(space.dim_total, dtype=complex)
                v[space.index(k, 0)] = vecs[k, 0, col]
                v[space.index(k + 1, 1)] = vecs[k, 1, col]
                elem = float(np.real(v.conj() @ X @ v))
                worst_elem = max(worst_elem, abs(elem - sign * math.sqrt(k + 1) * math.sin(phi[k])))
        lo, hi = exact_block_energies(params, L, n)
        plo, phi_ = printed_block_energies(params, L, n)
        energy_gap = max(energy_gap, float(np.abs(lo - plo).max()), float(np.abs(hi - phi_).max()))
    ok = worst_elem < 1e-8 and worst_diag < 1e-10
    return CheckResult("dressed_basis", ok, {
        "max_matrix_element_error": worst_elem,
        "max_offdiagonal_in_dressed_basis": worst_diag,
        "printed_vs_exact_energy_gap": energy_gap,
    }, note="the printed-energy gap is reported, not asserted")


def cycle_work_gap(kappa: float, speed: float = 0.5, cycles: int = 2) -> dict:
    """Largest relative |W_exp(t) - W_Al(t)| over an Otto cycle.

    The gap comes from the atom-field coherence left by the energy
    measurements, so the cycle before the measured one seeds it.
    """
    params = ModelParams.resonant(12.5, kappa=kappa)
    config = CycleConfig(kind="otto", speed=speed, n_cold=2.0, n_hot=4.0)
    state = sectors.SectorState.thermal(config.n_cold, default_n_max(config))
    for _ in range(cycles):
        state, record = run_cycle(state, config, params, IntegratorConfig())
    s = record.series
    gap = float(np.abs(s["w_exp"] - s["w_al"]).max())
    scale = float(np.abs(s["w_exp"]).max())
    return {"gap": gap, "relative_gap": gap / scale}


def check_kappa_scaling() -> CheckResult:
    small = cycle_work_gap(1e-3)
    large = cycle_work_gap(1e-2)
    ratio = large["relative_gap"] / small["relative_gap"]
    return CheckResult("work_gap_scales_as_kappa_squared", 30 <= ratio <= 300, {
        "relative_gap_kappa_1e-3": small["relative_gap"],
        "relative_gap_kappa_1e-2": large["relative_gap"],
        "ratio": ratio,
    })


def check_first_law(n_max: int = 60) -> CheckResult:
    """Short Otto cycle with the independent Tr[H D(rho)] heat quadrature."""
    params = ModelParams.resonant(12.5)
    config = CycleConfig(kind="otto", speed=0.5, n_cold=1.0, n_hot=3.0, gamma_rate=0.05)
    _, record = run_cycle(sectors.SectorState.thermal(1.0, n_max), config, params, IntegratorConfig(),
                          debug_heat=True)
    worst = 0.0
    for s in record.strokes:
        scale = max(abs(s.delta_energy), abs(s.heat_direct or 0.0), abs(s.w_al), 1e-12)
        worst = max(worst, s.first_law_residual() / scale)
    return CheckResult("first_law_per_stroke", worst < 1e-6, {"max_relative_residual": worst})


def check_dephasing(seed: int = 11, n_max: int = 8) -> CheckResult:
    rng = np.random.default_rng(seed)
    params = ModelParams.resonant(12.5, kappa=1e-2)
    space = HilbertSpec(n_max)
    basis = dressed_basis(params, 9.0, space)
    H = hamiltonian(params, 9.0, space)
    worst_tr = worst_e = 0.0
    for _ in range(20):
        rho = random_density_matrix(rng, space.dim_total)
        out = dephase(rho, basis)
        worst_tr = max(worst_tr, abs(np.trace(out).real - np.trace(rho).real))
        worst_e = max(worst_e, abs(np.trace(H @ out).real - np.trace(H @ rho).real))
    ok = bool(worst_tr < 1e-12 and worst_e < 1e-9)
    return CheckResult("dephasing_preserves_trace_and_energy", ok, {"trace": float(worst_tr), "energy": float(worst_e)})


def check_negative_control(n_max: int = 40) -> CheckResult:
    """A step ten times the stability limit must be caught as trace drift."""
    params = ModelParams.resonant(12.5)
    space = HilbertSpec(n_max)
    rho = thermal_product_state(params, 12.5, 2.0, space)
    protocol = PistonProtocol.frozen(7.5, 50.0)
    bath = BathCoupling("cavity", 4.0, 0.05)
    integ = IntegratorConfig(stability_cap=False)
    steps = integ.steps(protocol.duration, dynamics.stroke_omega_max(params, protocol))
    dt = 10 * protocol.duration / steps
    try:
        dynamics.evolve_stroke(rho, protocol, bath, params, integ, dt=dt, truncation_tol=None)
    except TraceDriftError as exc:
        return CheckResult("negative_control_large_dt", True, {"dt": dt}, note=str(exc))
    return CheckResult("negative_control_large_dt", False, {"dt": dt}, note="trace drift went undetected")


CHECKS = (
    check_cptp,
    check_sector_generator,
    check_thermal_fixed_point,
    check_eigenbasis,
    check_dephasing,
    check_first_law,
    check_kappa_scaling,
    check_negative_control,
)


def run_all() -> list[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failed check
            results.append(CheckResult(check.__name__.removeprefix("check_"), False,
                                       note=f"{type(exc).__name__}: {exc}"))
    return results
