import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photon_engine import sectors
from photon_engine.cycles import CycleConfig, run_cycle
from photon_engine.dynamics import IntegratorConfig
from photon_engine.errors import TruncationError
from photon_engine.jc_model import (
    ModelParams,
    dressed_basis,
    hamiltonian,
    hamiltonian_derivative,
    mode_frequency,
    pressure_operator,
)
from photon_engine.quantum_ops import GROUND, HilbertSpec
from photon_engine.thermo import (
    StrokeLedger,
    alicki_work_rate,
    energy,
    expansion_work_increment,
    geometric_populations,
    heat_from_ledger,
    required_n_max,
    thermal_atom_populations,
    thermal_product_state,
)

W1 = 2 * math.pi / 12.5


def vacuum_ground(space):
    rho = np.zeros((space.dim_total,) * 2, dtype=complex)
    i = space.index(0, GROUND)
    rho[i, i] = 1
    return rho


@pytest.mark.parametrize("kappa", [0.0, 1e-3, 1e-2])
def test_energy_of_vacuum_ground(kappa):
    space = HilbertSpec(4)
    p = ModelParams(omega_A=W1, kappa=kappa)
    w = mode_frequency(p, 9.0)
    assert energy(vacuum_ground(space), hamiltonian(p, 9.0, space)) == pytest.approx(w / 2 - W1 / 2, abs=1e-14)


def test_energy_of_thermal_cavity_with_ground_atom():
    space = HilbertSpec(120)
    p = ModelParams(omega_A=W1, kappa=0.0)
    q = geometric_populations(3.0, space.dim_cavity)
    rho = np.diag(np.concatenate([np.zeros_like(q), q])).astype(complex)
    w = mode_frequency(p, 10.0)
    assert energy(rho, hamiltonian(p, 10.0, space)) == pytest.approx(w * 3.5 - W1 / 2, rel=1e-10)


def test_energy_shift_and_shape_check():
    space = HilbertSpec(3)
    p = ModelParams.resonant(12.5, kappa=1e-2)
    rho = vacuum_ground(space)
    H = hamiltonian(p, 12.5, space)
    assert energy(rho, H + 0.75 * np.eye(space.dim_total)) == pytest.approx(energy(rho, H) + 0.75, abs=1e-14)
    with pytest.raises(ValueError):
        energy(rho, np.eye(3))


def test_alicki_rate_signs():
    space = HilbertSpec(40)
    p = ModelParams(omega_A=W1, kappa=0.0)
    rho = thermal_product_state(p, 10.0, 1.0, space)
    assert alicki_work_rate(rho, hamiltonian_derivative(p, 10.0, 0.0, space)) == 0.0
    # expansion lowers the mode frequency: the system does positive work
    assert alicki_work_rate(rho, hamiltonian_derivative(p, 10.0, 0.05, space)) > 0
    assert alicki_work_rate(rho, hamiltonian_derivative(p, 10.0, -0.05, space)) < 0


@pytest.mark.parametrize("L", [12.5, 9.0])
def test_alicki_rate_matches_dressed_spectral_sum(L):
    """A state diagonal in the dressed basis: -Tr[dH/dt rho] = -sum_k p_k dE_k/dt,
    with dE_k/dt taken by finite differences of the numerical spectrum."""
    space = HilbertSpec(30)
    p = ModelParams.resonant(12.5, kappa=1e-3)
    v, h = -0.05, 1e-5
    basis = dressed_basis(p, L, space)
    weights = np.exp(-basis.eigenvalues / 2.0)
    weights /= weights.sum()
    rho = (basis.eigenvectors * weights) @ basis.eigenvectors.conj().T
    ahead = dressed_basis(p, L + v * h, space).eigenvalues
    behind = dressed_basis(p, L - v * h, space).eigenvalues
    spectral = -weights @ ((ahead - behind) / (2 * h))
    assert alicki_work_rate(rho, hamiltonian_derivative(p, L, v, space)) == pytest.approx(spectral, rel=1e-7)


def test_alicki_rate_thermal_product_against_bare_spectrum():
    space = HilbertSpec(60)
    p = ModelParams.resonant(12.5, kappa=1e-3)
    L, v = 10.0, -0.05
    rho = thermal_product_state(p, L, 2.0, space)
    q = np.real(np.diagonal(rho)).reshape(2, -1).sum(axis=0)
    n = np.arange(space.dim_cavity)
    w_dot = -p.alpha_0 * v / L**2
    expected = -w_dot * (q @ (n + 0.5))
    assert alicki_work_rate(rho, hamiltonian_derivative(p, L, v, space)) == pytest.approx(expected, rel=1e-6)


def test_expansion_work_increment_examples():
    space = HilbertSpec(5)
    p = ModelParams.resonant(12.5)
    L = 9.0
    pi = pressure_operator(p, L, 0.0, space)
    rho = vacuum_ground(space)
    assert expansion_work_increment(rho, pi, 0.0) == 0.0
    w = mode_frequency(p, L)
    dV = 1e-3
    assert expansion_work_increment(rho, pi, dV) == pytest.approx(w / (2 * L * p.surface) * dV, rel=1e-12)
    assert expansion_work_increment(rho, pi, -dV) < 0


@pytest.mark.parametrize("L", [12.5, 7.5])
def test_spectral_pressure_formula(L):
    space = HilbertSpec(150)
    p = ModelParams(omega_A=W1, kappa=0.0)
    rho = thermal_product_state(p, L, 5.0, space)
    w = mode_frequency(p, L)
    q = np.real(np.diagonal(rho)).reshape(2, -1).sum(axis=0)
    spectral = w**2 / (p.alpha_0 * p.surface) * (q @ (np.arange(space.dim_cavity) + 0.5))
    measured = float(np.trace(pressure_operator(p, L, 3.0, space) @ rho).real)
    assert measured == pytest.approx(spectral, rel=1e-7)


def test_thermal_product_state_examples():
    space = HilbertSpec(120)
    p = ModelParams.resonant(12.5)
    rho = thermal_product_state(p, 12.5, 5.0, space)
    diag = np.real(np.diagonal(rho)).reshape(2, -1)
    assert diag[1].sum() == pytest.approx(6 / 11, abs=1e-12)
    assert diag[0].sum() == pytest.approx(5 / 11, abs=1e-12)
    cav = diag.sum(axis=0)
    assert cav[0] == pytest.approx(1 / 6, rel=1e-6)
    assert cav[1] == pytest.approx(5 / 36, rel=1e-6)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
    vac = thermal_product_state(p, 12.5, 0.0, HilbertSpec(3))
    np.testing.assert_array_equal(vac, vacuum_ground(HilbertSpec(3)))


def test_thermal_state_truncation_guard():
    p = ModelParams.resonant(12.5)
    with pytest.raises(TruncationError, match="need n_max"):
        thermal_product_state(p, 12.5, 5.0, HilbertSpec(40))
    with pytest.raises(ValueError):
        thermal_product_state(p, 0.0, 1.0, HilbertSpec(40))
    with pytest.raises(ValueError):
        geometric_populations(-1.0, 3)


@settings(max_examples=40, deadline=None)
@given(n_avg=st.floats(0.0, 40.0))
def test_required_n_max_is_sufficient(n_avg):
    m = required_n_max(n_avg)
    q = geometric_populations(n_avg, m + 1)
    q /= q.sum()
    assert q[-5:].sum() <= 1e-7 * (1 + 1e-9)
    p_e, p_g = thermal_atom_populations(n_avg)
    assert p_e + p_g == pytest.approx(1.0)
    assert p_e <= p_g


def test_heat_from_ledger_and_first_law():
    assert heat_from_ledger(1.5, 0.25) == 1.75
    entry = StrokeLedger(index=2, kind="isochoric", bath="cavity", t_start=0, t_end=1, L_start=7.5, L_end=7.5,
                         energy_start=1.0, energy_end=3.0, w_exp=0.0, w_al=0.0)
    assert entry.heat == entry.delta_energy == 2.0
    assert entry.first_law_residual() == 0.0


def _short_otto(zero_point: bool):
    config = CycleConfig(speed=0.5, n_cold=0.5, n_hot=1.0)
    params = ModelParams.resonant(12.5, kappa=1e-3)
    state = sectors.SectorState.thermal(0.5, 40)
    _, record = run_cycle(state, config, params, IntegratorConfig(), zero_point=zero_point, debug_heat=True)
    return record


def test_cycle_ledger_heat_placement():
    record = _short_otto(True)
    s1, s2, s3, s4 = record.strokes
    for unitary in (s1, s3):
        assert abs(unitary.heat) < 1e-8 * abs(unitary.delta_energy)
    for contact in (s2, s4):
        assert contact.w_exp == 0.0
        assert contact.heat == pytest.approx(contact.delta_energy, abs=1e-12)
        # independent Tr[H D(rho)] quadrature agrees with the ledger heat
        assert contact.heat_direct == pytest.approx(contact.heat, rel=1e-6, abs=1e-12)


def test_zero_point_term_is_needed_for_work_agreement():
    with_zp = _short_otto(True)
    without = _short_otto(False)
    p = ModelParams.resonant(12.5)
    for a, b in zip(with_zp.strokes, without.strokes):
        # the pressure trace does not involve the Hamiltonian offset
        assert a.w_exp == pytest.approx(b.w_exp, rel=1e-12, abs=1e-15)
        shift = -0.5 * (mode_frequency(p, a.L_end) - mode_frequency(p, a.L_start))
        assert a.w_al - b.w_al == pytest.approx(shift, abs=1e-9)
    compression = with_zp.strokes[0]
    assert compression.w_al == pytest.approx(compression.w_exp, rel=1e-5)
    assert abs(without.strokes[0].w_al - without.strokes[0].w_exp) > 0.1 * abs(compression.w_exp)
