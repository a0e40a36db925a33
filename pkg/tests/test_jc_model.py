import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photon_engine.jc_model import (
    ModelParams,
    PistonProtocol,
    block_hamiltonians,
    coupling_operator,
    dressed_basis,
    exact_block_energies,
    hamiltonian,
    hamiltonian_derivative,
    mixing_angle,
    mode_frequency,
    piston_length,
    pressure_operator,
    printed_block_energies,
)
from photon_engine.quantum_ops import EXCITED, GROUND, HilbertSpec, hermitian_eigensystem

W1 = 2 * math.pi / 12.5


def test_mode_frequency_examples():
    p = ModelParams(omega_A=W1)
    assert mode_frequency(p, 12.5) == pytest.approx(0.50265, abs=5e-6)
    assert mode_frequency(p, 7.5) == pytest.approx(0.83776, abs=5e-6)
    assert mode_frequency(ModelParams(omega_A=1.0, alpha_0=1.0), 1.0) == 1.0
    with pytest.raises(ValueError):
        mode_frequency(p, 0.0)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(omega_A=0.0)
    with pytest.raises(ValueError):
        ModelParams(omega_A=1.0, kappa=0.2)
    with pytest.raises(ValueError):
        ModelParams(omega_A=1.0, alpha_0=-1)
    with pytest.warns(UserWarning):
        ModelParams(omega_A=1.0, kappa=0.05)
    assert ModelParams.resonant(12.5).omega_A == pytest.approx(W1)


def test_uncoupled_spectrum():
    space = HilbertSpec(6)
    p = ModelParams(omega_A=0.7, kappa=0.0)
    w = mode_frequency(p, 9.0)
    vals, _ = hermitian_eigensystem(hamiltonian(p, 9.0, space))
    n = np.arange(7)
    expected = np.sort(np.concatenate([0.35 + w * (n + 0.5), -0.35 + w * (n + 0.5)]))
    np.testing.assert_allclose(vals, expected, atol=1e-12)


def test_vacuum_ground_is_eigenstate():
    space = HilbertSpec(5)
    p = ModelParams(omega_A=W1, kappa=1e-2)
    H = hamiltonian(p, 10.0, space)
    v = np.zeros(space.dim_total)
    v[space.index(0, GROUND)] = 1
    np.testing.assert_allclose(H @ v, (-W1 / 2 + mode_frequency(p, 10.0) / 2) * v, atol=1e-14)


def test_resonant_n0_splitting():
    p = ModelParams.resonant(12.5, kappa=1e-3)
    vals = np.linalg.eigvalsh(block_hamiltonians(p, 12.5, 3)[0])
    assert vals[1] - vals[0] == pytest.approx(2 * 1e-3 * W1, rel=1e-10)


def test_hamiltonian_is_hermitian_over_run_range():
    space = HilbertSpec(20)
    p = ModelParams.resonant(12.5)
    for L in np.linspace(5, 17.5, 7):
        H = hamiltonian(p, L, space)
        assert np.abs(H - H.conj().T).max() < 1e-12


def test_hamiltonian_derivative_matches_finite_difference():
    space = HilbertSpec(8)
    p = ModelParams.resonant(12.5, kappa=1e-2)
    L, v, h = 10.0, -0.05, 1e-4
    fd = (hamiltonian(p, L + v * h, space) - hamiltonian(p, L - v * h, space)) / (2 * h)
    np.testing.assert_allclose(hamiltonian_derivative(p, L, v, space), fd, atol=1e-9)


def test_mixing_angle_limits():
    p = ModelParams.resonant(12.5, kappa=1e-3)
    np.testing.assert_allclose(mixing_angle(p, 12.5, np.arange(5)), math.pi / 2)
    decoupled = ModelParams(omega_A=2.0, kappa=1e-9)
    assert abs(mixing_angle(decoupled, 12.5, 0)) < 1e-8


@pytest.mark.parametrize("L", [12.5, 10.0, 7.5, 15.0])
def test_dressed_vectors_match_analytic_form(L):
    """Upper state of block n is cos(phi/2)|n,e> + sin(phi/2)|n+1,g>."""
    p = ModelParams.resonant(12.5, kappa=1e-2)
    n_max = 8
    _, vecs = np.linalg.eigh(block_hamiltonians(p, L, n_max))
    phi = mixing_angle(p, L, np.arange(n_max))
    upper = vecs[:, :, 1]
    analytic = np.stack([np.cos(phi / 2), np.sin(phi / 2)], axis=1)
    overlap = np.abs(np.sum(upper * analytic, axis=1))
    np.testing.assert_allclose(overlap, 1.0, atol=1e-12)


def test_dressed_basis_resonance_vectors():
    p = ModelParams.resonant(12.5, kappa=1e-3)
    space = HilbertSpec(4)
    basis = dressed_basis(p, 12.5, space)
    V = basis.eigenvectors
    col = np.argmax(np.abs(V[space.index(0, EXCITED)]))
    assert abs(V[space.index(0, EXCITED), col]) == pytest.approx(1 / math.sqrt(2))
    assert abs(V[space.index(1, GROUND), col]) == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("L", [12.5, 9.0, 7.5])
def test_dressed_basis_consistency(L):
    space = HilbertSpec(12)
    p = ModelParams.resonant(12.5, kappa=1e-3)
    basis = dressed_basis(p, L, space)
    V = basis.eigenvectors
    np.testing.assert_allclose(V.conj().T @ V, np.eye(space.dim_total), atol=1e-9)
    assert np.all(np.diff(basis.eigenvalues) >= 0)
    ref, _ = hermitian_eigensystem(hamiltonian(p, L, space))
    np.testing.assert_allclose(basis.eigenvalues, ref, atol=1e-9)
    H = hamiltonian(p, L, space)
    np.testing.assert_allclose(V.conj().T @ H @ V, np.diag(basis.eigenvalues), atol=1e-10)


def test_dressed_basis_tie_break_is_deterministic():
    # kappa = 0 makes |n,e> and |n+1,g> exactly degenerate at resonance
    p = ModelParams.resonant(12.5, kappa=0.0)
    space = HilbertSpec(5)
    a = dressed_basis(p, 12.5, space)
    b = dressed_basis(p, 12.5, space)
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)


def test_coupling_matrix_elements_in_dressed_states():
    space = HilbertSpec(10)
    X = coupling_operator(space)
    for L in (12.5, 10.0, 7.5):
        p = ModelParams.resonant(12.5, kappa=1e-3)
        _, vecs = np.linalg.eigh(block_hamiltonians(p, L, space.n_max))
        phi = mixing_angle(p, L, np.arange(6))
        for n in range(6):
            for col, sign in ((1, 1), (0, -1)):
                v = np.zeros(space.dim_total)
                v[space.index(n, EXCITED)] = vecs[n, 0, col]
                v[space.index(n + 1, GROUND)] = vecs[n, 1, col]
                assert v @ X @ v == pytest.approx(sign * math.sqrt(n + 1) * math.sin(phi[n]), abs=1e-8)


def test_exact_block_energies_match_diagonalisation():
    p = ModelParams.resonant(12.5, kappa=1e-2)
    for L in (12.5, 8.0):
        vals = np.linalg.eigvalsh(block_hamiltonians(p, L, 6))
        lo, hi = exact_block_energies(p, L, np.arange(6))
        np.testing.assert_allclose(vals[:, 0], lo, atol=1e-12)
        np.testing.assert_allclose(vals[:, 1], hi, atol=1e-12)


def test_printed_energies_differ_from_spectrum():
    """The commonly quoted closed form is off by more than an O(kappa^2) amount;
    the size of the gap is pinned here so a change in either formula shows up."""
    p = ModelParams.resonant(12.5, kappa=1e-3)
    n = np.arange(6)
    lo, hi = exact_block_energies(p, 12.5, n)
    plo, phi_ = printed_block_energies(p, 12.5, n)
    # at resonance both forms split by 2 Omega sqrt(n+1) but are offset by omega/2
    np.testing.assert_allclose(lo - plo, W1 / 2, atol=1e-12)
    np.testing.assert_allclose(hi - phi_, W1 / 2, atol=1e-12)
    assert np.abs(lo - plo).max() > 10 * p.kappa**2 * W1


def test_pressure_operator_examples():
    space = HilbertSpec(6)
    p = ModelParams.resonant(12.5)
    L = 10.0
    w = mode_frequency(p, L)
    pi = pressure_operator(p, L, 3.0, space)
    assert np.abs(pi - pi.conj().T).max() < 1e-14
    for n in range(space.n_max):  # the top level is a truncation artefact
        idx = space.index(n, GROUND)
        assert pi[idx, idx].real == pytest.approx(w * (2 * n + 1) / (2 * L))
    q = 0.4 ** np.arange(space.dim_cavity)
    q /= q.sum()
    rho = np.kron(np.diag([0, 1]), np.diag(q))
    n_avg = q @ np.arange(space.dim_cavity)
    expect = np.trace(pressure_operator(p, L, 0.0, space) @ rho).real
    top = q[-1] * (w / (2 * L)) * (space.n_max + 1)  # truncated a a^dag on the top level
    assert expect == pytest.approx(w * (2 * n_avg + 1) / (2 * L) - top, rel=1e-12)


def test_pressure_expectation_is_real():
    rng = np.random.default_rng(4)
    space = HilbertSpec(5)
    p = ModelParams.resonant(12.5)
    m = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    value = np.trace(pressure_operator(p, 9.0, 1.7, space) @ rho)
    assert abs(value.imag) < 1e-9


def test_piston_examples():
    lin = PistonProtocol(12.5, 7.5, 1000.0)
    assert piston_length(lin, 500.0) == pytest.approx(10.0)
    assert lin.velocity(10.0) == pytest.approx(-0.005)
    inv = PistonProtocol(12.5, 7.5, 1000.0, gamma=-1)
    ts = np.linspace(0, 1000, 11)
    omegas = [2 * math.pi / inv.length(t) for t in ts]
    np.testing.assert_allclose(np.diff(omegas, 2), 0, atol=1e-12)
    with pytest.raises(ValueError):
        PistonProtocol(12.5, 7.5, 10.0, gamma=0)
    with pytest.raises(ValueError):
        lin.length(1001.0)
    with pytest.raises(ValueError):
        PistonProtocol(12.5, -1.0, 10.0)


@settings(max_examples=60, deadline=None)
@given(
    L0=st.floats(1.0, 20.0), L1=st.floats(1.0, 20.0), tau=st.floats(0.1, 5000.0),
    gamma=st.sampled_from([-2.0, -1.0, 0.5, 1.0, 2.0, 3.0]), frac=st.floats(0.0, 1.0),
)
def test_piston_properties(L0, L1, tau, gamma, frac):
    proto = PistonProtocol(L0, L1, tau, gamma)
    assert proto.length(0.0) == pytest.approx(L0, rel=1e-12)
    assert abs(proto.length(tau) - L1) <= 1e-12 * L1
    L = proto.length(frac * tau)
    assert min(L0, L1) * (1 - 1e-12) <= L <= max(L0, L1) * (1 + 1e-12)
    # velocity is the derivative of the length law
    t = min(max(frac * tau, 1e-3 * tau), 0.999 * tau)
    h = 1e-6 * tau
    fd = (proto.length(t + h) - proto.length(t - h)) / (2 * h)
    assert proto.velocity(t) == pytest.approx(fd, rel=1e-5, abs=1e-12)
