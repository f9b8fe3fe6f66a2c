import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from einselect.analysis import PointerBasis, check_separability
from einselect.dynamics import (
    conditional_env_states,
    correlation_amplitude,
    evolve_dense,
    factorized_z,
    reduced_density,
    simulate_dense,
    simulate_spin_bath,
    time_grid,
    write_trajectory,
)
from einselect.errors import DimensionError, PointerBasisError
from einselect.linalg import SIGMA_Z, evolve_unitary
from einselect.models import BALANCED, build_nonseparable_xz, build_rotated_spin_bath, build_spin_bath, haar_qubit
from einselect.system import CompositeSystem, ProductInitialState

from conftest import random_state

UP = np.array([1, 0], dtype=complex)


def haar_factors(n, rng):
    return [haar_qubit(rng) for _ in range(n)]


def amps(init):
    return [f[0] for f in init.env_factors], [f[1] for f in init.env_factors]


class TestEvolveDense:
    def test_zero_hamiltonian(self, rng):
        model = CompositeSystem(2, (2,), np.zeros((4, 4)))
        psi0 = random_state(4, rng)
        states = evolve_dense(model, psi0, [0.0, 1.0, 7.5])
        np.testing.assert_allclose(states, np.tile(psi0, (3, 1)), atol=1e-15)

    def test_single_qubit(self):
        model = CompositeSystem(2, (), SIGMA_Z)
        (state,) = evolve_dense(model, BALANCED, [np.pi / 2])
        np.testing.assert_allclose(state, np.array([-1j, 1j]) / np.sqrt(2), atol=1e-15)

    def test_composition_oracle(self, rng):
        model, init = build_spin_bath(2, [0.7, 1.3], haar_factors(2, rng))
        (state,) = evolve_dense(model, init.psi, [1.0])
        half = evolve_unitary(model.hamiltonian(), 0.5)
        np.testing.assert_allclose(state, half @ (half @ init.psi), atol=1e-11)

    def test_normalized(self, rng):
        model, init = build_nonseparable_xz(3, [0.4, 0.9, 1.2], [1.1, 0.6, 0.8], haar_factors(3, rng))
        states = evolve_dense(model, init.psi, np.linspace(0, 30, 50))
        np.testing.assert_allclose(np.linalg.norm(states, axis=1), 1, atol=1e-10)

    def test_cap(self):
        model, init = build_spin_bath(4, [1.0] * 4)
        with pytest.raises(DimensionError, match="factorized"):
            evolve_dense(model, init.psi, [0.0], cap=16)


class TestConditionalStates:
    def test_no_coupling(self, rng):
        # H_int = 0 certifies only a single rank-2 sector; supply the basis.
        model, _ = build_spin_bath(2, [0.0, 0.0])
        eye = np.eye(2, dtype=complex)
        pointer = PointerBasis([eye[:, :1], eye[:, 1:]], [np.eye(4, dtype=complex)], np.zeros((2, 1)))
        chi = random_state(4, rng)
        out = conditional_env_states(model, 0, chi, [0.0, 3.0], pointer)
        np.testing.assert_allclose(out, np.tile(chi, (2, 1)), atol=1e-14)
        with pytest.raises(PointerBasisError, match="rank 2"):
            conditional_env_states(model, 0, chi, [0.0])

    def test_eigenstate_phase_only(self):
        model, _ = build_spin_bath(1, [1.0])
        out = conditional_env_states(model, 0, UP, np.linspace(0, 9, 10))
        np.testing.assert_allclose(np.abs(out @ UP.conj()), 1, atol=1e-14)

    def test_dense_projection_oracle(self, rng):
        model, _ = build_spin_bath(3, rng.uniform(0.5, 1.5, 3))
        factors = haar_factors(3, rng)
        chi = np.kron(np.kron(factors[0], factors[1]), factors[2])
        for m in (0, 1):
            (chi_m,) = conditional_env_states(model, m, chi, [2.0])
            ket_m = np.eye(2)[m]
            (state,) = evolve_dense(model, np.kron(ket_m, chi), [2.0])
            np.testing.assert_allclose(chi_m, state.reshape(2, 8)[m], atol=1e-10)
            assert abs(np.linalg.norm(chi_m) - 1) < 1e-10

    def test_with_commuting_system_energy(self, rng):
        model, _ = build_spin_bath(2, [0.8, 1.1])
        model = CompositeSystem(2, (2, 2), model.h_int, h_s=0.4 * SIGMA_Z)
        chi = random_state(4, rng)
        (chi_1,) = conditional_env_states(model, 1, chi, [1.7])
        (state,) = evolve_dense(model, np.kron([0, 1], chi), [1.7])
        np.testing.assert_allclose(chi_1, state.reshape(2, 4)[1], atol=1e-10)

    def test_nonseparable_rejected(self):
        model, _ = build_nonseparable_xz(1, [1.0], [1.0])
        with pytest.raises(PointerBasisError):
            conditional_env_states(model, 0, UP, [0.0])


class TestCorrelationAmplitude:
    def test_diagonal_is_one(self):
        model, init = build_spin_bath(2, [0.6, 1.4])
        np.testing.assert_array_equal(correlation_amplitude(model, init, [0.0, 5.0], 1, 1), 1)

    def test_eigenstate_environment_keeps_coherence(self):
        model, init = build_spin_bath(1, [1.0], "eigen")
        t = np.linspace(0, 10, 41)
        z = correlation_amplitude(model, init, t, 0, 1)
        np.testing.assert_allclose(np.abs(z), 1, atol=1e-12)
        # oracle: rho_01 / (C0 C1*) from a scipy expm evolution
        for tk, zk in zip(t[::10], z[::10]):
            u = expm(-1j * tk * model.h_int)
            psi = u @ init.psi
            rho01 = psi.reshape(2, 2)[0] @ psi.reshape(2, 2)[1].conj()
            assert zk == pytest.approx(rho01 / (init.system[0] * init.system[1].conj()), abs=1e-12)
        np.testing.assert_allclose(z, np.exp(-2j * t), atol=1e-12)

    def test_balanced_environment_zero_at_quarter_pi(self):
        model, init = build_spin_bath(1, [1.0], "balanced")
        t = np.array([0.0, np.pi / 8, np.pi / 4, 0.6])
        z = correlation_amplitude(model, init, t, 0, 1)
        psi = expm(-1j * np.pi / 4 * model.h_int) @ init.psi
        oracle = psi.reshape(2, 2)[0] @ psi.reshape(2, 2)[1].conj() / 0.5
        assert abs(z[2]) < 1e-14 and abs(oracle) < 1e-14
        np.testing.assert_allclose(z.imag, 0, atol=1e-14)
        np.testing.assert_allclose(z.real, np.cos(2 * t), atol=1e-14)

    def test_backends_agree(self, rng):
        model, init = build_spin_bath(4, rng.uniform(0.5, 1.5, 4), haar_factors(4, rng))
        t = np.linspace(0, 20, 200)
        zd = correlation_amplitude(model, init, t, 0, 1)
        zc = correlation_amplitude(model, init, t, 0, 1, backend="conditional")
        np.testing.assert_allclose(zd, zc, atol=1e-10)

    def test_hermitian_pair_symmetry(self, rng):
        model, init = build_spin_bath(3, rng.uniform(0.5, 1.5, 3), haar_factors(3, rng))
        t = np.linspace(0, 5, 30)
        np.testing.assert_allclose(
            correlation_amplitude(model, init, t, 1, 0), correlation_amplitude(model, init, t, 0, 1).conj(), atol=1e-12
        )

    def test_zero_amplitude(self):
        model, _ = build_spin_bath(1, [1.0])
        init = ProductInitialState(UP, (BALANCED,))
        with pytest.raises(ValueError, match="conditional"):
            correlation_amplitude(model, init, [0.0], 0, 1)
        z = correlation_amplitude(model, init, [np.pi / 4], 0, 1, backend="conditional")
        assert abs(z[0]) < 1e-14


class TestFactorized:
    def test_zero_couplings(self):
        z = factorized_z([0, 0, 0], [1, 0.6, BALANCED[0]], [0, 0.8, BALANCED[1]], np.linspace(0, 9, 11))
        np.testing.assert_allclose(z, 1, atol=1e-15)

    def test_single_factor_matches_amplitude(self, rng):
        factors = haar_factors(1, rng)
        model, init = build_spin_bath(1, [0.9], factors)
        t = np.linspace(0, 12, 100)
        z = factorized_z([0.9], *amps(init), t)
        np.testing.assert_allclose(z, correlation_amplitude(model, init, t, 0, 1), atol=1e-12)

    def test_dense_oracle_n6(self):
        rng = np.random.default_rng(606)
        g = rng.uniform(0.5, 1.5, 6)
        model, init = build_spin_bath(6, g, haar_factors(6, rng))
        t = np.linspace(0, 20, 500)
        np.testing.assert_allclose(
            factorized_z(g, *amps(init), t), correlation_amplitude(model, init, t, 0, 1), atol=1e-10
        )

    def test_conjugate_pair(self, rng):
        factors = haar_factors(3, rng)
        t = np.linspace(0, 4, 9)
        a, b = [f[0] for f in factors], [f[1] for f in factors]
        np.testing.assert_allclose(factorized_z([1, 2, 3], a, b, t, 1, 0), factorized_z([1, 2, 3], a, b, t).conj())

    def test_rejects_bad_input(self):
        with pytest.raises(DimensionError):
            factorized_z([1.0, 2.0], [1.0], [0.0], [0.0])
        with pytest.raises(ValueError):
            factorized_z([1.0], [1.0], [1.0], [0.0])


class TestReducedDensity:
    def test_initial(self):
        model, init = build_spin_bath(2, [0.5, 0.7])
        (rho,) = reduced_density(model, init, [0.0])
        np.testing.assert_allclose(rho, np.outer(init.system, init.system.conj()), atol=1e-15)

    def test_decoupled(self, rng):
        h_s = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -0.5]])
        model = CompositeSystem(2, (2, 2), np.zeros((8, 8)), h_s=h_s)
        init = ProductInitialState(random_state(2, rng), tuple(haar_factors(2, rng)))
        t = np.linspace(0, 6, 13)
        rho = reduced_density(model, init, t)
        rho0 = np.outer(init.system, init.system.conj())
        for tk, r in zip(t, rho):
            u = expm(-1j * h_s * tk)
            np.testing.assert_allclose(r, u @ rho0 @ u.conj().T, atol=1e-12)
        np.testing.assert_allclose(np.einsum("tij,tji->t", rho, rho).real, 1, atol=1e-12)

    def test_factorized_oracle_n4(self):
        rng = np.random.default_rng(44)
        g = rng.uniform(0.5, 1.5, 4)
        model, init = build_spin_bath(4, g, haar_factors(4, rng))
        (rho,) = reduced_density(model, init, [5.0])
        z = factorized_z(g, *amps(init), [5.0])[0]
        c = init.system
        np.testing.assert_allclose(rho.diagonal().real, np.abs(c) ** 2, atol=1e-12)
        assert abs(rho[0, 1] - c[0] * c[1].conj() * z) < 1e-10

    def test_physical(self, rng):
        model, init = build_nonseparable_xz(2, [0.7, 1.1], [0.5, 1.4], haar_factors(2, rng))
        for rho in reduced_density(model, init, np.linspace(0, 15, 40)):
            np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
            assert abs(np.trace(rho) - 1) < 1e-12
            assert np.linalg.eigvalsh(rho).min() >= -1e-12
            purity = np.trace(rho @ rho).real
            assert 0.5 - 1e-10 <= purity <= 1 + 1e-10


class TestSeparableIdentities:
    """Factorized coherence and conserved populations for separable models."""

    @pytest.mark.parametrize("theta", [0.0, 0.3, np.pi / 2])
    def test_eq3_and_diagonals(self, theta):
        rng = np.random.default_rng(7)
        model, init = build_rotated_spin_bath(3, rng.uniform(0.5, 1.5, 3), theta, haar_factors(3, rng))
        t = np.linspace(0, 10, 60)
        traj = simulate_dense(model, init, t)
        z = traj.z[(0, 1)]
        c = traj.amplitudes
        zc = correlation_amplitude(model, init, t, 0, 1, backend="conditional")
        np.testing.assert_allclose(z, zc, atol=1e-10)
        pb = check_separability(model.h_int, 2, 8).certificate
        rho_p = np.einsum("ia,tij,jb->tab", pb.pointer_matrix().conj(), traj.rho_s, pb.pointer_matrix())
        np.testing.assert_allclose(rho_p[:, 0, 1], c[0] * np.conj(c[1]) * zc, atol=1e-10)
        np.testing.assert_allclose(rho_p[:, 0, 0].real, abs(c[0]) ** 2, atol=1e-10)
        np.testing.assert_allclose(rho_p[:, 1, 1].real, abs(c[1]) ** 2, atol=1e-10)


class TestTrajectoryExport:
    def test_factorized_trajectory_csv(self, tmp_path):
        model, init = build_spin_bath(3, [0.6, 1.0, 1.4])
        t = time_grid(10.0, 101)
        traj = simulate_spin_bath([0.6, 1.0, 1.4], init, t)
        dense = simulate_dense(model, init, t)
        np.testing.assert_allclose(traj.z[(0, 1)], dense.z[(0, 1)], atol=1e-12)
        np.testing.assert_allclose(traj.purity, dense.purity, atol=1e-12)
        (path,) = write_trajectory(traj, tmp_path)
        assert path.name == "z_0_1.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "t,re_z,im_z,abs_z,purity"
        assert len(lines) == 102
        t1, re, im, ab, pur = map(float, lines[5].split(","))
        assert t1 == t[4] and complex(re, im) == traj.z[(0, 1)][4] and ab == abs(traj.z[(0, 1)][4])

    def test_rank2_flag(self):
        h = np.kron(np.diag([1.0, 1.0, -1.0]), SIGMA_Z)
        model = CompositeSystem(3, (2,), h)
        init = ProductInitialState(np.ones(3) / np.sqrt(3), (BALANCED,))
        traj = simulate_dense(model, init, np.linspace(0, 1, 5))
        assert traj.z == {} and any("rank>1" in f for f in traj.flags)


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 4),
    seed=st.integers(0, 2**32 - 1),
    t=st.floats(0, 50, allow_nan=False),
)
def test_factorized_matches_dense_property(n, seed, t):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-2, 2, n)
    model, init = build_spin_bath(n, g, haar_factors(n, rng))
    z_f = factorized_z(g, *amps(init), [t])
    z_d = correlation_amplitude(model, init, [t], 0, 1)
    np.testing.assert_allclose(z_f, z_d, atol=1e-10)
    assert abs(z_f[0]) <= 1 + 1e-12
