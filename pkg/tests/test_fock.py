import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtx import fock
from qtx.fock import DensityOperator, FockState, TruncationError


def random_dm(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


class TestTypes:
    def test_state_length_checked(self):
        with pytest.raises(ValueError):
            FockState(np.ones(3), n_max=1, modes=1)

    def test_negative_cutoff_rejected(self):
        with pytest.raises(ValueError):
            FockState(np.ones(1), n_max=-1)

    def test_normalize(self):
        s = FockState(np.array([3.0, 4.0]), 1).normalize()
        assert abs(s.norm() - 1.0) <= fock.TOL_NORM

    def test_amplitudes_are_read_only(self):
        s = fock.basis_state(1, 2)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1.0

    def test_validate_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.1], [0.0, 0.5]])
        with pytest.raises(ValueError, match="Hermitian"):
            DensityOperator(m, 1).validate()

    def test_validate_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="positive"):
            DensityOperator(np.diag([1.5, -0.5]), 1).validate()

    def test_validate_trace(self):
        DensityOperator(np.diag([0.25, 0.75]), 1).validate(trace_tol=1e-12)
        with pytest.raises(ValueError, match="trace"):
            DensityOperator(np.diag([0.25, 0.5]), 1).validate(trace_tol=1e-12)


class TestCoherentState:
    def test_zero_amplitude_is_vacuum(self):
        for n_max in (0, 3, 10):
            s = fock.coherent_state(0.0, n_max)
            assert s.amplitudes[0] == 1.0
            assert np.all(s.amplitudes[1:] == 0.0)

    def test_overlap_of_opposite_states(self):
        a, b = fock.coherent_state(1.0, 30), fock.coherent_state(-1.0, 30)
        assert abs(a.inner(b) - math.exp(-2.0)) <= 1e-10

    def test_tail_mass_small_at_default_size(self):
        assert fock.coherent_state(2.0, 30).tail_mass < 1e-10

    def test_tail_mass_matches_direct_sum(self):
        s = fock.coherent_state(1.7, 12)
        assert abs(s.tail_mass - (1.0 - s.norm() ** 2)) < 1e-14

    def test_tail_budget_enforced(self):
        with pytest.raises(TruncationError) as err:
            fock.coherent_state(2.0, 4, max_tail=1e-10)
        assert err.value.tail > 1e-10

    def test_tail_decreases_with_cutoff(self):
        tails = [fock.coherent_state(1.5, n).tail_mass for n in range(0, 30)]
        assert all(b <= a for a, b in zip(tails, tails[1:]))

    def test_default_cutoff_rule(self):
        assert fock.default_n_max(0.0) == 10
        assert fock.default_n_max(1.0) == 19
        assert fock.default_n_max(-1.5) == fock.default_n_max(1.5)


class TestTensorAndTrace:
    def test_basis_product_index(self):
        s = fock.tensor(fock.basis_state(0, 2), fock.basis_state(1, 2))
        assert s.modes == 2
        assert np.flatnonzero(s.amplitudes).tolist() == [0 * 3 + 1]
        assert np.allclose(s.amplitudes, fock.basis_state((0, 1), 2).amplitudes)

    def test_trace_multiplicative(self):
        rng = np.random.default_rng(1)
        a = DensityOperator(2.0 * random_dm(rng, 3), 2)
        b = DensityOperator(0.5 * random_dm(rng, 3), 2)
        assert abs(fock.tensor(a, b).trace() - a.trace() * b.trace()) < 1e-12

    def test_singlet_norm(self):
        k01, k10 = fock.basis_state((0, 1), 1), fock.basis_state((1, 0), 1)
        assert abs(((1 / math.sqrt(2)) * (k01 - k10)).norm() - 1.0) < 1e-15

    def test_mismatched_cutoff(self):
        with pytest.raises(ValueError):
            fock.tensor(fock.vacuum(1), fock.vacuum(2))

    def test_singlet_marginal_is_maximally_mixed(self):
        psi = (1 / math.sqrt(2)) * (fock.basis_state((0, 1), 1) - fock.basis_state((1, 0), 1))
        red = fock.partial_trace(psi.dm(), [0])
        assert np.allclose(red.matrix, 0.5 * np.eye(2), atol=1e-15)

    def test_product_state_factor(self):
        a = fock.coherent_state(0.4, 5).normalize()
        b = fock.basis_state(2, 5)
        red = fock.partial_trace(fock.tensor(a, b).dm(), [1])
        assert np.allclose(red.matrix, b.dm().matrix, atol=1e-14)

    def test_empty_keep_rejected(self):
        with pytest.raises(ValueError):
            fock.partial_trace(fock.vacuum(1, 2).dm(), [])

    def test_invalid_mode(self):
        with pytest.raises(IndexError):
            fock.partial_trace(fock.vacuum(1, 2).dm(), [2])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(2, 3))
    def test_partial_trace_preserves_trace(self, seed, n_max, modes):
        rng = np.random.default_rng(seed)
        d = (n_max + 1) ** modes
        rho = DensityOperator(random_dm(rng, d), n_max, modes)
        keep = [int(k) for k in rng.choice(modes, size=rng.integers(1, modes + 1), replace=False)]
        assert abs(fock.partial_trace(rho, keep).trace() - rho.trace()) < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_tensor_trace_round_trip(self, seed, n_max):
        rng = np.random.default_rng(seed)
        d = n_max + 1
        a = DensityOperator(random_dm(rng, d), n_max)
        b = DensityOperator(random_dm(rng, d), n_max)
        back = fock.partial_trace(fock.tensor(a, b), [0])
        assert np.max(np.abs(back.matrix - a.matrix)) < 1e-12


class TestLadderOperators:
    def test_annihilate_one_photon(self):
        a = fock.annihilation(3)
        assert np.allclose(a @ fock.basis_state(1, 3).amplitudes, fock.basis_state(0, 3).amplitudes)

    def test_commutator_below_cutoff(self):
        n_max = 6
        a, ad = fock.annihilation(n_max), fock.creation(n_max)
        comm = a @ ad - ad @ a
        assert np.allclose(comm[:n_max, :n_max], np.eye(n_max), atol=1e-14)

    def test_number_diagonal(self):
        assert np.allclose(np.diag(fock.number_op(4)).real, np.arange(5))
        a = fock.annihilation(4)
        assert np.allclose(a.conj().T @ a, fock.number_op(4))

    def test_coherent_mean_photon(self):
        rho = fock.coherent_state(1.0, 30).dm()
        assert abs(fock.expectation(rho, fock.number_op(30)).real - 1.0) < 1e-10

    def test_cutoff_zero_rejected(self):
        with pytest.raises(ValueError):
            fock.annihilation(0)
        with pytest.raises(ValueError):
            fock.number_op(0)


class TestPhaseShift:
    def test_single_photon_flips_sign(self):
        out = fock.phase_shift_pi(fock.basis_state(1, 2), 0)
        assert np.allclose(out.amplitudes, -fock.basis_state(1, 2).amplitudes)

    def test_maps_alpha_to_minus_alpha(self):
        plus = fock.coherent_state(1.2, 30)
        out = fock.phase_shift_pi(plus, 0)
        minus = fock.coherent_state(-1.2, 30).normalize()
        assert abs(fock.fidelity_pure(minus, out.normalize().dm()) - 1.0) < 1e-12

    def test_involution(self):
        rng = np.random.default_rng(3)
        rho = DensityOperator(random_dm(rng, 9), 2, 2)
        twice = fock.phase_shift_pi(fock.phase_shift_pi(rho, 1), 1)
        assert np.allclose(twice.matrix, rho.matrix, atol=1e-15)

    def test_acts_on_chosen_mode_only(self):
        s = fock.basis_state((1, 0), 1)
        assert np.allclose(fock.phase_shift_pi(s, 1).amplitudes, s.amplitudes)


class TestBeamSplitter:
    def test_single_photon_split(self):
        out = fock.beam_splitter_50_50(fock.basis_state((1, 0), 1), (0, 1))
        want = (fock.basis_state((1, 0), 1) + fock.basis_state((0, 1), 1)) * (1 / math.sqrt(2))
        assert np.allclose(out.amplitudes, want.amplitudes, atol=1e-14)

    def test_second_port_sign(self):
        out = fock.beam_splitter_50_50(fock.basis_state((0, 1), 1), (0, 1))
        want = (fock.basis_state((1, 0), 1) - fock.basis_state((0, 1), 1)) * (1 / math.sqrt(2))
        assert np.allclose(out.amplitudes, want.amplitudes, atol=1e-14)

    def test_opposite_coherent_pair_exits_one_port(self):
        beta, n_max = 0.5, 25
        pair = fock.tensor(fock.coherent_state(beta, n_max), fock.coherent_state(-beta, n_max))
        out = fock.beam_splitter_50_50(pair, (0, 1))
        want = fock.tensor(fock.vacuum(n_max), fock.coherent_state(math.sqrt(2) * beta, n_max))
        assert abs(fock.fidelity_pure(want.normalize(), out.normalize().dm()) - 1.0) < 1e-8

    def test_unitary_on_conserved_subspace(self):
        n_max = 5
        u = fock.beam_splitter_unitary(n_max)
        occ = np.add.outer(np.arange(n_max + 1), np.arange(n_max + 1)).ravel()
        low = occ <= n_max
        block = u[np.ix_(low, low)]
        assert np.allclose(block.conj().T @ block, np.eye(low.sum()), atol=1e-12)
        assert np.max(np.abs(u[np.ix_(~low, low)])) < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        n_max = 4
        occ = np.add.outer(np.arange(n_max + 1), np.arange(n_max + 1)).ravel()
        amps = (rng.normal(size=occ.size) + 1j * rng.normal(size=occ.size)) * (occ <= n_max)
        s = FockState(amps, n_max, 2).normalize()
        assert abs(fock.beam_splitter_50_50(s, (0, 1)).norm() - 1.0) < 1e-12
        assert abs(fock.phase_shift_pi(s, 0).norm() - 1.0) < 1e-12

    def test_distinct_modes_required(self):
        with pytest.raises(ValueError):
            fock.beam_splitter_50_50(fock.vacuum(1, 2), (0, 0))


class TestFidelity:
    def test_pure_self_overlap(self):
        psi = FockState(np.array([0.6, 0.8j]), 1)
        assert fock.fidelity_pure(psi, psi.dm()) == pytest.approx(1.0, abs=1e-15)

    def test_damped_single_photon(self):
        t = 0.7
        rho = DensityOperator(np.diag([1 - t * t, t * t]), 1)
        assert abs(fock.fidelity_pure(fock.basis_state(1, 1), rho) - t * t) < 1e-15

    def test_maximally_mixed(self):
        rng = np.random.default_rng(5)
        d = 6
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi = FockState(v, d - 1).normalize()
        rho = DensityOperator(np.eye(d) / d, d - 1)
        assert abs(fock.fidelity_pure(psi, rho) - 1.0 / d) < 1e-14

    def test_clamps_only_within_slack(self):
        psi = fock.basis_state(0, 1)
        assert fock.fidelity_pure(psi, DensityOperator(np.diag([1 + 1e-12, 0]), 1)) == 1.0
        assert fock.fidelity_pure(psi, DensityOperator(np.diag([1 + 1e-6, 0]), 1)) > 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fock.fidelity_pure(fock.vacuum(2), fock.vacuum(1).dm())
