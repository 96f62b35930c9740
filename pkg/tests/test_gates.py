import numpy as np
import pytest

from starspin.core import (
    DensityMatrix,
    Operator,
    SIGMA_0,
    SIGMA_X,
)
from starspin.gates import (
    PhaseFrame,
    Rotation,
    apply_rotation,
    apply_unitary,
    apply_z,
    normalize_global_phase,
    pseudo_cnot,
    rotation_unitary,
    single_spin_rotation,
    single_spin_z,
    virtual_z,
)
from conftest import random_density_matrix


def target_gate_matrix():
    """Controlled double-flip: identity on the center-|0> block, antidiagonal
    i's on the center-|1> block."""
    m = np.eye(8, dtype=complex)
    m[4:, 4:] = 0.0
    for r, c in [(4, 7), (5, 6), (6, 5), (7, 4)]:
        m[r, c] = 1j
    return m


class TestRotations:
    def test_pi_about_x_is_minus_i_sigma_x(self):
        assert np.allclose(single_spin_rotation(0.0, np.pi), -1j * SIGMA_X)

    def test_inverse_pair_cancels(self):
        u = single_spin_rotation(np.pi / 2, np.pi / 2) @ single_spin_rotation(np.pi / 2, -np.pi / 2)
        assert np.allclose(u, np.eye(2))

    def test_half_turn_maps_ground_to_equal_superposition(self):
        # direct 2x2 action: R(pi/2, -pi/2)|0><0|R^dag has no z component and
        # a pure (negative) x component, i.e. Hadamard-like up to a z rotation
        u = single_spin_rotation(np.pi / 2, -np.pi / 2)
        rho = u @ np.diag([1.0, 0.0]).astype(complex) @ u.conj().T
        minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
        assert np.allclose(rho, np.outer(minus, minus.conj()))
        z = single_spin_z(np.pi)
        plus_state = z @ rho @ z.conj().T
        assert np.allclose(plus_state, 0.5 * np.ones((2, 2)))

    def test_collective_rotation_matches_kron_oracle(self, chain3):
        rot = Rotation(("CS1", "CS2"), 0.7, 1.1)
        op = rotation_unitary(rot, chain3)
        u2 = single_spin_rotation(0.7, 1.1)
        oracle = np.kron(np.kron(SIGMA_0, u2), u2)
        assert np.allclose(op.matrix, oracle)

    def test_unitarity(self, chain3):
        rng = np.random.default_rng(5)
        for _ in range(20):
            phi, theta = rng.uniform(-np.pi, np.pi, size=2)
            op = rotation_unitary(Rotation(("CC", "CS1"), phi, theta), chain3)
            assert np.max(np.abs(op.matrix @ op.matrix.conj().T - np.eye(8))) < 1e-12

    def test_empty_target_rejected(self):
        with pytest.raises(ValueError):
            Rotation((), 0.0, np.pi)

    def test_fast_rotation_path_matches_dense(self, chain3):
        rng = np.random.default_rng(17)
        rho = DensityMatrix(random_density_matrix(rng, 3), chain3.names)
        dense = apply_unitary(rho, rotation_unitary(Rotation(("CS1", "CS2"), 0.3, 2.0), chain3))
        fast = apply_rotation(rho, chain3, ("CS1", "CS2"), 0.3, 2.0)
        assert np.allclose(dense.matrix, fast.matrix)


class TestPhaseFrame:
    def test_zero_rotation_keeps_frame(self):
        frame = PhaseFrame()
        assert virtual_z(frame, ["CC"], 0.0).angle("CC") == 0.0

    def test_additive(self):
        frame = virtual_z(virtual_z(PhaseFrame(), ["CC"], 0.4), ["CC"], 0.5)
        assert frame.angle("CC") == pytest.approx(0.9)

    def test_wraps_mod_two_pi(self):
        frame = virtual_z(PhaseFrame(), ["CC"], 2 * np.pi + 0.3)
        assert frame.angle("CC") == pytest.approx(0.3)

    def test_tracked_frame_equals_literal_z_conjugation(self, chain3):
        # Z(t) then R(phi, pi) acting physically must equal the frame-shifted
        # pulse R(phi - t, pi) followed by the pending Z(t)
        theta = 0.77
        phi = 0.31
        z = single_spin_z(theta)
        r = single_spin_rotation(phi, np.pi)
        literal = r @ z
        frame = virtual_z(PhaseFrame(), ["A"], theta)
        shifted = single_spin_rotation(frame.physical_phi("A", phi), np.pi)
        folded = z @ shifted
        assert np.max(np.abs(literal - folded)) < 1e-12


class TestPseudoCnot:
    def test_ideal_matches_target_matrix(self, chain3):
        u = pseudo_cnot(chain3, "ideal").matrix
        t = target_gate_matrix()
        assert np.max(np.abs(normalize_global_phase(u) - normalize_global_phase(t))) < 1e-10
        # the printed global phase factor makes it exact outright
        assert np.max(np.abs(u - t)) < 1e-10

    def test_applied_twice_is_center_z_flip(self, chain3):
        u = pseudo_cnot(chain3, "ideal").matrix
        sq = normalize_global_phase(u @ u)
        assert np.allclose(sq, np.diag([1, 1, 1, 1, -1, -1, -1, -1]), atol=1e-10)

    def test_truth_table_on_basis_states(self, chain3):
        u = pseudo_cnot(chain3, "ideal").matrix
        for a in (0, 1):
            for b in (0, 1):
                src = 4 + 2 * a + b  # center |1>, sides |ab>
                dst = 4 + 2 * (1 - a) + (1 - b)
                col = u[:, src]
                assert abs(col[dst]) == pytest.approx(1.0, abs=1e-12)
            low = 2 * a + b  # center |0>: fixed point
            assert abs(u[low, low]) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal_side_state_populations_unchanged(self, chain3):
        rho = DensityMatrix(np.diag([0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0]).astype(complex), chain3.names)
        out = apply_unitary(rho, pseudo_cnot(chain3, "ideal"))
        assert np.allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_quantized_mode_close_but_not_exact(self, chain3):
        u_q = pseudo_cnot(chain3, "quantized").matrix
        t = target_gate_matrix()
        err = np.max(np.abs(normalize_global_phase(u_q) - normalize_global_phase(t)))
        assert 1e-10 < err < 0.05

    def test_missing_spins_rejected(self):
        from starspin.core import Spin, SpinSystem

        sys = SpinSystem((Spin("A", "13C", 0.0),))
        with pytest.raises(KeyError):
            pseudo_cnot(sys)


class TestApplyUnitary:
    def test_identity(self, chain3):
        rng = np.random.default_rng(3)
        rho = DensityMatrix(random_density_matrix(rng, 3), chain3.names)
        out = apply_unitary(rho, Operator(np.eye(8), unitary=True))
        assert np.allclose(out.matrix, rho.matrix)

    def test_eigenvalues_preserved(self, chain3):
        rng = np.random.default_rng(9)
        rho = DensityMatrix(random_density_matrix(rng, 3), chain3.names)
        u = pseudo_cnot(chain3).matrix
        out = apply_unitary(rho, u)
        before = np.sort(np.linalg.eigvalsh(rho.matrix))
        after = np.sort(np.linalg.eigvalsh(out.matrix))
        assert np.allclose(before, after, atol=1e-12)

    def test_dimension_mismatch(self, chain3):
        rho = DensityMatrix(np.eye(8) / 8.0, chain3.names)
        with pytest.raises(ValueError):
            apply_unitary(rho, np.eye(4))

    def test_apply_z_matches_dense(self, chain3):
        rng = np.random.default_rng(13)
        rho = DensityMatrix(random_density_matrix(rng, 3), chain3.names)
        fast = apply_z(rho, chain3, ("CC",), 0.9)
        zc = np.kron(single_spin_z(0.9), np.eye(4))
        dense = zc @ rho.matrix @ zc.conj().T
        assert np.allclose(fast.matrix, dense)


class TestGlobalPhase:
    def test_normalizes_first_big_element_positive(self):
        m = np.exp(1j * 0.8) * np.eye(3)
        out = normalize_global_phase(m)
        assert np.allclose(out, np.eye(3))

    def test_zero_matrix_unchanged(self):
        assert np.allclose(normalize_global_phase(np.zeros((2, 2))), 0.0)
