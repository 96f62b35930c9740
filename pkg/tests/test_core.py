import numpy as np
import pytest

from starspin.core import (
    DensityMatrix,
    SIGMA_0,
    SIGMA_X,
    SIGMA_Z,
    Spin,
    SpinSystem,
    embed_pauli,
    partial_trace,
    prepare_rho_i,
    renormalized_thermal_state,
    thermal_deviation_matrix,
    thermal_state,
)
from conftest import random_density_matrix


def make_system(n, species="13C"):
    return SpinSystem(tuple(Spin(f"S{i}", species, float(i)) for i in range(n)))


class TestSpinSystem:
    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            SpinSystem((Spin("A", "1H", 0.0), Spin("A", "1H", 1.0)))

    def test_coupling_canonicalization(self):
        sys = SpinSystem(
            (Spin("A", "1H", 0.0), Spin("B", "1H", 1.0)), {("B", "A"): 5.0}
        )
        assert sys.j("A", "B") == 5.0
        assert sys.j("B", "A") == 5.0

    def test_negative_coupling_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            SpinSystem((Spin("A", "1H", 0.0), Spin("B", "1H", 1.0)), {("A", "B"): -1.0})

    def test_unknown_coupling_spin_rejected(self):
        with pytest.raises(KeyError):
            SpinSystem((Spin("A", "1H", 0.0),), {("A", "B"): 1.0})

    def test_ppm_conversion_linear_invertible(self):
        sys = SpinSystem((Spin("A", "13C", 10.0), Spin("B", "13C", 20.0)), {}, 1e8)
        w_a, w_b = sys.omega0("A"), sys.omega0("B")
        assert w_b == pytest.approx(2 * w_a)
        # invert: ppm = omega / (2 pi f_ref 1e-6)
        assert w_a / (2 * np.pi * 1e8 * 1e-6) == pytest.approx(10.0)

    def test_subset_preserves_order_and_couplings(self, molecule):
        sub = molecule.subset(["CC", "CS1", "CS2"])
        assert sub.names == ("CC", "CS1", "CS2")
        assert sub.j("CC", "CS1") == molecule.j("CC", "CS1")
        assert sub.j("CC", "CS2") == molecule.j("CC", "CS2")


class TestEmbedPauli:
    def test_single_spin_z(self):
        sys = make_system(1)
        op = embed_pauli(sys, "S0", "z")
        assert np.allclose(op.matrix, np.diag([1.0, -1.0]))

    def test_two_spin_second_factor_x(self):
        sys = make_system(2)
        op = embed_pauli(sys, "S1", "x")
        assert np.allclose(op.matrix, np.kron(SIGMA_0, SIGMA_X))

    def test_three_spin_center_z_matches_kron_oracle(self, chain3):
        op = embed_pauli(chain3, "CC", "z")
        oracle = np.kron(np.kron(SIGMA_Z, SIGMA_0), SIGMA_0)
        assert np.allclose(op.matrix, oracle)
        assert np.allclose(np.diag(op.matrix), [1, 1, 1, 1, -1, -1, -1, -1])

    def test_unknown_spin(self, chain3):
        with pytest.raises(KeyError):
            embed_pauli(chain3, "XX", "z")

    def test_squares_to_identity(self, chain3):
        for axis in "xyz":
            m = embed_pauli(chain3, "CS1", axis).matrix
            assert np.allclose(m @ m, np.eye(8))


class TestPartialTrace:
    def test_keep_everything_is_identity(self, chain3):
        rng = np.random.default_rng(7)
        rho = DensityMatrix(random_density_matrix(rng, 3), chain3.names)
        out = partial_trace(rho, ["CC", "CS1", "CS2"])
        assert np.allclose(out.matrix, rho.matrix)

    def test_product_state_factorizes(self):
        rng = np.random.default_rng(11)
        a = random_density_matrix(rng, 1)
        b = random_density_matrix(rng, 2)
        rho = DensityMatrix(np.kron(a, b), ("A", "B1", "B2"))
        out = partial_trace(rho, ["A"])
        assert np.allclose(out.matrix, a)

    def test_empty_keep_rejected(self, chain3):
        rho = renormalized_thermal_state(chain3)
        with pytest.raises(ValueError):
            partial_trace(rho, [])

    def test_entangled_sensor_state_reduces_to_mean_coherence(self, chain3):
        # final measurement state: coherence e^{-2i theta} with side pair |00>,
        # e^{+2i theta} with |11>, flat with the mixed middle branches
        theta = np.deg2rad(50.0)
        m = np.zeros((8, 8), dtype=complex)
        for k in range(8):
            m[k, k] = 1.0
        m[0, 4] = np.exp(-2j * theta)
        m[4, 0] = np.exp(2j * theta)
        m[1, 5] = m[5, 1] = m[2, 6] = m[6, 2] = 1.0
        m[3, 7] = np.exp(2j * theta)
        m[7, 3] = np.exp(-2j * theta)
        rho = DensityMatrix(m / 8.0, chain3.names)
        cc = partial_trace(rho, ["CC"])
        c = (np.exp(-2j * theta) + np.exp(2j * theta) + 2.0) / 4.0
        assert np.allclose(cc.matrix, 0.5 * np.array([[1.0, c], [np.conj(c), 1.0]]))

    def test_trace_and_hermiticity_preserved_on_random_states(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            labels = tuple(f"S{i}" for i in range(n))
            rho = DensityMatrix(random_density_matrix(rng, n), labels)
            k = int(rng.integers(1, n + 1))
            keep = list(rng.choice(n, size=k, replace=False))
            out = partial_trace(rho, [labels[i] for i in keep])
            assert abs(out.trace - 1.0) < 1e-12
            assert np.max(np.abs(out.matrix - out.matrix.conj().T)) < 1e-12


class TestThermalStates:
    def test_small_epsilon_limit_is_fully_mixed(self, chain3):
        rho = thermal_state(chain3, epsilon=1e-12)
        assert np.allclose(rho.matrix, np.eye(8) / 8.0, atol=1e-12)

    def test_nonpositive_epsilon_rejected(self, chain3):
        with pytest.raises(ValueError):
            thermal_state(chain3, epsilon=0.0)

    def test_deviation_matrix_trace(self, chain3):
        for eps in (1e-5, 1e-3, 0.2):
            dev = thermal_deviation_matrix(chain3, eps)
            assert np.trace(dev).real == pytest.approx(3.0 * (1.0 + eps / 2.0))
            assert abs(np.trace(dev).imag) < 1e-15

    def test_renormalized_form_blocks(self, chain3):
        rho = renormalized_thermal_state(chain3)
        cc = partial_trace(rho, ["CC"])
        assert np.allclose(cc.matrix, np.array([[1.0, 0.0], [0.0, 0.0]]))
        sides = partial_trace(rho, ["CS1", "CS2"])
        assert np.allclose(sides.matrix, np.eye(4) / 4.0)
        rho.validate(trace_tol=1e-14, herm_tol=1e-14)

    def test_validity_invariants(self, chain3):
        thermal_state(chain3).validate(trace_tol=1e-14, herm_tol=1e-14)
        prepare_rho_i(chain3).validate(trace_tol=1e-14, herm_tol=1e-14)


class TestRhoI:
    def test_center_reduces_to_plus(self, chain3):
        rho = prepare_rho_i(chain3)
        cc = partial_trace(rho, ["CC"])
        assert np.allclose(cc.matrix, 0.5 * np.ones((2, 2)))

    def test_side_expectations(self, chain3):
        rho = prepare_rho_i(chain3)
        z1 = embed_pauli(chain3, "CS1", "z").matrix
        z2 = embed_pauli(chain3, "CS2", "z").matrix
        assert rho.expect(z1) == pytest.approx(0.0, abs=1e-14)
        assert rho.expect(z1 @ z2).real == pytest.approx(-1.0)

    def test_swap_symmetric_in_sides(self, chain3):
        rho = prepare_rho_i(chain3)
        # swap CS1 and CS2 tensor factors
        t = rho.matrix.reshape((2,) * 6)
        swapped = np.transpose(t, (0, 2, 1, 3, 5, 4)).reshape(8, 8)
        assert np.allclose(swapped, rho.matrix)

    def test_missing_spins_rejected(self):
        sys = make_system(2)
        with pytest.raises(KeyError):
            prepare_rho_i(sys)

    def test_environment_spins_fully_mixed(self, molecule):
        rho = prepare_rho_i(molecule)
        env = partial_trace(rho, ["HC", "HS1"])
        assert np.allclose(env.matrix, np.eye(4) / 4.0)
