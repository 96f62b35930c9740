"""Spin registers, operator embeddings and density-matrix states.

The register is an ordered roster of named spin-1/2 particles.  The roster
order fixes the tensor-factor order everywhere: the first spin is the most
significant qubit of the computational product basis, exactly as produced by
repeated ``numpy.kron``.  All operators and states built by this package use
that single convention, so matrices from different modules can be combined
without re-indexing.

Frequencies are stored in rad/s.  Chemical shifts are given in ppm and
converted with the spectrometer reference frequency carried by the system,
``omega = 2*pi * reference_frequency_hz * ppm * 1e-6`` (an offset from the
0-ppm reference, which is the only thing the dynamics ever needs).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "0": SIGMA_0}

KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-9


@dataclass(frozen=True)
class Spin:
    """One named spin-1/2: nuclide tag plus isotropic chemical shift."""

    name: str
    species: str
    shift_ppm: float


@dataclass(eq=False)
class SpinSystem:
    """Ordered spin roster with pairwise ZZ couplings.

    Parameters
    ----------
    spins : tuple of Spin
        Roster in tensor-factor order.
    couplings : mapping (name, name) -> float
        Scalar couplings in rad/s.  Keys are unordered pairs; they are
        canonicalised to roster order internally.
    reference_frequency_hz : float
        Spectrometer base frequency used for the ppm -> rad/s conversion.
    """

    spins: tuple[Spin, ...]
    couplings: dict[tuple[str, str], float] = field(default_factory=dict)
    reference_frequency_hz: float = 125.76e6

    def __post_init__(self):
        self.spins = tuple(self.spins)
        names = [s.name for s in self.spins]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate spin names in roster: {names}")
        if self.reference_frequency_hz <= 0:
            raise ValueError("reference frequency must be positive")
        self._index = {name: i for i, name in enumerate(names)}
        canonical: dict[tuple[str, str], float] = {}
        for (a, b), j in dict(self.couplings).items():
            if a not in self._index or b not in self._index:
                raise KeyError(f"coupling references unknown spin: ({a}, {b})")
            if a == b:
                raise ValueError(f"self-coupling on {a}")
            if j < 0:
                raise ValueError(f"negative coupling J({a},{b}) = {j}")
            key = (a, b) if self._index[a] < self._index[b] else (b, a)
            if key in canonical and canonical[key] != j:
                raise ValueError(f"conflicting values for coupling {key}")
            canonical[key] = float(j)
        self.couplings = canonical

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.spins)

    @property
    def n_spins(self) -> int:
        return len(self.spins)

    @property
    def dim(self) -> int:
        return 2 ** len(self.spins)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown spin label {name!r}; roster is {self.names}") from None

    def spin(self, name: str) -> Spin:
        return self.spins[self.index(name)]

    def omega0(self, name: str) -> float:
        """Chemically shifted Larmor offset from the 0-ppm reference, rad/s."""
        return 2.0 * np.pi * self.reference_frequency_hz * self.spin(name).shift_ppm * 1e-6

    def j(self, a: str, b: str) -> float:
        ia, ib = self.index(a), self.index(b)
        key = (a, b) if ia < ib else (b, a)
        return self.couplings.get(key, 0.0)

    def coupled_pairs(self) -> Iterable[tuple[str, str, float]]:
        for (a, b), j in sorted(self.couplings.items(), key=lambda kv: (self._index[kv[0][0]], self._index[kv[0][1]])):
            if j != 0.0:
                yield a, b, j

    def subset(self, keep: Iterable[str]) -> "SpinSystem":
        """New system containing only ``keep`` (roster order preserved),
        with couplings restricted to the kept spins."""
        keep = set(keep)
        unknown = keep - set(self.names)
        if unknown:
            raise KeyError(f"unknown spin labels {sorted(unknown)}")
        spins = tuple(s for s in self.spins if s.name in keep)
        couplings = {k: j for k, j in self.couplings.items() if k[0] in keep and k[1] in keep}
        return SpinSystem(spins, couplings, self.reference_frequency_hz)


@dataclass
class Operator:
    """Dense complex matrix with an optional unitarity promise."""

    matrix: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"operator must be square, got shape {self.matrix.shape}")
        if self.unitary:
            dev = unitarity_defect(self.matrix)
            if dev > HERMITICITY_TOL * max(1, self.dim):
                raise ValueError(f"matrix flagged unitary violates U U^dag = I by {dev:.2e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, unitary=self.unitary)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix @ other.matrix, unitary=self.unitary and other.unitary)


def unitarity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))


@dataclass
class DensityMatrix:
    """Hermitian unit-trace state over the named spins (roster order)."""

    matrix: np.ndarray
    spins: tuple[str, ...]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.spins = tuple(self.spins)
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError(
                f"state shape {self.matrix.shape} does not match {len(self.spins)} spins"
            )

    @property
    def dim(self) -> int:
        return 2 ** len(self.spins)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expect(self, op: np.ndarray | Operator) -> complex:
        m = op.matrix if isinstance(op, Operator) else op
        return complex(np.trace(m @ self.matrix))

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.matrix.copy(), self.spins)

    def validate(
        self,
        trace_tol: float = 1e-10,
        herm_tol: float = 1e-10,
        eig_floor: float = EIGENVALUE_FLOOR,
    ) -> None:
        """Raise StateValidityError if the state drifted off the physical set."""
        herm = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if herm > herm_tol:
            raise StateValidityError(f"hermiticity defect {herm:.3e} exceeds {herm_tol:.1e}")
        tr = abs(self.trace - 1.0)
        if tr > trace_tol:
            raise StateValidityError(f"trace defect {tr:.3e} exceeds {trace_tol:.1e}")
        if not _positive_within(self.matrix, eig_floor):
            lam = float(np.linalg.eigvalsh(self.matrix)[0])
            raise StateValidityError(f"eigenvalue {lam:.3e} below floor {eig_floor:.1e}")


class StateValidityError(RuntimeError):
    """A density matrix violated hermiticity, trace or positivity bounds."""


def _positive_within(m: np.ndarray, floor: float) -> bool:
    # Cheap Cholesky probe first; exact eigenvalue check only on failure.
    h = 0.5 * (m + m.conj().T)
    shifted = h + (2.0 * abs(floor)) * np.eye(m.shape[0])
    try:
        np.linalg.cholesky(shifted)
        return True
    except np.linalg.LinAlgError:
        return bool(np.linalg.eigvalsh(h)[0] >= floor)


# ---------------------------------------------------------------------------
# operator embeddings


def embed_pauli(system: SpinSystem, spin: str, axis: str) -> Operator:
    """Pauli ``axis`` on the named tensor factor, identity elsewhere."""
    if axis not in PAULIS:
        raise ValueError(f"axis must be one of {sorted(PAULIS)}, got {axis!r}")
    return embed_matrices(system, {spin: PAULIS[axis]})


def embed_matrices(system: SpinSystem, factors: Mapping[str, np.ndarray]) -> Operator:
    """Kronecker product placing each 2x2 factor on its spin, identity on the rest."""
    for name in factors:
        system.index(name)
    out = np.ones((1, 1), dtype=complex)
    for s in system.spins:
        out = np.kron(out, np.asarray(factors.get(s.name, SIGMA_0), dtype=complex))
    return Operator(out)


def z_signs(n_spins: int) -> np.ndarray:
    """(n_spins, 2**n) table of sigma_z eigenvalues per spin and basis state."""
    dim = 2**n_spins
    states = np.arange(dim)
    signs = np.empty((n_spins, dim), dtype=float)
    for k in range(n_spins):
        bit = (states >> (n_spins - 1 - k)) & 1
        signs[k] = 1.0 - 2.0 * bit
    return signs


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduced state on ``keep`` (roster order), tracing out everything else."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep set must not be empty")
    unknown = set(keep) - set(rho.spins)
    if unknown:
        raise KeyError(f"unknown spin labels {sorted(unknown)}")
    n = len(rho.spins)
    keep_idx = [i for i, name in enumerate(rho.spins) if name in set(keep)]
    t = rho.matrix.reshape((2,) * (2 * n))
    # einsum: traced spins share a letter between ket and bra axes
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep_idx:
            bra[i] = ket[i]
    out = "".join(ket[i] for i in keep_idx) + "".join(bra[i] for i in keep_idx)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    d = 2 ** len(keep_idx)
    return DensityMatrix(reduced.reshape(d, d), tuple(rho.spins[i] for i in keep_idx))


# ---------------------------------------------------------------------------
# initial states

CENTER = "CC"
SIDES = ("CS1", "CS2")
CHAIN = (CENTER,) + SIDES


def _require_chain(system: SpinSystem) -> None:
    missing = [n for n in CHAIN if n not in system.names]
    if missing:
        raise KeyError(f"system lacks required spins {missing}; roster is {system.names}")


def thermal_state(system: SpinSystem, epsilon: float = 1e-5) -> DensityMatrix:
    """High-temperature product state.

    Carbon spins carry the small polarization ``epsilon`` toward |0>, all
    other species are returned fully mixed (their tiny polarization never
    reaches any observable in this package).  epsilon -> 0 gives the fully
    mixed state.
    """
    if epsilon <= 0:
        raise ValueError("polarization epsilon must be positive")
    factors = {}
    for s in system.spins:
        if s.species.upper().endswith("C"):
            f = (SIGMA_0 + epsilon * np.outer(KET_0, KET_0.conj())) / (2.0 + epsilon)
            factors[s.name] = f
    m = embed_matrices(system, factors).matrix
    m = m / np.trace(m)
    return DensityMatrix(m, system.names)


def thermal_deviation_matrix(system: SpinSystem, epsilon: float = 1e-5) -> np.ndarray:
    """Three-term deviation decomposition of the carbon-chain thermal state.

    Returns the (unnormalized) 8x8 sum in which each carbon in turn carries
    the polarized factor while the other two are fully mixed.  Its trace is
    3*(1 + epsilon/2).
    """
    if epsilon <= 0:
        raise ValueError("polarization epsilon must be positive")
    _require_chain(system)
    pol = (SIGMA_0 + epsilon * np.outer(KET_0, KET_0.conj())) / 2.0
    mixed = SIGMA_0 / 2.0
    out = np.zeros((8, 8), dtype=complex)
    for polarized in CHAIN:
        term = np.ones((1, 1), dtype=complex)
        for name in CHAIN:
            term = np.kron(term, pol if name == polarized else mixed)
        out += term
    return out


def renormalized_thermal_state(system: SpinSystem) -> DensityMatrix:
    """Observable-equivalent readout form of the thermal state.

    The center carbon is |0><0| and every other spin is fully mixed; this is
    the state the measurement circuits start from.
    """
    _require_chain(system)
    m = embed_matrices(system, {CENTER: np.outer(KET_0, KET_0.conj())}).matrix
    m = m / np.trace(m)
    return DensityMatrix(m, system.names)


def prepare_rho_i(system: SpinSystem) -> DensityMatrix:
    """Center spin |+>, side carbons in the zero-quantum mixture.

    Returns |+><+| on CC tensored with (|01><01| + |10><10|)/2 on the side
    pair; environment spins, if present in the register, are fully mixed.
    The side mixture cancels the static center-side coupling, which is what
    makes the slow environmental dynamics visible on the center line.
    """
    _require_chain(system)
    plus = np.outer(KET_PLUS, KET_PLUS.conj())
    p01 = np.outer(KET_0, KET_0.conj())
    p10 = np.outer(KET_1, KET_1.conj())
    m = 0.5 * (
        embed_matrices(system, {CENTER: plus, SIDES[0]: p01, SIDES[1]: p10}).matrix
        + embed_matrices(system, {CENTER: plus, SIDES[0]: p10, SIDES[1]: p01}).matrix
    )
    m = m / np.trace(m)
    return DensityMatrix(m, system.names)
