"""Truncated qubit-cavity Hilbert space: basis convention, core operators,
states, and elementary measures (fidelity, Bures angle, expectation values).

Basis convention (the only wire-visible one): composite kets are ordered
qubit-major, ``index = q * n_cut + n`` with ``q = 0`` for the qubit ground
state ``|g>`` and ``q = 1`` for ``|e>``, and ``n`` the Fock index.  With this
ordering ``sigma_z = |e><e| - |g><g|`` and ``sigma_x |g> = |e>``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

# Qubit ground state is index 0, excited is index 1 (qubit-major composite).
QUBIT_INDEX = {"g": 0, "e": 1}

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |e><g|
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|


class LeakageError(RuntimeError):
    """Population of the top Fock level exceeded the truncation guard."""


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(array)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix tagged with the structure it is expected to have.

    ``kind`` is one of ``"hermitian"``, ``"unitary"``, or ``"general"``;
    the tag is verified numerically on construction (hermitian within
    1e-12, unitary within 1e-10) so downstream code can trust it.
    """

    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {mat.shape}")
        if self.kind == "hermitian":
            defect = np.max(np.abs(mat - mat.conj().T))
            if defect > HERMITIAN_TOL:
                raise ValueError(f"hermitian-tagged operator has defect {defect:.3e}")
        elif self.kind == "unitary":
            defect = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
            if defect > UNITARY_TOL:
                raise ValueError(f"unitary-tagged operator has defect {defect:.3e}")
        elif self.kind != "general":
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "matrix", _readonly(mat))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, kind=self.kind)


@dataclass(frozen=True)
class QuantumState:
    """Complex amplitude vector; unit norm is the caller's contract."""

    amplitudes: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.amplitudes, dtype=complex)
        if vec.ndim != 1:
            raise ValueError("state amplitudes must be a 1-d vector")
        object.__setattr__(self, "amplitudes", _readonly(vec))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        n = self.norm()
        if n < 1e-14:
            raise ValueError("cannot normalize a zero-norm state")
        return QuantumState(self.amplitudes / n)


@dataclass(frozen=True)
class CavitySpace:
    """Truncated single-mode Fock space with its ladder and parity operators.

    The commutator ``[a, a_dag] = 1`` holds everywhere except the top Fock
    level, where the truncation artifact is confined.
    """

    n_cut: int
    a: Operator = field(repr=False)
    a_dag: Operator = field(repr=False)
    n_op: Operator = field(repr=False)
    parity: Operator = field(repr=False)

    def vacuum(self) -> QuantumState:
        vec = np.zeros(self.n_cut, dtype=complex)
        vec[0] = 1.0
        return QuantumState(vec)

    def fock(self, n: int) -> QuantumState:
        if not 0 <= n < self.n_cut:
            raise ValueError(f"Fock index {n} outside [0, {self.n_cut})")
        vec = np.zeros(self.n_cut, dtype=complex)
        vec[n] = 1.0
        return QuantumState(vec)

    def coherent(self, alpha: complex) -> QuantumState:
        """Coherent state from its closed-form Fock amplitudes."""
        if alpha == 0:
            return self.vacuum()
        n = np.arange(self.n_cut)
        log_fact = np.cumsum(np.log(np.maximum(n, 1)))
        amps = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(complex(alpha)) - 0.5 * log_fact)
        return QuantumState(np.asarray(amps, dtype=complex))


@dataclass(frozen=True)
class CompositeSpace:
    """Qubit (x) cavity composite space, qubit-major ordering, dim = 2 n_cut."""

    cavity: CavitySpace

    @property
    def n_cut(self) -> int:
        return self.cavity.n_cut

    @property
    def dim(self) -> int:
        return 2 * self.cavity.n_cut

    # -- lifted operators ---------------------------------------------------
    def lift_qubit(self, mat2: np.ndarray, kind: str = "general") -> Operator:
        return Operator(np.kron(np.asarray(mat2, dtype=complex), np.eye(self.n_cut)), kind=kind)

    def lift_cavity(self, mat: np.ndarray, kind: str = "general") -> Operator:
        return Operator(np.kron(np.eye(2), np.asarray(mat, dtype=complex)), kind=kind)

    @property
    def sigma_x(self) -> Operator:
        return self.lift_qubit(SIGMA_X, kind="hermitian")

    @property
    def sigma_y(self) -> Operator:
        return self.lift_qubit(SIGMA_Y, kind="hermitian")

    @property
    def sigma_z(self) -> Operator:
        return self.lift_qubit(SIGMA_Z, kind="hermitian")

    @property
    def sigma_plus(self) -> Operator:
        return self.lift_qubit(SIGMA_PLUS)

    @property
    def sigma_minus(self) -> Operator:
        return self.lift_qubit(SIGMA_MINUS)

    @property
    def number(self) -> Operator:
        return self.lift_cavity(self.cavity.n_op.matrix, kind="hermitian")

    @property
    def annihilation(self) -> Operator:
        return self.lift_cavity(self.cavity.a.matrix)

    @property
    def cavity_parity(self) -> Operator:
        return self.lift_cavity(self.cavity.parity.matrix, kind="hermitian")

    @property
    def total_parity(self) -> Operator:
        """Parity of the total excitation, sigma_z (x) (-1)^n."""
        return Operator(np.kron(SIGMA_Z, self.cavity.parity.matrix), kind="hermitian")

    @property
    def identity(self) -> Operator:
        return Operator(np.eye(self.dim), kind="hermitian")

    # -- states --------------------------------------------------------------
    def basis_state(self, qubit: str, n: int) -> QuantumState:
        """Product basis ket |qubit, n>, qubit in {'g', 'e'}."""
        if qubit not in QUBIT_INDEX:
            raise ValueError(f"qubit label must be 'g' or 'e', got {qubit!r}")
        if not 0 <= n < self.n_cut:
            raise ValueError(f"Fock index {n} outside [0, {self.n_cut})")
        vec = np.zeros(self.dim, dtype=complex)
        vec[QUBIT_INDEX[qubit] * self.n_cut + n] = 1.0
        return QuantumState(vec)

    def compose(self, qubit_amps: np.ndarray, cavity_state: QuantumState) -> QuantumState:
        """Tensor product (qubit 2-vector) (x) (cavity state)."""
        vec = np.kron(np.asarray(qubit_amps, dtype=complex), cavity_state.amplitudes)
        return QuantumState(vec)

    def top_level_population(self, psi: np.ndarray) -> float:
        """Population of the highest Fock level across both qubit branches."""
        n = self.n_cut
        return float(abs(psi[n - 1]) ** 2 + abs(psi[2 * n - 1]) ** 2)

    def top_level_population_rho(self, rho: np.ndarray) -> float:
        n = self.n_cut
        return float(rho[n - 1, n - 1].real + rho[2 * n - 1, 2 * n - 1].real)


def build_cavity(n_cut: int) -> CavitySpace:
    """Construct the truncated cavity operators for a given Fock cutoff."""
    if n_cut < 2:
        raise ValueError(f"n_cut must be >= 2, got {n_cut}")
    a = np.diag(np.sqrt(np.arange(1, n_cut, dtype=float)), 1).astype(complex)
    a_dag = a.conj().T
    n_op = a_dag @ a
    parity = np.diag((-1.0) ** np.arange(n_cut)).astype(complex)
    return CavitySpace(
        n_cut=n_cut,
        a=Operator(a),
        a_dag=Operator(a_dag),
        n_op=Operator(n_op, kind="hermitian"),
        parity=Operator(parity, kind="hermitian"),
    )


def build_composite(n_cut: int) -> CompositeSpace:
    """Qubit (x) truncated-cavity composite space.

    Raises
    ------
    ValueError
        If ``n_cut < 2``.
    """
    return CompositeSpace(cavity=build_cavity(n_cut))


def unitary_exponential(hermitian_matrix: np.ndarray, prefactor: float = 1.0) -> np.ndarray:
    """exp(-i * prefactor * H) for hermitian H, exactly unitary by construction."""
    evals, vecs = np.linalg.eigh(hermitian_matrix)
    return (vecs * np.exp(-1j * prefactor * evals)) @ vecs.conj().T


def displacement_matrix(beta: complex, space: "CavitySpace") -> np.ndarray:
    """Raw displacement matrix, no tagging or diagnostics (hot-path helper)."""
    gen = beta * space.a_dag.matrix - np.conj(beta) * space.a.matrix
    return unitary_exponential(1j * gen)


def displacement(beta: complex, space: CavitySpace) -> Operator:
    """Displacement operator D(beta) = exp(beta a^dag - beta* a).

    Computed by dense matrix exponential of the (truncated, anti-hermitian)
    generator, so the result is unitary by construction; faithfulness to the
    untruncated displacement requires |beta|^2 well inside n_cut.  A warning
    is emitted when the coherent-displacement identity D(beta)|0> deviates
    from the closed-form amplitudes by more than 1e-6 in norm.
    """
    mat = displacement_matrix(beta, space)
    if beta != 0:
        ref = space.coherent(beta).amplitudes
        defect = float(np.linalg.norm(mat[:, 0] - ref))
        if defect > 1e-6:
            warnings.warn(
                f"displacement(|beta|={abs(beta):.3g}) truncation defect {defect:.2e} "
                f"at n_cut={space.n_cut}",
                RuntimeWarning,
                stacklevel=2,
            )
    return Operator(mat, kind="unitary")


def fidelity(psi1: QuantumState, psi2: QuantumState) -> float:
    """State fidelity F = |<psi1|psi2>|^2, clipped to [0, 1]."""
    if psi1.dim != psi2.dim:
        raise ValueError(f"dimension mismatch: {psi1.dim} vs {psi2.dim}")
    overlap = np.vdot(psi1.amplitudes, psi2.amplitudes)
    return float(np.clip(abs(overlap) ** 2, 0.0, 1.0))


def bures_angle(psi1: QuantumState, psi2: QuantumState, doubled: bool = False) -> float:
    """Geodesic angle arccos(sqrt(F)) between pure states.

    With ``doubled=True`` returns the 2 arccos(sqrt(F)) convention used when
    quoting Fubini-Study path lengths.
    """
    angle = float(np.arccos(np.sqrt(fidelity(psi1, psi2))))
    return 2.0 * angle if doubled else angle


def expectation(op: Operator, psi: QuantumState) -> complex:
    """<psi|op|psi>; real to within round-off when op is hermitian."""
    if op.dim != psi.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim} vs state {psi.dim}")
    return complex(np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes))
