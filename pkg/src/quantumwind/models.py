"""Driven qubit-cavity Hamiltonians and engineered target states.

Covers the quantum Rabi model, its rotating-wave (Jaynes-Cummings) limit and
Landau-Zener two-level blocks, the sine coupling ramps and polynomial qubit
frequency sweeps used throughout, and the nonclassical targets: optical cat
states, the giant entangled cat, equal Fock superpositions, and the displaced
Fock eigenstates of the zero-splitting Rabi Hamiltonian.

All frequencies, rates, and times are expressed in units of the cavity
frequency ``omega_c`` (fixed to 1 by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .hilbert import (
    CompositeSpace,
    Operator,
    QuantumState,
    SIGMA_X,
    SIGMA_Z,
    build_cavity,
    displacement,
)

PROFILES = ("linear", "quadratic", "cubic", "constant")
ENVELOPES = ("full_sine", "half_sine")


@dataclass(frozen=True)
class DriveProtocol:
    """Time profiles of the coupling lambda(t) and qubit frequency omega_q(t).

    The coupling follows a sine envelope between ``lambda_0`` and ``lambda_m``
    (a full arch for ``full_sine``, a quarter period reaching the maximum at
    t = tau for ``half_sine``), offset by the phase ``phi``.  The qubit sweep
    interpolates from ``omega_i`` to ``omega_f`` with a linear, quadratic, or
    cubic shape function; ``constant`` holds omega_f for all t.
    """

    tau: float
    omega_i: float
    omega_f: float
    profile: str = "linear"
    alpha: float = 0.5
    beta_cubic: float = 2.0
    lambda_0: float = 0.0
    lambda_m: float = 0.0
    phi: float = 0.0
    envelope: str = "full_sine"
    omega_c: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if self.envelope not in ENVELOPES:
            raise ValueError(f"envelope must be one of {ENVELOPES}, got {self.envelope!r}")

    def with_tau(self, tau: float) -> "DriveProtocol":
        kwargs = asdict(self)
        kwargs["tau"] = tau
        return DriveProtocol(**kwargs)


def shape_function(profile: str, s: float, alpha: float, beta_cubic: float) -> float:
    """Sweep shape f_j(s) with f_j(0) = 0 and f_j(1) = 1 (constant maps to 1)."""
    if profile == "linear":
        return s
    if profile == "quadratic":
        return s + alpha * s * (s - 1.0)
    if profile == "cubic":
        return s + alpha * s * (s - 1.0) + beta_cubic * s * (s - 1.0) * (2.0 * s - 1.0)
    if profile == "constant":
        return 1.0
    raise ValueError(f"unknown profile {profile!r}")


def _check_time(t: float, tau: float):
    if not -1e-12 <= t <= tau * (1.0 + 1e-12):
        raise ValueError(f"t={t} outside protocol window [0, {tau}]")


def coupling(t: float, drive: DriveProtocol) -> float:
    """Coupling strength lambda(t) under the sine envelope."""
    _check_time(t, drive.tau)
    s = t / drive.tau
    if drive.envelope == "full_sine":
        arg = s * math.pi + drive.phi
    else:
        arg = s * math.pi / 2.0 + drive.phi
    return (drive.lambda_m - drive.lambda_0) * math.sin(arg) + drive.lambda_0


def qubit_frequency(t: float, drive: DriveProtocol) -> float:
    """Qubit frequency omega_q(t) along the sweep."""
    _check_time(t, drive.tau)
    s = t / drive.tau
    f = shape_function(drive.profile, s, drive.alpha, drive.beta_cubic)
    return drive.omega_i + (drive.omega_f - drive.omega_i) * f


@dataclass(frozen=True)
class ModelParams:
    """A drive protocol bound to a model variant and a composite space."""

    drive: DriveProtocol
    model: str
    space: CompositeSpace

    def __post_init__(self):
        if self.model not in ("rabi", "jc"):
            raise ValueError(f"model must be 'rabi' or 'jc', got {self.model!r}")

    def hamiltonian(self, t: float) -> Operator:
        if self.model == "rabi":
            return rabi_hamiltonian(t, self)
        return jc_hamiltonian(t, self)


def _static_parts(params: ModelParams):
    space = params.space
    h_cav = params.drive.omega_c * space.number.matrix
    h_sz = 0.5 * space.sigma_z.matrix
    return h_cav, h_sz


def rabi_hamiltonian(t: float, params: ModelParams) -> Operator:
    """H_RM(t) = omega_c a^dag a + omega_q(t)/2 sigma_z + lambda(t) sigma_x (a^dag + a)."""
    space = params.space
    h_cav, h_sz = _static_parts(params)
    x_cav = space.cavity.a.matrix + space.cavity.a_dag.matrix
    h_int = np.kron(SIGMA_X, x_cav)
    mat = h_cav + qubit_frequency(t, params.drive) * h_sz + coupling(t, params.drive) * h_int
    return Operator(mat, kind="hermitian")


def jc_hamiltonian(t: float, params: ModelParams) -> Operator:
    """Rotating-wave limit: conserves the total excitation a^dag a + |e><e|."""
    space = params.space
    h_cav, h_sz = _static_parts(params)
    h_int = (space.sigma_plus.matrix @ space.annihilation.matrix
             + space.sigma_minus.matrix @ space.annihilation.matrix.conj().T)
    mat = h_cav + qubit_frequency(t, params.drive) * h_sz + coupling(t, params.drive) * h_int
    return Operator(mat, kind="hermitian")


def jc_block(n: int, t: float, params: ModelParams) -> Operator:
    """Landau-Zener block of the JC model on span{|e,n>, |g,n+1>}."""
    if n < 0:
        raise ValueError(f"excitation index must be non-negative, got {n}")
    wq = qubit_frequency(t, params.drive)
    wc = params.drive.omega_c
    lam = coupling(t, params.drive)
    off = lam * math.sqrt(n + 1.0)
    mat = np.array(
        [[0.5 * wq + n * wc, off],
         [off, -0.5 * wq + (n + 1) * wc]],
        dtype=complex,
    )
    return Operator(mat, kind="hermitian")


def total_excitation(space: CompositeSpace) -> Operator:
    """N = a^dag a + |e><e| (conserved by the JC model)."""
    proj_e = np.zeros((2, 2), dtype=complex)
    proj_e[1, 1] = 1.0
    mat = space.number.matrix + np.kron(proj_e, np.eye(space.n_cut))
    return Operator(mat, kind="hermitian")


def subspace_projector(kind: str, space: CompositeSpace, j: int | None = None) -> Operator:
    """Projector onto a conserved subspace.

    ``kind`` is ``"jc_excitation"`` (span{|e,j>, |g,j+1>}, needs ``j >= 0``),
    ``"parity_plus"`` (span{|e,0>, |g,1>, |e,2>, ...}), or ``"parity_minus"``
    (span{|g,0>, |e,1>, |g,2>, ...}).
    """
    n_cut = space.n_cut
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    if kind == "jc_excitation":
        if j is None or j < 0:
            raise ValueError("jc_excitation projector needs j >= 0")
        if j + 1 >= n_cut:
            raise ValueError(f"jc_excitation({j}) needs n_cut > {j + 1}")
        for qubit, n in (("e", j), ("g", j + 1)):
            vec = space.basis_state(qubit, n).amplitudes
            mat += np.outer(vec, vec.conj())
    elif kind in ("parity_plus", "parity_minus"):
        # Parity of sigma_z (x) (-1)^n; plus-sector kets are |e, even>, |g, odd>.
        want = 1.0 if kind == "parity_plus" else -1.0
        for qubit, sz in (("g", -1.0), ("e", 1.0)):
            for n in range(n_cut):
                if sz * (-1.0) ** n == want:
                    vec = space.basis_state(qubit, n).amplitudes
                    mat += np.outer(vec, vec.conj())
    else:
        raise ValueError(f"unknown projector kind {kind!r}")
    return Operator(mat, kind="hermitian")


def cat_normalization(alpha: complex, sign: int) -> float:
    """N_pm = sqrt(2 (1 pm exp(-2|alpha|^2))) for theta = 0."""
    return math.sqrt(2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2)))


def cat_state(alpha: complex, sign: int, theta: float, space: CompositeSpace) -> QuantumState:
    """Optical cat (|alpha> + sign e^{i theta} |-alpha>) / N, cavity-only.

    The odd cat at alpha -> 0 is rejected (its normalization vanishes).
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if abs(alpha) ** 2 > space.n_cut / 4.0:
        raise ValueError(f"|alpha|^2={abs(alpha)**2:.3g} too large for n_cut={space.n_cut}")
    cav = space.cavity
    vec = cav.coherent(alpha).amplitudes + sign * np.exp(1j * theta) * cav.coherent(-alpha).amplitudes
    norm = np.linalg.norm(vec)
    if norm < 1e-6:
        raise ValueError(f"cat state normalization vanished (alpha={alpha}, sign={sign:+d})")
    return QuantumState(vec / norm)


def giant_cat_state(eta: float, theta: float, space: CompositeSpace) -> QuantumState:
    """Giant entangled cat (N_+ |g, Cat_+> - N_- |e, Cat_->) / 2.

    At eta -> 0 this reduces to |g, 0>.  The global phase is normalized so the
    |g, 0> amplitude is real and non-negative.
    """
    if abs(eta) ** 2 > space.n_cut / 4.0:
        raise ValueError(f"eta^2={eta**2:.3g} too large for n_cut={space.n_cut}")
    cav = space.cavity
    plus = cav.coherent(eta).amplitudes + np.exp(1j * theta) * cav.coherent(-eta).amplitudes
    minus = cav.coherent(eta).amplitudes - np.exp(1j * theta) * cav.coherent(-eta).amplitudes
    vec = np.zeros(space.dim, dtype=complex)
    n_cut = space.n_cut
    vec[:n_cut] = 0.5 * plus       # N_+ |Cat_+> is the unnormalized even branch
    vec[n_cut:] = -0.5 * minus
    state = QuantumState(vec).normalized()
    anchor = state.amplitudes[0]
    if abs(anchor) > 1e-12:
        state = QuantumState(state.amplitudes * np.conj(anchor) / abs(anchor))
    return state


def giant_cat_from_coherent(eta: float, space: CompositeSpace) -> QuantumState:
    """Independent route to the giant cat via coherent (x) sigma_x-eigenstate kets.

    Builds (|eta>|-x> + |-eta>|+x>) / sqrt(2) with |+-x> = (|g> +- |e>)/sqrt(2),
    which expands to the even/odd-cat form of :func:`giant_cat_state`; used as
    an oracle, not in production paths.
    """
    cav = space.cavity
    x_plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    x_minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
    vec = (np.kron(x_minus, cav.coherent(eta).amplitudes)
           + np.kron(x_plus, cav.coherent(-eta).amplitudes)) / math.sqrt(2.0)
    return QuantumState(vec).normalized()


def fock_superposition(n_a: int, n_b: int, q_a: str, q_b: str, space: CompositeSpace) -> QuantumState:
    """Normalized equal superposition (|q_a, n_a> + |q_b, n_b>) / sqrt(2)."""
    vec = space.basis_state(q_a, n_a).amplitudes + space.basis_state(q_b, n_b).amplitudes
    return QuantumState(vec / np.linalg.norm(vec))


def displaced_fock_eigenstate(sign: int, n: int, eta: float, space: CompositeSpace) -> QuantumState:
    """Eigenstate D(sign eta)|n> |sign x> of omega_c a^dag a + lambda sigma_x (a^dag + a).

    With eta = -lambda/omega_c the eigenvalue is omega_c (n - eta^2).
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if not 0 <= n < space.n_cut:
        raise ValueError(f"Fock index {n} outside [0, {space.n_cut})")
    if abs(eta) ** 2 > space.n_cut / 4.0:
        raise ValueError(f"eta^2={eta**2:.3g} too large for n_cut={space.n_cut}")
    cav = space.cavity
    disp = displacement(sign * eta, cav).matrix @ cav.fock(n).amplitudes
    qubit = np.array([1.0, float(sign)]) / math.sqrt(2.0)
    return QuantumState(np.kron(qubit, disp))
