"""Open-system dynamics under the Bloch-Redfield master equation with
partial secularization and thermal (Bose-Einstein) rates.

The generator is rebuilt in the instantaneous eigenbasis of H(t) at every
integration sample from the coupling operators

    {sqrt(Gamma_c) (a + a^dag),  sqrt(Gamma_q) sigma_x,  sqrt(Gamma_phi) sigma_z},

with a flat bath spectral density times the Bose-Einstein occupation, no Lamb
shift, and tensor terms dropped whenever the Bohr-frequency mismatch
|omega_ab - omega_cd| exceeds the secular cutoff.  Trace and hermiticity are
preserved exactly by construction; complete positivity is not guaranteed
(Redfield), so the minimum eigenvalue is monitored and reported, never
enforced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hilbert import CompositeSpace, Operator, QuantumState
from .propagate import HamiltonianFn

DEFAULT_SECULAR_CUTOFF = 0.1  # in omega_c units

CHANNELS = ("cavity", "qubit", "dephasing")


@dataclass(frozen=True)
class BathSpec:
    """Thermal environment: channel rates, temperature, secular cutoff.

    Rates and temperature are in omega_c units with k_B = 1; ``secular_cutoff``
    may be ``math.inf`` (keep every tensor term) or 0 (full secularization).
    """

    gamma_c: float = 0.0
    gamma_q: float = 0.0
    gamma_phi: float = 0.0
    temperature: float = 0.0
    secular_cutoff: float = DEFAULT_SECULAR_CUTOFF

    def __post_init__(self):
        for name in ("gamma_c", "gamma_q", "gamma_phi", "temperature"):
            val = getattr(self, name)
            if not math.isfinite(val) and name != "temperature":
                raise ValueError(f"{name} must be finite, got {val}")
            if val < 0:
                raise ValueError(f"{name} must be non-negative, got {val}")
        if self.secular_cutoff < 0:
            raise ValueError("secular_cutoff must be non-negative")

    def with_rates(self, gamma_c=None, gamma_q=None, gamma_phi=None) -> "BathSpec":
        return BathSpec(
            gamma_c=self.gamma_c if gamma_c is None else gamma_c,
            gamma_q=self.gamma_q if gamma_q is None else gamma_q,
            gamma_phi=self.gamma_phi if gamma_phi is None else gamma_phi,
            temperature=self.temperature,
            secular_cutoff=self.secular_cutoff,
        )


@dataclass(frozen=True)
class DensityOperator:
    """Validated density matrix: hermitian, unit trace; positivity monitored."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise ValueError("density matrix is not hermitian within 1e-10")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density matrix trace {tr} differs from 1 beyond 1e-8")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, psi: QuantumState) -> "DensityOperator":
        vec = psi.amplitudes
        return cls(np.outer(vec, vec.conj()))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def fidelity_with(self, psi: QuantumState) -> float:
        val = np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes).real
        return float(np.clip(val, 0.0, 1.0))


def bath_rate(omega: float, gamma: float, temperature: float) -> float:
    """Flat spectral density times Bose-Einstein statistics.

    Emission (omega > 0): gamma (n_bar + 1); absorption (omega < 0):
    gamma n_bar(|omega|); zero frequency: gamma (the classical
    white-dephasing convention used for the dephasing channel).
    """
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    if omega == 0.0:
        return gamma
    if temperature <= 0.0:
        return gamma if omega > 0 else 0.0
    n_bar = 1.0 / math.expm1(abs(omega) / temperature)
    return gamma * (n_bar + 1.0) if omega > 0 else gamma * n_bar


def _spectral_matrix(bohr: np.ndarray, gamma: float, temperature: float) -> np.ndarray:
    """bath_rate evaluated elementwise on a Bohr-frequency matrix."""
    out = np.full_like(bohr, gamma)
    pos = bohr > 0
    neg = bohr < 0
    if temperature <= 0.0:
        out[neg] = 0.0
    else:
        n_bar = np.zeros_like(bohr)
        nz = pos | neg
        n_bar[nz] = 1.0 / np.expm1(np.abs(bohr[nz]) / temperature)
        out[pos] = gamma * (n_bar[pos] + 1.0)
        out[neg] = gamma * n_bar[neg]
    return out


def _fix_eigenbasis(evals: np.ndarray, vecs: np.ndarray, gap_tol: float = 1e-10):
    """Deterministic eigenbasis: phase-fix every vector, and order degenerate
    clusters by the index of their dominant basis component."""
    dim = len(evals)
    order = np.arange(dim)
    start = 0
    while start < dim:
        stop = start + 1
        while stop < dim and evals[stop] - evals[stop - 1] < gap_tol:
            stop += 1
        if stop - start > 1:
            dom = [int(np.argmax(np.abs(vecs[:, j]))) for j in range(start, stop)]
            order[start:stop] = start + np.argsort(np.asarray(dom), kind="stable")
        start = stop
    vecs = vecs[:, order]
    evals = evals[order]
    for j in range(dim):
        anchor = vecs[np.argmax(np.abs(vecs[:, j])), j]
        if abs(anchor) > 0:
            vecs[:, j] *= np.conj(anchor) / abs(anchor)
    return evals, vecs


class RedfieldGenerator:
    """Action of the Bloch-Redfield generator at one sample time.

    Applies rho -> -i[H, rho] + sum_alpha D_alpha(rho) with the dissipators
    assembled in the instantaneous eigenbasis and masked by the secular
    cutoff.  The action is exactly trace- and hermiticity-preserving.
    """

    def __init__(self, h_op: Operator, bath: BathSpec, space: CompositeSpace):
        if h_op.kind != "hermitian":
            raise ValueError("Redfield generator needs a hermitian Hamiltonian")
        evals, vecs = np.linalg.eigh(h_op.matrix)
        if np.min(np.diff(evals)) < 1e-10:
            warnings.warn("degenerate instantaneous eigenvalues; using deterministic tie-break",
                          RuntimeWarning, stacklevel=2)
        evals, vecs = _fix_eigenbasis(evals, vecs)
        self.evals = evals
        self.vecs = vecs
        self.dim = len(evals)
        bohr = evals[:, None] - evals[None, :]          # omega_ab = E_a - E_b
        self.bohr = bohr
        cutoff = bath.secular_cutoff
        scale = max(1.0, float(np.max(np.abs(evals))))
        tol = cutoff + 1e-9 * scale
        secular_all = math.isinf(cutoff)
        mask2 = (np.ones((self.dim, self.dim), dtype=bool) if secular_all
                 else np.abs(bohr) <= tol)

        # The dissipator sum_alpha (Lam rho A - A Lam rho + A rho Lam^dag -
        # rho Lam^dag A) is assembled once per sample time: the two sandwich
        # terms merge (over channels) into a single masked 4-index tensor,
        # the two one-sided terms into masked left/right matrices.  Memory
        # and build cost grow as dim^4; intended for dim <= ~48.
        sandwich = None
        left = np.zeros((self.dim, self.dim), dtype=complex)
        right = np.zeros((self.dim, self.dim), dtype=complex)
        matmul_terms = []
        x_cav = space.annihilation.matrix + space.annihilation.matrix.conj().T
        for gamma, x_lab in ((bath.gamma_c, x_cav),
                             (bath.gamma_q, space.sigma_x.matrix),
                             (bath.gamma_phi, space.sigma_z.matrix)):
            if gamma <= 0.0:
                continue
            a_eig = vecs.conj().T @ x_lab @ vecs
            # Lambda_mn carries S(omega_nm), the Bohr frequency of n -> m.
            lam = 0.5 * _spectral_matrix(bohr, gamma, bath.temperature).T * a_eig
            left += (a_eig @ lam) * mask2
            right += (lam.conj().T @ a_eig) * mask2
            if secular_all:
                matmul_terms.append((a_eig, lam))
            else:
                term = (np.einsum("ac,db->abcd", lam, a_eig)
                        + np.einsum("ac,db->abcd", a_eig, lam.conj().T))
                sandwich = term if sandwich is None else sandwich + term
        if sandwich is not None:
            mask4 = np.abs(bohr[:, :, None, None] - bohr[None, None, :, :]) <= tol
            sandwich *= mask4
        self._sandwich = sandwich
        self._left = left
        self._right = right
        self._matmul_terms = matmul_terms

    def to_eigenbasis(self, rho_lab: np.ndarray) -> np.ndarray:
        return self.vecs.conj().T @ rho_lab @ self.vecs

    def from_eigenbasis(self, rho_eig: np.ndarray) -> np.ndarray:
        return self.vecs @ rho_eig @ self.vecs.conj().T

    def apply(self, rho_lab: np.ndarray) -> np.ndarray:
        rho = self.to_eigenbasis(rho_lab)
        out = -1j * self.bohr * rho
        for a_eig, lam in self._matmul_terms:
            out += lam @ rho @ a_eig + a_eig @ rho @ lam.conj().T
        if self._sandwich is not None:
            out += np.einsum("abcd,cd->ab", self._sandwich, rho)
        out -= self._left @ rho
        out -= rho @ self._right
        return self.from_eigenbasis(out)


def redfield_generator(h_op: Operator, bath: BathSpec, space: CompositeSpace) -> RedfieldGenerator:
    """Generator of the master equation at one instant (dim^2 x dim^2 action)."""
    return RedfieldGenerator(h_op, bath, space)


@dataclass(frozen=True)
class OpenTrajectory:
    """Density-matrix evolution record with its health monitors."""

    times: np.ndarray
    rhos: np.ndarray            # (M, dim, dim), decimated
    trace_drift_max: float
    min_eigenvalue: float
    leak_max: float
    positivity_tripped: bool = False

    @property
    def final(self) -> DensityOperator:
        rho = self.rhos[-1]
        rho = rho / np.trace(rho).real
        return DensityOperator(0.5 * (rho + rho.conj().T))


def evolve_open(
    rho0: DensityOperator,
    hamiltonian: HamiltonianFn,
    bath: BathSpec,
    tau: float,
    steps: int,
    *,
    space: CompositeSpace,
    record_stride: int | None = None,
    eig_check_stride: int | None = None,
    positivity_floor: float = -1e-3,
) -> OpenTrajectory:
    """Fixed-step RK4 integration of the Redfield equation.

    The generator is rebuilt at each sample time (t, t + h/2, t + h); the
    state is re-symmetrized after every step.  The positivity monitor warns
    (does not abort) when the smallest eigenvalue falls below the floor.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = tau / steps
    if record_stride is None:
        record_stride = max(1, steps // 128)
    if eig_check_stride is None:
        eig_check_stride = max(1, steps // 16)
    rho = rho0.matrix.copy()
    gen_at = lambda t: RedfieldGenerator(hamiltonian(t), bath, space)
    gen_right = gen_at(0.0)
    times = [0.0]
    rhos = [rho.copy()]
    trace_drift = 0.0
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    leak_max = space.top_level_population_rho(rho)
    tripped = False
    for k in range(steps):
        t0 = k * h
        gen_a = gen_right
        gen_b = gen_at(t0 + 0.5 * h)
        gen_right = gen_at(t0 + h)
        k1 = gen_a.apply(rho)
        k2 = gen_b.apply(rho + 0.5 * h * k1)
        k3 = gen_b.apply(rho + 0.5 * h * k2)
        k4 = gen_right.apply(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        trace_drift = max(trace_drift, abs(np.trace(rho).real - 1.0))
        leak_max = max(leak_max, space.top_level_population_rho(rho))
        if (k + 1) % eig_check_stride == 0 or k == steps - 1:
            low = float(np.linalg.eigvalsh(rho)[0])
            min_eig = min(min_eig, low)
            if low < positivity_floor and not tripped:
                tripped = True
                warnings.warn(
                    f"Redfield positivity monitor: min eigenvalue {low:.2e} below "
                    f"{positivity_floor:.0e} at t={(k + 1) * h:.4g}",
                    RuntimeWarning,
                    stacklevel=2,
                )
        if (k + 1) % record_stride == 0 or k == steps - 1:
            times.append((k + 1) * h)
            rhos.append(rho.copy())
    return OpenTrajectory(
        times=np.asarray(times),
        rhos=np.asarray(rhos),
        trace_drift_max=trace_drift,
        min_eigenvalue=min_eig,
        leak_max=leak_max,
        positivity_tripped=tripped,
    )


@dataclass(frozen=True)
class RobustnessRow:
    channels: str
    gamma: float
    temperature: float
    infidelity: float
    min_eigenvalue: float
    trace_drift: float

    def as_dict(self) -> dict:
        return {
            "channels": self.channels,
            "gamma": self.gamma,
            "temperature": self.temperature,
            "infidelity": self.infidelity,
            "min_eigenvalue": self.min_eigenvalue,
            "trace_drift": self.trace_drift,
        }


def channel_bath(channels: str, gamma: float, temperature: float,
                 secular_cutoff: float = DEFAULT_SECULAR_CUTOFF) -> BathSpec:
    """BathSpec with ``gamma`` applied to the named channel subset.

    ``channels`` is ``"all"`` or a ``+``-joined subset of
    {cavity, qubit, dephasing}, e.g. ``"qubit+dephasing"``.
    """
    names = CHANNELS if channels == "all" else tuple(channels.split("+"))
    for nm in names:
        if nm not in CHANNELS:
            raise ValueError(f"unknown channel {nm!r}")
    return BathSpec(
        gamma_c=gamma if "cavity" in names else 0.0,
        gamma_q=gamma if "qubit" in names else 0.0,
        gamma_phi=gamma if "dephasing" in names else 0.0,
        temperature=temperature,
        secular_cutoff=secular_cutoff,
    )


def robustness_sweep(
    hamiltonian: HamiltonianFn,
    rho0: DensityOperator,
    target: QuantumState,
    tau: float,
    steps: int,
    gamma_grid,
    temperatures,
    channel_configs=("all", "dephasing", "qubit", "cavity"),
    *,
    space: CompositeSpace,
    secular_cutoff: float = DEFAULT_SECULAR_CUTOFF,
) -> list[RobustnessRow]:
    """Target-state infidelity across channel configurations, rates, and T."""
    rows = []
    for channels in channel_configs:
        for temperature in temperatures:
            for gamma in gamma_grid:
                bath = channel_bath(channels, float(gamma), float(temperature), secular_cutoff)
                traj = evolve_open(rho0, hamiltonian, bath, tau, steps, space=space,
                                   record_stride=steps)
                rows.append(RobustnessRow(
                    channels=channels,
                    gamma=float(gamma),
                    temperature=float(temperature),
                    infidelity=1.0 - traj.final.fidelity_with(target),
                    min_eigenvalue=traj.min_eigenvalue,
                    trace_drift=traj.trace_drift_max,
                ))
    return rows
