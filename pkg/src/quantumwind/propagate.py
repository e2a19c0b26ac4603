"""Time-ordered closed-system evolution on a fixed step grid.

Each step applies the exponential of the midpoint-sampled Hamiltonian, which
is exactly norm-preserving and second-order accurate in the step size; global
error is O((tau/steps)^2).  Every evolution tracks the population of the top
Fock level and aborts when it exceeds the truncation guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hilbert import CompositeSpace, LeakageError, Operator, QuantumState

LEAK_TOL = 1e-6

HamiltonianFn = Callable[[float], Operator]


def default_step_count(tau: float, omega_c: float = 1.0) -> int:
    """Default grid: at least 2000 steps and 200 per unit of omega_c * tau."""
    return max(2000, math.ceil(200.0 * tau * omega_c))


@dataclass(frozen=True)
class Trajectory:
    """States on a time grid 0 = t_0 < ... < t_K = tau (possibly decimated)."""

    times: np.ndarray          # (M,) recorded times
    states: np.ndarray         # (M, dim) complex amplitudes
    step_count: int
    leak_max: float

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def state(self, k: int) -> QuantumState:
        return QuantumState(self.states[k])

    @property
    def final_state(self) -> QuantumState:
        return QuantumState(self.states[-1])


@dataclass(frozen=True)
class PropagatorSeries:
    """Unitaries U(t_k) accumulated from the same midpoint steppers."""

    times: np.ndarray          # (M,)
    unitaries: np.ndarray      # (M, dim, dim)

    def at(self, t: float) -> np.ndarray:
        """Unitary at the grid time nearest to t (t must lie on the grid window)."""
        if not self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside stored grid [{self.times[0]}, {self.times[-1]}]")
        k = int(np.argmin(np.abs(self.times - t)))
        return self.unitaries[k]


def step_unitary(h_matrix: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i H dt) through the eigendecomposition (exactly unitary)."""
    evals, vecs = np.linalg.eigh(h_matrix)
    return (vecs * np.exp(-1j * dt * evals)) @ vecs.conj().T


def _sample(hamiltonian: HamiltonianFn, t: float) -> np.ndarray:
    op = hamiltonian(t)
    if op.kind != "hermitian":
        raise ValueError(f"Hamiltonian sample at t={t} is not hermitian-tagged")
    return op.matrix


def evolve(
    hamiltonian: HamiltonianFn,
    psi0: QuantumState,
    tau: float,
    steps: int,
    *,
    space: CompositeSpace | None = None,
    leak_tol: float = LEAK_TOL,
    record_stride: int = 1,
) -> Trajectory:
    """Propagate psi0 under a time-dependent Hamiltonian.

    Parameters
    ----------
    hamiltonian:
        Map t -> hermitian-tagged Operator.
    space:
        When given, the top-Fock-level population is tracked at every step
        and a LeakageError is raised if it exceeds ``leak_tol``.
    record_stride:
        Record every ``record_stride``-th grid point (endpoints always kept);
        decimation never affects the computed final state.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    h = tau / steps
    psi = psi0.amplitudes.astype(complex)
    leak_max = space.top_level_population(psi) if space is not None else 0.0

    rec_times = [0.0]
    rec_states = [psi.copy()]
    for k in range(steps):
        t_mid = (k + 0.5) * h
        psi = step_unitary(_sample(hamiltonian, t_mid), h) @ psi
        if space is not None:
            leak = space.top_level_population(psi)
            if leak > leak_max:
                leak_max = leak
            if leak > leak_tol:
                raise LeakageError(
                    f"top Fock level population {leak:.3e} exceeds guard {leak_tol:.1e} "
                    f"at t={(k + 1) * h:.6g} (n_cut={space.n_cut})"
                )
        if (k + 1) % record_stride == 0 or k == steps - 1:
            rec_times.append((k + 1) * h)
            rec_states.append(psi.copy())
    return Trajectory(
        times=np.asarray(rec_times),
        states=np.asarray(rec_states),
        step_count=steps,
        leak_max=leak_max,
    )


def propagator_series(
    hamiltonian: HamiltonianFn,
    tau: float,
    steps: int,
    *,
    record_stride: int = 1,
) -> PropagatorSeries:
    """Accumulate U(t_k) from the same midpoint steppers as :func:`evolve`."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    h = tau / steps
    dim = _sample(hamiltonian, 0.5 * h).shape[0]
    u = np.eye(dim, dtype=complex)
    rec_times = [0.0]
    rec_us = [u.copy()]
    for k in range(steps):
        t_mid = (k + 0.5) * h
        u = step_unitary(_sample(hamiltonian, t_mid), h) @ u
        if (k + 1) % record_stride == 0 or k == steps - 1:
            rec_times.append((k + 1) * h)
            rec_us.append(u.copy())
    return PropagatorSeries(times=np.asarray(rec_times), unitaries=np.asarray(rec_us))


def fidelity_series(traj: Trajectory, target: QuantumState) -> np.ndarray:
    """Instantaneous fidelity |<target|psi(t_k)>|^2 along the trajectory."""
    if target.dim != traj.dim:
        raise ValueError(f"dimension mismatch: target {target.dim} vs trajectory {traj.dim}")
    overlaps = traj.states @ target.amplitudes.conj()
    return np.abs(overlaps) ** 2


def occupation_series(traj: Trajectory, projector: Operator) -> np.ndarray:
    """Subspace occupation Tr[P rho(t_k)] for an idempotent hermitian projector."""
    p = projector.matrix
    if projector.kind != "hermitian" or np.max(np.abs(p @ p - p)) > 1e-10:
        raise ValueError("occupation_series needs an idempotent hermitian projector")
    vals = np.einsum("ki,ij,kj->k", traj.states.conj(), p, traj.states)
    return np.clip(vals.real, 0.0, 1.0)


def expectation_series(traj: Trajectory, op: Operator) -> np.ndarray:
    vals = np.einsum("ki,ij,kj->k", traj.states.conj(), op.matrix, traj.states)
    return vals.real if op.kind == "hermitian" else vals


def substep_deviation(
    hamiltonian: HamiltonianFn,
    psi0: QuantumState,
    tau: float,
    step_counts: Sequence[int],
) -> list[tuple[int, float]]:
    """Final-state deviation between K and 2K steps, for convergence studies."""
    out = []
    for k in step_counts:
        a = evolve(hamiltonian, psi0, tau, k).final_state.amplitudes
        b = evolve(hamiltonian, psi0, tau, 2 * k).final_state.amplitudes
        out.append((k, float(np.linalg.norm(a - b))))
    return out


def convergence_order(deviations: Sequence[tuple[int, float]]) -> float:
    """Slope of log(deviation) vs log(steps); -slope is the measured order."""
    ks = np.log([k for k, _ in deviations])
    ds = np.log([d for _, d in deviations])
    slope = np.polyfit(ks, ds, 1)[0]
    return float(-slope)
