"""Quantum-speed-limit accounting: energy variances, the Mandelstam-Tamm
bound, control-cost norms, and the speed-resource sweep comparing wind and
free (adiabatic-style) driving.

Conventions: the bound angle is arccos(sqrt(F)) (no factor 2), so the wind
run saturates tau * v_z = arccos(sqrt(F_0)) exactly; the doubled Bures-angle
convention is emitted alongside in reports, labeled.  The norm in the cost
inequality Delta H <= ||H|| is the spectral norm, for which the traceless
rank-2 control satisfies it with equality; the elementwise Hilbert-Schmidt
(Frobenius) value is reported as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hilbert import CompositeSpace, Operator, QuantumState, fidelity
from .models import ModelParams
from .propagate import HamiltonianFn, Trajectory, evolve, default_step_count
from .wind import WindControl, control_hamiltonian_rot, evolve_with_wind, synthesize


def energy_variance(h: Operator, psi: QuantumState) -> float:
    """Variance <H^2> - <H>^2 for a hermitian H; clamped at zero round-off."""
    if h.kind != "hermitian":
        raise ValueError("energy_variance needs a hermitian operator")
    hpsi = h.matrix @ psi.amplitudes
    mean = np.vdot(psi.amplitudes, hpsi).real
    var = float(np.vdot(hpsi, hpsi).real - mean ** 2)
    if var < -1e-12:
        raise ValueError(f"variance {var:.3e} below round-off tolerance")
    return max(var, 0.0)


def _variance_on_grid(traj: Trajectory, hamiltonian: HamiltonianFn) -> np.ndarray:
    out = np.empty(len(traj.times))
    for k, t in enumerate(traj.times):
        out[k] = math.sqrt(energy_variance(hamiltonian(float(t)), traj.state(k)))
    return out


def time_averaged_variance(traj: Trajectory, hamiltonian: HamiltonianFn) -> float:
    """Trapezoidal time average of Delta H(t) over the trajectory grid."""
    if len(traj.times) < 2:
        raise ValueError("trajectory must hold at least two grid points")
    dh = _variance_on_grid(traj, hamiltonian)
    span = traj.times[-1] - traj.times[0]
    return float(np.trapz(dh, traj.times) / span)


def mt_bound(psi_i: QuantumState, psi_f: QuantumState, avg_variance: float) -> float:
    """Minimum evolution time arccos(sqrt(F)) / avg_variance.

    Raises ValueError for zero variance with non-identical states (the bound
    is unbounded there).
    """
    angle = math.acos(math.sqrt(fidelity(psi_i, psi_f)))
    if avg_variance <= 0.0:
        if angle > 1e-12:
            raise ValueError("zero average variance with distinct states: bound is unbounded")
        return 0.0
    return angle / avg_variance


def hs_cost(
    hamiltonian: HamiltonianFn, tau: float, steps: int, norm: str = "spectral"
) -> float:
    """Time-averaged operator norm C = tau^-1 int ||H(t)|| dt.

    ``norm`` selects ``"spectral"`` (largest |eigenvalue|; the variance bound
    Delta H <= ||H|| is saturated by traceless rank-2 controls under it) or
    ``"frobenius"`` (elementwise Hilbert-Schmidt).
    """
    if norm not in ("spectral", "frobenius"):
        raise ValueError(f"norm must be 'spectral' or 'frobenius', got {norm!r}")
    times = np.linspace(0.0, tau, steps + 1)
    vals = np.empty(len(times))
    for k, t in enumerate(times):
        mat = hamiltonian(float(t)).matrix
        if norm == "spectral":
            vals[k] = np.max(np.abs(np.linalg.eigvalsh(mat)))
        else:
            vals[k] = np.linalg.norm(mat)
    return float(np.trapz(vals, times) / tau)


@dataclass(frozen=True)
class EnergeticsReport:
    """Speed/resource summary of one run in a stated frame."""

    avg_variance: float
    bound_speed: float          # arccos(sqrt(F)) / tau
    bound_speed_doubled: float  # 2 arccos(sqrt(F)) / tau (Bures-angle convention)
    mt_time: float
    hs_cost_spectral: float
    hs_cost_frobenius: float
    saturation_ratio: float

    def as_dict(self) -> dict:
        return {
            "avg_variance": self.avg_variance,
            "bound_speed": self.bound_speed,
            "bound_speed_doubled": self.bound_speed_doubled,
            "mt_time": self.mt_time,
            "hs_cost_spectral": self.hs_cost_spectral,
            "hs_cost_frobenius": self.hs_cost_frobenius,
            "saturation_ratio": self.saturation_ratio,
        }


def report(
    traj: Trajectory,
    hamiltonian: HamiltonianFn,
    psi_i: QuantumState,
    psi_final: QuantumState,
    tau: float,
    *,
    cost_steps: int = 64,
) -> EnergeticsReport:
    """Assemble the report for a trajectory evolved under ``hamiltonian``."""
    avg = time_averaged_variance(traj, hamiltonian)
    angle = math.acos(math.sqrt(fidelity(psi_i, psi_final)))
    bound = angle / tau
    return EnergeticsReport(
        avg_variance=avg,
        bound_speed=bound,
        bound_speed_doubled=2.0 * bound,
        mt_time=angle / avg if avg > 0 else 0.0,
        hs_cost_spectral=hs_cost(hamiltonian, tau, cost_steps, "spectral"),
        hs_cost_frobenius=hs_cost(hamiltonian, tau, cost_steps, "frobenius"),
        saturation_ratio=avg / bound if bound > 0 else math.inf,
    )


@dataclass(frozen=True)
class SpeedResourceRow:
    """One tau of the wind-vs-free comparison.

    The wind column is the rotated-frame control variance (the quantity that
    saturates its bound); the free column is the lab-frame variance of the
    uncontrolled Hamiltonian.  Both bounds use arccos(sqrt(F))/tau with the
    frame-matching fidelity.
    """

    tau: float
    vbar_wind: float
    bound_wind: float
    ratio_wind: float
    fidelity_wind: float
    vbar_free: float
    bound_free: float
    ratio_free: float
    fidelity_free: float
    saturates_wind: bool
    saturates_free: bool

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "vbar_wind": self.vbar_wind,
            "bound_wind": self.bound_wind,
            "ratio_wind": self.ratio_wind,
            "fidelity_wind": self.fidelity_wind,
            "vbar_free": self.vbar_free,
            "bound_free": self.bound_free,
            "ratio_free": self.ratio_free,
            "fidelity_free": self.fidelity_free,
            "saturates_wind": self.saturates_wind,
            "saturates_free": self.saturates_free,
        }


def rotated_variance_average(
    traj: Trajectory, wc: WindControl, *, samples: int = 65
) -> float:
    """Time average of Delta H_c' on the rotated numerically evolved states.

    States are pulled back with the stored U_0 snapshots; sampling is limited
    to the stored grid times.
    """
    hc = control_hamiltonian_rot(0.0, wc)
    stored = wc.u0_series.times
    idx = np.unique(np.linspace(0, len(stored) - 1, samples).astype(int))
    times, vals = [], []
    traj_times = traj.times
    for i in idx:
        t = stored[i]
        k = int(np.argmin(np.abs(traj_times - t)))
        if abs(traj_times[k] - t) > 1e-9 * max(1.0, wc.tau):
            continue
        psi_rot = wc.u0_series.unitaries[i].conj().T @ traj.states[k]
        vals.append(math.sqrt(energy_variance(hc, QuantumState(psi_rot))))
        times.append(t)
    return float(np.trapz(vals, times) / (times[-1] - times[0]))


def speed_resource_sweep(
    params_for_tau: Callable[[float], ModelParams],
    psi_i: QuantumState,
    psi_f: QuantumState,
    tau_list: Sequence[float],
    *,
    space: CompositeSpace | None = None,
    steps_for_tau: Callable[[float], int] = default_step_count,
    saturation_tol: float = 1e-6,
) -> list[SpeedResourceRow]:
    """Wind-vs-free energy-resource table over a list of protocol times."""
    rows = []
    for tau in tau_list:
        params = params_for_tau(tau)
        steps = steps_for_tau(tau)
        h0 = params.hamiltonian
        wc = synthesize(h0, psi_i, psi_f, tau, steps)
        traj_w = evolve_with_wind(h0, psi_i, psi_f, tau, steps, control=wc, space=space)
        vbar_w = rotated_variance_average(traj_w, wc)
        bound_w = math.acos(math.sqrt(wc.rotated_fidelity)) / tau
        fid_w = fidelity(traj_w.final_state, psi_f)

        traj_f = evolve(h0, psi_i, tau, steps, space=space, record_stride=max(1, steps // 256))
        vbar_f = time_averaged_variance(traj_f, h0)
        fid_f = fidelity(traj_f.final_state, psi_f)
        bound_f = math.acos(math.sqrt(fidelity(psi_i, traj_f.final_state))) / tau

        ratio_w = vbar_w / bound_w if bound_w > 0 else math.inf
        ratio_f = vbar_f / bound_f if bound_f > 0 else math.inf
        rows.append(
            SpeedResourceRow(
                tau=tau,
                vbar_wind=vbar_w,
                bound_wind=bound_w,
                ratio_wind=ratio_w,
                fidelity_wind=fid_w,
                vbar_free=vbar_f,
                bound_free=bound_f,
                ratio_free=ratio_f,
                fidelity_free=fid_f,
                saturates_wind=abs(ratio_w - 1.0) <= saturation_tol,
                saturates_free=abs(ratio_f - 1.0) <= saturation_tol,
            )
        )
    return rows
