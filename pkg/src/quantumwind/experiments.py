"""Experiment recipes: dispatch a validated config to the solvers and emit
plot-ready CSV/JSON files plus a run manifest.

Five experiment kinds cover the reproduction set: final-fidelity sweeps over
protocol time, single trajectories with derived observables, joint Wigner
grids, speed-resource (QSL) sweeps, and open-system robustness sweeps.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, StateSpec
from .hilbert import CompositeSpace, QuantumState, build_composite, fidelity
from . import models
from .models import DriveProtocol, ModelParams
from . import propagate
from .propagate import default_step_count, evolve, expectation_series, fidelity_series, occupation_series
from . import wind as wind_mod
from . import energetics
from . import redfield as redfield_mod
from . import tomography


def make_state(spec: StateSpec, space: CompositeSpace) -> QuantumState:
    """Materialize a named state spec on a composite space."""
    p = spec.params
    if spec.kind == "basis":
        return space.basis_state(p["qubit"], p["n"])
    if spec.kind == "fock_superposition":
        return models.fock_superposition(p["n_a"], p["n_b"], p["q_a"], p["q_b"], space)
    if spec.kind == "giant_cat":
        return models.giant_cat_state(p["eta"], p["theta"], space)
    if spec.kind == "displaced_fock":
        return models.displaced_fock_eigenstate(p["sign"], p["n"], p["eta"], space)
    raise ValueError(f"unknown state kind {spec.kind!r}")


def _drive(cfg: ExperimentConfig, tau: float | None = None, profile: str | None = None) -> DriveProtocol:
    d = dict(cfg.drive)
    if tau is not None:
        d["tau"] = tau
    if profile is not None:
        d["profile"] = profile
    return DriveProtocol(**d)


def _steps(cfg: ExperimentConfig, tau: float) -> int:
    return cfg.steps if cfg.steps > 0 else default_step_count(tau, cfg.drive["omega_c"])


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [format_float(c) if isinstance(c, float) else str(c) for c in row]
            fh.write(",".join(cells) + "\n")


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    manifest_path: Path
    outputs: list
    leak_max: float
    wall_time_s: float


def _final_fidelity(cfg, space, psi_i, psi_f, tau, control, profile, threads_pool=None):
    params = ModelParams(drive=_drive(cfg, tau=tau, profile=profile), model=cfg.model, space=space)
    steps = _steps(cfg, tau)
    stride = max(1, steps // 64)
    if control == "none":
        traj = evolve(params.hamiltonian, psi_i, tau, steps, space=space,
                      leak_tol=cfg.leak_tol, record_stride=stride)
    elif control == "wind":
        traj = wind_mod.evolve_with_wind(params.hamiltonian, psi_i, psi_f, tau, steps,
                                         space=space, leak_tol=cfg.leak_tol,
                                         record_stride=stride)
    else:
        raise ValueError(f"control {control!r} is not valid in sweeps")
    return fidelity(traj.final_state, psi_f), traj.leak_max


def run_fidelity_sweep(cfg: ExperimentConfig, out_dir: Path, threads: int = 1):
    space = build_composite(cfg.n_cut)
    psi_i = make_state(cfg.initial, space)
    psi_f = make_state(cfg.target, space)
    taus = cfg.sweep["tau_values"]
    variants = [(c, p) for c in cfg.sweep["controls"] for p in cfg.sweep["profiles"]]

    def cell(args):
        tau, control, profile = args
        return _final_fidelity(cfg, space, psi_i, psi_f, tau, control, profile)

    jobs = [(tau, c, p) for tau in taus for (c, p) in variants]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(cell, jobs))
    else:
        results = [cell(j) for j in jobs]

    leak_max = max(r[1] for r in results)
    header = ["tau"] + [f"F_{c}_{p}" for (c, p) in variants]
    rows = []
    per_tau = {tau: [] for tau in taus}
    for (tau, _, _), (f_val, _) in zip(jobs, results):
        per_tau[tau].append(f_val)
    for tau in taus:
        rows.append([float(tau)] + per_tau[tau])
    path = out_dir / f"{cfg.name}_fidelity.csv"
    write_csv(path, header, rows)
    return [path], leak_max


def run_single(cfg: ExperimentConfig, out_dir: Path, threads: int = 1):
    space = build_composite(cfg.n_cut)
    psi_i = make_state(cfg.initial, space)
    psi_f = make_state(cfg.target, space)
    tau = cfg.drive["tau"]
    steps = _steps(cfg, tau)
    stride = cfg.record_stride if cfg.record_stride > 0 else max(1, steps // 500)
    params = ModelParams(drive=_drive(cfg), model=cfg.model, space=space)

    if cfg.control == "wind":
        traj = wind_mod.evolve_with_wind(params.hamiltonian, psi_i, psi_f, tau, steps,
                                         space=space, leak_tol=cfg.leak_tol,
                                         record_stride=stride)
    elif cfg.control == "closed_form":
        tspec = cfg.target
        if (cfg.drive["profile"] != "constant" or cfg.drive["lambda_0"] != 0.0
                or cfg.drive["lambda_m"] != 0.0 or tspec.kind != "fock_superposition"):
            raise ValueError("closed_form control needs profile='constant', zero coupling, "
                             "and a fock_superposition target (|g,0> + |e,n>)")
        n_target = tspec.params["n_b"]

        def h_total(t: float):
            h0 = params.hamiltonian(t).matrix
            hc = wind_mod.closed_form_control(n_target, cfg.drive["omega_c"],
                                              cfg.drive["omega_f"], tau, t, space).matrix
            from .hilbert import Operator
            return Operator(h0 + hc, kind="hermitian")

        traj = evolve(h_total, psi_i, tau, steps, space=space,
                      leak_tol=cfg.leak_tol, record_stride=stride)
    else:
        traj = evolve(params.hamiltonian, psi_i, tau, steps, space=space,
                      leak_tol=cfg.leak_tol, record_stride=stride)

    fser = fidelity_series(traj, psi_f)
    p0 = occupation_series(traj, models.subspace_projector("jc_excitation", space, j=0))
    pp = occupation_series(traj, models.subspace_projector("parity_plus", space))
    pm = occupation_series(traj, models.subspace_projector("parity_minus", space))
    sz = expectation_series(traj, space.sigma_z)
    nph = expectation_series(traj, space.number)
    drive = params.drive
    lam = np.array([models.coupling(min(t, tau), drive) for t in traj.times])
    wq = np.array([models.qubit_frequency(min(t, tau), drive) for t in traj.times])

    header = ["t", "fidelity", "P_exc0", "P_parity_plus", "P_parity_minus",
              "sigma_z", "n_photon", "lambda", "omega_q"]
    rows = [
        [float(traj.times[k]), float(fser[k]), float(p0[k]), float(pp[k]), float(pm[k]),
         float(sz[k]), float(nph[k]), float(lam[k]), float(wq[k])]
        for k in range(len(traj.times))
    ]
    path = out_dir / f"{cfg.name}_trajectory.csv"
    write_csv(path, header, rows)
    summary = {
        "final_fidelity": float(fser[-1]),
        "leak_max": traj.leak_max,
        "steps": steps,
        "tau": tau,
    }
    spath = out_dir / f"{cfg.name}_summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [path, spath], traj.leak_max


def run_wigner(cfg: ExperimentConfig, out_dir: Path, threads: int = 1):
    space = build_composite(cfg.n_cut)
    leak = 0.0
    if cfg.wigner["prepare"] == "wind":
        psi_i = make_state(cfg.initial, space)
        psi_f = make_state(cfg.target, space)
        tau = cfg.drive["tau"]
        steps = _steps(cfg, tau)
        params = ModelParams(drive=_drive(cfg), model=cfg.model, space=space)
        traj = wind_mod.evolve_with_wind(params.hamiltonian, psi_i, psi_f, tau, steps,
                                         space=space, leak_tol=cfg.leak_tol,
                                         record_stride=steps)
        state = traj.final_state
        leak = traj.leak_max
        meta = {"prepared": "wind", "target_fidelity": fidelity(state, psi_f)}
    elif cfg.wigner["prepare"] == "none":
        state = make_state(cfg.initial, space)
        meta = {"prepared": "initial-state"}
    else:
        state = make_state(cfg.target, space)
        meta = {"prepared": "analytic-target"}
        leak = space.top_level_population(state.amplitudes)

    spec = tomography.WignerGridSpec(
        re_min=cfg.wigner["re_min"], re_max=cfg.wigner["re_max"],
        im_min=cfg.wigner["im_min"], im_max=cfg.wigner["im_max"],
        step=cfg.wigner["step"],
    )
    grid = tomography.wigner_grid(state, spec, tuple(cfg.wigner["labels"]), space=space)
    written = tomography.export_grid(grid, out_dir, cfg.name, metadata=meta)
    return written, leak


def run_qsl_sweep(cfg: ExperimentConfig, out_dir: Path, threads: int = 1):
    space = build_composite(cfg.n_cut)
    psi_i = make_state(cfg.initial, space)
    psi_f = make_state(cfg.target, space)
    taus = cfg.sweep["tau_values"]

    def params_for(tau: float) -> ModelParams:
        return ModelParams(drive=_drive(cfg, tau=tau), model=cfg.model, space=space)

    rows = energetics.speed_resource_sweep(
        params_for, psi_i, psi_f, taus, space=space,
        steps_for_tau=lambda tau: _steps(cfg, tau),
    )
    header = ["tau", "vbar_wind", "bound_wind", "ratio_wind", "fidelity_wind",
              "vbar_free", "bound_free", "ratio_free", "fidelity_free",
              "saturates_wind", "saturates_free"]
    table = [[r.tau, r.vbar_wind, r.bound_wind, r.ratio_wind, r.fidelity_wind,
              r.vbar_free, r.bound_free, r.ratio_free, r.fidelity_free,
              int(r.saturates_wind), int(r.saturates_free)] for r in rows]
    path = out_dir / f"{cfg.name}_qsl.csv"
    write_csv(path, header, table)
    summary = {"rows": [r.as_dict() for r in rows]}
    spath = out_dir / f"{cfg.name}_qsl.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [path, spath], 0.0


def run_robustness(cfg: ExperimentConfig, out_dir: Path, threads: int = 1):
    space = build_composite(cfg.n_cut)
    psi_i = make_state(cfg.initial, space)
    psi_f = make_state(cfg.target, space)
    tau = cfg.drive["tau"]
    steps = _steps(cfg, tau)
    params = ModelParams(drive=_drive(cfg), model=cfg.model, space=space)

    if cfg.control == "wind":
        wc = wind_mod.synthesize(params.hamiltonian, psi_i, psi_f, tau, steps, store_stride=1)

        def h_total(t: float):
            from .hilbert import Operator
            h0 = params.hamiltonian(t).matrix
            hc = wind_mod.control_hamiltonian_lab(t, wc).matrix
            return Operator(h0 + hc, kind="hermitian")
    else:
        h_total = params.hamiltonian

    rho0 = redfield_mod.DensityOperator.from_state(psi_i)

    def cell(args):
        channels, temperature, gamma = args
        bath = redfield_mod.channel_bath(channels, gamma, temperature,
                                         cfg.bath["secular_cutoff"])
        traj = redfield_mod.evolve_open(rho0, h_total, bath, tau, steps, space=space,
                                        record_stride=steps)
        return redfield_mod.RobustnessRow(
            channels=channels, gamma=gamma, temperature=temperature,
            infidelity=1.0 - traj.final.fidelity_with(psi_f),
            min_eigenvalue=traj.min_eigenvalue,
            trace_drift=traj.trace_drift_max,
        )

    jobs = [(c, t, g) for c in cfg.bath["channels"]
            for t in cfg.bath["temperatures"] for g in cfg.bath["gamma_values"]]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(cell, jobs))
    else:
        rows = [cell(j) for j in jobs]

    header = ["channels", "gamma", "temperature", "infidelity",
              "min_eigenvalue", "trace_drift"]
    table = [[r.channels, r.gamma, r.temperature, r.infidelity,
              r.min_eigenvalue, r.trace_drift] for r in rows]
    path = out_dir / f"{cfg.name}_robustness.csv"
    write_csv(path, header, table)
    return [path], 0.0


_RUNNERS = {
    "fidelity_sweep": run_fidelity_sweep,
    "single_run": run_single,
    "wigner": run_wigner,
    "qsl_sweep": run_qsl_sweep,
    "robustness": run_robustness,
}


def run(cfg: ExperimentConfig, out_root: Path, threads: int = 1) -> RunResult:
    """Execute one experiment and write its outputs plus the run manifest."""
    t0 = time.monotonic()
    out_dir = Path(out_root) / cfg.name
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs, leak_max = _RUNNERS[cfg.kind](cfg, out_dir, threads)
    wall = time.monotonic() - t0
    checksums = {}
    for path in outputs:
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        checksums[Path(path).name] = digest
    manifest = {
        "config": cfg.resolved(),
        "version": __version__,
        "wall_time_s": wall,
        "leak_max": leak_max,
        "outputs": checksums,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return RunResult(out_dir=out_dir, manifest_path=manifest_path,
                     outputs=[Path(p) for p in outputs], leak_max=leak_max,
                     wall_time_s=wall)
