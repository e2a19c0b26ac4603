"""Experiment configuration: strict TOML schema, parsing, and validation.

One config file describes one experiment.  Unknown sections or keys are
rejected, every field is type- and range-checked, and errors carry a
``section.key`` pointer so ``windctl validate`` can report the offending
field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .models import ENVELOPES, PROFILES

EXPERIMENT_KINDS = ("fidelity_sweep", "single_run", "wigner", "qsl_sweep", "robustness")
CONTROL_KINDS = ("none", "wind", "closed_form")
TARGET_KINDS = ("basis", "fock_superposition", "giant_cat", "displaced_fock")
WIGNER_LABELS = ("I", "X", "Y", "Z")
CHANNEL_NAMES = ("all", "cavity", "qubit", "dephasing",
                 "cavity+qubit", "qubit+dephasing", "cavity+dephasing",
                 "cavity+qubit+dephasing")


class ConfigError(ValueError):
    """Schema violation; ``pointer`` names the offending section.key."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


def _want(value, typ, pointer):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, bool):
        raise ConfigError(pointer, "expected an integer, got a boolean")
    if not isinstance(value, typ):
        raise ConfigError(pointer, f"expected {typ.__name__}, got {type(value).__name__}")
    return value


def _number_list(value, pointer, positive=False):
    if not isinstance(value, list) or not value:
        raise ConfigError(pointer, "expected a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{pointer}[{i}]", "expected a number")
        if positive and v <= 0:
            raise ConfigError(f"{pointer}[{i}]", f"must be positive, got {v}")
        out.append(float(v))
    return out


def _string_list(value, pointer, allowed):
    if not isinstance(value, list) or not value:
        raise ConfigError(pointer, "expected a non-empty list of strings")
    for i, v in enumerate(value):
        if not isinstance(v, str) or v not in allowed:
            raise ConfigError(f"{pointer}[{i}]", f"must be one of {allowed}, got {v!r}")
    return list(value)


@dataclass(frozen=True)
class StateSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    description: str
    model: str
    n_cut: int
    drive: dict
    initial: StateSpec
    target: StateSpec | None
    control: str
    sweep: dict
    bath: dict
    wigner: dict
    steps: int
    leak_tol: float
    record_stride: int
    formats: tuple

    def resolved(self) -> dict:
        """Plain-dict echo for the run manifest."""
        return {
            "experiment": {"name": self.name, "kind": self.kind,
                           "description": self.description},
            "model": {"kind": self.model, "n_cut": self.n_cut},
            "drive": dict(self.drive),
            "initial": {"kind": self.initial.kind, **self.initial.params},
            "target": (None if self.target is None
                       else {"kind": self.target.kind, **self.target.params}),
            "control": self.control,
            "sweep": dict(self.sweep),
            "bath": dict(self.bath),
            "wigner": dict(self.wigner),
            "numerics": {"steps": self.steps, "leak_tol": self.leak_tol,
                         "record_stride": self.record_stride},
            "output": {"formats": list(self.formats)},
        }


_SECTIONS = ("experiment", "model", "drive", "initial", "target", "control",
             "sweep", "bath", "wigner", "numerics", "output")

_DRIVE_KEYS = {
    "omega_i": float, "omega_f": float, "profile": str, "alpha": float,
    "beta_cubic": float, "lambda_0": float, "lambda_m": float, "phi": float,
    "envelope": str, "tau": float, "omega_c": float,
}

_DRIVE_DEFAULTS = {"profile": "linear", "alpha": 0.5, "beta_cubic": 2.0,
                   "lambda_0": 0.0, "lambda_m": 0.0, "phi": 0.0,
                   "envelope": "full_sine", "tau": 1.0, "omega_c": 1.0}


def _check_keys(section: dict, allowed, pointer: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{pointer}.{key}", "unknown key")


def _parse_state(section: dict, pointer: str, n_cut: int) -> StateSpec:
    _check_keys(section, ("kind", "qubit", "n", "q_a", "n_a", "q_b", "n_b",
                          "eta", "theta", "sign"), pointer)
    kind = _want(section.get("kind", ""), str, f"{pointer}.kind")
    if kind not in TARGET_KINDS:
        raise ConfigError(f"{pointer}.kind", f"must be one of {TARGET_KINDS}, got {kind!r}")
    params = {}
    if kind == "basis":
        params["qubit"] = _want(section.get("qubit", "g"), str, f"{pointer}.qubit")
        params["n"] = _want(section.get("n", 0), int, f"{pointer}.n")
        if params["qubit"] not in ("g", "e"):
            raise ConfigError(f"{pointer}.qubit", "must be 'g' or 'e'")
        if not 0 <= params["n"] < n_cut:
            raise ConfigError(f"{pointer}.n", f"must lie in [0, {n_cut})")
    elif kind == "fock_superposition":
        for key in ("q_a", "q_b"):
            params[key] = _want(section.get(key, "g"), str, f"{pointer}.{key}")
            if params[key] not in ("g", "e"):
                raise ConfigError(f"{pointer}.{key}", "must be 'g' or 'e'")
        for key in ("n_a", "n_b"):
            params[key] = _want(section.get(key, 0), int, f"{pointer}.{key}")
            if not 0 <= params[key] < n_cut:
                raise ConfigError(f"{pointer}.{key}", f"must lie in [0, {n_cut})")
    elif kind == "giant_cat":
        params["eta"] = _want(section.get("eta", 1.0), float, f"{pointer}.eta")
        params["theta"] = _want(section.get("theta", 0.0), float, f"{pointer}.theta")
        if params["eta"] ** 2 > n_cut / 4.0:
            raise ConfigError(f"{pointer}.eta", f"eta^2 exceeds n_cut/4={n_cut/4}")
    elif kind == "displaced_fock":
        params["sign"] = _want(section.get("sign", 1), int, f"{pointer}.sign")
        params["n"] = _want(section.get("n", 0), int, f"{pointer}.n")
        params["eta"] = _want(section.get("eta", 0.0), float, f"{pointer}.eta")
        if params["sign"] not in (1, -1):
            raise ConfigError(f"{pointer}.sign", "must be +1 or -1")
        if not 0 <= params["n"] < n_cut:
            raise ConfigError(f"{pointer}.n", f"must lie in [0, {n_cut})")
    return StateSpec(kind=kind, params=params)


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load and validate one experiment config file."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("(file)", f"not valid TOML: {exc}") from exc
    return validate_config(raw)


def validate_config(raw: dict) -> ExperimentConfig:
    _check_keys(raw, _SECTIONS, "(root)")

    exp = raw.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigError("experiment", "missing [experiment] section")
    _check_keys(exp, ("name", "kind", "description"), "experiment")
    name = _want(exp.get("name", ""), str, "experiment.name")
    if not name:
        raise ConfigError("experiment.name", "must be a non-empty string")
    kind = _want(exp.get("kind", ""), str, "experiment.kind")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError("experiment.kind", f"must be one of {EXPERIMENT_KINDS}, got {kind!r}")
    description = _want(exp.get("description", ""), str, "experiment.description")

    model_sec = raw.get("model", {})
    _check_keys(model_sec, ("kind", "n_cut"), "model")
    model = _want(model_sec.get("kind", "rabi"), str, "model.kind")
    if model not in ("rabi", "jc"):
        raise ConfigError("model.kind", f"must be 'rabi' or 'jc', got {model!r}")
    n_cut = _want(model_sec.get("n_cut", 40), int, "model.n_cut")
    if n_cut < 2:
        raise ConfigError("model.n_cut", f"must be >= 2, got {n_cut}")
    if n_cut > 40:
        raise ConfigError("model.n_cut", f"must be <= 40 (dim <= 80), got {n_cut}")

    drive_sec = raw.get("drive", {})
    _check_keys(drive_sec, _DRIVE_KEYS, "drive")
    drive = dict(_DRIVE_DEFAULTS)
    for key, typ in _DRIVE_KEYS.items():
        if key in drive_sec:
            drive[key] = _want(drive_sec[key], typ, f"drive.{key}")
    for key in ("omega_i", "omega_f"):
        if key not in drive_sec:
            raise ConfigError(f"drive.{key}", "required")
    if drive["profile"] not in PROFILES:
        raise ConfigError("drive.profile", f"must be one of {PROFILES}")
    if drive["envelope"] not in ENVELOPES:
        raise ConfigError("drive.envelope", f"must be one of {ENVELOPES}")
    if drive["tau"] <= 0:
        raise ConfigError("drive.tau", f"must be positive, got {drive['tau']}")

    initial_sec = raw.get("initial")
    if not isinstance(initial_sec, dict):
        raise ConfigError("initial", "missing [initial] section")
    initial = _parse_state(initial_sec, "initial", n_cut)

    target_sec = raw.get("target")
    target = None
    if target_sec is not None:
        if not isinstance(target_sec, dict) or not target_sec:
            raise ConfigError("target", "must be a non-empty section when present")
        target = _parse_state(target_sec, "target", n_cut)
    if target is None and kind != "wigner":
        raise ConfigError("target", f"required for {kind} experiments")

    control_sec = raw.get("control", {})
    _check_keys(control_sec, ("kind",), "control")
    control = _want(control_sec.get("kind", "none"), str, "control.kind")
    if control not in CONTROL_KINDS:
        raise ConfigError("control.kind", f"must be one of {CONTROL_KINDS}, got {control!r}")

    sweep_sec = raw.get("sweep", {})
    _check_keys(sweep_sec, ("tau_values", "controls", "profiles"), "sweep")
    sweep = {}
    if kind in ("fidelity_sweep", "qsl_sweep"):
        sweep["tau_values"] = _number_list(sweep_sec.get("tau_values"), "sweep.tau_values",
                                           positive=True)
        sweep["controls"] = _string_list(sweep_sec.get("controls", ["none"]),
                                         "sweep.controls", CONTROL_KINDS)
        sweep["profiles"] = _string_list(sweep_sec.get("profiles", [drive["profile"]]),
                                         "sweep.profiles", PROFILES)
    elif sweep_sec:
        raise ConfigError("sweep", f"not used by {kind} experiments")

    bath_sec = raw.get("bath", {})
    _check_keys(bath_sec, ("gamma_values", "temperatures", "channels", "secular_cutoff"),
                "bath")
    bath = {}
    if kind == "robustness":
        bath["gamma_values"] = _number_list(bath_sec.get("gamma_values"),
                                            "bath.gamma_values")
        for i, g in enumerate(bath["gamma_values"]):
            if g < 0:
                raise ConfigError(f"bath.gamma_values[{i}]", f"must be >= 0, got {g}")
        bath["temperatures"] = _number_list(bath_sec.get("temperatures", [0.0]),
                                            "bath.temperatures")
        for i, t in enumerate(bath["temperatures"]):
            if t < 0:
                raise ConfigError(f"bath.temperatures[{i}]", f"must be >= 0, got {t}")
        bath["channels"] = _string_list(bath_sec.get("channels", ["all"]),
                                        "bath.channels", CHANNEL_NAMES)
        cutoff = bath_sec.get("secular_cutoff", 0.1)
        if isinstance(cutoff, str):
            if cutoff != "inf":
                raise ConfigError("bath.secular_cutoff", "string value must be 'inf'")
            cutoff = math.inf
        bath["secular_cutoff"] = _want(cutoff, float, "bath.secular_cutoff")
        if bath["secular_cutoff"] < 0:
            raise ConfigError("bath.secular_cutoff", "must be >= 0")
    elif bath_sec:
        raise ConfigError("bath", f"not used by {kind} experiments")

    wigner_sec = raw.get("wigner", {})
    _check_keys(wigner_sec, ("re_min", "re_max", "im_min", "im_max", "step",
                             "labels", "prepare"), "wigner")
    wigner = {}
    if kind == "wigner":
        wigner["re_min"] = _want(wigner_sec.get("re_min", -5.0), float, "wigner.re_min")
        wigner["re_max"] = _want(wigner_sec.get("re_max", 5.0), float, "wigner.re_max")
        wigner["im_min"] = _want(wigner_sec.get("im_min", -5.0), float, "wigner.im_min")
        wigner["im_max"] = _want(wigner_sec.get("im_max", 5.0), float, "wigner.im_max")
        wigner["step"] = _want(wigner_sec.get("step", 0.05), float, "wigner.step")
        if wigner["step"] <= 0:
            raise ConfigError("wigner.step", "must be positive")
        wigner["labels"] = _string_list(wigner_sec.get("labels", list(WIGNER_LABELS)),
                                        "wigner.labels", WIGNER_LABELS)
        prepare = _want(wigner_sec.get("prepare", "target"), str, "wigner.prepare")
        if prepare not in ("target", "wind", "none"):
            raise ConfigError("wigner.prepare", "must be 'target', 'wind', or 'none'")
        wigner["prepare"] = prepare
    elif wigner_sec:
        raise ConfigError("wigner", f"not used by {kind} experiments")

    numerics_sec = raw.get("numerics", {})
    _check_keys(numerics_sec, ("steps", "leak_tol", "record_stride"), "numerics")
    steps = _want(numerics_sec.get("steps", 0), int, "numerics.steps")
    if steps < 0:
        raise ConfigError("numerics.steps", "must be >= 0 (0 selects the default rule)")
    leak_tol = _want(numerics_sec.get("leak_tol", 1e-6), float, "numerics.leak_tol")
    if leak_tol <= 0:
        raise ConfigError("numerics.leak_tol", "must be positive")
    record_stride = _want(numerics_sec.get("record_stride", 0), int, "numerics.record_stride")
    if record_stride < 0:
        raise ConfigError("numerics.record_stride", "must be >= 0 (0 selects a default)")

    output_sec = raw.get("output", {})
    _check_keys(output_sec, ("formats",), "output")
    formats = tuple(_string_list(output_sec.get("formats", ["csv", "json"]),
                                 "output.formats", ("csv", "json")))

    return ExperimentConfig(
        name=name, kind=kind, description=description,
        model=model, n_cut=n_cut, drive=drive,
        initial=initial, target=target, control=control,
        sweep=sweep, bath=bath, wigner=wigner,
        steps=steps, leak_tol=leak_tol, record_stride=record_stride,
        formats=formats,
    )
