"""Experiment configuration: YAML in, validated dataclasses, plain dict out.

Units in the file are eV, fs and degrees; everything is converted to
atomic units when the run objects are built. A manifest written by the
CLI stores ``to_dict()`` under "config", so it loads back unchanged.
"""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ValidationError

KINDS = ("bound", "continuum", "propagate", "pt", "interference", "pairs", "control", "stochastic")

PAPER_SCALE_GRID = {"r_max": 1.0e4, "dr": 0.005}


@dataclass
class GridConfig:
    r_max: float = 2000.0
    dr: float = 0.01
    r_core: float = 10.0
    absorber_start: float = 0.8
    w0: float = 0.05


@dataclass
class StructureConfig:
    """Grid used for bound states, continuum waves and perturbation theory."""

    r_max: float = 250.0
    dr: float = 0.0025
    corrected: bool = True
    n_per_l: int = 6
    cache_dir: str | None = None


@dataclass
class PulseConfig:
    """One laser. Frequency from ``omega_ev`` or from ``transition`` plus detuning.

    Give either ``a0`` (vector-potential peak, a.u.) or ``field`` (peak
    electric field, a.u.).
    """

    label: str = "IR"
    n_cycles: float = 6
    omega_ev: float | None = None
    transition: list | None = None
    detuning_ev: float = 0.0
    a0: float | None = None
    field: float | None = None
    delta_fs: float = 0.0
    phase_deg: float = 0.0
    duration_fs: float | None = None


@dataclass
class NumericsConfig:
    l_max: int = 8
    dt: float = 1.4
    gauge: str = "length"
    t_extra_fs: float | None = None
    energies_ev: list = field(default_factory=lambda: [0.05, 1.5, 400])
    l_project: list = field(default_factory=lambda: [0, 1, 2, 3])
    observe_every: int = 20
    states: list = field(default_factory=lambda: ["5s", "5p", "6p"])
    seed: int = 0
    n_samples: int = 1000
    checkpoints: list = field(default_factory=lambda: [1, 10, 100, 1000])
    theta_step_deg: float = 1.0


@dataclass
class InterferenceConfig:
    n_cycles: float = 70
    lower: str = "5p"
    upper: str = "6p"
    detuning_ir_ev: float = 0.04
    detuning_bl_ev: float = 0.0
    a0_ir: float = 0.007
    a0_bl: float = 0.05
    shared_duration: bool = True
    balance: bool = False
    bracket_ev: list = field(default_factory=lambda: [0.0, 0.4])
    pairs: list = field(default_factory=lambda: [["5p", "7p"], ["5p", "8p"], ["6p", "7p"], ["7p", "8p"]])
    strengths: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 5.0])
    mode: str = "physical"
    block_ev: float = 0.13


@dataclass
class SweepConfig:
    axis: str | None = None
    values: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    kind: str
    params_file: str | None = None
    out: str | None = None
    paper_scale: bool = False
    grid: GridConfig = field(default_factory=GridConfig)
    structure: StructureConfig = field(default_factory=StructureConfig)
    pulses: list = field(default_factory=list)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    interference: InterferenceConfig = field(default_factory=InterferenceConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    # construction ---------------------------------------------------------
    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentConfig":
        errors: dict[str, str] = {}
        if not isinstance(data, dict):
            raise ValidationError({"<root>": "config must be a mapping"})
        data = copy.deepcopy(data)
        sections = {"grid": GridConfig, "structure": StructureConfig, "numerics": NumericsConfig,
                    "interference": InterferenceConfig, "sweep": SweepConfig}
        kw: dict[str, Any] = {}
        for key, value in data.items():
            if key in sections:
                kw[key] = _build(sections[key], value, key, errors)
            elif key == "pulses":
                if not isinstance(value, list):
                    errors["pulses"] = "must be a list"
                    continue
                kw["pulses"] = [_build(PulseConfig, p, f"pulses[{i}]", errors) for i, p in enumerate(value)]
            elif key in ("kind", "params_file", "out", "paper_scale"):
                kw[key] = value
            else:
                errors[key] = "unknown field"
        if "kind" not in kw:
            errors["kind"] = f"required; one of {', '.join(KINDS)}"
        if errors:
            raise ValidationError(errors)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ValidationError({"<file>": f"not valid YAML: {e}"}) from None
        if isinstance(data, dict) and "config" in data and "kind" not in data:
            data = data["config"]  # a run manifest
        return cls.from_mapping(data or {})

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_value(self, axis: str, value) -> "ExperimentConfig":
        """Copy with one dotted field replaced ("numerics.dt", "pulses.1.delta_fs").

        The shorthand axis "n_cycles" sets every pulse and the interference block.
        """
        d = self.to_dict()
        if axis == "n_cycles":
            for p in d["pulses"]:
                p["n_cycles"] = value
            d["interference"]["n_cycles"] = value
        else:
            _set_path(d, axis, value)
        return ExperimentConfig.from_mapping(d)

    def has_axis(self, axis: str) -> bool:
        if axis == "n_cycles":
            return True
        try:
            cur = _get_path(self.to_dict(), axis)
        except (KeyError, IndexError, ValueError, TypeError):
            return False
        return cur is None or isinstance(cur, (int, float)) and not isinstance(cur, bool)

    # validation -----------------------------------------------------------
    def validate(self) -> None:
        e: dict[str, str] = {}
        if self.kind not in KINDS:
            e["kind"] = f"unknown run kind {self.kind!r}; expected one of {', '.join(KINDS)}"
        for name, sec in (("grid", self.grid), ("structure", self.structure)):
            if not _positive(sec.r_max):
                e[f"{name}.r_max"] = "must be positive"
            if not _positive(sec.dr):
                e[f"{name}.dr"] = "must be positive"
        if not 0 < self.grid.absorber_start < 1:
            e["grid.absorber_start"] = "must lie in (0, 1)"
        if self.grid.w0 < 0:
            e["grid.w0"] = "must be non-negative"
        for i, p in enumerate(self.pulses):
            _check_pulse(p, f"pulses[{i}]", e)
        n = self.numerics
        if n.gauge not in ("length", "velocity"):
            e["numerics.gauge"] = "must be 'length' or 'velocity'"
        if n.l_max < 1:
            e["numerics.l_max"] = "must be >= 1"
        if not _positive(n.dt):
            e["numerics.dt"] = "must be positive"
        if len(n.energies_ev) != 3 or not (0 < n.energies_ev[0] < n.energies_ev[1]) or int(n.energies_ev[2]) < 1:
            e["numerics.energies_ev"] = "expected [e_min, e_max, count] with 0 < e_min < e_max"
        if n.n_samples < 1:
            e["numerics.n_samples"] = "must be >= 1"
        if not 0 <= int(n.seed) < 2**64:
            e["numerics.seed"] = "must be an unsigned 64-bit integer"
        if not _positive(n.theta_step_deg):
            e["numerics.theta_step_deg"] = "must be positive"
        it = self.interference
        if it.mode not in ("ideal", "physical"):
            e["interference.mode"] = "must be 'ideal' or 'physical'"
        if it.n_cycles < 1:
            e["interference.n_cycles"] = "must be >= 1"
        if len(it.bracket_ev) != 2:
            e["interference.bracket_ev"] = "expected [lo, hi]"
        for j, pair in enumerate(it.pairs):
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                e[f"interference.pairs[{j}]"] = "expected [lower, upper]"
        # kind-specific requirements
        if self.kind in ("propagate", "pt") and not self.pulses:
            e["pulses"] = f"run kind {self.kind!r} needs at least one pulse"
        if self.sweep.axis is not None or self.sweep.values:
            if not self.sweep.values:
                e["sweep.values"] = "must not be empty"
            if self.sweep.axis is None:
                e["sweep.axis"] = "required when sweep values are given"
            elif not self.has_axis(self.sweep.axis):
                e["sweep.axis"] = f"unknown or non-numeric field {self.sweep.axis!r}"
        if e:
            raise ValidationError(e)

    # derived --------------------------------------------------------------
    def effective_grid(self) -> GridConfig:
        if not self.paper_scale:
            return self.grid
        g = copy.copy(self.grid)
        g.r_max, g.dr = PAPER_SCALE_GRID["r_max"], PAPER_SCALE_GRID["dr"]
        return g

    def energy_mesh_ev(self) -> np.ndarray:
        lo, hi, cnt = self.numerics.energies_ev
        return np.linspace(lo, hi, int(cnt))


def _positive(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0


def _check_pulse(p: PulseConfig, where: str, e: dict) -> None:
    if p.label not in ("IR", "BL", "CONTROL"):
        e[f"{where}.label"] = "must be IR, BL or CONTROL"
    if (p.omega_ev is None) == (p.transition is None):
        e[f"{where}.omega_ev"] = "give exactly one of omega_ev or transition"
    elif p.omega_ev is not None and not _positive(p.omega_ev):
        e[f"{where}.omega_ev"] = "must be positive"
    elif p.transition is not None and (not isinstance(p.transition, list) or len(p.transition) != 2):
        e[f"{where}.transition"] = "expected [lower, upper], e.g. [5s, 5p]"
    if (p.a0 is None) == (p.field is None):
        e[f"{where}.a0"] = "give exactly one of a0 or field"
    elif (p.a0 if p.a0 is not None else p.field) < 0:
        e[f"{where}.a0"] = "amplitude must be non-negative"
    if p.n_cycles < 1:
        e[f"{where}.n_cycles"] = "must be >= 1"
    if p.duration_fs is not None and not _positive(p.duration_fs):
        e[f"{where}.duration_fs"] = "must be positive"


def _build(cls, value, where: str, errors: dict):
    if value is None:
        return cls()
    if not isinstance(value, dict):
        errors[where] = "must be a mapping"
        return cls()
    names = {f.name for f in fields(cls)}
    kw = {}
    for k, v in value.items():
        if k not in names:
            errors[f"{where}.{k}"] = "unknown field"
        else:
            kw[k] = v
    try:
        return cls(**kw)
    except TypeError as exc:
        errors[where] = str(exc)
        return cls()


def _split(path: str) -> list:
    return [int(p) if p.isdigit() else p for p in path.split(".")]


def _get_path(d, path: str):
    cur = d
    for key in _split(path):
        if isinstance(key, str) and (not isinstance(cur, dict) or key not in cur):
            raise KeyError(path)
        cur = cur[key]
    return cur


def _set_path(d, path: str, value) -> None:
    keys = _split(path)
    cur = d
    for key in keys[:-1]:
        cur = cur[key]
    cur[keys[-1]] = value
