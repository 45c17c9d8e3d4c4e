"""Command line batch runner.

    atomslit <verb> --config run.yaml [--out DIR] [--seed N] [--threads N] [--paper-scale]

Every run writes tidy CSV files plus ``manifest.json`` (resolved config,
package version, wall time, scalar results) into the output directory.
Files are written to a temporary name first and renamed into place.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .config import ExperimentConfig, KINDS, PulseConfig
from .errors import AtomSlitError, ValidationError
from .grid_potential import RadialGrid, load_params
from .pulses import LaserPulse, resonant_omega
from .structure import AtomStructure
from .units import au_to_ev, au_to_fs, ev_to_au, fs_to_au

log = logging.getLogger("atomslit")

VERBS = KINDS + ("sweep",)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------- output

def fmt(x) -> str:
    """12 significant digits; None and NaN become an empty field."""
    if x is None:
        return ""
    if isinstance(x, (str, bool, np.bool_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return ""
    return f"{x:.12g}"


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list[str], rows: Iterable[Iterable]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if np.isnan(obj) else float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_manifest(out: Path, cfg: ExperimentConfig, results: dict, wall: float) -> None:
    doc = {"config": cfg.to_dict(), "version": _version(), "wall_time_s": wall, "results": results}
    atomic_write(out / "manifest.json", json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------- builders

def build_structure(cfg: ExperimentConfig) -> AtomStructure:
    s = cfg.structure
    grid = RadialGrid.from_extent(s.r_max, s.dr, r_core=cfg.grid.r_core)
    return AtomStructure(load_params(cfg.params_file), grid, corrected=s.corrected,
                         cache_dir=s.cache_dir, n_per_l=s.n_per_l)


def build_tdse_grid(cfg: ExperimentConfig) -> RadialGrid:
    g = cfg.effective_grid()
    return RadialGrid.from_extent(g.r_max, g.dr, r_core=g.r_core, absorber_start=g.absorber_start)


def build_pulse(p: PulseConfig, energy: Callable[[str], float]) -> LaserPulse:
    if p.omega_ev is not None:
        omega = ev_to_au(p.omega_ev + p.detuning_ev)
    else:
        omega = resonant_omega(energy(p.transition[0]), energy(p.transition[1]), ev_to_au(p.detuning_ev))
    kw = dict(n_cycles=p.n_cycles, delta_t=fs_to_au(p.delta_fs), phase=np.deg2rad(p.phase_deg),
              label=p.label, duration=None if p.duration_fs is None else fs_to_au(p.duration_fs))
    if p.a0 is not None:
        return LaserPulse.from_vector_potential(omega, p.a0, **kw)
    return LaserPulse(omega=omega, amplitude=p.field, **kw)


def build_pulses(cfg: ExperimentConfig, structure: AtomStructure) -> list[LaserPulse]:
    return [build_pulse(p, lambda lab: structure[lab].energy) for p in cfg.pulses]


def _theta(cfg: ExperimentConfig) -> np.ndarray:
    return np.deg2rad(np.arange(0.0, 360.0, cfg.numerics.theta_step_deg))


def two_color_setup(cfg: ExperimentConfig, structure: AtomStructure):
    from .interference import TwoColorSetup

    it = cfg.interference
    return TwoColorSetup(structure, n_cycles=it.n_cycles, lower=it.lower, upper=it.upper,
                         detuning_ir=ev_to_au(it.detuning_ir_ev), detuning_bl=ev_to_au(it.detuning_bl_ev),
                         a0_ir=it.a0_ir, a0_bl=it.a0_bl, shared_duration=it.shared_duration)


# -------------------------------------------------------------- runners

def run_bound(cfg: ExperimentConfig, out: Path) -> dict:
    st = build_structure(cfg)
    rows = [(s.label, s.n, s.l, s.energy, au_to_ev(s.energy)) for s in st.bound_table((0, 1, 2))]
    write_csv(out / "bound.csv", ["state", "n", "l", "energy_au", "energy_ev"], rows)
    g = st["5s"]
    dips = []
    for s in st.bound_states(1):
        d = st.dipole(s, g)
        dips.append((s.label, "5s", d.value, d.reason))
    write_csv(out / "dipoles.csv", ["bra", "ket", "reduced_dipole_au", "note"], dips)
    return {"energies_ev": {r[0]: r[4] for r in rows}, "dipoles": {d[0]: d[2] for d in dips}}


def run_continuum(cfg: ExperimentConfig, out: Path) -> dict:
    st = build_structure(cfg)
    rows = []
    for l in cfg.numerics.l_project:
        for e in cfg.energy_mesh_ev():
            c = st.continuum_energy(int(l), ev_to_au(e))
            rows.append((c.l, e, c.k, c.phase, c.coulomb_phase, c.eta))
    write_csv(out / "continuum.csv", ["l", "energy_ev", "k_au", "phase_rad", "coulomb_phase_rad", "eta_rad"], rows)
    return {"n_rows": len(rows)}


def _spectrum_rows(amps, theta0: float = 0.0):
    from .observables import angular_amplitude

    z = angular_amplitude(amps.coeffs, amps.l_values, theta0)
    for j, E in enumerate(amps.energies):
        yield ([au_to_ev(E)] + [abs(amps.coeffs[i, j]) ** 2 for i in range(len(amps.l_values))]
               + [amps.sigma()[j], np.angle(z[j])])


def _spectrum_header(amps) -> list[str]:
    return ["energy_ev"] + [f"sigma_l{l}" for l in amps.l_values] + ["sigma_total", "phase_theta0_rad"]


def run_propagate(cfg: ExperimentConfig, out: Path) -> dict:
    from .tdse import (ChannelWavepacket, Hamiltonian, OccupationRecorder, observation_time,
                       project_continuum, propagate)
    from .pulses import pulse_window

    grid = build_tdse_grid(cfg)
    num = cfg.numerics
    ham = Hamiltonian(load_params(cfg.params_file), grid, num.l_max, cfg.effective_grid().w0)
    tst = AtomStructure(ham.params, grid, corrected=cfg.structure.corrected, n_per_l=4)
    pulses = build_pulses(cfg, tst)
    states = {lab: tst[lab] for lab in num.states}
    t0 = pulse_window(pulses)[0]
    t_end = observation_time(pulses) if num.t_extra_fs is None else pulse_window(pulses)[1] + fs_to_au(num.t_extra_fs)
    wp = ChannelWavepacket.from_state(tst["5s"], grid, num.l_max, t0)
    rec = OccupationRecorder(states)
    report: dict = {}
    final = propagate(wp, pulses, num.dt, t_end, ham, gauge=num.gauge, observer=rec,
                      observe_every=num.observe_every, report=report)
    t, occ = rec.arrays()
    labels = list(states)
    write_csv(out / "occupations.csv", ["t_fs"] + labels,
              ([au_to_fs(t[i])] + [occ[k][i] for k in labels] for i in range(len(t))))
    energies = ev_to_au(cfg.energy_mesh_ev())
    amps = project_continuum(final, ham, energies, pulses, l_values=[l for l in num.l_project if l <= num.l_max])
    write_csv(out / "spectrum.csv", _spectrum_header(amps), _spectrum_rows(amps))
    peak_e, _ = amps.peak()
    return {"final_occupations": {k: float(occ[k][-1]) for k in labels}, "norm": final.norm(),
            "peak_energy_ev": au_to_ev(peak_e), "report": report,
            "pulses": [p.__dict__ for p in pulses]}


def run_pt(cfg: ExperimentConfig, out: Path) -> dict:
    from .perturbation import occupation_pt, pt_partial_waves

    st = build_structure(cfg)
    pulses = build_pulses(cfg, st)
    occ = {lab: occupation_pt(pulses, st, st[lab]) for lab in cfg.numerics.states if lab[-1] == "p"}
    write_csv(out / "occupations_pt.csv", ["state", "occupation"], sorted(occ.items()))
    amps = pt_partial_waves(pulses, st, ev_to_au(cfg.energy_mesh_ev()))
    write_csv(out / "spectrum_pt.csv", _spectrum_header(amps), _spectrum_rows(amps))
    return {"final_occupations": occ, "peak_energy_ev": au_to_ev(amps.peak()[0]),
            "pulses": [p.__dict__ for p in pulses]}


_INTERF_HEADER = ["theta_deg", "dcs_t1", "dcs_t2", "dcs_total", "dcs_interf", "delta_phi12_deg"]


def _interference_summary(res) -> dict:
    ni = res.normalized_interf
    d = np.rad2deg(res.delta_phi12.compressed())
    return {"nu": complex(res.nu), "normalized_interf_min": float(ni.min()),
            "normalized_interf_max": float(ni.max()),
            "delta_phi12_min_deg": float(d.min()) if d.size else None,
            "delta_phi12_max_deg": float(d.max()) if d.size else None, **res.meta}


def run_interference(cfg: ExperimentConfig, out: Path) -> dict:
    from .interference import balance_detuning, interference

    st = build_structure(cfg)
    setup = two_color_setup(cfg, st)
    if cfg.interference.balance:
        setup = setup.with_(detuning_ir=balance_detuning(setup, tuple(cfg.interference.bracket_ev)))
    res = interference(setup, _theta(cfg))
    write_csv(out / "interference.csv", _INTERF_HEADER, res.rows())
    return _interference_summary(res)


def run_pairs(cfg: ExperimentConfig, out: Path) -> dict:
    from .interference import pair_study

    st = build_structure(cfg)
    it = cfg.interference
    res = pair_study(st, [tuple(p) for p in it.pairs], n_cycles=it.n_cycles, balance=it.balance,
                     bracket_ev=tuple(it.bracket_ev), theta=_theta(cfg),
                     a0_ir=it.a0_ir, a0_bl=it.a0_bl, shared_duration=it.shared_duration)
    rows, summary = [], {}
    for p in res:
        name = "_".join(p.pair)
        write_csv(out / f"interference_{name}.csv", _INTERF_HEADER, p.result.rows())
        s = _interference_summary(p.result)
        nu = complex(p.result.nu)
        rows.append((p.pair[0], p.pair[1], au_to_ev(p.delta_e), au_to_ev(p.final_energy),
                     au_to_ev(p.detuning_ir), au_to_ev(p.detuning_bl), nu.real, nu.imag, abs(nu),
                     s["delta_phi12_min_deg"], s["delta_phi12_max_deg"]))
        summary[name] = {"delta_e_ev": rows[-1][2], "final_energy_ev": rows[-1][3], "nu": nu}
    write_csv(out / "pairs.csv", ["lower", "upper", "delta_e_ev", "final_energy_ev", "detuning_ir_ev",
                                  "detuning_bl_ev", "nu_re", "nu_im", "nu_abs", "dphi_min_deg",
                                  "dphi_max_deg"], rows)
    return summary


def run_control(cfg: ExperimentConfig, out: Path) -> dict:
    from .interference import control_scheme

    st = build_structure(cfg)
    it = cfg.interference
    setup = two_color_setup(cfg, st)
    res = control_scheme(setup, it.strengths, mode=it.mode, block_ev=it.block_ev, theta=_theta(cfg))
    rows, summary = [], {}
    for r in res:
        direct = r.meta["direct_interf"]
        dphi = np.rad2deg(r.delta_phi12.filled(np.nan))
        for i, th in enumerate(r.theta):
            rows.append((r.meta["strength"], np.rad2deg(th), r.dcs_interf[i], direct[i], r.dcs_total[i], dphi[i]))
        summary[str(r.meta["strength"])] = {"interf_theta0": float(r.dcs_interf[0]),
                                            "direct_theta0": float(direct[0])}
    write_csv(out / "control.csv", ["strength", "theta_deg", "dcs_interf_recovered", "dcs_interf_direct",
                                    "dcs_total", "delta_phi12_deg"], rows)
    return summary


def run_stochastic(cfg: ExperimentConfig, out: Path) -> dict:
    from .interference import stochastic_average

    st = build_structure(cfg)
    num = cfg.numerics
    res = stochastic_average(two_color_setup(cfg, st), num.n_samples, int(num.seed), num.checkpoints,
                             block_ev=cfg.interference.block_ev, theta=_theta(cfg))
    header = ["theta_deg", "reference"] + [f"average_n{n}" for n in res.sample_counts]
    write_csv(out / "stochastic.csv", header,
              ([np.rad2deg(th), res.reference[i]] + [res.running[n][i] for n in res.sample_counts]
               for i, th in enumerate(res.theta)))
    peak = float(np.max(np.abs(res.reference)))
    return {"seed": res.seed, "relative_peak": {str(n): float(np.max(np.abs(res.running[n]))) / peak
                                                for n in res.sample_counts}}


RUNNERS: dict[str, Callable[[ExperimentConfig, Path], dict]] = {
    "bound": run_bound, "continuum": run_continuum, "propagate": run_propagate, "pt": run_pt,
    "interference": run_interference, "pairs": run_pairs, "control": run_control,
    "stochastic": run_stochastic,
}


def run(cfg: ExperimentConfig, out: str | Path) -> dict:
    """Run one config and write its artifacts. Returns the scalar results."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    wall = time.perf_counter()
    try:
        results = RUNNERS[cfg.kind](cfg, out)
    except AtomSlitError:
        log.error("%s run failed (output dir %s)", cfg.kind, out)
        raise
    write_manifest(out, cfg, results, time.perf_counter() - wall)
    return results


def _sweep_point(args):
    cfg_dict, out = args
    cfg = ExperimentConfig.from_mapping(cfg_dict)
    return run(cfg, out)


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        elif isinstance(v, (int, float, np.floating)) and not isinstance(v, bool):
            flat[key] = v
    return flat


def sweep(cfg: ExperimentConfig, axis: str, values: list, out: str | Path, threads: int = 1) -> list[dict]:
    """Independent runs over ``values`` of ``axis``, plus summary.csv of scalar results."""
    if not values:
        raise ValidationError({"sweep.values": "must not be empty"})
    if not cfg.has_axis(axis):
        raise ValidationError({"sweep.axis": f"unknown or non-numeric field {axis!r}"})
    out = Path(out)
    base = cfg.to_dict()
    base["sweep"] = {"axis": None, "values": []}
    base_cfg = ExperimentConfig.from_mapping(base)
    jobs = [(base_cfg.with_value(axis, v).to_dict(), str(out / f"{axis}={v}")) for v in values]
    wall = time.perf_counter()
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    flat = [_flatten(r) for r in results]
    keys = sorted({k for f in flat for k in f})
    write_csv(out / "summary.csv", [axis] + keys, ([v] + [f.get(k) for k in keys] for v, f in zip(values, flat)))
    write_manifest(out, cfg, {"axis": axis, "values": values, "points": results}, time.perf_counter() - wall)
    return results


# ------------------------------------------------------------------ main

def _parse_values(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok:
            vals.append(float(tok) if any(c in tok for c in ".eE") else int(tok))
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atomslit", description="Two-color photoionization runs for Rb.")
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--config", help="YAML config (or a previous manifest.json)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="random seed, unsigned 64-bit")
    ap.add_argument("--threads", type=int, default=1, help="numba threads / sweep workers")
    ap.add_argument("--paper-scale", action="store_true", help="r_max = 1e4 a.u., dr = 0.005 a.u.")
    ap.add_argument("--kind", choices=KINDS, help="run kind for sweep (default: the config's kind)")
    ap.add_argument("--axis", help="sweep axis, dotted path such as pulses.1.delta_fs")
    ap.add_argument("--values", help="comma separated sweep values")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        data = {}
        if args.config:
            cfg0 = ExperimentConfig.load(args.config)
            data = cfg0.to_dict()
        if args.verb != "sweep":
            data["kind"] = args.verb
        elif args.kind:
            data["kind"] = args.kind
        if args.seed is not None:
            data.setdefault("numerics", {})["seed"] = args.seed
        if args.paper_scale:
            data["paper_scale"] = True
        if args.out:
            data["out"] = args.out
        if args.verb == "sweep":
            sw = data.setdefault("sweep", {})
            if args.axis:
                sw["axis"] = args.axis
            if args.values is not None:
                sw["values"] = _parse_values(args.values)
            if not sw.get("values"):
                raise ValidationError({"sweep.values": "must not be empty"})
        cfg = ExperimentConfig.from_mapping(data)
        if args.threads > 1:
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        out = Path(cfg.out or f"runs/{cfg.kind}")
        if args.verb == "sweep":
            sweep(cfg, cfg.sweep.axis, cfg.sweep.values, out, args.threads)
        else:
            run(cfg, out)
    except ValidationError as e:
        print(f"atomslit: {e}", file=sys.stderr)
        return 2
    except AtomSlitError as e:
        print(f"atomslit: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
