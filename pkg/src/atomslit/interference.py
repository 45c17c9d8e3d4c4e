"""Two-pathway interference: DCS_interf, phase difference and its control.

Pathway t1 absorbs the IR photon first, t2 the BL photon first. With the
IR laser tuned to 5s->5p and the BL laser to 5s->6p these are the routes
through 5p and 6p respectively.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BracketingError, DomainError
from .perturbation import (DEFAULT_INTERMEDIATES, PathwayAmplitude, one_photon_amplitude,
                           pathway_amplitude)
from .pulses import REFERENCE_A0, LaserPulse, resonant_omega
from .structure import AtomStructure
from .units import au_to_ev, ev_to_au

log = logging.getLogger(__name__)

AMPLITUDE_THRESHOLD = 1e-12


class PerturbativeRegimeWarning(UserWarning):
    pass


class BlockedPathwaysWarning(UserWarning):
    pass


def angle_mesh(step_deg: float = 1.0) -> np.ndarray:
    """[0, 360) degrees in radians."""
    return np.deg2rad(np.arange(0.0, 360.0, step_deg))


@dataclass(frozen=True)
class TwoColorSetup:
    """Two lasers tuned to 5s -> lower and 5s -> upper, plus detunings.

    Detunings are in a.u.; ``a0_ir``/``a0_bl`` are vector-potential peak
    amplitudes. With ``shared_duration`` both pulses last 2 pi n / omega_IR.
    """

    structure: AtomStructure
    n_cycles: float = 70
    lower: str = "5p"
    upper: str = "6p"
    initial: str = "5s"
    detuning_ir: float = 0.0
    detuning_bl: float = 0.0
    a0_ir: float = REFERENCE_A0["IR"]
    a0_bl: float = REFERENCE_A0["BL"]
    delta_ir: float = 0.0
    delta_bl: float = 0.0
    phase_ir: float = 0.0
    phase_bl: float = 0.0
    shared_duration: bool = True
    intermediates: tuple = DEFAULT_INTERMEDIATES
    l_values: tuple = (0, 2)
    rtol: float = 1e-7

    def with_(self, **kw) -> "TwoColorSetup":
        return replace(self, **kw)

    @property
    def e0(self) -> float:
        return self.structure[self.initial].energy

    @property
    def omega_ir(self) -> float:
        return resonant_omega(self.e0, self.structure[self.lower].energy, self.detuning_ir)

    @property
    def omega_bl(self) -> float:
        return resonant_omega(self.e0, self.structure[self.upper].energy, self.detuning_bl)

    @property
    def final_energy(self) -> float:
        return self.e0 + self.omega_ir + self.omega_bl

    @property
    def duration(self) -> float:
        return 2 * np.pi * self.n_cycles / self.omega_ir

    def pulses(self) -> list[LaserPulse]:
        T = self.duration if self.shared_duration else None
        ir = LaserPulse.from_vector_potential(self.omega_ir, self.a0_ir, self.n_cycles, label="IR",
                                              delta_t=self.delta_ir, phase=self.phase_ir, duration=T)
        bl = LaserPulse.from_vector_potential(self.omega_bl, self.a0_bl, self.n_cycles, label="BL",
                                              delta_t=self.delta_bl, phase=self.phase_bl, duration=T)
        return [ir, bl]

    def control_pulse(self, amplitude: float, final_energy: float | None = None) -> LaserPulse:
        """One-photon control tuned to final_energy - E_initial (same duration)."""
        ef = self.final_energy if final_energy is None else final_energy
        return LaserPulse(omega=ef - self.e0, amplitude=amplitude, n_cycles=self.n_cycles,
                          label="CONTROL", duration=self.duration)


def pathway_amplitudes(setup: TwoColorSetup) -> tuple[PathwayAmplitude, PathwayAmplitude]:
    ps = setup.pulses()
    ef = setup.final_energy
    kw = dict(l_values=setup.l_values, intermediates=setup.intermediates, rtol=setup.rtol)
    t1 = pathway_amplitude(ps, setup.structure, ef, ("IR", "BL"), "t1", **kw)
    t2 = pathway_amplitude(ps, setup.structure, ef, ("BL", "IR"), "t2", **kw)
    if max(t1.norm(), t2.norm()) < AMPLITUDE_THRESHOLD:
        warnings.warn("both pathways are blocked", BlockedPathwaysWarning, stacklevel=2)
    return t1, t2


def interference_dcs(t1, t2) -> np.ndarray:
    """t1 t2* + t2 t1* pointwise."""
    t1 = np.asarray(t1, dtype=complex)
    t2 = np.asarray(t2, dtype=complex)
    return 2.0 * np.real(t1 * np.conj(t2))


def phase_difference(t1, t2, threshold: float = AMPLITUDE_THRESHOLD) -> np.ma.MaskedArray:
    """arccos of the normalized cross term, in [0, pi]; masked where either
    amplitude is below ``threshold`` times the largest amplitude."""
    t1 = np.asarray(t1, dtype=complex)
    t2 = np.asarray(t2, dtype=complex)
    a1, a2 = np.abs(t1), np.abs(t2)
    scale = max(a1.max(initial=0.0), a2.max(initial=0.0))
    bad = (a1 <= threshold * scale) | (a2 <= threshold * scale) | (scale == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.real(t1 * np.conj(t2)) / (a1 * a2)
    c = np.clip(np.where(bad, 0.0, c), -1.0, 1.0)
    return np.ma.masked_array(np.arccos(c), mask=bad)


@dataclass(frozen=True, eq=False)
class InterferenceResult:
    theta: np.ndarray
    dcs_t1: np.ndarray
    dcs_t2: np.ndarray
    dcs_total: np.ndarray
    dcs_interf: np.ndarray
    delta_phi12: np.ma.MaskedArray
    nu: complex = complex("nan")
    meta: dict = field(default_factory=dict)

    @property
    def normalized_interf(self) -> np.ndarray:
        """DCS_interf on the scale where the peak of DCS_total is 1."""
        return self.dcs_interf / np.max(self.dcs_total)

    def rows(self):
        """Tidy rows (theta_deg, dcs_t1, dcs_t2, dcs_total, dcs_interf, dphi_deg or None)."""
        dphi = np.rad2deg(self.delta_phi12.filled(np.nan))
        for i, th in enumerate(self.theta):
            ph = None if np.ma.getmaskarray(self.delta_phi12)[i] else float(dphi[i])
            yield (float(np.rad2deg(th)), float(self.dcs_t1[i]), float(self.dcs_t2[i]),
                   float(self.dcs_total[i]), float(self.dcs_interf[i]), ph)


def nu_ratio(t1: PathwayAmplitude, t2: PathwayAmplitude) -> complex:
    """(S_2/S_0 of t1) / (S_2/S_0 of t2)."""
    return (t1.components[2] / t1.components[0]) / (t2.components[2] / t2.components[0])


def analyze(t1: PathwayAmplitude, t2: PathwayAmplitude, theta=None, meta=None) -> InterferenceResult:
    theta = angle_mesh() if theta is None else np.asarray(theta, dtype=float)
    a1, a2 = t1.total(theta), t2.total(theta)
    try:
        nu = nu_ratio(t1, t2)
    except (KeyError, ZeroDivisionError):
        nu = complex("nan")
    return InterferenceResult(theta, np.abs(a1) ** 2, np.abs(a2) ** 2, np.abs(a1 + a2) ** 2,
                              interference_dcs(a1, a2), phase_difference(a1, a2), nu, dict(meta or {}))


def interference(setup: TwoColorSetup, theta=None) -> InterferenceResult:
    t1, t2 = pathway_amplitudes(setup)
    meta = {"final_energy_ev": au_to_ev(setup.final_energy),
            "detuning_ir_ev": au_to_ev(setup.detuning_ir), "detuning_bl_ev": au_to_ev(setup.detuning_bl),
            "n_cycles": setup.n_cycles, "t1_norm": t1.norm(), "t2_norm": t2.norm()}
    return analyze(t1, t2, theta, meta)


def bisect_root(g: Callable[[float], float], lo: float, hi: float, *, scale: Callable[[float], float],
                rel_tol: float = 1e-3, max_iter: int = 60, n_scan: int = 6) -> float:
    """Bisection for g(x) = 0 on [lo, hi], stopping once |g| < rel_tol * scale(x)."""
    glo, ghi = g(lo), g(hi)
    if np.sign(glo) == np.sign(ghi):
        xs = np.linspace(lo, hi, n_scan)
        scan = [(float(x), float(g(x))) for x in xs]
        raise BracketingError(f"no sign change of g on [{lo:.4g}, {hi:.4g}]", scan=scan)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) < rel_tol * scale(mid):
            return mid
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stronger_laser(setup: TwoColorSetup) -> str:
    """Which laser to detune for balance: "IR" when t1 dominates, else "BL"."""
    t1, t2 = pathway_amplitudes(setup)
    return "IR" if t1.norm() >= t2.norm() else "BL"


def balance_detuning(setup: TwoColorSetup, bracket_ev=(0.0, 0.4), rel_tol: float = 1e-3,
                     laser: str = "IR") -> float:
    """Detuning (a.u.) of ``laser`` that gives |t1| = |t2| (angle-integrated norms).

    Detuning the laser of the stronger route weakens it, so g = |t_strong| - |t_weak|
    changes sign inside a suitable bracket.
    """
    if laser not in ("IR", "BL"):
        raise DomainError("laser must be 'IR' or 'BL'")
    attr = "detuning_ir" if laser == "IR" else "detuning_bl"
    cache: dict[float, tuple[float, float]] = {}

    def norms(d):
        if d not in cache:
            t1, t2 = pathway_amplitudes(setup.with_(**{attr: d}))
            a, b = t1.norm(), t2.norm()
            cache[d] = (a, b) if laser == "IR" else (b, a)
        return cache[d]

    lo, hi = (ev_to_au(x) for x in bracket_ev)
    return bisect_root(lambda d: norms(d)[0] - norms(d)[1], lo, hi,
                       scale=lambda d: norms(d)[0], rel_tol=rel_tol)


@dataclass(frozen=True, eq=False)
class PairResult:
    pair: tuple
    delta_e: float
    final_energy: float
    detuning_ir: float
    detuning_bl: float
    result: InterferenceResult


def pair_study(structure: AtomStructure, pairs: Iterable[tuple[str, str]], n_cycles: float = 75,
               balance: bool = False, bracket_ev=(0.0, 0.4), theta=None, **setup_kw) -> list[PairResult]:
    """Interference for several intermediate pairs with lasers retargeted per pair.

    Each pair (a, b) puts the IR laser on 5s -> a and the BL laser on
    5s -> b. With ``balance`` the laser of the stronger route is detuned
    until both routes carry equal weight.
    """
    out = []
    for lower, upper in pairs:
        setup = TwoColorSetup(structure, n_cycles=n_cycles, lower=lower, upper=upper, **setup_kw)
        laser = None
        if balance:
            laser = stronger_laser(setup)
            attr = "detuning_ir" if laser == "IR" else "detuning_bl"
            try:
                d = balance_detuning(setup, bracket_ev, laser=laser)
                setup = setup.with_(**{attr: d})
            except BracketingError as e:
                log.warning("pair %s/%s: %s; keeping the given detunings", lower, upper, e)
        res = interference(setup, theta)
        res.meta["balanced_laser"] = laser
        de = structure[upper].energy - structure[lower].energy
        out.append(PairResult((lower, upper), de, setup.final_energy, setup.detuning_ir,
                              setup.detuning_bl, res))
    return out


def _control_unit(setup: TwoColorSetup, final_energy: float) -> PathwayAmplitude:
    ctrl = setup.control_pulse(1.0, final_energy)
    return one_photon_amplitude([ctrl], setup.structure, final_energy)


def control_scheme(setup: TwoColorSetup, strengths: Sequence[float], mode: str = "physical",
                   block_ev: float = 0.13, theta=None) -> list[InterferenceResult]:
    """Interference recovered from the four-measurement combination
    |t_all|^2 - (|t_ii|^2 + |t_iii|^2 - |t_iv|^2).

    Each strength s fixes the control field so that |t_contr| = s |t1 + t2|
    (angle-integrated). In "ideal" mode every measurement is built from the
    same t1, t2, t_contr. In "physical" mode measurements (ii)-(iv) are
    simulated with the blocked laser(s) detuned by ``block_ev``: all
    amplitudes, including the retuned control, are recomputed at the
    shifted final energy, so the combination is only approximately the
    two-path cross term.
    """
    if mode not in ("ideal", "physical"):
        raise DomainError("mode must be 'ideal' or 'physical'")
    theta = angle_mesh() if theta is None else np.asarray(theta, dtype=float)
    t1, t2 = pathway_amplitudes(setup)
    both = t1 + t2
    unit = _control_unit(setup, setup.final_energy)
    base = both.norm() / unit.norm()
    block = ev_to_au(block_ev)
    variants = {}
    if mode == "physical":
        for key, kw in (("ii", dict(detuning_bl=setup.detuning_bl + block)),
                        ("iii", dict(detuning_ir=setup.detuning_ir + block)),
                        ("iv", dict(detuning_bl=setup.detuning_bl + block,
                                    detuning_ir=setup.detuning_ir + block))):
            s = setup.with_(**kw)
            a, b = pathway_amplitudes(s)
            variants[key] = (a.total(theta) + b.total(theta), _control_unit(s, s.final_energy).total(theta))
    direct = interference_dcs(t1.total(theta), t2.total(theta))
    results = []
    for st in strengths:
        if st > 10:
            warnings.warn(f"|t_contr| = {st}|t1+t2| leaves the perturbative regime",
                          PerturbativeRegimeWarning, stacklevel=2)
        amp = st * base
        tc = amp * unit.total(theta)
        a1, a2 = t1.total(theta), t2.total(theta)
        t_all = a1 + a2 + tc
        if mode == "ideal":
            t_ii, t_iii, t_iv = a1 + tc, a2 + tc, tc
        else:
            t_ii = variants["ii"][0] + amp * variants["ii"][1]
            t_iii = variants["iii"][0] + amp * variants["iii"][1]
            t_iv = variants["iv"][0] + amp * variants["iv"][1]
        rec = np.abs(t_all) ** 2 - (np.abs(t_ii) ** 2 + np.abs(t_iii) ** 2 - np.abs(t_iv) ** 2)
        # phase difference implied by the recovered cross term
        with np.errstate(invalid="ignore", divide="ignore"):
            c = rec / (2 * np.abs(a1) * np.abs(a2))
        bad = (np.abs(a1) * np.abs(a2)) <= AMPLITUDE_THRESHOLD * np.max(np.abs(a1) * np.abs(a2))
        dphi = np.ma.masked_array(np.arccos(np.clip(np.where(bad, 0, c), -1, 1)), mask=bad)
        results.append(InterferenceResult(
            theta, np.abs(a1) ** 2, np.abs(a2) ** 2, np.abs(t_all) ** 2, rec, dphi,
            meta={"strength": st, "mode": mode, "control_amplitude": amp, "direct_interf": direct,
                  "omega_contr": setup.final_energy - setup.e0}))
    return results


@dataclass(frozen=True, eq=False)
class StochasticResult:
    theta: np.ndarray
    reference: np.ndarray
    sample_counts: tuple
    running: dict
    samples: np.ndarray
    seed: int


def stochastic_average(setup: TwoColorSetup, n_samples: int, seed: int,
                       checkpoints: Sequence[int] = (1, 10, 100, 1000), block_ev: float = 0.13,
                       theta=None, amplitudes: tuple | None = None) -> StochasticResult:
    """Average interference of pathway 1 with a randomly scaled control route.

    Pathway 2 is closed by detuning the BL laser by ``block_ev``. Sample k
    draws u_k ~ U[-1, 1] and sets t_contr = u_k * c with |c| = |t1|. The
    reference curve is u = 1. Running averages are reported at every count
    in ``checkpoints`` that does not exceed ``n_samples``.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    theta = angle_mesh() if theta is None else np.asarray(theta, dtype=float)
    if amplitudes is None:
        s = setup.with_(detuning_bl=setup.detuning_bl + ev_to_au(block_ev))
        t1, t2 = pathway_amplitudes(s)
        path = t1 + t2
        unit = _control_unit(s, s.final_energy)
        c = unit.scaled(path.norm() / unit.norm())
        a_path, a_c = path.total(theta), c.total(theta)
    else:
        a_path, a_c = amplitudes
    ref = interference_dcs(a_path, a_c)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=n_samples)
    cum = np.cumsum(u)
    counts = tuple(n for n in checkpoints if n <= n_samples)
    # the cross term is linear in u, so the running mean is mean(u) * reference
    running = {n: (cum[n - 1] / n) * ref for n in counts}
    return StochasticResult(theta, ref, counts, running, u, seed)
