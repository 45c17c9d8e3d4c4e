"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
are produced; they are also collected at the end of the pytest summary.
The full-size FWHM check needs ``--paper-scale``.
"""
import itertools

import numpy as np
import pytest

from atomslit.angular import wigner_3j
from atomslit.grid_potential import ModelPotentialParams, RadialGrid
from atomslit.interference import (TwoColorSetup, angle_mesh, balance_detuning, control_scheme,
                                   interference, interference_dcs, pair_study, stochastic_average)
from atomslit.observables import PartialWaveAmplitudes, averaged_phase, dcs
from atomslit.perturbation import cw_resonance_ratio, f1_kernel, occupation_pt
from atomslit.pulses import REFERENCE_A0, LaserPulse, pulse_window
from atomslit.structure import AtomStructure, solve_bound
from atomslit.tdse import (ChannelWavepacket, Hamiltonian, OccupationRecorder, default_energy_mesh,
                           observation_time, occupation, project_continuum, propagate)
from atomslit.units import au_to_ev, ev_to_au


def rel(a, b):
    return abs(a - b) / abs(b)


# 1. bound spectrum

def test_bound_spectrum(rb, criterion):
    want = {"5s": -4.177, "5p": -2.950, "6p": -1.589}
    got = {k: au_to_ev(rb[k].energy) for k in want}
    err = max(rel(got[k], want[k]) for k in want)
    h = solve_bound(ModelPotentialParams.coulomb(), RadialGrid.from_extent(200.0, 0.0025), 0, 3)
    herr = max(abs(s.energy + 0.5 / s.n**2) for s in h)
    detail = ", ".join(f"{k} {v:.4f} eV" for k, v in got.items())
    exc = ", ".join(f"{k} - 5s {got[k] - got['5s']:.4f} eV" for k in ("5p", "6p"))
    criterion("1", err < 0.01 and herr < 1e-4,
              f"{detail} (max rel err {err:.2%}; {exc}); hydrogen max err {herr:.1e} a.u.")


# 2. reduced dipoles with core correction

def test_reduced_dipoles(rb, criterion):
    d5 = rb.dipole(rb["5p"], rb["5s"]).value
    d6 = rb.dipole(rb["6p"], rb["5s"]).value
    ok = rel(d5, -5.158) < 0.02 and rel(d6, 0.468) < 0.02
    criterion("2", ok, f"<5p||d||5s> = {d5:.4f} ({rel(d5, -5.158):.2%}), "
                       f"<6p||d||5s> = {d6:.4f} ({rel(d6, 0.468):.2%})")


# 3. cw-limit kernels

def test_first_order_cross_product(rb, criterion):
    w_ir = rb["5p"].energy - rb["5s"].energy
    w_bl = rb["6p"].energy - rb["5s"].energy
    T = 2 * np.pi * 35 / w_ir
    t = np.linspace(-0.5 * T, 0.5 * T, 4001)
    p = np.real(np.conj(f1_kernel(T, w_ir, -w_ir, 0.0, t)) * f1_kernel(T, w_ir, -w_bl, 0.0, t))
    frac = abs(p[-1]) / np.max(np.abs(p))
    criterion("3 (F1)", frac < 0.01, f"n_p = 35 switch-off product / on-pulse max = {frac:.2e}")


def test_second_order_ratio_converges(rb, criterion):
    w = rb["5p"].energy - rb["5s"].energy
    # intermediate detuned by the 5p-6p gap, as seen from the other color
    gap = rb["6p"].energy - rb["5p"].energy
    r = [cw_resonance_ratio(n, w, gap) for n in (10, 20, 40)]
    err = [abs(x - 0.75 * np.pi) for x in r]
    criterion("3 (F2)", err[0] > err[1] > err[2],
              "ratio " + " / ".join(f"{x:.4f}" for x in r) + f" -> 3pi/4 = {0.75 * np.pi:.4f}")


# 4. pathway balance

@pytest.mark.parametrize("n_cycles, target", [(35, 0.15), (75, 0.07)])
def test_pathway_balance(rb, criterion, n_cycles, target):
    d = au_to_ev(balance_detuning(TwoColorSetup(rb, n_cycles=n_cycles), (0.0, 0.4)))
    criterion(f"4 (n_p = {n_cycles})", abs(d - target) <= 0.02,
              f"balancing IR detuning {d:.3f} eV, expected {target} +- 0.02")


# 5. desk-scale TDSE

def test_norm_without_absorber(rb_params, tdse_grid, rb_tdse, criterion):
    ham = Hamiltonian(rb_params, tdse_grid, 8, w0=0.0)
    w_ir = rb_tdse["5p"].energy - rb_tdse["5s"].energy
    w_bl = rb_tdse["6p"].energy - rb_tdse["5s"].energy
    ir = LaserPulse.from_vector_potential(w_ir, REFERENCE_A0["IR"], 10)
    bl = LaserPulse.from_vector_potential(w_bl, REFERENCE_A0["BL"], 10, label="BL", duration=ir.T)
    wp = ChannelWavepacket.from_state(rb_tdse["5s"], tdse_grid, 8, pulse_window([ir, bl])[0])
    out = propagate(wp, [ir, bl], 1.4, observation_time([ir, bl]), ham)
    drift = abs(out.norm() - 1.0)
    criterion("5(a)", drift < 1e-6, f"norm drift {drift:.1e} over n_p = 10 with the absorber off")


def _fig1_spread(ham, st, grid, n_cycles):
    w_ir = st["5p"].energy - st["5s"].energy
    w_bl = st["6p"].energy - st["5s"].energy
    occ = []
    for shift, phase in itertools.product((-100.0, 0.0, 100.0), (0.0, 2 * np.pi / 3)):
        # each pulse keeps its own n_p-cycle duration
        pulses = [LaserPulse.from_vector_potential(w_ir, REFERENCE_A0["IR"], n_cycles),
                  LaserPulse.from_vector_potential(w_bl, REFERENCE_A0["BL"], n_cycles, label="BL",
                                                   delta_t=shift, phase=phase)]
        wp = ChannelWavepacket.from_state(st["5s"], grid, ham.l_max, pulse_window(pulses)[0])
        out = propagate(wp, pulses, 1.4, pulse_window(pulses)[1] + 50.0, ham)
        occ.append([occupation(out, st["5p"]), occupation(out, st["6p"])])
    occ = np.array(occ)
    return np.ptp(occ, axis=0) / occ.mean(axis=0)


def test_occupation_sensitivity_collapses(hamiltonian, rb_tdse, tdse_grid, criterion):
    s6 = _fig1_spread(hamiltonian, rb_tdse, tdse_grid, 6)
    s10 = _fig1_spread(hamiltonian, rb_tdse, tdse_grid, 10)
    ratio = s6 / s10
    criterion("5(b)", bool(np.all(ratio >= 5.0)),
              f"relative peak-to-peak over delay and phase: 5p {s6[0]:.1%} -> {s10[0]:.1%}, "
              f"6p {s6[1]:.1%} -> {s10[1]:.1%}; reduction {ratio[0]:.1f}x / {ratio[1]:.1f}x (need >= 5x)")


def _refined_peak(amps, l):
    s = amps.sigma(l)
    i = int(np.argmax(s))
    y0, y1, y2 = s[i - 1:i + 2]
    h = amps.energies[1] - amps.energies[0]
    return amps.energies[i] + 0.5 * h * (y0 - y2) / (y0 - 2 * y1 + y2), amps.energies[i], h


def test_sigma2_peak_at_final_energy(tdse_run, criterion):
    parts, ok = [], True
    for n in (10, 12):
        run = tdse_run(n)
        peak, node, h = _refined_peak(run.amps, 2)
        miss = abs(peak - run.final_energy) / h
        ok &= miss <= 1.0
        parts.append(f"n_p = {n}: peak {au_to_ev(peak):.4f} eV (mesh point {au_to_ev(node):.4f}) vs "
                     f"E_f {au_to_ev(run.final_energy):.4f} eV, {miss:.2f} steps")
    criterion("5(c)", ok, "; ".join(parts))


def test_occupations_match_perturbation_theory(rb_params, tdse_grid, tdse_run, criterion):
    # the propagator couples with the bare r, so compare with the uncorrected operator
    bare = AtomStructure(rb_params, tdse_grid, corrected=False, n_per_l=4)
    run = tdse_run(10, detuning_ev=0.15, dt=0.7)
    i0 = int(np.argmin(np.abs(run.t)))
    errs = {}
    for lab in ("5p", "6p"):
        pt = occupation_pt(run.pulses, bare, bare[lab], run.t[[i0, -1]])
        errs[lab] = (rel(run.occ[lab][i0], pt[0]), rel(run.occ[lab][-1], pt[1]))
    worst = max(max(v) for v in errs.values())
    criterion("5(d)", worst < 0.05,
              "; ".join(f"{k} peak {v[0]:.1%}, end {v[1]:.1%}" for k, v in errs.items()) +
              " (n_p = 10, IR detuned 0.15 eV)")


def test_averaged_phase_stable_in_pulse_length(tdse_run, criterion):
    th = np.deg2rad(np.arange(0.0, 181.0, 5.0))
    p12 = np.unwrap(averaged_phase(tdse_run(12).amps, th))
    p35 = np.unwrap(averaged_phase(tdse_run(35).amps, th))
    # a global phase is arbitrary: remove the circular-mean offset before comparing shapes
    d = np.angle(np.exp(1j * (p12 - p35)))
    d = np.angle(np.exp(1j * (d - np.angle(np.mean(np.exp(1j * d))))))
    frac = np.max(np.abs(d)) / np.ptp(p35)
    criterion("5 (averaged phase)", frac < 0.05,
              f"n_p = 12 vs 35: max deviation {np.max(np.abs(d)):.3f} rad over a range of "
              f"{np.ptp(p35):.3f} rad = {frac:.1%}")


def test_lmax_convergence(tdse_run, criterion):
    a8 = tdse_run(10).amps.sigma()
    a10 = tdse_run(10, l_max=10).amps.sigma()
    change = np.max(np.abs(a10 - a8)) / np.max(a8)
    criterion("5 (l_max)", change < 0.01, f"l_max 8 -> 10 changes sigma(E) by {change:.1e} of its peak")


def test_absorber_start_insensitivity(rb_params, rb_tdse, tdse_run, criterion):
    ref = tdse_run(10)
    i = ref.amps.index(ref.final_energy)
    E = ref.amps.energies[i - 20:i + 21]
    # project every run over the same radial range, inside the earliest absorber
    r_out = 0.64 * 2000.0
    s_ref = project_continuum(ref.final, ref.hamiltonian, E, ref.pulses, l_values=(0, 2), r_outer=r_out).sigma()
    worst = 0.0
    for start in (0.64, 0.96):
        grid = RadialGrid.from_extent(2000.0, 0.01, absorber_start=start)
        ham = Hamiltonian(rb_params, grid, 8)
        wp = ChannelWavepacket.from_state(rb_tdse["5s"], grid, 8, pulse_window(ref.pulses)[0])
        out = propagate(wp, ref.pulses, 1.4, observation_time(ref.pulses), ham)
        s = project_continuum(out, ham, E, ref.pulses, l_values=(0, 2), r_outer=r_out).sigma()
        worst = max(worst, np.max(np.abs(s - s_ref)) / np.max(s_ref))
    criterion("5 (absorber start +-20%)", worst < 0.01, f"max change of sigma near E_f {worst:.1e}")


def test_dcs_lobes(tdse_run, criterion):
    run = tdse_run(10)
    th = np.deg2rad(np.arange(0.0, 360.0, 1.0))
    d = dcs(run.amps, run.final_energy, th)
    ok = int(np.argmax(d)) in (0, 180) and max(d[0], d[180]) > 2 * d[90]
    criterion("5 (DCS lobes)", ok, f"DCS(0) / DCS(90) = {d[0] / d[90]:.2f}, maximum at {np.argmax(d)} deg")


@pytest.mark.paper_scale
def test_paper_scale_fwhm(rb_params, criterion):
    grid = RadialGrid.from_extent(1e4, 0.005)
    st = AtomStructure(rb_params, grid, n_per_l=4)
    ham = Hamiltonian(rb_params, grid, 8)
    w_ir = st["5p"].energy - st["5s"].energy
    w_bl = st["6p"].energy - st["5s"].energy
    ir = LaserPulse.from_vector_potential(w_ir, REFERENCE_A0["IR"], 35)
    bl = LaserPulse.from_vector_potential(w_bl, REFERENCE_A0["BL"], 35, label="BL", duration=ir.T)
    wp = ChannelWavepacket.from_state(st["5s"], grid, 8, pulse_window([ir, bl])[0])
    out = propagate(wp, [ir, bl], 0.7, observation_time([ir, bl]), ham)
    amps = project_continuum(out, ham, default_energy_mesh(), [ir, bl], l_values=(0, 2))
    fwhm = au_to_ev(amps.fwhm())
    criterion("5 (paper-scale FWHM)", abs(fwhm - 0.07) <= 0.01, f"FWHM {fwhm:.3f} eV at n_p = 35")


# 6. interference observables

@pytest.fixture(scope="module")
def balanced_5p6p(rb):
    return interference(TwoColorSetup(rb, n_cycles=70, detuning_ir=ev_to_au(0.04)))


def test_interference_band(balanced_5p6p, criterion):
    ni = np.abs(balanced_5p6p.normalized_interf)
    lo, hi = ni.min(), ni.max()
    ok = abs(lo - 0.13) <= 0.05 and abs(hi - 0.55) <= 0.05
    criterion("6 (band)", ok, f"|DCS_interf| / max DCS_total in [{lo:.1%}, {hi:.1%}], expected [13%, 55%] +- 5")


def test_interference_phase(balanced_5p6p, criterion):
    d = np.rad2deg(balanced_5p6p.delta_phi12.compressed())
    ok = d.min() >= 105.0 and d.max() <= 127.0
    criterion("6 (phase)", ok, f"phase difference in [{d.min():.1f}, {d.max():.1f}] deg, expected [110, 122] +- 5")


def test_pair_study(rb, criterion):
    pairs = [("5p", "7p"), ("5p", "8p"), ("6p", "7p"), ("7p", "8p")]
    res = pair_study(rb, pairs, n_cycles=75, theta=angle_mesh(5.0))
    de = [au_to_ev(p.delta_e) for p in res]
    want = [1.88, 2.13, 0.51, 0.25]
    dev = max(abs(a - b) for a, b in zip(de, want))
    nu = [abs(p.result.nu - 1) for p in res[2:]]
    criterion("6 (pairs)", dev <= 0.03 and nu[1] < nu[0],
              "Delta E " + " / ".join(f"{x:.3f}" for x in de) + f" eV (max dev {dev:.3f}); "
              f"|nu - 1| 6p/7p {nu[0]:.4f} -> 7p/8p {nu[1]:.4f}")


# 7. control scheme

def test_control_scheme(rb, criterion):
    setup = TwoColorSetup(rb, n_cycles=70, detuning_ir=ev_to_au(0.04))
    th = angle_mesh(5.0)
    ideal = control_scheme(setup, [0.5, 1.0, 2.0], mode="ideal", theta=th)
    err = max(np.max(np.abs(r.dcs_interf - r.meta["direct_interf"])) / np.max(np.abs(r.meta["direct_interf"]))
              for r in ideal)
    strengths = [0.0, 0.5, 1.0, 2.0, 5.0]
    phys = control_scheme(setup, strengths, mode="physical", theta=th)
    at0 = [r.dcs_interf[0] for r in phys]
    flips = any(np.sign(a) != np.sign(at0[0]) for a in at0[1:])
    criterion("7", err < 1e-8 and flips,
              f"reconstruction error {err:.1e}; DCS_interf(0 deg) vs strength " +
              ", ".join(f"{s}: {a:+.3g}" for s, a in zip(strengths, at0)))


# 8. stochastic decoherence

def test_stochastic_decoherence(rb, criterion):
    setup = TwoColorSetup(rb, n_cycles=70, detuning_ir=ev_to_au(0.04))
    th = angle_mesh(10.0)
    one = stochastic_average(setup, 1000, seed=7, theta=th)
    peak = np.max(np.abs(one.running[1000])) / np.max(np.abs(one.reference))
    # reuse the physical reference curve: 2 Re(ref * 1/2) reproduces it exactly
    amps = (one.reference.astype(complex), np.full(th.size, 0.5 + 0j))
    res = [stochastic_average(None, 1000, seed, checkpoints=(10, 100, 1000), theta=th, amplitudes=amps)
           for seed in range(300)]
    v = {n: np.sqrt(np.mean([np.mean(r.running[n] ** 2) for r in res])) for n in (10, 100, 1000)}
    r1, r2 = v[10] / v[100], v[100] / v[1000]
    ok = rel(r1, np.sqrt(10)) < 0.2 and rel(r2, np.sqrt(10)) < 0.2 and peak < 0.15
    criterion("8", ok, f"RMS ratios {r1:.2f} / {r2:.2f} (sqrt 10 = 3.16); N = 1000 peak {peak:.1%} of reference")


# 9. property suites

def test_wigner_3j_properties(criterion, rng):
    worst = 0.0
    for j1, j2, j3 in [(1, 1, 0), (2, 1, 1), (3, 2, 1), (2, 2, 2), (4, 3, 1)]:
        for m1, m2 in itertools.product(range(-j1, j1 + 1), range(-j2, j2 + 1)):
            m3 = -m1 - m2
            if abs(m3) > j3:
                continue
            w = wigner_3j(j1, j2, j3, m1, m2, m3)
            sign = (-1) ** (j1 + j2 + j3)
            worst = max(worst, abs(wigner_3j(j2, j1, j3, m2, m1, m3) - sign * w),
                        abs(wigner_3j(j2, j3, j1, m2, m3, m1) - w))
        for m3 in range(-j3, j3 + 1):
            s = sum((2 * j3 + 1) * wigner_3j(j1, j2, j3, a, -a - m3, m3) ** 2 for a in range(-j1, j1 + 1))
            worst = max(worst, abs(s - 1))
    criterion("9 (3j)", worst < 1e-12, f"max symmetry/orthogonality defect {worst:.1e}")


def test_dcs_mirror_symmetry(rng, criterion):
    c = rng.normal(size=(4, 50)) + 1j * rng.normal(size=(4, 50))
    amps = PartialWaveAmplitudes(np.linspace(0.01, 0.02, 50), (0, 1, 2, 3), c)
    th = np.deg2rad(np.arange(0.0, 360.0, 1.0))
    worst = 0.0
    for E in amps.energies[::7]:
        d = dcs(amps, E, th)
        worst = max(worst, np.max(np.abs(d[1:] - d[:0:-1])) / d.max())
    even = PartialWaveAmplitudes(amps.energies, (0, 2), c[[0, 2]])
    d = dcs(even, amps.energies[3], th)
    worst = max(worst, np.max(np.abs(d[:181] - d[180::-1])) / d.max())
    criterion("9 (DCS mirror)", worst < 1e-12, f"max asymmetry {worst:.1e}")


def test_cauchy_schwarz_bound(rng, criterion):
    t1 = rng.normal(size=(200, 36)) + 1j * rng.normal(size=(200, 36))
    t2 = rng.normal(size=(200, 36)) + 1j * rng.normal(size=(200, 36))
    ratio = np.abs(interference_dcs(t1, t2)) / (2 * np.abs(t1) * np.abs(t2))
    criterion("9 (Cauchy-Schwarz)", ratio.max() <= 1 + 1e-12, f"max |DCS_interf| / 2|t1||t2| = {ratio.max():.12f}")


def test_gauge_consistency(tdse_run, criterion):
    length = tdse_run(6, dt=0.35)
    velocity = tdse_run(6, dt=0.35, gauge="velocity")
    errs = {lab: rel(velocity.occ[lab][-1], length.occ[lab][-1]) for lab in ("5p", "6p")}
    criterion("9 (gauge)", max(errs.values()) < 0.02,
              ", ".join(f"{k} {v:.1%}" for k, v in errs.items()) + " (n_p = 6, length vs velocity)")


def test_global_phase_invariance(rb, criterion):
    setup = TwoColorSetup(rb, n_cycles=20, detuning_ir=ev_to_au(0.04))
    th = angle_mesh(10.0)
    ref = interference(setup, th)
    scale = ref.dcs_total.max()
    worst_i, worst_p = 0.0, 0.0
    for phi in (0.7, 2.5, 4.4):
        moved = interference(setup.with_(phase_ir=phi, phase_bl=phi), th)
        worst_i = max(worst_i, np.max(np.abs(moved.dcs_interf - ref.dcs_interf)) / scale)
        worst_p = max(worst_p, np.max(np.abs(moved.delta_phi12 - ref.delta_phi12)))
    # counter-rotating terms carry the opposite phase and break exactness at the 1e-3 level
    criterion("9 (global phase)", worst_i < 2e-3 and worst_p < 2e-3,
              f"max change: DCS_interf {worst_i:.1e} of peak, phase difference {worst_p:.1e} rad")
