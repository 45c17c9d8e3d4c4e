"""Time-dependent perturbation theory for two-color pulses.

Conventions: omega_ab = E_b - E_a, interaction V(t) = E(t) z, and each
real carrier is split as cos x = (e^{ix} + e^{-ix})/2 with a sign lambda
(lambda = -1 is absorption). The first and second order amplitudes are

    d1 = -(i/2) sum_{p,lam} F_p z_f0 e^{i lam(w_p D_p + phi_p)} F1_{w_f0}(t, lam w_p, D_p)
    d2 = -(1/4) sum_n sum_{j,lam; i,lam'} z_fn z_n0 F_j F_i e^{...} G

with F1 the envelope transform and G the nested time integral of
:func:`f2_kernel`.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .angular import ylm0
from .errors import DomainError, SingularTermError, ToleranceError
from .observables import PartialWaveAmplitudes
from .pulses import LaserPulse, envelope_transform, pulse_window
from .structure import AtomStructure, BoundState, ContinuumState

log = logging.getLogger(__name__)

DEFAULT_INTERMEDIATES = ("5p", "6p", "7p", "8p")


@dataclass(frozen=True)
class TemporalKernelResult:
    """Value of a temporal kernel; ``g`` is the bare nested integral for F2."""

    value: complex
    t: float
    omega_args: tuple
    g: complex | None = None
    n_nodes: int = 0


def f1_kernel(T: float, omega0, omega, delta: float, t):
    """F1_{omega0}(t, omega, delta): integral of Omega(t'+delta) e^{i(omega0+omega)t'} up to t."""
    return envelope_transform(T, np.add(omega0, omega), t, delta)


_GL_ORDER = 24
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


def _gauss_pieces(func, a: float, b: float, n_pieces: int):
    edges = np.linspace(a, b, n_pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    f = func(x)
    return np.sum(w * f), np.sum(w * np.abs(f)), x.size


def f2_kernel(T_j: float, T_i: float, omega_fn: float, omega_n0: float, w_j: float, w_i: float,
              delta_j: float, delta_i: float, t: float, rtol: float = 1e-8,
              max_pieces: int = 1 << 16) -> TemporalKernelResult:
    """Second-order temporal kernel.

    G = int^t Omega_j(t'+delta_j) e^{i(omega_fn + w_j) t'} F1_{omega_n0}(t', w_i, delta_i) dt'
    is evaluated by piecewise Gauss-Legendre quadrature, doubling the
    number of pieces until the relative change drops below ``rtol``. The
    returned value is F2 = (omega_n0 + w_i) G; ``g`` holds G itself, which
    stays finite when the intermediate state is exactly resonant.
    """
    args = (omega_fn, omega_n0, w_j, w_i, delta_j, delta_i)
    lo = max(-0.5 * T_j - delta_j, -0.5 * T_i - delta_i)
    hi = min(t, 0.5 * T_j - delta_j)
    if hi <= lo:
        return TemporalKernelResult(0j, t, args, 0j, 0)
    y_out = omega_fn + w_j
    y_in = omega_n0 + w_i

    def integrand(tp):
        s = tp + delta_j
        env = np.cos(np.pi * s / T_j) ** 2
        return env * np.exp(1j * y_out * tp) * envelope_transform(T_i, y_in, tp, delta_i)

    fastest = abs(y_out) + abs(y_in) + 2 * np.pi / T_j + 2 * np.pi / T_i
    n = max(4, int(np.ceil((hi - lo) * fastest / (2 * np.pi))))
    prev, mass, nodes = _gauss_pieces(integrand, lo, hi, n)
    while True:
        n *= 2
        if n > max_pieces:
            raise ToleranceError(f"F2 quadrature did not reach rtol={rtol} with {max_pieces} pieces")
        cur, mass, nodes = _gauss_pieces(integrand, lo, hi, n)
        # cancellation below ~1e-12 of int|f| is rounding noise, not signal
        if abs(cur - prev) <= max(rtol * abs(cur), 1e-12 * mass):
            break
        prev = cur
    return TemporalKernelResult(y_in * cur, t, args, cur, nodes)


def cw_resonance_ratio(n_cycles: float, omega: float, detuning_n: float) -> float:
    """|F2(t_end)| at exact two-photon resonance divided by T/(2 pi).

    One color at frequency ``omega`` drives both steps (shared envelope); the
    intermediate sits ``detuning_n`` away from one-photon resonance. The
    ratio tends to 3 pi / 4 as the pulse gets longer.
    """
    T = 2 * np.pi * n_cycles / omega
    omega_n0 = omega + detuning_n
    omega_fn = omega - detuning_n
    res = f2_kernel(T, T, omega_fn, omega_n0, -omega, -omega, 0.0, 0.0, 0.5 * T)
    return abs(res.value) / (T / (2 * np.pi))


def _phase(p: LaserPulse, lam: int) -> complex:
    return np.exp(1j * lam * (p.omega * p.delta_t + p.phase))


def _t_end(pulses: Sequence[LaserPulse], t: float | None) -> float:
    return pulse_window(pulses)[1] if t is None else t


def _z(structure: AtomStructure, bra, ket) -> float:
    # <bra|z|ket> = -<bra|d_z|ket> for the electron
    return -structure.dipole_z(bra, ket)


def d1_amplitude(pulses: Sequence[LaserPulse], structure: AtomStructure, final: BoundState,
                 t: float | None = None, initial: BoundState | None = None):
    """First-order amplitude into a bound p state. Vectorized over ``t``."""
    initial = initial or structure["5s"]
    if final.l != 1:
        raise DomainError("first-order target must be a p state")
    z = _z(structure, final, initial)
    w_f0 = final.energy - initial.energy
    t = _t_end(pulses, t) if t is None else np.asarray(t, dtype=float)
    out = 0j
    for p in pulses:
        if p.amplitude == 0:
            continue
        for lam in (-1, 1):
            out = out + p.amplitude * _phase(p, lam) * f1_kernel(p.T, w_f0, lam * p.omega, p.delta_t, t)
    return -0.5j * z * out


def occupation_pt(pulses, structure, final: BoundState, t=None, initial=None):
    """First-order occupation |d1|^2."""
    return np.abs(d1_amplitude(pulses, structure, final, t, initial)) ** 2


def _bound_list(structure: AtomStructure, labels: Iterable) -> list[BoundState]:
    return [structure[x] if isinstance(x, str) else x for x in labels]


def d2_partial(pulses: Sequence[LaserPulse], structure: AtomStructure, final: ContinuumState,
               t: float | None = None, intermediates: Iterable = DEFAULT_INTERMEDIATES,
               initial: BoundState | None = None, order: tuple[str, str] | None = None,
               rtol: float = 1e-8) -> complex:
    """Second-order amplitude into the real standing wave |final> = R_kl Y_l0.

    ``order`` = (first, second) restricts the sum to the first photon from
    the pulse labelled ``first`` and the second from ``second``; None sums
    over every ordered pair of pulses.
    """
    initial = initial or structure["5s"]
    t = _t_end(pulses, t)
    inter = _bound_list(structure, intermediates)
    total = 0j
    for n in inter:
        zz = _z(structure, final, n) * _z(structure, n, initial)
        if zz == 0.0:
            continue
        w_n0 = n.energy - initial.energy
        w_fn = final.energy - n.energy
        for pi, pj in itertools.product(pulses, repeat=2):
            if order is not None and (pi.label, pj.label) != tuple(order):
                continue
            if pi.amplitude == 0 or pj.amplitude == 0:
                continue
            for li, lj in itertools.product((-1, 1), repeat=2):
                g = f2_kernel(pj.T, pi.T, w_fn, w_n0, lj * pj.omega, li * pi.omega,
                              pj.delta_t, pi.delta_t, t, rtol=rtol).g
                total += zz * pi.amplitude * pj.amplitude * _phase(pi, li) * _phase(pj, lj) * g
    return -0.25 * total


def cw_two_photon_element(structure: AtomStructure, final: ContinuumState, omega_1: float,
                          omega_2: float, intermediates: Iterable = DEFAULT_INTERMEDIATES,
                          initial: BoundState | None = None, tol: float = 1e-10):
    """sum_n z_fn z_n0 [1/(w_n0 - w_1), 1/(w_n0 - w_2)] as a two-term pair.

    The first term is the route absorbing omega_1 first. An exactly
    resonant intermediate has no cw limit and raises SingularTermError.
    """
    initial = initial or structure["5s"]
    terms = np.zeros(2, dtype=complex)
    for n in _bound_list(structure, intermediates):
        zz = _z(structure, final, n) * _z(structure, n, initial)
        w_n0 = n.energy - initial.energy
        for k, w in enumerate((omega_1, omega_2)):
            if abs(w_n0 - w) < tol:
                raise SingularTermError(f"{n.label} is resonant with omega={w:.6g}; use the pulsed kernels")
            terms[k] += zz / (w_n0 - w)
    return terms


@dataclass(frozen=True, eq=False)
class PathwayAmplitude:
    """Amplitude of one ionization route, resolved into partial waves.

    ``components`` maps l to S_l (amplitude into the standing wave R_kl Y_l0);
    ``phases`` maps l to the scattering phase delta_l(k_f). The angular
    amplitude is sum_l S_l e^{i(delta_l - l pi/2)} Y_l0(theta).
    """

    pathway: str
    components: dict
    phases: dict
    final_energy: float
    meta: dict = field(default_factory=dict)

    def coefficient(self, l: int) -> complex:
        return self.components[l] * np.exp(1j * (self.phases[l] - 0.5 * l * np.pi))

    def total(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for l in self.components:
            out = out + self.coefficient(l) * ylm0(l, theta)
        return out

    def norm(self) -> float:
        """Angle-integrated magnitude sqrt(sum_l |S_l|^2)."""
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.components.values())))

    def scaled(self, c: complex, pathway: str | None = None) -> "PathwayAmplitude":
        return PathwayAmplitude(pathway or self.pathway, {l: c * v for l, v in self.components.items()},
                                dict(self.phases), self.final_energy, dict(self.meta))

    def __add__(self, other: "PathwayAmplitude") -> "PathwayAmplitude":
        comps = dict(self.components)
        phases = dict(self.phases)
        for l, v in other.components.items():
            comps[l] = comps.get(l, 0j) + v
            phases.setdefault(l, other.phases[l])
        return PathwayAmplitude(f"{self.pathway}+{other.pathway}", comps, phases, self.final_energy)


def pathway_amplitude(pulses: Sequence[LaserPulse], structure: AtomStructure, final_energy: float,
                      order: tuple[str, str], name: str, l_values=(0, 2),
                      intermediates=DEFAULT_INTERMEDIATES, t=None, rtol=1e-8) -> PathwayAmplitude:
    comps, phases = {}, {}
    for l in l_values:
        f = structure.continuum_energy(l, final_energy)
        comps[l] = d2_partial(pulses, structure, f, t, intermediates, order=order, rtol=rtol)
        phases[l] = f.phase
    return PathwayAmplitude(name, comps, phases, final_energy, {"order": order})


def d1_continuum(pulses: Sequence[LaserPulse], structure: AtomStructure, final: ContinuumState,
                 t: float | None = None, initial: BoundState | None = None) -> complex:
    """First-order amplitude into the standing wave R_kl Y_l0 (l must be 1)."""
    initial = initial or structure["5s"]
    z = _z(structure, final, initial)
    w_f0 = final.energy - initial.energy
    t = _t_end(pulses, t)
    out = 0j
    for p in pulses:
        for lam in (-1, 1):
            out += p.amplitude * _phase(p, lam) * f1_kernel(p.T, w_f0, lam * p.omega, p.delta_t, t)
    return complex(-0.5j * z * out)


def one_photon_amplitude(pulses, structure, final_energy: float, name="control", t=None) -> PathwayAmplitude:
    f = structure.continuum_energy(1, final_energy)
    return PathwayAmplitude(name, {1: d1_continuum(pulses, structure, f, t)}, {1: f.phase}, final_energy)


def pt_partial_waves(pulses: Sequence[LaserPulse], structure: AtomStructure, energies,
                     l_values=(0, 2), intermediates=DEFAULT_INTERMEDIATES, order=None,
                     rtol: float = 1e-6) -> PartialWaveAmplitudes:
    """Second-order a_l(E) on an energy mesh, phased like the projected TDSE amplitudes."""
    energies = np.asarray(energies, dtype=float)
    coeffs = np.zeros((len(l_values), len(energies)), dtype=complex)
    t_end = pulse_window(pulses)[1]
    for j, E in enumerate(energies):
        for i, l in enumerate(l_values):
            f = structure.continuum_energy(l, E)
            s = d2_partial(pulses, structure, f, t_end, intermediates, order=order, rtol=rtol)
            coeffs[i, j] = s * np.exp(1j * (f.phase - 0.5 * l * np.pi))
    return PartialWaveAmplitudes(energies, tuple(l_values), coeffs, t_obs=t_end)
