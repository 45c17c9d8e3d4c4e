"""Split-step propagation of the m = 0 partial-wave expansion.

Each step applies the field-free radial Hamiltonian (plus absorber) by a
Crank-Nicolson solve per channel and the laser coupling between channels.
In length gauge the coupling E(t) r cos(theta) commutes with itself at
different times, so it is applied exactly by diagonalizing the constant
cos(theta) matrix; consecutive half-steps of the coupling are merged.

Only the radial prefix that carries amplitude is touched: the active edge
moves outward in chunks as soon as the outermost points pick up
amplitude above ``window_threshold``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _kernels
from .angular import cos_coupling
from .errors import (AbsorberOverflowError, ConfigurationError, DomainError,
                     SequencingError)
from .grid_potential import ModelPotentialParams, RadialGrid, absorber, potential
from .observables import PartialWaveAmplitudes
# angular observables of projected amplitudes, re-exported for convenience
from .observables import averaged_phase, dcs, quantum_phase, wigner_delay  # noqa: F401
from .pulses import LaserPulse, field_integral, pulse_window, vector_potential
from .structure import BoundState, solve_bound, solve_continuum

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class StepSizeWarning(UserWarning):
    pass


@dataclass(eq=False)
class ChannelWavepacket:
    """Radial channels b_l(r), l = 0..l_max, stored as an (l_max+1, N) array."""

    grid: RadialGrid
    l_max: int
    channels: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.channels.shape != (self.l_max + 1, self.grid.n_points):
            raise DomainError("channels must have shape (l_max+1, n_points)")

    @classmethod
    def from_state(cls, state: BoundState, grid: RadialGrid, l_max: int, t0: float = 0.0):
        b = np.zeros((l_max + 1, grid.n_points), dtype=complex)
        b[state.l] = state.radial
        return cls(grid, l_max, b, t0)

    def copy(self) -> "ChannelWavepacket":
        return ChannelWavepacket(self.grid, self.l_max, self.channels.copy(), self.time)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.channels) ** 2) * self.grid.dr)

    def channel_norms(self) -> np.ndarray:
        return np.sum(np.abs(self.channels) ** 2, axis=1) * self.grid.dr

    def save(self, path: str | Path) -> None:
        """Versioned checkpoint (npz) written atomically."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp.npz")
        g = self.grid
        np.savez_compressed(tmp, version=CHECKPOINT_VERSION, grid_key=g.key(), time=self.time,
                            l_max=self.l_max, channels=self.channels,
                            grid=np.array([g.dr, g.n_points, g.r_core, g.absorber_start]))
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path, grid: RadialGrid | None = None) -> "ChannelWavepacket":
        data = np.load(path)
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise ConfigurationError(f"unsupported checkpoint version {int(data['version'])}")
        dr, n, rc, ab = data["grid"]
        stored = RadialGrid(float(dr), int(n), float(rc), float(ab))
        if grid is not None and grid.key() != str(data["grid_key"]):
            raise ConfigurationError("checkpoint was written on a different grid")
        return cls(grid or stored, int(data["l_max"]), data["channels"], float(data["time"]))


class Hamiltonian:
    """Field-free channel Hamiltonians on a grid, with optional absorber.

    ``w0 = 0`` switches the absorber off.
    """

    def __init__(self, params: ModelPotentialParams, grid: RadialGrid, l_max: int = 8,
                 w0: float = 0.05):
        if l_max < 1:
            raise DomainError("l_max must be >= 1")
        self.params = params
        self.grid = grid
        self.l_max = l_max
        self.w0 = w0
        r = grid.r
        self.diag = np.empty((l_max + 1, grid.n_points))
        for l in range(l_max + 1):
            self.diag[l] = 1.0 / grid.dr**2 + l * (l + 1) / (2 * r**2) + potential(params, l, r)
        self.off = -0.5 / grid.dr**2
        self.absorb = absorber(grid, w0) if w0 > 0 else np.zeros(grid.n_points)
        c = np.array([cos_coupling(l) for l in range(l_max)])
        C = np.diag(c, 1) + np.diag(c, -1)
        self.lam, self.U = np.linalg.eigh(C)
        self._factors: dict[float, tuple] = {}

    def cn(self, dt: float):
        key = float(dt)
        if key not in self._factors:
            d = 0.5j * dt * (self.diag - 1j * self.absorb[None, :])
            a = 0.5j * dt * self.off
            cp, dinv = _kernels.cn_factor(d, a)
            self._factors = {key: (d, a, cp, dinv)}
        return self._factors[key]

    def bound_states(self, l: int, n_states: int) -> list[BoundState]:
        return solve_bound(self.params, self.grid, l, n_states)


def _steps_per_cycle_warning(pulses: Sequence[LaserPulse], dt: float) -> None:
    w = max(p.omega for p in pulses if p.amplitude > 0)
    per_cycle = 2 * np.pi / w / dt
    if per_cycle < 40:
        warnings.warn(f"dt={dt:.3g} gives only {per_cycle:.1f} steps per cycle of the fastest carrier "
                      "(at least 40 recommended)", StepSizeWarning, stacklevel=3)


_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(8)


def _a_integral(pulses, t0, t1):
    if t1 <= t0:
        return 0.0
    x = 0.5 * (t1 - t0) * _GL4_X + 0.5 * (t1 + t0)
    return float(0.5 * (t1 - t0) * np.sum(_GL4_W * vector_potential(pulses, x)))


class _Coupler:
    def __init__(self, ham: Hamiltonian, pulses: Sequence[LaserPulse], gauge: str):
        self.ham = ham
        self.pulses = [p for p in pulses if p.amplitude > 0]
        self.gauge = gauge
        self.r = ham.grid.r
        L = ham.l_max + 1
        self.on, self.off = pulse_window(self.pulses) if self.pulses else (0.0, 0.0)
        if gauge == "velocity":
            c = np.array([cos_coupling(l) for l in range(L - 1)])
            self.even = np.arange(0, L - 1, 2)
            self.odd = np.arange(1, L - 1, 2)
            self.c = c
        elif gauge != "length":
            raise DomainError(f"unknown gauge {gauge!r}")

    def integral(self, t0, t1) -> float:
        """Time integral of E (length) or A (velocity) over [t0, t1]."""
        if not self.pulses:
            return 0.0
        t0 = max(t0, self.on)
        if self.gauge == "length":
            t1 = min(t1, self.off)
            if t1 <= t0:
                return 0.0
            return float(sum(field_integral(p, t0, t1) for p in self.pulses))
        # A may keep a constant residue after the pulses, so no upper clip
        return _a_integral(self.pulses, t0, t1)

    def apply(self, b, s: float, n: int) -> None:
        if s == 0.0:
            return
        if self.gauge == "length":
            _kernels.couple_length(b, self.ham.U, self.ham.lam, self.r, s, n)
            return
        h = self.ham.grid.dr
        for pairs, frac in ((self.even, 0.5), (self.odd, 1.0), (self.even, 0.5)):
            if len(pairs) == 0:
                continue
            sk = frac * s * self.c[pairs]
            theta = 0.5 * sk * (pairs + 1)
            _kernels.rotate_pairs(b, pairs, theta, self.r, n)
            _kernels.derivative_pairs(b, pairs, sk, h, n)
            _kernels.rotate_pairs(b, pairs, theta, self.r, n)


def _initial_extent(b, thr, chunk, N):
    mag = np.max(np.abs(b), axis=0)
    idx = np.nonzero(mag > thr)[0]
    last = idx[-1] if len(idx) else 0
    return int(min(N, last + chunk))


def propagate(initial: ChannelWavepacket, pulses: Sequence[LaserPulse], dt: float, t_end: float,
              hamiltonian: Hamiltonian, *, gauge: str = "length",
              observer: Callable[[ChannelWavepacket], None] | None = None, observe_every: int = 1,
              window_threshold: float = 1e-12, chunk: int = 2000,
              boundary_threshold: float = 1e-10, report: dict | None = None) -> ChannelWavepacket:
    """Advance ``initial`` from its time to ``t_end`` under ``pulses``.

    The observer, if given, is called with the live wavepacket every
    ``observe_every`` steps and at the end; it must not modify it.
    """
    import time as _time

    wall = _time.perf_counter()
    if dt <= 0:
        raise DomainError("dt must be positive")
    if initial.l_max != hamiltonian.l_max or initial.grid != hamiltonian.grid:
        raise DomainError("wavepacket and Hamiltonian disagree on grid or l_max")
    active_pulses = [p for p in pulses if p.amplitude > 0]
    if active_pulses:
        _steps_per_cycle_warning(active_pulses, dt)
    wp = initial.copy()
    t0 = wp.time
    if t_end < t0:
        raise DomainError("t_end precedes the wavepacket time")
    n_steps = max(1, int(np.ceil((t_end - t0) / dt - 1e-9))) if t_end > t0 else 0
    if n_steps == 0:
        return wp
    h = (t_end - t0) / n_steps
    d, a, cp, dinv = hamiltonian.cn(h)
    coupler = _Coupler(hamiltonian, pulses, gauge)
    b = wp.channels
    N = wp.grid.n_points
    n = _initial_extent(b, window_threshold, chunk, N)
    tail = min(chunk // 2, 500)
    max_active = n

    def grow():
        nonlocal n, max_active
        while n < N and np.max(np.abs(b[:, max(0, n - tail):n])) > window_threshold:
            n = min(N, n + chunk)
        max_active = max(max_active, n)

    coupler.apply(b, coupler.integral(t0, t0 + 0.5 * h), n)
    for k in range(n_steps):
        t_mid = t0 + (k + 0.5) * h
        t_next = t0 + (k + 1) * h
        _kernels.cn_step(b, d, a, cp, dinv, n)
        last = k == n_steps - 1
        observe = observer is not None and ((k + 1) % observe_every == 0 or last)
        if observe or last:
            coupler.apply(b, coupler.integral(t_mid, t_next), n)
            wp.time = t_next
            grow()
            if observe:
                observer(wp)
            if not last:
                coupler.apply(b, coupler.integral(t_next, t_next + 0.5 * h), n)
        else:
            coupler.apply(b, coupler.integral(t_mid, t_mid + h), n)
            grow()
        if n == N:
            edge = float(np.sum(np.abs(b[:, -1]) ** 2))
            if edge > boundary_threshold:
                raise AbsorberOverflowError(
                    f"density {edge:.2e} at r_max={wp.grid.r_max:.0f} at t={t_next:.1f}; "
                    "increase r_max or the absorber strength")
    wp.time = t_end
    if report is not None:
        report.update(n_steps=n_steps, dt=h, max_active=max_active,
                      boundary_density=float(np.sum(np.abs(b[:, -1]) ** 2)), norm=wp.norm(),
                      wall_time=_time.perf_counter() - wall)
    return wp


def occupation(wp: ChannelWavepacket, state: BoundState) -> float:
    """|<state|b_l>|^2 for the channel of matching l."""
    if state.radial.shape[0] != wp.grid.n_points:
        raise DomainError("state and wavepacket live on different grids")
    if state.l > wp.l_max:
        return 0.0
    return float(abs(np.dot(state.radial, wp.channels[state.l]) * wp.grid.dr) ** 2)


class OccupationRecorder:
    """Observer collecting occupations of fixed bound states over time."""

    def __init__(self, states: dict[str, BoundState]):
        self.states = states
        self.t: list[float] = []
        self.values: dict[str, list[float]] = {k: [] for k in states}

    def __call__(self, wp: ChannelWavepacket) -> None:
        self.t.append(wp.time)
        for k, s in self.states.items():
            self.values[k].append(occupation(wp, s))

    def arrays(self):
        return np.asarray(self.t), {k: np.asarray(v) for k, v in self.values.items()}


def default_energy_mesh(n: int = 400, e_min_ev: float = 0.05, e_max_ev: float = 1.5) -> np.ndarray:
    from .units import ev_to_au
    return np.linspace(ev_to_au(e_min_ev), ev_to_au(e_max_ev), n)


def observation_time(pulses: Sequence[LaserPulse]) -> float:
    """Switch-off of the last pulse plus one period of the slowest (IR) carrier."""
    w = min(p.omega for p in pulses)
    return pulse_window(pulses)[1] + 2 * np.pi / w


def remove_bound(wp: ChannelWavepacket, hamiltonian: Hamiltonian, n_per_l: int = 8,
                 l_values: Iterable[int] | None = None) -> ChannelWavepacket:
    """Copy of ``wp`` with the lowest bound-state components of each channel projected out."""
    out = wp.copy()
    dr = wp.grid.dr
    params = hamiltonian.params
    for l in (range(wp.l_max + 1) if l_values is None else l_values):
        skip = params.n_min(l) - l - 1 if l in params.valence_n else 0
        w, v = eigh_tridiagonal(hamiltonian.diag[l], np.full(wp.grid.n_points - 1, hamiltonian.off),
                                select="i", select_range=(0, skip + n_per_l - 1))
        for e, vec in zip(w, v.T):
            if e >= 0:
                break
            u = vec / np.sqrt(dr)
            out.channels[l] -= np.dot(u, out.channels[l]) * dr * u
    return out


def project_continuum(wp: ChannelWavepacket, hamiltonian: Hamiltonian, energies,
                      pulses: Sequence[LaserPulse] | None = None, l_values: Iterable[int] | None = None,
                      r_core: float | None = None, r_outer: float | None = None,
                      strip_bound: int = 8) -> PartialWaveAmplitudes:
    """Projection on energy-normalized continuum waves outside the ion core.

    a_l(E) = exp(i(E T + delta_l - l pi/2)) * integral over [r_core, r_outer]
    of R_El(r) b_l(r, T) dr, with T = wp.time. Bound components are removed
    first so that the partial radial range does not leak Rydberg population
    into the spectrum.
    """
    if pulses is not None and pulses:
        off = pulse_window(pulses)[1]
        if wp.time < off:
            raise SequencingError(f"wavepacket at t={wp.time:.1f} is still inside the pulse (off at {off:.1f})")
    grid = wp.grid
    r_core = grid.r_core if r_core is None else r_core
    r_outer = grid.r_absorb if r_outer is None else r_outer
    l_values = tuple(range(wp.l_max + 1)) if l_values is None else tuple(l_values)
    energies = np.asarray(energies, dtype=float)
    src = remove_bound(wp, hamiltonian, strip_bound, l_values) if strip_bound else wp
    i0, i1 = grid.index(r_core), grid.index(r_outer) + 1
    coeffs = np.zeros((len(l_values), len(energies)), dtype=complex)
    for i, l in enumerate(l_values):
        bl = src.channels[l, i0:i1]
        for j, E in enumerate(energies):
            c = solve_continuum(hamiltonian.params, grid, l, float(np.sqrt(2 * E)), method="fd")
            ov = np.dot(c.radial[i0:i1], bl) * grid.dr
            coeffs[i, j] = np.exp(1j * (E * wp.time + c.phase - 0.5 * l * np.pi)) * ov
    return PartialWaveAmplitudes(energies, l_values, coeffs, t_obs=wp.time,
                                 meta={"r_core": r_core, "r_outer": r_outer})
