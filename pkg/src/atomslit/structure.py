"""Bound and continuum eigenfunctions of the model potential, and dipoles.

Radial functions are stored as reduced functions u(r) = r R(r) on the
grid of a :class:`~atomslit.grid_potential.RadialGrid`. Bound states are
normalized to sum(u^2)*dr = 1, continuum states to delta(E - E').

Sign conventions: every radial function is positive in its asymptotic
tail (bound states) or has a positive amplitude relative to the regular
Coulomb function (continuum). The dipole operator carries the electron
charge, d = -r.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Union

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import loggamma

from . import _kernels
from .angular import dipole_angular
from .errors import DomainError, MatchingError, ResolutionError
from .grid_potential import (ModelPotentialParams, RadialGrid, corrected_multipole,
                             potential)

log = logging.getLogger(__name__)

SPECTROSCOPIC = "spdfghiklmnoqrtuv"


@dataclass(frozen=True, eq=False)
class BoundState:
    n: int
    l: int
    energy: float
    radial: np.ndarray = field(repr=False)
    dr: float = field(repr=False, default=0.0)

    @property
    def label(self) -> str:
        return f"{self.n}{SPECTROSCOPIC[self.l]}"


@dataclass(frozen=True, eq=False)
class ContinuumState:
    k: float
    l: int
    energy: float
    phase: float
    coulomb_phase: float
    eta: float
    radial: np.ndarray = field(repr=False)
    dr: float = field(repr=False, default=0.0)

    @property
    def label(self) -> str:
        return f"E={self.energy:.6g}{SPECTROSCOPIC[self.l]}"


AtomicState = Union[BoundState, ContinuumState]


@dataclass(frozen=True)
class ReducedDipole:
    """Radial dipole element <bra|d|ket> (a.u.).

    When the selection rule |l_bra - l_ket| = 1 fails, ``value`` is 0.0
    and ``reason`` says why; check ``allowed`` to tell the two apart.
    """

    bra: str
    ket: str
    value: float
    reason: str = ""

    @property
    def allowed(self) -> bool:
        return not self.reason

    def __float__(self) -> float:
        return float(self.value)


def _hamiltonian_diagonal(params: ModelPotentialParams, grid: RadialGrid, l: int) -> np.ndarray:
    r = grid.r
    return 1.0 / grid.dr**2 + l * (l + 1) / (2 * r**2) + potential(params, l, r)


def radial_hamiltonian(params: ModelPotentialParams, grid: RadialGrid, l: int):
    """(diagonal, off-diagonal) of the 3-point field-free radial Hamiltonian."""
    return _hamiltonian_diagonal(params, grid, l), -0.5 / grid.dr**2


def count_nodes(u: np.ndarray, rel: float = 1e-7) -> int:
    big = np.abs(u) > rel * np.abs(u).max()
    s = np.sign(u[big])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _fix_sign(u: np.ndarray) -> np.ndarray:
    big = np.nonzero(np.abs(u) > 1e-3 * np.abs(u).max())[0]
    return u if u[big[-1]] > 0 else -u


def solve_bound(params: ModelPotentialParams, grid: RadialGrid, l: int, n_states: int) -> list[BoundState]:
    """Lowest ``n_states`` valence eigenstates for angular momentum l.

    Eigenstates below ``params.n_min(l)`` stand in for the closed core and
    are skipped; the returned n follow node count + l + 1.
    """
    if n_states < 1:
        raise DomainError("n_states must be >= 1")
    skip = params.n_min(l) - l - 1
    diag, off = radial_hamiltonian(params, grid, l)
    lo, hi = skip, skip + n_states - 1
    w, v = eigh_tridiagonal(diag, np.full(grid.n_points - 1, off), select="i",
                            select_range=(lo, hi))
    states = []
    for j, (e, vec) in enumerate(zip(w, v.T)):
        n = skip + j + l + 1
        if e >= 0:
            suggested = max(2 * grid.r_max, 8.0 * n**2)
            raise ResolutionError(
                f"state n={n}, l={l} is not bound on this grid (E={e:.3g}); "
                f"try r_max >= {suggested:.0f}")
        u = _fix_sign(vec / np.sqrt(grid.dr))
        nodes = count_nodes(u)
        if nodes != n - l - 1:
            raise ResolutionError(f"n={n}, l={l}: found {nodes} nodes, expected {n - l - 1}")
        states.append(BoundState(n=n, l=l, energy=float(e), radial=u, dr=grid.dr))
    return states


def eigen_residual(params, grid, state: BoundState) -> float:
    diag, off = radial_hamiltonian(params, grid, state.l)
    u = state.radial
    hu = diag * u
    hu[1:] += off * u[:-1]
    hu[:-1] += off * u[1:]
    return float(np.linalg.norm(hu - state.energy * u) / np.linalg.norm(u))


def coulomb_phase(l: int, k):
    """sigma_l(k) = arg Gamma(1 + l - i/k), continuous branch of log-gamma."""
    k = np.asarray(k, dtype=float)
    return np.imag(loggamma(1 + l - 1j / k))


@lru_cache(maxsize=65536)
def coulomb_fg(l: int, k: float, r: float) -> tuple[float, float]:
    """Regular and irregular Coulomb functions F_l, G_l(-1/k, k r)."""
    eta, rho = -1.0 / k, k * r
    return float(mpmath.coulombf(l, eta, rho)), float(mpmath.coulombg(l, eta, rho))


def default_match_radius(params: ModelPotentialParams, l: int) -> float:
    return max(50.0, 10.0 * params.r_c(l))


def solve_continuum(params: ModelPotentialParams, grid: RadialGrid, l: int, k: float,
                    r_match: float | None = None, method: str = "numerov") -> ContinuumState:
    """Energy-normalized continuum wave at E = k^2/2.

    ``method`` is "numerov" (4th order) or "fd", which follows the recursion
    of the 3-point Hamiltonian and is therefore orthogonal to the bound
    states of :func:`solve_bound` to rounding error.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    if r_match is None:
        r_match = default_match_radius(params, l)
    if r_match < 10.0 * params.r_c(l):
        raise MatchingError(f"r_match={r_match} lies inside the short-range region "
                            f"(10 r_c = {10 * params.r_c(l):.3g})")
    energy = 0.5 * k * k
    r = grid.r
    g = 2.0 * (potential(params, l, r) + l * (l + 1) / (2 * r**2) - energy)
    if method == "numerov":
        u = _kernels.numerov_outward(g, grid.dr, l, float(params.z))
    elif method == "fd":
        u = _kernels.fd_outward(g, grid.dr, l)
    else:
        raise DomainError(f"unknown integration method {method!r}")

    # two matching points about a quarter of a local wavelength apart
    k_loc = np.sqrt(k * k + 2.0 / r_match)
    i1 = grid.index(r_match)
    i2 = i1 + max(1, int(round(0.5 * np.pi / k_loc / grid.dr)))
    if i2 >= grid.n_points:
        raise MatchingError(f"grid (r_max={grid.r_max}) too short to match at r={r_match}")
    r1, r2 = r[i1], r[i2]
    F1, G1 = coulomb_fg(l, float(k), float(r1))
    F2, G2 = coulomb_fg(l, float(k), float(r2))
    W = F1 * G2 - F2 * G1
    a = (u[i1] * G2 - u[i2] * G1) / W
    b = (u[i2] * F1 - u[i1] * F2) / W
    eta = float(np.arctan2(b, a))
    amp = float(np.hypot(a, b))
    u = u * (np.sqrt(2.0 / (np.pi * k)) / amp)
    sigma = float(coulomb_phase(l, k))
    return ContinuumState(k=float(k), l=l, energy=energy, phase=sigma + eta,
                          coulomb_phase=sigma, eta=eta, radial=u, dr=grid.dr)


def radial_integral(bra: AtomicState, ket: AtomicState, grid: RadialGrid, weight=None) -> float:
    f = bra.radial * ket.radial
    if weight is not None:
        f = f * weight
    return float(np.sum(f) * grid.dr)


def _state_label(s: AtomicState) -> str:
    return s.label


def reduced_dipole(bra: AtomicState, ket: AtomicState, grid: RadialGrid,
                   params: ModelPotentialParams | None = None, corrected: bool = True) -> ReducedDipole:
    """Radial element <bra| -r * f(r) |ket>, f the core-polarization factor.

    The continuum member, if any, is integrated over the full grid.
    """
    if abs(bra.l - ket.l) != 1:
        return ReducedDipole(_state_label(bra), _state_label(ket), 0.0,
                             reason=f"dipole selection rule: l={bra.l} -> l={ket.l}")
    if bra.radial.shape != ket.radial.shape:
        raise DomainError("states live on different grids")
    w = -grid.r
    if corrected:
        if params is None:
            raise DomainError("corrected dipole needs the model parameters")
        w = w * corrected_multipole(params, 1, grid.r)
    return ReducedDipole(_state_label(bra), _state_label(ket), radial_integral(bra, ket, grid, w))


def dipole_z(bra: AtomicState, ket: AtomicState, grid: RadialGrid,
             params: ModelPotentialParams | None = None, corrected: bool = True) -> float:
    """Full m = 0 matrix element <bra|d_z|ket> (radial times angular)."""
    d = reduced_dipole(bra, ket, grid, params, corrected)
    return d.value * dipole_angular(bra.l, ket.l)


class AtomStructure:
    """Caching handle around one (params, grid) pair.

    Bound states are diagonalized once per l; continuum waves and dipoles
    are memoized. An optional ``cache_dir`` persists bound spectra as npz
    files keyed by the grid and parameter hashes.
    """

    def __init__(self, params: ModelPotentialParams, grid: RadialGrid, *,
                 corrected: bool = True, cache_dir: str | Path | None = None,
                 continuum_method: str = "numerov", n_per_l: int = 6):
        self.params = params
        self.grid = grid
        self.corrected = corrected
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.continuum_method = continuum_method
        self.n_per_l = n_per_l
        self._bound: dict[int, list[BoundState]] = {}
        self._cont: dict[tuple, ContinuumState] = {}

    def _cache_file(self, l: int) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"bound_{self.params.key()}_{self.grid.key()}_l{l}_{self.n_per_l}.npz"

    def bound_states(self, l: int) -> list[BoundState]:
        if l not in self._bound:
            path = self._cache_file(l)
            if path is not None and path.exists():
                data = np.load(path)
                self._bound[l] = [BoundState(int(n), l, float(e), u, self.grid.dr)
                                  for n, e, u in zip(data["n"], data["energy"], data["radial"])]
            else:
                states = solve_bound(self.params, self.grid, l, self.n_per_l)
                self._bound[l] = states
                if path is not None:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    tmp = path.with_suffix(".tmp.npz")
                    np.savez(tmp, n=[s.n for s in states], energy=[s.energy for s in states],
                             radial=np.array([s.radial for s in states]))
                    tmp.replace(path)
        return self._bound[l]

    def state(self, n: int, l: int) -> BoundState:
        for s in self.bound_states(l):
            if s.n == n:
                return s
        lo = self.params.n_min(l)
        if n < lo:
            raise ResolutionError(f"{n}{SPECTROSCOPIC[l]} lies in the frozen core")
        # need more states
        self.n_per_l = max(self.n_per_l, n - lo + 1)
        self._bound.pop(l)
        return self.state(n, l)

    def __getitem__(self, label: str) -> BoundState:
        n = int(label[:-1])
        return self.state(n, SPECTROSCOPIC.index(label[-1]))

    def continuum(self, l: int, k: float, method: str | None = None) -> ContinuumState:
        method = method or self.continuum_method
        key = (l, float(k), method)
        if key not in self._cont:
            self._cont[key] = solve_continuum(self.params, self.grid, l, k, method=method)
        return self._cont[key]

    def continuum_energy(self, l: int, energy: float, method: str | None = None) -> ContinuumState:
        if energy <= 0:
            raise DomainError("continuum energy must be positive")
        return self.continuum(l, float(np.sqrt(2 * energy)), method)

    def dipole(self, bra: AtomicState, ket: AtomicState) -> ReducedDipole:
        return reduced_dipole(bra, ket, self.grid, self.params, self.corrected)

    def dipole_z(self, bra: AtomicState, ket: AtomicState) -> float:
        return dipole_z(bra, ket, self.grid, self.params, self.corrected)

    def bound_table(self, l_values: Iterable[int] = (0, 1, 2)) -> list[BoundState]:
        return [s for l in l_values for s in self.bound_states(l)]
