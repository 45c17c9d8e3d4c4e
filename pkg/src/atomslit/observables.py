"""Photoelectron observables built from partial-wave amplitudes a_l(E)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .angular import ylm0
from .errors import DomainError, MeshRefinementError, UndefinedPhaseError
from .units import AU_TIME_S


@dataclass(frozen=True, eq=False)
class PartialWaveAmplitudes:
    """Complex a_l on an energy mesh.

    ``coeffs`` has shape (n_l, n_energy) with rows matching ``l_values``.
    The coefficients already contain the factor exp(i(E T_obs + delta_l - l pi/2)).
    """

    energies: np.ndarray
    l_values: tuple
    coeffs: np.ndarray
    t_obs: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coeffs.shape != (len(self.l_values), len(self.energies)):
            raise DomainError("coeffs must have shape (n_l, n_energy)")

    def channel(self, l: int) -> np.ndarray:
        return self.coeffs[self.l_values.index(l)]

    def sigma(self, l: int | None = None) -> np.ndarray:
        """|a_l(E)|^2, or the sum over l when l is None."""
        if l is None:
            return np.sum(np.abs(self.coeffs) ** 2, axis=0)
        return np.abs(self.channel(l)) ** 2

    def total_probability(self) -> float:
        return float(np.trapezoid(self.sigma(), self.energies))

    def index(self, energy: float) -> int:
        return int(np.argmin(np.abs(self.energies - energy)))

    def at(self, energy: float) -> np.ndarray:
        return self.coeffs[:, self.index(energy)]

    def peak(self, l: int | None = None) -> tuple[float, float]:
        """(energy, value) of the maximum of sigma."""
        s = self.sigma(l)
        i = int(np.argmax(s))
        return float(self.energies[i]), float(s[i])

    def fwhm(self, l: int | None = None) -> float:
        """Full width at half maximum of sigma around its peak (linear interpolation)."""
        s = self.sigma(l)
        E = self.energies
        i = int(np.argmax(s))
        half = 0.5 * s[i]
        j = i
        while j > 0 and s[j] > half:
            j -= 1
        k = i
        while k < len(s) - 1 and s[k] > half:
            k += 1
        if s[j] > half or s[k] > half:
            return float("nan")
        left = E[j] + (half - s[j]) * (E[j + 1] - E[j]) / (s[j + 1] - s[j])
        right = E[k - 1] + (half - s[k - 1]) * (E[k] - E[k - 1]) / (s[k] - s[k - 1])
        return float(right - left)


def angular_amplitude(a: np.ndarray, l_values, theta) -> np.ndarray:
    """sum_l a_l Y_l0(theta).

    ``a`` is indexed by l first; extra trailing axes (e.g. energy) broadcast
    against a scalar theta.
    """
    out = 0j
    for al, l in zip(a, l_values):
        out = out + al * ylm0(l, theta)
    return np.asarray(out, dtype=complex)


def dcs(amps: PartialWaveAmplitudes, energy: float, theta) -> np.ndarray:
    """Angular distribution |sum_l a_l Y_l0|^2 at the mesh point nearest ``energy``."""
    return np.abs(angular_amplitude(amps.at(energy), amps.l_values, theta)) ** 2


def quantum_phase(amps: PartialWaveAmplitudes, energy: float, theta) -> np.ndarray:
    """arg sum_l a_l Y_l0(theta)."""
    a = amps.at(energy)
    if not np.any(np.abs(a) > 0):
        raise UndefinedPhaseError(f"all amplitudes vanish at E={energy}")
    return np.angle(angular_amplitude(a, amps.l_values, theta))


def phase_curve(amps: PartialWaveAmplitudes, theta: float, max_jump: float = 0.9 * np.pi) -> np.ndarray:
    """Unwrapped phase versus energy at fixed angle.

    A step close to pi between neighbours cannot be unwrapped reliably, so
    anything above ``max_jump`` is refused.
    """
    z = angular_amplitude(amps.coeffs, amps.l_values, theta)
    out = np.unwrap(np.angle(z))
    jumps = np.abs(np.diff(out))
    if np.any(jumps > max_jump):
        raise MeshRefinementError("phase changes by about pi between mesh points; refine the energy mesh")
    return out


def averaged_phase(amps: PartialWaveAmplitudes, theta) -> np.ndarray:
    """Phase at each angle averaged over energy with weight sigma(E)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    w = amps.sigma()
    if w.sum() <= 0:
        raise UndefinedPhaseError("no ionization signal")
    w = w / w.sum()
    out = np.empty(theta.shape)
    for j, th in enumerate(theta):
        z = angular_amplitude(amps.coeffs, amps.l_values, th)
        # average relative to the circular mean so the branch cut stays away
        ref = np.angle(np.sum(w * z / np.maximum(np.abs(z), 1e-300)))
        out[j] = ref + np.sum(w * np.angle(z * np.exp(-1j * ref)))
    return out


def wigner_delay(amps: PartialWaveAmplitudes, theta: float, energy: float | None = None):
    """Energy derivative of the quantum phase by centred differences.

    Returns (tau_au, tau_seconds) at the interior mesh point nearest
    ``energy``, or arrays over all interior points when energy is None.
    """
    if len(amps.energies) < 3:
        raise MeshRefinementError("need at least three energy points")
    phi = phase_curve(amps, theta)
    E = amps.energies
    tau = (phi[2:] - phi[:-2]) / (E[2:] - E[:-2])
    if energy is None:
        return tau, tau * AU_TIME_S
    i = int(np.clip(amps.index(energy), 1, len(E) - 2))
    return float(tau[i - 1]), float(tau[i - 1] * AU_TIME_S)
