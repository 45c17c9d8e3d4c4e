"""Two-color laser pulses with cos^2 envelopes, linearly polarized along z.

A pulse is E(t) = F0 * Omega(t + delta_t) * cos(omega*(t + delta_t) + phase)
with Omega(s) = cos^2(pi s / T) on |s| <= T/2 and zero elsewhere. Time
integrals of the field and of envelope-weighted exponentials are done in
closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

LABELS = ("IR", "BL", "CONTROL")

# Peak amplitudes (a.u.) used in the reference simulations; they are
# vector-potential amplitudes, see LaserPulse.from_vector_potential.
REFERENCE_A0 = {"BL": 0.05, "IR": 0.007}


@dataclass(frozen=True)
class LaserPulse:
    """Single-color pulse.

    ``amplitude`` is the peak electric field. ``duration`` overrides the
    default T = 2 pi n_cycles / omega, which is how a common pulse length
    is imposed on pulses of different color.
    """

    omega: float
    amplitude: float
    n_cycles: float
    delta_t: float = 0.0
    phase: float = 0.0
    label: str = "IR"
    duration: float | None = None

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError("omega must be positive")
        if self.amplitude < 0:
            raise DomainError("amplitude must be non-negative")
        if self.n_cycles < 1:
            raise DomainError("n_cycles must be >= 1")
        if self.duration is not None and not self.duration > 0:
            raise DomainError("duration must be positive")
        if self.label not in LABELS:
            raise DomainError(f"label must be one of {LABELS}")

    @classmethod
    def from_vector_potential(cls, omega: float, a0: float, n_cycles: float, **kw) -> "LaserPulse":
        """Pulse whose vector potential peaks at a0, i.e. field F0 = omega*a0."""
        return cls(omega=omega, amplitude=omega * a0, n_cycles=n_cycles, **kw)

    @property
    def T(self) -> float:
        return self.duration if self.duration is not None else 2 * np.pi * self.n_cycles / self.omega

    @property
    def t_on(self) -> float:
        return -0.5 * self.T - self.delta_t

    @property
    def t_off(self) -> float:
        return 0.5 * self.T - self.delta_t

    @property
    def support(self) -> tuple[float, float]:
        return self.t_on, self.t_off

    def with_(self, **kw) -> "LaserPulse":
        return replace(self, **kw)


def envelope(pulse: LaserPulse, t):
    s = np.asarray(t, dtype=float) + pulse.delta_t
    inside = np.abs(s) <= 0.5 * pulse.T
    return np.where(inside, np.cos(np.pi * s / pulse.T) ** 2, 0.0)


def field(pulse: LaserPulse, t):
    s = np.asarray(t, dtype=float) + pulse.delta_t
    return pulse.amplitude * envelope(pulse, t) * np.cos(pulse.omega * s + pulse.phase)


def total_field(pulses: Iterable[LaserPulse], t):
    return sum((field(p, t) for p in pulses), np.zeros_like(np.asarray(t, dtype=float)))


def _exp_integral(nu, a, b):
    """Integral of exp(i nu s) over [a, b]; smooth through nu = 0."""
    w = b - a
    return w * np.exp(0.5j * nu * (a + b)) * np.sinc(nu * w / (2 * np.pi))


def envelope_transform(T: float, y, t, delta: float = 0.0):
    """Integral of Omega(t' + delta) exp(i y t') dt' from the pulse start to t.

    Vectorized over ``y`` and ``t``. Written as a sum of three plain
    exponentials, which the sinc form integrates without any division.
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    a = -0.5 * T
    b = np.clip(t + delta, a, 0.5 * T)
    k = 2 * np.pi / T
    s = (0.5 * _exp_integral(y, a, b) + 0.25 * _exp_integral(y + k, a, b)
         + 0.25 * _exp_integral(y - k, a, b))
    return np.exp(-1j * y * delta) * s


def field_integral(pulse: LaserPulse, t0, t1):
    """Exact integral of field(pulse, t) over [t0, t1]."""
    def cumulative(t):
        # integral from pulse start: Re[e^{i(omega*delta+phase)} * transform]
        z = envelope_transform(pulse.T, pulse.omega, t, pulse.delta_t)
        return np.real(np.exp(1j * (pulse.omega * pulse.delta_t + pulse.phase)) * z)
    return pulse.amplitude * (cumulative(t1) - cumulative(t0))


def vector_potential(pulses: Sequence[LaserPulse] | LaserPulse, t):
    """A(t) = -integral of E from -infinity to t (so that E = -dA/dt)."""
    if isinstance(pulses, LaserPulse):
        pulses = [pulses]
    t = np.asarray(t, dtype=float)
    return -sum((field_integral(p, p.t_on, t) for p in pulses), np.zeros_like(t))


def resonant_omega(e_lower: float, e_upper: float, detuning: float = 0.0) -> float:
    """Carrier frequency for the transition plus an additive detuning (a.u.)."""
    w = e_upper - e_lower + detuning
    if w <= 0:
        raise DomainError("resonant frequency must be positive")
    return w


def pulse_window(pulses: Sequence[LaserPulse]) -> tuple[float, float]:
    return min(p.t_on for p in pulses), max(p.t_off for p in pulses)


def shared_duration(pulses: Sequence[LaserPulse], reference: str = "IR") -> list[LaserPulse]:
    """Give every pulse the duration of the pulse labelled ``reference``."""
    ref = [p for p in pulses if p.label == reference]
    if not ref:
        raise DomainError(f"no {reference} pulse to take the duration from")
    T = ref[0].T
    return [replace(p, duration=T) for p in pulses]
